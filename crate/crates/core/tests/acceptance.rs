//! Acceptance suite: one test per criterion, each printing a PASS line
//! with its measured numbers (run with `--nocapture` to see them).
//!
//! The round-trip grid is synthesized once and shared by the criteria
//! that consume it (2, 3, 8, 9).

use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::ops::{CompleteRound, Pow};
use rug::Float;

use chainspec_core::chain::ChainSystem;
use chainspec_core::constants::constants;
use chainspec_core::forward::{spectrum, SpectrumReport};
use chainspec_core::oracle::{charpoly_roots, dense_charpoly};
use chainspec_core::plan::{build_plan, feasible, MultiplicityPlan, Strategy, TargetSpectrum};
use chainspec_core::precision::PrecisionConfig;
use chainspec_core::synthesis::{
    reconstruction_residuals, synthesize, Mode, StrategyTag, SynthesisResult,
};
use chainspec_core::verify::{five_dof_bound, necessity_fuzz};

const GRID_SEED: u64 = 0x2027_0809;

fn flt(prec: u32, v: f64) -> Float {
    Float::with_val(prec, v)
}

/// All multiplicity vectors summing to n (compositions, via gap masks).
fn compositions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << (n - 1)) {
        let mut parts = Vec::new();
        let mut run = 1usize;
        for bit in 0..n - 1 {
            if mask & (1 << bit) != 0 {
                parts.push(run);
                run = 1;
            } else {
                run += 1;
            }
        }
        parts.push(run);
        out.push(parts);
    }
    out
}

fn gate_holds(mults: &[usize]) -> bool {
    mults.iter().enumerate().all(|(i, &t)| t <= i + 1)
}

/// Sorted log-uniform draw over [0.1, 10] with a relative gap floor.
fn draw_lambdas(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        let mut ls: Vec<f64> = (0..m)
            .map(|_| (rng.gen_range((0.1f64).ln()..(10f64).ln())).exp())
            .collect();
        ls.sort_by(f64::total_cmp);
        let ok = ls.windows(2).all(|w| w[1] - w[0] > 1e-2 * w[1]);
        if ok {
            return ls;
        }
    }
}

struct GridCase {
    spec: TargetSpectrum,
    plan: MultiplicityPlan,
    result: SynthesisResult,
    analysis: SpectrumReport,
}

fn grid() -> &'static (Vec<GridCase>, f64) {
    static GRID: OnceLock<(Vec<GridCase>, f64)> = OnceLock::new();
    GRID.get_or_init(|| {
        let started = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(GRID_SEED);
        let cfg = PrecisionConfig::new(256, 240, 2, 2).unwrap();
        let mut cases = Vec::new();
        for n in 2..=10usize {
            let feasible_comps: Vec<Vec<usize>> = compositions(n)
                .into_iter()
                .filter(|c| gate_holds(c))
                .collect();
            for _ in 0..6 {
                let mults = feasible_comps[rng.gen_range(0..feasible_comps.len())].clone();
                let m = mults.len();
                let lambdas = draw_lambdas(&mut rng, m);
                let pinned: Vec<Float> = (0..m)
                    .map(|_| flt(256, rng.gen_range(0.25f64..4.0)))
                    .collect();
                let spec = TargetSpectrum::from_f64(&lambdas, &mults, 256).unwrap();
                let plan = build_plan(&spec, Some(pinned)).unwrap();
                let result = synthesize(&spec, &plan, Mode::Adaptive, &cfg)
                    .unwrap_or_else(|e| panic!("synthesis failed for n={n} t={mults:?}: {e}"));
                let tol = flt(256, 1e-12);
                let analysis = spectrum(&result.chain, &cfg, &tol).unwrap();
                cases.push(GridCase {
                    spec,
                    plan,
                    result,
                    analysis,
                });
            }
        }
        (cases, started.elapsed().as_secs_f64())
    })
}

#[test]
fn criterion_1_feasibility_gate_exhaustive() {
    let started = Instant::now();
    let mut checked = 0usize;
    for n in 1..=8usize {
        for mults in compositions(n) {
            let m = mults.len();
            let lambdas: Vec<f64> = (1..=m).map(|i| i as f64).collect();
            let spec = TargetSpectrum::from_f64(&lambdas, &mults, 64).unwrap();
            assert_eq!(
                feasible(&spec),
                gate_holds(&mults),
                "gate mismatch for {mults:?}"
            );
            checked += 1;
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert_eq!(checked, 255);
    assert!(elapsed < 1.0, "took {elapsed:.3}s");
    println!("ACCEPTANCE 1: PASS - feasibility gate exact on all {checked} patterns (n <= 8) in {elapsed:.3}s");
}

#[test]
fn criterion_2_round_trip_synthesis() {
    let (cases, build_secs) = grid();
    assert!(cases.len() >= 50, "grid has {} specs", cases.len());
    let mut worst_rel = 0f64;
    for case in cases {
        assert!(
            case.result.precision_used <= 1024,
            "used {} bits",
            case.result.precision_used
        );
        assert_eq!(
            case.analysis.multiplicities,
            case.spec.mults(),
            "multiplicity mismatch for mults {:?}",
            case.spec.mults()
        );
        for (found, target) in case.analysis.eigenvalues.iter().zip(case.spec.lambdas()) {
            let rel = ((found - target).complete(256) / target)
                .abs()
                .to_f64();
            worst_rel = worst_rel.max(rel);
            assert!(rel <= 1e-9, "eigenvalue error {rel:.3e}");
        }
    }
    assert!(*build_secs < 60.0, "grid took {build_secs:.1}s");
    println!(
        "ACCEPTANCE 2: PASS - {} round trips, worst eigenvalue error {:.3e}, grid built in {:.1}s",
        cases.len(),
        worst_rel,
        build_secs
    );
}

#[test]
fn criterion_3_mass_pinning() {
    let (cases, _) = grid();
    for case in cases {
        let plan = &case.plan;
        assert_eq!(plan.pinned_indices().len(), case.spec.m());
        assert_eq!(plan.pinned_indices()[0], 1);
        for (idx, mass) in plan.pinned_indices().iter().zip(plan.pinned_masses()) {
            assert_eq!(
                case.result.chain.mass(*idx),
                mass,
                "pinned mass at index {idx} not bit-exact"
            );
        }
    }
    println!(
        "ACCEPTANCE 3: PASS - pinned masses bit-exact at the plan indices in all {} cases",
        cases.len()
    );
}

#[test]
fn criterion_4_faithful_constants_mode() {
    let specs: Vec<(Vec<f64>, Vec<usize>)> = vec![
        (vec![1.0, 2.0], vec![1, 1]),
        (vec![1.0, 2.0], vec![1, 2]),
        (vec![1.0, 2.0, 3.0], vec![1, 1, 2]),
    ];
    let cfg = PrecisionConfig::new(256, 240, 2, 2).unwrap();
    for (lambdas, mults) in specs {
        let started = Instant::now();
        let spec = TargetSpectrum::from_f64(&lambdas, &mults, 256).unwrap();
        let plan = build_plan(&spec, None).unwrap();
        let n = spec.n();
        let c = constants(&spec, &plan, 320).unwrap();
        let fails = c.inequality_failures(n, 320);
        assert!(fails.is_empty(), "inequalities failed: {fails:?}");

        let result = synthesize(&spec, &plan, Mode::Faithful, &cfg)
            .unwrap_or_else(|e| panic!("faithful synthesis failed for t={mults:?}: {e}"));

        // Re-check the per-step containment from the trace; the window
        // endpoints only exist at the run's working precision (at 320
        // bits, lambda + rho rounds back to lambda).
        let wp = result.precision_used;
        let c1n = Float::with_val(wp, &c.c1).pow(n as u32);
        let one = Float::with_val(wp, 1);
        for rec in &result.trace {
            for (i, beta) in rec.g_roots.iter().enumerate() {
                let lam = &spec.lambdas()[i];
                let lo = lam + (&c1n * &c.rho[i]).complete(wp);
                let hi = lam
                    + ((&one + &c.c2[i]).complete(wp).pow(n as u32)
                        * Float::with_val(wp, &c.rho[i]));
                assert!(
                    *beta > lo && *beta < hi,
                    "containment broke at level {} root {}",
                    rec.j,
                    i + 1
                );
            }
        }

        // Round trip at standard precision.
        let tol = flt(256, 1e-12);
        let analysis = spectrum(&result.chain, &cfg, &tol).unwrap();
        assert_eq!(analysis.multiplicities, spec.mults());
        let elapsed = started.elapsed().as_secs_f64();
        assert!(elapsed < 300.0, "faithful run took {elapsed:.1}s");
        println!(
            "ACCEPTANCE 4: PASS - faithful constants + containment for t={mults:?} ({} bits, {elapsed:.1}s)",
            result.precision_used
        );
    }
}

#[test]
fn criterion_5_forward_solver_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(GRID_SEED ^ 5);
    let cfg = PrecisionConfig::with_bits(256);
    let tol = flt(256, 1e-12);
    let mut worst_rel = 0f64;
    for _ in 0..200 {
        let n = rng.gen_range(1..=6usize);
        let draw = |rng: &mut ChaCha8Rng| (rng.gen_range((0.01f64).ln()..(100f64).ln())).exp();
        let masses: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let stiff: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let inert: Vec<f64> = (0..n)
            .map(|_| if rng.gen_bool(0.5) { 0.0 } else { draw(&mut rng) })
            .collect();
        let chain = ChainSystem::from_f64(&masses, &stiff, &inert, 256).unwrap();
        let rep = spectrum(&chain, &cfg, &tol).unwrap();
        let coeffs = dense_charpoly(&chain).unwrap();
        let oracle = charpoly_roots(&coeffs, 80, 256).unwrap();
        assert_eq!(
            rep.eigenvalues.len(),
            oracle.len(),
            "cluster count disagrees"
        );
        for ((e, m), (x, xm)) in rep
            .eigenvalues
            .iter()
            .zip(&rep.multiplicities)
            .zip(oracle.iter())
        {
            assert_eq!(m, xm, "multiplicity disagrees");
            let rel = ((e - x).complete(256) / x).abs().to_f64();
            worst_rel = worst_rel.max(rel);
            assert!(rel <= 1e-10, "root mismatch {rel:.3e}");
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "took {elapsed:.1}s");
    println!(
        "ACCEPTANCE 5: PASS - 200 rational chains match the dense oracle, worst {:.3e}, {elapsed:.1}s",
        worst_rel
    );
}

#[test]
fn criterion_6_necessity_fuzz() {
    let started = Instant::now();
    let cfg = PrecisionConfig::with_bits(96);
    let mut with_multiples = 0usize;
    for seed in [101u64, 202, 303] {
        let summary = necessity_fuzz(10_000, 6, seed, &cfg).unwrap();
        assert_eq!(
            summary.violations, 0,
            "gate violations under seed {seed}: {:?}",
            summary.counterexamples
        );
        with_multiples += summary.trials_with_multiples;
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "took {elapsed:.1}s");
    println!(
        "ACCEPTANCE 6: PASS - 30000 random chains, zero gate violations ({with_multiples} clustered trials), {elapsed:.1}s"
    );
}

#[test]
fn criterion_7_five_dof_mass_ratio_bound() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(GRID_SEED ^ 7);
    let cfg = PrecisionConfig::new(256, 240, 2, 2).unwrap();
    let mut min_margin = f64::INFINITY;
    for _ in 0..100 {
        let lambdas = draw_lambdas(&mut rng, 3);
        let pinned: Vec<Float> = (0..3)
            .map(|_| flt(256, rng.gen_range(0.25f64..4.0)))
            .collect();
        let spec = TargetSpectrum::from_f64(&lambdas, &[1, 1, 3], 256).unwrap();
        let plan = build_plan(&spec, Some(pinned)).unwrap();
        let result = synthesize(&spec, &plan, Mode::Adaptive, &cfg).unwrap();
        let lam: Vec<Float> = spec.lambdas().to_vec();
        let (lhs, rhs, holds) = five_dof_bound(&result.chain, &lam, 256).unwrap();
        assert!(holds, "bound failed: lhs={lhs} rhs={rhs}");
        let margin = ((lhs - &rhs) / &rhs).to_f64();
        min_margin = min_margin.min(margin);
    }
    let elapsed = started.elapsed().as_secs_f64();
    println!(
        "ACCEPTANCE 7: PASS - bound holds strictly on 100 synthesized five-DOF chains, min margin {min_margin:.3e}, {elapsed:.1}s"
    );
}

#[test]
fn criterion_8_gcd_ledger() {
    let (cases, _) = grid();
    for case in cases {
        let n = case.spec.n();
        let m = case.spec.m();
        let b_steps: Vec<usize> = case
            .result
            .trace
            .iter()
            .filter(|r| r.strategy == StrategyTag::B)
            .map(|r| match case.plan.strategy_for(r.j) {
                Strategy::B { lambda_index, .. } => lambda_index,
                Strategy::A => unreachable!("trace and plan disagree"),
            })
            .collect();
        assert_eq!(b_steps.len(), n - m, "ledger size");
        let mut got = b_steps;
        got.sort_unstable();
        assert_eq!(got, case.plan.scheduled_multiset(), "ledger multiset");
    }
    println!(
        "ACCEPTANCE 8: PASS - divisor ledger matches the schedule multiset in all {} cases",
        cases.len()
    );
}

#[test]
fn criterion_9_reconstruction_identity() {
    let (cases, _) = grid();
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    for (i, case) in cases.iter().enumerate() {
        let bits = case.result.precision_used;
        let residuals = reconstruction_residuals(&case.result, 5, GRID_SEED ^ i as u64, bits);
        let bound = Float::with_val(bits, 1) >> (bits / 2);
        for r in &residuals {
            assert!(
                r < &bound,
                "reconstruction residual {r} above 2^-{}",
                bits / 2
            );
            worst = worst.max(r.to_f64());
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    println!(
        "ACCEPTANCE 9: PASS - reconstruction identity within 2^-(bits/2) at 5 points/level, worst {worst:.3e}, {elapsed:.1}s"
    );
}

/// Not a numbered criterion: the verifier must report all-green for
/// every synthesized chain in the grid.
#[test]
fn verifier_all_green_across_grid() {
    let (cases, _) = grid();
    let started = Instant::now();
    let cfg = PrecisionConfig::new(256, 240, 2, 2).unwrap();
    for case in cases {
        let report = chainspec_core::verify::verify(&case.result.chain, &case.spec, &case.plan, &cfg)
            .expect("verification runs");
        assert!(
            report.all_green(),
            "verification not green for mults {:?}: jumps={} spectrum={} gcd={} pinned={} divis={}",
            case.spec.mults(),
            report.multiplicity_jumps_ok,
            report.spectrum_match,
            report.gcd_degree_ok,
            report.pinned_masses_ok,
            report.divisibility_ok,
        );
    }
    let elapsed = started.elapsed().as_secs_f64();
    println!(
        "ACCEPTANCE extra: PASS - verifier all-green on all {} grid chains, {elapsed:.1}s",
        cases.len()
    );
}
