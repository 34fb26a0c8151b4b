//! A-posteriori certification of synthesized chains, the five-DOF
//! mass-ratio bound, and the necessity fuzzer.

use rug::ops::CompleteRound;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainJson, ChainSystem};
use crate::decimal::to_exact_decimal;
use crate::error::{Error, Result};
use crate::forward;
use crate::plan::{MultiplicityPlan, TargetSpectrum};
use crate::precision::PrecisionConfig;

/// Fixed relative tolerance for declaring an eigenvalue reproduced.
const SPECTRUM_MATCH_REL_TOL: f64 = 1e-9;

/// Certification data for one synthesized chain.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    /// Per target eigenvalue: scaled magnitudes of `f_n` and its first
    /// `t_i - 1` derivatives there. "Divisible" means every entry sits at
    /// the roundoff floor of its own computation.
    pub divisibility_residuals: Vec<Vec<Float>>,
    pub divisibility_ok: bool,
    /// Sturm-count jump across a tight window around each target equals
    /// the requested multiplicity.
    pub multiplicity_jumps_ok: bool,
    pub spectrum_match: bool,
    /// Relative error of each detected eigenvalue against its target.
    pub eigenvalue_errors: Vec<Float>,
    pub gcd_degree_ok: bool,
    pub pinned_masses_ok: bool,
    /// Threshold the residuals were compared against.
    pub residual_threshold: Float,
}

impl VerificationReport {
    pub fn all_green(&self) -> bool {
        self.divisibility_ok
            && self.multiplicity_jumps_ok
            && self.spectrum_match
            && self.gcd_degree_ok
            && self.pinned_masses_ok
    }
}

/// Verify a chain against the spectrum it is claimed to realize.
///
/// Divisibility is certified as scaled residuals of `f_n` and its
/// derivatives below `2^-(bits/2)` plus the right Sturm-count jump at
/// every target; both must pass.
pub fn verify(
    chain: &ChainSystem,
    spec: &TargetSpectrum,
    plan: &MultiplicityPlan,
    cfg: &PrecisionConfig,
) -> Result<VerificationReport> {
    if chain.n() != spec.n() {
        return Err(Error::Dimension {
            expected: spec.n(),
            got: chain.n(),
        });
    }
    let prec = cfg.mantissa_bits();
    let threshold = Float::with_val(prec, 1) >> (cfg.mantissa_bits() / 2);

    // Scaled derivative residuals at each target.
    let mut residuals = Vec::with_capacity(spec.m());
    let mut divisibility_ok = true;
    for (i, lambda) in spec.lambdas().iter().enumerate() {
        let t = spec.mults()[i];
        let derivs = forward::fg_derivatives(chain, lambda, t.saturating_sub(1), prec);
        let mut per_target = Vec::with_capacity(t);
        for r in 0..t {
            let scaled = (derivs.f[r].clone() / &derivs.f_scale[r]).abs();
            if !(scaled <= threshold) {
                divisibility_ok = false;
            }
            per_target.push(scaled);
        }
        residuals.push(per_target);
    }

    // Multiplicity windows via Sturm jumps.
    let mut delta = Float::with_val(prec, 1);
    for w in spec.lambdas().windows(2) {
        let gap = (&w[1] - &w[0]).complete(prec);
        if gap < delta {
            delta = gap;
        }
    }
    delta >>= 1;
    let mut multiplicity_jumps_ok = true;
    for (i, lambda) in spec.lambdas().iter().enumerate() {
        let rel = Float::with_val(prec, 1e-10) * lambda;
        let w = rel.min(&(&delta >> 2u32).complete(prec));
        let lo = (lambda - &w).complete(prec);
        let hi = (lambda + &w).complete(prec);
        let c_lo = forward::sturm_count_robust(chain, &lo, cfg)?.count;
        let c_hi = forward::sturm_count_robust(chain, &hi, cfg)?.count;
        if c_hi.checked_sub(c_lo) != Some(spec.mults()[i]) {
            multiplicity_jumps_ok = false;
        }
    }

    // Round-trip spectrum comparison.
    let cluster_tol = Float::with_val(prec, 1e-12);
    let report = forward::spectrum(chain, cfg, &cluster_tol)?;
    let mut spectrum_match = report.multiplicities == spec.mults();
    let mut eigenvalue_errors = Vec::with_capacity(spec.m());
    if report.eigenvalues.len() == spec.m() {
        for (found, target) in report.eigenvalues.iter().zip(spec.lambdas()) {
            let err = ((found - target).complete(prec) / target).abs();
            if !(err <= Float::with_val(prec, SPECTRUM_MATCH_REL_TOL)) {
                spectrum_match = false;
            }
            eigenvalue_errors.push(err);
        }
    } else {
        spectrum_match = false;
        for (found, target) in report.eigenvalues.iter().zip(spec.lambdas()) {
            eigenvalue_errors.push(((found - target).complete(prec) / target).abs());
        }
    }

    // gcd degree: coincidences between the roots of f_n (the spectrum)
    // and the roots of g_n (the leading block) within the cluster tol.
    // Each eigenvalue's contribution is capped at its multiplicity minus
    // one: the reduced polynomials f_n/gcd and g_n/gcd strictly
    // interlace, so they never share a root, and the cap keeps the
    // companion root `lambda_i + rho_i` (which may hug the target closer
    // than the tolerance) from inflating the count.
    let gcd_degree = {
        let n = chain.n();
        if n == 1 {
            0
        } else {
            let g_roots = forward::leading_block_roots(chain, n - 1, cfg, &cluster_tol)?;
            let mut total = 0usize;
            for (e, emult) in report.eigenvalues.iter().zip(&report.multiplicities) {
                let scale = Float::with_val(prec, e.clone().abs().max(&Float::with_val(prec, 1)));
                let window = (&cluster_tol * &scale).complete(prec) * 4u32;
                let nearby: usize = g_roots
                    .iter()
                    .filter(|(x, _)| ((x - e).complete(prec)).abs() <= window)
                    .map(|(_, m)| *m)
                    .sum();
                total += nearby.min(emult.saturating_sub(1));
            }
            total
        }
    };
    let gcd_degree_ok = gcd_degree == spec.n() - spec.m();

    // Pinned masses, bit-exact.
    let mut pinned_masses_ok = true;
    for (idx, mass) in plan.pinned_indices().iter().zip(plan.pinned_masses()) {
        if chain.mass(*idx) != mass {
            pinned_masses_ok = false;
        }
    }

    Ok(VerificationReport {
        divisibility_residuals: residuals,
        divisibility_ok,
        multiplicity_jumps_ok,
        spectrum_match,
        eigenvalue_errors,
        gcd_degree_ok,
        pinned_masses_ok,
        residual_threshold: threshold,
    })
}

/// The five-DOF mass-ratio bound: for a chain realizing multiplicities
/// (1, 1, 3) on `l1 < l2 < l3`, the largest of `m_2/m_3, m_3/m_4,
/// m_4/m_5` must exceed `(l1/(8 l3)) (1 - (l2/l3)^(1/3))`.
pub fn five_dof_bound(
    chain: &ChainSystem,
    lambdas: &[Float],
    prec: u32,
) -> Result<(Float, Float, bool)> {
    if chain.n() != 5 {
        return Err(Error::Dimension {
            expected: 5,
            got: chain.n(),
        });
    }
    if lambdas.len() != 3 {
        return Err(Error::Dimension {
            expected: 3,
            got: lambdas.len(),
        });
    }
    let mut lhs = Float::with_val(prec, 0);
    for j in 2..=4 {
        let ratio = (chain.mass(j) / chain.mass(j + 1)).complete(prec);
        if ratio > lhs {
            lhs = ratio;
        }
    }
    let third: Float = (&lambdas[1] / &lambdas[2]).complete(prec);
    let rhs = (&lambdas[0] / &lambdas[2]).complete(prec) / 8u32
        * (Float::with_val(prec, 1) - third.cbrt());
    let holds = lhs > rhs;
    Ok((lhs, rhs, holds))
}

// ── Necessity fuzzer ────────────────────────────────────────────────

/// Summary of a necessity-fuzz run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FuzzSummary {
    pub trials: usize,
    pub n_max: usize,
    pub seed: u64,
    pub violations: usize,
    /// Chains whose detected multiplicity pattern broke the gate; a
    /// non-empty list indicates a solver bug, not a counterexample.
    pub counterexamples: Vec<ChainJson>,
    /// How many trials produced at least one multiple eigenvalue at the
    /// clustering tolerance.
    pub trials_with_multiples: usize,
}

/// Generate random valid chains (log-uniform parameters in
/// `[1e-2, 1e2]`, inertances zeroed with probability 1/2), compute
/// spectra, and assert the feasibility gate `t_i <= i` on every detected
/// multiplicity pattern.
pub fn necessity_fuzz(
    num_trials: usize,
    n_max: usize,
    rng_seed: u64,
    cfg: &PrecisionConfig,
) -> Result<FuzzSummary> {
    use rand::{Rng, SeedableRng};
    let mut violations = 0usize;
    let mut counterexamples = Vec::new();
    let mut trials_with_multiples = 0usize;
    let prec = cfg.mantissa_bits();
    let cluster_tol = Float::with_val(prec, 1) >> (cfg.mantissa_bits() / 3);
    for trial in 0..num_trials {
        // Independent stream per trial.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(rng_seed ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let n = rng.gen_range(1..=n_max);
        let log_range = (1e-2f64).ln()..=(1e2f64).ln();
        let mut draw = |zero_ok: bool| -> f64 {
            if zero_ok && rng.gen_bool(0.5) {
                0.0
            } else {
                rng.gen_range(log_range.clone()).exp()
            }
        };
        let masses: Vec<f64> = (0..n).map(|_| draw(false)).collect();
        let stiffnesses: Vec<f64> = (0..n).map(|_| draw(false)).collect();
        let inertances: Vec<f64> = (0..n).map(|_| draw(true)).collect();
        let chain = ChainSystem::from_f64(&masses, &stiffnesses, &inertances, prec)?;
        let report = forward::spectrum(&chain, cfg, &cluster_tol)?;
        if report.multiplicities.iter().any(|&t| t > 1) {
            trials_with_multiples += 1;
        }
        let gate_ok = report
            .multiplicities
            .iter()
            .enumerate()
            .all(|(i, &t)| t <= i + 1);
        if !gate_ok {
            violations += 1;
            counterexamples.push(ChainJson::from_chain(&chain));
        }
    }
    Ok(FuzzSummary {
        trials: num_trials,
        n_max,
        seed: rng_seed,
        violations,
        counterexamples,
        trials_with_multiples,
    })
}

// ── JSON interface ──────────────────────────────────────────────────

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReportJson {
    pub divisibility_residuals: Vec<Vec<String>>,
    pub divisibility_ok: bool,
    pub multiplicity_jumps_ok: bool,
    pub spectrum_match: bool,
    pub eigenvalue_errors: Vec<String>,
    pub gcd_degree_ok: bool,
    pub pinned_masses_ok: bool,
    pub all_green: bool,
}

impl VerificationReportJson {
    pub fn from_report(r: &VerificationReport, float64: bool) -> Self {
        let conv = |x: &Float| -> String {
            if float64 {
                crate::decimal::to_f64_string(x)
            } else {
                to_exact_decimal(x)
            }
        };
        Self {
            divisibility_residuals: r
                .divisibility_residuals
                .iter()
                .map(|v| v.iter().map(conv).collect())
                .collect(),
            divisibility_ok: r.divisibility_ok,
            multiplicity_jumps_ok: r.multiplicity_jumps_ok,
            spectrum_match: r.spectrum_match,
            eigenvalue_errors: r.eigenvalue_errors.iter().map(conv).collect(),
            gcd_degree_ok: r.gcd_degree_ok,
            pinned_masses_ok: r.pinned_masses_ok,
            all_green: r.all_green(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::build_plan;
    use crate::synthesis::{synthesize, Mode};

    fn cfg() -> PrecisionConfig {
        PrecisionConfig::with_bits(256)
    }

    #[test]
    fn verify_accepts_synthesized_chain() {
        let spec = TargetSpectrum::from_f64(&[1.0, 4.0], &[1, 2], 192).unwrap();
        let plan = build_plan(&spec, None).unwrap();
        let result = synthesize(&spec, &plan, Mode::Adaptive, &cfg()).unwrap();
        let report = verify(&result.chain, &spec, &plan, &cfg()).unwrap();
        assert!(report.divisibility_ok, "residuals: {:?}", report.divisibility_residuals);
        assert!(report.multiplicity_jumps_ok);
        assert!(report.spectrum_match);
        assert!(report.gcd_degree_ok);
        assert!(report.pinned_masses_ok);
        assert!(report.all_green());
    }

    #[test]
    fn verify_rejects_perturbed_stiffness() {
        let spec = TargetSpectrum::from_f64(&[1.0, 4.0], &[1, 2], 192).unwrap();
        let plan = build_plan(&spec, None).unwrap();
        let result = synthesize(&spec, &plan, Mode::Adaptive, &cfg()).unwrap();
        let mut k: Vec<Float> = result.chain.stiffnesses().to_vec();
        let bump = Float::with_val(k[1].prec(), &k[1]) / 100u32;
        k[1] += bump; // 1 percent on k_2
        let perturbed = ChainSystem::new(
            result.chain.masses().to_vec(),
            k,
            result.chain.inertances().to_vec(),
        )
        .unwrap();
        let report = verify(&perturbed, &spec, &plan, &cfg()).unwrap();
        assert!(!report.spectrum_match);
        assert!(!report.all_green());
    }

    #[test]
    fn inerterless_chain_cannot_hold_multiplicity() {
        // Any chain with all b = 0 has distinct eigenvalues, so asking it
        // to verify a doubled eigenvalue must fail.
        let chain =
            ChainSystem::from_f64(&[1.0, 2.0, 0.5], &[3.0, 1.0, 2.0], &[0.0, 0.0, 0.0], 192)
                .unwrap();
        let prec = 256;
        let tol = Float::with_val(prec, 1e-12);
        let rep = forward::spectrum(&chain, &cfg(), &tol).unwrap();
        assert_eq!(rep.multiplicities, vec![1, 1, 1]);
        let spec = TargetSpectrum::new(
            vec![rep.eigenvalues[0].clone(), rep.eigenvalues[1].clone()],
            vec![1, 2],
        )
        .unwrap();
        let plan = build_plan(&spec, Some(vec![Float::with_val(prec, 1), Float::with_val(prec, 1)])).unwrap();
        let report = verify(&chain, &spec, &plan, &cfg()).unwrap();
        assert!(!report.spectrum_match);
        assert!(!report.multiplicity_jumps_ok);
    }

    #[test]
    fn five_dof_bound_formula() {
        // rhs for lambdas (1,2,3) is (1/24)(1 - (2/3)^(1/3)).
        let chain = ChainSystem::from_f64(
            &[1.0, 1.0, 1.0, 1.0, 1.0],
            &[1.0, 1.0, 1.0, 1.0, 1.0],
            &[0.0; 5],
            192,
        )
        .unwrap();
        let lambdas: Vec<Float> = [1.0, 2.0, 3.0]
            .iter()
            .map(|&x| Float::with_val(192, x))
            .collect();
        let (lhs, rhs, holds) = five_dof_bound(&chain, &lambdas, 192).unwrap();
        assert_eq!(lhs.to_f64(), 1.0);
        let expect = (1.0 / 24.0) * (1.0 - (2.0f64 / 3.0).powf(1.0 / 3.0));
        assert!((rhs.to_f64() - expect).abs() < 1e-15);
        assert!(holds);
    }

    #[test]
    fn five_dof_bound_checks_dimension() {
        let chain = ChainSystem::from_f64(&[1.0], &[1.0], &[0.0], 96).unwrap();
        let lambdas: Vec<Float> = (1..=3).map(|x| Float::with_val(96, x)).collect();
        assert!(matches!(
            five_dof_bound(&chain, &lambdas, 96),
            Err(Error::Dimension { expected: 5, .. })
        ));
    }

    #[test]
    fn fuzz_smoke_run_is_clean() {
        let cfg = PrecisionConfig::with_bits(128);
        let summary = necessity_fuzz(60, 5, 42, &cfg).unwrap();
        assert_eq!(summary.trials, 60);
        assert_eq!(summary.violations, 0);
        assert!(summary.counterexamples.is_empty());
    }

    #[test]
    fn fuzz_scalar_chain_is_trivially_clean() {
        let cfg = PrecisionConfig::with_bits(128);
        let summary = necessity_fuzz(5, 1, 7, &cfg).unwrap();
        assert_eq!(summary.violations, 0);
    }
}
