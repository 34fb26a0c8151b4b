//! Full round trip of the fifteen-DOF worked example with multiplicity
//! pattern (1,2,3,2,1,4,1,1): plan, synthesis, spectrum, verification.

use rug::Float;

use chainspec_core::forward::spectrum;
use chainspec_core::plan::{build_plan, TargetSpectrum};
use chainspec_core::precision::PrecisionConfig;
use chainspec_core::synthesis::{synthesize, Mode, StrategyTag};
use chainspec_core::verify::verify;

#[test]
fn fifteen_dof_schedule_round_trip() {
    let lambdas = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
    let mults = [1usize, 2, 3, 2, 1, 4, 1, 1];
    let spec = TargetSpectrum::from_f64(&lambdas, &mults, 256).unwrap();
    assert_eq!(spec.n(), 15);
    let pinned: Vec<Float> = (1..=8).map(|i| Float::with_val(256, i) / 4u32).collect();
    let plan = build_plan(&spec, Some(pinned)).unwrap();
    let cfg = PrecisionConfig::new(256, 240, 2, 3).unwrap();

    let result = synthesize(&spec, &plan, Mode::Adaptive, &cfg).unwrap();
    assert_eq!(result.chain.n(), 15);

    // The scheduled poles sit at their eigenvalues exactly: the known
    // assignment is k/b = l6 at indices 2, 7, 10; l4 at 3; l3 at 4 and
    // 8; l2 at 5.
    for (idx, lam) in [
        (2usize, 6.0),
        (3, 4.0),
        (4, 3.0),
        (5, 2.0),
        (7, 6.0),
        (8, 3.0),
        (10, 6.0),
    ] {
        let k = result.chain.stiffness(idx);
        let b = result.chain.inertance(idx);
        let prec = k.prec() + b.prec();
        let ratio = Float::with_val(prec, k / b);
        assert_eq!(ratio, Float::with_val(64, lam), "pole at index {idx}");
    }

    // Strategy-B count is n - m = 7.
    let b_count = result
        .trace
        .iter()
        .filter(|r| r.strategy == StrategyTag::B)
        .count();
    assert_eq!(b_count, 7);

    // Round trip.
    let tol = Float::with_val(256, 1e-12);
    let rep = spectrum(&result.chain, &cfg, &tol).unwrap();
    assert_eq!(rep.multiplicities, mults);
    for (found, target) in rep.eigenvalues.iter().zip(lambdas.iter()) {
        assert!((found.to_f64() - target).abs() < 1e-9 * target);
    }

    // Full certification.
    let report = verify(&result.chain, &spec, &plan, &cfg).unwrap();
    assert!(report.all_green(), "report: {report:?}");
}
