//! Sufficiency constants for the constructive synthesis.
//!
//! These are certificates, not tuning knobs: when the recursion is run
//! with perturbations this small, every bracket and positivity claim it
//! relies on is guaranteed. The price is precision — `epsilon` carries
//! an exponent cubic in the problem size — so faithful-constants runs
//! are only practical for small chains, and the adaptive path replaces
//! the ladder with gap-scaled perturbations checked a posteriori.

use rug::ops::CompleteRound;
use rug::Float;

use crate::error::{Error, Result};
use crate::plan::{MultiplicityPlan, TargetSpectrum};

/// The constant family attached to one target spectrum.
#[derive(Debug, Clone)]
pub struct ProofConstants {
    /// Half the smallest eigenvalue gap, capped at 1/2.
    pub delta: Float,
    /// `1 + lambda_m`.
    pub lambda_bar: Float,
    /// Base perturbation scale; astronomically small.
    pub epsilon: Float,
    /// `rho_i = epsilon^((n+1)^(m-i))`, `i = 1..m-1`.
    pub rho: Vec<Float>,
    /// Per-step lower containment factor.
    pub c1: Float,
    /// Per-step upper containment factors `C_2(1)..C_2(m-1)`.
    pub c2: Vec<Float>,
    /// Leading-coefficient budget.
    pub c_big: Float,
    /// Sum of the pinned masses.
    pub m_total: Float,
}

/// `base^e` by binary exponentiation at precision `prec`.
pub(crate) fn pow_u64(base: &Float, e: u64, prec: u32) -> Float {
    let mut acc = Float::with_val(prec, 1);
    let mut sq = Float::with_val(prec, base);
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc *= &sq;
        }
        sq.square_mut();
        e >>= 1;
    }
    acc
}

fn checked_exp(n: usize, k: usize, context: &str) -> Result<u64> {
    let base = (n + 1) as u64;
    let mut acc: u64 = 1;
    for _ in 0..k {
        acc = acc.checked_mul(base).ok_or_else(|| Error::Overflow {
            context: context.to_string(),
        })?;
        if acc > 1 << 56 {
            return Err(Error::Overflow {
                context: format!("{context}: exponent {acc} exceeds the supported budget"),
            });
        }
    }
    Ok(acc)
}

/// Compute the full constant family at precision `prec`.
///
/// Defined for any feasible spectrum with `m >= 1`; the perturbation
/// ladder `rho` is needed even when all multiplicities are 1, because
/// the top-level companion polynomial places its roots at
/// `lambda_i + rho_i`.
pub fn constants(spec: &TargetSpectrum, plan: &MultiplicityPlan, prec: u32) -> Result<ProofConstants> {
    let n = spec.n();
    let m = spec.m();
    let lambdas = spec.lambdas();

    // delta = min(1, min gap) / 2; the min over an empty gap set is 1.
    let mut delta = Float::with_val(prec, 1);
    for w in lambdas.windows(2) {
        let gap = (&w[1] - &w[0]).complete(prec);
        if gap < delta {
            delta = gap;
        }
    }
    delta >>= 1;
    let lambda_bar = Float::with_val(prec, 1) + &lambdas[m - 1];

    // epsilon = delta^(n^2+n+1) / (n * 2^(3(n+1)^3) * lambda_bar^((n+1)^2))
    let n_u = n as u64;
    let e_num = n_u * n_u + n_u + 1;
    let e_two = 3 * (n_u + 1) * (n_u + 1) * (n_u + 1);
    let e_bar = (n_u + 1) * (n_u + 1);
    if e_two > 1 << 40 {
        return Err(Error::Overflow {
            context: "epsilon exponent bookkeeping".into(),
        });
    }
    let mut epsilon = pow_u64(&delta, e_num, prec);
    epsilon /= Float::with_val(prec, n as u32);
    epsilon >>= e_two as u32;
    epsilon /= pow_u64(&lambda_bar, e_bar, prec);
    if !epsilon.is_finite() || epsilon.is_zero() {
        return Err(Error::Overflow {
            context: "epsilon left the representable range (report: need a larger exponent budget)"
                .into(),
        });
    }

    // rho_i = epsilon^((n+1)^(m-i)), i = 1..m-1
    let mut rho = Vec::with_capacity(m.saturating_sub(1));
    for i in 1..m {
        let e = checked_exp(n, m - i, "rho exponent")?;
        let r = pow_u64(&epsilon, e, prec);
        if !r.is_finite() || r.is_zero() {
            return Err(Error::Overflow {
                context: format!("rho_{i} underflowed (report: need a larger exponent budget)"),
            });
        }
        rho.push(r);
    }

    // C_1 = delta / (2^(n+1) lambda_bar)
    let mut c1 = Float::with_val(prec, &delta);
    c1 >>= (n_u + 1) as u32;
    c1 /= &lambda_bar;

    // C_2(j) = 2^(2(n+1)^2) lambda_bar^(n+1) / (delta^n epsilon^((n+1)^(m-j-1)))
    let mut c2 = Vec::with_capacity(m.saturating_sub(1));
    for j in 1..m {
        let e = checked_exp(n, m - j - 1, "C2 exponent")?;
        let mut v = pow_u64(&lambda_bar, n_u + 1, prec);
        v <<= (2 * (n_u + 1) * (n_u + 1)) as u32;
        v /= pow_u64(&delta, n_u, prec);
        v /= pow_u64(&epsilon, e, prec);
        if !v.is_finite() {
            return Err(Error::Overflow {
                context: format!("C2({j}) overflowed"),
            });
        }
        c2.push(v);
    }

    // C = 2^(2n+1) (1 + lambda_bar^n) / (C_1^(2n^2) rho_1^(2n));
    // for m = 1 there is no rho_1 and the factor is simply absent.
    let mut c_big = Float::with_val(prec, 1) + pow_u64(&lambda_bar, n_u, prec);
    c_big <<= (2 * n_u + 1) as u32;
    c_big /= pow_u64(&c1, 2 * n_u * n_u, prec);
    if let Some(r1) = rho.first() {
        c_big /= pow_u64(r1, 2 * n_u, prec);
    }
    if !c_big.is_finite() {
        return Err(Error::Overflow {
            context: "C overflowed (report: need a larger exponent budget)".into(),
        });
    }

    let m_total = plan.total_pinned_mass(prec);

    Ok(ProofConstants {
        delta,
        lambda_bar,
        epsilon,
        rho,
        c1,
        c2,
        c_big,
        m_total,
    })
}

impl ProofConstants {
    /// The three inequality families the construction relies on, plus the
    /// basic sanity facts (`epsilon < 1`, `lambda_bar/delta >= 2`,
    /// `C > 1`). Returns the list of failures (empty when all hold).
    pub fn inequality_failures(&self, n: usize, prec: u32) -> Vec<String> {
        let mut fails = Vec::new();
        let m = self.rho.len() + 1;
        if !(self.epsilon.clone() < 1u32) {
            fails.push("epsilon < 1".into());
        }
        let ratio = (&self.lambda_bar / &self.delta).complete(prec);
        if !(ratio >= 2u32) {
            fails.push("lambda_bar / delta >= 2".into());
        }
        if !(self.c_big.clone() > 1u32) {
            fails.push("C > 1".into());
        }
        if m < 2 {
            return fails;
        }
        let n_u = n as u64;
        let one = Float::with_val(prec, 1);
        let growth = |j: usize| -> Float {
            // (1 + C_2(j))^n * rho_j, 1-based j
            let base = (&one + &self.c2[j - 1]).complete(prec);
            pow_u64(&base, n_u, prec) * &self.rho[j - 1]
        };
        let half_delta = (&self.delta >> 1u32).complete(prec);
        if !(growth(m - 1) < half_delta) {
            fails.push(format!("(1+C2({}))^n rho_{} < delta/2", m - 1, m - 1));
        }
        for j in 1..=m.saturating_sub(2) {
            if !(growth(j) < growth(j + 1)) {
                fails.push(format!("(1+C2({j}))^n rho_{j} < (1+C2({}))^n rho_{}", j + 1, j + 1));
            }
        }
        if m > 3 {
            for j in 2..=m - 2 {
                let lhs = Float::with_val(prec, n as u32) * growth(j - 1) / &self.delta;
                let mut rhs = pow_u64(&self.delta, n_u, prec);
                rhs >>= ((n_u + 1) * (n_u + 1)) as u32;
                rhs /= pow_u64(&self.lambda_bar, n_u + 1, prec);
                rhs *= &self.rho[j]; // rho_{j+1}
                rhs >>= 2u32; // times 1/4
                if !(lhs < rhs) {
                    fails.push(format!("n(1+C2({}))^n rho_{} / delta < rho_{}/4 * ...", j - 1, j - 1, j + 1));
                }
            }
        }
        fails
    }

    /// Mantissa budget for a faithful run, derived from the smallest
    /// guaranteed root gap `C_1^n rho_1`: enough bits to land bisection
    /// well inside it, plus guard room for the cancellation of nearby
    /// roots. Returns `(mantissa_bits, rel_tol_bits)`.
    pub fn required_faithful_bits(&self, n: usize, prec: u32) -> Result<(u32, u32)> {
        let gap = if let Some(r1) = self.rho.first() {
            pow_u64(&self.c1, n as u64, prec) * r1
        } else {
            Float::with_val(prec, &self.c1)
        };
        if !gap.is_finite() || gap.is_zero() {
            return Err(Error::Overflow {
                context: "faithful gap estimate".into(),
            });
        }
        let g = -gap.log2().to_f64();
        if !g.is_finite() || g < 0.0 {
            return Err(Error::Overflow {
                context: "faithful gap exponent".into(),
            });
        }
        let g = g.ceil() as u64;
        let mantissa = g + g / 2 + 384;
        let tol = g + g / 4 + 192;
        if mantissa > 1 << 22 {
            return Err(Error::Overflow {
                context: format!(
                    "faithful mode would need about {mantissa} mantissa bits; not supported"
                ),
            });
        }
        Ok((mantissa as u32, tol as u32))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::build_plan;

    fn spec113() -> TargetSpectrum {
        TargetSpectrum::from_f64(&[1.0, 2.0, 3.0], &[1, 1, 3], 192).unwrap()
    }

    #[test]
    fn epsilon_matches_direct_formula() {
        // n=5, lambdas (1,2,3): delta = 1/2, lambda_bar = 4,
        // epsilon = (1/2)^31 / (5 * 2^648 * 4^36).
        let spec = spec113();
        let plan = build_plan(&spec, None).unwrap();
        let c = constants(&spec, &plan, 192).unwrap();
        assert_eq!(c.delta, Float::with_val(192, 0.5));
        assert_eq!(c.lambda_bar, Float::with_val(192, 4));
        let expect = {
            let mut e = Float::with_val(192, 1);
            e >>= 31u32; // (1/2)^31
            e /= 5u32;
            e >>= 648u32;
            e /= pow_u64(&Float::with_val(192, 4), 36, 192);
            e
        };
        let rel = ((c.epsilon.clone() - &expect) / &expect).abs();
        assert!(rel < Float::with_val(192, 1e-40), "rel = {rel}");
    }

    #[test]
    fn c1_matches_direct_formula() {
        // C_1 = (1/2) / (2^6 * 4) = 2^-9 for n=5, lambda_bar=4.
        let spec = spec113();
        let plan = build_plan(&spec, None).unwrap();
        let c = constants(&spec, &plan, 192).unwrap();
        let expect = Float::with_val(192, 1) >> 9u32;
        assert_eq!(c.c1, expect);
    }

    #[test]
    fn remark_sanity_and_inequalities_hold() {
        let spec = spec113();
        let plan = build_plan(&spec, None).unwrap();
        let c = constants(&spec, &plan, 192).unwrap();
        assert!(c.epsilon < 1u32);
        let ratio = (&c.lambda_bar / &c.delta).complete(192);
        assert!(ratio >= 2u32);
        assert!(c.c_big > 1u32);
        let fails = c.inequality_failures(spec.n(), 192);
        assert!(fails.is_empty(), "failures: {fails:?}");
    }

    #[test]
    fn rho_ladder_is_increasing() {
        let spec = spec113();
        let plan = build_plan(&spec, None).unwrap();
        let c = constants(&spec, &plan, 192).unwrap();
        assert_eq!(c.rho.len(), 2);
        assert!(c.rho[0] < c.rho[1]);
    }

    #[test]
    fn faithful_bits_budget_is_sane() {
        let spec = TargetSpectrum::from_f64(&[1.0, 2.0], &[1, 2], 192).unwrap();
        let plan = build_plan(&spec, None).unwrap();
        let c = constants(&spec, &plan, 192).unwrap();
        let (bits, tol) = c.required_faithful_bits(spec.n(), 192).unwrap();
        assert!(bits > tol);
        assert!(bits > 500 && bits < 10_000, "bits = {bits}");
    }
}
