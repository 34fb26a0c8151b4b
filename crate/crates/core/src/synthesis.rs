//! Constructive synthesis: build a chain realizing a feasible spectrum.
//!
//! The engine runs a backward recursion from a top-level polynomial pair
//! whose roots are the targets (plus a perturbation ladder) down to a
//! linear polynomial, producing one `(m, k, b)` triple per step. Each
//! step is one of two moves:
//!
//! * strategy A: the spring/inerter pole is free; the step consumes a
//!   user-pinned mass and solves for the pole location;
//! * strategy B: the pole is placed exactly on a repeated target
//!   eigenvalue from the plan's schedule; the mass is solved for.
//!
//! Strategy-B poles accumulate in a divisor ledger; the ledger times the
//! final polynomial reproduces the requested multiplicities exactly.

use rug::ops::CompleteRound;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainJson, ChainSystem};
use crate::constants::{constants, pow_u64, ProofConstants};
use crate::decimal::to_exact_decimal;
use crate::error::{Error, Result};
use crate::forward;
use crate::plan::{feasibility_violations, MultiplicityPlan, Strategy, TargetSpectrum};
use crate::poly::{interlaces_between, root_in_bracket, RootPoly, ScaledPair};
use crate::precision::PrecisionConfig;

/// Precision at which the proof constants themselves are computed. They
/// enter every comparison as multiplicative margins with enormous slack,
/// so a fixed moderate precision is enough; what matters is that the
/// same rounded values are used consistently.
const CONSTANTS_PREC: u32 = 320;

/// Relative half-width of the a-posteriori multiplicity window.
const POST_CHECK_REL_WINDOW: f64 = 1e-12;

/// Maximum perturbation-ladder halvings in adaptive mode.
const MAX_RHO_SHRINKS: u32 = 8;

/// Maximum ladder steepenings (each doubles the rung exponents).
const MAX_RHO_STEEPENINGS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Run with the published sufficiency constants verbatim; checks the
    /// per-step containment bounds. Precision-hungry; small chains only.
    Faithful,
    /// Gap-scaled perturbations with a-posteriori verification and
    /// shrink-and-retry. The practical path.
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrategyTag {
    A,
    B,
}

/// One backward-recursion level: monic polynomial pair plus leading
/// coefficients.
#[derive(Debug, Clone)]
pub struct LevelState {
    pub f: RootPoly,
    pub g: RootPoly,
    pub pair: ScaledPair,
}

/// Everything recorded about one step, for the trace and the checks.
#[derive(Debug, Clone)]
pub struct StepRecord {
    /// Level index after the step (the step consumed level `j+1`).
    pub j: usize,
    pub strategy: StrategyTag,
    /// Pole location `lambda*_{j+1} = k_{j+1}/b_{j+1}`.
    pub lambda_star: Float,
    /// `b_{j+1}`.
    pub b_next: Float,
    /// `m_{j+1}`.
    pub m_next: Float,
    /// Leading coefficients of level `j`.
    pub mu: Float,
    pub nu: Float,
    pub f_roots: Vec<Float>,
    pub g_roots: Vec<Float>,
    /// Divisor-ledger factors of level `j` (pole values of the
    /// strategy-B steps strictly below this level).
    pub d_factors: Vec<Float>,
    /// Same factors as target-eigenvalue indices (0-based).
    pub d_factor_indices: Vec<usize>,
    /// Solved mass (strategy B) or the pinned mass (strategy A).
    pub m_star: Float,
    pub b_star: Float,
    /// Leading-coefficient shrink factor; strategy B only.
    pub tau: Option<Float>,
    /// True if the last bracket had to be widened past the pole.
    pub widened_bracket: bool,
}

#[derive(Debug, Clone)]
pub struct SynthesisResult {
    pub chain: ChainSystem,
    /// Steps in execution order, level `n-1` down to `1`.
    pub trace: Vec<StepRecord>,
    pub mode: Mode,
    pub precision_used: u32,
    /// Top-level data the recursion started from.
    pub top_f: RootPoly,
    pub top_g: RootPoly,
    pub top_mu: Float,
    pub top_nu: Float,
}

// ── Step algebra ────────────────────────────────────────────────────

fn sign_ok(x: &Float) -> bool {
    x.is_finite() && *x > 0
}

/// Extracted roots must come out strictly increasing; when they do not,
/// the brackets were too tight for the working precision.
fn sorted_roots(roots: Vec<Float>, what: &str) -> Result<RootPoly> {
    RootPoly::new(roots).map_err(|_| Error::NonPositiveParameter {
        context: format!("{what} roots lost their ordering"),
    })
}

/// `H(x) = mu F(x) + m* nu x G(x)`; the combination whose roots become
/// the next level's F-roots (and, in strategy A, the pole).
fn combination_value(
    state: &LevelState,
    m_star: &Float,
    x: &Float,
    prec: u32,
) -> Float {
    let f_term = state.f.eval(&state.pair.mu, x, prec);
    let mut g_term = state.g.eval(&state.pair.nu, x, prec);
    g_term *= m_star;
    g_term *= x;
    f_term + g_term
}

/// Outputs of a strategy-A step beyond the new level.
#[derive(Debug, Clone)]
pub struct AStepData {
    pub lambda_star: Float,
    pub b_star: Float,
}

/// Strategy A: the pinned mass `m*` is given; the pole is the unique
/// root of `H` above the top F-root, located by doubling then bisection.
/// New F-roots live in `(alpha_i, beta_i)`, new G-roots in
/// `(beta_i, alpha'_{i+1})`.
pub fn step_a(
    state: &LevelState,
    m_star: &Float,
    cfg: &PrecisionConfig,
) -> Result<(LevelState, AStepData)> {
    let p = state.f.degree();
    if p < 2 || state.g.degree() + 1 != p {
        return Err(Error::NonPositiveParameter {
            context: format!("strategy A needs degrees (p, p-1) with p >= 2, got ({}, {})", p, state.g.degree()),
        });
    }
    let prec = cfg.mantissa_bits();
    let h = |x: &Float| combination_value(state, m_star, x, prec);

    // Bracket the pole: H keeps the sign of nu at the top F-root and the
    // sign of mu far right; double the offset until the flip shows.
    let alpha_top = state.f.root(p - 1);
    let sign_at_top = h(alpha_top);
    let mut offset = (alpha_top - state.f.root(0)).complete(prec) + 1u32;
    let mut hi = (alpha_top + &offset).complete(prec);
    let mut found = false;
    for _ in 0..300 {
        if h(&hi).cmp0() != sign_at_top.cmp0() {
            found = true;
            break;
        }
        offset <<= 1;
        hi = (alpha_top + &offset).complete(prec);
    }
    if !found {
        return Err(Error::Bracket {
            lo: alpha_top.to_string(),
            hi: hi.to_string(),
        });
    }
    let lambda_star = root_in_bracket(h, alpha_top, &hi, cfg)?;
    if lambda_star <= *alpha_top {
        return Err(Error::NonPositiveParameter {
            context: "strategy A pole at or below the top root".into(),
        });
    }

    // New F-roots, one per (alpha_i, beta_i).
    let mut f0_roots = Vec::with_capacity(p - 1);
    for i in 0..p - 1 {
        f0_roots.push(root_in_bracket(h, state.f.root(i), state.g.root(i), cfg)?);
    }
    let f0 = sorted_roots(f0_roots, "strategy A spectrum")?;

    let g_at = state.g.eval_monic(&lambda_star, prec);
    let f0_at = f0.eval_monic(&lambda_star, prec);
    // b* = -(mu + m* nu)/nu * F0(lam*)/G(lam*)
    let mu_shift = (m_star * &state.pair.nu).complete(prec) + &state.pair.mu;
    let b_star = -(&mu_shift / &state.pair.nu).complete(prec) * &f0_at / &g_at;
    if !sign_ok(&b_star) {
        return Err(Error::NonPositiveParameter {
            context: "strategy A inertance".into(),
        });
    }
    // mu_0 = nu G(lam*)/F0(lam*)
    let mu0 = (&state.pair.nu * &g_at).complete(prec) / &f0_at;

    // New G-roots from W = nu G - mu_0 F0, one per (beta_i, alpha'_{i+1}).
    let w = |x: &Float| {
        let g_term = state.g.eval(&state.pair.nu, x, prec);
        let f_term = f0.eval(&mu0, x, prec);
        g_term - f_term
    };
    let mut g0_roots = Vec::with_capacity(p.saturating_sub(2));
    for i in 0..p.saturating_sub(2) {
        g0_roots.push(root_in_bracket(w, state.g.root(i), f0.root(i + 1), cfg)?);
    }
    let g0 = sorted_roots(g0_roots, "strategy A companion")?;

    let nu0 = ((&mu0 - &state.pair.nu).complete(prec)) / &b_star;
    let pair = ScaledPair::new(mu0, nu0)?;
    Ok((
        LevelState { f: f0, g: g0, pair },
        AStepData {
            lambda_star,
            b_star,
        },
    ))
}

/// Outputs of a strategy-B step beyond the new level.
#[derive(Debug, Clone)]
pub struct BStepData {
    pub m_star: Float,
    pub b_star: Float,
    pub tau: Float,
    pub widened_bracket: bool,
}

/// Strategy B: the pole is a scheduled target eigenvalue above the top
/// F-root; the mass comes from the closed formula, and the pole is
/// inserted into the new F-roots exactly (never re-extracted), which is
/// what makes `k/b` hit the eigenvalue with no rounding.
pub fn step_b(
    state: &LevelState,
    lambda_star: &Float,
    widen_by: &Float,
    cfg: &PrecisionConfig,
) -> Result<(LevelState, BStepData)> {
    let p = state.f.degree();
    if p < 1 || state.g.degree() + 1 != p {
        return Err(Error::NonPositiveParameter {
            context: "strategy B needs degrees (p, p-1) with p >= 1".into(),
        });
    }
    let prec = cfg.mantissa_bits();
    let alpha_top = state.f.root(p - 1);
    if !(lambda_star > alpha_top) {
        return Err(Error::NonPositiveParameter {
            context: "strategy B pole not above the top root".into(),
        });
    }

    // m* = -(mu/nu) F(lam*) / (lam* G(lam*))
    let f_at = state.f.eval_monic(lambda_star, prec);
    let g_at = state.g.eval_monic(lambda_star, prec);
    let neg_ratio = state.pair.neg_ratio(prec);
    let m_star = (&neg_ratio * &f_at).complete(prec) / ((lambda_star * &g_at).complete(prec));
    if !sign_ok(&m_star) {
        return Err(Error::NonPositiveParameter {
            context: "strategy B mass".into(),
        });
    }

    // Lower F-roots from H in (alpha_i, beta_i); the pole joins exactly.
    let h = |x: &Float| combination_value(state, &m_star, x, prec);
    let mut f0_lower = Vec::with_capacity(p - 1);
    for i in 0..p - 1 {
        f0_lower.push(root_in_bracket(h, state.f.root(i), state.g.root(i), cfg)?);
    }
    let reduced_f0 = sorted_roots(f0_lower.clone(), "strategy B spectrum")?;
    let mut full_roots = f0_lower.clone();
    full_roots.push(Float::with_val(lambda_star.prec(), lambda_star));
    let f0 = sorted_roots(full_roots, "strategy B spectrum with pole")?;

    // tau per the closed forms; shrinks the leading coefficient enough
    // that the new G-roots stay put.
    let one = Float::with_val(prec, 1);
    let tau = match p {
        1 => Float::with_val(prec, 0.5),
        2 => {
            // eta_2 = min(beta_1 - alpha_1, 1/2); v_2 = min(eta_2/(beta_1 - alpha'_1), 1)/4
            let beta1 = state.g.root(0);
            let eta2 = (beta1 - state.f.root(0))
                .complete(prec)
                .min(&Float::with_val(prec, 0.5));
            let denom = (beta1 - &f0_lower[0]).complete(prec);
            (eta2 / denom).min(&one) >> 2u32
        }
        _ => {
            // eta_1 = min(min gap(beta)/4, min(beta_l - alpha_l));
            // v_1 = min(1, (min gap(beta) - eta_1)^(p-1)) min(1, eta_1^(p-1))
            //       / (2 + 2 max_j |prod (beta_j - alpha'_h)|) / 2
            let mut min_bgap = (state.g.root(1) - state.g.root(0)).complete(prec);
            for l in 1..p - 2 {
                let gap = (state.g.root(l + 1) - state.g.root(l)).complete(prec);
                if gap < min_bgap {
                    min_bgap = gap;
                }
            }
            let mut min_ba = (state.g.root(0) - state.f.root(0)).complete(prec);
            for l in 1..p - 1 {
                let d = (state.g.root(l) - state.f.root(l)).complete(prec);
                if d < min_ba {
                    min_ba = d;
                }
            }
            let eta1 = (min_bgap.clone() >> 2u32).min(&min_ba);
            let shifted_gap = Float::with_val(prec, &min_bgap) - &eta1;
            let term1 = pow_u64(&shifted_gap, (p - 1) as u64, prec).min(&one);
            let term2 = pow_u64(&eta1, (p - 1) as u64, prec).min(&one);
            let mut max_prod = Float::with_val(prec, 0);
            for j in 0..p - 1 {
                let prod = reduced_f0
                    .eval_monic(state.g.root(j), prec)
                    .abs();
                if prod > max_prod {
                    max_prod = prod;
                }
            }
            let denom = Float::with_val(prec, 2) + (max_prod << 1u32);
            (term1 * term2 / denom) >> 1u32
        }
    };
    if !sign_ok(&tau) || tau >= 1u32 {
        return Err(Error::NonPositiveParameter {
            context: "strategy B shrink factor".into(),
        });
    }

    let mu0 = (&tau * &state.pair.nu).complete(prec);
    // b* = -(mu + m* nu)/mu_0
    let mu_shift = (&m_star * &state.pair.nu).complete(prec) + &state.pair.mu;
    let b_star = -(mu_shift / &mu0);
    if !sign_ok(&b_star) {
        return Err(Error::NonPositiveParameter {
            context: "strategy B inertance".into(),
        });
    }
    let nu0 = ((&mu0 - &state.pair.nu).complete(prec)) / &b_star;

    // New G-roots from W = nu G - mu_0 (F0 deflated by the pole):
    // brackets (beta_i, alpha'_{i+1}), last one (beta_{p-1}, lam*),
    // widened on failure.
    let w = |x: &Float| {
        let g_term = state.g.eval(&state.pair.nu, x, prec);
        let f_term = reduced_f0.eval(&mu0, x, prec);
        g_term - f_term
    };
    let mut g0_roots = Vec::with_capacity(p - 1);
    let mut widened_bracket = false;
    if p >= 2 {
        for i in 0..p - 2 {
            g0_roots.push(root_in_bracket(w, state.g.root(i), &f0_lower[i + 1], cfg)?);
        }
        let last = match root_in_bracket(w, state.g.root(p - 2), lambda_star, cfg) {
            Ok(r) => r,
            Err(Error::Bracket { .. }) => {
                widened_bracket = true;
                let wide_hi = (lambda_star + widen_by).complete(prec);
                root_in_bracket(w, state.g.root(p - 2), &wide_hi, cfg)?
            }
            Err(e) => return Err(e),
        };
        g0_roots.push(last);
    }
    let g0 = sorted_roots(g0_roots, "strategy B companion")?;
    let pair = ScaledPair::new(mu0, nu0)?;
    Ok((
        LevelState { f: f0, g: g0, pair },
        BStepData {
            m_star,
            b_star,
            tau,
            widened_bracket,
        },
    ))
}

// ── Top-level data ──────────────────────────────────────────────────

/// Faithful-mode top of the recursion: `F_n` has the target roots, `G_n`
/// the targets shifted by the perturbation ladder, and the leading
/// coefficients carry twice the required budget.
pub fn init_top(
    spec: &TargetSpectrum,
    consts: &ProofConstants,
    prec: u32,
) -> Result<(RootPoly, RootPoly, ScaledPair)> {
    let mu_init = faithful_mu_init(spec, consts, prec);
    init_top_with(spec, &consts.rho, &mu_init, prec)
}

fn faithful_mu_init(spec: &TargetSpectrum, consts: &ProofConstants, prec: u32) -> Float {
    // 2 C (lambda_bar/lambda_1)^n lambda_bar M / (lambda_bar - lambda_1)
    let n = spec.n() as u64;
    let lam1 = &spec.lambdas()[0];
    let ratio = (&consts.lambda_bar / lam1).complete(prec);
    let mut v = pow_u64(&ratio, n, prec);
    v *= &consts.c_big;
    v *= &consts.lambda_bar;
    v *= &consts.m_total;
    v /= (&consts.lambda_bar - lam1).complete(prec);
    v << 1u32
}

fn init_top_with(
    spec: &TargetSpectrum,
    rho: &[Float],
    mu_init: &Float,
    prec: u32,
) -> Result<(RootPoly, RootPoly, ScaledPair)> {
    let lambdas = spec.lambdas();
    let m = spec.m();
    assert_eq!(rho.len(), m - 1, "one rho per interior eigenvalue");
    let f_roots: Vec<Float> = lambdas.iter().map(|l| Float::with_val(prec, l)).collect();
    let g_roots: Vec<Float> = (0..m - 1)
        .map(|i| (&lambdas[i] + &rho[i]).complete(prec))
        .collect();
    let f = RootPoly::new(f_roots)?;
    let g = RootPoly::new(g_roots)?;
    if !interlaces_between(&g, &f) {
        return Err(Error::NonPositiveParameter {
            context: "perturbation ladder exceeds an eigenvalue gap".into(),
        });
    }
    let pair = ScaledPair::new(
        Float::with_val(prec, mu_init),
        Float::with_val(prec, -1),
    )?;
    Ok((f, g, pair))
}

// ── Level checks ────────────────────────────────────────────────────

struct LevelChecks {
    /// Adaptive: next eigenvalue each beta must stay below.
    /// Faithful: containment offsets per interior eigenvalue.
    faithful: Option<FaithfulOffsets>,
    lambdas: Vec<Float>,
}

struct FaithfulOffsets {
    lower: Vec<Float>,
    upper: Vec<Float>,
    /// `C lambda_bar M/(lambda_bar - lambda_1)` and the per-level factor.
    ratio_floor_base: Float,
    ratio_growth: Float,
}

fn build_checks(
    spec: &TargetSpectrum,
    consts: Option<&ProofConstants>,
    prec: u32,
) -> LevelChecks {
    let lambdas: Vec<Float> = spec
        .lambdas()
        .iter()
        .map(|l| Float::with_val(prec, l))
        .collect();
    let faithful = consts.map(|c| {
        let n = spec.n() as u64;
        let c1n = pow_u64(&c.c1, n, prec);
        let one = Float::with_val(prec, 1);
        let lower: Vec<Float> = c.rho.iter().map(|r| (&c1n * r).complete(prec)).collect();
        let upper: Vec<Float> = c
            .rho
            .iter()
            .zip(&c.c2)
            .map(|(r, c2)| pow_u64(&(&one + c2).complete(prec), n, prec) * r)
            .collect();
        let lam1 = &lambdas[0];
        let mut base = (&c.lambda_bar * &c.m_total).complete(prec);
        base /= (&c.lambda_bar - lam1).complete(prec);
        base *= &c.c_big;
        let growth = (&c.lambda_bar / lam1).complete(prec);
        FaithfulOffsets {
            lower,
            upper,
            ratio_floor_base: base,
            ratio_growth: growth,
        }
    });
    LevelChecks { faithful, lambdas }
}

/// Invariants every level must satisfy, per mode. An error here is a
/// precision signal, not a math bug: the caller escalates.
fn check_level(state: &LevelState, checks: &LevelChecks, level: usize, prec: u32) -> Result<()> {
    let fail = |what: String| -> Result<()> {
        Err(Error::NonPositiveParameter {
            context: format!("level {level}: {what}"),
        })
    };
    if state.f.degree() != state.g.degree() + 1 {
        return fail("degree ladder broke".into());
    }
    if !(*state.f.root(0) > 0u32) {
        return fail("lowest root not positive".into());
    }
    if !interlaces_between(&state.g, &state.f) {
        return fail("interlacing lost".into());
    }
    // Interior roots track the targets from above.
    for i in 0..state.g.degree() {
        let alpha = state.f.root(i);
        let beta = state.g.root(i);
        let target = &checks.lambdas[i];
        if !(alpha > target) {
            return fail(format!("alpha_{} not above its target", i + 1));
        }
        match &checks.faithful {
            Some(off) => {
                let lo = (target + &off.lower[i]).complete(prec);
                let hi = (target + &off.upper[i]).complete(prec);
                if !(*beta > lo && *beta < hi) {
                    return fail(format!("beta_{} left its containment window", i + 1));
                }
            }
            None => {
                if !(beta < &checks.lambdas[i + 1]) {
                    return fail(format!("beta_{} crossed the next target", i + 1));
                }
            }
        }
    }
    if let Some(off) = &checks.faithful {
        let floor = pow_u64(&off.ratio_growth, level as u64, prec) * &off.ratio_floor_base;
        if !(state.pair.neg_ratio(prec) > floor) {
            return fail("leading-coefficient budget dipped below the floor".into());
        }
    }
    Ok(())
}

// ── Driver ──────────────────────────────────────────────────────────

/// Gap-scaled perturbation ladder. `steepen` doubles the decimal
/// exponent of every rung (retry path): drift of the companion roots
/// through the recursion is controlled by the ratio between adjacent
/// rungs, so a failed run retries with a steeper ladder, not just a
/// smaller one.
fn adaptive_rho(spec: &TargetSpectrum, delta: &Float, shrink: u32, steepen: u32, prec: u32) -> Vec<Float> {
    let m = spec.m();
    let ten = Float::with_val(prec, 10);
    (1..m)
        .map(|i| {
            let e = (2 * (m - i) as u64 + 2) << steepen;
            let mut r = Float::with_val(prec, delta) / pow_u64(&ten, e, prec);
            r >>= shrink;
            r
        })
        .collect()
}

/// Mantissa bits needed to resolve the steepened ladder's lowest rung.
fn adaptive_ladder_bits(m: usize, shrink: u32, steepen: u32) -> u32 {
    let digits = (2 * (m as u64).saturating_sub(1) + 2) << steepen;
    let bits = digits * 10 / 3 + u64::from(shrink) + 256;
    bits.min(1 << 22) as u32
}

fn adaptive_mu_init(spec: &TargetSpectrum, lambda_bar: &Float, m_total: &Float, prec: u32) -> Float {
    let ratio = (lambda_bar / &spec.lambdas()[0]).complete(prec);
    let mut v = pow_u64(&ratio, spec.n() as u64, prec);
    v *= m_total;
    v *= 1000u32;
    v
}

fn recoverable(e: &Error) -> bool {
    matches!(
        e,
        Error::Bracket { .. }
            | Error::NonPositiveParameter { .. }
            | Error::DegenerateSigma { .. }
            | Error::PrecisionExhausted { .. }
    )
}

/// Exact double-width product, so the stored stiffness satisfies
/// `k/b == lambda*` as rationals.
fn exact_product(a: &Float, b: &Float) -> Float {
    Float::with_val(a.prec() + b.prec(), a * b)
}

/// Synthesize a chain whose pencil spectrum is `spec`, honoring the
/// plan's pinned masses bit-exactly.
pub fn synthesize(
    spec: &TargetSpectrum,
    plan: &MultiplicityPlan,
    mode: Mode,
    cfg: &PrecisionConfig,
) -> Result<SynthesisResult> {
    if let Some(&(index, mult)) = feasibility_violations(spec).first() {
        return Err(Error::InfeasibleSpectrum { index, mult });
    }
    let n = spec.n();
    assert_eq!(plan.n(), n, "plan and spectrum must agree");

    // Shared scalars (and the full constant family in faithful mode).
    let consts_opt: Option<ProofConstants>;
    let mut base_cfg = *cfg;
    match mode {
        Mode::Faithful => {
            let c = constants(spec, plan, CONSTANTS_PREC)?;
            let fails = c.inequality_failures(n, CONSTANTS_PREC);
            if !fails.is_empty() {
                return Err(Error::Overflow {
                    context: format!("constant inequalities failed: {fails:?}"),
                });
            }
            let (bits, tol) = c.required_faithful_bits(n, CONSTANTS_PREC)?;
            if bits > cfg.mantissa_bits() {
                base_cfg = PrecisionConfig::new(
                    bits,
                    tol,
                    cfg.escalation_factor(),
                    cfg.max_escalations(),
                )?;
            }
            consts_opt = Some(c);
        }
        Mode::Adaptive => {
            consts_opt = None;
        }
    }
    let scalar_prec = CONSTANTS_PREC;
    let (delta, lambda_bar) = match &consts_opt {
        Some(c) => (c.delta.clone(), c.lambda_bar.clone()),
        None => {
            let lambdas = spec.lambdas();
            let mut d = Float::with_val(scalar_prec, 1);
            for w in lambdas.windows(2) {
                let gap = (&w[1] - &w[0]).complete(scalar_prec);
                if gap < d {
                    d = gap;
                }
            }
            d >>= 1;
            let lb = Float::with_val(scalar_prec, 1) + &lambdas[spec.m() - 1];
            (d, lb)
        }
    };
    let m_total = plan.total_pinned_mass(scalar_prec);

    let mut rho_shrink = 0u32;
    let mut rho_steepen = 0u32;
    let mut escalations = 0u32;
    let mut attempt_cfg = base_cfg;
    let mut last_err: Option<Error> = None;
    loop {
        if escalations > cfg.max_escalations() {
            return Err(Error::PrecisionExhausted {
                escalations,
                context: last_err
                    .map(|e| e.to_string())
                    .unwrap_or_else(|| "synthesis retries exhausted".into()),
            });
        }
        // A steepened ladder needs enough bits to resolve its lowest rung.
        let run_cfg = if consts_opt.is_none() {
            let floor = adaptive_ladder_bits(spec.m(), rho_shrink, rho_steepen);
            if floor > attempt_cfg.mantissa_bits() {
                PrecisionConfig::new(
                    floor,
                    floor - 16,
                    attempt_cfg.escalation_factor(),
                    attempt_cfg.max_escalations(),
                )?
            } else {
                attempt_cfg
            }
        } else {
            attempt_cfg
        };
        let prec = run_cfg.mantissa_bits();
        let rho = match &consts_opt {
            Some(c) => c.rho.iter().map(|r| Float::with_val(prec, r)).collect(),
            None => adaptive_rho(spec, &delta, rho_shrink, rho_steepen, prec),
        };
        let mu_init = match &consts_opt {
            Some(c) => faithful_mu_init(spec, c, prec),
            None => adaptive_mu_init(spec, &lambda_bar, &m_total, prec),
        };
        match run_once(
            spec,
            plan,
            mode,
            &run_cfg,
            &rho,
            &mu_init,
            consts_opt.as_ref(),
            &delta,
        ) {
            Ok(result) => {
                if post_check(&result.chain, spec, &delta, &run_cfg)? {
                    return Ok(result);
                }
                last_err = Some(Error::NonPositiveParameter {
                    context: "a-posteriori multiplicity windows failed".into(),
                });
                if mode == Mode::Adaptive && rho_shrink < MAX_RHO_SHRINKS {
                    rho_shrink += 1;
                } else if mode == Mode::Adaptive && rho_steepen < MAX_RHO_STEEPENINGS {
                    rho_steepen += 1;
                } else {
                    escalations += 1;
                    attempt_cfg = attempt_cfg.escalate();
                }
            }
            Err(e) if recoverable(&e) => {
                last_err = Some(e);
                // Companion-root drift through the recursion is tamed by
                // the ratio between ladder rungs, not by extra bits, so
                // steepen first in adaptive mode.
                if mode == Mode::Adaptive && rho_steepen < MAX_RHO_STEEPENINGS {
                    rho_steepen += 1;
                } else {
                    escalations += 1;
                    attempt_cfg = attempt_cfg.escalate();
                }
            }
            Err(e) => return Err(e),
        }
    }
}

/// Convenience wrapper: build the default plan and synthesize.
pub fn synthesize_default(
    spec: &TargetSpectrum,
    pinned: Option<Vec<Float>>,
    mode: Mode,
    cfg: &PrecisionConfig,
) -> Result<SynthesisResult> {
    let plan = crate::plan::build_plan(spec, pinned)?;
    synthesize(spec, &plan, mode, cfg)
}

#[allow(clippy::too_many_arguments)]
fn run_once(
    spec: &TargetSpectrum,
    plan: &MultiplicityPlan,
    mode: Mode,
    cfg: &PrecisionConfig,
    rho: &[Float],
    mu_init: &Float,
    consts: Option<&ProofConstants>,
    delta: &Float,
) -> Result<SynthesisResult> {
    let n = spec.n();
    let prec = cfg.mantissa_bits();
    let checks = build_checks(spec, consts, prec);
    let widen_by = Float::with_val(prec, delta);

    let (top_f, top_g, top_pair) = init_top_with(spec, rho, mu_init, prec)?;
    let mut state = LevelState {
        f: top_f.clone(),
        g: top_g.clone(),
        pair: top_pair.clone(),
    };

    let mut records: Vec<StepRecord> = Vec::with_capacity(n.saturating_sub(1));
    for j in (1..n).rev() {
        let (next, record) = match plan.strategy_for(j) {
            Strategy::A => {
                let m_next = plan
                    .pinned_mass_for(j + 1)
                    .expect("free index always carries a pinned mass")
                    .clone();
                let (next, data) = step_a(&state, &m_next, cfg)?;
                let rec = StepRecord {
                    j,
                    strategy: StrategyTag::A,
                    lambda_star: data.lambda_star,
                    b_next: data.b_star.clone(),
                    m_next: m_next.clone(),
                    mu: next.pair.mu.clone(),
                    nu: next.pair.nu.clone(),
                    f_roots: next.f.roots().to_vec(),
                    g_roots: next.g.roots().to_vec(),
                    d_factors: Vec::new(),
                    d_factor_indices: Vec::new(),
                    m_star: m_next,
                    b_star: data.b_star,
                    tau: None,
                    widened_bracket: false,
                };
                (next, rec)
            }
            Strategy::B { lambda_index, .. } => {
                let lambda_star = &spec.lambdas()[lambda_index];
                let (next, data) = step_b(&state, lambda_star, &widen_by, cfg)?;
                let rec = StepRecord {
                    j,
                    strategy: StrategyTag::B,
                    lambda_star: Float::with_val(lambda_star.prec(), lambda_star),
                    b_next: data.b_star.clone(),
                    m_next: data.m_star.clone(),
                    mu: next.pair.mu.clone(),
                    nu: next.pair.nu.clone(),
                    f_roots: next.f.roots().to_vec(),
                    g_roots: next.g.roots().to_vec(),
                    d_factors: Vec::new(),
                    d_factor_indices: Vec::new(),
                    m_star: data.m_star,
                    b_star: data.b_star,
                    tau: Some(data.tau),
                    widened_bracket: data.widened_bracket,
                };
                (next, rec)
            }
        };
        check_level(&next, &checks, j, prec)?;
        records.push(record);
        state = next;
    }

    // Divisor ledger: D_1 = {}; a strategy-B step at index j contributes
    // its pole to every level above j.
    {
        let mut acc_vals: Vec<Float> = Vec::new();
        let mut acc_idx: Vec<usize> = Vec::new();
        for rec in records.iter_mut().rev() {
            rec.d_factors = acc_vals.clone();
            rec.d_factor_indices = acc_idx.clone();
            if rec.strategy == StrategyTag::B {
                acc_vals.push(rec.lambda_star.clone());
                if let Strategy::B { lambda_index, .. } = plan.strategy_for(rec.j) {
                    acc_idx.push(lambda_index);
                }
            }
        }
    }

    // Final assembly.
    let neg_ratio = state.pair.neg_ratio(prec);
    let m1 = plan.pinned_masses()[0].clone();
    let b1 = (&neg_ratio - &m1).complete(prec);
    if !sign_ok(&b1) {
        return Err(Error::NonPositiveParameter {
            context: "wall-side inertance".into(),
        });
    }
    let k1 = (state.f.root(0) * &neg_ratio).complete(prec);

    let mut masses = vec![m1];
    let mut stiffnesses = vec![k1];
    let mut inertances = vec![b1];
    for rec in records.iter().rev() {
        masses.push(rec.m_next.clone());
        stiffnesses.push(exact_product(&rec.lambda_star, &rec.b_next));
        inertances.push(rec.b_next.clone());
    }
    let chain = ChainSystem::new(masses, stiffnesses, inertances)?;
    debug_assert_eq!(chain.n(), n);

    Ok(SynthesisResult {
        chain,
        trace: records,
        mode,
        precision_used: prec,
        top_f,
        top_g,
        top_mu: top_pair.mu,
        top_nu: top_pair.nu,
    })
}

/// Cheap a-posteriori gate: around every target there is a Sturm-count
/// jump of exactly the requested multiplicity within a tight relative
/// window. This is what round-trip analysis will see.
fn post_check(
    chain: &ChainSystem,
    spec: &TargetSpectrum,
    delta: &Float,
    cfg: &PrecisionConfig,
) -> Result<bool> {
    let prec = cfg.mantissa_bits();
    for (i, lambda) in spec.lambdas().iter().enumerate() {
        let rel = Float::with_val(prec, POST_CHECK_REL_WINDOW) * lambda;
        let quarter_delta = (delta >> 2u32).complete(prec);
        let w = rel.min(&quarter_delta);
        let lo = (lambda - &w).complete(prec);
        let hi = (lambda + &w).complete(prec);
        let c_lo = forward::sturm_count_robust(chain, &lo, cfg)?.count;
        let c_hi = forward::sturm_count_robust(chain, &hi, cfg)?.count;
        // Counts can come back non-monotone at the noise floor when the
        // trial chain is bad; that is a failed window, not a panic.
        if c_hi.checked_sub(c_lo) != Some(spec.mults()[i]) {
            return Ok(false);
        }
    }
    Ok(true)
}

// ── Reconstruction identity ─────────────────────────────────────────

/// Residuals of the reconstruction identity at `samples` points per
/// level: the forward recurrence on the assembled chain must reproduce
/// `(mu_j/nu_1) D_j F_j` and `(nu_j/nu_1) D_j G_j`, up to roundoff
/// measured against the companion magnitudes.
pub fn reconstruction_residuals(
    result: &SynthesisResult,
    samples: usize,
    seed: u64,
    prec: u32,
) -> Vec<Float> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = result.chain.n();
    let lambda_hi = result
        .top_f
        .roots()
        .last()
        .map(|l| l.to_f64() + 1.0)
        .unwrap_or(2.0);

    // Per-level data, index j-1: (mu_j, nu_j, F_j, G_j, D_j factors).
    let mut levels: Vec<(Float, Float, RootPoly, RootPoly, Vec<Float>)> = Vec::new();
    for rec in result.trace.iter().rev() {
        levels.push((
            rec.mu.clone(),
            rec.nu.clone(),
            RootPoly::new(rec.f_roots.clone()).expect("trace roots sorted"),
            RootPoly::new(rec.g_roots.clone()).expect("trace roots sorted"),
            rec.d_factors.clone(),
        ));
    }
    let full_ledger: Vec<Float> = result
        .trace
        .iter()
        .filter(|r| r.strategy == StrategyTag::B)
        .map(|r| r.lambda_star.clone())
        .collect();
    levels.push((
        result.top_mu.clone(),
        result.top_nu.clone(),
        result.top_f.clone(),
        result.top_g.clone(),
        full_ledger,
    ));
    let nu_1 = levels[0].1.clone();

    let mut residuals = Vec::new();
    for _ in 0..samples {
        let x = Float::with_val(prec, rng.gen_range(0.0..lambda_hi).max(1e-3));
        let (vals, mags) = forward::fg_with_companion(&result.chain, &x, prec);
        for j in 1..=n {
            let (mu_j, nu_j, f_j, g_j, d_j) = &levels[j - 1];
            let mut ledger = Float::with_val(prec, 1);
            for factor in d_j {
                ledger *= (&x - factor).complete(prec);
            }
            let expected_f = f_j.eval(&(mu_j / &nu_1).complete(prec), &x, prec) * &ledger;
            let expected_g = g_j.eval(&(nu_j / &nu_1).complete(prec), &x, prec) * &ledger;
            let (fv, gv) = &vals[j - 1];
            let (sf, sg) = &mags[j - 1];
            residuals.push(((fv - &expected_f).complete(prec) / sf).abs());
            residuals.push(((gv - &expected_g).complete(prec) / sg).abs());
        }
    }
    residuals
}

// ── Serialization ───────────────────────────────────────────────────

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRecordJson {
    pub j: usize,
    pub strategy: String,
    pub lambda_star: String,
    pub b: String,
    pub m: String,
    pub mu: String,
    pub nu: String,
    pub f_roots: Vec<String>,
    pub g_roots: Vec<String>,
    pub d_factors: Vec<String>,
    pub m_star: String,
    pub b_star: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<String>,
    pub widened_bracket: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthesisResultJson {
    pub chain: ChainJson,
    pub trace: Vec<StepRecordJson>,
    pub mode: Mode,
    pub precision_used: u32,
}

impl SynthesisResultJson {
    pub fn from_result(r: &SynthesisResult, float64: bool) -> Self {
        let conv = |x: &Float| -> String {
            if float64 {
                crate::decimal::to_f64_string(x)
            } else {
                to_exact_decimal(x)
            }
        };
        let conv_list = |v: &[Float]| v.iter().map(conv).collect::<Vec<_>>();
        Self {
            chain: if float64 {
                ChainJson::from_chain_f64(&r.chain)
            } else {
                ChainJson::from_chain(&r.chain)
            },
            trace: r
                .trace
                .iter()
                .map(|rec| StepRecordJson {
                    j: rec.j,
                    strategy: match rec.strategy {
                        StrategyTag::A => "A".into(),
                        StrategyTag::B => "B".into(),
                    },
                    lambda_star: conv(&rec.lambda_star),
                    b: conv(&rec.b_next),
                    m: conv(&rec.m_next),
                    mu: conv(&rec.mu),
                    nu: conv(&rec.nu),
                    f_roots: conv_list(&rec.f_roots),
                    g_roots: conv_list(&rec.g_roots),
                    d_factors: conv_list(&rec.d_factors),
                    m_star: conv(&rec.m_star),
                    b_star: conv(&rec.b_star),
                    tau: rec.tau.as_ref().map(conv),
                    widened_bracket: rec.widened_bracket,
                })
                .collect(),
            mode: r.mode,
            precision_used: r.precision_used,
        }
    }
}

/// CSV trace export, ascending level order.
/// Columns: `j,strategy,lambda_star,b,m,mu_over_nu`.
pub fn trace_csv(result: &SynthesisResult) -> String {
    use crate::decimal::to_science_string;
    let mut out = String::from("j,strategy,lambda_star,b,m,mu_over_nu\n");
    for rec in result.trace.iter().rev() {
        let prec = rec.mu.prec();
        let ratio = (&rec.mu / &rec.nu).complete(prec);
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            rec.j,
            match rec.strategy {
                StrategyTag::A => "A",
                StrategyTag::B => "B",
            },
            to_science_string(&rec.lambda_star, 24),
            to_science_string(&rec.b_next, 24),
            to_science_string(&rec.m_next, 24),
            to_science_string(&ratio, 24),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::build_plan;

    fn f(v: f64) -> Float {
        Float::with_val(256, v)
    }

    fn poly(roots: &[f64]) -> RootPoly {
        RootPoly::new(roots.iter().map(|&r| f(r)).collect()).unwrap()
    }

    fn cfg() -> PrecisionConfig {
        PrecisionConfig::with_bits(256)
    }

    /// Residual of the two defining identities of a step at one point,
    /// relative to the magnitude of the largest term.
    fn identity_residuals(
        state: &LevelState,
        next: &LevelState,
        lambda_star: &Float,
        m_star: &Float,
        b_star: &Float,
        is_b: bool,
        x: &Float,
    ) -> (Float, Float) {
        let prec = 256;
        let f_term = state.f.eval(&state.pair.mu, x, prec);
        let mut g_term = state.g.eval(&state.pair.nu, x, prec);
        g_term *= m_star;
        g_term *= x;
        let pole = (lambda_star - x).complete(prec);
        let f0_term = next.f.eval(&next.pair.mu, x, prec) * b_star;
        let first = if is_b {
            // mu F = -m* nu x G - b* mu0 F0
            f_term.clone() + &g_term + &f0_term
        } else {
            // mu F = -m* nu x G + b* mu0 (lam*-x) F0 ... F0 here excludes
            // the pole factor, so multiply it in.
            f_term.clone() + &g_term - (&f0_term * &pole).complete(prec)
        };
        let scale1 = f_term.clone().abs() + g_term.clone().abs() + f0_term.clone().abs() + f(1e-300);
        // Second identity: nu G (strategy A) or nu (x - lam*) G (strategy B)
        //   = mu0 F0 + b* nu0 (lam*-x) G0
        let lhs = if is_b {
            let mut v = state.g.eval(&state.pair.nu, x, prec);
            v *= (x - lambda_star).complete(prec);
            v
        } else {
            state.g.eval(&state.pair.nu, x, prec)
        };
        let rhs_a = next.f.eval(&next.pair.mu, x, prec);
        let mut rhs_b = next.g.eval(&next.pair.nu, x, prec);
        rhs_b *= b_star;
        rhs_b *= &pole;
        let second = lhs.clone() - &rhs_a - &rhs_b;
        let scale2 = lhs.clone().abs() + rhs_a.clone().abs() + rhs_b.clone().abs() + f(1e-300);
        (first.abs() / scale1, second.abs() / scale2)
    }

    #[test]
    fn step_a_base_case_and_identity() {
        // p = 2: F = (x-1)(x-2), G = (x-1.25), big coefficient budget.
        let state = LevelState {
            f: poly(&[1.0, 2.0]),
            g: poly(&[1.25]),
            pair: ScaledPair::new(f(1000.0), f(-1.0)).unwrap(),
        };
        let (next, data) = step_a(&state, &f(1.0), &cfg()).unwrap();
        assert_eq!(next.f.degree(), 1);
        assert_eq!(next.g.degree(), 0);
        let a1 = next.f.root(0).to_f64();
        assert!(a1 > 1.0 && a1 < 1.25, "alpha'_1 = {a1}");
        assert!(data.lambda_star > f(2.0));
        assert!(data.b_star > 0);
        for x in [0.3, 0.9, 1.7, 2.9] {
            let (r1, r2) = identity_residuals(
                &state,
                &next,
                &data.lambda_star,
                &f(1.0),
                &data.b_star,
                false,
                &f(x),
            );
            assert!(r1 < f(1e-60), "first identity residual {r1} at {x}");
            assert!(r2 < f(1e-60), "second identity residual {r2} at {x}");
        }
    }

    #[test]
    fn step_a_degree_three_against_division_oracle() {
        // F roots (1,2,3), G roots (1.25, 2.25), mu=100, nu=-1, m*=1.
        let state = LevelState {
            f: poly(&[1.0, 2.0, 3.0]),
            g: poly(&[1.25, 2.25]),
            pair: ScaledPair::new(f(100.0), f(-1.0)).unwrap(),
        };
        let (next, data) = step_a(&state, &f(1.0), &cfg()).unwrap();
        // Coefficient oracle: expand H = mu F + m* nu x G, divide by
        // (x - lam*) and the leading factor, compare values of F0.
        let expand = |roots: &[f64], scale: f64| -> Vec<f64> {
            let mut c = vec![scale];
            for &r in roots {
                let mut next_c = vec![0.0; c.len() + 1];
                for (i, &ci) in c.iter().enumerate() {
                    next_c[i + 1] += ci;
                    next_c[i] -= r * ci;
                }
                c = next_c;
            }
            c
        };
        let mut h = expand(&[1.0, 2.0, 3.0], 100.0);
        let g = expand(&[1.25, 2.25], -1.0);
        for (i, gi) in g.iter().enumerate() {
            h[i + 1] += gi; // + m* nu x G with m* = 1
        }
        // Synthetic division by (x - lam*).
        let lam = data.lambda_star.to_f64();
        let mut quo = vec![0.0; h.len() - 1];
        let mut carry = 0.0;
        for i in (0..h.len()).rev() {
            let v = h[i] + carry;
            if i == 0 {
                assert!(v.abs() < 1e-8, "remainder {v}");
            } else {
                quo[i - 1] = v;
                carry = v * lam;
            }
        }
        let lead = *quo.last().unwrap();
        for (i, root) in next.f.roots().iter().enumerate() {
            let r = root.to_f64();
            let mut val = 0.0;
            for &q in quo.iter().rev() {
                val = val * r + q;
            }
            assert!(
                (val / lead).abs() < 1e-8,
                "oracle quotient not zero at extracted root {i}"
            );
        }
    }

    #[test]
    fn step_b_base_case_closed_forms() {
        // p = 1: F = x - alpha_1, G = 1; the closed forms are explicit.
        let alpha = 1.5;
        let lam = 3.0;
        let mu = 80.0;
        let state = LevelState {
            f: poly(&[alpha]),
            g: RootPoly::constant(),
            pair: ScaledPair::new(f(mu), f(-1.0)).unwrap(),
        };
        let (next, data) = step_b(&state, &f(lam), &f(0.25), &cfg()).unwrap();
        let ratio = mu; // -(mu/nu) with nu = -1
        let expect_m = ratio * (lam - alpha) / lam;
        let expect_b = ratio * 2.0 * alpha / lam;
        let expect_nu0 = 0.25 * (1.0 / mu) * (lam / alpha);
        assert!((data.m_star.to_f64() - expect_m).abs() < 1e-40);
        assert!((data.b_star.to_f64() - expect_b).abs() < 1e-40);
        assert_eq!(data.tau.to_f64(), 0.5);
        assert_eq!(next.pair.mu.to_f64(), -0.5);
        assert!((next.pair.nu.to_f64() - expect_nu0).abs() < 1e-40);
        assert_eq!(next.f.roots().len(), 1);
        assert_eq!(next.f.root(0).to_f64(), lam);
        assert_eq!(next.g.degree(), 0);
    }

    #[test]
    fn step_b_inserts_pole_exactly_and_identity_holds() {
        let state = LevelState {
            f: poly(&[1.0, 2.5]),
            g: poly(&[1.3]),
            pair: ScaledPair::new(f(50.0), f(-1.0)).unwrap(),
        };
        let lam = f(3.0);
        let (next, data) = step_b(&state, &lam, &f(0.25), &cfg()).unwrap();
        assert_eq!(next.f.degree(), 2);
        assert_eq!(*next.f.root(1), lam, "pole inserted exactly");
        assert!(data.m_star > 0 && data.b_star > 0);
        for x in [0.4, 1.1, 1.9, 2.8, 3.4] {
            let (r1, r2) = identity_residuals(
                &state,
                &next,
                &lam,
                &data.m_star,
                &data.b_star,
                true,
                &f(x),
            );
            assert!(r1 < f(1e-60), "first identity residual {r1} at {x}");
            assert!(r2 < f(1e-60), "second identity residual {r2} at {x}");
        }
    }

    #[test]
    fn init_top_places_ladder_roots() {
        let spec = TargetSpectrum::from_f64(&[1.0, 2.0, 3.0], &[1, 1, 3], 192).unwrap();
        let plan = build_plan(&spec, None).unwrap();
        let c = constants(&spec, &plan, 320).unwrap();
        // The ladder offsets have exponents in the tens of thousands, so
        // the working precision has to come from the budget estimate.
        let (bits, _) = c.required_faithful_bits(spec.n(), 320).unwrap();
        let (top_f, top_g, pair) = init_top(&spec, &c, bits).unwrap();
        assert_eq!(top_f.degree(), 3);
        assert_eq!(top_g.degree(), 2);
        assert!((pair.mu.clone() * &pair.nu) < 0u32);
        for i in 0..2 {
            let diff = (top_g.root(i) - top_f.root(i)).complete(bits);
            let rel = ((&diff - &c.rho[i]).complete(bits) / &c.rho[i]).abs();
            assert!(rel < Float::with_val(64, 1e-30));
        }
    }

    #[test]
    fn synthesize_two_distinct_eigenvalues() {
        let spec = TargetSpectrum::from_f64(&[1.0, 2.0], &[1, 1], 192).unwrap();
        let plan = build_plan(&spec, None).unwrap();
        let result = synthesize(&spec, &plan, Mode::Adaptive, &cfg()).unwrap();
        assert_eq!(result.chain.n(), 2);
        // Pinned masses land bit-exactly.
        assert_eq!(result.chain.mass(1), &plan.pinned_masses()[0]);
        assert_eq!(result.chain.mass(2), &plan.pinned_masses()[1]);
        // Spectrum round trip.
        let tol = Float::with_val(256, 1e-12);
        let rep = forward::spectrum(&result.chain, &cfg(), &tol).unwrap();
        assert_eq!(rep.multiplicities, vec![1, 1]);
        assert!((rep.eigenvalues[0].to_f64() - 1.0).abs() < 1e-10);
        assert!((rep.eigenvalues[1].to_f64() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn synthesize_with_multiplicity_and_ledger() {
        let spec = TargetSpectrum::from_f64(&[1.0, 4.0], &[1, 2], 192).unwrap();
        let plan = build_plan(&spec, None).unwrap();
        let result = synthesize(&spec, &plan, Mode::Adaptive, &cfg()).unwrap();
        assert_eq!(result.chain.n(), 3);
        let b_steps: Vec<_> = result
            .trace
            .iter()
            .filter(|r| r.strategy == StrategyTag::B)
            .collect();
        assert_eq!(b_steps.len(), 1);
        assert_eq!(b_steps[0].lambda_star.to_f64(), 4.0);
        // k/b at the scheduled index is exactly the eigenvalue.
        let k2 = result.chain.stiffness(2);
        let b2 = result.chain.inertance(2);
        let ratio = Float::with_val(512, k2 / b2);
        assert_eq!(ratio, Float::with_val(512, 4));
        let tol = Float::with_val(256, 1e-12);
        let rep = forward::spectrum(&result.chain, &cfg(), &tol).unwrap();
        assert_eq!(rep.multiplicities, vec![1, 2]);
        assert!((rep.eigenvalues[1].to_f64() - 4.0).abs() < 1e-10);
    }

    #[test]
    fn reconstruction_residuals_are_roundoff_sized() {
        let spec = TargetSpectrum::from_f64(&[1.0, 4.0], &[1, 2], 192).unwrap();
        let plan = build_plan(&spec, None).unwrap();
        let result = synthesize(&spec, &plan, Mode::Adaptive, &cfg()).unwrap();
        let residuals = reconstruction_residuals(&result, 5, 7, 256);
        let bound = Float::with_val(256, 1) >> 128u32;
        for r in &residuals {
            assert!(r < &bound, "residual {r}");
        }
    }

    #[test]
    fn synthesized_chain_agrees_with_dense_oracle() {
        // Round trip through the exact-rational route: the coefficient
        // polynomial of the synthesized chain must carry one root near 1
        // and a double cluster at 4.
        let spec = TargetSpectrum::from_f64(&[1.0, 4.0], &[1, 2], 192).unwrap();
        let plan = build_plan(&spec, None).unwrap();
        let result = synthesize(&spec, &plan, Mode::Adaptive, &cfg()).unwrap();
        let coeffs = crate::oracle::dense_charpoly(&result.chain).unwrap();
        let roots = crate::oracle::charpoly_roots(&coeffs, 80, 256).unwrap();
        for (target, mult) in [(1.0, 1usize), (4.0, 2)] {
            let found: usize = roots
                .iter()
                .filter(|(x, _)| (x.to_f64() - target).abs() < 1e-9 * target)
                .map(|(_, m)| *m)
                .sum();
            assert_eq!(found, mult, "cluster at {target}");
        }
        assert_eq!(roots.iter().map(|(_, m)| m).sum::<usize>(), 3);
    }

    #[test]
    fn infeasible_spectrum_is_rejected() {
        let spec = TargetSpectrum::from_f64(&[1.0, 2.0], &[2, 1], 192).unwrap();
        assert!(matches!(
            synthesize_default(&spec, None, Mode::Adaptive, &cfg()),
            Err(Error::InfeasibleSpectrum { .. })
        ));
    }
}
