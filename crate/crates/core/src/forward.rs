//! Forward eigensolver for the pencil `K - lambda (M+B)`.
//!
//! The pencil is never materialized here: determinants and leading
//! principal minors come from the chain's three-term recurrences, and
//! eigenvalues from inertia (Sturm) counts driven by bisection. The
//! dense, coefficient-level oracle lives in [`crate::oracle`].

use rug::ops::CompleteRound;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::chain::ChainSystem;
use crate::decimal::to_exact_decimal;
use crate::error::{Error, Result};
use crate::precision::PrecisionConfig;

/// One inertia sample: `count` pencil eigenvalues lie strictly below `sigma`.
#[derive(Debug, Clone)]
pub struct SturmSample {
    pub sigma: Float,
    pub count: usize,
}

/// Values of the determinant recurrence at one point:
/// `g_1 = 1`, `f_1 = k_1 - lambda (m_1 + b_1)`, then
/// `g_{j+1} = f_j + (k_{j+1} - lambda b_{j+1}) g_j` and
/// `f_{j+1} = -lambda m_{j+1} g_{j+1} + (k_{j+1} - lambda b_{j+1}) f_j`.
/// `f_n` equals `det(K - lambda (M+B))`.
pub fn fg_sequence(chain: &ChainSystem, lambda: &Float, prec: u32) -> FgValues {
    fg_with_companion(chain, lambda, prec).0
}

/// Levels of the recurrence: `(f_j, g_j)` for `j = 1..=n`.
pub type FgValues = Vec<(Float, Float)>;

/// Same recurrence, plus a companion run with every term replaced by its
/// absolute value. The companion bounds the magnitude the computation
/// moves through, so `|f_n| / companion` is a roundoff-relative residual.
pub fn fg_with_companion(chain: &ChainSystem, lambda: &Float, prec: u32) -> (FgValues, FgValues) {
    let n = chain.n();
    let lam = Float::with_val(prec, lambda);
    let lam_abs = lam.clone().abs();
    let mut vals = Vec::with_capacity(n);
    let mut mags = Vec::with_capacity(n);

    let mb = (chain.mass(1) + chain.inertance(1)).complete(prec);
    let f1 = chain.stiffness(1) - (&lam * &mb).complete(prec);
    let s_f1 = chain.stiffness(1) + (&lam_abs * &mb).complete(prec);
    vals.push((f1, Float::with_val(prec, 1)));
    mags.push((s_f1, Float::with_val(prec, 1)));
    // vals[j] = (f_{j+1}, g_{j+1}) 0-based; the g component of level 1 is 1.
    let mut f = vals[0].0.clone();
    let mut g = Float::with_val(prec, 1);
    let mut sf = mags[0].0.clone();
    let mut sg = Float::with_val(prec, 1);

    for j in 2..=n {
        let pole = chain.stiffness(j) - (&lam * chain.inertance(j)).complete(prec);
        let pole_abs = chain.stiffness(j) + (&lam_abs * chain.inertance(j)).complete(prec);
        let g_next = Float::with_val(prec, &pole * &g) + &f;
        let f_next = Float::with_val(prec, &pole * &f) - (&lam * chain.mass(j)).complete(prec) * &g_next;
        let sg_next = Float::with_val(prec, &pole_abs * &sg) + &sf;
        let sf_next = Float::with_val(prec, &pole_abs * &sf)
            + (&lam_abs * chain.mass(j)).complete(prec) * &sg_next;
        vals.push((f_next.clone(), g_next.clone()));
        mags.push((sf_next.clone(), sg_next.clone()));
        f = f_next;
        g = g_next;
        sf = sf_next;
        sg = sg_next;
    }
    (vals, mags)
}

/// Values of `f_n, f_n', ..., f_n^(r)` at `lambda` (and the same for
/// `g_n`), obtained by formally differentiating the recurrence, together
/// with companion magnitude bounds for residual scaling.
pub struct FgDerivatives {
    /// `f[r]` is the r-th derivative of `f_n` at the sample point.
    pub f: Vec<Float>,
    pub g: Vec<Float>,
    /// Companion magnitudes, same indexing.
    pub f_scale: Vec<Float>,
    pub g_scale: Vec<Float>,
}

pub fn fg_derivatives(
    chain: &ChainSystem,
    lambda: &Float,
    max_order: usize,
    prec: u32,
) -> FgDerivatives {
    let n = chain.n();
    let r_len = max_order + 1;
    let lam = Float::with_val(prec, lambda);
    let lam_abs = lam.clone().abs();
    let zero = || Float::with_val(prec, 0);

    // Level 1 seeds.
    let mb = (chain.mass(1) + chain.inertance(1)).complete(prec);
    let mut f: Vec<Float> = (0..r_len).map(|_| zero()).collect();
    let mut g: Vec<Float> = (0..r_len).map(|_| zero()).collect();
    let mut sf: Vec<Float> = (0..r_len).map(|_| zero()).collect();
    let mut sg: Vec<Float> = (0..r_len).map(|_| zero()).collect();
    f[0] = chain.stiffness(1) - (&lam * &mb).complete(prec);
    sf[0] = chain.stiffness(1) + (&lam_abs * &mb).complete(prec);
    if max_order >= 1 {
        f[1] = -mb.clone();
        sf[1] = mb.clone();
    }
    g[0] = Float::with_val(prec, 1);
    sg[0] = Float::with_val(prec, 1);

    for j in 2..=n {
        let m_j = chain.mass(j);
        let b_j = chain.inertance(j);
        let pole = chain.stiffness(j) - (&lam * b_j).complete(prec);
        let pole_abs = chain.stiffness(j) + (&lam_abs * b_j).complete(prec);
        let mut g_next: Vec<Float> = (0..r_len).map(|_| zero()).collect();
        let mut f_next: Vec<Float> = (0..r_len).map(|_| zero()).collect();
        let mut sg_next: Vec<Float> = (0..r_len).map(|_| zero()).collect();
        let mut sf_next: Vec<Float> = (0..r_len).map(|_| zero()).collect();
        for r in 0..r_len {
            let rf = Float::with_val(prec, r as u32);
            let mut gv = (&f[r] + &pole * &g[r]).complete(prec);
            let mut sgv = (&sf[r] + &pole_abs * &sg[r]).complete(prec);
            if r >= 1 {
                gv -= (&rf * b_j).complete(prec) * &g[r - 1];
                sgv += (&rf * b_j).complete(prec) * &sg[r - 1];
            }
            g_next[r] = gv;
            sg_next[r] = sgv;

            let mut fv = (&pole * &f[r]).complete(prec)
                - (&lam * m_j).complete(prec) * &g_next[r];
            let mut sfv = (&pole_abs * &sf[r]).complete(prec)
                + (&lam_abs * m_j).complete(prec) * &sg_next[r];
            if r >= 1 {
                fv -= (&rf * m_j).complete(prec) * &g_next[r - 1];
                fv -= (&rf * b_j).complete(prec) * &f[r - 1];
                sfv += (&rf * m_j).complete(prec) * &sg_next[r - 1];
                sfv += (&rf * b_j).complete(prec) * &sf[r - 1];
            }
            f_next[r] = fv;
            sf_next[r] = sfv;
        }
        f = f_next;
        g = g_next;
        sf = sf_next;
        sg = sg_next;
    }
    FgDerivatives {
        f,
        g,
        f_scale: sf,
        g_scale: sg,
    }
}

/// Inertia of `K - sigma (M+B)`: sign changes in the sequence of leading
/// principal minors `(1, d_1, ..., d_n)`, computed by the tridiagonal
/// three-term recurrence. Equals the number of pencil eigenvalues
/// strictly below `sigma` when no minor vanishes.
pub fn sturm_count(chain: &ChainSystem, sigma: &Float, prec: u32) -> Result<SturmSample> {
    let count = sturm_count_leading_block(chain, chain.n(), sigma, prec)?;
    Ok(SturmSample {
        sigma: Float::with_val(prec, sigma),
        count,
    })
}

/// Sturm count restricted to the leading `order x order` block of the
/// full pencil (the block whose determinant is `g_{order+1}` for
/// `order < n`).
pub fn sturm_count_leading_block(
    chain: &ChainSystem,
    order: usize,
    sigma: &Float,
    prec: u32,
) -> Result<usize> {
    let n = chain.n();
    assert!(order >= 1 && order <= n);
    let sig = Float::with_val(prec, sigma);
    let mut changes = 0usize;
    let mut prev2 = Float::with_val(prec, 1); // d_{j-2}
    let mut prev1 = Float::with_val(prec, 1); // d_{j-1}, seeded with d_0 = 1
    let mut prev_negative = false;
    for j in 1..=order {
        // Pencil diagonal entry j.
        let mut kd = Float::with_val(prec, chain.stiffness(j));
        let mut mbd = (chain.mass(j) + chain.inertance(j)).complete(prec);
        if j < n {
            kd += chain.stiffness(j + 1);
            mbd += chain.inertance(j + 1);
        }
        let a = kd - (&sig * &mbd).complete(prec);
        let d = if j == 1 {
            a
        } else {
            // Off-diagonal entry between rows j-1 and j: -k_j + sigma b_j.
            let c = (&sig * chain.inertance(j)).complete(prec) - chain.stiffness(j);
            (&a * &prev1).complete(prec) - (&c * &c).complete(prec) * &prev2
        };
        if d.is_zero() {
            return Err(Error::DegenerateSigma {
                sigma: sig.to_string(),
            });
        }
        if d.is_sign_negative() != prev_negative {
            changes += 1;
        }
        prev_negative = d.is_sign_negative();
        prev2 = std::mem::replace(&mut prev1, d);
    }
    Ok(changes)
}

/// Retry wrapper: on a vanishing minor, perturb `sigma` by relative
/// `2^-(mantissa_bits/2)` with alternating sign and growing magnitude.
///
/// A zero that survives every perturbation is structural: two adjacent
/// rows that are numerically rank-deficient at this precision keep the
/// minor pinned at zero over a whole sigma interval. That is a
/// precision problem, reported as such so callers escalate.
pub fn sturm_count_robust(chain: &ChainSystem, sigma: &Float, cfg: &PrecisionConfig) -> Result<SturmSample> {
    let prec = cfg.mantissa_bits();
    let base = Float::with_val(prec, sigma);
    let step = {
        let mag = base.clone().abs().max(&Float::with_val(prec, 1));
        mag >> (cfg.mantissa_bits() / 2)
    };
    let mut attempt = 0i32;
    loop {
        let trial = if attempt == 0 {
            base.clone()
        } else {
            let k = (attempt + 1) / 2;
            let signed = if attempt % 2 == 1 { k } else { -k };
            Float::with_val(prec, signed) * &step + &base
        };
        match sturm_count(chain, &trial, prec) {
            Ok(s) => return Ok(s),
            Err(Error::DegenerateSigma { .. }) if attempt < 64 => attempt += 1,
            Err(Error::DegenerateSigma { sigma }) => {
                return Err(Error::PrecisionExhausted {
                    escalations: 0,
                    context: format!("minor pinned at zero near sigma = {sigma} at {prec} bits"),
                })
            }
            Err(e) => return Err(e),
        }
    }
}

/// Pencil-Gershgorin upper bound on the spectrum:
/// `1 + max_j (row sum of |K|) / ((M+B) diagonal - off-diagonal row sum)`.
/// Always valid because `M+B` is strictly diagonally dominant with
/// margin `m_j`.
pub fn pencil_upper_bound(chain: &ChainSystem, prec: u32) -> Float {
    let n = chain.n();
    let mut best = Float::with_val(prec, 0);
    for j in 1..=n {
        let mut knum = Float::with_val(prec, chain.stiffness(j));
        if j > 1 {
            knum += chain.stiffness(j);
        }
        if j < n {
            knum += chain.stiffness(j + 1);
            knum += chain.stiffness(j + 1);
        }
        // (M+B)_jj minus |off-diagonal| row sum collapses to m_j
        // (row 1 keeps its wall-side inertance b_1).
        let mut margin = Float::with_val(prec, chain.mass(j));
        if j == 1 {
            margin += chain.inertance(1);
        }
        let ratio = knum / margin;
        if ratio > best {
            best = ratio;
        }
    }
    best + 1u32
}

/// Spectrum of the pencil: eigenvalues with operational multiplicities.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<Float>,
    pub multiplicities: Vec<usize>,
    /// `|f_n(lambda_i)|` scaled by the companion magnitude bound.
    pub residuals: Vec<Float>,
    pub cluster_tol: Float,
}

/// Generic Sturm bisection: localize every count jump of `count` over
/// `(0, upper]` to relative width below `cluster_tol`, then merge
/// clusters closer than the tolerance.
fn bisect_counts<C>(
    count: &C,
    total: usize,
    upper: &Float,
    cluster_tol: &Float,
    prec: u32,
) -> Result<Vec<(Float, usize)>>
where
    C: Fn(&Float) -> Result<usize>,
{
    let mut clamped = 0usize;
    let mut out: Vec<(Float, usize)> = Vec::new();
    let mut stack = vec![(
        Float::with_val(prec, 0),
        Float::with_val(prec, upper),
        0usize,
        total,
    )];
    while let Some((lo, hi, c_lo, c_hi)) = stack.pop() {
        if c_hi == c_lo {
            continue;
        }
        let mid = (&lo + &hi).complete(prec) >> 1u32;
        let width = (&hi - &lo).complete(prec);
        // Relative to the upper endpoint, so small eigenvalues are
        // localized to true relative width.
        if width <= (cluster_tol * &hi).complete(prec) {
            out.push((mid, c_hi - c_lo));
            continue;
        }
        if mid == lo || mid == hi {
            return Err(Error::PrecisionExhausted {
                escalations: 0,
                context: format!("cannot subdivide ({lo}, {hi}) at {prec} bits"),
            });
        }
        // A count outside the segment's range means the minors were
        // evaluated inside a cancellation-heavy cluster the working
        // precision cannot resolve; clamp to keep the bookkeeping sound
        // and report the stall so the caller escalates.
        let raw = count(&mid)?;
        let c_mid = raw.clamp(c_lo.min(c_hi), c_hi.max(c_lo));
        if c_mid != raw {
            clamped += 1;
        }
        stack.push((lo, mid.clone(), c_lo, c_mid));
        stack.push((mid, hi, c_mid, c_hi));
    }
    if clamped > 0 {
        return Err(Error::PrecisionExhausted {
            escalations: 0,
            context: format!("{clamped} inconsistent inertia counts at {prec} bits"),
        });
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite eigenvalues"));

    // Merge localized jumps whose representatives fall within the
    // cluster tolerance of each other (an unlucky split can land a
    // bisection point inside a tight cluster).
    let mut merged: Vec<(Float, usize)> = Vec::new();
    for (x, m) in out {
        if let Some((last_x, last_m)) = merged.last_mut() {
            let gap = (&x - &*last_x).complete(prec);
            if gap <= (cluster_tol * &x).complete(prec) {
                // Multiplicity-weighted representative.
                let wm = Float::with_val(prec, *last_m as u32);
                let wx = Float::with_val(prec, m as u32);
                *last_x = ((&*last_x * &wm).complete(prec) + (&x * &wx).complete(prec))
                    / Float::with_val(prec, (*last_m + m) as u32);
                *last_m += m;
                continue;
            }
        }
        merged.push((x, m));
    }
    Ok(merged)
}

/// Compute the full spectrum with multiplicities detected as Sturm-count
/// jumps localized within `cluster_tol` (relative). Escalates precision
/// when bisection stalls or counts go inconsistent, up to the
/// configured budget.
pub fn spectrum(chain: &ChainSystem, cfg: &PrecisionConfig, cluster_tol: &Float) -> Result<SpectrumReport> {
    let violations = chain.validate();
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    let mut attempt_cfg = *cfg;
    let mut escalations = 0;
    loop {
        match spectrum_once(chain, &attempt_cfg, cluster_tol) {
            Err(Error::PrecisionExhausted { .. }) if escalations < cfg.max_escalations() => {
                attempt_cfg = attempt_cfg.escalate();
                escalations += 1;
            }
            Err(Error::PrecisionExhausted { context, .. }) => {
                return Err(Error::PrecisionExhausted {
                    escalations,
                    context,
                })
            }
            other => return other,
        }
    }
}

fn spectrum_once(chain: &ChainSystem, cfg: &PrecisionConfig, cluster_tol: &Float) -> Result<SpectrumReport> {
    let n = chain.n();
    let prec = cfg.mantissa_bits();
    let tol = Float::with_val(prec, cluster_tol);
    let mut upper = pencil_upper_bound(chain, prec);
    let mut doublings = 0;
    while sturm_count_robust(chain, &upper, cfg)?.count < n {
        upper <<= 1;
        doublings += 1;
        if doublings > 80 {
            // The Gershgorin quotient always captures the spectrum in
            // exact arithmetic; failing to see all n eigenvalues under
            // it means the counts are noise at this precision.
            return Err(Error::PrecisionExhausted {
                escalations: 0,
                context: format!("inertia count below n under the spectral bound at {prec} bits"),
            });
        }
    }
    let count = |x: &Float| sturm_count_robust(chain, x, cfg).map(|s| s.count);
    let clusters = bisect_counts(&count, n, &upper, &tol, prec)?;
    let mut eigenvalues = Vec::with_capacity(clusters.len());
    let mut multiplicities = Vec::with_capacity(clusters.len());
    let mut residuals = Vec::with_capacity(clusters.len());
    for (x, m) in clusters {
        let (vals, mags) = fg_with_companion(chain, &x, prec);
        let fnv = vals.last().expect("n >= 1").0.clone().abs();
        let sc = &mags.last().expect("n >= 1").0;
        residuals.push(fnv / sc);
        eigenvalues.push(x);
        multiplicities.push(m);
    }
    debug_assert_eq!(multiplicities.iter().sum::<usize>(), n);
    Ok(SpectrumReport {
        eigenvalues,
        multiplicities,
        residuals,
        cluster_tol: tol,
    })
}

/// Eigenvalues of the leading `order x order` block pencil (the roots of
/// `g_{order+1}` when `order < n`), localized like [`spectrum`], with
/// the same escalation ladder.
pub fn leading_block_roots(
    chain: &ChainSystem,
    order: usize,
    cfg: &PrecisionConfig,
    cluster_tol: &Float,
) -> Result<Vec<(Float, usize)>> {
    let mut attempt_cfg = *cfg;
    let mut escalations = 0;
    loop {
        match leading_block_roots_once(chain, order, &attempt_cfg, cluster_tol) {
            Err(Error::PrecisionExhausted { .. }) if escalations < cfg.max_escalations() => {
                attempt_cfg = attempt_cfg.escalate();
                escalations += 1;
            }
            other => return other,
        }
    }
}

fn leading_block_roots_once(
    chain: &ChainSystem,
    order: usize,
    cfg: &PrecisionConfig,
    cluster_tol: &Float,
) -> Result<Vec<(Float, usize)>> {
    let prec = cfg.mantissa_bits();
    let tol = Float::with_val(prec, cluster_tol);
    let mut upper = pencil_upper_bound(chain, prec);
    let robust = |x: &Float| -> Result<usize> {
        let base = Float::with_val(prec, x);
        let step = {
            let mag = base.clone().abs().max(&Float::with_val(prec, 1));
            mag >> (cfg.mantissa_bits() / 2)
        };
        let mut attempt = 0i32;
        loop {
            let trial = if attempt == 0 {
                base.clone()
            } else {
                let k = (attempt + 1) / 2;
                let signed = if attempt % 2 == 1 { k } else { -k };
                Float::with_val(prec, signed) * &step + &base
            };
            match sturm_count_leading_block(chain, order, &trial, prec) {
                Ok(c) => return Ok(c),
                Err(Error::DegenerateSigma { .. }) if attempt < 64 => attempt += 1,
                Err(Error::DegenerateSigma { sigma }) => {
                    return Err(Error::PrecisionExhausted {
                        escalations: 0,
                        context: format!("minor pinned at zero near sigma = {sigma} at {prec} bits"),
                    })
                }
                Err(e) => return Err(e),
            }
        }
    };
    let mut doublings = 0;
    while robust(&upper)? < order {
        upper <<= 1;
        doublings += 1;
        if doublings > 80 {
            return Err(Error::PrecisionExhausted {
                escalations: 0,
                context: format!("block inertia count below order under the spectral bound at {prec} bits"),
            });
        }
    }
    bisect_counts(&robust, order, &upper, &tol, prec)
}

// ── JSON interface ──────────────────────────────────────────────────

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumReportJson {
    pub eigenvalues: Vec<String>,
    pub multiplicities: Vec<usize>,
    pub residuals: Vec<String>,
}

impl SpectrumReportJson {
    pub fn from_report(r: &SpectrumReport, float64: bool) -> Self {
        let conv = |v: &[Float]| -> Vec<String> {
            if float64 {
                v.iter().map(crate::decimal::to_f64_string).collect()
            } else {
                v.iter().map(to_exact_decimal).collect()
            }
        };
        Self {
            eigenvalues: conv(&r.eigenvalues),
            multiplicities: r.multiplicities.clone(),
            residuals: conv(&r.residuals),
        }
    }
}
