//! Real-rooted polynomials in product form, bracketed root extraction,
//! and interlacing predicates.
//!
//! Polynomials are stored by their sorted real roots, never by
//! coefficients: every polynomial the recursion touches is real-rooted
//! with known root brackets, and the product form keeps sign information
//! exact across the enormous dynamic ranges the proof constants produce.

use rug::ops::CompleteRound;
use rug::Float;
use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::precision::PrecisionConfig;

/// A monic-up-to-scale real-rooted polynomial, represented by its
/// strictly increasing list of roots. Repeated roots are never stored
/// here; multiplicity lives in explicit linear-factor lists elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct RootPoly {
    roots: Vec<Float>,
}

impl RootPoly {
    /// Build from roots, which must be finite and strictly increasing.
    pub fn new(roots: Vec<Float>) -> Result<Self> {
        for w in roots.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Parse(format!(
                    "roots must be strictly increasing: {} >= {}",
                    w[0], w[1]
                )));
            }
        }
        if roots.iter().any(|r| !r.is_finite()) {
            return Err(Error::Parse("roots must be finite".into()));
        }
        Ok(Self { roots })
    }

    /// The degree-zero polynomial (empty root list).
    pub fn constant() -> Self {
        Self { roots: Vec::new() }
    }

    pub fn degree(&self) -> usize {
        self.roots.len()
    }

    pub fn roots(&self) -> &[Float] {
        &self.roots
    }

    pub fn root(&self, i: usize) -> &Float {
        &self.roots[i]
    }

    /// Evaluate `scale * prod (x - root_i)` at working precision `prec`.
    pub fn eval(&self, scale: &Float, x: &Float, prec: u32) -> Float {
        let mut acc = Float::with_val(prec, scale);
        for r in &self.roots {
            let factor = (x - r).complete(prec);
            acc *= factor;
        }
        acc
    }

    /// Evaluate the monic polynomial `prod (x - root_i)`.
    pub fn eval_monic(&self, x: &Float, prec: u32) -> Float {
        let one = Float::with_val(prec, 1);
        self.eval(&one, x, prec)
    }

    /// Exact sign of `scale * prod (x - root_i)`, computed from the parity
    /// of roots above `x`; immune to underflow of the magnitude.
    /// Returns 0 when `x` coincides with a stored root or `scale` is zero.
    pub fn sign_at(&self, scale: &Float, x: &Float) -> i32 {
        let scale_sign = match scale.cmp0() {
            Some(Ordering::Greater) => 1,
            Some(Ordering::Less) => -1,
            _ => return 0,
        };
        let mut above = 0usize;
        for r in &self.roots {
            match x.partial_cmp(r) {
                Some(Ordering::Less) => above += 1,
                Some(Ordering::Equal) | None => return 0,
                Some(Ordering::Greater) => {}
            }
        }
        if above.is_multiple_of(2) {
            scale_sign
        } else {
            -scale_sign
        }
    }
}

/// Leading coefficients `(mu, nu)` of a degree-(p) / degree-(p-1) pair.
/// They always carry opposite signs in the recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPair {
    pub mu: Float,
    pub nu: Float,
}

impl ScaledPair {
    pub fn new(mu: Float, nu: Float) -> Result<Self> {
        let opposite = matches!(
            (mu.cmp0(), nu.cmp0()),
            (Some(Ordering::Greater), Some(Ordering::Less))
                | (Some(Ordering::Less), Some(Ordering::Greater))
        );
        if !opposite {
            return Err(Error::NonPositiveParameter {
                context: format!("scaled pair requires mu*nu < 0, got mu={mu}, nu={nu}"),
            });
        }
        Ok(Self { mu, nu })
    }

    /// The (positive) ratio `-mu/nu`.
    pub fn neg_ratio(&self, prec: u32) -> Float {
        -Float::with_val(prec, &self.mu / &self.nu)
    }
}

fn sign_of(x: &Float) -> i32 {
    match x.cmp0() {
        Some(Ordering::Greater) => 1,
        Some(Ordering::Less) => -1,
        _ => 0,
    }
}

/// Locate the sign-change root of `h` inside `(lo, hi)` by plain bisection.
///
/// Stops once the interval width falls below
/// `2^-rel_tol_bits * max(1, |mid|)` and returns the midpoint. Fails with
/// [`Error::Bracket`] when `h(lo) * h(hi) >= 0`, which callers treat as a
/// precision problem and escalate.
pub fn root_in_bracket<H>(h: H, lo: &Float, hi: &Float, cfg: &PrecisionConfig) -> Result<Float>
where
    H: Fn(&Float) -> Float,
{
    let prec = cfg.mantissa_bits();
    let mut lo = Float::with_val(prec, lo);
    let mut hi = Float::with_val(prec, hi);
    if lo >= hi {
        return Err(Error::Bracket {
            lo: lo.to_string(),
            hi: hi.to_string(),
        });
    }
    let sign_lo = sign_of(&h(&lo));
    let sign_hi = sign_of(&h(&hi));
    if sign_lo == 0 || sign_hi == 0 || sign_lo == sign_hi {
        return Err(Error::Bracket {
            lo: lo.to_string(),
            hi: hi.to_string(),
        });
    }
    let tol_shift = cfg.rel_tol_bits();
    loop {
        let mid = Float::with_val(prec, &lo + &hi) >> 1;
        if mid == lo || mid == hi {
            // Cannot subdivide further at this precision.
            return Ok(mid);
        }
        let width = (&hi - &lo).complete(prec);
        let scale = Float::with_val(prec, mid.clone().abs().max(&Float::with_val(prec, 1)));
        if width <= scale >> tol_shift {
            return Ok(mid);
        }
        match sign_of(&h(&mid)) {
            0 => return Ok(mid),
            s if s == sign_lo => lo = mid,
            _ => hi = mid,
        }
    }
}

/// Root-alternation part of the interlacing order: true iff the roots of
/// `g` and `f` strictly alternate with `g`'s roots leading
/// (`b_1 < a_1 < b_2 < a_2 < ...`). Degrees must match.
pub fn interlaces(g: &RootPoly, f: &RootPoly) -> Result<bool> {
    if g.degree() != f.degree() {
        return Err(Error::DegreeMismatch {
            left: g.degree(),
            right: f.degree(),
        });
    }
    for i in 0..g.degree() {
        if g.root(i) >= f.root(i) {
            return Ok(false);
        }
        if i + 1 < g.degree() && f.root(i) >= g.root(i + 1) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Alternation with `f` one degree above `g` and `f`'s roots bracketing:
/// `a_1 < b_1 < a_2 < ... < b_{p-1} < a_p`. This is the pattern the
/// recursion maintains between each F and G level.
pub fn interlaces_between(g: &RootPoly, f: &RootPoly) -> bool {
    if f.degree() != g.degree() + 1 {
        return false;
    }
    for i in 0..g.degree() {
        if f.root(i) >= g.root(i) || g.root(i) >= f.root(i + 1) {
            return false;
        }
    }
    true
}
