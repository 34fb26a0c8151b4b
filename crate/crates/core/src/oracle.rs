//! Independent dense oracle over exact rational arithmetic.
//!
//! Everything here deliberately avoids the chain recurrences: the
//! characteristic polynomial comes from dense determinant evaluation at
//! integer sample points plus Lagrange interpolation, and roots are
//! located through coefficient-level Sturm chains. This is the second
//! route the fast solver is checked against.

use rug::{Float, Rational};

use crate::chain::{assemble, ChainSystem};
use crate::error::{Error, Result};

/// Largest `n` the dense oracle accepts.
pub const ORACLE_SIZE_LIMIT: usize = 8;

pub(crate) fn to_rational(x: &Float) -> Result<Rational> {
    x.to_rational()
        .ok_or_else(|| Error::Parse(format!("non-finite value {x}")))
}

/// Exact determinant by Gaussian elimination with column pivoting.
#[allow(clippy::needless_range_loop)]
pub(crate) fn det_rational(mut a: Vec<Vec<Rational>>) -> Rational {
    let n = a.len();
    let mut det = Rational::from(1);
    for col in 0..n {
        let pivot_row = match (col..n).find(|&r| a[r][col] != 0) {
            Some(r) => r,
            None => return Rational::new(),
        };
        if pivot_row != col {
            a.swap(pivot_row, col);
            det = -det;
        }
        let pivot = a[col][col].clone();
        det *= &pivot;
        for r in col + 1..n {
            if a[r][col] == 0 {
                continue;
            }
            let factor = Rational::from(&a[r][col] / &pivot);
            for c in col..n {
                let sub = Rational::from(&factor * &a[col][c]);
                a[r][c] -= sub;
            }
        }
    }
    det
}

/// Coefficients (ascending) of `det(K - x (M+B))`, computed exactly:
/// the dense matrices are evaluated at `x = 0..n` and the degree-`n`
/// polynomial is recovered by Lagrange interpolation over the rationals.
pub fn dense_charpoly(chain: &ChainSystem) -> Result<Vec<Rational>> {
    let n = chain.n();
    if n > ORACLE_SIZE_LIMIT {
        return Err(Error::SizeLimit {
            n,
            limit: ORACLE_SIZE_LIMIT,
        });
    }
    let pencil = assemble(chain)?;
    let k: Vec<Vec<Rational>> = pencil
        .stiffness
        .iter()
        .map(|row| row.iter().map(to_rational).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let mb: Vec<Vec<Rational>> = pencil
        .mass_plus_inertance()
        .iter()
        .map(|row| row.iter().map(to_rational).collect::<Result<_>>())
        .collect::<Result<_>>()?;

    let mut samples = Vec::with_capacity(n + 1);
    for s in 0..=n {
        let x = Rational::from(s as u32);
        let mat: Vec<Vec<Rational>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| Rational::from(&k[i][j]) - Rational::from(&x * &mb[i][j]))
                    .collect()
            })
            .collect();
        samples.push((x, det_rational(mat)));
    }
    Ok(lagrange_interpolate(&samples))
}

/// Exact Lagrange interpolation through `deg+1` points; ascending
/// coefficients.
fn lagrange_interpolate(samples: &[(Rational, Rational)]) -> Vec<Rational> {
    let n = samples.len();
    let mut coeffs = vec![Rational::new(); n];
    for (i, (xi, yi)) in samples.iter().enumerate() {
        let mut basis = vec![Rational::new(); n];
        basis[0] = Rational::from(1);
        let mut deg = 0usize;
        let mut denom = Rational::from(1);
        for (j, (xj, _)) in samples.iter().enumerate() {
            if j == i {
                continue;
            }
            // basis <- basis * (x - xj)
            let mut next = vec![Rational::new(); n];
            for (c, b) in basis.iter().enumerate().take(deg + 1) {
                next[c + 1] += b;
                next[c] -= Rational::from(xj * b);
            }
            basis = next;
            deg += 1;
            denom *= Rational::from(xi - xj);
        }
        let scale = Rational::from(yi / &denom);
        for (c, b) in basis.iter().enumerate() {
            coeffs[c] += Rational::from(b * &scale);
        }
    }
    coeffs
}

/// Polynomial with exact rational coefficients, ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct RatPoly {
    coeffs: Vec<Rational>,
}

impl RatPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Rational::new());
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::new();
        for c in self.coeffs.iter().rev() {
            acc *= x;
            acc += c;
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        if self.is_constant() {
            return Self::new(vec![Rational::new()]);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * Rational::from(i as u32))
            .collect();
        Self::new(coeffs)
    }

    fn sub(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![Rational::new(); len];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            coeffs[i] -= c;
        }
        Self::new(coeffs)
    }

    fn neg(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| Rational::from(-c)).collect())
    }

    /// Euclidean division: returns `(quotient, remainder)`.
    fn div_rem(&self, other: &Self) -> (Self, Self) {
        assert!(!other.is_zero(), "division by zero polynomial");
        let d = other.degree();
        let lead = other.coeffs.last().unwrap();
        let mut r = self.coeffs.clone();
        let q_len = self.coeffs.len().saturating_sub(d);
        let mut q = vec![Rational::new(); q_len.max(1)];
        loop {
            while r.len() > 1 && *r.last().unwrap() == 0 {
                r.pop();
            }
            let rd = r.len() - 1;
            if rd < d || (r.len() == 1 && r[0] == 0) {
                break;
            }
            let factor = Rational::from(r.last().unwrap() / lead);
            q[rd - d] = factor.clone();
            for i in 0..=d {
                let sub = Rational::from(&factor * &other.coeffs[i]);
                r[rd - d + i] -= sub;
            }
            // The leading term cancels exactly.
            debug_assert_eq!(*r.last().unwrap(), 0);
        }
        (Self::new(q), Self::new(r))
    }

    fn rem(&self, other: &Self) -> Self {
        self.div_rem(other).1
    }

    /// Exact quotient; panics if the division leaves a remainder.
    fn div_exact(&self, other: &Self) -> Self {
        let (q, r) = self.div_rem(other);
        assert!(r.is_zero(), "polynomial division was not exact");
        q
    }

    fn monic(&self) -> Self {
        let lead = self.coeffs.last().unwrap();
        if *lead == 0 || *lead == 1 {
            return self.clone();
        }
        Self::new(self.coeffs.iter().map(|c| Rational::from(c / lead)).collect())
    }

    /// Monic gcd by the Euclidean algorithm.
    pub fn gcd(&self, other: &Self) -> Self {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.monic()
        }
    }

    /// Yun's square-free factorization: returns `(e_1, e_2, ...)` with
    /// `self ~ prod e_k^k`, each `e_k` monic square-free (possibly 1).
    pub fn squarefree_decomposition(&self) -> Vec<RatPoly> {
        let one = RatPoly::new(vec![Rational::from(1)]);
        if self.is_constant() {
            return Vec::new();
        }
        let f = self.monic();
        let fp = f.derivative();
        let g = f.gcd(&fp);
        if g.is_constant() {
            return vec![f];
        }
        let mut out = Vec::new();
        let mut b = f.div_exact(&g);
        let mut c = fp.div_exact(&g);
        let mut d = c.sub(&b.derivative());
        loop {
            let e = b.gcd(&d);
            let e = if e.is_zero() { one.clone() } else { e };
            out.push(e.clone());
            b = b.div_exact(&e);
            if b.is_constant() {
                break;
            }
            c = d.div_exact(&e);
            d = c.sub(&b.derivative());
        }
        out
    }

    /// Sturm chain (`p, p', -rem, ...`); meaningful root counts require
    /// square-free input.
    pub fn sturm_chain(&self) -> Vec<RatPoly> {
        let mut chain = vec![self.clone(), self.derivative()];
        loop {
            let k = chain.len();
            if chain[k - 1].is_zero() {
                chain.pop();
                break;
            }
            let r = chain[k - 2].rem(&chain[k - 1]);
            if r.is_zero() {
                break;
            }
            chain.push(r.neg());
        }
        chain
    }

    /// Distinct roots in the half-open interval `(lo, hi]` by Sturm
    /// sign-variation counting.
    pub fn count_distinct_roots_in(chain: &[RatPoly], lo: &Rational, hi: &Rational) -> usize {
        let variations = |x: &Rational| -> usize {
            let mut count = 0;
            let mut prev = 0i32;
            for p in chain {
                let v = p.eval(x);
                let s = match v.cmp0() {
                    std::cmp::Ordering::Greater => 1,
                    std::cmp::Ordering::Less => -1,
                    std::cmp::Ordering::Equal => 0,
                };
                if s != 0 {
                    if prev != 0 && s != prev {
                        count += 1;
                    }
                    prev = s;
                }
            }
            count
        };
        variations(lo).saturating_sub(variations(hi))
    }
}

/// Roots (with multiplicity) of an exact-coefficient real-rooted
/// polynomial in `(0, cauchy bound]`, refined to relative width
/// `2^-tol_bits` by dyadic bisection on exact Sturm counts.
pub fn charpoly_roots(coeffs: &[Rational], tol_bits: u32, prec: u32) -> Result<Vec<(Float, usize)>> {
    let poly = RatPoly::new(coeffs.to_vec());
    if poly.is_constant() {
        return Ok(Vec::new());
    }
    let parts = poly.squarefree_decomposition();
    let mut found: Vec<(Float, usize)> = Vec::new();
    for (idx, part_in) in parts.iter().enumerate() {
        let mult = idx + 1;
        if part_in.is_constant() {
            continue;
        }
        let mut part = part_in.clone();
        let mut chain = part.sturm_chain();
        // Cauchy bound: 1 + max |c_i / lead|.
        let lead = part.coeffs.last().unwrap();
        let mut bound = Rational::from(1);
        for c in &part.coeffs {
            let ratio = Rational::from(c / lead).abs();
            if ratio > bound {
                bound = ratio;
            }
        }
        bound += Rational::from(1);
        let zero = Rational::new();
        let total = RatPoly::count_distinct_roots_in(&chain, &zero, &bound);
        let mut stack = vec![(zero, bound, total)];
        while let Some((lo, hi, count)) = stack.pop() {
            if count == 0 {
                continue;
            }
            let width = Rational::from(&hi - &lo);
            let tol = {
                let scale = Rational::from(&hi).abs().max(Rational::from(1));
                scale >> tol_bits
            };
            let mid = Rational::from(&lo + &hi) / Rational::from(2);
            if width <= tol {
                found.push((Float::with_val(prec, &mid), count * mult));
                continue;
            }
            if part.eval(&mid) == 0 {
                // Exact rational root: record it and deflate so interval
                // counts stay half-open-clean.
                found.push((Float::with_val(prec, &mid), mult));
                let linear = RatPoly::new(vec![Rational::from(-&mid), Rational::from(1)]);
                part = part.div_exact(&linear);
                if part.is_constant() {
                    continue;
                }
                chain = part.sturm_chain();
                let c_left = RatPoly::count_distinct_roots_in(&chain, &lo, &mid);
                stack.push((lo, mid.clone(), c_left));
                stack.push((mid, hi, count - 1 - c_left));
                continue;
            }
            let c_left = RatPoly::count_distinct_roots_in(&chain, &lo, &mid);
            stack.push((lo, mid.clone(), c_left));
            stack.push((mid, hi, count - c_left));
        }
    }
    found.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite roots"));
    let mut flat: Vec<(Float, usize)> = Vec::new();
    for (x, m) in found {
        match flat.last_mut() {
            Some((last, lm)) if *last == x => *lm += m,
            _ => flat.push((x, m)),
        }
    }
    Ok(flat)
}
