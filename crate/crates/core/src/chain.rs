//! Physical chain representation and assembly of the pencil matrices.
//!
//! A fixed-free chain of `n` masses, each pair of neighbours (and the
//! wall-side mass and the wall) coupled by a spring in parallel with an
//! inerter. Free vibration is governed by the pencil `K - lambda (M+B)`
//! with `M` diagonal and `K`, `B` tridiagonal.

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::decimal::{parse_decimal_list, to_exact_decimal};
use crate::error::{Error, Result};

/// Chain parameters: masses `m_j > 0`, stiffnesses `k_j > 0`,
/// inertances `b_j >= 0`, all length `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSystem {
    masses: Vec<Float>,
    stiffnesses: Vec<Float>,
    inertances: Vec<Float>,
}

/// A single invariant violation, reported as data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// 1-based index of the offending parameter.
    pub index: usize,
    pub constraint: String,
}

impl ChainSystem {
    /// Build a chain; fails fast if the invariants do not hold.
    pub fn new(masses: Vec<Float>, stiffnesses: Vec<Float>, inertances: Vec<Float>) -> Result<Self> {
        let chain = Self {
            masses,
            stiffnesses,
            inertances,
        };
        let violations = chain.validate();
        if violations.is_empty() {
            Ok(chain)
        } else {
            Err(Error::Validation(violations))
        }
    }

    /// Build without checking; used by `validate` tests that want to
    /// inspect violations as data.
    pub fn new_unchecked(
        masses: Vec<Float>,
        stiffnesses: Vec<Float>,
        inertances: Vec<Float>,
    ) -> Self {
        Self {
            masses,
            stiffnesses,
            inertances,
        }
    }

    pub fn from_f64(masses: &[f64], stiffnesses: &[f64], inertances: &[f64], prec: u32) -> Result<Self> {
        let conv = |v: &[f64]| v.iter().map(|&x| Float::with_val(prec, x)).collect();
        Self::new(conv(masses), conv(stiffnesses), conv(inertances))
    }

    pub fn n(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[Float] {
        &self.masses
    }

    pub fn stiffnesses(&self) -> &[Float] {
        &self.stiffnesses
    }

    pub fn inertances(&self) -> &[Float] {
        &self.inertances
    }

    /// 1-based accessors matching the index convention of the model.
    pub fn mass(&self, j: usize) -> &Float {
        &self.masses[j - 1]
    }

    pub fn stiffness(&self, j: usize) -> &Float {
        &self.stiffnesses[j - 1]
    }

    pub fn inertance(&self, j: usize) -> &Float {
        &self.inertances[j - 1]
    }

    /// Empty iff all invariants hold. Each violation names the offending
    /// 1-based index and the constraint it breaks.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.stiffnesses.len() != self.masses.len() {
            out.push(Violation {
                index: 0,
                constraint: format!(
                    "stiffness count {} != mass count {}",
                    self.stiffnesses.len(),
                    self.masses.len()
                ),
            });
        }
        if self.inertances.len() != self.masses.len() {
            out.push(Violation {
                index: 0,
                constraint: format!(
                    "inertance count {} != mass count {}",
                    self.inertances.len(),
                    self.masses.len()
                ),
            });
        }
        if self.masses.is_empty() {
            out.push(Violation {
                index: 0,
                constraint: "chain must have at least one mass".into(),
            });
        }
        for (i, m) in self.masses.iter().enumerate() {
            if !m.is_finite() || *m <= 0 {
                out.push(Violation {
                    index: i + 1,
                    constraint: "mass must be positive".into(),
                });
            }
        }
        for (i, k) in self.stiffnesses.iter().enumerate() {
            if !k.is_finite() || *k <= 0 {
                out.push(Violation {
                    index: i + 1,
                    constraint: "stiffness must be positive".into(),
                });
            }
        }
        for (i, b) in self.inertances.iter().enumerate() {
            if !b.is_finite() || *b < 0 {
                out.push(Violation {
                    index: i + 1,
                    constraint: "inertance must be non-negative".into(),
                });
            }
        }
        out
    }
}

/// Dense `M`, `K`, `B`; materialized only for the verifier's oracle.
/// The forward solver reads the chain directly through the tridiagonal
/// recurrence.
#[derive(Debug, Clone)]
pub struct PencilMatrices {
    pub mass: Vec<Vec<Float>>,
    pub stiffness: Vec<Vec<Float>>,
    pub inertance: Vec<Vec<Float>>,
}

/// Populate `M = diag(m_j)` and the tridiagonal `K`, `B`: row `j` of `K`
/// holds `k_j + k_{j+1}` on the diagonal (just `k_n` in the last row) and
/// `-k_{j+1}` beside it; `B` is the same pattern in `b`.
#[allow(clippy::needless_range_loop)]
pub fn assemble(chain: &ChainSystem) -> Result<PencilMatrices> {
    let violations = chain.validate();
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    let n = chain.n();
    let prec = chain
        .masses()
        .iter()
        .chain(chain.stiffnesses())
        .chain(chain.inertances())
        .map(Float::prec)
        .max()
        .unwrap_or(64)
        + 8;
    let zero = || Float::with_val(prec, 0);
    let tridiag = |coef: &[Float]| {
        let mut mat = vec![vec![zero(); n]; n];
        for j in 0..n {
            let mut d = Float::with_val(prec, &coef[j]);
            if j + 1 < n {
                d += &coef[j + 1];
                mat[j][j + 1] = -Float::with_val(prec, &coef[j + 1]);
                mat[j + 1][j] = -Float::with_val(prec, &coef[j + 1]);
            }
            mat[j][j] = d;
        }
        mat
    };
    let mut mass = vec![vec![zero(); n]; n];
    for j in 0..n {
        mass[j][j] = Float::with_val(prec, &chain.masses()[j]);
    }
    Ok(PencilMatrices {
        mass,
        stiffness: tridiag(chain.stiffnesses()),
        inertance: tridiag(chain.inertances()),
    })
}

impl PencilMatrices {
    pub fn n(&self) -> usize {
        self.mass.len()
    }

    /// `M + B` as a dense matrix.
    #[allow(clippy::needless_range_loop)]
    pub fn mass_plus_inertance(&self) -> Vec<Vec<Float>> {
        let n = self.n();
        let prec = self.mass[0][0].prec();
        let mut out = vec![vec![Float::with_val(prec, 0); n]; n];
        for i in 0..n {
            for j in 0..n {
                out[i][j] = Float::with_val(prec, &self.mass[i][j] + &self.inertance[i][j]);
            }
        }
        out
    }
}

/// All leading principal minors positive, checked by the tridiagonal
/// three-term minor recurrence.
pub fn is_positive_definite_tridiagonal(diag: &[Float], off: &[Float], prec: u32) -> bool {
    let n = diag.len();
    let mut prev2 = Float::with_val(prec, 1);
    let mut prev1 = Float::with_val(prec, &diag[0]);
    if prev1 <= 0 {
        return false;
    }
    for j in 1..n {
        let c2 = Float::with_val(prec, &off[j - 1] * &off[j - 1]);
        let d = Float::with_val(prec, &diag[j] * &prev1) - c2 * &prev2;
        if d <= 0 {
            return false;
        }
        prev2 = prev1;
        prev1 = d;
    }
    true
}

// ── JSON interface ──────────────────────────────────────────────────

/// Wire format: `{"n": 3, "m": [..], "k": [..], "b": [..]}` with decimal
/// strings carrying exact expansions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainJson {
    pub n: usize,
    pub m: Vec<String>,
    pub k: Vec<String>,
    pub b: Vec<String>,
}

impl ChainJson {
    pub fn from_chain(chain: &ChainSystem) -> Self {
        Self {
            n: chain.n(),
            m: chain.masses().iter().map(to_exact_decimal).collect(),
            k: chain.stiffnesses().iter().map(to_exact_decimal).collect(),
            b: chain.inertances().iter().map(to_exact_decimal).collect(),
        }
    }

    /// Lossy form for human reading (`--float64`).
    pub fn from_chain_f64(chain: &ChainSystem) -> Self {
        let short = |v: &[Float]| v.iter().map(crate::decimal::to_f64_string).collect();
        Self {
            n: chain.n(),
            m: short(chain.masses()),
            k: short(chain.stiffnesses()),
            b: short(chain.inertances()),
        }
    }

    pub fn into_chain(self, min_prec: u32) -> Result<ChainSystem> {
        if self.m.len() != self.n || self.k.len() != self.n || self.b.len() != self.n {
            return Err(Error::Parse(format!(
                "chain arrays must all have length n = {}",
                self.n
            )));
        }
        ChainSystem::new(
            parse_decimal_list(&self.m, min_prec)?,
            parse_decimal_list(&self.k, min_prec)?,
            parse_decimal_list(&self.b, min_prec)?,
        )
    }
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;

    fn f(v: f64) -> Float {
        Float::with_val(96, v)
    }

    #[test]
    fn assemble_matches_row_pattern() {
        // n=2, unit parameters: K = [[2,-1],[-1,1]], M+B = I
        let chain = ChainSystem::from_f64(&[1.0, 1.0], &[1.0, 1.0], &[0.0, 0.0], 96).unwrap();
        let p = assemble(&chain).unwrap();
        assert_eq!(p.stiffness[0][0], f(2.0));
        assert_eq!(p.stiffness[0][1], f(-1.0));
        assert_eq!(p.stiffness[1][0], f(-1.0));
        assert_eq!(p.stiffness[1][1], f(1.0));
        let mb = p.mass_plus_inertance();
        assert_eq!(mb[0][0], f(1.0));
        assert_eq!(mb[0][1], f(0.0));
        assert_eq!(mb[1][1], f(1.0));
    }

    #[test]
    fn assemble_scalar_case() {
        let chain = ChainSystem::from_f64(&[2.0], &[3.0], &[1.0], 96).unwrap();
        let p = assemble(&chain).unwrap();
        assert_eq!(p.stiffness[0][0], f(3.0));
        assert_eq!(p.mass_plus_inertance()[0][0], f(3.0));
    }

    #[test]
    fn assemble_inertance_template() {
        // Hand-applied template for b = (1, 0, 2).
        let chain =
            ChainSystem::from_f64(&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0], &[1.0, 0.0, 2.0], 96)
                .unwrap();
        let p = assemble(&chain).unwrap();
        let b = &p.inertance;
        let expect = [[1.0, 0.0, 0.0], [0.0, 2.0, -2.0], [0.0, -2.0, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(b[i][j], f(expect[i][j]), "B[{i}][{j}]");
            }
        }
        // Symmetry is bit-exact by construction.
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(p.stiffness[i][j], p.stiffness[j][i]);
                assert_eq!(b[i][j], b[j][i]);
            }
        }
    }

    #[test]
    fn validate_reports_bad_mass() {
        let chain = ChainSystem::new_unchecked(
            vec![f(1.0), f(-1.0), f(1.0)],
            vec![f(1.0), f(1.0), f(1.0)],
            vec![f(0.0), f(0.0), f(0.0)],
        );
        let v = chain.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].index, 2);
        assert!(v[0].constraint.contains("mass"));
    }

    #[test]
    fn pure_mass_spring_chain_is_legal() {
        let chain =
            ChainSystem::from_f64(&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0], &[0.0, 0.0, 0.0], 96)
                .unwrap();
        assert!(chain.validate().is_empty());
    }

    #[test]
    fn json_round_trip() {
        let chain = ChainSystem::from_f64(&[1.5, 2.25], &[0.125, 3.0], &[0.0, 0.75], 96).unwrap();
        let j = ChainJson::from_chain(&chain);
        let back = j.into_chain(96).unwrap();
        assert_eq!(back.masses(), chain.masses());
        assert_eq!(back.stiffnesses(), chain.stiffnesses());
        assert_eq!(back.inertances(), chain.inertances());
    }

    #[test]
    fn pencil_definiteness_for_valid_chain() {
        let chain =
            ChainSystem::from_f64(&[0.3, 2.0, 1.0], &[4.0, 0.5, 1.5], &[0.0, 3.0, 0.2], 96)
                .unwrap();
        let p = assemble(&chain).unwrap();
        let diag_k: Vec<Float> = (0..3).map(|i| p.stiffness[i][i].clone()).collect();
        let off_k: Vec<Float> = (0..2).map(|i| p.stiffness[i][i + 1].clone()).collect();
        assert!(is_positive_definite_tridiagonal(&diag_k, &off_k, 96));
        let mb = p.mass_plus_inertance();
        let diag_mb: Vec<Float> = (0..3).map(|i| mb[i][i].clone()).collect();
        let off_mb: Vec<Float> = (0..2).map(|i| mb[i][i + 1].clone()).collect();
        assert!(is_positive_definite_tridiagonal(&diag_mb, &off_mb, 96));
    }
}
