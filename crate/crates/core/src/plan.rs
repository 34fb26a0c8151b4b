//! Target spectra, the feasibility gate, and the pole-assignment plan.
//!
//! Before any synthesis runs, the requested multiplicity pattern is
//! turned into an immutable plan: which chain indices get their
//! spring/inerter pole pinned to a repeated eigenvalue (strategy B), in
//! what order, and which indices keep a user-fixed mass (strategy A).
//! The index arithmetic here is the easiest place to inject bugs, so it
//! is isolated and tested directly; the synthesis engine only consumes
//! the resulting tables.

use rug::Float;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::decimal::{parse_decimal_list, to_exact_decimal};
use crate::error::{Error, Result};

/// Distinct eigenvalues with multiplicities: `0 < l_1 < ... < l_m`,
/// `t_i >= 1`, `n = sum t_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpectrum {
    lambdas: Vec<Float>,
    mults: Vec<usize>,
}

impl TargetSpectrum {
    pub fn new(lambdas: Vec<Float>, mults: Vec<usize>) -> Result<Self> {
        if lambdas.is_empty() || lambdas.len() != mults.len() {
            return Err(Error::Parse(
                "spectrum needs equal, nonzero numbers of eigenvalues and multiplicities".into(),
            ));
        }
        if lambdas[0] <= 0 || lambdas.iter().any(|l| !l.is_finite()) {
            return Err(Error::Parse("eigenvalues must be positive and finite".into()));
        }
        for w in lambdas.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Parse(format!(
                    "eigenvalues must be strictly increasing: {} >= {}",
                    w[0], w[1]
                )));
            }
        }
        if mults.contains(&0) {
            return Err(Error::Parse("multiplicities must be at least 1".into()));
        }
        Ok(Self { lambdas, mults })
    }

    pub fn from_f64(lambdas: &[f64], mults: &[usize], prec: u32) -> Result<Self> {
        Self::new(
            lambdas.iter().map(|&l| Float::with_val(prec, l)).collect(),
            mults.to_vec(),
        )
    }

    /// Number of distinct eigenvalues.
    pub fn m(&self) -> usize {
        self.lambdas.len()
    }

    /// Total degrees of freedom.
    pub fn n(&self) -> usize {
        self.mults.iter().sum()
    }

    pub fn lambdas(&self) -> &[Float] {
        &self.lambdas
    }

    pub fn mults(&self) -> &[usize] {
        &self.mults
    }

    /// Largest multiplicity.
    pub fn t_max(&self) -> usize {
        self.mults.iter().copied().max().unwrap_or(0)
    }
}

/// The achievability gate: a pattern is realizable iff `t_i <= i` for
/// every position `i` (eigenvalues sorted ascending).
pub fn feasible(spec: &TargetSpectrum) -> bool {
    feasibility_violations(spec).is_empty()
}

/// Positions where `t_i > i`, 1-based, reported as data for diagnostics.
pub fn feasibility_violations(spec: &TargetSpectrum) -> Vec<(usize, usize)> {
    spec.mults()
        .iter()
        .enumerate()
        .filter(|&(i, &t)| t > i + 1)
        .map(|(i, &t)| (i + 1, t))
        .collect()
}

/// Which step the backward recursion takes at index `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Free pole; consumes the pinned mass at chain index `j+1`.
    A,
    /// Pole pinned to a repeated eigenvalue drawn from block `block`.
    B { block: usize, lambda_index: usize },
}

/// Immutable synthesis plan: the S-sets, the pole schedule, and the
/// pinned-mass table.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicityPlan {
    t_max: usize,
    /// `s_sets[j-1]` holds the 0-based eigenvalue indices of S_j
    /// (eigenvalues with multiplicity >= j+1), ascending.
    s_sets: Vec<Vec<usize>>,
    /// Chain index (1-based, in [2, n]) -> 0-based eigenvalue index.
    schedule: BTreeMap<usize, usize>,
    /// Ascending 1-based chain indices with user-pinned masses; always
    /// starts with 1 and has exactly m entries.
    pinned_indices: Vec<usize>,
    pinned_masses: Vec<Float>,
    n: usize,
}

/// Derive the plan: S-sets from the multiplicities, schedule positions
/// filling consecutive indices from 2 upward with one skipped index
/// between blocks, each block consuming its S-set from the top down.
pub fn build_plan(spec: &TargetSpectrum, pinned_masses: Option<Vec<Float>>) -> Result<MultiplicityPlan> {
    if let Some((index, mult)) = feasibility_violations(spec).first().copied() {
        return Err(Error::InfeasibleSpectrum { index, mult });
    }
    let m = spec.m();
    let n = spec.n();
    let t_max = spec.t_max();
    let pinned_masses = match pinned_masses {
        Some(p) => {
            if p.len() != m {
                return Err(Error::Dimension {
                    expected: m,
                    got: p.len(),
                });
            }
            if p.iter().any(|x| !x.is_finite() || *x <= 0) {
                return Err(Error::NonPositiveParameter {
                    context: "pinned masses".into(),
                });
            }
            p
        }
        None => (0..m).map(|_| Float::with_val(64, 1)).collect(),
    };

    let mut s_sets: Vec<Vec<usize>> = Vec::new();
    for j in 1..t_max {
        let set: Vec<usize> = (0..m).filter(|&i| spec.mults()[i] > j).collect();
        s_sets.push(set);
    }
    debug_assert_eq!(s_sets.iter().map(Vec::len).sum::<usize>(), n - m);

    let mut schedule = BTreeMap::new();
    let mut q_prefix = 0usize;
    for (block, set) in s_sets.iter().enumerate() {
        let q = set.len();
        for l in 1..=q {
            // Blocks sit at consecutive indices starting at 2, with one
            // skipped index after each block; each block hands out its
            // set from the largest element down.
            let chain_index = 1 + block + q_prefix + l;
            schedule.insert(chain_index, set[q - l]);
        }
        q_prefix += q;
    }

    let mut pinned_indices = vec![1usize];
    pinned_indices.extend((2..=n).filter(|i| !schedule.contains_key(i)));
    debug_assert_eq!(pinned_indices.len(), m);

    Ok(MultiplicityPlan {
        t_max,
        s_sets,
        schedule,
        pinned_indices,
        pinned_masses,
        n,
    })
}

impl MultiplicityPlan {
    pub fn t_max(&self) -> usize {
        self.t_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// S_j as 0-based eigenvalue indices, `j` in `[1, T-1]`.
    pub fn s_set(&self, j: usize) -> &[usize] {
        &self.s_sets[j - 1]
    }

    pub fn s_sets(&self) -> &[Vec<usize>] {
        &self.s_sets
    }

    pub fn schedule(&self) -> &BTreeMap<usize, usize> {
        &self.schedule
    }

    pub fn pinned_indices(&self) -> &[usize] {
        &self.pinned_indices
    }

    pub fn pinned_masses(&self) -> &[Float] {
        &self.pinned_masses
    }

    /// The pinned mass assigned to a chain index, if that index is free.
    pub fn pinned_mass_for(&self, chain_index: usize) -> Option<&Float> {
        self.pinned_indices
            .iter()
            .position(|&i| i == chain_index)
            .map(|rank| &self.pinned_masses[rank])
    }

    /// Sum of the pinned masses.
    pub fn total_pinned_mass(&self, prec: u32) -> Float {
        let mut total = Float::with_val(prec, 0);
        for mass in &self.pinned_masses {
            total += mass;
        }
        total
    }

    /// Strategy for backward-recursion index `j` in `[1, n-1]`: strategy
    /// B exactly when chain index `j+1` is in the schedule.
    pub fn strategy_for(&self, j: usize) -> Strategy {
        assert!(j >= 1 && j < self.n, "recursion index out of range");
        match self.schedule.get(&(j + 1)) {
            Some(&lambda_index) => {
                let block = self
                    .s_sets
                    .iter()
                    .enumerate()
                    .find(|(_, set)| set.contains(&lambda_index))
                    .map(|(b, _)| b)
                    .expect("scheduled value always comes from an S-set");
                // Report the block whose interval contains j, which is the
                // block that scheduled this chain index.
                let mut q_prefix = 0usize;
                for (b, set) in self.s_sets.iter().enumerate() {
                    let lo = b + 1 + q_prefix;
                    let hi = b + q_prefix + set.len();
                    if j >= lo && j <= hi {
                        return Strategy::B {
                            block: b,
                            lambda_index,
                        };
                    }
                    q_prefix += set.len();
                }
                Strategy::B {
                    block,
                    lambda_index,
                }
            }
            None => Strategy::A,
        }
    }

    /// Multiset of all scheduled eigenvalue indices (union of the S-sets
    /// with multiplicity); the expected divisor-ledger content.
    pub fn scheduled_multiset(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.schedule.values().copied().collect();
        v.sort_unstable();
        v
    }
}

// ── JSON interface ──────────────────────────────────────────────────

/// Wire format: `{"lambdas": [..], "mults": [..], "pinned_masses": [..]?}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumJson {
    pub lambdas: Vec<String>,
    pub mults: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pinned_masses: Option<Vec<String>>,
}

impl SpectrumJson {
    pub fn from_parts(spec: &TargetSpectrum, pinned: Option<&[Float]>) -> Self {
        Self {
            lambdas: spec.lambdas().iter().map(to_exact_decimal).collect(),
            mults: spec.mults().to_vec(),
            pinned_masses: pinned.map(|p| p.iter().map(to_exact_decimal).collect()),
        }
    }

    pub fn into_parts(self, min_prec: u32) -> Result<(TargetSpectrum, Option<Vec<Float>>)> {
        let spec = TargetSpectrum::new(parse_decimal_list(&self.lambdas, min_prec)?, self.mults)?;
        let pinned = match self.pinned_masses {
            Some(p) => Some(parse_decimal_list(&p, min_prec)?),
            None => None,
        };
        Ok((spec, pinned))
    }
}
