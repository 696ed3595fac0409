//! Literal weights.
//!
//! Every variable either has an indifferent weight (both literals weigh 1)
//! or a normal weight `w ∈ (0, 1)` for the positive literal, with the
//! negative literal weighing `1 − w`. Weights are exact rationals; when a
//! weight equals `k/2^m` for odd `k` and `m ≤ 16` its dyadic form is kept
//! alongside, which the chain-formula reductions require.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

use super::{Lit, Var};

/// Largest bit width recognized for the dyadic form of a weight.
pub const MAX_DYADIC_BITS: u32 = 16;

/// Dyadic form of a weight: `k / 2^m` with odd `k`, `1 ≤ k ≤ 2^m − 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dyadic {
    pub k: u64,
    pub m: u32,
}

impl Dyadic {
    pub fn to_rational(self) -> BigRational {
        BigRational::new(self.k.into(), (BigInt::one()) << self.m as usize)
    }
}

/// Weight entry for one variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarWeight {
    /// Both literals weigh 1.
    Indifferent,
    /// Positive literal weighs `positive`; negative weighs `1 − positive`.
    Normal {
        positive: BigRational,
        dyadic: Option<Dyadic>,
    },
}

/// Error for weights outside the open interval (0, 1).
#[derive(Debug, Error, PartialEq, Eq)]
#[error("weight {0} outside the open interval (0,1)")]
pub struct WeightRange(pub String);

/// Per-variable literal weights; variables without an entry are indifferent.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WeightMap {
    entries: BTreeMap<Var, VarWeight>,
}

impl WeightMap {
    pub fn new() -> WeightMap {
        WeightMap::default()
    }

    /// Sets a normal weight for the positive literal of `var`.
    pub fn set_normal(&mut self, var: Var, positive: BigRational) -> Result<(), WeightRange> {
        if positive <= BigRational::zero() || positive >= BigRational::one() {
            return Err(WeightRange(positive.to_string()));
        }
        let dyadic = detect_dyadic(&positive);
        self.entries
            .insert(var, VarWeight::Normal { positive, dyadic });
        Ok(())
    }

    pub fn entry(&self, var: Var) -> &VarWeight {
        self.entries.get(&var).unwrap_or(&VarWeight::Indifferent)
    }

    pub fn is_all_indifferent(&self) -> bool {
        !self
            .entries
            .values()
            .any(|e| matches!(e, VarWeight::Normal { .. }))
    }

    /// Variables with a normal weight, in ascending order (the set `N_F`).
    pub fn normal_vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.entries
            .iter()
            .filter(|(_, e)| matches!(e, VarWeight::Normal { .. }))
            .map(|(&v, _)| v)
    }

    /// Weight of a single literal.
    pub fn literal_weight(&self, lit: Lit) -> BigRational {
        match self.entry(lit.var()) {
            VarWeight::Indifferent => BigRational::one(),
            VarWeight::Normal { positive, .. } => {
                if lit.is_positive() {
                    positive.clone()
                } else {
                    BigRational::one() - positive
                }
            }
        }
    }

    /// Dyadic form of the positive-literal weight, if stored.
    pub fn dyadic(&self, var: Var) -> Option<Dyadic> {
        match self.entry(var) {
            VarWeight::Normal { dyadic, .. } => *dyadic,
            VarWeight::Indifferent => None,
        }
    }

    /// Total bit width `m̂ = Σ mᵢ` over normal-weighted variables, when all
    /// of them are dyadic.
    pub fn total_dyadic_bits(&self) -> Option<u32> {
        let mut total = 0;
        for v in self.normal_vars() {
            total += self.dyadic(v)?.m;
        }
        Some(total)
    }

    /// The normalization constant `C_F = 2^{−m̂}`, when all weights are dyadic.
    pub fn normalization_constant(&self) -> Option<BigRational> {
        let m = self.total_dyadic_bits()?;
        Some(BigRational::new(BigInt::one(), BigInt::one() << m as usize))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, &VarWeight)> + '_ {
        self.entries.iter().map(|(&v, e)| (v, e))
    }
}

/// Returns the dyadic form of `w` when `w = k/2^m`, odd `k`, `m ≤ 16`.
fn detect_dyadic(w: &BigRational) -> Option<Dyadic> {
    let denom = w.denom();
    if denom.is_negative() || w.numer().is_negative() {
        return None;
    }
    // Reduced fraction: dyadic iff the denominator is a power of two.
    let bits = denom.bits();
    if denom != &(BigInt::one() << (bits - 1) as usize) {
        return None;
    }
    let m = (bits - 1) as u32;
    if m == 0 || m > MAX_DYADIC_BITS {
        return None;
    }
    // Numerator of a reduced fraction with a 2-power denominator is odd.
    let k = w.numer().to_u64()?;
    Some(Dyadic { k, m })
}
