//! Chain formulas: `m`-variable formulas with exactly `k` models.
//!
//! For odd `k < 2^m` with binary expansion `c₁…c_m` (`c_m` the least
//! significant bit, necessarily 1), the chain is
//! `a₁ C₁ (a₂ C₂ (… a_m))` where connector `C_j` is `∨` if `c_j = 1` and
//! `∧` otherwise. The model count over the `m` variables is exactly `k`,
//! and both a CNF and a DNF realization with at most `m` clauses exist by
//! distributing connectors over the tail.

use thiserror::Error;

use crate::formula::{Lit, Var};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChainError {
    #[error("chain width m must be at least 1")]
    ZeroWidth,
    #[error("even k; chain formulas need an odd model count")]
    EvenK,
    #[error("k = {k} out of range for m = {m} (need 1 ≤ k < 2^m)")]
    OutOfRange { k: u64, m: u32 },
    #[error("expected {expected} fresh variables, got {got}")]
    WrongVarCount { expected: u32, got: usize },
}

/// A chain formula `φ_{k,m}` over a caller-supplied block of variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainFormula {
    k: u64,
    m: u32,
    /// `c₁…c_m`, most significant first; `connector_bits[m−1]` is 1.
    connector_bits: Vec<bool>,
    vars: Vec<Var>,
}

impl ChainFormula {
    pub fn new(k: u64, m: u32, vars: Vec<Var>) -> Result<ChainFormula, ChainError> {
        if m == 0 {
            return Err(ChainError::ZeroWidth);
        }
        if k % 2 == 0 {
            return Err(ChainError::EvenK);
        }
        if m >= 64 || k >= 1u64 << m {
            return Err(ChainError::OutOfRange { k, m });
        }
        if vars.len() != m as usize {
            return Err(ChainError::WrongVarCount {
                expected: m,
                got: vars.len(),
            });
        }
        let connector_bits = (0..m).map(|j| k >> (m - 1 - j) & 1 == 1).collect();
        Ok(ChainFormula {
            k,
            m,
            connector_bits,
            vars,
        })
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn width(&self) -> u32 {
        self.m
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    /// Tree-form evaluation on values for `a₁…a_m`.
    pub fn evaluate(&self, values: &[bool]) -> bool {
        assert_eq!(values.len(), self.m as usize);
        let m = self.m as usize;
        let mut acc = values[m - 1];
        for j in (0..m - 1).rev() {
            acc = if self.connector_bits[j] {
                values[j] || acc
            } else {
                values[j] && acc
            };
        }
        acc
    }

    /// CNF realization: at most `m` clauses, each at most `m` literals.
    pub fn cnf_clauses(&self) -> Vec<Vec<Lit>> {
        let m = self.m as usize;
        let mut clauses = vec![vec![self.vars[m - 1].positive()]];
        for j in (0..m - 1).rev() {
            if self.connector_bits[j] {
                // a_j ∨ tail: distribute into every clause.
                for c in &mut clauses {
                    c.insert(0, self.vars[j].positive());
                }
            } else {
                clauses.insert(0, vec![self.vars[j].positive()]);
            }
        }
        clauses
    }

    /// DNF realization, dually.
    pub fn dnf_cubes(&self) -> Vec<Vec<Lit>> {
        let m = self.m as usize;
        let mut cubes = vec![vec![self.vars[m - 1].positive()]];
        for j in (0..m - 1).rev() {
            if self.connector_bits[j] {
                cubes.insert(0, vec![self.vars[j].positive()]);
            } else {
                for c in &mut cubes {
                    c.insert(0, self.vars[j].positive());
                }
            }
        }
        cubes
    }

    /// CNF of the negation: `¬φ` is itself a chain with connectors flipped
    /// and literals negated.
    pub fn negated_cnf_clauses(&self) -> Vec<Vec<Lit>> {
        let m = self.m as usize;
        let mut clauses = vec![vec![self.vars[m - 1].negative()]];
        for j in (0..m - 1).rev() {
            if self.connector_bits[j] {
                // ¬(a_j ∨ tail) = ¬a_j ∧ ¬tail
                clauses.insert(0, vec![self.vars[j].negative()]);
            } else {
                // ¬(a_j ∧ tail) = ¬a_j ∨ ¬tail
                for c in &mut clauses {
                    c.insert(0, self.vars[j].negative());
                }
            }
        }
        clauses
    }
}
