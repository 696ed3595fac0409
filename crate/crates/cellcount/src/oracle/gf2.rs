//! Gaussian elimination over GF(2) for XOR constraint reasoning.

use crate::bits::BitVec;
use crate::formula::{Var, XorClause};

/// One augmented row: coefficient bits (bit `i` ↔ variable `i+1`) plus the
/// right-hand side.
#[derive(Debug, Clone)]
pub struct Gf2Row {
    pub coeffs: BitVec,
    pub rhs: bool,
}

impl Gf2Row {
    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.coeffs.iter_ones().map(|i| Var::new(i as u32 + 1))
    }
}

/// An XOR constraint system in (reduced) row-echelon form.
#[derive(Debug, Clone)]
pub struct Gf2System {
    width: usize,
    rows: Vec<Gf2Row>,
    inconsistent: bool,
    eliminated: bool,
}

impl Gf2System {
    pub fn new(width: usize) -> Gf2System {
        Gf2System {
            width,
            rows: Vec::new(),
            inconsistent: false,
            eliminated: true,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn add_xor(&mut self, x: &XorClause) {
        let mut coeffs = BitVec::zeros(self.width);
        for &v in x.vars() {
            coeffs.set(v.index() as usize - 1, true);
        }
        self.add_row(Gf2Row {
            coeffs,
            rhs: x.parity(),
        });
    }

    pub fn add_row(&mut self, row: Gf2Row) {
        if row.coeffs.count_ones() == 0 {
            if row.rhs {
                self.inconsistent = true;
            }
            return;
        }
        self.rows.push(row);
        self.eliminated = false;
    }

    /// Fixes a variable's value: removes it from every row, folding its
    /// contribution into the right-hand side.
    pub fn substitute(&mut self, var: Var, value: bool) {
        let bit = var.index() as usize - 1;
        let mut i = 0;
        while i < self.rows.len() {
            let row = &mut self.rows[i];
            if row.coeffs.get(bit) {
                row.coeffs.set(bit, false);
                row.rhs ^= value;
                if row.coeffs.count_ones() == 0 {
                    if row.rhs {
                        self.inconsistent = true;
                    }
                    self.rows.swap_remove(i);
                    self.eliminated = false;
                    continue;
                }
                self.eliminated = false;
            }
            i += 1;
        }
    }

    /// Reduces to reduced row-echelon form. Zero rows with rhs 1 flag the
    /// system inconsistent and are removed either way.
    pub fn eliminate(&mut self) {
        if self.eliminated {
            return;
        }
        let mut pivot_rows: Vec<usize> = Vec::new();
        let rows = std::mem::take(&mut self.rows);
        let mut work = rows;
        let mut used = vec![false; work.len()];
        for col in 0..self.width {
            let Some(r) = (0..work.len()).find(|&r| !used[r] && work[r].coeffs.get(col)) else {
                continue;
            };
            used[r] = true;
            pivot_rows.push(r);
            let pivot = work[r].clone();
            for (s, row) in work.iter_mut().enumerate() {
                if s != r && row.coeffs.get(col) {
                    row.coeffs.xor_with(&pivot.coeffs);
                    row.rhs ^= pivot.rhs;
                }
            }
        }
        let mut out = Vec::with_capacity(pivot_rows.len());
        for (r, row) in work.into_iter().enumerate() {
            if used[r] {
                out.push(row);
            } else if row.rhs && row.coeffs.count_ones() == 0 {
                self.inconsistent = true;
            } else {
                debug_assert_eq!(row.coeffs.count_ones(), 0);
            }
        }
        // Sort by pivot column so downstream iteration is deterministic.
        out.sort_by_key(|r| r.coeffs.iter_ones().next().unwrap_or(usize::MAX));
        self.rows = out;
        self.eliminated = true;
    }

    pub fn is_inconsistent(&self) -> bool {
        self.inconsistent
    }

    pub fn rows(&self) -> &[Gf2Row] {
        &self.rows
    }

    /// Pivot (first) variable of each row, in row order. Valid after
    /// elimination.
    pub fn pivots(&self) -> Vec<Var> {
        debug_assert!(self.eliminated);
        self.rows
            .iter()
            .map(|r| Var::new(r.coeffs.iter_ones().next().unwrap() as u32 + 1))
            .collect()
    }
}
