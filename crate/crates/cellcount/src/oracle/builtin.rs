//! Built-in solver: DPLL over disjunctive clauses with incremental GF(2)
//! reasoning over XOR constraints.
//!
//! Static ascending variable order, two-watched-literal propagation, no
//! clause learning. Sound and complete; deterministic. Sized for formulas
//! up to a few tens of thousands of variables, tuned for the desk scale
//! (≤ 10³) this crate's algorithms operate at.

use super::gf2::Gf2System;
use super::{OracleError, OracleStats, StopRule};
use crate::formula::{
    assignment_weight, Assignment, CnfFormula, Lit, SamplingSet, SolutionSet, Var, WeightMap,
    XorClause,
};
use num_rational::BigRational;
use num_traits::One;

#[derive(Debug, Clone, Copy, Default)]
pub struct SolverStats {
    pub solves: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub conflicts: u64,
}

#[derive(Debug, Clone, Copy)]
struct Level {
    decision_var: u32,
    trail_start: usize,
    flipped: bool,
}

#[derive(Debug, Clone)]
struct XorRow {
    vars: Vec<u32>,
    rhs: bool,
}

/// One DPLL search instance over a fixed clause database.
///
/// Blocking clauses may be appended between [`solve`](Self::solve) calls;
/// each call restarts the search from scratch.
pub struct BuiltinSolver {
    num_vars: usize,
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<u32>>,
    values: Vec<i8>,
    trail: Vec<u32>,
    qhead: usize,
    levels: Vec<Level>,
    xor_rows: Vec<XorRow>,
    root_conflict: bool,
    conflict_budget: Option<u64>,
    pub stats: SolverStats,
}

#[inline]
fn slot(l: Lit) -> usize {
    (l.var().index() as usize - 1) * 2 + usize::from(!l.is_positive())
}

impl BuiltinSolver {
    pub fn new(cnf: &CnfFormula, extra_xors: &[XorClause]) -> BuiltinSolver {
        let num_vars = cnf.num_vars() as usize;
        let mut sys = Gf2System::new(num_vars);
        for x in cnf.xor_clauses().iter().chain(extra_xors) {
            sys.add_xor(x);
        }
        sys.eliminate();
        let xor_rows = sys
            .rows()
            .iter()
            .map(|r| XorRow {
                vars: r.vars().map(|v| v.index()).collect(),
                rhs: r.rhs,
            })
            .collect();

        let mut solver = BuiltinSolver {
            num_vars,
            clauses: Vec::with_capacity(cnf.clauses().len()),
            watches: vec![Vec::new(); num_vars * 2],
            values: vec![0; num_vars],
            trail: Vec::new(),
            qhead: 0,
            levels: Vec::new(),
            xor_rows,
            root_conflict: sys.is_inconsistent(),
            conflict_budget: None,
            stats: SolverStats::default(),
        };
        for c in cnf.clauses() {
            solver.add_clause(c.clone());
        }
        solver
    }

    /// Caps the total number of conflicts over this solver's lifetime
    /// (i.e. across the searches of one enumeration).
    pub fn set_conflict_budget(&mut self, budget: Option<u64>) {
        self.conflict_budget = budget;
    }

    pub fn add_clause(&mut self, mut clause: Vec<Lit>) {
        clause.sort_unstable_by_key(|l| (l.var(), l.is_positive()));
        clause.dedup();
        // Tautologies hold vacuously; after sorting, complementary literals
        // are adjacent.
        if clause.windows(2).any(|w| w[0].var() == w[1].var()) {
            return;
        }
        match clause.len() {
            0 => self.root_conflict = true,
            _ => {
                let ci = self.clauses.len() as u32;
                self.watches[slot(clause[0])].push(ci);
                if clause.len() >= 2 {
                    self.watches[slot(clause[1])].push(ci);
                }
                self.clauses.push(clause);
            }
        }
    }

    #[inline]
    fn lit_value(&self, l: Lit) -> i8 {
        let v = self.values[l.var().index() as usize - 1];
        if l.is_positive() {
            v
        } else {
            -v
        }
    }

    #[inline]
    fn assign(&mut self, var: u32, value: bool) {
        debug_assert_eq!(self.values[var as usize - 1], 0);
        self.values[var as usize - 1] = if value { 1 } else { -1 };
        self.trail.push(var);
    }

    /// Clause propagation via watched literals plus GF(2) row scans, run to
    /// a joint fixpoint. Returns false on conflict.
    fn propagate(&mut self) -> bool {
        loop {
            while self.qhead < self.trail.len() {
                let var = self.trail[self.qhead];
                self.qhead += 1;
                self.stats.propagations += 1;
                let value = self.values[var as usize - 1] == 1;
                let false_lit = Var::new(var).lit(!value);
                if !self.visit_watches(false_lit) {
                    return false;
                }
            }
            match self.scan_xor_rows() {
                None => return false,
                Some(true) => continue, // implied units enqueued, re-propagate
                Some(false) => return true,
            }
        }
    }

    fn visit_watches(&mut self, false_lit: Lit) -> bool {
        let sl = slot(false_lit);
        let mut i = 0;
        'watches: while i < self.watches[sl].len() {
            let ci = self.watches[sl][i] as usize;
            // Unit clauses stay put; they are handled at solve start.
            if self.clauses[ci].len() < 2 {
                i += 1;
                continue;
            }
            if self.clauses[ci][0] == false_lit {
                self.clauses[ci].swap(0, 1);
            }
            let first = self.clauses[ci][0];
            if self.lit_value(first) == 1 {
                i += 1;
                continue;
            }
            for k in 2..self.clauses[ci].len() {
                if self.lit_value(self.clauses[ci][k]) != -1 {
                    self.clauses[ci].swap(1, k);
                    let new_watch = self.clauses[ci][1];
                    self.watches[sl].swap_remove(i);
                    self.watches[slot(new_watch)].push(ci as u32);
                    continue 'watches;
                }
            }
            // No replacement: clause is unit on `first` or conflicting.
            match self.lit_value(first) {
                -1 => return false,
                0 => self.assign(first.var().index(), first.is_positive()),
                _ => unreachable!(),
            }
            i += 1;
        }
        true
    }

    /// Scans XOR rows for implied units or parity conflicts.
    /// `None` = conflict, `Some(true)` = at least one unit enqueued.
    fn scan_xor_rows(&mut self) -> Option<bool> {
        let mut implied = false;
        for ri in 0..self.xor_rows.len() {
            let mut unassigned = 0u32;
            let mut last_unassigned = 0u32;
            let mut parity = false;
            for &v in &self.xor_rows[ri].vars {
                match self.values[v as usize - 1] {
                    0 => {
                        unassigned += 1;
                        last_unassigned = v;
                        if unassigned > 1 {
                            break;
                        }
                    }
                    1 => parity ^= true,
                    _ => {}
                }
            }
            match unassigned {
                0 => {
                    if parity != self.xor_rows[ri].rhs {
                        return None;
                    }
                }
                1 => {
                    let value = self.xor_rows[ri].rhs ^ parity;
                    self.assign(last_unassigned, value);
                    implied = true;
                }
                _ => {}
            }
        }
        Some(implied)
    }

    fn backtrack_to(&mut self, trail_start: usize) {
        for &v in &self.trail[trail_start..] {
            self.values[v as usize - 1] = 0;
        }
        self.trail.truncate(trail_start);
        self.qhead = trail_start.min(self.qhead);
    }

    /// Chronological backtracking: flip the deepest unflipped decision.
    /// Returns false when the root level is reached (UNSAT).
    fn resolve_conflict(&mut self) -> Result<bool, OracleError> {
        self.stats.conflicts += 1;
        if let Some(b) = self.conflict_budget {
            if self.stats.conflicts > b {
                return Err(OracleError::BudgetExceeded(b));
            }
        }
        while let Some(top) = self.levels.last().copied() {
            if top.flipped {
                self.backtrack_to(top.trail_start);
                self.levels.pop();
                continue;
            }
            self.backtrack_to(top.trail_start);
            self.levels.last_mut().unwrap().flipped = true;
            self.assign(top.decision_var, true);
            self.qhead = self.trail.len() - 1;
            return Ok(true);
        }
        Ok(false)
    }

    /// First unassigned variable in static ascending order, scanning from
    /// past the current deepest decision (everything below is assigned).
    fn pick_branch_var(&self) -> Option<u32> {
        let start = self.levels.last().map_or(0, |l| l.decision_var as usize);
        (start..self.num_vars)
            .find(|&i| self.values[i] == 0)
            .map(|i| i as u32 + 1)
    }

    /// One complete search. `Some(model)` is total over all variables.
    pub fn solve(&mut self) -> Result<Option<Vec<bool>>, OracleError> {
        self.stats.solves += 1;
        if self.root_conflict {
            return Ok(None);
        }
        self.backtrack_to(0);
        self.levels.clear();
        self.qhead = 0;

        // Root units.
        for ci in 0..self.clauses.len() {
            if self.clauses[ci].len() == 1 {
                let l = self.clauses[ci][0];
                match self.lit_value(l) {
                    -1 => return Ok(None),
                    0 => self.assign(l.var().index(), l.is_positive()),
                    _ => {}
                }
            }
        }

        loop {
            if !self.propagate() {
                if !self.resolve_conflict()? {
                    return Ok(None);
                }
                continue;
            }
            match self.pick_branch_var() {
                None => {
                    return Ok(Some(
                        self.values.iter().map(|&v| v == 1).collect(),
                    ));
                }
                Some(var) => {
                    self.stats.decisions += 1;
                    self.levels.push(Level {
                        decision_var: var,
                        trail_start: self.trail.len(),
                        flipped: false,
                    });
                    self.assign(var, false);
                }
            }
        }
    }
}

/// Solves `F ∧ xors` once: one model (total over all variables) or UNSAT.
pub fn builtin_solve(
    cnf: &CnfFormula,
    extra_xors: &[XorClause],
    conflict_budget: Option<u64>,
) -> Result<Option<Assignment>, OracleError> {
    let mut solver = BuiltinSolver::new(cnf, extra_xors);
    solver.set_conflict_budget(conflict_budget);
    Ok(solver.solve()?.map(|m| Assignment::from_values(&m)))
}

/// Enumeration by blocking, projected on the sampling set.
///
/// Returns up to `limit` S-distinct solutions; blocking clauses are
/// restricted to `s` and added in-memory. When `stop` is supplied it is
/// evaluated after each solution and enumeration halts as soon as it fires.
#[allow(clippy::too_many_arguments)]
pub fn bounded_enumerate(
    cnf: &CnfFormula,
    extra_xors: &[XorClause],
    s: &SamplingSet,
    limit: u64,
    mut stop: Option<StopRule<'_>>,
    weights: Option<&WeightMap>,
    conflict_budget: Option<u64>,
    stats: &mut OracleStats,
) -> Result<SolutionSet, OracleError> {
    let mut solver = BuiltinSolver::new(cnf, extra_xors);
    solver.set_conflict_budget(conflict_budget);
    let mut out = SolutionSet::new();
    while (out.len() as u64) < limit {
        stats.solver_calls += 1;
        let model = solver.solve()?;
        stats.decisions += solver.stats.decisions;
        stats.propagations += solver.stats.propagations;
        solver.stats.decisions = 0;
        solver.stats.propagations = 0;
        let Some(model) = model else { break };
        let full = Assignment::from_values(&model);
        let projected = full.project(s);
        let weight = match weights {
            Some(w) => assignment_weight(w, &projected),
            None => BigRational::one(),
        };
        out.push_weighted(projected.clone(), weight);
        if let Some(stop) = stop.as_deref_mut() {
            if stop(&projected) {
                break;
            }
        }
        // Block exactly the extensions of this S-projection. An empty
        // projection (S = ∅) blocks everything via the empty clause.
        solver.add_clause(projected.lits().iter().map(|l| l.negated()).collect());
        if projected.is_empty() {
            break;
        }
    }
    Ok(out)
}
