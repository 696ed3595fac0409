//! Propositional formulas, sampling sets, literal weights and assignments.
//!
//! All types are immutable after construction; operations that look like
//! mutation (e.g. [`block_assignment`]) return new values.

mod dimacs;
mod weights;

pub use dimacs::{parse_dimacs, serialize_dimacs, ParseError};
pub use weights::{Dyadic, VarWeight, WeightMap};

use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// A propositional variable, indexed from 1 (DIMACS convention).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(u32);

impl Var {
    /// Creates a variable. Panics if `index` is zero.
    pub fn new(index: u32) -> Var {
        assert!(index >= 1, "variable index must be >= 1");
        Var(index)
    }

    pub fn index(self) -> u32 {
        self.0
    }

    pub fn positive(self) -> Lit {
        Lit::new(self, true)
    }

    pub fn negative(self) -> Lit {
        Lit::new(self, false)
    }

    pub fn lit(self, positive: bool) -> Lit {
        Lit::new(self, positive)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A literal: a variable together with a polarity.
///
/// Stored as the signed DIMACS code, so `Lit::from_dimacs(-3)` is `¬x₃`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(i32);

impl Lit {
    pub fn new(var: Var, positive: bool) -> Lit {
        let code = var.index() as i32;
        Lit(if positive { code } else { -code })
    }

    /// Parses a nonzero signed DIMACS code.
    pub fn from_dimacs(code: i32) -> Lit {
        assert!(code != 0, "literal code must be nonzero");
        Lit(code)
    }

    pub fn to_dimacs(self) -> i32 {
        self.0
    }

    pub fn var(self) -> Var {
        Var(self.0.unsigned_abs())
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    /// The literal over the same variable with opposite polarity.
    pub fn negated(self) -> Lit {
        Lit(-self.0)
    }

    /// True iff assigning `value` to the variable satisfies this literal.
    pub fn satisfied_by(self, value: bool) -> bool {
        self.is_positive() == value
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An XOR constraint: the variables in `vars` must XOR to `parity`.
///
/// `vars` is kept sorted and duplicate-free (a repeated variable cancels).
/// An empty constraint with `parity = true` is unsatisfiable and serves as
/// the explicit contradiction marker for degenerate hash rows.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct XorClause {
    vars: Vec<Var>,
    parity: bool,
}

impl XorClause {
    /// Normalizing constructor: cancels repeated variables and sorts.
    pub fn new(mut vars: Vec<Var>, parity: bool) -> XorClause {
        vars.sort_unstable();
        let mut out: Vec<Var> = Vec::with_capacity(vars.len());
        for v in vars {
            if out.last() == Some(&v) {
                out.pop();
            } else {
                out.push(v);
            }
        }
        XorClause { vars: out, parity }
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn parity(&self) -> bool {
        self.parity
    }

    /// The always-false constraint (empty XOR equal to 1).
    pub fn contradiction() -> XorClause {
        XorClause {
            vars: Vec::new(),
            parity: true,
        }
    }

    pub fn is_contradiction(&self) -> bool {
        self.vars.is_empty() && self.parity
    }

    pub fn max_var(&self) -> Option<Var> {
        self.vars.last().copied()
    }
}

/// A CNF formula: disjunctive clauses plus native XOR clauses.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CnfFormula {
    num_vars: u32,
    clauses: Vec<Vec<Lit>>,
    xor_clauses: Vec<XorClause>,
}

impl CnfFormula {
    /// An empty formula (no clauses) over `num_vars` variables.
    pub fn new(num_vars: u32) -> CnfFormula {
        CnfFormula {
            num_vars,
            clauses: Vec::new(),
            xor_clauses: Vec::new(),
        }
    }

    pub fn from_clauses(num_vars: u32, clauses: Vec<Vec<Lit>>) -> CnfFormula {
        let mut f = CnfFormula::new(num_vars);
        for c in clauses {
            f.add_clause(c);
        }
        f
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn xor_clauses(&self) -> &[XorClause] {
        &self.xor_clauses
    }

    /// Adds a clause; the empty clause is permitted and marks the formula
    /// trivially unsatisfiable.
    pub fn add_clause(&mut self, clause: Vec<Lit>) {
        for lit in &clause {
            assert!(
                lit.var().index() <= self.num_vars,
                "literal {lit} out of range (num_vars = {})",
                self.num_vars
            );
        }
        self.clauses.push(clause);
    }

    pub fn add_xor(&mut self, xor: XorClause) {
        if let Some(v) = xor.max_var() {
            assert!(
                v.index() <= self.num_vars,
                "xor variable {v} out of range (num_vars = {})",
                self.num_vars
            );
        }
        self.xor_clauses.push(xor);
    }

    /// True iff `assignment` (total over the mentioned variables) satisfies
    /// every clause and every XOR clause.
    pub fn evaluate(&self, assignment: &Assignment) -> bool {
        self.clauses.iter().all(|c| {
            c.iter()
                .any(|l| assignment.value(l.var()).map(|v| l.satisfied_by(v)) == Some(true))
        }) && self
            .xor_clauses
            .iter()
            .all(|x| xor_satisfied(x, assignment))
    }

    pub fn all_vars(&self) -> impl Iterator<Item = Var> + '_ {
        (1..=self.num_vars).map(Var::new)
    }
}

/// A DNF formula: a disjunction of cubes (conjunctions of literals).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DnfFormula {
    num_vars: u32,
    cubes: Vec<Vec<Lit>>,
}

/// Error for a cube containing both a literal and its negation.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("inconsistent cube: contains {lit} and its negation")]
pub struct InconsistentCube {
    pub lit: Lit,
}

impl DnfFormula {
    pub fn new(num_vars: u32) -> DnfFormula {
        DnfFormula {
            num_vars,
            cubes: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn cubes(&self) -> &[Vec<Lit>] {
        &self.cubes
    }

    /// Adds a cube, rejecting internally inconsistent ones.
    pub fn add_cube(&mut self, cube: Vec<Lit>) -> Result<(), InconsistentCube> {
        for lit in &cube {
            assert!(
                lit.var().index() <= self.num_vars,
                "literal {lit} out of range (num_vars = {})",
                self.num_vars
            );
            if cube.contains(&lit.negated()) {
                return Err(InconsistentCube { lit: *lit });
            }
        }
        self.cubes.push(cube);
        Ok(())
    }

    pub fn evaluate(&self, assignment: &Assignment) -> bool {
        self.cubes.iter().any(|cube| {
            cube.iter()
                .all(|l| assignment.value(l.var()).map(|v| l.satisfied_by(v)) == Some(true))
        })
    }
}

fn xor_satisfied(x: &XorClause, assignment: &Assignment) -> bool {
    let mut acc = false;
    for &v in x.vars() {
        match assignment.value(v) {
            Some(b) => acc ^= b,
            None => return false,
        }
    }
    acc == x.parity()
}

/// Either normal form, as parsed from the input header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Cnf(CnfFormula),
    Dnf(DnfFormula),
}

impl Formula {
    pub fn num_vars(&self) -> u32 {
        match self {
            Formula::Cnf(f) => f.num_vars(),
            Formula::Dnf(f) => f.num_vars(),
        }
    }

    pub fn evaluate(&self, assignment: &Assignment) -> bool {
        match self {
            Formula::Cnf(f) => f.evaluate(assignment),
            Formula::Dnf(f) => f.evaluate(assignment),
        }
    }

    pub fn as_cnf(&self) -> Option<&CnfFormula> {
        match self {
            Formula::Cnf(f) => Some(f),
            Formula::Dnf(_) => None,
        }
    }

    pub fn as_dnf(&self) -> Option<&DnfFormula> {
        match self {
            Formula::Dnf(f) => Some(f),
            Formula::Cnf(_) => None,
        }
    }
}

/// The ordered set of variables counting and sampling project onto.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingSet {
    vars: Vec<Var>,
}

impl SamplingSet {
    /// Builds the set; input is sorted and deduplicated.
    pub fn new(mut vars: Vec<Var>) -> SamplingSet {
        vars.sort_unstable();
        vars.dedup();
        SamplingSet { vars }
    }

    /// The default sampling set: all variables of the formula.
    pub fn all(num_vars: u32) -> SamplingSet {
        SamplingSet {
            vars: (1..=num_vars).map(Var::new).collect(),
        }
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn contains(&self, v: Var) -> bool {
        self.vars.binary_search(&v).is_ok()
    }

    /// Position of `v` in the set order, if present. Hash domain bit `k`
    /// corresponds to the variable at position `k`.
    pub fn position(&self, v: Var) -> Option<usize> {
        self.vars.binary_search(&v).ok()
    }
}

/// A (possibly partial) truth assignment, canonically ordered by variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Assignment {
    /// One literal per assigned variable, sorted ascending by variable.
    lits: Vec<Lit>,
}

impl Assignment {
    pub fn new() -> Assignment {
        Assignment::default()
    }

    /// Builds from literals; panics on duplicate variables.
    pub fn from_lits(mut lits: Vec<Lit>) -> Assignment {
        lits.sort_unstable_by_key(|l| l.var());
        for w in lits.windows(2) {
            assert!(w[0].var() != w[1].var(), "duplicate variable {}", w[0].var());
        }
        Assignment { lits }
    }

    /// Builds a total assignment over variables `1..=n` from a value slice.
    pub fn from_values(values: &[bool]) -> Assignment {
        Assignment {
            lits: values
                .iter()
                .enumerate()
                .map(|(i, &b)| Var::new(i as u32 + 1).lit(b))
                .collect(),
        }
    }

    pub fn value(&self, var: Var) -> Option<bool> {
        self.lits
            .binary_search_by_key(&var, |l| l.var())
            .ok()
            .map(|i| self.lits[i].is_positive())
    }

    pub fn lits(&self) -> &[Lit] {
        &self.lits
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    /// Restriction to the sampling set (variables not in `s` are dropped).
    pub fn project(&self, s: &SamplingSet) -> Assignment {
        Assignment {
            lits: self
                .lits
                .iter()
                .copied()
                .filter(|l| s.contains(l.var()))
                .collect(),
        }
    }

    /// True iff every variable of `s` is assigned.
    pub fn is_total_over(&self, s: &SamplingSet) -> bool {
        s.vars().iter().all(|&v| self.value(v).is_some())
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lits {
            write!(f, "{l} ")?;
        }
        write!(f, "0")
    }
}

/// Solutions enumerated by an oracle, projected on the sampling set.
///
/// Solutions are pairwise distinct on the sampling set; `total_weight` is
/// the sum of solution weights (1 each when unweighted) and `min_weight`
/// the minimum weight seen over the enumerated solutions.
#[derive(Debug, Clone, Default)]
pub struct SolutionSet {
    solutions: Vec<Assignment>,
    total_weight: BigRational,
    min_weight: Option<BigRational>,
}

impl SolutionSet {
    pub fn new() -> SolutionSet {
        SolutionSet {
            solutions: Vec::new(),
            total_weight: BigRational::zero(),
            min_weight: None,
        }
    }

    pub fn push(&mut self, a: Assignment) {
        self.push_weighted(a, BigRational::one());
    }

    pub fn push_weighted(&mut self, a: Assignment, weight: BigRational) {
        self.total_weight += &weight;
        match &self.min_weight {
            Some(m) if *m <= weight => {}
            _ => self.min_weight = Some(weight),
        }
        self.solutions.push(a);
    }

    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    pub fn solutions(&self) -> &[Assignment] {
        &self.solutions
    }

    pub fn into_solutions(self) -> Vec<Assignment> {
        self.solutions
    }

    pub fn total_weight(&self) -> &BigRational {
        &self.total_weight
    }

    pub fn min_weight(&self) -> Option<&BigRational> {
        self.min_weight.as_ref()
    }
}

/// A formula bundled with its sampling set and weight map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemInstance {
    pub formula: Formula,
    pub sampling_set: SamplingSet,
    pub weights: WeightMap,
}

impl ProblemInstance {
    /// Wraps a formula with the default sampling set (all variables) and
    /// all-indifferent weights.
    pub fn unweighted(formula: Formula) -> ProblemInstance {
        let n = formula.num_vars();
        ProblemInstance {
            formula,
            sampling_set: SamplingSet::all(n),
            weights: WeightMap::new(),
        }
    }

    pub fn num_vars(&self) -> u32 {
        self.formula.num_vars()
    }

    pub fn is_weighted(&self) -> bool {
        !self.weights.is_all_indifferent()
    }
}

/// Error returned by [`block_assignment`] when the projection is empty.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("cannot block an empty assignment")]
pub struct EmptyBlock;

/// Conjoins the clause that excludes exactly the extensions of `sigma`.
///
/// `sigma` must be total over the sampling set it was projected on; the
/// returned formula has the disjunction of the negations of its literals
/// appended.
pub fn block_assignment(f: &CnfFormula, sigma: &Assignment) -> Result<CnfFormula, EmptyBlock> {
    if sigma.is_empty() {
        return Err(EmptyBlock);
    }
    let mut out = f.clone();
    out.add_clause(sigma.lits().iter().map(|l| l.negated()).collect());
    Ok(out)
}

/// Weight of an assignment: the product of the weights of its literals.
///
/// Variables not mentioned by `sigma` contribute no factor; the caller is
/// responsible for `sigma` covering every normal-weighted variable.
pub fn assignment_weight(weights: &WeightMap, sigma: &Assignment) -> BigRational {
    let mut w = BigRational::one();
    for lit in sigma.lits() {
        w *= weights.literal_weight(*lit);
    }
    w
}

/// Map from each variable of `s` to its value, for display purposes.
pub fn assignment_map(a: &Assignment) -> BTreeMap<Var, bool> {
    a.lits().iter().map(|l| (l.var(), l.is_positive())).collect()
}
