//! Minimal independent support via group-oriented MUS extraction.
//!
//! A set `S` is an independent support of `F` exactly when the "agreement"
//! formula `Q_{F,S}` — two copies of `F` forced to agree on `S` and to
//! differ somewhere — is unsatisfiable. Minimizing a support is therefore
//! a group-MUS problem: one equality group per candidate variable, with
//! the two formula copies and the disequality as the fixed remainder.

use thiserror::Error;

use crate::formula::{Assignment, CnfFormula, Lit, SamplingSet, Var, XorClause};
use crate::oracle::{builtin_solve, OracleError};
use crate::rng::rng_from_seed;
use rand::seq::SliceRandom;

#[derive(Debug, Error)]
pub enum MisError {
    #[error("candidate set is not an independent support (witness pair attached)")]
    NotASupport {
        first: Box<Assignment>,
        second: Box<Assignment>,
    },
    #[error("under-approximation must be contained in the over-approximation")]
    UnderNotInOver,
    #[error("formula must be CNF without XOR clauses for support minimization")]
    UnsupportedFormula,
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Variable layout of the agreement encoding: original `xᵢ` keeps index
/// `i`, the copy `yᵢ` lives at `n + i`, and `bᵢ` at `2n + i`.
fn y_copy(v: Var, n: u32) -> Var {
    Var::new(v.index() + n)
}

fn b_var(v: Var, n: u32) -> Var {
    Var::new(v.index() + 2 * n)
}

fn shift_clause(clause: &[Lit], n: u32) -> Vec<Lit> {
    clause
        .iter()
        .map(|l| y_copy(l.var(), n).lit(l.is_positive()))
        .collect()
}

fn shift_xor(x: &XorClause, n: u32) -> XorClause {
    XorClause::new(x.vars().iter().map(|&v| y_copy(v, n)).collect(), x.parity())
}

/// Equality clauses `xᵢ = yᵢ` as the pair `(¬xᵢ ∨ yᵢ) ∧ (xᵢ ∨ ¬yᵢ)`.
fn equality_clauses(v: Var, n: u32) -> [Vec<Lit>; 2] {
    let y = y_copy(v, n);
    [
        vec![v.negative(), y.positive()],
        vec![v.positive(), y.negative()],
    ]
}

/// Builds `Q_{F,S} = F(x) ∧ F(y) ∧ ⋀_{i∈S}(xᵢ=yᵢ) ∧ ⋁ᵢ(xᵢ≠yᵢ)` with the
/// disequality ranging over the formula's declared support.
///
/// The disequality disjunct is encoded through `bᵢ` variables with
/// clauses `(¬xᵢ∨¬yᵢ∨bᵢ)`, `(xᵢ∨yᵢ∨bᵢ)` and `(¬b₁∨…∨¬bₙ)`: agreement on
/// variable `i` forces `bᵢ`, so some `bᵢ = 0` certifies a disagreement.
pub fn build_q_formula(f: &CnfFormula, s: &SamplingSet) -> CnfFormula {
    let universe: Vec<Var> = (1..=f.num_vars()).map(Var::new).collect();
    build_q_over(f, s, &universe)
}

/// `Q_{G,S}` with an explicit variable universe (for local-dependency
/// checks over clause subsets, whose support is smaller than `num_vars`).
fn build_q_over(f: &CnfFormula, s: &SamplingSet, universe: &[Var]) -> CnfFormula {
    let n = f.num_vars();
    let mut q = CnfFormula::new(3 * n);
    for c in f.clauses() {
        q.add_clause(c.clone());
    }
    for x in f.xor_clauses() {
        q.add_xor(x.clone());
    }
    for c in f.clauses() {
        q.add_clause(shift_clause(c, n));
    }
    for x in f.xor_clauses() {
        q.add_xor(shift_xor(x, n));
    }
    for &v in s.vars() {
        for c in equality_clauses(v, n) {
            q.add_clause(c);
        }
    }
    let mut last = Vec::with_capacity(universe.len());
    for &v in universe {
        let b = b_var(v, n);
        q.add_clause(vec![v.negative(), y_copy(v, n).negative(), b.positive()]);
        q.add_clause(vec![v.positive(), y_copy(v, n).positive(), b.positive()]);
        last.push(b.negative());
    }
    q.add_clause(last);
    q
}

/// SAT check for a Q-style formula; a model is split back into the two
/// original-variable assignments it encodes.
fn q_witness(q: &CnfFormula, n: u32) -> Result<Option<(Assignment, Assignment)>, OracleError> {
    match builtin_solve(q, &[], None)? {
        None => Ok(None),
        Some(model) => {
            let first = Assignment::from_lits(
                (1..=n)
                    .map(|i| Var::new(i).lit(model.value(Var::new(i)).unwrap()))
                    .collect(),
            );
            let second = Assignment::from_lits(
                (1..=n)
                    .map(|i| Var::new(i).lit(model.value(Var::new(i + n)).unwrap()))
                    .collect(),
            );
            Ok(Some((first, second)))
        }
    }
}

/// True iff `s` is an independent support of `f` (`Q_{F,S}` unsatisfiable).
pub fn is_support(f: &CnfFormula, s: &SamplingSet) -> Result<bool, OracleError> {
    Ok(q_witness(&build_q_formula(f, s), f.num_vars())?.is_none())
}

/// Local-dependency preprocessing: scans candidates in ascending order,
/// testing whether the clauses containing `x` already force `x` from their
/// other variables; hits remove those clauses from the residual formula to
/// break dependency cycles.
pub fn find_local_dependencies(f: &CnfFormula, v: &SamplingSet) -> Result<Vec<Var>, OracleError> {
    let mut residual: Vec<Vec<Lit>> = f.clauses().to_vec();
    let mut z = Vec::new();
    for &x in v.vars() {
        let local: Vec<Vec<Lit>> = residual
            .iter()
            .filter(|c| c.iter().any(|l| l.var() == x))
            .cloned()
            .collect();
        if local.is_empty() {
            continue;
        }
        let mut support: Vec<Var> = local
            .iter()
            .flat_map(|c| c.iter().map(|l| l.var()))
            .collect();
        support.sort_unstable();
        support.dedup();
        support.retain(|&w| w != x);
        // Q over the local clause group, universe = vars(G): is x
        // determined by the rest?
        let mut g = CnfFormula::new(f.num_vars());
        for c in &local {
            g.add_clause(c.clone());
        }
        let mut universe = support.clone();
        universe.push(x);
        let q = build_q_over(&g, &SamplingSet::new(support), &universe);
        if builtin_solve(&q, &[], None)?.is_none() {
            z.push(x);
            residual.retain(|c| !c.iter().any(|l| l.var() == x));
        }
    }
    Ok(z)
}

/// The group-MUS instance: the remainder `Ω` plus one equality group per
/// candidate variable.
#[derive(Debug, Clone)]
pub struct GmusInstance {
    /// `F(x) ∧ F(y) ∧ ⋀_{i∈U}(xᵢ=yᵢ) ∧ ⋁(xᵢ≠yᵢ)`.
    pub remainder: CnfFormula,
    /// `(variable, its two equality clauses)` for each group.
    pub groups: Vec<(Var, [Vec<Lit>; 2])>,
}

impl GmusInstance {
    /// SAT check of `Ω ∧ (kept groups)`.
    fn sat_with(&self, kept: &[bool]) -> Result<bool, OracleError> {
        let mut f = self.remainder.clone();
        for (keep, (_, clauses)) in kept.iter().zip(&self.groups) {
            if *keep {
                for c in clauses {
                    f.add_clause(c.clone());
                }
            }
        }
        Ok(builtin_solve(&f, &[], None)?.is_some())
    }
}

/// Builds the GMUS instance for minimizing within `v`, relative to the
/// must-keep under-approximation `u`. Fails (with a witnessing model pair)
/// when `v` is not an independent support.
pub fn translate_to_gmus(
    f: &CnfFormula,
    u: &SamplingSet,
    v: &SamplingSet,
) -> Result<GmusInstance, MisError> {
    if !u.vars().iter().all(|&x| v.contains(x)) {
        return Err(MisError::UnderNotInOver);
    }
    if let Some((first, second)) = q_witness(&build_q_formula(f, v), f.num_vars())? {
        return Err(MisError::NotASupport {
            first: Box::new(first),
            second: Box::new(second),
        });
    }
    let n = f.num_vars();
    let remainder = build_q_formula(f, &SamplingSet::new(u.vars().to_vec()));
    let groups = v
        .vars()
        .iter()
        .filter(|x| !u.contains(**x))
        .map(|&x| (x, equality_clauses(x, n)))
        .collect();
    Ok(GmusInstance { remainder, groups })
}

/// Deletion-based GMUS: tentatively drop each group in the given order;
/// keep the drop whenever the rest stays unsatisfiable. One SAT call per
/// group. Anytime: when `budget` runs out the current kept set is returned
/// sound but flagged non-minimal.
pub fn gmus_deletion(
    gi: &GmusInstance,
    order: &[usize],
    budget: Option<u64>,
) -> Result<(Vec<usize>, bool), MisError> {
    let mut kept = vec![true; gi.groups.len()];
    let mut calls = 0u64;
    let mut minimal = true;
    for &g in order {
        if let Some(b) = budget {
            if calls >= b {
                minimal = false;
                break;
            }
        }
        kept[g] = false;
        calls += 1;
        if gi.sat_with(&kept)? {
            kept[g] = true;
        }
    }
    let kept_indices = (0..gi.groups.len()).filter(|&i| kept[i]).collect();
    Ok((kept_indices, minimal))
}

/// The computed support sets.
#[derive(Debug, Clone)]
pub struct SupportSets {
    /// Locally dependent variables removed up front.
    pub locally_dependent: Vec<Var>,
    /// The computed independent support.
    pub support: SamplingSet,
    /// Whether per-element minimality was fully established.
    pub minimal: bool,
}

/// Minimal-independent-support driver.
///
/// Defaults: `u` empty, `v` all variables. Group deletion order is
/// randomized by `seed`, so different seeds can produce different minimal
/// supports. When the supplied `v` is not a support, the two-step repair
/// runs: first minimize relative to `(U:=v, V:=all)` to find a superset
/// support, then minimize within it.
pub fn mis(
    f: &CnfFormula,
    u: Option<&SamplingSet>,
    v: Option<&SamplingSet>,
    seed: u64,
    budget: Option<u64>,
) -> Result<SupportSets, MisError> {
    let all = SamplingSet::all(f.num_vars());
    let empty = SamplingSet::new(vec![]);
    let u = u.unwrap_or(&empty);
    let v = v.unwrap_or(&all);
    if !u.vars().iter().all(|&x| v.contains(x)) {
        return Err(MisError::UnderNotInOver);
    }

    if *v != all && !is_support(f, v)? {
        // User repair: treat v as an under-approximation first.
        let widened = mis(f, Some(v), Some(&all), seed, budget)?;
        if !widened.minimal {
            return Ok(widened);
        }
        return mis(f, Some(u), Some(&widened.support), seed, budget);
    }

    let z = find_local_dependencies(f, v)?;
    let v_refined = SamplingSet::new(
        v.vars()
            .iter()
            .copied()
            .filter(|x| !z.contains(x) || u.contains(*x))
            .collect(),
    );
    // Dropping locally dependent variables is guaranteed sound only when
    // the candidates span the whole support: a dependency may point at
    // variables outside a user-restricted v, in which case v \ Z can stop
    // being a support. Fall back to the unrefined v then.
    let (v_refined, z) = if *v != all && !is_support(f, &v_refined)? {
        (v.clone(), Vec::new())
    } else {
        (v_refined, z)
    };
    let gi = translate_to_gmus(f, u, &v_refined)?;
    let mut order: Vec<usize> = (0..gi.groups.len()).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let (kept, minimal) = gmus_deletion(&gi, &order, budget)?;
    let mut vars: Vec<Var> = u.vars().to_vec();
    vars.extend(kept.iter().map(|&i| gi.groups[i].0));
    Ok(SupportSets {
        locally_dependent: z,
        support: SamplingSet::new(vars),
        minimal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact;

    fn lit(code: i32) -> Lit {
        Lit::from_dimacs(code)
    }

    /// (a ∨ ¬b) ∧ (¬a ∨ b): supports are {a}, {b}, {a,b}.
    fn equivalence_formula() -> CnfFormula {
        CnfFormula::from_clauses(2, vec![vec![lit(1), lit(-2)], vec![lit(-1), lit(2)]])
    }

    #[test]
    fn q_formula_examples() {
        let f = equivalence_formula();
        // S = {a}: Q UNSAT (a determines b).
        assert!(is_support(&f, &SamplingSet::new(vec![Var::new(1)])).unwrap());
        // S = ∅: Q SAT (two distinct models agree vacuously).
        assert!(!is_support(&f, &SamplingSet::new(vec![])).unwrap());
        // S = all vars: Q UNSAT for every satisfiable formula.
        assert!(is_support(&f, &SamplingSet::all(2)).unwrap());
    }

    #[test]
    fn local_dependency_gate_example() {
        // Clauses (¬x∨y∨b), (x∨¬y), (x∨¬b) define x = y ∨ b.
        let f = CnfFormula::from_clauses(
            3,
            vec![
                vec![lit(-1), lit(2), lit(3)],
                vec![lit(1), lit(-2)],
                vec![lit(1), lit(-3)],
            ],
        );
        let z = find_local_dependencies(&f, &SamplingSet::all(3)).unwrap();
        assert!(z.contains(&Var::new(1)));
    }

    #[test]
    fn local_dependency_cycle_broken() {
        // (¬x∨y) ∧ (x∨¬y): x and y determine each other; at most one may
        // enter Z.
        let f = CnfFormula::from_clauses(2, vec![vec![lit(-1), lit(2)], vec![lit(1), lit(-2)]]);
        let z = find_local_dependencies(&f, &SamplingSet::all(2)).unwrap();
        assert!(z.len() <= 1);
        // No local structure → Z = ∅.
        let f = CnfFormula::from_clauses(2, vec![vec![lit(1), lit(2)]]);
        let z = find_local_dependencies(&f, &SamplingSet::all(2)).unwrap();
        assert!(z.is_empty());
    }

    #[test]
    fn translate_rejects_non_support() {
        // x₃ free: {x₁} is not a support of a formula whose models differ
        // on x₃.
        let f = CnfFormula::from_clauses(3, vec![vec![lit(1)]]);
        let err = translate_to_gmus(
            &f,
            &SamplingSet::new(vec![]),
            &SamplingSet::new(vec![Var::new(1)]),
        )
        .unwrap_err();
        match err {
            MisError::NotASupport { first, second } => {
                assert_ne!(first, second);
                let s = SamplingSet::new(vec![Var::new(1)]);
                assert_eq!(first.project(&s), second.project(&s));
                assert!(f.evaluate(&first) && f.evaluate(&second));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn translate_full_u_gives_unsat_remainder() {
        let f = equivalence_formula();
        let all = SamplingSet::all(2);
        let gi = translate_to_gmus(&f, &all, &all).unwrap();
        assert!(gi.groups.is_empty());
        assert!(!gi.sat_with(&[]).unwrap());
    }

    #[test]
    fn deletion_is_minimal_and_order_dependent() {
        let f = equivalence_formula();
        let gi = translate_to_gmus(&f, &SamplingSet::new(vec![]), &SamplingSet::all(2)).unwrap();
        assert_eq!(gi.groups.len(), 2);
        // Either singleton group suffices: the one tried first gets
        // dropped, keeping the other.
        let (kept_a, min_a) = gmus_deletion(&gi, &[0, 1], None).unwrap();
        assert!(min_a);
        assert_eq!(kept_a, vec![1]);
        let (kept_b, min_b) = gmus_deletion(&gi, &[1, 0], None).unwrap();
        assert!(min_b);
        assert_eq!(kept_b, vec![0]);
        // Budget 0: anytime contract returns all groups, non-minimal.
        let (kept_c, min_c) = gmus_deletion(&gi, &[0, 1], Some(0)).unwrap();
        assert!(!min_c);
        assert_eq!(kept_c, vec![0, 1]);
    }

    #[test]
    fn mis_on_equivalence_formula() {
        let f = equivalence_formula();
        for seed in 0..6 {
            let out = mis(&f, None, None, seed, None).unwrap();
            assert_eq!(out.support.len(), 1, "seed {seed}");
            assert!(out.minimal);
            assert!(exact::is_independent_support(&f, &out.support));
        }
    }

    #[test]
    fn mis_all_free_vars_keeps_everything() {
        // n independent free variables: the only support is all of them.
        let f = CnfFormula::new(4);
        let out = mis(&f, None, None, 3, None).unwrap();
        assert_eq!(out.support, SamplingSet::all(4));
    }

    #[test]
    fn mis_accepts_minimal_user_support() {
        // V = {a} is already a minimal support of (a ↔ b); the local
        // dependency a = f(b) must not strip it down to nothing.
        let f = equivalence_formula();
        let v = SamplingSet::new(vec![Var::new(1)]);
        let out = mis(&f, None, Some(&v), 9, None).unwrap();
        assert_eq!(out.support, v);
        assert!(out.minimal);
    }

    #[test]
    fn mis_repair_mode_on_bad_user_input() {
        // Bad user over-approximation {x₁} for a formula where x₃ is free.
        let f = CnfFormula::from_clauses(3, vec![vec![lit(1), lit(2)]]);
        let bad_v = SamplingSet::new(vec![Var::new(1)]);
        let out = mis(&f, None, Some(&bad_v), 5, None).unwrap();
        assert!(exact::is_independent_support(&f, &out.support));
        assert!(out.minimal);
    }
}
