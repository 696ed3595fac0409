//! Exhaustive reference oracles.
//!
//! Straight-line enumeration over all `2^n` assignments, deliberately
//! independent of the solver and hashing machinery. These back the test
//! suites and the small-instance paths of the toolkit; they are only
//! usable for `n` around 24 and below.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::formula::{
    Assignment, CnfFormula, Formula, SamplingSet, WeightMap, XorClause,
};

/// Practical ceiling for exhaustive enumeration.
pub const MAX_EXHAUSTIVE_VARS: u32 = 26;

fn assignment_from_bits(n: u32, bits: u64) -> Assignment {
    Assignment::from_values(&(0..n).map(|i| bits >> i & 1 == 1).collect::<Vec<_>>())
}

fn xors_satisfied(xors: &[XorClause], a: &Assignment) -> bool {
    xors.iter().all(|x| {
        let mut acc = false;
        for &v in x.vars() {
            acc ^= a.value(v) == Some(true);
        }
        acc == x.parity()
    })
}

/// All satisfying assignments of `formula ∧ xors`, projected on `s`.
pub fn enumerate_projected(
    formula: &Formula,
    xors: &[XorClause],
    s: &SamplingSet,
) -> BTreeSet<Assignment> {
    let n = formula.num_vars();
    assert!(n <= MAX_EXHAUSTIVE_VARS, "too many variables to enumerate");
    let mut out = BTreeSet::new();
    for bits in 0..1u64 << n {
        let a = assignment_from_bits(n, bits);
        if formula.evaluate(&a) && xors_satisfied(xors, &a) {
            out.insert(a.project(s));
        }
    }
    out
}

/// `|R_{F↓S}|` by exhaustive enumeration.
pub fn count_projected(formula: &Formula, s: &SamplingSet) -> u64 {
    enumerate_projected(formula, &[], s).len() as u64
}

/// Model count of `F ∧ xors` over all variables.
pub fn count_models_with_xors(cnf: &CnfFormula, xors: &[XorClause]) -> u64 {
    let n = cnf.num_vars();
    assert!(n <= MAX_EXHAUSTIVE_VARS, "too many variables to enumerate");
    let mut count = 0;
    for bits in 0..1u64 << n {
        let a = assignment_from_bits(n, bits);
        if cnf.evaluate(&a) && xors_satisfied(xors, &a) {
            count += 1;
        }
    }
    count
}

/// Model count over all variables, as a big integer for convenience.
pub fn count_models(formula: &Formula) -> BigUint {
    let s = SamplingSet::all(formula.num_vars());
    BigUint::from(enumerate_projected(formula, &[], &s).len())
}

/// Exact weighted model count `W(F↓S)` by exhaustive enumeration.
///
/// Solutions are projected on `s` first and deduplicated, then weighed, so
/// the result matches the Σ¹₁ semantics the hashing algorithms estimate.
pub fn weighted_count_projected(
    formula: &Formula,
    s: &SamplingSet,
    weights: &WeightMap,
) -> BigRational {
    let mut total = BigRational::zero();
    for a in enumerate_projected(formula, &[], s) {
        total += crate::formula::assignment_weight(weights, &a);
    }
    total
}

/// Tilt of the projected solution space: max weight / min weight, `None`
/// for an unsatisfiable formula.
pub fn tilt(formula: &Formula, s: &SamplingSet, weights: &WeightMap) -> Option<BigRational> {
    let sols = enumerate_projected(formula, &[], s);
    let mut max: Option<BigRational> = None;
    let mut min: Option<BigRational> = None;
    for a in sols {
        let w = crate::formula::assignment_weight(weights, &a);
        if max.as_ref().is_none_or(|m| w > *m) {
            max = Some(w.clone());
        }
        if min.as_ref().is_none_or(|m| w < *m) {
            min = Some(w);
        }
    }
    Some(max? / min?)
}

/// Brute-force check that `cand` is an independent support of `f`: no two
/// satisfying assignments agree on `cand` while differing elsewhere.
pub fn is_independent_support(f: &CnfFormula, cand: &SamplingSet) -> bool {
    let n = f.num_vars();
    assert!(n <= MAX_EXHAUSTIVE_VARS, "too many variables to enumerate");
    let mut seen: std::collections::BTreeMap<Assignment, Assignment> =
        std::collections::BTreeMap::new();
    for bits in 0..1u64 << n {
        let a = assignment_from_bits(n, bits);
        if f.evaluate(&a) {
            let key = a.project(cand);
            if let Some(prev) = seen.get(&key) {
                if *prev != a {
                    return false;
                }
            } else {
                seen.insert(key, a);
            }
        }
    }
    true
}

/// Integer weight helper for weighted brute forcing: every model's weight
/// scaled by `2^{m̂}` is a natural number when all weights are dyadic.
pub fn scaled_weight_numerator(weights: &WeightMap, a: &Assignment) -> Option<BigUint> {
    let mut num = BigUint::one();
    for lit in a.lits() {
        match weights.dyadic(lit.var()) {
            Some(d) => {
                let k = if lit.is_positive() {
                    d.k
                } else {
                    (1u64 << d.m) - d.k
                };
                num *= BigUint::from(k);
            }
            None => {
                if !matches!(
                    weights.entry(lit.var()),
                    crate::formula::VarWeight::Indifferent
                ) {
                    return None;
                }
            }
        }
    }
    Some(num)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{Lit, Var};

    #[test]
    fn count_small_formula() {
        let f = CnfFormula::from_clauses(
            2,
            vec![vec![Lit::from_dimacs(1), Lit::from_dimacs(2)]],
        );
        assert_eq!(count_models(&Formula::Cnf(f)), BigUint::from(3u32));
    }

    #[test]
    fn weighted_count_example() {
        // F = (x₁ ↔ ¬x₂) with W(x₁¹) = 3/4, x₂ indifferent → W(F) = 1.
        let mut f = CnfFormula::new(2);
        f.add_clause(vec![Lit::from_dimacs(1), Lit::from_dimacs(2)]);
        f.add_clause(vec![Lit::from_dimacs(-1), Lit::from_dimacs(-2)]);
        let mut w = WeightMap::new();
        w.set_normal(Var::new(1), BigRational::new(3.into(), 4.into()))
            .unwrap();
        let s = SamplingSet::all(2);
        assert_eq!(
            weighted_count_projected(&Formula::Cnf(f), &s, &w),
            BigRational::one()
        );
    }

    #[test]
    fn independent_support_example() {
        // (a ∨ ¬b) ∧ (¬a ∨ b): {a}, {b}, {a,b} are supports.
        let f = CnfFormula::from_clauses(
            2,
            vec![
                vec![Lit::from_dimacs(1), Lit::from_dimacs(-2)],
                vec![Lit::from_dimacs(-1), Lit::from_dimacs(2)],
            ],
        );
        assert!(is_independent_support(&f, &SamplingSet::new(vec![Var::new(1)])));
        assert!(is_independent_support(&f, &SamplingSet::new(vec![Var::new(2)])));
        assert!(is_independent_support(&f, &SamplingSet::all(2)));
    }
}
