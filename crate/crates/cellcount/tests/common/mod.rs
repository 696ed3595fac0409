//! Shared helpers for the integration and acceptance suites: fast
//! bitmask-based exhaustive oracles, instance generators, and the
//! statistics used by the distribution checks.

#![allow(dead_code)]

use cellcount::formula::{
    CnfFormula, DnfFormula, Formula, Lit, SamplingSet, Var, WeightMap,
};
use cellcount::rng::Rng;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng as _;
use std::collections::HashSet;

/// A clause compiled to positive/negative membership masks.
#[derive(Clone, Copy)]
pub struct MaskClause {
    pub pos: u64,
    pub neg: u64,
}

pub fn compile_clauses(clauses: &[Vec<Lit>]) -> Vec<MaskClause> {
    clauses
        .iter()
        .map(|c| {
            let mut pos = 0u64;
            let mut neg = 0u64;
            for l in c {
                let bit = 1u64 << (l.var().index() - 1);
                if l.is_positive() {
                    pos |= bit;
                } else {
                    neg |= bit;
                }
            }
            MaskClause { pos, neg }
        })
        .collect()
}

#[inline]
pub fn cnf_satisfied(masks: &[MaskClause], bits: u64) -> bool {
    masks
        .iter()
        .all(|m| bits & m.pos != 0 || !bits & m.neg != 0)
}

#[inline]
pub fn dnf_satisfied(masks: &[MaskClause], bits: u64) -> bool {
    masks
        .iter()
        .any(|m| bits & m.pos == m.pos && !bits & m.neg == m.neg)
}

/// Exhaustive model count of a CNF (no XOR clauses) via bitmask scan.
pub fn fast_count_cnf(f: &CnfFormula) -> u64 {
    assert!(f.xor_clauses().is_empty(), "fast path has no XOR support");
    assert!(f.num_vars() <= 26);
    let masks = compile_clauses(f.clauses());
    (0..1u64 << f.num_vars())
        .filter(|&bits| cnf_satisfied(&masks, bits))
        .count() as u64
}

pub fn fast_count_dnf(f: &DnfFormula) -> u64 {
    assert!(f.num_vars() <= 26);
    let masks = compile_clauses(f.cubes());
    (0..1u64 << f.num_vars())
        .filter(|&bits| dnf_satisfied(&masks, bits))
        .count() as u64
}

pub fn fast_count(formula: &Formula) -> u64 {
    match formula {
        Formula::Cnf(f) => fast_count_cnf(f),
        Formula::Dnf(f) => fast_count_dnf(f),
    }
}

/// Exhaustive projected count `|R_{F↓S}|` via bitmask scan.
pub fn fast_count_projected(f: &CnfFormula, s: &SamplingSet) -> u64 {
    assert!(f.xor_clauses().is_empty());
    assert!(f.num_vars() <= 26);
    let masks = compile_clauses(f.clauses());
    let mut proj_mask = 0u64;
    for v in s.vars() {
        proj_mask |= 1u64 << (v.index() - 1);
    }
    let mut seen: HashSet<u64> = HashSet::new();
    for bits in 0..1u64 << f.num_vars() {
        if cnf_satisfied(&masks, bits) {
            seen.insert(bits & proj_mask);
        }
    }
    seen.len() as u64
}

/// Exact weighted count over all variables, exploiting dyadic weights.
pub fn fast_weighted_count(f: &CnfFormula, weights: &WeightMap) -> BigRational {
    assert!(f.xor_clauses().is_empty());
    let masks = compile_clauses(f.clauses());
    let n = f.num_vars();
    let mut total = BigRational::zero();
    for bits in 0..1u64 << n {
        if cnf_satisfied(&masks, bits) {
            let mut w = BigRational::from_integer(1.into());
            for (v, _) in weights.iter() {
                let lit = v.lit(bits >> (v.index() - 1) & 1 == 1);
                w *= weights.literal_weight(lit);
            }
            total += w;
        }
    }
    total
}

/// Random 3-CNF with `m` clauses over `n` variables.
pub fn random_3cnf(n: u32, m: usize, rng: &mut Rng) -> CnfFormula {
    let mut f = CnfFormula::new(n);
    for _ in 0..m {
        let mut vars = HashSet::new();
        while vars.len() < 3.min(n as usize) {
            vars.insert(rng.random_range(1..=n));
        }
        let clause = vars
            .into_iter()
            .map(|v| Var::new(v).lit(rng.random::<bool>()))
            .collect();
        f.add_clause(clause);
    }
    f
}

/// Random DNF with `cubes` cubes over `n` variables.
pub fn random_dnf(n: u32, cubes: usize, rng: &mut Rng) -> DnfFormula {
    let mut f = DnfFormula::new(n);
    for _ in 0..cubes {
        let width = rng.random_range(1..=(n / 2).max(1));
        let mut vars: Vec<u32> = (1..=n).collect();
        for i in 0..width as usize {
            let j = rng.random_range(i..vars.len());
            vars.swap(i, j);
        }
        let cube: Vec<Lit> = vars[..width as usize]
            .iter()
            .map(|&v| Var::new(v).lit(rng.random::<bool>()))
            .collect();
        f.add_cube(cube).unwrap();
    }
    f
}

/// Random satisfiable 3-CNF whose exact count lies in `[lo, hi]`; panics
/// if no instance is found in a bounded number of attempts.
pub fn random_cnf_with_count(
    n: u32,
    lo: u64,
    hi: u64,
    rng: &mut Rng,
) -> (CnfFormula, u64) {
    for _ in 0..40_000 {
        let m = rng.random_range((n as usize)..(4 * n as usize));
        let f = random_3cnf(n, m, rng);
        let count = fast_count_cnf(&f);
        if count >= lo && count <= hi {
            return (f, count);
        }
    }
    panic!("no instance with count in [{lo}, {hi}] over {n} vars found");
}

/// Random Tseitin-encoded circuit: `inputs` free inputs plus gates, each
/// defined from two earlier variables. The inputs form an independent
/// support by construction.
pub fn random_circuit(inputs: u32, gates: u32, rng: &mut Rng) -> CnfFormula {
    let n = inputs + gates;
    let mut f = CnfFormula::new(n);
    for g in 0..gates {
        let out = Var::new(inputs + g + 1);
        let a = Var::new(rng.random_range(1..inputs + g + 1));
        let mut b = Var::new(rng.random_range(1..inputs + g + 1));
        if b == a {
            b = Var::new(if a.index() == 1 { 2.min(inputs + g) } else { a.index() - 1 });
        }
        match rng.random_range(0..3) {
            0 => {
                // out = a AND b
                f.add_clause(vec![out.negative(), a.positive()]);
                f.add_clause(vec![out.negative(), b.positive()]);
                f.add_clause(vec![out.positive(), a.negative(), b.negative()]);
            }
            1 => {
                // out = a OR b
                f.add_clause(vec![out.positive(), a.negative()]);
                f.add_clause(vec![out.positive(), b.negative()]);
                f.add_clause(vec![out.negative(), a.positive(), b.positive()]);
            }
            _ => {
                // out = a XOR b
                f.add_clause(vec![out.negative(), a.positive(), b.positive()]);
                f.add_clause(vec![out.negative(), a.negative(), b.negative()]);
                f.add_clause(vec![out.positive(), a.positive(), b.negative()]);
                f.add_clause(vec![out.positive(), a.negative(), b.positive()]);
            }
        }
    }
    f
}

/// Jensen–Shannon distance (base-2, the square root of the divergence)
/// between an observed count distribution and uniform over `support`.
pub fn js_distance_to_uniform(counts: &[u64], support: usize) -> f64 {
    let total: u64 = counts.iter().sum();
    assert!(total > 0 && support >= counts.len());
    let u = 1.0 / support as f64;
    let mut divergence = 0.0;
    for i in 0..support {
        let p = counts.get(i).copied().unwrap_or(0) as f64 / total as f64;
        let m = 0.5 * (p + u);
        if p > 0.0 {
            divergence += 0.5 * p * (p / m).log2();
        }
        divergence += 0.5 * u * (u / m).log2();
    }
    divergence.max(0.0).sqrt()
}

/// Pearson chi-square statistic against expected probabilities.
pub fn chi_square(counts: &[u64], expected_probs: &[f64]) -> f64 {
    let total: u64 = counts.iter().sum();
    counts
        .iter()
        .zip(expected_probs)
        .map(|(&c, &p)| {
            let e = p * total as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}

/// Geometric mean of observed tolerances `max(est/C − 1, C/est − 1)`.
pub fn geometric_mean(values: &[f64]) -> f64 {
    let log_sum: f64 = values.iter().map(|v| v.max(1e-12).ln()).sum();
    (log_sum / values.len() as f64).exp()
}

pub fn pass(name: &str, detail: impl std::fmt::Display) {
    println!("[PASS] {name}: {detail}");
}
