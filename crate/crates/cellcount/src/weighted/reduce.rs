//! Exact reductions from literal-weighted (and constraint-weighted) model
//! counting to unweighted counting via chain formulas.
//!
//! Every normal-weighted variable `xᵢ` with weight `kᵢ/2^{mᵢ}` gets a fresh
//! block of `mᵢ` variables carrying a chain formula `φᵢ` with exactly `kᵢ`
//! models; tying `xᵢ ↔ φᵢ` makes each original model fan out into a number
//! of models proportional to its weight. All identities are exact:
//! `W(F) = C_F·|R| − correction` with `C_F = 2^{−m̂}`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use super::chain::{ChainError, ChainFormula};
use crate::formula::{
    CnfFormula, DnfFormula, Dyadic, Formula, Lit, ProblemInstance, SamplingSet, Var, WeightMap,
};

#[derive(Debug, Error)]
pub enum ReduceError {
    #[error("variable {0} has a non-dyadic weight (reductions need k/2^m, m ≤ 16)")]
    NonDyadicWeight(Var),
    #[error("constraint group {0} has a non-dyadic weight")]
    NonDyadicGroup(usize),
    #[error("conjunctive reduction requires a CNF input")]
    NeedsCnf,
    #[error("implicative reduction requires a DNF input (or a CNF of unit clauses)")]
    NeedsDnf,
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// How the reduced formula relates to the weighted input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionMode {
    /// Thm-13a shape: `F ∧ Ω`, `W(F) = C_F·|R|`.
    Conjunctive,
    /// Thm-13b shape: `Ω → F`, `W(F) = C_F·|R| − 2ⁿ(1 − 2^{−|N_F|})`.
    Implicative,
    /// Normal-form preserving (CNF→CNF or DNF→DNF).
    FormPreserving,
    /// Constraint-weighted (groups instead of literals).
    ConstraintWeighted,
}

/// Fresh-block bookkeeping for one weighted variable or group.
#[derive(Debug, Clone)]
pub struct BlockAssignment {
    pub dyadic: Dyadic,
    pub fresh: Vec<Var>,
}

/// The reduction result: an unweighted instance plus the exact identity
/// `W(F) = constant · |R| − correction`.
#[derive(Debug)]
pub struct Reduction {
    pub mode: ReductionMode,
    pub instance: ProblemInstance,
    pub blocks: Vec<(Var, BlockAssignment)>,
    /// `m̂ = Σ mᵢ`.
    pub total_bits: u32,
    /// `C_F = 2^{−m̂}` (or `C_G` for constraint groups).
    pub constant: BigRational,
    pub correction: BigRational,
}

impl Reduction {
    /// Applies the identity to an unweighted count of the reduced formula.
    pub fn recover_weight(&self, reduced_count: &BigRational) -> BigRational {
        &self.constant * reduced_count - &self.correction
    }
}

fn dyadic_blocks(
    weights: &WeightMap,
    next_fresh: &mut u32,
) -> Result<Vec<(Var, BlockAssignment)>, ReduceError> {
    let mut blocks = Vec::new();
    for v in weights.normal_vars() {
        let dyadic = weights.dyadic(v).ok_or(ReduceError::NonDyadicWeight(v))?;
        let fresh: Vec<Var> = (0..dyadic.m).map(|_| {
            let var = Var::new(*next_fresh);
            *next_fresh += 1;
            var
        })
        .collect();
        blocks.push((v, BlockAssignment { dyadic, fresh }));
    }
    Ok(blocks)
}

fn pow2_rational(bits: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << bits as usize)
}

/// The CNF clauses of `x ↔ φ`: `(¬x ∨ φ^CNF) ∧ (x ∨ (¬φ)^CNF)` with the
/// outer literal distributed into every clause.
fn biconditional_clauses(x: Var, chain: &ChainFormula) -> Vec<Vec<Lit>> {
    let mut out = Vec::new();
    for mut c in chain.cnf_clauses() {
        c.insert(0, x.negative());
        out.push(c);
    }
    for mut c in chain.negated_cnf_clauses() {
        c.insert(0, x.positive());
        out.push(c);
    }
    out
}

fn build_blocks_and_omega(
    instance: &ProblemInstance,
) -> Result<(Vec<(Var, BlockAssignment)>, Vec<Vec<Lit>>, u32), ReduceError> {
    let mut next_fresh = instance.num_vars() + 1;
    let blocks = dyadic_blocks(&instance.weights, &mut next_fresh)?;
    let mut omega = Vec::new();
    let mut total_bits = 0;
    for (v, block) in &blocks {
        let chain = ChainFormula::new(block.dyadic.k, block.dyadic.m, block.fresh.clone())?;
        omega.extend(biconditional_clauses(*v, &chain));
        total_bits += block.dyadic.m;
    }
    Ok((blocks, omega, total_bits))
}

/// Thm-13a route: `F̂ = F ∧ Ω`, realized in CNF so the result is directly
/// countable. `W(F) = C_F · |R_{F̂}|` exactly; the sampling set covers all
/// variables of the reduced formula (counting only — samplers must not use
/// this reduction).
pub fn reduce_wmc_conjunctive(instance: &ProblemInstance) -> Result<Reduction, ReduceError> {
    let Formula::Cnf(f) = &instance.formula else {
        return Err(ReduceError::NeedsCnf);
    };
    let (blocks, omega, total_bits) = build_blocks_and_omega(instance)?;
    let num_vars = instance.num_vars() + total_bits;
    let mut out = CnfFormula::new(num_vars);
    for c in f.clauses() {
        out.add_clause(c.clone());
    }
    for x in f.xor_clauses() {
        out.add_xor(x.clone());
    }
    for c in omega {
        out.add_clause(c);
    }
    Ok(Reduction {
        mode: ReductionMode::Conjunctive,
        instance: ProblemInstance::unweighted(Formula::Cnf(out)),
        blocks,
        total_bits,
        constant: pow2_rational(total_bits),
        correction: BigRational::zero(),
    })
}

/// Thm-13b route: `F̆ = Ω → F`, realized in DNF (`¬Ω^CNF` is a DNF by
/// De Morgan). `W(F) = C_F·|R_{F̆}| − 2ⁿ·(1 − 2^{−|N_F|})` exactly.
pub fn reduce_wmc_implicative(instance: &ProblemInstance) -> Result<Reduction, ReduceError> {
    let cubes: Vec<Vec<Lit>> = match &instance.formula {
        Formula::Dnf(f) => f.cubes().to_vec(),
        // A CNF of unit clauses is the single cube of those literals.
        Formula::Cnf(f) if f.xor_clauses().is_empty()
            && f.clauses().iter().all(|c| c.len() == 1) =>
        {
            vec![f.clauses().iter().map(|c| c[0]).collect()]
        }
        _ => return Err(ReduceError::NeedsDnf),
    };
    let (blocks, omega, total_bits) = build_blocks_and_omega(instance)?;
    let n = instance.num_vars();
    let num_normal = blocks.len() as u32;
    let num_vars = n + total_bits;
    let mut out = DnfFormula::new(num_vars);
    // ¬Ω^CNF: one cube per Ω clause, literals negated.
    for clause in &omega {
        out.add_cube(clause.iter().map(|l| l.negated()).collect())
            .expect("negated clause is a consistent cube");
    }
    for cube in cubes {
        out.add_cube(cube).expect("input cube is consistent");
    }
    // 2ⁿ·(1 − 2^{−|N_F|})
    let correction = BigRational::from_integer(BigInt::one() << n as usize)
        * (BigRational::one() - pow2_rational(num_normal));
    Ok(Reduction {
        mode: ReductionMode::Implicative,
        instance: ProblemInstance::unweighted(Formula::Dnf(out)),
        blocks,
        total_bits,
        constant: pow2_rational(total_bits),
        correction,
    })
}

/// Thm-14 route: preserves the input's normal form. CNF input takes the
/// conjunctive identity, DNF input the implicative one.
pub fn reduce_wmc_form_preserving(instance: &ProblemInstance) -> Result<Reduction, ReduceError> {
    let mut red = match &instance.formula {
        Formula::Cnf(_) => reduce_wmc_conjunctive(instance)?,
        Formula::Dnf(_) => reduce_wmc_implicative(instance)?,
    };
    red.mode = ReductionMode::FormPreserving;
    Ok(red)
}

/// A weighted constraint group: a disjunctive constraint over literals
/// with a dyadic weight attached.
#[derive(Debug, Clone)]
pub struct WeightedGroup {
    pub clause: Vec<Lit>,
    pub weight: BigRational,
}

/// Thm-16 route: `F̂ = F ∧ ⋀ᵢ(Gᵢ → φᵢ)` with `W(F) = C_G·|R_{F̂}|`, where
/// an assignment's weight is the product of the weights of the groups it
/// satisfies (1 when none are satisfied).
pub fn reduce_constraint_wmc(
    f: &CnfFormula,
    groups: &[WeightedGroup],
) -> Result<Reduction, ReduceError> {
    let mut next_fresh = f.num_vars() + 1;
    let mut blocks = Vec::new();
    let mut clauses: Vec<Vec<Lit>> = f.clauses().to_vec();
    let mut total_bits = 0;
    for (gi, group) in groups.iter().enumerate() {
        let mut probe = WeightMap::new();
        let marker = Var::new(1);
        probe
            .set_normal(marker, group.weight.clone())
            .map_err(|_| ReduceError::NonDyadicGroup(gi))?;
        let dyadic = probe.dyadic(marker).ok_or(ReduceError::NonDyadicGroup(gi))?;
        let fresh: Vec<Var> = (0..dyadic.m)
            .map(|_| {
                let v = Var::new(next_fresh);
                next_fresh += 1;
                v
            })
            .collect();
        let chain = ChainFormula::new(dyadic.k, dyadic.m, fresh.clone())?;
        // Gᵢ → φᵢ: (¬l ∨ φ-clause) for every literal of the group and every
        // clause of the chain CNF.
        for l in &group.clause {
            for mut c in chain.cnf_clauses() {
                c.insert(0, l.negated());
                clauses.push(std::mem::take(&mut c));
            }
        }
        total_bits += dyadic.m;
        blocks.push((
            Var::new(gi as u32 + 1),
            BlockAssignment { dyadic, fresh },
        ));
    }
    let mut out = CnfFormula::new(f.num_vars() + total_bits);
    for c in clauses {
        out.add_clause(c);
    }
    for x in f.xor_clauses() {
        out.add_xor(x.clone());
    }
    Ok(Reduction {
        mode: ReductionMode::ConstraintWeighted,
        instance: ProblemInstance::unweighted(Formula::Cnf(out)),
        blocks,
        total_bits,
        constant: pow2_rational(total_bits),
        correction: BigRational::zero(),
    })
}

/// Weight of an assignment under constraint groups: product over satisfied
/// groups, 1 when none are satisfied (the Thm-16 convention).
pub fn group_weight(groups: &[WeightedGroup], a: &crate::formula::Assignment) -> BigRational {
    let mut w = BigRational::one();
    for g in groups {
        let sat = g
            .clause
            .iter()
            .any(|l| a.value(l.var()).map(|v| l.satisfied_by(v)) == Some(true));
        if sat {
            w *= &g.weight;
        }
    }
    w
}

/// Sampling set note: the reduced instances produced above use all
/// variables as the sampling set, which is the correct counting semantics
/// for the identities. A projected variant is deliberately not offered.
pub fn reduced_sampling_set(red: &Reduction) -> &SamplingSet {
    &red.instance.sampling_set
}
