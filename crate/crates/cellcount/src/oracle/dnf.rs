//! Polynomial bounded enumeration for DNF ∧ XOR.
//!
//! Satisfiability of a DNF cube conjoined with XOR constraints reduces to
//! linear algebra: substitute the cube's fixed literals into the XOR
//! system, Gaussian-eliminate, and walk the affine solution space over the
//! free variables in Gray-code order. No backtracking search happens and
//! no decision events are recorded — this is what makes approximate DNF
//! counting a fully polynomial scheme.

use std::collections::BTreeSet;

use super::gf2::Gf2System;
use super::{OracleError, OracleStats, StopRule};
use crate::formula::{
    assignment_weight, Assignment, DnfFormula, Lit, SamplingSet, SolutionSet, Var, WeightMap,
    XorClause,
};
use num_rational::BigRational;
use num_traits::One;

/// Enumeration by cube expansion, projected on the sampling set and
/// deduplicated across cubes. Work per emitted solution is polynomial in
/// the formula size when the XOR constraints mention only sampling-set
/// variables (the hashing pipeline guarantees this).
#[allow(clippy::too_many_arguments)]
pub fn dnf_bounded_sat(
    dnf: &DnfFormula,
    extra_xors: &[XorClause],
    s: &SamplingSet,
    limit: u64,
    mut stop: Option<StopRule<'_>>,
    weights: Option<&WeightMap>,
    stats: &mut OracleStats,
) -> Result<SolutionSet, OracleError> {
    stats.solver_calls += 1;
    let mut seen: BTreeSet<Assignment> = BTreeSet::new();
    let mut out = SolutionSet::new();

    'cubes: for cube in dnf.cubes() {
        if (out.len() as u64) >= limit {
            break;
        }
        // Fixed values from the cube (cubes are internally consistent).
        let fixed: Vec<(Var, bool)> = cube.iter().map(|l| (l.var(), l.is_positive())).collect();
        let is_fixed = |v: Var| fixed.iter().find(|(fv, _)| *fv == v).map(|&(_, b)| b);

        let mut sys = Gf2System::new(dnf.num_vars() as usize);
        for x in extra_xors {
            sys.add_xor(x);
        }
        for &(v, b) in &fixed {
            sys.substitute(v, b);
        }
        sys.eliminate();
        if sys.is_inconsistent() {
            continue;
        }

        // Variables the projection or the system cares about.
        let pivots = sys.pivots();
        let mut relevant: BTreeSet<Var> = s.vars().iter().copied().collect();
        for row in sys.rows() {
            relevant.extend(row.vars());
        }
        let free: Vec<Var> = relevant
            .iter()
            .copied()
            .filter(|&v| is_fixed(v).is_none() && !pivots.contains(&v))
            .collect();

        // Rows indexed by the free variables they contain, for O(rows)
        // updates per Gray-code flip.
        let rows_of_free: Vec<Vec<usize>> = free
            .iter()
            .map(|&fv| {
                sys.rows()
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| r.vars().any(|v| v == fv))
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();

        // Current affine point: all free variables false, pivots at rhs.
        let mut free_vals = vec![false; free.len()];
        let mut pivot_vals: Vec<bool> = sys.rows().iter().map(|r| r.rhs).collect();

        let emit = |free_vals: &[bool],
                    pivot_vals: &[bool],
                    seen: &mut BTreeSet<Assignment>,
                    out: &mut SolutionSet,
                    stop: &mut Option<StopRule<'_>>|
         -> bool {
            let mut lits: Vec<Lit> = Vec::with_capacity(s.len());
            for &v in s.vars() {
                let value = if let Some(b) = is_fixed(v) {
                    b
                } else if let Some(i) = pivots.iter().position(|&p| p == v) {
                    pivot_vals[i]
                } else if let Some(i) = free.iter().position(|&f| f == v) {
                    free_vals[i]
                } else {
                    unreachable!("sampling variable not classified")
                };
                lits.push(v.lit(value));
            }
            let a = Assignment::from_lits(lits);
            if !seen.insert(a.clone()) {
                return false;
            }
            let w = match weights {
                Some(map) => assignment_weight(map, &a),
                None => BigRational::one(),
            };
            out.push_weighted(a.clone(), w);
            if let Some(stop) = stop.as_deref_mut() {
                if stop(&a) {
                    return true;
                }
            }
            false
        };

        if emit(&free_vals, &pivot_vals, &mut seen, &mut out, &mut stop) {
            break 'cubes;
        }
        if (out.len() as u64) >= limit {
            break;
        }

        let steps: u128 = 1u128.checked_shl(free.len() as u32).unwrap_or(u128::MAX);
        let mut step: u128 = 1;
        while step < steps {
            // Binary-reflected Gray code: flip the bit at the lowest set
            // position of the step counter.
            let j = step.trailing_zeros() as usize;
            free_vals[j] = !free_vals[j];
            for &ri in &rows_of_free[j] {
                pivot_vals[ri] = !pivot_vals[ri];
            }
            if emit(&free_vals, &pivot_vals, &mut seen, &mut out, &mut stop) {
                break 'cubes;
            }
            if (out.len() as u64) >= limit {
                break 'cubes;
            }
            step += 1;
        }
    }
    Ok(out)
}
