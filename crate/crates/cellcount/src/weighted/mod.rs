//! Hashing-based weighted model counting with a tilt bound.
//!
//! Cells are accepted by *scaled weight* rather than size: enumeration
//! stops once `w_total/(w_min·r) > pivot`, and the running minimum weight
//! seen refines the upper bound `w_max` on the maximum model weight
//! (`w_max′ = w_min·r`). All weight arithmetic is exact rational.

pub mod chain;
pub mod reduce;

pub use chain::{ChainError, ChainFormula};
pub use reduce::{
    reduce_constraint_wmc, reduce_wmc_conjunctive, reduce_wmc_form_preserving,
    reduce_wmc_implicative, Reduction, ReductionMode, WeightedGroup,
};

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::formula::{assignment_weight, Assignment, ProblemInstance, SolutionSet};
use crate::hashing::draw_hash;
use crate::oracle::{Backend, Cell, CellOracle, InstanceOracle, OracleError};
use crate::rng::{rng_from_seed, Rng};

/// Weight of one assignment, supplied by the caller. The shipped path is
/// the literal-weight product, but any black-box weight works.
pub type WeightFn<'a> = &'a dyn Fn(&Assignment) -> BigRational;

#[derive(Debug, Error)]
pub enum WmcError {
    #[error("epsilon must lie in (0, 1)")]
    BadEpsilon,
    #[error("delta must lie in (0, 1]")]
    BadDelta,
    #[error("tilt bound must be at least 1")]
    BadTilt,
    #[error("normal-weighted variable {0} outside the sampling set")]
    WeightOutsideSamplingSet(crate::formula::Var),
    #[error("all {attempted} core rounds failed")]
    AllIterationsFailed { attempted: u32 },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Tolerance/confidence-derived weighted-counting parameters.
#[derive(Debug, Clone)]
pub struct WeightParams {
    pub epsilon: f64,
    pub delta: f64,
    /// `2·⌈e^{3/2}·(1 + 1/ε)²⌉`.
    pub pivot: u64,
    /// `⌈35·log₂(3/δ)⌉`.
    pub t: u32,
    /// User-asserted upper bound on the tilt.
    pub tilt: BigRational,
}

pub fn compute_weight_params(
    epsilon: f64,
    delta: f64,
    tilt: BigRational,
) -> Result<WeightParams, WmcError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(WmcError::BadEpsilon);
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(WmcError::BadDelta);
    }
    if tilt < BigRational::one() {
        return Err(WmcError::BadTilt);
    }
    let pivot = 2 * (1.5f64.exp() * (1.0 + 1.0 / epsilon).powi(2)).ceil() as u64;
    let t = (35.0 * (3.0 / delta).log2()).ceil() as u32;
    Ok(WeightParams {
        epsilon,
        delta,
        pivot,
        t,
        tilt,
    })
}

/// Observations that do not invalidate a run but deserve reporting.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WmcDiagnostics {
    /// The refined `w_max′ = w_min·r` exceeded 1 at some point (the
    /// algorithm never clamps it).
    pub w_max_above_one: bool,
    /// Two enumerated models whose weight ratio strictly exceeds the
    /// supplied tilt bound were seen: the bound was too small. Only
    /// semi-decidable, hence a diagnostic rather than an error.
    pub tilt_violation: bool,
    min_seen: Option<BigRational>,
    max_seen: Option<BigRational>,
}

impl WmcDiagnostics {
    fn observe(&mut self, w: &BigRational, tilt: &BigRational) {
        if self.min_seen.as_ref().is_none_or(|m| w < m) {
            self.min_seen = Some(w.clone());
        }
        if self.max_seen.as_ref().is_none_or(|m| w > m) {
            self.max_seen = Some(w.clone());
        }
        if let (Some(mn), Some(mx)) = (&self.min_seen, &self.max_seen) {
            if *mx > mn * tilt {
                self.tilt_violation = true;
            }
        }
    }
}

/// Weighted bounded enumeration: enumerate until the scaled accumulated
/// weight crosses `bound` (`w_total/(w_min·r) > bound`) or the cell is
/// exhausted. Returns the solutions seen and the refined `w_max′ = w_min·r`.
pub fn bounded_weight_sat<O: CellOracle + ?Sized>(
    oracle: &mut O,
    cell: Option<Cell<'_>>,
    bound: &BigRational,
    tilt: &BigRational,
    w_max: &BigRational,
    weight: WeightFn<'_>,
    diagnostics: &mut WmcDiagnostics,
) -> Result<(SolutionSet, BigRational), WmcError> {
    // `w_min` tracks the minimum weight of the assignments seen so far;
    // `w_max/r` stands in only while nothing has been enumerated. The
    // refined bound `w_min·r` is returned unclamped, so it can exceed 1
    // when the lightest model seen is heavy.
    let floor = w_max / tilt;
    let mut w_min: Option<BigRational> = None;
    let mut w_total = BigRational::zero();
    let mut stop = |a: &Assignment| {
        let w = weight(a);
        w_total += &w;
        if w_min.as_ref().is_none_or(|m| w < *m) {
            w_min = Some(w);
        }
        &w_total / (w_min.as_ref().unwrap() * tilt) > *bound
    };
    let raw = oracle.bounded_sat_cell(cell, u64::MAX, Some(&mut stop))?;
    // Re-weigh through the callback so scripted oracles and black-box
    // weight functions agree with the stop rule's bookkeeping.
    let mut out = SolutionSet::new();
    for a in raw.into_solutions() {
        let w = weight(&a);
        diagnostics.observe(&w, tilt);
        out.push_weighted(a, w);
    }
    let w_max_next = match out.min_weight() {
        Some(m) => m * tilt,
        None => floor * tilt,
    };
    if w_max_next > BigRational::one() {
        diagnostics.w_max_above_one = true;
    }
    Ok((out, w_max_next))
}

/// One weighted core round. On success at partition depth `i` the cell
/// weight is scaled by the cell count: the return is `W(Y)·2^i/w_max`
/// (`None` on ⊥); the refined `w_max` is always returned.
pub fn weightmc_core<O: CellOracle + ?Sized>(
    oracle: &mut O,
    pivot: u64,
    tilt: &BigRational,
    w_max: BigRational,
    weight: WeightFn<'_>,
    rng: &mut Rng,
    diagnostics: &mut WmcDiagnostics,
) -> Result<(Option<BigRational>, BigRational), WmcError> {
    let pivot_rat = BigRational::from_integer(pivot.into());
    let (y, mut w_max) =
        bounded_weight_sat(oracle, None, &pivot_rat, tilt, &w_max, weight, diagnostics)?;
    let scaled = y.total_weight() / &w_max;
    if scaled <= pivot_rat {
        return Ok((Some(scaled), w_max));
    }
    let s = oracle.sampling_width();
    for i in 1..=s {
        let hash = draw_hash(s, i, rng);
        let (y, w2) = bounded_weight_sat(
            oracle,
            Some(Cell {
                hash: &hash,
                slice: i,
            }),
            &pivot_rat,
            tilt,
            &w_max,
            weight,
            diagnostics,
        )?;
        w_max = w2;
        let scaled = y.total_weight() / &w_max;
        if scaled > BigRational::zero() && scaled <= pivot_rat {
            // 2^i cells at depth i; scaling the accepted cell's weight by
            // the cell count gives the unbiased total.
            let cells = BigRational::from_integer(num_bigint::BigInt::one() << i);
            return Ok((Some(scaled * cells), w_max));
        }
    }
    Ok((None, w_max))
}

/// Result of a weighted count.
#[derive(Debug, Clone)]
pub struct WmcOutcome {
    pub estimate: BigRational,
    /// Final refined upper bound on the maximum model weight.
    pub w_max: BigRational,
    pub failures: u32,
    pub diagnostics: WmcDiagnostics,
}

/// The weighted counter, generic over the oracle.
pub fn weightmc_with_oracle<O: CellOracle + ?Sized>(
    oracle: &mut O,
    epsilon: f64,
    delta: f64,
    tilt: BigRational,
    weight: WeightFn<'_>,
    seed: u64,
) -> Result<WmcOutcome, WmcError> {
    let params = compute_weight_params(epsilon, delta, tilt)?;
    let mut rng = rng_from_seed(seed);
    let mut w_max = BigRational::one();
    let mut estimates: Vec<BigRational> = Vec::new();
    let mut failures = 0u32;
    let mut diagnostics = WmcDiagnostics::default();
    for _ in 0..params.t {
        let (c, w2) = weightmc_core(
            oracle,
            params.pivot,
            &params.tilt,
            w_max,
            weight,
            &mut rng,
            &mut diagnostics,
        )?;
        w_max = w2;
        if let Some(c) = c {
            estimates.push(c * &w_max);
        } else {
            failures += 1;
        }
    }
    if estimates.is_empty() {
        return Err(WmcError::AllIterationsFailed {
            attempted: params.t,
        });
    }
    estimates.sort();
    let estimate = estimates[(estimates.len() - 1) / 2].clone();
    Ok(WmcOutcome {
        estimate,
        w_max,
        failures,
        diagnostics,
    })
}

/// Weighted count of an instance under its literal-weight map.
pub fn weightmc(
    instance: &ProblemInstance,
    epsilon: f64,
    delta: f64,
    tilt: BigRational,
    seed: u64,
) -> Result<WmcOutcome, WmcError> {
    for v in instance.weights.normal_vars() {
        if !instance.sampling_set.contains(v) {
            return Err(WmcError::WeightOutsideSamplingSet(v));
        }
    }
    let mut oracle = InstanceOracle::new(instance, Backend::from_env());
    let weights = instance.weights.clone();
    let weight = move |a: &Assignment| assignment_weight(&weights, a);
    weightmc_with_oracle(&mut oracle, epsilon, delta, tilt, &weight, seed)
}

/// Convenience: the pivot as f64 (used by samplers for q estimation).
pub fn pivot_f64(params: &WeightParams) -> f64 {
    params.pivot.to_f64().unwrap_or(f64::MAX)
}
