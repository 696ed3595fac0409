//! The single-sample almost-uniform generator.
//!
//! Small solution sets are sampled exactly; otherwise an approximate count
//! at tolerance 0.8 and confidence 0.8 estimates the partition depth `q`,
//! and prefix slices `q−3 … q` of one drawn hash are probed for a cell in
//! the acceptable size range.

use crate::counting::approxmc2_with_oracle;
use crate::formula::{Assignment, ProblemInstance};
use crate::hashing::draw_hash;
use crate::oracle::{Backend, Cell, CellOracle, InstanceOracle};
use crate::rng::{derive, rng_from_seed};

use super::{
    compute_kappa_pivot, log2_biguint, uniform_choice, SampleError, SamplerVariant,
};

/// Draws one almost-uniform witness, or ⊥ (`Ok(None)`).
///
/// The caller is responsible for the sampling set being an independent
/// support when full-space uniformity is wanted; projected sampling is
/// well-defined either way.
pub fn unigen_sample_with_oracle<O: CellOracle + ?Sized>(
    oracle: &mut O,
    epsilon: f64,
    seed: u64,
) -> Result<Option<Assignment>, SampleError> {
    let params = compute_kappa_pivot(epsilon, SamplerVariant::Unigen)?;
    let mut rng = rng_from_seed(seed);

    // Small path: enumerate up to hiThresh+1; an exact uniform draw needs
    // no hashing at all.
    let y = oracle.bounded_sat_cell(None, params.hi_thresh_int + 1, None)?;
    if y.is_empty() {
        return Err(SampleError::Unsat);
    }
    if (y.len() as u64) <= params.hi_thresh_int {
        return Ok(Some(uniform_choice(y.solutions(), &mut rng).clone()));
    }

    // Counter subcall at (0.8, 0.8): tolerance 0.8, confidence 0.8.
    let count = approxmc2_with_oracle(oracle, 0.8, 0.2, derive(seed, 1))?;
    let q = round_q(log2_biguint(&count.value()) + 1.8f64.log2() - (params.pivot as f64).log2());

    let s = oracle.sampling_width();
    let hash = draw_hash(s, s.saturating_sub(1), &mut rng);
    for i in (q - 3)..=q {
        if i < 0 {
            continue;
        }
        let slice = (i as usize).min(s.saturating_sub(1));
        let y = oracle.bounded_sat_cell(
            Some(Cell {
                hash: &hash,
                slice,
            }),
            params.hi_thresh_int + 1,
            None,
        )?;
        let n = y.len() as u64;
        if n >= params.lo_thresh_int && n <= params.hi_thresh_int {
            return Ok(Some(uniform_choice(y.solutions(), &mut rng).clone()));
        }
    }
    Ok(None)
}

fn round_q(x: f64) -> i64 {
    // ⌈·⌉ with the usual integer-boundary guard.
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as i64
    } else {
        x.ceil() as i64
    }
}

/// One-shot sampler over a problem instance with the default backend.
pub fn unigen_sample(
    instance: &ProblemInstance,
    epsilon: f64,
    seed: u64,
) -> Result<Option<Assignment>, SampleError> {
    let mut oracle = InstanceOracle::new(instance, Backend::from_env());
    unigen_sample_with_oracle(&mut oracle, epsilon, seed)
}
