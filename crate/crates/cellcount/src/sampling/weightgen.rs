//! The weighted witness generator.
//!
//! Cells are accepted by scaled weight `W(Y)/w_max` instead of size, with
//! the same probe-around-q structure as the uniform samplers. The final
//! draw is weighted-uniform by exact-rational cumulative inversion.

use num_rational::BigRational;
use num_traits::One;

use crate::formula::{assignment_weight, Assignment, ProblemInstance};
use crate::hashing::draw_hash;
use crate::oracle::{Backend, Cell, CellOracle, InstanceOracle};
use crate::rng::{derive, rng_from_seed};
use crate::weighted::{bounded_weight_sat, weightmc_with_oracle, WeightFn, WmcDiagnostics};

use super::{
    compute_kappa_pivot, log2_rational, weighted_choice, SampleError, SamplerVariant,
};

/// Draws one approximately weighted-uniform witness, or ⊥ (`Ok(None)`).
pub fn weightgen_sample_with_oracle<O: CellOracle + ?Sized>(
    oracle: &mut O,
    epsilon: f64,
    tilt: BigRational,
    weight: WeightFn<'_>,
    seed: u64,
) -> Result<Option<Assignment>, SampleError> {
    let params = compute_kappa_pivot(epsilon, SamplerVariant::Weightgen)?;
    // Exact binary values of the double-precision thresholds; the weighted
    // comparisons stay rational.
    let hi = BigRational::from_float(params.hi_thresh).expect("finite threshold");
    let lo = BigRational::from_float(params.lo_thresh).expect("finite threshold");
    let mut rng = rng_from_seed(seed);
    let mut diagnostics = WmcDiagnostics::default();

    let mut w_max = BigRational::one();
    let (y, w2) = bounded_weight_sat(oracle, None, &hi, &tilt, &w_max, weight, &mut diagnostics)?;
    w_max = w2;
    if y.is_empty() {
        return Err(SampleError::Unsat);
    }
    if y.total_weight() / &w_max <= hi {
        return Ok(Some(choose_weighted(&y, weight, &mut rng)));
    }

    // Weighted counter subcall at (0.8, 0.2) provides both the estimate
    // and a refined w_max.
    let wmc = weightmc_with_oracle(oracle, 0.8, 0.2, tilt.clone(), weight, derive(seed, 1))?;
    w_max = wmc.w_max.clone();
    let q = ceil_guarded_i64(
        log2_rational(&wmc.estimate) - log2_rational(&w_max) + 1.8f64.log2()
            - (params.pivot as f64).log2(),
    );

    let s = oracle.sampling_width();
    let width = q.clamp(1, s as i64) as usize;
    let hash = draw_hash(s, width, &mut rng);
    for i in (q - 3)..=q {
        if i < 0 {
            continue;
        }
        let slice = (i as usize).min(width);
        let (y, w2) = bounded_weight_sat(
            oracle,
            Some(Cell {
                hash: &hash,
                slice,
            }),
            &hi,
            &tilt,
            &w_max,
            weight,
            &mut diagnostics,
        )?;
        w_max = w2;
        let scaled = y.total_weight() / &w_max;
        if scaled >= lo && scaled <= hi {
            return Ok(Some(choose_weighted(&y, weight, &mut rng)));
        }
    }
    Ok(None)
}

fn choose_weighted(
    y: &crate::formula::SolutionSet,
    weight: WeightFn<'_>,
    rng: &mut crate::rng::Rng,
) -> Assignment {
    let weights: Vec<BigRational> = y.solutions().iter().map(weight).collect();
    weighted_choice(y.solutions(), &weights, rng).clone()
}

fn ceil_guarded_i64(x: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as i64
    } else {
        x.ceil() as i64
    }
}

/// One-shot weighted sampler over an instance's literal-weight map.
pub fn weightgen_sample(
    instance: &ProblemInstance,
    epsilon: f64,
    tilt: BigRational,
    seed: u64,
) -> Result<Option<Assignment>, SampleError> {
    // Projected weights are only meaningful when every normal-weighted
    // variable survives the projection.
    for v in instance.weights.normal_vars() {
        if !instance.sampling_set.contains(v) {
            return Err(SampleError::Wmc(
                crate::weighted::WmcError::WeightOutsideSamplingSet(v),
            ));
        }
    }
    let mut oracle = InstanceOracle::new(instance, Backend::from_env());
    let weights = instance.weights.clone();
    let weight = move |a: &Assignment| assignment_weight(&weights, a);
    weightgen_sample_with_oracle(&mut oracle, epsilon, tilt, &weight, seed)
}
