//! Almost-uniform and weighted witness generation.
//!
//! All three samplers share the same skeleton: derive cell-size bounds
//! from the tolerance, take the exact path when the whole solution set is
//! small, and otherwise probe a few prefix slices around an estimated
//! partition depth until a random cell lands in the acceptable size range,
//! then draw from that cell. A failed probe sequence is reported as ⊥
//! (`Ok(None)`); the library never retries silently.

mod unigen;
mod unigen2;
mod weightgen;

pub use unigen::{unigen_sample, unigen_sample_with_oracle};
pub use unigen2::{
    unigen2_estimate, unigen2_generate, unigen2_parallel, ParallelOutcome, SamplerSetup,
    Unigen2Sampler,
};
pub use weightgen::{weightgen_sample, weightgen_sample_with_oracle};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng as _;
use thiserror::Error;

use crate::counting::CountError;
use crate::formula::Assignment;
use crate::oracle::OracleError;
use crate::rng::Rng;
use crate::weighted::WmcError;

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("epsilon {epsilon} below the floor {floor} for {variant:?}")]
    EpsilonBelowFloor {
        variant: SamplerVariant,
        epsilon: f64,
        floor: f64,
    },
    #[error("the instance is unsatisfiable")]
    Unsat,
    #[error("sample count must be positive")]
    ZeroSamples,
    #[error("workers must be at least 1")]
    ZeroWorkers,
    #[error("retry cap exhausted after {0} failed generate calls")]
    RetriesExhausted(u32),
    #[error("counter subcall failed: {0}")]
    Count(#[from] CountError),
    #[error("weighted counter subcall failed: {0}")]
    Wmc(#[from] WmcError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Which sampler a parameter set belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerVariant {
    Unigen,
    Unigen2,
    Weightgen,
}

impl SamplerVariant {
    /// Constants of `ε = (1+κ)(A + B/(1−κ)²) − 1`.
    fn curve(self) -> (f64, f64) {
        match self {
            SamplerVariant::Unigen => (2.23, 0.48),
            SamplerVariant::Unigen2 => (7.44, 0.392),
            SamplerVariant::Weightgen => (7.55, 0.29),
        }
    }

    /// Smallest admissible tolerance (the κ→0 limit of the curve).
    pub fn epsilon_floor(self) -> f64 {
        match self {
            SamplerVariant::Unigen => 1.71,
            SamplerVariant::Unigen2 => 6.84,
            SamplerVariant::Weightgen => 6.84,
        }
    }
}

/// Tolerance-derived cell bounds for one sampler variant.
#[derive(Debug, Clone, Copy)]
pub struct SampleParams {
    pub variant: SamplerVariant,
    pub epsilon: f64,
    pub kappa: f64,
    pub pivot: u64,
    /// Real-valued bounds as the algorithms state them.
    pub hi_thresh: f64,
    pub lo_thresh: f64,
    /// Integer comparison forms: `|Y| ≤ hi` iff `|Y| ≤ hi_thresh_int`,
    /// `|Y| ≥ lo` iff `|Y| ≥ lo_thresh_int` (for the unweighted variants).
    pub hi_thresh_int: u64,
    pub lo_thresh_int: u64,
}

fn floor_guarded(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as u64
    } else {
        x.floor() as u64
    }
}

fn ceil_guarded(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as u64
    } else {
        x.ceil() as u64
    }
}

/// Round-half-up with an integer-boundary guard.
pub(crate) fn round_half_up(x: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as i64
    } else {
        (x + 0.5).floor() as i64
    }
}

/// Solves `ε = (1+κ)(A + B/(1−κ)²) − 1` for κ ∈ [0,1) and derives the
/// variant's pivot and thresholds.
///
/// The right-hand side is strictly increasing in κ, so bisection to an
/// absolute tolerance of 1e-9 suffices.
pub fn compute_kappa_pivot(
    epsilon: f64,
    variant: SamplerVariant,
) -> Result<SampleParams, SampleError> {
    let (a, b) = variant.curve();
    let floor = variant.epsilon_floor();
    let curve = |kappa: f64| (1.0 + kappa) * (a + b / (1.0 - kappa).powi(2)) - 1.0;
    // The stated floors are rounded up from the κ→0 limits; accept
    // anything the curve can reach but reject below the stated floor.
    if epsilon < floor || epsilon <= curve(0.0) {
        return Err(SampleError::EpsilonBelowFloor {
            variant,
            epsilon,
            floor,
        });
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0f64 - 1e-12;
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if curve(mid) < epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let kappa = 0.5 * (lo + hi);

    let (pivot, hi_thresh, lo_thresh, hi_int, lo_int) = match variant {
        SamplerVariant::Unigen => {
            // pivot = ⌈3·e^{1/2}·(1 + 1/κ)²⌉
            let p = ceil_guarded(3.0 * 0.5f64.exp() * (1.0 + 1.0 / kappa).powi(2));
            let hi = 1.0 + (1.0 + kappa) * p as f64;
            let lo = p as f64 / (1.0 + kappa);
            (p, hi, lo, floor_guarded(hi), ceil_guarded(lo))
        }
        SamplerVariant::Unigen2 => {
            let p = ceil_guarded(4.03 * (1.0 + 1.0 / kappa).powi(2));
            let hi = 1.0 + std::f64::consts::SQRT_2 * (1.0 + kappa) * p as f64;
            let lo = p as f64 / (std::f64::consts::SQRT_2 * (1.0 + kappa));
            (p, hi, lo, ceil_guarded(hi), floor_guarded(lo))
        }
        SamplerVariant::Weightgen => {
            let p = ceil_guarded(4.03 * (1.0 + 1.0 / kappa).powi(2));
            let hi = 1.0 + std::f64::consts::SQRT_2 * (1.0 + kappa) * p as f64;
            let lo = p as f64 / (std::f64::consts::SQRT_2 * (1.0 + kappa));
            // Weighted cells are compared as exact rationals, not counts.
            (p, hi, lo, 0, 0)
        }
    };
    Ok(SampleParams {
        variant,
        epsilon,
        kappa,
        pivot,
        hi_thresh,
        lo_thresh,
        hi_thresh_int: hi_int,
        lo_thresh_int: lo_int,
    })
}

/// Uniform choice from a slice.
pub(crate) fn uniform_choice<'a>(items: &'a [Assignment], rng: &mut Rng) -> &'a Assignment {
    &items[rng.random_range(0..items.len())]
}

/// `count` distinct uniform choices (partial Fisher–Yates).
pub(crate) fn distinct_choices(items: &[Assignment], count: usize, rng: &mut Rng) -> Vec<Assignment> {
    let mut idx: Vec<usize> = (0..items.len()).collect();
    let take = count.min(items.len());
    for i in 0..take {
        let j = rng.random_range(i..idx.len());
        idx.swap(i, j);
    }
    idx[..take].iter().map(|&i| items[i].clone()).collect()
}

/// Uniform `BigUint` below `bound` by rejection sampling on the bit width.
pub(crate) fn random_biguint_below(bound: &BigUint, rng: &mut Rng) -> BigUint {
    assert!(!bound.is_zero());
    let bits = bound.bits();
    let words = bits.div_ceil(64) as usize;
    loop {
        let mut raw: Vec<u64> = (0..words).map(|_| rng.random::<u64>()).collect();
        // Mask excess bits in the top word.
        let excess = (64 * words as u64) - bits;
        if excess > 0 {
            if let Some(top) = raw.last_mut() {
                *top &= u64::MAX >> excess;
            }
        }
        let candidate = BigUint::from_slice(
            &raw.iter()
                .flat_map(|w| [*w as u32, (*w >> 32) as u32])
                .collect::<Vec<_>>(),
        );
        if candidate < *bound {
            return candidate;
        }
    }
}

/// Weighted-uniform choice by exact-rational cumulative inversion: item `i`
/// is returned with probability exactly `wᵢ / Σw`.
pub(crate) fn weighted_choice<'a>(
    items: &'a [Assignment],
    weights: &[BigRational],
    rng: &mut Rng,
) -> &'a Assignment {
    assert_eq!(items.len(), weights.len());
    assert!(!items.is_empty());
    // Common denominator (product of denominators keeps it exact; the
    // enumerations here are small).
    let mut denom = num_bigint::BigInt::one();
    for w in weights {
        denom *= w.denom();
    }
    let scaled: Vec<BigUint> = weights
        .iter()
        .map(|w| {
            let v = w.numer() * (&denom / w.denom());
            v.to_biguint().expect("weights are nonnegative")
        })
        .collect();
    let total: BigUint = scaled.iter().sum();
    let target = random_biguint_below(&total, rng);
    let mut acc = BigUint::zero();
    for (i, s) in scaled.iter().enumerate() {
        acc += s;
        if target < acc {
            return &items[i];
        }
    }
    unreachable!("target below total")
}

/// log₂ of a big integer via f64 (double precision is the stated contract
/// for the q estimates; integer boundaries are re-checked by the guarded
/// rounding helpers).
pub(crate) fn log2_biguint(x: &BigUint) -> f64 {
    x.to_f64().map(|v| v.log2()).unwrap_or_else(|| {
        // Fallback for astronomically large counts.
        x.bits() as f64
    })
}

pub(crate) fn log2_rational(x: &BigRational) -> f64 {
    x.to_f64().map(|v| v.log2()).unwrap_or(f64::MAX)
}
