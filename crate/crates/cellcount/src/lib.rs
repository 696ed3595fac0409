//! Constrained counting and sampling over a pluggable SAT oracle.
//!
//! Given a propositional formula (CNF or DNF) together with an optional
//! sampling set and optional literal weights, this crate computes
//! probably-approximately-correct model counts, draws almost-uniform or
//! weighted samples, minimizes independent supports, and estimates
//! two-terminal network unreliability. All of these are driven by the same
//! mechanism: random XOR hash functions partition the (projected) solution
//! space into cells whose sizes a SAT oracle can measure.
//!
//! The main entry points are:
//!
//! * [`counting::approxmc2`] / [`counting::approx_dnf_count`] — PAC model
//!   counting with a logarithmic number of oracle calls per round,
//! * [`weighted::weightmc`] — weighted counting with a tilt bound, and the
//!   exact chain-formula reductions in [`weighted::reduce`],
//! * [`sampling`] — almost-uniform (`unigen`, `unigen2`) and weighted
//!   (`weightgen`) witness generation,
//! * [`indsupport::mis`] — minimal independent support via deletion-based
//!   group MUS extraction,
//! * [`relnet`] — two-terminal network unreliability by reduction to
//!   projected counting.

pub mod bits;
pub mod counting;
pub mod exact;
pub mod formula;
pub mod hashing;
pub mod indsupport;
pub mod oracle;
pub mod relnet;
pub mod rng;
pub mod sampling;
pub mod weighted;

pub use formula::{
    Assignment, CnfFormula, DnfFormula, Formula, Lit, ProblemInstance, SamplingSet, SolutionSet,
    Var, WeightMap, XorClause,
};
