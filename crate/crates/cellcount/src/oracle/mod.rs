//! Pluggable SAT-oracle layer: bounded model enumeration over CNF ∧ XOR
//! projected on a sampling set.
//!
//! Three backends share one contract: the built-in DPLL solver, an
//! external-solver subprocess adapter, and the polynomial DNF ∧ XOR
//! enumerator. The counting and sampling algorithms only ever talk to the
//! [`CellOracle`] trait, which answers bounded queries about prefix-sliced
//! hash cells; tests drive the algorithms with scripted implementations.

pub mod builtin;
pub mod dnf;
pub mod external;
pub mod gf2;

pub use builtin::{builtin_solve, BuiltinSolver};
pub use dnf::dnf_bounded_sat;
pub use external::{blast_xor_to_cnf, external_bounded_sat, FreshVars, SolverCmd};
pub use gf2::{Gf2Row, Gf2System};

use crate::formula::{
    Assignment, Formula, ProblemInstance, SamplingSet, SolutionSet, WeightMap, XorClause,
};
use crate::hashing::XorHash;
use thiserror::Error;

/// Environment variable selecting an external solver command template.
pub const SOLVER_ENV: &str = "CELLCOUNT_SOLVER";
/// Environment variable flagging native XOR support of the external solver.
pub const SOLVER_NATIVE_XOR_ENV: &str = "CELLCOUNT_SOLVER_NATIVE_XOR";

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("solver conflict budget exceeded ({0})")]
    BudgetExceeded(u64),
    #[error("external solver call timed out after {0} s")]
    Timeout(u64),
    #[error("external solver failure: {0}")]
    External(String),
}

/// Counters accumulated across oracle queries.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleStats {
    /// Individual solver invocations (one model or UNSAT each).
    pub solver_calls: u64,
    /// DPLL decision events (zero on the DNF path).
    pub decisions: u64,
    /// Propagation events in the built-in solver.
    pub propagations: u64,
}

/// A prefix-sliced hash cell: the constraint `h^{(slice)}(S) = α^{(slice)}`.
#[derive(Clone, Copy)]
pub struct Cell<'a> {
    pub hash: &'a XorHash,
    pub slice: usize,
}

/// Streaming predicate over enumerated solutions; enumeration halts as soon
/// as it returns true.
pub type StopRule<'a> = &'a mut dyn FnMut(&Assignment) -> bool;

/// The oracle interface the counting and sampling algorithms are written
/// against: `BoundedSAT(F ∧ h^{(m)}(S)=α^{(m)}, limit, S)`.
pub trait CellOracle {
    /// Width of the sampling set (the hash domain width).
    fn sampling_width(&self) -> usize;

    /// Up to `limit` S-distinct solutions of the formula restricted to
    /// `cell` (no restriction when `None`).
    fn bounded_sat_cell(
        &mut self,
        cell: Option<Cell<'_>>,
        limit: u64,
        stop: Option<StopRule<'_>>,
    ) -> Result<SolutionSet, OracleError>;
}

/// Backend selection for [`InstanceOracle`].
#[derive(Debug, Clone, Default)]
pub enum Backend {
    #[default]
    Builtin,
    External(SolverCmd),
}

impl Backend {
    /// Reads `CELLCOUNT_SOLVER` (and `CELLCOUNT_SOLVER_NATIVE_XOR`) from the
    /// environment; defaults to the built-in solver.
    pub fn from_env() -> Backend {
        match std::env::var(SOLVER_ENV) {
            Ok(t) if !t.trim().is_empty() => {
                let native = std::env::var(SOLVER_NATIVE_XOR_ENV)
                    .map(|v| v == "1" || v.eq_ignore_ascii_case("true"))
                    .unwrap_or(false);
                Backend::External(SolverCmd::new(t).with_native_xor(native))
            }
            _ => Backend::Builtin,
        }
    }
}

/// A fully specified oracle query, the `BoundedSAT(F, thresh, S)` contract.
pub struct OracleQuery<'a> {
    pub formula: &'a Formula,
    pub extra_xors: Vec<XorClause>,
    pub sampling_set: &'a SamplingSet,
    pub limit: u64,
    pub weights: Option<&'a WeightMap>,
}

/// Runs a query on the default backend for its formula kind: the built-in
/// solver for CNF, the polynomial enumerator for DNF.
pub fn bounded_sat(
    q: &OracleQuery<'_>,
    stop: Option<StopRule<'_>>,
    stats: &mut OracleStats,
) -> Result<SolutionSet, OracleError> {
    match q.formula {
        Formula::Cnf(f) => builtin::bounded_enumerate(
            f,
            &q.extra_xors,
            q.sampling_set,
            q.limit,
            stop,
            q.weights,
            None,
            stats,
        ),
        Formula::Dnf(f) => dnf::dnf_bounded_sat(
            f,
            &q.extra_xors,
            q.sampling_set,
            q.limit,
            stop,
            q.weights,
            stats,
        ),
    }
}

/// [`CellOracle`] over a concrete problem instance and backend.
///
/// Single-owner: concurrent algorithm workers each construct their own.
pub struct InstanceOracle<'a> {
    instance: &'a ProblemInstance,
    backend: Backend,
    stats: OracleStats,
    conflict_budget: Option<u64>,
}

impl<'a> InstanceOracle<'a> {
    pub fn new(instance: &'a ProblemInstance, backend: Backend) -> InstanceOracle<'a> {
        InstanceOracle {
            instance,
            backend,
            stats: OracleStats::default(),
            conflict_budget: None,
        }
    }

    pub fn builtin(instance: &'a ProblemInstance) -> InstanceOracle<'a> {
        InstanceOracle::new(instance, Backend::Builtin)
    }

    pub fn set_conflict_budget(&mut self, budget: Option<u64>) {
        self.conflict_budget = budget;
    }

    pub fn stats(&self) -> OracleStats {
        self.stats
    }

    pub fn instance(&self) -> &'a ProblemInstance {
        self.instance
    }

    fn weights(&self) -> Option<&'a WeightMap> {
        if self.instance.is_weighted() {
            Some(&self.instance.weights)
        } else {
            None
        }
    }
}

impl CellOracle for InstanceOracle<'_> {
    fn sampling_width(&self) -> usize {
        self.instance.sampling_set.len()
    }

    fn bounded_sat_cell(
        &mut self,
        cell: Option<Cell<'_>>,
        limit: u64,
        stop: Option<StopRule<'_>>,
    ) -> Result<SolutionSet, OracleError> {
        let s = &self.instance.sampling_set;
        let extra_xors = match cell {
            None => Vec::new(),
            Some(c) => c
                .hash
                .prefix(c.slice)
                .expect("slice within hash rows")
                .to_xor_clauses(s),
        };
        match (&self.instance.formula, &self.backend) {
            (Formula::Dnf(f), _) => {
                dnf::dnf_bounded_sat(f, &extra_xors, s, limit, stop, self.weights(), &mut self.stats)
            }
            (Formula::Cnf(f), Backend::Builtin) => builtin::bounded_enumerate(
                f,
                &extra_xors,
                s,
                limit,
                stop,
                self.weights(),
                self.conflict_budget,
                &mut self.stats,
            ),
            (Formula::Cnf(f), Backend::External(cmd)) => external::external_bounded_sat(
                cmd,
                f,
                &extra_xors,
                s,
                limit,
                stop,
                self.weights(),
                &mut self.stats,
            ),
        }
    }
}
