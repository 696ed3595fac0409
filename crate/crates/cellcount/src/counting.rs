//! PAC approximate model counting with logarithmic oracle-call search.
//!
//! One base hash is drawn per core round and prefix-sliced; because cells
//! are nested under slicing, the round can search its partition depth
//! out of order (galloping) instead of linearly, and successive rounds
//! seed the search at the previous round's depth. For CNF the oracle is
//! the DPLL solver; for DNF the polynomial enumerator makes the same
//! procedure a fully polynomial approximation scheme.

use num_bigint::BigUint;
use thiserror::Error;

use crate::formula::{Formula, ProblemInstance};
use crate::hashing::{draw_hash, XorHash};
use crate::oracle::{Backend, Cell, CellOracle, InstanceOracle, OracleError, OracleStats};
use crate::rng::{rng_from_seed, Rng};

/// Tolerance/confidence-derived counting parameters.
#[derive(Debug, Clone, Copy)]
pub struct CountParams {
    pub epsilon: f64,
    pub delta: f64,
    /// Cell-size cap: `1 + 9.84·(1 + ε/(1+ε))·(1 + 1/ε)²`.
    pub thresh: f64,
    /// Number of core rounds: `⌈17·log₂(3/δ)⌉`.
    pub t: u32,
}

impl CountParams {
    /// Integer enumeration bound: `|Y| ≥ thresh` iff `|Y| ≥ limit()`.
    pub fn limit(&self) -> u64 {
        ceil_guarded(self.thresh)
    }
}

/// Ceiling with a guard for values within 1e-9 of an integer, so that a
/// double-precision wobble across an integer boundary cannot change the
/// comparison semantics.
fn ceil_guarded(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as u64
    } else {
        x.ceil() as u64
    }
}

#[derive(Debug, Error)]
pub enum CountError {
    #[error("epsilon must be > 0")]
    BadEpsilon,
    #[error("delta must lie in (0, 1]")]
    BadDelta,
    #[error("sampling set is empty")]
    EmptySamplingSet,
    #[error("expected a DNF instance")]
    NotDnf,
    #[error("all {attempted} core rounds failed")]
    AllIterationsFailed { attempted: u32 },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// A count reported as `significand · 2^exponent2`, compared exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApproxCount {
    pub significand: u64,
    pub exponent2: u32,
    /// Set when the count came from exhausting the solution set.
    pub exact: bool,
}

impl ApproxCount {
    pub fn exact(count: u64) -> ApproxCount {
        ApproxCount {
            significand: count,
            exponent2: 0,
            exact: true,
        }
    }

    pub fn value(&self) -> BigUint {
        BigUint::from(self.significand) << self.exponent2
    }

    pub fn to_f64(&self) -> f64 {
        self.significand as f64 * (self.exponent2 as f64).exp2()
    }
}

/// Derives `thresh` and `t` from the tolerance and confidence.
pub fn compute_count_params(epsilon: f64, delta: f64) -> Result<CountParams, CountError> {
    if !(epsilon > 0.0) {
        return Err(CountError::BadEpsilon);
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(CountError::BadDelta);
    }
    let thresh = 1.0 + 9.84 * (1.0 + epsilon / (1.0 + epsilon)) * (1.0 + 1.0 / epsilon).powi(2);
    let t = ceil_guarded(17.0 * (3.0 / delta).log2()).max(1) as u32;
    Ok(CountParams {
        epsilon,
        delta,
        thresh,
        t,
    })
}

/// Outcome of one logarithmic cell search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOutcome {
    /// The unique `m` with `|cell(m)| < thresh ≤ |cell(m−1)|`.
    pub m: usize,
    /// Oracle queries the search issued.
    pub queries: u32,
}

/// Galloping search for the partition depth, given a drawn base hash.
///
/// Preconditions: the cell at slice 0 is big (≥ thresh) and the cell at
/// slice `|S|−1` is small — the caller established both. Probes linearly
/// within distance 3 of `m_prev`, then doubles, then bisects, recording
/// every verdict transitively in the ternary `BigCell` array.
pub fn log_sat_search<O: CellOracle + ?Sized>(
    oracle: &mut O,
    hash: &XorHash,
    limit: u64,
    m_prev: usize,
) -> Result<SearchOutcome, OracleError> {
    let s = oracle.sampling_width();
    debug_assert!(s >= 2, "search needs at least two sampling variables");
    let top = s - 1;
    let mut big: Vec<Option<bool>> = vec![None; s];
    big[0] = Some(true);
    big[top] = Some(false);
    let mut lo_index = 0usize;
    let mut hi_index = top;
    let mut m = m_prev.clamp(1, top);
    let mut queries = 0u32;

    loop {
        let y = oracle.bounded_sat_cell(Some(Cell { hash, slice: m }), limit, None)?;
        queries += 1;
        if (y.len() as u64) >= limit {
            // Big cell: the crossing is above m.
            if big.get(m + 1).copied().flatten() == Some(false) {
                return Ok(SearchOutcome { m: m + 1, queries });
            }
            for b in big.iter_mut().take(m + 1).skip(1) {
                *b = Some(true);
            }
            lo_index = m;
            if m.abs_diff(m_prev) < 3 {
                m += 1;
            } else if 2 * m < s {
                m *= 2;
            } else {
                m = (hi_index + m) / 2;
            }
        } else {
            // Small cell: the crossing is at or below m.
            if big[m - 1] == Some(true) {
                return Ok(SearchOutcome { m, queries });
            }
            for b in big.iter_mut().take(top + 1).skip(m) {
                *b = Some(false);
            }
            hi_index = m;
            if m.abs_diff(m_prev) < 3 {
                m -= 1;
            } else {
                m = (m + lo_index) / 2;
            }
        }
    }
}

/// One core round: draw `(h, α)`, check the full prefix, search, recount.
///
/// Returns `None` (⊥) when the full-prefix cell is still big. On success,
/// returns `(m, |cell(m)|)` with the cell-size invariant `nSols < thresh`.
pub fn approxmc2_core<O: CellOracle + ?Sized>(
    oracle: &mut O,
    limit: u64,
    prev_m: usize,
    rng: &mut Rng,
) -> Result<Option<(usize, u64)>, OracleError> {
    let s = oracle.sampling_width();
    if s < 2 {
        // A single sampling variable admits no non-trivial partition.
        return Ok(None);
    }
    let hash = draw_hash(s, s - 1, rng);
    let full = oracle.bounded_sat_cell(
        Some(Cell {
            hash: &hash,
            slice: s - 1,
        }),
        limit,
        None,
    )?;
    if (full.len() as u64) >= limit {
        return Ok(None);
    }
    let found = log_sat_search(oracle, &hash, limit, prev_m)?;
    let n_sols = oracle
        .bounded_sat_cell(
            Some(Cell {
                hash: &hash,
                slice: found.m,
            }),
            limit,
            None,
        )?
        .len() as u64;
    Ok(Some((found.m, n_sols)))
}

/// The counter, generic over the oracle (tests drive it with scripts).
pub fn approxmc2_with_oracle<O: CellOracle + ?Sized>(
    oracle: &mut O,
    epsilon: f64,
    delta: f64,
    seed: u64,
) -> Result<ApproxCount, CountError> {
    let params = compute_count_params(epsilon, delta)?;
    if oracle.sampling_width() == 0 {
        return Err(CountError::EmptySamplingSet);
    }
    let limit = params.limit();
    let y = oracle.bounded_sat_cell(None, limit, None)?;
    if (y.len() as u64) < limit {
        return Ok(ApproxCount::exact(y.len() as u64));
    }

    let mut rng = rng_from_seed(seed);
    let mut estimates: Vec<(usize, u64)> = Vec::new();
    let mut failures = 0u32;
    // prevNCells starts at 2 and carries across rounds, so consecutive
    // rounds are deliberately dependent.
    let mut prev_m = 1usize;
    for _ in 0..params.t {
        match approxmc2_core(oracle, limit, prev_m, &mut rng)? {
            Some((m, n_sols)) => {
                estimates.push((m, n_sols));
                prev_m = m;
            }
            None => failures += 1,
        }
    }
    if estimates.is_empty() {
        return Err(CountError::AllIterationsFailed {
            attempted: failures,
        });
    }
    Ok(median_estimate(&estimates))
}

/// Lower median under exact big-integer comparison.
fn median_estimate(estimates: &[(usize, u64)]) -> ApproxCount {
    let mut sorted: Vec<&(usize, u64)> = estimates.iter().collect();
    sorted.sort_by_key(|(m, n)| BigUint::from(*n) << *m);
    let (m, n_sols) = *sorted[(sorted.len() - 1) / 2];
    ApproxCount {
        significand: n_sols,
        exponent2: m as u32,
        exact: false,
    }
}

/// PAC model count of a CNF or DNF instance with the default backend.
///
/// ```
/// use cellcount::counting::approxmc2;
/// use cellcount::formula::parse_dimacs;
///
/// let instance = parse_dimacs("p cnf 2 1\n1 2 0\n")?;
/// let count = approxmc2(&instance, 0.8, 0.2, 7)?;
/// assert!(count.exact);
/// assert_eq!(count.value().to_string(), "3");
/// # Ok::<(), Box<dyn std::error::Error>>(())
/// ```
pub fn approxmc2(
    instance: &ProblemInstance,
    epsilon: f64,
    delta: f64,
    seed: u64,
) -> Result<ApproxCount, CountError> {
    let mut oracle = InstanceOracle::new(instance, Backend::from_env());
    approxmc2_with_oracle(&mut oracle, epsilon, delta, seed)
}

/// The DNF FPRAS: the identical control flow with every bounded query
/// routed to the polynomial DNF enumerator. Also reports oracle counters
/// so callers can verify that no search decisions happened.
pub fn approx_dnf_count(
    instance: &ProblemInstance,
    epsilon: f64,
    delta: f64,
    seed: u64,
) -> Result<(ApproxCount, OracleStats), CountError> {
    if !matches!(instance.formula, Formula::Dnf(_)) {
        return Err(CountError::NotDnf);
    }
    let mut oracle = InstanceOracle::builtin(instance);
    let count = approxmc2_with_oracle(&mut oracle, epsilon, delta, seed)?;
    Ok((count, oracle.stats()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{Assignment, SolutionSet, Var};
    use crate::oracle::StopRule;

    /// Oracle that answers purely from a cell-size profile indexed by
    /// slice length, ignoring the hash itself.
    pub struct ScriptedOracle {
        pub width: usize,
        pub sizes: Vec<u64>,
        pub queries: u32,
    }

    impl ScriptedOracle {
        pub fn new(width: usize, sizes: Vec<u64>) -> ScriptedOracle {
            assert_eq!(sizes.len(), width);
            ScriptedOracle {
                width,
                sizes,
                queries: 0,
            }
        }
    }

    pub fn dummy_solutions(count: u64) -> SolutionSet {
        let mut out = SolutionSet::new();
        for i in 0..count {
            out.push(Assignment::from_lits(vec![Var::new(i as u32 + 1).positive()]));
        }
        out
    }

    impl CellOracle for ScriptedOracle {
        fn sampling_width(&self) -> usize {
            self.width
        }

        fn bounded_sat_cell(
            &mut self,
            cell: Option<Cell<'_>>,
            limit: u64,
            _stop: Option<StopRule<'_>>,
        ) -> Result<SolutionSet, OracleError> {
            self.queries += 1;
            let m = cell.map_or(0, |c| c.slice);
            Ok(dummy_solutions(self.sizes[m].min(limit)))
        }
    }

    #[test]
    fn params_match_closed_forms() {
        let p = compute_count_params(0.8, 0.2).unwrap();
        assert!((p.thresh - 72.955).abs() < 1e-6);
        assert_eq!(p.t, 67);
        assert_eq!(p.limit(), 73);

        // ε→∞ floor: thresh → 1 + 9.84·2·1 = 20.68
        let p = compute_count_params(1e12, 0.2).unwrap();
        assert!((p.thresh - 20.68).abs() < 1e-3);

        assert!(matches!(
            compute_count_params(0.8, 3.0),
            Err(CountError::BadDelta)
        ));
        assert!(matches!(
            compute_count_params(0.0, 0.2),
            Err(CountError::BadEpsilon)
        ));
    }

    #[test]
    fn core_fails_when_every_cell_is_big() {
        // Profile where even the |S|−1 slice is big → ⊥ per the early check.
        let mut oracle = ScriptedOracle::new(6, vec![100; 6]);
        let mut rng = rng_from_seed(1);
        let got = approxmc2_core(&mut oracle, 13, 1, &mut rng).unwrap();
        assert_eq!(got, None);
    }

    #[test]
    fn core_returns_first_small_slice() {
        // Sizes by m: slice0=100, 1=100, 2=50, 3=25, 4=12, 5=6; thresh=13
        // → m*=4, count 12 → (2⁴, 12).
        let sizes = vec![100, 100, 50, 25, 12, 6];
        let mut oracle = ScriptedOracle::new(6, sizes);
        let mut rng = rng_from_seed(2);
        let got = approxmc2_core(&mut oracle, 13, 1, &mut rng).unwrap();
        assert_eq!(got, Some((4, 12)));
    }

    #[test]
    fn search_traces() {
        // Monotone profile with m*=4, mPrev=1 → returns 4.
        let sizes = vec![100, 100, 50, 25, 12, 6];
        let mut oracle = ScriptedOracle::new(6, sizes.clone());
        let hash = draw_hash(6, 5, &mut rng_from_seed(3));
        let out = log_sat_search(&mut oracle, &hash, 13, 1).unwrap();
        assert_eq!(out.m, 4);

        // mPrev = m* → at most 3 queries inside the linear window.
        let mut oracle = ScriptedOracle::new(6, sizes);
        let out = log_sat_search(&mut oracle, &hash, 13, 4).unwrap();
        assert_eq!(out.m, 4);
        assert!(out.queries <= 3, "queries = {}", out.queries);

        // Profile where m*=1: boundary via BigCell[0].
        let sizes = vec![100, 5, 3, 2, 1, 0];
        let mut oracle = ScriptedOracle::new(6, sizes);
        let out = log_sat_search(&mut oracle, &hash, 13, 1).unwrap();
        assert_eq!(out.m, 1);
    }

    #[test]
    fn search_matches_linear_scan_on_random_profiles() {
        use rand::Rng as _;
        let mut rng = rng_from_seed(44);
        for round in 0..500 {
            let width = rng.random_range(3..=24usize);
            let limit = rng.random_range(5..=60u64);
            // Random non-increasing profile, big at 0, small at top.
            let mut sizes = vec![0u64; width];
            sizes[0] = limit + rng.random_range(0..100);
            for i in 1..width {
                let drop = rng.random_range(0..=(sizes[i - 1] / 2).max(1));
                sizes[i] = sizes[i - 1].saturating_sub(drop.max(u64::from(rng.random::<bool>())));
            }
            sizes[width - 1] = sizes[width - 1].min(limit - 1);
            // Enforce monotonicity after the clamp.
            for i in 1..width {
                sizes[i] = sizes[i].min(sizes[i - 1]);
            }
            if sizes[0] < limit {
                continue;
            }
            let brute = (1..width)
                .find(|&m| sizes[m] < limit)
                .expect("small slice exists");
            let m_prev = rng.random_range(1..width);
            let hash = draw_hash(width, width - 1, &mut rng_from_seed(round));
            let mut oracle = ScriptedOracle::new(width, sizes);
            let out = log_sat_search(&mut oracle, &hash, limit, m_prev).unwrap();
            assert_eq!(out.m, brute, "round {round}");

            // Call budget: 3 linear probes + doubling + bisection.
            let bound = 3 + 2 * (brute.max(2) as f64).log2().ceil() as u32
                + (width as f64).log2().ceil() as u32;
            assert!(
                out.queries <= bound,
                "round {round}: {} > {bound}",
                out.queries
            );
        }
    }

    #[test]
    fn median_is_lower_middle() {
        // Even-length list → lower middle element.
        let estimates = vec![(1usize, 3u64), (2, 3), (3, 3), (4, 3)];
        let med = median_estimate(&estimates);
        assert_eq!((med.exponent2, med.significand), (2, 3));

        let estimates = vec![(5usize, 1u64), (1, 1), (3, 1)];
        let med = median_estimate(&estimates);
        assert_eq!(med.exponent2, 3);
    }

    #[test]
    fn exact_path_small_counts() {
        use crate::formula::{CnfFormula, Formula, Lit, ProblemInstance};
        // F = (x₁ ∨ x₂): exact 3.
        let f = CnfFormula::from_clauses(2, vec![vec![Lit::from_dimacs(1), Lit::from_dimacs(2)]]);
        let inst = ProblemInstance::unweighted(Formula::Cnf(f));
        let c = approxmc2(&inst, 0.8, 0.2, 7).unwrap();
        assert!(c.exact);
        assert_eq!(c.value(), BigUint::from(3u32));

        // UNSAT → 0, exact.
        let f = CnfFormula::from_clauses(1, vec![vec![Lit::from_dimacs(1)], vec![Lit::from_dimacs(-1)]]);
        let inst = ProblemInstance::unweighted(Formula::Cnf(f));
        let c = approxmc2(&inst, 0.8, 0.2, 7).unwrap();
        assert!(c.exact);
        assert_eq!(c.value(), BigUint::ZERO);
    }

    #[test]
    fn pac_on_parity_chain() {
        // Parity chain with |R| = 2^10 over n = 12: every seeded estimate
        // lands within the (1+ε) band. XOR-structured formulas stress the
        // GF(2) propagation path that plain 3-CNF never touches.
        use crate::formula::{CnfFormula, Formula, ProblemInstance, XorClause};
        let mut f = CnfFormula::new(12);
        f.add_xor(XorClause::new(vec![Var::new(1), Var::new(2)], true));
        f.add_xor(XorClause::new(vec![Var::new(2), Var::new(3)], false));
        let inst = ProblemInstance::unweighted(Formula::Cnf(f));
        let exact = (1u64 << 10) as f64;
        let mut within = 0;
        let runs = 10;
        for seed in 0..runs {
            let est = approxmc2(&inst, 0.8, 0.2, seed).unwrap().to_f64();
            if est >= exact / 1.8 && est <= exact * 1.8 {
                within += 1;
            }
        }
        assert!(within >= runs - 1, "{within}/{runs} runs within tolerance");
    }

    #[test]
    fn core_nsols_always_within_bounds() {
        // Over seeded runs on a plain CNF instance, returned nSols lands in
        // [1, limit−1]. (Formulas with their own XOR structure can zero a
        // cell through linear dependence with the hash, so this
        // observation is specific to ordinary clause instances.)
        use crate::formula::{CnfFormula, Formula, Lit, ProblemInstance};
        let f = CnfFormula::from_clauses(
            12,
            vec![
                vec![Lit::from_dimacs(1), Lit::from_dimacs(2), Lit::from_dimacs(3)],
                vec![Lit::from_dimacs(-4), Lit::from_dimacs(5), Lit::from_dimacs(-6)],
                vec![Lit::from_dimacs(7), Lit::from_dimacs(8), Lit::from_dimacs(-9)],
            ],
        );
        let inst = ProblemInstance::unweighted(Formula::Cnf(f));
        let mut oracle = InstanceOracle::builtin(&inst);
        let limit = compute_count_params(0.8, 0.2).unwrap().limit();
        let mut rng = rng_from_seed(9);
        let mut successes = 0u32;
        let mut empties = 0u32;
        for _ in 0..1000 {
            if let Some((_, n)) = approxmc2_core(&mut oracle, limit, 1, &mut rng).unwrap() {
                // The upper bound is hard; an accepted cell can be empty
                // when a hash row is orthogonal to the parent cell's
                // difference span, a ~2^{-d} event absorbed by the median.
                assert!(n < limit, "nSols = {n}");
                empties += u32::from(n == 0);
                successes += 1;
            }
        }
        assert!(successes >= 900);
        assert!(
            f64::from(empties) <= 0.01 * f64::from(successes),
            "{empties} empty cells in {successes} cores"
        );
    }
}
