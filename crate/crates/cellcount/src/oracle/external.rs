//! External-solver adapter: repeated subprocess invocation with file-level
//! blocking clauses.
//!
//! The solver command is a template with an `{input}` placeholder for the
//! DIMACS path. The solver must print `s SATISFIABLE` or `s UNSATISFIABLE`
//! plus a model on `v ` lines. Solvers without native XOR support get hash
//! constraints blasted to CNF via chunked Tseitin encoding.

use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use super::{OracleError, OracleStats, StopRule};
use crate::formula::{
    assignment_weight, Assignment, CnfFormula, Lit, SamplingSet, SolutionSet, Var, WeightMap,
    XorClause,
};
use num_rational::BigRational;
use num_traits::One;

/// Default per-invocation timeout (seconds).
pub const DEFAULT_SOLVE_TIMEOUT_SECS: u64 = 2_500;

/// Width of the variable chunks used when blasting an XOR to CNF.
pub const XOR_CHUNK_SIZE: usize = 4;

/// Configuration of an external solver.
#[derive(Debug, Clone)]
pub struct SolverCmd {
    /// Command template; `{input}` is replaced by the DIMACS path.
    pub template: String,
    /// Whether the solver accepts `x` lines natively.
    pub native_xor: bool,
    /// Prefix of model lines, normally `v`.
    pub model_prefix: String,
    /// Per-invocation wall-clock timeout.
    pub timeout: Duration,
}

impl SolverCmd {
    pub fn new(template: impl Into<String>) -> SolverCmd {
        SolverCmd {
            template: template.into(),
            native_xor: false,
            model_prefix: "v".to_string(),
            timeout: Duration::from_secs(DEFAULT_SOLVE_TIMEOUT_SECS),
        }
    }

    pub fn with_native_xor(mut self, native: bool) -> SolverCmd {
        self.native_xor = native;
        self
    }
}

/// Allocates fresh variables above an existing range.
#[derive(Debug)]
pub struct FreshVars {
    next: u32,
}

impl FreshVars {
    pub fn starting_after(num_vars: u32) -> FreshVars {
        FreshVars { next: num_vars + 1 }
    }

    pub fn fresh(&mut self) -> Var {
        let v = Var::new(self.next);
        self.next += 1;
        v
    }

    pub fn num_vars(&self) -> u32 {
        self.next - 1
    }
}

/// Tseitin-chunk encoding of an XOR constraint.
///
/// The variable list is split into chunks of at most [`XOR_CHUNK_SIZE`];
/// consecutive chunks are chained through fresh parity variables. Each
/// chunk of width `k` emits `2^{k−1}` clauses. The clause set is logically
/// equivalent to the XOR with respect to the original variables: the fresh
/// variables are defined, never free.
pub fn blast_xor_to_cnf(xor: &XorClause, fresh: &mut FreshVars) -> Vec<Vec<Lit>> {
    if xor.vars().is_empty() {
        // Parity 1 is the contradiction marker, parity 0 a tautology.
        return if xor.parity() { vec![vec![]] } else { vec![] };
    }
    let chunks: Vec<&[Var]> = xor.vars().chunks(XOR_CHUNK_SIZE).collect();
    let mut clauses = Vec::new();
    let mut carry: Option<Var> = None;
    for (i, chunk) in chunks.iter().enumerate() {
        let last = i + 1 == chunks.len();
        let mut vars: Vec<Var> = chunk.to_vec();
        if let Some(c) = carry {
            vars.push(c);
        }
        if last {
            emit_xor_cnf(&vars, xor.parity(), &mut clauses);
        } else {
            // t ≡ ⊕chunk (⊕ previous carry): xor(vars ∪ {t}) = 0
            let t = fresh.fresh();
            vars.push(t);
            emit_xor_cnf(&vars, false, &mut clauses);
            carry = Some(t);
        }
    }
    clauses
}

/// CNF for `⊕vars = parity`: one clause per sign pattern that violates the
/// constraint.
fn emit_xor_cnf(vars: &[Var], parity: bool, out: &mut Vec<Vec<Lit>>) {
    let w = vars.len();
    for bits in 0..1u32 << w {
        let ones = bits.count_ones() as usize;
        // Assignment with `ones` true variables violates the xor iff its
        // parity differs from the target; block it.
        if (ones % 2 == 1) != parity {
            out.push(
                vars.iter()
                    .enumerate()
                    .map(|(k, &v)| v.lit(bits >> k & 1 == 0))
                    .collect(),
            );
        }
    }
}

static FILE_COUNTER: AtomicU64 = AtomicU64::new(0);

fn temp_path() -> PathBuf {
    let id = FILE_COUNTER.fetch_add(1, Ordering::Relaxed);
    std::env::temp_dir().join(format!(
        "cellcount-{}-{}.cnf",
        std::process::id(),
        id
    ))
}

/// Bounded enumeration through an external solver.
///
/// Writes the instance to a DIMACS file, invokes the solver, parses the
/// model, projects it, appends a blocking clause to the file and repeats
/// until the limit, UNSAT, or the stop rule fires.
#[allow(clippy::too_many_arguments)]
pub fn external_bounded_sat(
    cmd: &SolverCmd,
    cnf: &CnfFormula,
    extra_xors: &[XorClause],
    s: &SamplingSet,
    limit: u64,
    mut stop: Option<StopRule<'_>>,
    weights: Option<&WeightMap>,
    stats: &mut OracleStats,
) -> Result<SolutionSet, OracleError> {
    let mut dimacs = render_dimacs(cmd, cnf, extra_xors);
    let path = temp_path();
    let mut out = SolutionSet::new();
    let result = (|| {
        while (out.len() as u64) < limit {
            std::fs::write(&path, &dimacs).map_err(|e| OracleError::External(e.to_string()))?;
            stats.solver_calls += 1;
            match run_solver(cmd, &path)? {
                None => break,
                Some(model) => {
                    let projected = model.project(s);
                    let weight = match weights {
                        Some(w) => assignment_weight(w, &projected),
                        None => BigRational::one(),
                    };
                    out.push_weighted(projected.clone(), weight);
                    if let Some(stop) = stop.as_deref_mut() {
                        if stop(&projected) {
                            break;
                        }
                    }
                    if projected.is_empty() {
                        break;
                    }
                    let block: Vec<String> = projected
                        .lits()
                        .iter()
                        .map(|l| l.negated().to_string())
                        .collect();
                    dimacs.push_str(&block.join(" "));
                    dimacs.push_str(" 0\n");
                }
            }
        }
        Ok(std::mem::take(&mut out))
    })();
    let _ = std::fs::remove_file(&path);
    result
}

fn render_dimacs(cmd: &SolverCmd, cnf: &CnfFormula, extra_xors: &[XorClause]) -> String {
    let mut clauses: Vec<Vec<Lit>> = cnf.clauses().to_vec();
    let mut num_vars = cnf.num_vars();
    let mut xor_lines = String::new();
    if cmd.native_xor {
        for x in cnf.xor_clauses().iter().chain(extra_xors) {
            if x.vars().is_empty() {
                if x.parity() {
                    clauses.push(vec![]);
                }
                continue;
            }
            xor_lines.push('x');
            for (i, v) in x.vars().iter().enumerate() {
                if i == 0 && !x.parity() {
                    xor_lines.push_str(&format!(" -{v}"));
                } else {
                    xor_lines.push_str(&format!(" {v}"));
                }
            }
            xor_lines.push_str(" 0\n");
        }
    } else {
        let mut fresh = FreshVars::starting_after(num_vars);
        for x in cnf.xor_clauses().iter().chain(extra_xors) {
            clauses.extend(blast_xor_to_cnf(x, &mut fresh));
        }
        num_vars = fresh.num_vars();
    }
    let mut text = format!("p cnf {} {}\n", num_vars, clauses.len());
    for c in &clauses {
        for l in c {
            text.push_str(&format!("{l} "));
        }
        text.push_str("0\n");
    }
    text.push_str(&xor_lines);
    text
}

/// Runs one solver invocation, enforcing the timeout by polling.
fn run_solver(cmd: &SolverCmd, path: &std::path::Path) -> Result<Option<Assignment>, OracleError> {
    let rendered = cmd.template.replace("{input}", &path.display().to_string());
    let mut parts = rendered.split_whitespace();
    let program = parts
        .next()
        .ok_or_else(|| OracleError::External("empty solver command".into()))?;
    let mut child = Command::new(program)
        .args(parts)
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .stdin(Stdio::null())
        .spawn()
        .map_err(|e| OracleError::External(format!("failed to spawn `{program}`: {e}")))?;

    let start = Instant::now();
    loop {
        match child.try_wait() {
            Ok(Some(_)) => break,
            Ok(None) => {
                if start.elapsed() > cmd.timeout {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(OracleError::Timeout(cmd.timeout.as_secs()));
                }
                std::thread::sleep(Duration::from_millis(5));
            }
            Err(e) => return Err(OracleError::External(e.to_string())),
        }
    }
    let output = child
        .wait_with_output()
        .map_err(|e| OracleError::External(e.to_string()))?;
    let stdout = String::from_utf8_lossy(&output.stdout);

    let mut status: Option<bool> = None;
    let mut lits: Vec<Lit> = Vec::new();
    for line in stdout.lines() {
        let line = line.trim();
        if line == "s SATISFIABLE" {
            status = Some(true);
        } else if line == "s UNSATISFIABLE" {
            status = Some(false);
        } else if let Some(rest) = line.strip_prefix(&format!("{} ", cmd.model_prefix)) {
            for tok in rest.split_whitespace() {
                let code: i32 = tok.parse().map_err(|_| {
                    OracleError::External(format!("unparsable model token `{tok}`"))
                })?;
                if code != 0 {
                    lits.push(Lit::from_dimacs(code));
                }
            }
        }
    }
    match status {
        Some(false) => Ok(None),
        Some(true) => {
            if lits.is_empty() {
                return Err(OracleError::External("satisfiable but no model line".into()));
            }
            // Reject duplicate or conflicting assignments instead of
            // trusting the subprocess.
            lits.sort_unstable_by_key(|l| l.var());
            for w in lits.windows(2) {
                if w[0].var() == w[1].var() {
                    return Err(OracleError::External(format!(
                        "model assigns variable {} twice",
                        w[0].var()
                    )));
                }
            }
            Ok(Some(Assignment::from_lits(lits)))
        }
        None => Err(OracleError::External(format!(
            "no recognizable status line (exit: {:?})",
            output.status.code()
        ))),
    }
}
