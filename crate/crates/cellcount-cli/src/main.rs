//! `cellcount`: approximate counting, sampling, support minimization and
//! network unreliability from the command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 input error, 3 solver/backend
//! error, 4 every core iteration (or sampling retry) failed.

use std::fmt::Write as _;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::ToPrimitive;

use cellcount::counting::{self, compute_count_params, CountError};
use cellcount::formula::{
    parse_dimacs, serialize_dimacs, Assignment, Formula, ProblemInstance, SamplingSet,
};
use cellcount::indsupport;
use cellcount::oracle::{Backend, InstanceOracle};
use cellcount::relnet;
use cellcount::rng::derive;
use cellcount::sampling::{self, SampleError};
use cellcount::weighted::{self, WmcError};

#[derive(Parser)]
#[command(
    name = "cellcount",
    about = "Constrained counting and sampling over a SAT oracle",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputMode {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SampleVariantArg {
    Unigen,
    Unigen2,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReduceMode {
    Conjunctive,
    Implicative,
    Preserve,
}

#[derive(Subcommand)]
enum Command {
    /// Approximate model count ("s mc <count>").
    Count {
        input: String,
        #[arg(long, default_value_t = 0.8)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        #[arg(long)]
        seed: Option<u64>,
        /// Compute a minimal independent support first and project onto it.
        #[arg(long)]
        mis_first: bool,
        #[arg(long, value_enum, default_value_t = OutputMode::Text)]
        output: OutputMode,
        #[arg(short, long)]
        verbose: bool,
    },
    /// Approximate weighted model count.
    Wcount {
        input: String,
        #[arg(long, default_value_t = 0.8)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        /// Upper bound on the tilt (max/min satisfying-assignment weight).
        #[arg(long, default_value_t = 3.0)]
        tilt: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = OutputMode::Text)]
        output: OutputMode,
    },
    /// Almost-uniform samples, one witness per line.
    Sample {
        input: String,
        #[arg(long, value_enum, default_value_t = SampleVariantArg::Unigen2)]
        variant: SampleVariantArg,
        /// Tolerance; defaults to 16 for unigen2 and 6 for unigen.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(short = 'N', long, default_value_t = 1)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long, default_value_t = 10)]
        max_retries: u32,
        /// Aggregate identical witnesses into "<witness> <count>" lines.
        #[arg(long)]
        freq: bool,
        #[arg(long)]
        mis_first: bool,
        #[arg(long, value_enum, default_value_t = OutputMode::Text)]
        output: OutputMode,
    },
    /// Weighted samples under the instance's literal weights.
    Wsample {
        input: String,
        #[arg(long, default_value_t = 16.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 3.0)]
        tilt: f64,
        #[arg(short = 'N', long, default_value_t = 1)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 10)]
        max_retries: u32,
        #[arg(long)]
        freq: bool,
        #[arg(long, value_enum, default_value_t = OutputMode::Text)]
        output: OutputMode,
    },
    /// Minimal independent support, emitted as a "c ind" line.
    Mis {
        input: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Cap on deletion SAT calls (anytime mode).
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long, value_enum, default_value_t = OutputMode::Text)]
        output: OutputMode,
    },
    /// Two-terminal network unreliability.
    Relnet {
        input: String,
        #[arg(long)]
        source: Option<u32>,
        #[arg(long)]
        sink: Option<u32>,
        #[arg(long)]
        all_pairs: bool,
        /// Treat edges as directed (the literal path semantics).
        #[arg(long)]
        directed: bool,
        #[arg(long, default_value_t = 0.8)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long, value_enum, default_value_t = OutputMode::Text)]
        output: OutputMode,
    },
    /// Reduce a weighted instance to an unweighted DIMACS formula.
    Reduce {
        input: String,
        #[arg(long, value_enum, default_value_t = ReduceMode::Conjunctive)]
        mode: ReduceMode,
    },
}

/// An error paired with its process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Failure {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn solver(message: impl Into<String>) -> Failure {
        Failure {
            code: 3,
            message: message.into(),
        }
    }

    fn exhausted(message: impl Into<String>) -> Failure {
        Failure {
            code: 4,
            message: message.into(),
        }
    }
}

impl From<CountError> for Failure {
    fn from(e: CountError) -> Failure {
        match e {
            CountError::AllIterationsFailed { .. } => Failure::exhausted(e.to_string()),
            CountError::Oracle(_) => Failure::solver(e.to_string()),
            _ => Failure::input(e.to_string()),
        }
    }
}

impl From<WmcError> for Failure {
    fn from(e: WmcError) -> Failure {
        match e {
            WmcError::AllIterationsFailed { .. } => Failure::exhausted(e.to_string()),
            WmcError::Oracle(_) => Failure::solver(e.to_string()),
            _ => Failure::input(e.to_string()),
        }
    }
}

impl From<SampleError> for Failure {
    fn from(e: SampleError) -> Failure {
        match e {
            SampleError::RetriesExhausted(_) => Failure::exhausted(e.to_string()),
            SampleError::Oracle(_) => Failure::solver(e.to_string()),
            SampleError::Count(c) => c.into(),
            SampleError::Wmc(w) => w.into(),
            _ => Failure::input(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    // Usage errors exit 1; --help/--version exit 0.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_instance(path: &str) -> Result<ProblemInstance, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {path}: {e}")))?;
    parse_dimacs(&text).map_err(|e| Failure::input(format!("{path}: {e}")))
}

fn pick_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}

fn backend_name() -> &'static str {
    match Backend::from_env() {
        Backend::Builtin => "builtin",
        Backend::External(_) => "external",
    }
}

/// Substitutes a freshly minimized independent support for the sampling
/// set (the `--mis-first` flow).
fn apply_mis_first(instance: &mut ProblemInstance, seed: u64) -> Result<usize, Failure> {
    let Formula::Cnf(f) = &instance.formula else {
        return Err(Failure::input("--mis-first requires a CNF input"));
    };
    let out = indsupport::mis(f, None, None, seed, None)
        .map_err(|e| Failure::solver(e.to_string()))?;
    let size = out.support.len();
    instance.sampling_set = out.support;
    Ok(size)
}

fn witness_line(a: &Assignment) -> String {
    a.to_string()
}

fn emit_samples(samples: &[Assignment], freq: bool, output: OutputMode) {
    match output {
        OutputMode::Json => {
            let items: Vec<String> = samples.iter().map(witness_line).collect();
            println!(
                "{}",
                serde_json::json!({ "samples": items, "count": samples.len() })
            );
        }
        OutputMode::Text => {
            if freq {
                let mut counts: std::collections::BTreeMap<&Assignment, u64> =
                    std::collections::BTreeMap::new();
                for a in samples {
                    *counts.entry(a).or_default() += 1;
                }
                for (a, c) in counts {
                    println!("{} {}", witness_line(a), c);
                }
            } else {
                for a in samples {
                    println!("{}", witness_line(a));
                }
            }
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Count {
            input,
            epsilon,
            delta,
            seed,
            mis_first,
            output,
            verbose,
        } => {
            let mut instance = load_instance(&input)?;
            let seed = pick_seed(seed);
            let mis_size = if mis_first {
                Some(apply_mis_first(&mut instance, derive(seed, 7))?)
            } else {
                None
            };
            let params = compute_count_params(epsilon, delta).map_err(Failure::from)?;
            let is_dnf = matches!(instance.formula, Formula::Dnf(_));
            let mut oracle = InstanceOracle::new(&instance, Backend::from_env());
            let count = counting::approxmc2_with_oracle(&mut oracle, epsilon, delta, seed)?;
            let stats = oracle.stats();
            let oracle_kind = if is_dnf { "dnf" } else { backend_name() };
            match output {
                OutputMode::Text => {
                    println!("c seed {seed}");
                    println!("c thresh {:.6} t {}", params.thresh, params.t);
                    println!("c oracle {oracle_kind}");
                    if let Some(k) = mis_size {
                        println!("c mis-first support size {k}");
                    }
                    if verbose {
                        println!("c sat calls {}", stats.solver_calls);
                    }
                    println!("s mc {}", count.value());
                }
                OutputMode::Json => {
                    println!(
                        "{}",
                        serde_json::json!({
                            "command": "count",
                            "estimate": count.value().to_string(),
                            "significand": count.significand,
                            "exponent2": count.exponent2,
                            "exact": count.exact,
                            "sat_calls": stats.solver_calls,
                            "seed": seed,
                            "epsilon": epsilon,
                            "delta": delta,
                            "thresh": params.thresh,
                            "t": params.t,
                            "oracle": oracle_kind,
                            "mis_first_size": mis_size,
                        })
                    );
                }
            }
            Ok(())
        }
        Command::Wcount {
            input,
            epsilon,
            delta,
            tilt,
            seed,
            output,
        } => {
            let instance = load_instance(&input)?;
            let seed = pick_seed(seed);
            let tilt = BigRational::from_float(tilt)
                .ok_or_else(|| Failure::input("tilt must be a finite number"))?;
            let params =
                weighted::compute_weight_params(epsilon, delta, tilt.clone()).map_err(Failure::from)?;
            let out = weighted::weightmc(&instance, epsilon, delta, tilt, seed)?;
            let decimal = out.estimate.to_f64().unwrap_or(f64::NAN);
            match output {
                OutputMode::Text => {
                    println!("c seed {seed}");
                    println!("c pivot {} t {}", params.pivot, params.t);
                    if out.diagnostics.w_max_above_one {
                        println!("c note: refined w_max exceeded 1");
                    }
                    if out.diagnostics.tilt_violation {
                        println!("c warning: observed weight below w_max/tilt; tilt bound too small");
                    }
                    println!("s wmc {} ~ {decimal}", out.estimate);
                }
                OutputMode::Json => {
                    println!(
                        "{}",
                        serde_json::json!({
                            "command": "wcount",
                            "estimate": out.estimate.to_string(),
                            "estimate_decimal": decimal,
                            "w_max": out.w_max.to_string(),
                            "failures": out.failures,
                            "pivot": params.pivot,
                            "t": params.t,
                            "seed": seed,
                            "epsilon": epsilon,
                            "delta": delta,
                            "tilt_violation": out.diagnostics.tilt_violation,
                            "w_max_above_one": out.diagnostics.w_max_above_one,
                        })
                    );
                }
            }
            Ok(())
        }
        Command::Sample {
            input,
            variant,
            epsilon,
            samples,
            seed,
            threads,
            max_retries,
            freq,
            mis_first,
            output,
        } => {
            let mut instance = load_instance(&input)?;
            let seed = pick_seed(seed);
            if mis_first {
                apply_mis_first(&mut instance, derive(seed, 7))?;
            }
            let collected = match variant {
                SampleVariantArg::Unigen2 => {
                    let epsilon = epsilon.unwrap_or(16.0);
                    let params =
                        sampling::compute_kappa_pivot(epsilon, sampling::SamplerVariant::Unigen2)?;
                    if matches!(output, OutputMode::Text) {
                        println!(
                            "c kappa {:.6} pivot {} loThresh {} thresh {}",
                            params.kappa, params.pivot, params.lo_thresh_int, params.hi_thresh_int
                        );
                    }
                    let out = sampling::unigen2_parallel(
                        &instance,
                        epsilon,
                        samples,
                        threads.max(1),
                        seed,
                        max_retries,
                    )?;
                    out.samples
                }
                SampleVariantArg::Unigen => {
                    let epsilon = epsilon.unwrap_or(6.0);
                    let params =
                        sampling::compute_kappa_pivot(epsilon, sampling::SamplerVariant::Unigen)?;
                    if matches!(output, OutputMode::Text) {
                        println!(
                            "c kappa {:.6} pivot {} loThresh {} hiThresh {}",
                            params.kappa, params.pivot, params.lo_thresh_int, params.hi_thresh_int
                        );
                    }
                    let mut oracle = InstanceOracle::new(&instance, Backend::from_env());
                    let mut collected = Vec::with_capacity(samples);
                    let mut stream = 0u64;
                    for _ in 0..samples {
                        let mut got = None;
                        for _ in 0..=max_retries {
                            let s = derive(seed, stream);
                            stream += 1;
                            if let Some(a) =
                                sampling::unigen_sample_with_oracle(&mut oracle, epsilon, s)?
                            {
                                got = Some(a);
                                break;
                            }
                        }
                        match got {
                            Some(a) => collected.push(a),
                            None => {
                                return Err(Failure::exhausted(format!(
                                    "sampling failed after {max_retries} retries"
                                )))
                            }
                        }
                    }
                    collected
                }
            };
            if matches!(output, OutputMode::Text) {
                println!("c seed {seed}");
            }
            emit_samples(&collected, freq, output);
            Ok(())
        }
        Command::Wsample {
            input,
            epsilon,
            tilt,
            samples,
            seed,
            max_retries,
            freq,
            output,
        } => {
            let instance = load_instance(&input)?;
            let seed = pick_seed(seed);
            let tilt = BigRational::from_float(tilt)
                .ok_or_else(|| Failure::input("tilt must be a finite number"))?;
            let params =
                sampling::compute_kappa_pivot(epsilon, sampling::SamplerVariant::Weightgen)?;
            if matches!(output, OutputMode::Text) {
                println!(
                    "c kappa {:.6} pivot {} loThresh {:.3} hiThresh {:.3}",
                    params.kappa, params.pivot, params.lo_thresh, params.hi_thresh
                );
            }
            let mut collected = Vec::with_capacity(samples);
            let mut stream = 0u64;
            for _ in 0..samples {
                let mut got = None;
                for _ in 0..=max_retries {
                    let s = derive(seed, stream);
                    stream += 1;
                    if let Some(a) =
                        sampling::weightgen_sample(&instance, epsilon, tilt.clone(), s)?
                    {
                        got = Some(a);
                        break;
                    }
                }
                match got {
                    Some(a) => collected.push(a),
                    None => {
                        return Err(Failure::exhausted(format!(
                            "sampling failed after {max_retries} retries"
                        )))
                    }
                }
            }
            if matches!(output, OutputMode::Text) {
                println!("c seed {seed}");
            }
            emit_samples(&collected, freq, output);
            Ok(())
        }
        Command::Mis {
            input,
            seed,
            budget,
            output,
        } => {
            let instance = load_instance(&input)?;
            let Formula::Cnf(f) = &instance.formula else {
                return Err(Failure::input("mis requires a CNF input"));
            };
            let seed = pick_seed(seed);
            let user_v = if instance.sampling_set != SamplingSet::all(instance.num_vars()) {
                Some(&instance.sampling_set)
            } else {
                None
            };
            let out = indsupport::mis(f, None, user_v, seed, budget)
                .map_err(|e| Failure::solver(e.to_string()))?;
            match output {
                OutputMode::Text => {
                    println!("c seed {seed}");
                    println!("c minimal {}", out.minimal);
                    println!("c size {}", out.support.len());
                    let mut line = String::from("c ind");
                    for v in out.support.vars() {
                        write!(line, " {v}").unwrap();
                    }
                    line.push_str(" 0");
                    println!("{line}");
                }
                OutputMode::Json => {
                    println!(
                        "{}",
                        serde_json::json!({
                            "command": "mis",
                            "support": out.support.vars().iter().map(|v| v.index()).collect::<Vec<_>>(),
                            "size": out.support.len(),
                            "minimal": out.minimal,
                            "seed": seed,
                        })
                    );
                }
            }
            Ok(())
        }
        Command::Relnet {
            input,
            source,
            sink,
            all_pairs,
            directed,
            epsilon,
            delta,
            seed,
            threads,
            output,
        } => {
            let text = std::fs::read_to_string(&input)
                .map_err(|e| Failure::input(format!("cannot read {input}: {e}")))?;
            let graph = relnet::parse_graph(&text).map_err(|e| Failure::input(e.to_string()))?;
            let seed = pick_seed(seed);
            let pairs: Vec<(u32, u32)> = if all_pairs {
                let mut pairs = Vec::new();
                for u in 1..=graph.nodes {
                    for v in u + 1..=graph.nodes {
                        pairs.push((u, v));
                    }
                }
                pairs
            } else {
                let (Some(u), Some(v)) = (source, sink) else {
                    return Err(Failure {
                        code: 1,
                        message: "relnet needs --source and --sink (or --all-pairs)".into(),
                    });
                };
                vec![(u, v)]
            };

            let workers = threads.max(1).min(pairs.len().max(1));
            let results: Vec<Result<(u32, u32, relnet::ReliabilityEstimate), Failure>> =
                std::thread::scope(|scope| {
                    let graph = &graph;
                    let chunks: Vec<Vec<(usize, (u32, u32))>> = {
                        let mut c: Vec<Vec<(usize, (u32, u32))>> = vec![Vec::new(); workers];
                        for (i, p) in pairs.iter().enumerate() {
                            c[i % workers].push((i, *p));
                        }
                        c
                    };
                    let handles: Vec<_> = chunks
                        .into_iter()
                        .map(|chunk| {
                            scope.spawn(move || {
                                let mut out = Vec::new();
                                for (i, (u, v)) in chunk {
                                    let r = relnet::estimate_unreliability(
                                        graph,
                                        u,
                                        v,
                                        directed,
                                        epsilon,
                                        delta,
                                        derive(seed, i as u64),
                                    )
                                    .map(|e| (u, v, e))
                                    .map_err(|e| match e {
                                        relnet::RelnetError::Count(c) => c.into(),
                                        other => Failure::input(other.to_string()),
                                    });
                                    out.push((i, r));
                                }
                                out
                            })
                        })
                        .collect();
                    let mut indexed: Vec<(usize, Result<_, Failure>)> = handles
                        .into_iter()
                        .flat_map(|h| h.join().expect("worker panicked"))
                        .collect();
                    indexed.sort_by_key(|(i, _)| *i);
                    indexed.into_iter().map(|(_, r)| r).collect()
                });

            let mut rows = Vec::new();
            for r in results {
                rows.push(r?);
            }
            match output {
                OutputMode::Text => {
                    println!("c seed {seed}");
                    for (u, v, est) in &rows {
                        println!(
                            "r({u},{v}) = {} ~ {:.6}",
                            est.unreliability,
                            est.unreliability.to_f64().unwrap_or(f64::NAN)
                        );
                    }
                }
                OutputMode::Json => {
                    let items: Vec<serde_json::Value> = rows
                        .iter()
                        .map(|(u, v, est)| {
                            serde_json::json!({
                                "u": u,
                                "v": v,
                                "r": est.unreliability.to_string(),
                                "r_decimal": est.unreliability.to_f64(),
                                "epsilon": epsilon,
                                "delta": delta,
                            })
                        })
                        .collect();
                    println!(
                        "{}",
                        serde_json::json!({ "command": "relnet", "seed": seed, "rows": items })
                    );
                }
            }
            Ok(())
        }
        Command::Reduce { input, mode } => {
            let instance = load_instance(&input)?;
            let red = match mode {
                ReduceMode::Conjunctive => weighted::reduce_wmc_conjunctive(&instance),
                ReduceMode::Implicative => weighted::reduce_wmc_implicative(&instance),
                ReduceMode::Preserve => weighted::reduce_wmc_form_preserving(&instance),
            }
            .map_err(|e| Failure::input(e.to_string()))?;
            print!("c C_F 2^-{}\n{}", red.total_bits, extra_correction_line(&red));
            print!("{}", serialize_dimacs(&red.instance));
            Ok(())
        }
    }
}

fn extra_correction_line(red: &weighted::Reduction) -> String {
    use num_traits::Zero;
    if red.correction.is_zero() {
        String::new()
    } else {
        format!("c correction {}\n", red.correction)
    }
}
