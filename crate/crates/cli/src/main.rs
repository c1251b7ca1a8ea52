use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tsbdd_core::bench::{run_benchmark, svg_scatter, to_csv, BenchOptions};
use tsbdd_core::counting::{Counter, Evidence, OpCounter};
use tsbdd_core::formula::Formula;
use tsbdd_core::generate::{generate_model, suite, GenSpec};
use tsbdd_core::inference::{cause_counts, posteriors, InferenceError, PosteriorResult, Strategy, TsEvidence};
use tsbdd_core::kernel::{compile_kernel, model_size_bound, CompiledKernel, FaultMode, KernelError};
use tsbdd_core::model::{has_errors, parse_model, serialize_model, validate, TroubleshootingModel};
use tsbdd_core::oracle::reference_values;
use tsbdd_core::robdd::{Robdd, VarOrder};
use tsbdd_core::session::Session;
use tsbdd_core::verify::{check_model, random_evidence, small_spec, CheckReport};

#[derive(Parser)]
#[command(name = "tsbdd", version, about = "Troubleshooting inference on reduced ordered binary decision diagrams")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// exactly-one, exactly-m=<m> or at-most-m=<m>.
    #[arg(long, global = true, default_value = "exactly-one")]
    mode: FaultMode,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random troubleshooting model.
    Gen {
        #[arg(long, default_value_t = 10)]
        n_system: usize,
        #[arg(long, default_value_t = 4)]
        n_cause: usize,
        #[arg(long, default_value_t = 2)]
        n_action: usize,
        #[arg(long, default_value_t = 4)]
        max_subsystems: usize,
        #[arg(long, default_value_t = 1)]
        targets_min: usize,
        #[arg(long, default_value_t = 3)]
        targets_max: usize,
        #[arg(long, default_value_t = 1)]
        parents_min: usize,
        #[arg(long, default_value_t = 2)]
        parents_max: usize,
    },
    /// Compile a model's kernel and report its size.
    Compile {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, overrides_with = "no_force_faulty")]
        force_faulty: bool,
        #[arg(long)]
        no_force_faulty: bool,
        /// Write the diagram in DOT format.
        #[arg(long)]
        dump_dot: Option<PathBuf>,
    },
    /// Count satisfying configurations of a formula or a model's kernel.
    Count {
        #[arg(long, conflicts_with = "formula", required_unless_present = "formula")]
        model: Option<PathBuf>,
        #[arg(long)]
        formula: Option<String>,
        /// Comma-separated variable order; defaults to order of appearance.
        #[arg(long, requires = "formula")]
        vars: Option<String>,
        /// Comma-separated `name=value` items.
        #[arg(long, default_value = "")]
        evidence: String,
        #[arg(long)]
        force_faulty: bool,
    },
    /// Posterior probability of each cause.
    Posterior {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "")]
        evidence: String,
        #[arg(long, default_value = "both")]
        strategy: Strategy,
        /// Leave the problem variable unconstrained.
        #[arg(long)]
        no_force_faulty: bool,
    },
    /// Operation-count benchmark over a generated suite.
    Bench {
        #[arg(long, value_enum, default_value_t = SuiteSize::Full)]
        suite: SuiteSize,
        #[arg(long, default_value_t = 0)]
        observe_actions: usize,
        /// Record wall-clock time (makes the output non-reproducible).
        #[arg(long)]
        timing: bool,
        /// Also write a scatter plot of operations against variables.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Compare the engine against exhaustive enumeration.
    OracleCheck {
        /// Model to check; random small models when absent.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
    /// Read evidence statements from standard input.
    Session {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        no_force_faulty: bool,
    },
    /// Write enumeration-derived reference values as JSON.
    Freeze,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteSize {
    Full,
    Small,
}

enum Failure {
    Validation(String),
    Mismatch(String),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Other(e.into())
    }
}

impl From<KernelError> for Failure {
    fn from(e: KernelError) -> Self {
        match e {
            KernelError::Bdd(_) => Failure::Other(e.into()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<InferenceError> for Failure {
    fn from(e: InferenceError) -> Self {
        match e {
            InferenceError::StrategyMismatch { .. } => Failure::Mismatch(e.to_string()),
            InferenceError::Count(_) | InferenceError::NaiveTooLarge(_) => Failure::Other(e.into()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn emit(out: &Option<PathBuf>, text: &str) -> Outcome {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn load_model(path: &Path) -> Result<TroubleshootingModel, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let model = parse_model(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    let issues = validate(&model);
    for i in &issues {
        eprintln!("{}: {:?} {}: {}", path.display(), i.severity, i.code, i.message);
    }
    if has_errors(&issues) {
        return Err(Failure::Validation(format!("{} does not validate", path.display())));
    }
    Ok(model)
}

fn json(v: &impl serde::Serialize) -> Result<String, Failure> {
    Ok(serde_json::to_string_pretty(v).context("serializing")? + "\n")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Mismatch(m)) => {
            eprintln!("mismatch: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let Cli {
        seed,
        mode,
        format,
        out,
        command,
    } = cli;
    match command {
        Command::Gen {
            n_system,
            n_cause,
            n_action,
            max_subsystems,
            targets_min,
            targets_max,
            parents_min,
            parents_max,
        } => {
            let spec = GenSpec {
                max_subsystems_per_node: max_subsystems,
                targets_per_cause: targets_min..=targets_max,
                parents_per_action: parents_min..=parents_max,
                ..GenSpec::new(n_system, n_cause, n_action, seed)
            };
            let model = generate_model(&spec).map_err(|e| Failure::Validation(e.to_string()))?;
            let text = match format {
                Format::Json => json(&model)?,
                Format::Csv => format!("# generated: seed={seed} {}\n{}", spec.describe(), serialize_model(&model)),
            };
            emit(&out, &text)
        }
        Command::Compile {
            model,
            force_faulty,
            no_force_faulty,
            dump_dot,
        } => {
            let m = load_model(&model)?;
            let k = compile_kernel(&m, mode, force_faulty && !no_force_faulty)?;
            if let Some(p) = dump_dot {
                fs::write(&p, k.bdd.to_dot()).with_context(|| format!("writing {}", p.display()))?;
            }
            let layers: Vec<usize> = (1..=k.bdd.n_vars()).map(|l| k.bdd.layer(l).len()).collect();
            let info = serde_json::json!({
                "mode": mode.to_string(),
                "force_problem_faulty": k.force_problem_faulty,
                "order": k.order().names(),
                "nodes": k.node_count(),
                "size_bound": model_size_bound(&m, mode).to_string(),
                "cause_layer_nodes": k.cause_layer_nodes(),
                "layers": layers,
            });
            let text = match format {
                Format::Json => json(&info)?,
                Format::Csv => {
                    let mut s = String::from("key,value\n");
                    s += &format!("mode,{mode}\nforce_problem_faulty,{}\n", k.force_problem_faulty);
                    s += &format!("order,{}\n", k.order().names().join(" "));
                    s += &format!("nodes,{}\nsize_bound,{}\n", k.node_count(), model_size_bound(&m, mode));
                    s += &format!("cause_layer_nodes,{}\n", k.cause_layer_nodes());
                    let l: Vec<String> = layers.iter().map(|x| x.to_string()).collect();
                    s += &format!("layers,{}\n", l.join(" "));
                    s
                }
            };
            emit(&out, &text)
        }
        Command::Count {
            model,
            formula,
            vars,
            evidence,
            force_faulty,
        } => {
            let mut rows: Vec<(String, u128)> = Vec::new();
            if let Some(text) = formula {
                let f = Formula::parse(&text).map_err(|e| Failure::Validation(format!("formula: {e}")))?;
                let names: Vec<String> = match vars {
                    Some(v) => v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
                    None => f.variables(),
                };
                let order = VarOrder::new(names).map_err(|e| Failure::Validation(e.to_string()))?;
                let bdd = Robdd::build(&f, order).map_err(|e| Failure::Validation(e.to_string()))?;
                let mut e = Evidence::new();
                for item in evidence.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let (v, b) = item
                        .split_once('=')
                        .ok_or_else(|| Failure::Validation(format!("malformed evidence item {item:?}")))?;
                    let b = match b.trim() {
                        "1" | "true" | "faulty" | "y" => true,
                        "0" | "false" | "ok" | "n" => false,
                        other => return Err(Failure::Validation(format!("invalid value {other:?} for {v}"))),
                    };
                    e.set(v.trim(), b);
                }
                let c = Counter::new(&bdd)
                    .card_with_evidence(&e, &mut OpCounter::default())
                    .map_err(|e| Failure::Validation(e.to_string()))?;
                rows.push(("card".into(), c));
            } else {
                let m = load_model(model.as_ref().expect("clap requires model or formula"))?;
                let k = compile_kernel(&m, mode, force_faulty)?;
                let e = TsEvidence::parse(&m, &evidence)?;
                if !e.actions.is_empty() {
                    return Err(Failure::Validation("count takes kernel evidence only".into()));
                }
                let total = Counter::new(&k.bdd)
                    .card_with_evidence(&e.kernel, &mut OpCounter::default())
                    .map_err(|e| Failure::Other(e.into()))?;
                rows.push(("card".into(), total));
                rows.extend(cause_counts(&k, &e.kernel, &mut OpCounter::default())?);
            }
            let text = match format {
                Format::Json => json(&rows.iter().map(|(k, v)| (k.clone(), v.to_string())).collect::<std::collections::BTreeMap<_, _>>())?,
                Format::Csv => {
                    let mut s = String::from("name,count\n");
                    for (k, v) in &rows {
                        s += &format!("{k},{v}\n");
                    }
                    s
                }
            };
            emit(&out, &text)
        }
        Command::Posterior {
            model,
            evidence,
            strategy,
            no_force_faulty,
        } => {
            let m = load_model(&model)?;
            let k = compile_kernel(&m, mode, !no_force_faulty)?;
            let e = TsEvidence::parse(&m, &evidence)?;
            let r = posteriors(&m, &k, &e, strategy)?;
            emit(&out, &posterior_text(&r, format)?)
        }
        Command::Bench {
            suite: size,
            observe_actions,
            timing,
            svg,
        } => {
            let mut specs = suite(seed);
            if size == SuiteSize::Small {
                specs = specs.into_iter().step_by(15).collect();
            }
            let records = run_benchmark(&specs, mode, BenchOptions { timing, observe_actions })
                .map_err(|e| Failure::Other(e.into()))?;
            if let Some(p) = svg {
                fs::write(&p, svg_scatter(&records)).with_context(|| format!("writing {}", p.display()))?;
            }
            let first = &specs[0].1;
            let comment = format!(
                "seed={seed} mode={mode} suite={} observe_actions={observe_actions} totals=21..322 models_per_point=15 \
                 splits=50/30/20,40/40/20,60/25/15 {}",
                if size == SuiteSize::Full { "full" } else { "small" },
                first.describe()
            );
            let text = match format {
                Format::Json => json(&records)?,
                Format::Csv => to_csv(&records, &comment).map_err(|e| Failure::Other(e.into()))?,
            };
            emit(&out, &text)
        }
        Command::OracleCheck {
            model,
            trials,
            tolerance,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let fixed = model.as_deref().map(load_model).transpose()?;
            let mut report = CheckReport::default();
            for t in 0..trials {
                let m = match &fixed {
                    Some(m) => m.clone(),
                    None => {
                        let spec = small_spec(&mut rng, seed.wrapping_add(t as u64));
                        generate_model(&spec).map_err(|e| Failure::Validation(e.to_string()))?
                    }
                };
                let ev: Vec<TsEvidence> = (0..5).map(|_| random_evidence(&m, &mut rng)).collect();
                let r = check_model(&m, mode, &ev).map_err(|e| Failure::Other(e.into()))?;
                report.merge(&r);
            }
            let text = match format {
                Format::Json => json(&report)?,
                Format::Csv => format!(
                    "models,evidence_sets,count_mismatches,status_mismatches,max_posterior_deviation,max_evidence_deviation,max_strategy_deviation\n\
                     {},{},{},{},{:e},{:e},{:e}\n",
                    report.models,
                    report.evidence_sets,
                    report.count_mismatches,
                    report.status_mismatches,
                    report.max_posterior_deviation,
                    report.max_evidence_deviation,
                    report.max_strategy_deviation
                ),
            };
            emit(&out, &text)?;
            if report.passed(tolerance) {
                Ok(())
            } else {
                Err(Failure::Mismatch(format!("engine and oracle differ beyond {tolerance:e}")))
            }
        }
        Command::Session { model, no_force_faulty } => {
            let m = load_model(&model)?;
            let k = compile_kernel(&m, mode, !no_force_faulty)?;
            run_session(&m, &k, &out)
        }
        Command::Freeze => {
            let values = reference_values().map_err(|e| Failure::Other(e.into()))?;
            let command: Vec<String> = std::iter::once("tsbdd".to_string()).chain(std::env::args().skip(1)).collect();
            let doc = serde_json::json!({
                "command": command.join(" "),
                "values": values,
            });
            emit(&out, &json(&doc)?)
        }
    }
}

fn run_session(m: &TroubleshootingModel, k: &CompiledKernel, out: &Option<PathBuf>) -> Outcome {
    let stdin = io::stdin();
    let mut session = Session::new(m, k);
    match out {
        Some(p) => {
            let f = fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
            session.run(stdin.lock(), io::BufWriter::new(f))?;
        }
        None => session.run(stdin.lock(), io::stdout().lock())?,
    }
    Ok(())
}

fn posterior_text(r: &PosteriorResult, format: Format) -> Result<String, Failure> {
    Ok(match format {
        Format::Json => json(r)?,
        Format::Csv => {
            let mut s = String::from("cause,card,weighted_card,posterior\n");
            for c in &r.causes {
                s += &format!("{},{},{},{}\n", c.name, c.card, c.weighted_card, c.posterior);
            }
            s += &format!("# evidence_probability={} status={:?}\n", r.evidence_probability, r.status);
            s
        }
    })
}
