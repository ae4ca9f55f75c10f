use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde_json::Value;

use vnsim::harness::{error_json, run, run_with_seed, Experiment, OutputFormat, OutputSpec, RunConfig};
use vnsim::reduction::RngSeed;
use vnsim::{Error, Result};

#[derive(Parser)]
#[command(name = "vnsim", version, about = "Two-process quantum dynamics: Zeno, attention and Hardy experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG seed; overrides VN_SEED and the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file, or one of csv|json|jsonl to print to stdout.
    #[arg(long)]
    out: Option<String>,
    /// Extra parameter as key=value (value parsed as JSON when possible).
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Write the effective configuration to this file before running.
    #[arg(long)]
    emit_config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a JSON configuration.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Survival under n equally spaced repetitions of the initial-state question.
    Zeno {
        #[arg(long)]
        hamiltonian: Option<String>,
        #[arg(long = "T")]
        total_time: Option<f64>,
        /// Comma-separated measurement counts.
        #[arg(long)]
        n: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Zeno dragging along the great circle from |0> to |1>.
    Drag {
        #[arg(long)]
        n: Option<String>,
        #[arg(long = "T")]
        total_time: Option<f64>,
        #[arg(long)]
        hamiltonian: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Unitary evolution of a pure initial state.
    Evolve {
        #[arg(long)]
        hamiltonian: Option<String>,
        #[arg(long)]
        t: Option<f64>,
        /// Amplitudes as a JSON array.
        #[arg(long)]
        initial: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// One stream of consciousness with local-maximum triggering and consent.
    Attention {
        #[arg(long = "T")]
        total_time: Option<f64>,
        #[arg(long)]
        effort_rate: Option<f64>,
        #[arg(long)]
        dephasing: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Two tasks sharing one serial event channel.
    DualTask {
        #[arg(long = "T")]
        total_time: Option<f64>,
        #[arg(long)]
        shared_rate: Option<f64>,
        #[arg(long)]
        effort_rate: Option<f64>,
        #[arg(long)]
        idle_b: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Hardy instance checks.
    Hardy {
        #[command(subcommand)]
        command: HardyCommand,
    },
    /// List experiments and their parameters.
    Experiments,
}

#[derive(Args, Default)]
struct InstanceArgs {
    /// canonical | optimized | family | product | random
    #[arg(long)]
    instance: Option<String>,
    #[arg(long)]
    theta: Option<f64>,
    /// Objective evaluations for --instance optimized.
    #[arg(long)]
    budget: Option<usize>,
}

#[derive(Subcommand)]
enum HardyCommand {
    /// The four predictions plus both assertion verdicts.
    Verify {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Enumerate the 16 deterministic local assignments.
    Lhv {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Decide A(R1) or A(R2).
    Assert {
        #[arg(long)]
        which: Option<String>,
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        common: Common,
    },
}

fn experiments_help() -> String {
    let mut s = String::from("Experiments (config \"experiment\" names and parameters):\n");
    for e in Experiment::ALL {
        let required = if e.required().is_empty() { "none".to_string() } else { e.required().join(", ") };
        s.push_str(&format!("  {:<13} required: {required}\n", e.name()));
        s.push_str(&format!("  {:<13} optional: {}\n", "", e.optional().join(", ")));
    }
    s.push_str("\nVN_SEED overrides the config seed; --seed overrides both.");
    s
}

type Overrides = Vec<(&'static str, Option<Value>)>;

fn num(x: Option<f64>) -> Option<Value> {
    x.map(Value::from)
}

fn text(x: Option<String>) -> Option<Value> {
    x.map(Value::String)
}

fn json_or_text(x: Option<String>) -> Option<Value> {
    x.map(|s| serde_json::from_str(&s).unwrap_or(Value::String(s)))
}

fn instance_overrides(a: InstanceArgs) -> Overrides {
    vec![
        ("instance", text(a.instance)),
        ("theta", num(a.theta)),
        ("budget", a.budget.map(Value::from)),
    ]
}

fn build(experiment: Option<Experiment>, common: &Common, overrides: Overrides) -> Result<RunConfig> {
    let mut config = match (&common.config, experiment) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)?;
            let mut value: Value = serde_json::from_str(&text)?;
            if let (Some(e), Some(obj)) = (experiment, value.as_object_mut()) {
                match obj.get("experiment").and_then(Value::as_str) {
                    None => {
                        obj.insert("experiment".into(), Value::String(e.name().into()));
                    }
                    Some(name) if name.parse::<Experiment>()? != e => {
                        return Err(Error::InvalidField {
                            field: "experiment".into(),
                            message: format!("config names `{name}` but the subcommand runs `{e}`"),
                        });
                    }
                    Some(_) => {}
                }
            }
            RunConfig::parse(&value.to_string())?
        }
        (None, Some(e)) => RunConfig::new(e),
        (None, None) => return Err(Error::MissingField("--config".into())),
    };
    for (key, value) in overrides {
        if let Some(v) = value {
            config.parameters.insert(key.into(), v);
        }
    }
    for kv in &common.params {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::InvalidField {
            field: "--param".into(),
            message: format!("`{kv}` is not KEY=VALUE"),
        })?;
        config
            .parameters
            .insert(k.to_string(), json_or_text(Some(v.to_string())).expect("some"));
    }
    if let Some(seed) = common.seed {
        config.seed = Some(RngSeed(seed));
    }
    if let Some(out) = &common.out {
        config.output = Some(match out.parse::<OutputFormat>() {
            Ok(format) => OutputSpec {
                path: None,
                format: Some(format),
            },
            Err(_) => OutputSpec {
                path: Some(PathBuf::from(out)),
                format: None,
            },
        });
    }
    config.validate()?;
    Ok(config)
}

fn dispatch(command: Command) -> Result<Option<(RunConfig, Option<u64>)>> {
    let (experiment, common, overrides) = match command {
        Command::Experiments => {
            println!("{}", experiments_help());
            return Ok(None);
        }
        Command::Run { common } => (None, common, vec![]),
        Command::Zeno {
            hamiltonian,
            total_time,
            n,
            common,
        } => (
            Some(Experiment::Zeno),
            common,
            vec![("hamiltonian", text(hamiltonian)), ("T", num(total_time)), ("n", text(n))],
        ),
        Command::Drag {
            n,
            total_time,
            hamiltonian,
            common,
        } => (
            Some(Experiment::Drag),
            common,
            vec![("n", text(n)), ("T", num(total_time)), ("hamiltonian", text(hamiltonian))],
        ),
        Command::Evolve {
            hamiltonian,
            t,
            initial,
            common,
        } => (
            Some(Experiment::Evolve),
            common,
            vec![("hamiltonian", text(hamiltonian)), ("t", num(t)), ("initial", json_or_text(initial))],
        ),
        Command::Attention {
            total_time,
            effort_rate,
            dephasing,
            common,
        } => (
            Some(Experiment::Attention),
            common,
            vec![("T", num(total_time)), ("effort_rate", num(effort_rate)), ("dephasing", num(dephasing))],
        ),
        Command::DualTask {
            total_time,
            shared_rate,
            effort_rate,
            idle_b,
            common,
        } => (
            Some(Experiment::DualTask),
            common,
            vec![
                ("T", num(total_time)),
                ("shared_rate", num(shared_rate)),
                ("effort_rate", num(effort_rate)),
                ("idle_b", idle_b.then_some(Value::Bool(true))),
            ],
        ),
        Command::Hardy { command } => match command {
            HardyCommand::Verify { instance, common } => {
                (Some(Experiment::HardyVerify), common, instance_overrides(instance))
            }
            HardyCommand::Lhv { instance, common } => (Some(Experiment::HardyLhv), common, instance_overrides(instance)),
            HardyCommand::Assert {
                which,
                instance,
                common,
            } => {
                let mut o = instance_overrides(instance);
                o.push(("which", text(which)));
                (Some(Experiment::HardyAssert), common, o)
            }
        },
    };
    let config = build(experiment, &common, overrides)?;
    if let Some(path) = &common.emit_config {
        std::fs::write(path, config.to_json()?)?;
    }
    Ok(Some((config, common.seed)))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let matches = Cli::command().after_help(experiments_help()).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };

    let result = dispatch(cli.command).and_then(|job| {
        job.map(|(config, seed)| match seed {
            Some(s) => run_with_seed(&config, RngSeed(s)),
            None => run(&config),
        })
        .transpose()
    });
    match result {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(outcome)) => {
            match &outcome.stdout {
                Some(body) => {
                    print!("{body}");
                    eprintln!("{}", outcome.summary);
                }
                None => println!("{}", outcome.summary),
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            println!("{}", error_json(&err));
            if err.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
