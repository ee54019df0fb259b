#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mfc_aqm::config::{check_fields, parse_config, serialize_config};
use mfc_aqm::plant::GainStrategy;
use mfc_aqm::scenario::{preset, run, ScenarioError, ScenarioSpec, PRESETS};
use mfc_aqm::trace::{emit_figures, emit_trace, parse_sidecar};

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(name = "mfc-aqm", version, about = "Model-free AQM closed-loop simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario (preset name or config file) and write its trace.
    Run(RunArgs),
    /// List the built-in scenarios.
    ListPresets,
    /// Run every preset, one output directory each.
    Batch {
        #[arg(long, required = true)]
        all: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        emit_figures: bool,
    },
    /// Print the config file of a preset or config path, overrides applied.
    ShowConfig {
        #[arg(long)]
        scenario: String,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    ts: Option<f64>,
    #[arg(long, value_parser = ["paper", "hollot"])]
    gain: Option<String>,
    #[arg(long)]
    emit_figures: bool,
}

enum Failure {
    Config(String),
    Divergence(String),
    Io(String),
}

impl Failure {
    fn exit(self) -> ExitCode {
        let (code, msg) = match self {
            Failure::Config(m) => (EXIT_CONFIG, m),
            Failure::Divergence(m) => (EXIT_DIVERGENCE, m),
            Failure::Io(m) => (EXIT_IO, m),
        };
        eprintln!("error: {msg}");
        ExitCode::from(code)
    }
}

fn load_scenario(scenario: &str) -> Result<ScenarioSpec, Failure> {
    if PRESETS.contains(&scenario) {
        return preset(scenario).map_err(|e| Failure::Config(e.to_string()));
    }
    let path = Path::new(scenario);
    if !path.exists() {
        return Err(Failure::Config(format!(
            "`{scenario}` is neither a preset ({}) nor a readable file",
            PRESETS.join(", ")
        )));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    // a metrics sidecar carries the full scenario and can be replayed
    let parsed = if text.lines().any(|l| l.trim() == "[provenance]") {
        parse_sidecar(&text).map(|(_, spec)| spec)
    } else {
        parse_config(&text)
    };
    let mut spec = parsed.map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    if spec.name == "custom" {
        if let Some(stem) = path.file_stem() {
            spec.name = stem.to_string_lossy().into_owned();
        }
    }
    Ok(spec)
}

fn apply_overrides(spec: &mut ScenarioSpec, args: &RunArgs) -> Result<(), Failure> {
    if let Some(seed) = args.seed {
        spec.rng_seed = seed;
    }
    if let Some(d) = args.duration {
        spec.duration = d;
    }
    if let Some(ts) = args.ts {
        spec.ts = ts;
    }
    if let Some(g) = &args.gain {
        spec.gain_strategy = g.parse::<GainStrategy>().map_err(Failure::Config)?;
    }
    check_fields(spec).map_err(|e| Failure::Config(e.to_string()))?;
    spec.validate().map_err(|e| Failure::Config(e.to_string()))
}

fn execute(spec: &ScenarioSpec, out: &Path, figures: bool) -> Result<(), Failure> {
    let output = run(spec).map_err(|e| match e {
        ScenarioError::Divergence { .. } => Failure::Divergence(format!("{}: {e}", spec.name)),
        other => Failure::Config(format!("{}: {other}", spec.name)),
    })?;
    let io = |e: std::io::Error| Failure::Io(format!("{}: {e}", out.display()));
    emit_trace(&output, spec, out).map_err(io)?;
    if figures {
        emit_figures(&output, spec, out).map_err(io)?;
    }
    let m = &output.metrics;
    println!(
        "{}: {} steps, rmse {:.4}, max|e| {:.3}, settled max|e| {:.4}, max|du| {:.3e}, saturated {} -> {}",
        spec.name,
        m.steps,
        m.rmse,
        m.max_abs_error,
        m.settled_max_error,
        m.max_abs_du,
        m.saturated_input_samples,
        out.display()
    );
    Ok(())
}

fn batch(out: &Path, figures: bool) -> ExitCode {
    let results: Vec<Result<(), Failure>> = std::thread::scope(|s| {
        let handles: Vec<_> = PRESETS
            .iter()
            .map(|name| {
                s.spawn(move || {
                    let spec = preset(name).map_err(|e| Failure::Config(e.to_string()))?;
                    execute(&spec, &out.join(name), figures)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread panicked"))
            .collect()
    });
    // report every failure, exit with the most severe (codes are ordered)
    let mut worst = 0u8;
    for f in results.into_iter().filter_map(Result::err) {
        let code = match f {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Divergence(_) => EXIT_DIVERGENCE,
            Failure::Io(_) => EXIT_IO,
        };
        f.exit();
        worst = worst.max(code);
    }
    ExitCode::from(worst)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::ListPresets => {
            for name in PRESETS {
                println!("{name}");
            }
            Ok(())
        }
        Command::ShowConfig { scenario } => load_scenario(&scenario).map(|spec| {
            print!("{}", serialize_config(&spec));
        }),
        Command::Run(args) => load_scenario(&args.scenario).and_then(|mut spec| {
            apply_overrides(&mut spec, &args)?;
            execute(&spec, &args.out, args.emit_figures)
        }),
        Command::Batch { all: _, out, emit_figures } => return batch(&out, emit_figures),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.exit(),
    }
}
