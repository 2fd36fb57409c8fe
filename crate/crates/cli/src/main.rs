//! `qcwalk`: runs one experiment on an atom walking in a quantized cavity
//! field and writes CSV results, a run manifest and optionally a gnuplot
//! script.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use toml::Table;

use qcwalk_core::presets::{atom_with_inversion, preset, Experiment, PRESET_NAMES};

use crate::error::CliError;
use crate::output::Output;

#[derive(Parser)]
#[command(name = "qcwalk", version, about = "Chaotic walking of an atom in a quantized cavity field")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sampled trajectory with purity, entropies, energy and drift.
    Simulate(RunArgs),
    /// Power spectrum of the purity.
    Spectrum(RunArgs),
    /// Maximal Lyapunov exponent.
    Lyapunov(RunArgs),
    /// Fidelity between twins with slightly different detunings.
    Fidelity(RunArgs),
    /// Lyapunov exponent and purity statistics against detuning.
    Sweep(RunArgs),
    /// Exit time and turn count against launch momentum.
    Scatter(RunArgs),
    /// Position or inversion at fixed times over a grid of initial values.
    Maps(RunArgs),
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (TOML); every key is required.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration (see `qcwalk presets`).
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads for grid scans; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    p0: Option<f64>,
    /// Initial atomic inversion (zero relative phase).
    #[arg(long, allow_hyphen_values = true)]
    z0: Option<f64>,
    /// Override any key: `section.key=value` (TOML value syntax).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Also write a gnuplot script.
    #[arg(long)]
    plot: bool,
}

fn load(args: &RunArgs) -> Result<(Table, String), CliError> {
    let (mut table, stem) = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|source| CliError::Io { context: format!("reading {}", path.display()), source })?;
            let table = text.parse::<Table>().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let stem = path.file_name().and_then(|n| n.to_str()).unwrap_or("run");
            let stem = stem.strip_suffix(".manifest.toml").or_else(|| stem.strip_suffix(".toml")).unwrap_or(stem);
            (table, stem.to_string())
        }
        (None, Some(name)) => {
            let p = preset(name).ok_or_else(|| {
                CliError::Usage(format!("unknown preset {name:?}; available: {}", PRESET_NAMES.join(", ")))
            })?;
            (config::to_toml(&p.config), name.clone())
        }
        (None, None) => return Err(CliError::Usage("one of --config or --preset is required".into())),
    };
    for o in &args.overrides {
        config::apply_override(&mut table, o)?;
    }
    Ok((table, stem))
}

fn execute(experiment: Experiment, args: &RunArgs) -> Result<(), CliError> {
    let (table, stem) = load(args)?;
    let mut c = config::from_toml(&table)?;
    if let Some(v) = args.rel_tol {
        c.system.rel_tol = v;
    }
    if let Some(v) = args.abs_tol {
        c.system.abs_tol = v;
    }
    if let Some(v) = args.delta {
        c.system.delta = v;
    }
    if let Some(v) = args.p0 {
        c.initial.p0 = v;
    }
    if let Some(z) = args.z0 {
        if !(-1.0..=1.0).contains(&z) {
            return Err(CliError::Usage(format!("--z0 must lie in [-1, 1], got {z}")));
        }
        c.initial.atom = atom_with_inversion(z);
    }
    c.validate().map_err(|e| CliError::Config(e.to_string()))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(args.workers)
        .build_global()
        .map_err(|e| CliError::Usage(format!("worker pool: {e}")))?;
    let text = config::to_toml(&c).to_string();
    let out = Output::new(&args.out, &stem, experiment.name(), text)?;
    commands::run(experiment, &c, &out, args.plot)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (experiment, args) = match &cli.command {
        Command::Simulate(a) => (Experiment::Simulate, a),
        Command::Spectrum(a) => (Experiment::Spectrum, a),
        Command::Lyapunov(a) => (Experiment::Lyapunov, a),
        Command::Fidelity(a) => (Experiment::Fidelity, a),
        Command::Sweep(a) => (Experiment::Sweep, a),
        Command::Scatter(a) => (Experiment::Scatter, a),
        Command::Maps(a) => (Experiment::Maps, a),
        Command::Presets => {
            for name in PRESET_NAMES {
                let p = preset(name).expect("listed preset exists");
                println!("{:<6} {:<9} {}", p.name, p.experiment.name(), p.summary);
            }
            return ExitCode::SUCCESS;
        }
    };
    match execute(experiment, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
