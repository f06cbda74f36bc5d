use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use degengate_cli::{execute, output_dir, write_artifacts, CliError, Experiment, Format, Invocation};

/// One-pulse two-qubit gates at spectral degeneracies: spectra, purity
/// traces, sweeps, searches and calibration.
#[derive(Parser)]
#[command(name = "degengate", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: $DEGENGATE_OUT or ./degengate-out].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Format of tables (reports are always JSON).
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues, gaps and degeneracy class of a pulse.
    Spectrum,
    /// Purity trace of a pulse or pulse sequence.
    Purity,
    /// Purity traces of several pulses on one time axis.
    Compare,
    /// Initial purity-decay rate over a parameter grid.
    Sweep,
    /// Restarted simplex search for a target gate.
    Optimize,
    /// Makhlin invariants of a pulse or named gate.
    Invariants {
        /// Named gate (CNOT, B, SWAP, SQRT_SWAP, IDENTITY, RNOT, QFT).
        #[arg(long)]
        gate: Option<String>,
    },
    /// Detuning tolerance around a construction.
    Sensitivity,
    /// Map device figures onto the noise model.
    Calibrate,
    /// Gate, spectrum and tolerance reports for a list of pulses.
    Gates,
    /// Run a named experiment (paper:fig1, paper:fig2, paper:cnot,
    /// paper:bgate, paper:calibration) or the experiment of --config.
    Run { name: Option<String> },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = cli.global;
    let mut inv =
        Invocation { config: g.config, seed: g.seed, threads: g.threads, format: g.format, ..Default::default() };
    inv.experiment = match cli.command {
        Command::Spectrum => Some(Experiment::Spectrum),
        Command::Purity => Some(Experiment::Purity),
        Command::Compare => Some(Experiment::Compare),
        Command::Sweep => Some(Experiment::Sweep),
        Command::Optimize => Some(Experiment::Optimize),
        Command::Invariants { gate } => {
            inv.gate = gate;
            Some(Experiment::Invariants)
        }
        Command::Sensitivity => Some(Experiment::Sensitivity),
        Command::Calibrate => Some(Experiment::Calibrate),
        Command::Gates => Some(Experiment::Gates),
        Command::Run { name } => {
            inv.named = name;
            if inv.named.is_none() && inv.config.is_none() {
                return fail(&CliError::Config("run needs a name or --config".into()));
            }
            None
        }
    };
    let outcome = match execute(&inv) {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    let dir = output_dir(g.out.as_deref());
    match write_artifacts(&outcome.artifacts, &dir) {
        Ok(paths) => {
            print!("{}", outcome.summary);
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => return fail(&e),
    }
    match outcome.failure {
        Some(e) => fail(&e),
        None => ExitCode::SUCCESS,
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}
