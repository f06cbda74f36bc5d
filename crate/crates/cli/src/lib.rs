//! Configuration, experiment drivers and output writers behind the
//! `degengate` binary.

pub mod config;
pub mod error;
pub mod experiments;
pub mod table;

use std::path::{Path, PathBuf};

pub use config::{bundled, Experiment, Pulse, RunConfig};
pub use error::{CliError, CliResult};
pub use experiments::{run, Artifact, Outcome};
pub use table::{parse_csv, Format};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "DEGENGATE_OUT";

/// Everything a command line resolves to.
#[derive(Clone, Debug, Default)]
pub struct Invocation {
    pub experiment: Option<Experiment>,
    pub config: Option<PathBuf>,
    /// `paper:<name>` of a bundled config.
    pub named: Option<String>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub format: Format,
    /// Target override (used by `invariants --gate`).
    pub gate: Option<String>,
}

/// Loads and resolves the config; returns it with the file-name stem.
pub fn prepare(inv: &Invocation) -> CliResult<(RunConfig, String)> {
    let (mut cfg, stem) = match (&inv.named, &inv.config) {
        (Some(_), Some(_)) => return Err(CliError::Config("give either a named experiment or --config".into())),
        (Some(n), None) => (bundled(n)?, n.strip_prefix("paper:").unwrap_or(n).to_string()),
        (None, Some(p)) => {
            let stem = p.file_stem().map_or("run".into(), |s| s.to_string_lossy().into_owned());
            (RunConfig::load(p)?, stem)
        }
        (None, None) => (RunConfig::default(), String::new()),
    };
    if let Some(g) = &inv.gate {
        cfg.target = Some(g.clone());
        cfg.pulse = None;
        cfg.pulses.clear();
    }
    let cfg = cfg.resolve(inv.seed, inv.experiment)?;
    let stem = if stem.is_empty() { cfg.experiment.map_or("run", Experiment::name).to_string() } else { stem };
    Ok((cfg, stem))
}

/// Prepares and runs an invocation, on a dedicated pool when `threads` is set.
pub fn execute(inv: &Invocation) -> CliResult<Outcome> {
    let (cfg, stem) = prepare(inv)?;
    match inv.threads {
        Some(n) => {
            if n == 0 {
                return Err(CliError::Config("--threads must be >= 1".into()));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
            pool.install(|| run(&cfg, inv.format, &stem))
        }
        None => run(&cfg, inv.format, &stem),
    }
}

/// `--out`, else `$DEGENGATE_OUT`, else `./degengate-out`.
pub fn output_dir(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("degengate-out"))
}

pub fn write_artifacts(artifacts: &[Artifact], dir: &Path) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    artifacts
        .iter()
        .map(|a| {
            let p = dir.join(&a.name);
            std::fs::write(&p, &a.contents)?;
            Ok(p)
        })
        .collect()
}
