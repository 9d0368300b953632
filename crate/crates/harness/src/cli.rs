//! Argument parsing and the top-level run sequence.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::commands::run_job;
use crate::config::{parse_config, resolve, Format, RunConfig};
use crate::error::{HarnessError, Result};
use crate::manifest::{RunManifest, Status};
use crate::output::{write_atomic, OutputDir};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "CAPILLARY_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "capillary-out";
pub const MANIFEST: &str = "manifest.json";

/// Liquid-vapor capillarity experiments in reduced van der Waals units.
#[derive(Debug, Parser)]
#[command(name = "capillary", version)]
pub struct Cli {
    /// JSON run config (or a previous run's manifest.json); flags override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [default: $CAPILLARY_OUT_DIR, then ./capillary-out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for independent sweep points.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Encoding of tabular outputs.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coexisting densities, pressure and chemical potential per temperature.
    Coexist(RunConfig),
    /// Planar interface profile and surface tension by both routes.
    Planar(RunConfig),
    /// One spherical droplet or bubble.
    Droplet(RunConfig),
    /// Laplace-law sweep over target radii with a fit through the origin.
    Laplace(RunConfig),
    /// Sharp-interface calibration, distributional convergence and cross-model check.
    Sharp(RunConfig),
    /// Distributional limit of a regularized density jump.
    Distribution(RunConfig),
}

impl Command {
    fn split(self) -> (crate::config::CommandKind, RunConfig) {
        use crate::config::CommandKind as K;
        match self {
            Command::Coexist(c) => (K::Coexist, c),
            Command::Planar(c) => (K::Planar, c),
            Command::Droplet(c) => (K::Droplet, c),
            Command::Laplace(c) => (K::Laplace, c),
            Command::Sharp(c) => (K::Sharp, c),
            Command::Distribution(c) => (K::Distribution, c),
        }
    }
}

/// Config file, then flags, merged into one unresolved config.
pub fn merged_config(cli: Cli) -> Result<RunConfig> {
    let base = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                HarnessError::config(format!("cannot read {}: {e}", path.display()))
            })?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    let mut over = RunConfig::default();
    if let Some(cmd) = cli.command {
        let (kind, flags) = cmd.split();
        if let Some(from_file) = base.command {
            if from_file != kind {
                return Err(HarnessError::config(format!(
                    "subcommand {} conflicts with config command {}",
                    kind.name(),
                    from_file.name()
                )));
            }
        }
        over = flags;
        over.command = Some(kind);
    }
    over.out = cli.out;
    over.threads = cli.threads;
    over.format = cli.format;
    Ok(base.overridden_by(&over))
}

fn default_out() -> Option<PathBuf> {
    std::env::var_os(OUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

fn report_config_error(err: &HarnessError, out: Option<PathBuf>, config: serde_json::Value) {
    eprintln!("error: {err}");
    // a manifest still records the attempt when the destination is known
    if let Some(dir) = out {
        if fs::create_dir_all(&dir).is_ok() {
            let mut m = RunManifest::new(config);
            m.status = Status::ConfigError;
            m.error = Some(err.to_string());
            let mut data = serde_json::to_vec_pretty(&m).expect("manifest serializes");
            data.push(b'\n');
            let _ = write_atomic(&dir.join(MANIFEST), &data);
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code:
/// 0 when every task succeeded, 1 when any failed, 2 for invalid configuration.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let start = Instant::now();
    let cfg = match merged_config(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let fallback = default_out();
    let resolved = match resolve(
        &cfg,
        fallback
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
    ) {
        Ok(r) => r,
        Err(e) => {
            let raw = serde_json::to_value(&cfg).unwrap_or_default();
            report_config_error(&e, cfg.out.clone().or(fallback), raw);
            return e.exit_code();
        }
    };
    let config_value = serde_json::to_value(&resolved).expect("config serializes");
    let mut out = match OutputDir::create(&resolved.out) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let mut manifest = RunManifest::new(config_value);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(resolved.threads)
        .build()
        .expect("thread pool");
    match pool.install(|| run_job(&resolved.job, resolved.format, &mut out)) {
        Ok(tasks) => manifest.tasks = tasks,
        Err(e) => {
            eprintln!("error: {e}");
            manifest.status = if e.exit_code() == 2 {
                Status::ConfigError
            } else {
                Status::Failed
            };
            manifest.error = Some(e.to_string());
        }
    }
    manifest.settle();
    manifest.files = out.files().to_vec();
    manifest.elapsed_seconds = start.elapsed().as_secs_f64();
    for t in &manifest.tasks {
        match &t.error {
            None => eprintln!("[ok]     {}", t.name),
            Some(err) => eprintln!("[failed] {}: {err}", t.name),
        }
    }
    if let Err(e) = out.write_json(MANIFEST, &manifest) {
        eprintln!("error: {e}");
        return 1;
    }
    eprintln!(
        "wrote {} file(s) to {}",
        out.files().len(),
        out.path().display()
    );
    manifest.exit_code()
}
