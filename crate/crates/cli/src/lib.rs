//! `echoq` command-line driver.
//!
//! Exit codes: 0 success, 1 usage or invalid parameters, 2 unreadable or
//! malformed input, 3 revival fit failure (diagnostics written as JSON).

pub mod config;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use echoq_core::analysis::{fit_revival, run_sweep, spectrum, FitFailure, FitOptions, Window};
use echoq_core::bath::build_bath;
use echoq_core::echo::{bath_signal, resolved_grid, revival_rate_analytic, single_signal, uniform_grid, SignalMeta};
use echoq_core::io::{parse_signal_csv, signal_to_csv, write_spectrum_csv, write_sweep_csv, RunManifest};
use serde::de::DeserializeOwned;
use serde_json::json;
use thiserror::Error;

use config::{BathFile, SingleConfig, SweepFile};

pub const SEED_ENV: &str = "ECHOQ_SEED";

#[derive(Debug, Parser)]
#[command(name = "echoq", version, about = "Spin-echo quadrature simulator for a central spin in a polarized nuclear bath")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Configuration file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Base seed; overrides the config file, falls back to ECHOQ_SEED, then 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Overwrite existing outputs and accept a config hash mismatch in `fit`.
    #[arg(long, global = true)]
    pub force: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Echo signal of one nucleus.
    Single,
    /// Echo signal of one lattice bath realization.
    Bath,
    /// Revival fits over a (B, n, P) grid.
    Sweep {
        /// Realizations per cell; overrides the config file.
        #[arg(long)]
        realizations: Option<usize>,
    },
    /// Fit a revival of a signal CSV.
    Fit {
        signal: PathBuf,
        /// Revival order, 1 for the first.
        #[arg(long, default_value_t = 1)]
        revival: usize,
    },
    /// Spectrum of a signal CSV.
    Fft {
        signal: PathBuf,
        #[arg(long, value_enum, default_value_t = WindowArg::Hann)]
        window: WindowArg,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WindowArg {
    Hann,
    Rectangular,
}

impl From<WindowArg> for Window {
    fn from(w: WindowArg) -> Self {
        match w {
            WindowArg::Hann => Window::Hann,
            WindowArg::Rectangular => Window::Rectangular,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{failure}; diagnostics in {}", path.display())]
    Fit { failure: Box<FitFailure>, path: PathBuf },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Input(_) => 2,
            CliError::Fit { .. } => 3,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("echoq: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match cli.common.workers {
        Some(0) => Err(usage("--workers must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(usage)?
            .install(|| dispatch(cli)),
        None => dispatch(cli),
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let c = &cli.common;
    match &cli.command {
        Command::Single => cmd_single(c),
        Command::Bath => cmd_bath(c),
        Command::Sweep { realizations } => cmd_sweep(c, *realizations),
        Command::Fit { signal, revival } => cmd_fit(c, signal, *revival),
        Command::Fft { signal, window } => cmd_fft(c, signal, (*window).into()),
    }
}

fn load_config<T: DeserializeOwned>(common: &Common) -> Result<T, CliError> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| usage("this command needs --config PATH"))?;
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Flag, then config file, then `ECHOQ_SEED`, then 0.
fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| usage(format!("{SEED_ENV}=`{v}` is not an unsigned 64-bit integer"))),
        Err(_) => Ok(0),
    }
}

/// Writes all files or none: existing targets abort the run unless forced.
fn write_outputs(common: &Common, files: &[(&str, String)]) -> Result<(), CliError> {
    fs::create_dir_all(&common.out)?;
    if !common.force {
        if let Some((name, _)) = files.iter().find(|(name, _)| common.out.join(name).exists()) {
            return Err(usage(format!(
                "{} exists; pass --force to overwrite",
                common.out.join(name).display()
            )));
        }
    }
    for (name, body) in files {
        fs::write(common.out.join(name), body)?;
    }
    Ok(())
}

fn manifest_text(mut manifest: RunManifest, files: &[(&str, String)]) -> String {
    manifest.outputs = files.iter().map(|(n, _)| n.to_string()).collect();
    manifest.outputs.push("manifest.json".into());
    manifest.to_json() + "\n"
}

fn cmd_single(common: &Common) -> Result<(), CliError> {
    let cfg: SingleConfig = load_config(common)?;
    let seed = resolve_seed(common.seed, cfg.seed)?;
    let nucleus = cfg.nucleus().map_err(usage)?;
    let (start, stop) = cfg.tau.bounds(nucleus.omega0).map_err(usage)?;
    let grid = uniform_grid(start, stop, cfg.tau.points);
    let hash = cfg.hash();
    let meta = SignalMeta {
        config_hash: hash.clone(),
        seed,
        ..Default::default()
    };
    let signal = single_signal(&nucleus, &grid, meta).map_err(usage)?;
    let files = [("signal.csv", signal_to_csv(&signal))];
    let mut manifest = RunManifest::new("single", &cfg, hash, seed);
    manifest.details = json!({ "nucleus": nucleus, "mixing": nucleus.mixing() });
    let manifest = manifest_text(manifest, &files);
    write_outputs(common, &[&files[..], &[("manifest.json", manifest)]].concat())
}

fn cmd_bath(common: &Common) -> Result<(), CliError> {
    let file: BathFile = load_config(common)?;
    let seed = resolve_seed(common.seed, file.seed)?;
    let config = file.bath_config(seed);
    let bath = build_bath(&config, &file.polarization_spec(), file.realization).map_err(usage)?;
    let (start, stop) = file.tau.bounds(bath.omega0()).map_err(usage)?;
    let grid = resolved_grid(&bath, start, stop, file.tau.points);
    let signal = bath_signal(&bath, &grid).map_err(usage)?;
    let files = [("signal.csv", signal_to_csv(&signal)), ("bath.json", bath.to_json() + "\n")];
    let mut manifest = RunManifest::new("bath", &file, bath.config_hash(), seed);
    manifest.details = json!({
        "realization": bath.realization,
        "occupation_seed": bath.occupation_seed,
        "nuclei": bath.len(),
        "grid_points": grid.len(),
        "max_coupling_ratio": bath.max_coupling_ratio(),
        "varpi_analytic_rad_s": revival_rate_analytic(&bath),
        "warnings": signal.meta.warnings,
    });
    let manifest = manifest_text(manifest, &files);
    write_outputs(common, &[&files[..], &[("manifest.json", manifest)]].concat())
}

fn cmd_sweep(common: &Common, realizations: Option<usize>) -> Result<(), CliError> {
    let file: SweepFile = load_config(common)?;
    let seed = resolve_seed(common.seed, file.seed)?;
    let spec = file.spec(seed, realizations);
    let result = run_sweep(&spec, None).map_err(usage)?;
    let mut csv = Vec::new();
    write_sweep_csv(&result, &mut csv).map_err(|e| usage(e.to_string()))?;
    let cells = serde_json::to_string_pretty(&result.cells).expect("cells serialize") + "\n";
    let files = [
        ("sweep.csv", String::from_utf8(csv).expect("ascii")),
        ("sweep_cells.json", cells),
    ];
    let mut manifest = RunManifest::new("sweep", &spec, spec.hash(), seed);
    manifest.details = json!({
        "cells": result.cells.iter().map(|c| json!({
            "B_gauss": c.b_gauss,
            "n": c.abundance,
            "P": c.polarization,
            "seeds": c.seeds,
            "n_failed": c.n_failed,
        })).collect::<Vec<_>>(),
    });
    let manifest = manifest_text(manifest, &files);
    write_outputs(common, &[&files[..], &[("manifest.json", manifest)]].concat())
}

fn read_signal(path: &Path) -> Result<echoq_core::EchoSignal, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    parse_signal_csv(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn cmd_fit(common: &Common, path: &Path, revival: usize) -> Result<(), CliError> {
    let signal = read_signal(path)?;
    let mut hint = None;
    if common.config.is_some() {
        let file: BathFile = load_config(common)?;
        let seed = resolve_seed(common.seed, file.seed)?;
        let bath = build_bath(&file.bath_config(seed), &file.polarization_spec(), file.realization).map_err(usage)?;
        if bath.config_hash() != signal.meta.config_hash && !common.force {
            return Err(CliError::Input(format!(
                "{} was produced by config {}, not {}; pass --force to fit anyway",
                path.display(),
                signal.meta.config_hash,
                bath.config_hash()
            )));
        }
        hint = Some(revival_rate_analytic(&bath)).filter(|v| *v != 0.0);
    }
    let outcome = fit_revival(&signal, revival, &FitOptions { varpi_hint: hint });
    let manifest = RunManifest::new(
        "fit",
        &json!({ "signal": path.display().to_string(), "revival": revival, "varpi_hint": hint }),
        signal.meta.config_hash.clone(),
        signal.meta.seed,
    );
    match outcome {
        Ok(fit) => {
            let body = json!({
                "config_hash": signal.meta.config_hash,
                "seed": signal.meta.seed,
                "realization": signal.meta.realization,
                "varpi_analytic_rad_s": hint,
                "contrast_estimate": echoq_core::analysis::contrast_estimate(fit.varpi, fit.delta_t),
                "fit": fit,
            });
            let files = [("fit.json", serde_json::to_string_pretty(&body).expect("fit serializes") + "\n")];
            let manifest = manifest_text(manifest, &files);
            write_outputs(common, &[&files[..], &[("manifest.json", manifest)]].concat())
        }
        Err(failure) => {
            let body = json!({
                "config_hash": signal.meta.config_hash,
                "seed": signal.meta.seed,
                "failure": failure,
            });
            let files = [(
                "fit_failure.json",
                serde_json::to_string_pretty(&body).expect("failure serializes") + "\n",
            )];
            let manifest = manifest_text(manifest, &files);
            write_outputs(common, &[&files[..], &[("manifest.json", manifest)]].concat())?;
            Err(CliError::Fit {
                failure: Box::new(failure),
                path: common.out.join("fit_failure.json"),
            })
        }
    }
}

fn cmd_fft(common: &Common, path: &Path, window: Window) -> Result<(), CliError> {
    let signal = read_signal(path)?;
    let sp = spectrum(&signal, window).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut csv = Vec::new();
    write_spectrum_csv(&sp, &signal.meta.config_hash, &mut csv).map_err(|e| usage(e.to_string()))?;
    let files = [("spectrum.csv", String::from_utf8(csv).expect("ascii"))];
    let manifest = RunManifest::new(
        "fft",
        &json!({ "signal": path.display().to_string(), "window": window.name() }),
        signal.meta.config_hash.clone(),
        signal.meta.seed,
    );
    let manifest = manifest_text(manifest, &files);
    write_outputs(common, &[&files[..], &[("manifest.json", manifest)]].concat())
}
