use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use holo_secrecy::error::ExperimentError;
use holo_secrecy::experiments::{
    run_csi_sweep, run_eve_sweep, run_heatmap, run_snr_sweep, run_spacing_sweep, write_csv,
    PaMode, ScenarioConfig, SweepResult, CSV_COLUMNS, CSV_SCHEMA_VERSION,
};
use holo_secrecy::geometry::MAX_SPACING;
use holo_secrecy::output::write_atomic;
use holo_secrecy::parallel::{configure_threads, threads_from_env};
use holo_secrecy::validation::{oracle_compare, oracle_pass_rate, run_validation};

const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_VALIDATION: u8 = 4;

#[derive(Parser)]
#[command(name = "holosec", version, about = "Secrecy-rate simulations for holographic MIMO downlinks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Sum secrecy versus SNR.
    SnrSweep,
    /// One SNR curve per inter-element spacing.
    SpacingSweep,
    /// One SNR curve per CSI error level.
    CsiSweep,
    /// One SNR curve per Eve array size.
    EveSweep,
    /// Sum secrecy over a grid of Eve positions.
    Heatmap,
    /// Compare SCA against exhaustive search on random problems.
    OracleCompare,
    /// Run the built-in invariant checks.
    Validate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::SnrSweep => "snr-sweep",
            Command::SpacingSweep => "spacing-sweep",
            Command::CsiSweep => "csi-sweep",
            Command::EveSweep => "eve-sweep",
            Command::Heatmap => "heatmap",
            Command::OracleCompare => "oracle-compare",
            Command::Validate => "validate",
        }
    }
}

#[derive(Args)]
struct Common {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// proposed, fixed=<fraction> or both.
    #[arg(long, global = true)]
    pa: Option<String>,
    /// Comma list (`0,10,20`) or range `start:stop:step` in dB.
    #[arg(long, global = true, allow_hyphen_values = true)]
    snr: Option<String>,
    /// Spacing in wavelengths, e.g. `0.25` or `1/4`; a comma list sets the
    /// spacing sweep.
    #[arg(long, global = true)]
    delta: Option<String>,
    /// CSI error level; a comma list sets the CSI sweep.
    #[arg(long, global = true)]
    xi: Option<String>,
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(param: &str, reason: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: format!("invalid `{param}`: {reason}"),
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        let code = match &e {
            ExperimentError::Config { .. } | ExperimentError::Geometry(_) => EXIT_CONFIG,
            e if e.is_infeasible() => EXIT_INFEASIBLE,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn parse_number(param: &str, text: &str) -> Result<f64, Failure> {
    let text = text.trim();
    let value = match text.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| Failure::config(param, text))?;
            let den: f64 = den.trim().parse().map_err(|_| Failure::config(param, text))?;
            num / den
        }
        None => text.parse().map_err(|_| Failure::config(param, text))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Failure::config(param, text))
    }
}

fn parse_list(param: &str, text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',').map(|t| parse_number(param, t)).collect()
}

fn parse_snr(text: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (
                parse_number("snr", start)?,
                parse_number("snr", stop)?,
                parse_number("snr", step)?,
            );
            if step <= 0.0 || stop < start {
                return Err(Failure::config("snr", format!("empty range {text}")));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| start + i as f64 * step).collect())
        }
        [_] => parse_list("snr", text),
        _ => Err(Failure::config("snr", format!("expected a list or start:stop:step, got {text}"))),
    }
}

fn parse_pa(text: &str, cfg: &mut ScenarioConfig) -> Result<(), Failure> {
    match text.split_once('=') {
        None if text == "proposed" => cfg.pa = PaMode::Proposed,
        None if text == "both" => cfg.pa = PaMode::Both,
        None if text == "fixed" => cfg.pa = PaMode::Fixed,
        Some(("fixed", f)) => {
            cfg.pa = PaMode::Fixed;
            cfg.fixed_fraction = parse_number("pa", f)?;
        }
        Some(("both", f)) => {
            cfg.pa = PaMode::Both;
            cfg.fixed_fraction = parse_number("pa", f)?;
        }
        _ => return Err(Failure::config("pa", format!("expected proposed, fixed=<fraction> or both, got {text}"))),
    }
    Ok(())
}

fn resolve_config(common: &Common) -> Result<ScenarioConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => ScenarioConfig::from_file(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = common.trials {
        cfg.trials = trials;
    }
    if let Some(pa) = &common.pa {
        parse_pa(pa, &mut cfg)?;
    }
    if let Some(snr) = &common.snr {
        cfg.snr_db = parse_snr(snr)?;
    }
    if let Some(delta) = &common.delta {
        let list = parse_list("delta", delta)?;
        if let Some(bad) = list.iter().find(|&&d| !(d > 0.0 && d <= MAX_SPACING)) {
            return Err(Failure::config("delta", format!("spacing {bad} outside (0, {MAX_SPACING}]")));
        }
        cfg.spacing = list[0];
        cfg.spacing_list = list;
    }
    if let Some(xi) = &common.xi {
        let list = parse_list("xi", xi)?;
        if let Some(bad) = list.iter().find(|&&v| !(0.0..=1.0).contains(&v)) {
            return Err(Failure::config("xi", format!("{bad} outside [0, 1]")));
        }
        cfg.csi_error = list[0];
        cfg.csi_list = list;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct RunManifest<'a> {
    subcommand: &'a str,
    seed: u64,
    config: &'a ScenarioConfig,
    outputs: Vec<String>,
    csv_schema_version: u32,
    csv_columns: Vec<&'static str>,
    code_version: &'static str,
    threads: Option<usize>,
    duration_secs: f64,
}

fn write_manifest(out: &Path, manifest: &RunManifest) -> Result<(), Failure> {
    let json = serde_json::to_vec_pretty(manifest)
        .map_err(|e| Failure::from(ExperimentError::Serialize(e.to_string())))?;
    write_atomic(&out.join(format!("{}.manifest.json", manifest.subcommand)), &json)?;
    Ok(())
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), Failure> {
    let ser = |e: &dyn std::fmt::Display| Failure::from(ExperimentError::Serialize(e.to_string()));
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| ser(&e))?;
    }
    let bytes = w.into_inner().map_err(|e| ser(&e))?;
    write_atomic(path, &bytes)?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let start = Instant::now();
    let threads = threads_from_env().map_err(|e| Failure::config("HOLO_THREADS", e))?;
    configure_threads(threads);
    let cfg = resolve_config(&cli.common)?;
    let out = &cli.common.out;
    std::fs::create_dir_all(out).map_err(|source| {
        Failure::from(ExperimentError::Io {
            path: out.display().to_string(),
            source,
        })
    })?;
    let name = cli.command.name();
    let csv_path = out.join(format!("{name}.csv"));

    let sweep = |r: SweepResult| -> Result<(), Failure> {
        write_csv(&r, &csv_path)?;
        Ok(())
    };
    let mut verdict = Ok(());
    match cli.command {
        Command::SnrSweep => sweep(run_snr_sweep(&cfg)?)?,
        Command::SpacingSweep => sweep(run_spacing_sweep(&cfg, &cfg.spacing_list)?)?,
        Command::CsiSweep => sweep(run_csi_sweep(&cfg, &cfg.csi_list)?)?,
        Command::EveSweep => sweep(run_eve_sweep(&cfg, &cfg.eve_sizes)?)?,
        Command::Heatmap => sweep(run_heatmap(
            &cfg,
            cfg.heatmap_x,
            cfg.heatmap_y,
            cfg.heatmap_resolution,
        )?)?,
        Command::OracleCompare => {
            let instances = cli.common.trials.unwrap_or(50);
            let pairs = oracle_compare(cfg.seed, instances)?;
            write_rows(&csv_path, &pairs)?;
            let rate = oracle_pass_rate(&pairs);
            println!("{:.1}% of {instances} instances within 5% of the grid optimum", rate * 100.0);
            if rate < 0.9 {
                verdict = Err(Failure {
                    code: EXIT_VALIDATION,
                    message: "oracle-compare: fewer than 90% of instances within 5%".into(),
                });
            }
        }
        Command::Validate => {
            let report = run_validation(cfg.seed)?;
            for c in &report.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            write_rows(&csv_path, &report.checks)?;
            if !report.passed() {
                verdict = Err(Failure {
                    code: EXIT_VALIDATION,
                    message: "validation failed".into(),
                });
            }
        }
    }

    write_manifest(
        out,
        &RunManifest {
            subcommand: name,
            seed: cfg.seed,
            config: &cfg,
            outputs: vec![csv_path.display().to_string()],
            csv_schema_version: CSV_SCHEMA_VERSION,
            csv_columns: match cli.command {
                Command::OracleCompare => vec!["instance", "sca", "grid"],
                Command::Validate => vec!["name", "passed", "detail"],
                _ => CSV_COLUMNS.to_vec(),
            },
            code_version: env!("CARGO_PKG_VERSION"),
            threads,
            duration_secs: start.elapsed().as_secs_f64(),
        },
    )?;
    verdict
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("holosec: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
