use std::path::Path;

use serde::Serialize;

use super::{
    sca_options, snr_points, trial_reports, OperatingPoint, Scenario, ScenarioConfig, Scheme,
};
use crate::error::ExperimentError;
use crate::output::write_atomic;
use crate::parallel::try_map_indexed;

/// Bumped whenever [`CSV_COLUMNS`] changes.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 12] = [
    "sweep", "scheme", "param", "value", "eve_x", "eve_y", "snr_db", "mean_sum", "mean_min",
    "se_sum", "se_min", "trials",
];

/// Mean and standard error of the per-trial sum and min secrecy.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateStats {
    pub mean_sum: f64,
    pub mean_min: f64,
    pub se_sum: f64,
    pub se_min: f64,
    pub trials: usize,
    /// Per-trial sum secrecy in trial order, for paired comparisons.
    pub sum_samples: Vec<f64>,
    pub min_samples: Vec<f64>,
}

fn mean_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl AggregateStats {
    pub fn from_samples(sum_samples: Vec<f64>, min_samples: Vec<f64>) -> Self {
        let (mean_sum, se_sum) = mean_se(&sum_samples);
        let (mean_min, se_min) = mean_se(&min_samples);
        Self {
            mean_sum,
            mean_min,
            se_sum,
            se_min,
            trials: sum_samples.len(),
            sum_samples,
            min_samples,
        }
    }
}

/// One CSV line: a grid point and scheme.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub sweep: String,
    pub scheme: String,
    pub param: String,
    pub value: f64,
    pub eve_x: f64,
    pub eve_y: f64,
    pub snr_db: f64,
    pub mean_sum: f64,
    pub mean_min: f64,
    pub se_sum: f64,
    pub se_min: f64,
    pub trials: usize,
    #[serde(skip)]
    pub stats: AggregateStats,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Row for `scheme` at parameter `value` and `snr_db`.
    pub fn find(&self, scheme: Scheme, value: f64, snr_db: f64) -> Option<&SweepRow> {
        let label = scheme.label();
        self.rows
            .iter()
            .find(|r| r.scheme == label && r.value == value && r.snr_db == snr_db)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, ExperimentError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.rows.is_empty() {
            w.write_record(CSV_COLUMNS)
                .map_err(|e| ExperimentError::Serialize(e.to_string()))?;
        }
        for row in &self.rows {
            w.serialize(row)
                .map_err(|e| ExperimentError::Serialize(e.to_string()))?;
        }
        w.into_inner()
            .map_err(|e| ExperimentError::Serialize(e.to_string()))
    }
}

pub fn write_csv(result: &SweepResult, path: &Path) -> Result<(), ExperimentError> {
    write_atomic(path, &result.to_csv()?)
}

/// Runs every trial of `scn` and aggregates per `[point][scheme]`.
fn aggregate(
    cfg: &ScenarioConfig,
    scn: &Scenario,
    xi: f64,
    points: &[OperatingPoint],
    schemes: &[Scheme],
) -> Result<Vec<Vec<AggregateStats>>, ExperimentError> {
    let sca = sca_options(cfg);
    let per_trial = try_map_indexed(cfg.trials, cfg.exec, |t| {
        trial_reports(scn, cfg.seed, t, xi, points, schemes, &sca)
    })?;
    Ok((0..points.len())
        .map(|p| {
            (0..schemes.len())
                .map(|s| {
                    let sum = per_trial.iter().map(|t| t[p][s].sum_secrecy).collect();
                    let min = per_trial.iter().map(|t| t[p][s].min_secrecy).collect();
                    AggregateStats::from_samples(sum, min)
                })
                .collect()
        })
        .collect())
}

struct RowLabel<'a> {
    sweep: &'a str,
    param: &'a str,
    value: f64,
    eve: [f64; 3],
    snr_db: f64,
}

fn row(label: &RowLabel, scheme: Scheme, stats: AggregateStats) -> SweepRow {
    SweepRow {
        sweep: label.sweep.to_string(),
        scheme: scheme.label(),
        param: label.param.to_string(),
        value: label.value,
        eve_x: label.eve[0],
        eve_y: label.eve[1],
        snr_db: label.snr_db,
        mean_sum: stats.mean_sum,
        mean_min: stats.mean_min,
        se_sum: stats.se_sum,
        se_min: stats.se_min,
        trials: stats.trials,
        stats,
    }
}

/// SNR curves of `scn`, labeled with `(param, value)`.
fn snr_curves(
    cfg: &ScenarioConfig,
    scn: &Scenario,
    xi: f64,
    sweep: &str,
    param: &str,
    value: f64,
    out: &mut SweepResult,
) -> Result<(), ExperimentError> {
    let schemes = cfg.schemes();
    let points = snr_points(scn, &cfg.snr_db, cfg.total_power);
    let stats = aggregate(cfg, scn, xi, &points, &schemes)?;
    for (&snr_db, per_scheme) in cfg.snr_db.iter().zip(stats) {
        let label = RowLabel {
            sweep,
            param,
            value,
            eve: cfg.eve_position,
            snr_db,
        };
        for (&s, st) in schemes.iter().zip(per_scheme) {
            out.rows.push(row(&label, s, st));
        }
    }
    Ok(())
}

/// Sum secrecy versus SNR for the configured scenario.
pub fn run_snr_sweep(cfg: &ScenarioConfig) -> Result<SweepResult, ExperimentError> {
    cfg.validate()?;
    let scn = Scenario::from_config(cfg)?;
    let mut out = SweepResult::default();
    snr_curves(cfg, &scn, cfg.csi_error, "snr", "delta", cfg.spacing, &mut out)?;
    Ok(out)
}

/// One SNR curve per spacing; element counts stay fixed.
pub fn run_spacing_sweep(cfg: &ScenarioConfig, deltas: &[f64]) -> Result<SweepResult, ExperimentError> {
    cfg.validate()?;
    let mut out = SweepResult::default();
    for &delta in deltas {
        let scn = Scenario::build(cfg, &cfg.bob_positions, cfg.eve_elements, delta)?;
        snr_curves(cfg, &scn, cfg.csi_error, "spacing", "delta", delta, &mut out)?;
    }
    Ok(out)
}

/// One SNR curve per CSI error level, on paired channel draws.
pub fn run_csi_sweep(cfg: &ScenarioConfig, xis: &[f64]) -> Result<SweepResult, ExperimentError> {
    cfg.validate()?;
    let scn = Scenario::from_config(cfg)?;
    let mut out = SweepResult::default();
    for &xi in xis {
        if !(0.0..=1.0).contains(&xi) {
            return Err(ExperimentError::config("xi", format!("{xi} outside [0, 1]")));
        }
        snr_curves(cfg, &scn, xi, "csi", "xi", xi, &mut out)?;
    }
    Ok(out)
}

/// One SNR curve per square Eve array size.
pub fn run_eve_sweep(cfg: &ScenarioConfig, sizes: &[usize]) -> Result<SweepResult, ExperimentError> {
    cfg.validate()?;
    let mut out = SweepResult::default();
    for &n in sizes {
        let scn = Scenario::build(cfg, &cfg.bob_positions, [n, n], cfg.spacing)?;
        snr_curves(cfg, &scn, cfg.csi_error, "eve", "eve_elements", (n * n) as f64, &mut out)?;
    }
    Ok(out)
}

/// Cell centers of a `resolution × resolution` grid, `x` varying slowest.
pub fn heatmap_cells(x: [f64; 2], y: [f64; 2], resolution: usize) -> Vec<[f64; 3]> {
    let center = |r: [f64; 2], i: usize| r[0] + (i as f64 + 0.5) * (r[1] - r[0]) / resolution as f64;
    (0..resolution)
        .flat_map(|i| (0..resolution).map(move |j| [center(x, i), center(y, j), 0.0]))
        .collect()
}

/// Sum secrecy over a grid of Eve positions with the heat-map Bob layout,
/// `P_T = B · heatmap_power_per_bob` and SNR `heatmap_snr_db`.
pub fn run_heatmap(
    cfg: &ScenarioConfig,
    x: [f64; 2],
    y: [f64; 2],
    resolution: usize,
) -> Result<SweepResult, ExperimentError> {
    cfg.validate()?;
    if !(x[0] < x[1]) || !(y[0] < y[1]) {
        return Err(ExperimentError::config("heatmap_x", "ranges must be increasing"));
    }
    if resolution == 0 {
        return Err(ExperimentError::config("heatmap_resolution", "must be at least 1"));
    }
    let scn = Scenario::build(cfg, &cfg.heatmap_bob_positions, cfg.eve_elements, cfg.heatmap_spacing)?;
    let total_power = cfg.heatmap_power_per_bob * scn.num_bobs() as f64;
    let noise = super::noise_power(cfg.heatmap_snr_db);
    let cells = heatmap_cells(x, y, resolution);
    let mut points = Vec::with_capacity(cells.len());
    for &c in &cells {
        if c == cfg.alice_position {
            return Err(ExperimentError::config("heatmap_x", "an Eve cell coincides with Alice"));
        }
        points.push(OperatingPoint {
            noise,
            total_power,
            bob_zeta: scn.bob_zeta.clone(),
            eve_zeta: scn.zeta_to(c),
        });
    }
    let schemes = cfg.schemes();
    let stats = aggregate(cfg, &scn, cfg.csi_error, &points, &schemes)?;
    let mut out = SweepResult::default();
    for (k, (cell, per_scheme)) in cells.iter().zip(stats).enumerate() {
        let label = RowLabel {
            sweep: "heatmap",
            param: "cell",
            value: k as f64,
            eve: *cell,
            snr_db: cfg.heatmap_snr_db,
        };
        for (&s, st) in schemes.iter().zip(per_scheme) {
            out.rows.push(row(&label, s, st));
        }
    }
    Ok(out)
}
