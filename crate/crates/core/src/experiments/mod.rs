//! Monte Carlo harness: scenarios, per-trial design and evaluation, sweeps.
//!
//! A trial draws every small-scale matrix once, designs beamformers and
//! combiners from the designer's estimates once, and then evaluates each
//! operating point (SNR, Eve position) and scheme on those same draws.

mod config;
mod sweeps;

use nalgebra::DMatrix;
use serde::Serialize;

pub use config::{PaMode, ScenarioConfig, Scheme};
pub use sweeps::{
    run_csi_sweep, run_eve_sweep, run_heatmap, run_snr_sweep, run_spacing_sweep, write_csv,
    AggregateStats, SweepResult, SweepRow, CSV_COLUMNS, CSV_SCHEMA_VERSION,
};

use crate::beamforming::{eve_combiner, BeamformingSolution, RankInfo};
use crate::channel::{trial_rng, ChannelRealization, SpectralModel};
use crate::error::{BeamformingError, ExperimentError, PowerError};
use crate::geometry::{path_loss, ArrayGeometry};
use crate::power::{extract_pa_problem, fixed_pa, solve_sca, PaSolution, ScaOptions};
use crate::secrecy::{combined_gains, secrecy_report, LinkGains, SecrecyReport};
use crate::{CMatrix, CVector};

/// `σ_z² = 10^(−SNR/10)`.
pub fn noise_power(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Spectral models and large-scale gains of one node layout.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub alice: SpectralModel,
    pub bobs: Vec<SpectralModel>,
    pub eve: SpectralModel,
    pub bob_zeta: Vec<f64>,
    pub eve_zeta: f64,
    pub path_loss_exponent: f64,
    pub array_gain: f64,
}

fn model(elements: [usize; 2], spacing: f64, at: [f64; 3]) -> Result<SpectralModel, ExperimentError> {
    let geom = ArrayGeometry::new(elements[0], elements[1], spacing, at)?;
    Ok(SpectralModel::new(geom)?)
}

impl Scenario {
    /// Builds the layout with the Bobs and Eve the config names.
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self, ExperimentError> {
        Self::build(cfg, &cfg.bob_positions, cfg.eve_elements, cfg.spacing)
    }

    pub fn build(
        cfg: &ScenarioConfig,
        bob_positions: &[[f64; 3]],
        eve_elements: [usize; 2],
        spacing: f64,
    ) -> Result<Self, ExperimentError> {
        let alice = model(cfg.alice_elements, spacing, cfg.alice_position)?;
        let bobs = bob_positions
            .iter()
            .map(|&p| model(cfg.bob_elements, spacing, p))
            .collect::<Result<Vec<_>, _>>()?;
        let eve = model(eve_elements, spacing, cfg.eve_position)?;
        let mut scn = Self {
            bob_zeta: Vec::new(),
            eve_zeta: 0.0,
            alice,
            bobs,
            eve,
            path_loss_exponent: cfg.path_loss_exponent,
            array_gain: cfg.array_gain,
        };
        scn.bob_zeta = scn
            .bobs
            .iter()
            .map(|b| scn.zeta_to(b.geometry().reference()))
            .collect();
        scn.eve_zeta = scn.zeta_to(scn.eve.geometry().reference());
        Ok(scn)
    }

    /// `ζ = d^−η Λ` from Alice's reference element to `at`.
    pub fn zeta_to(&self, at: [f64; 3]) -> f64 {
        let from = self.alice.geometry().reference();
        let d = from
            .iter()
            .zip(at)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        path_loss(d, self.path_loss_exponent, self.array_gain)
    }

    pub fn num_bobs(&self) -> usize {
        self.bobs.len()
    }
}

/// Every random draw of one trial.
#[derive(Debug, Clone)]
pub struct TrialChannels {
    pub bobs: Vec<ChannelRealization>,
    pub eve: ChannelRealization,
}

/// Draws Bob links in order, then Eve's, each as `G` followed by `E`. The
/// stream depends only on `(seed, trial)`, so schemes, SNR points, CSI levels
/// and Eve positions all see the same realizations.
pub fn draw_trial_channels(
    scn: &Scenario,
    seed: u64,
    trial: usize,
    xi: f64,
) -> Result<TrialChannels, ExperimentError> {
    let mut rng = trial_rng(seed, trial as u64);
    let bobs = scn
        .bobs
        .iter()
        .zip(&scn.bob_zeta)
        .map(|(b, &z)| ChannelRealization::draw(&mut rng, b, &scn.alice, xi, z))
        .collect::<Result<Vec<_>, _>>()?;
    let eve = ChannelRealization::draw(&mut rng, &scn.eve, &scn.alice, xi, scn.eve_zeta)?;
    Ok(TrialChannels { bobs, eve })
}

/// Unscaled combined gains: `bob[(b, k)] = |q_bᴴ H_b f_k|²` and
/// `eve[(b, k)] = |q_E^(b)ᴴ H_E f_k|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawGains {
    pub bob: DMatrix<f64>,
    pub eve: DMatrix<f64>,
}

/// Design-stage output of one trial.
#[derive(Debug, Clone)]
pub struct DesignedTrial {
    /// Gains as the designer believes them, from the estimated channels.
    pub designer: RawGains,
    /// Gains realized on the true channels. Eve matches her combiner to her
    /// own true channel.
    pub truth: RawGains,
    pub rank: Vec<RankInfo>,
}

pub fn design_trial(scn: &Scenario, ch: &TrialChannels) -> Result<DesignedTrial, BeamformingError> {
    let bob_refs: Vec<&SpectralModel> = scn.bobs.iter().collect();
    let g_hat: Vec<_> = ch.bobs.iter().map(|r| r.g_hat.clone()).collect();
    let design = BeamformingSolution::design(&scn.alice, &bob_refs, &g_hat, &scn.eve, &ch.eve.g_hat)?;
    let sigma_a = scn.alice.sigma();

    let gains = |bob_g: &[&CMatrix], eve_g: &CMatrix, eve_q: &[CVector]| {
        let bob_rx: Vec<_> = (0..scn.num_bobs())
            .map(|b| (&scn.bobs[b], bob_g[b], &design.bob_combiners[b]))
            .collect();
        let eve_rx: Vec<_> = eve_q.iter().map(|q| (&scn.eve, eve_g, q)).collect();
        RawGains {
            bob: combined_gains(&bob_rx, sigma_a, &design.inner),
            eve: combined_gains(&eve_rx, sigma_a, &design.inner),
        }
    };

    let est: Vec<&CMatrix> = ch.bobs.iter().map(|r| &r.g_hat).collect();
    let designer = gains(&est, &ch.eve.g_hat, &design.eve_combiners);
    let true_eve_q = design
        .inner
        .iter()
        .map(|p| eve_combiner(&scn.eve, &ch.eve.g, sigma_a, p))
        .collect::<Result<Vec<_>, _>>()?;
    let real: Vec<&CMatrix> = ch.bobs.iter().map(|r| &r.g).collect();
    let truth = gains(&real, &ch.eve.g, &true_eve_q);
    Ok(DesignedTrial {
        designer,
        truth,
        rank: design.rank_info,
    })
}

/// Scalars that turn raw gains into SINRs.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub noise: f64,
    pub total_power: f64,
    pub bob_zeta: Vec<f64>,
    pub eve_zeta: f64,
}

impl DesignedTrial {
    /// Realized link gains, including leakage of imperfectly nulled streams.
    pub fn true_gains(&self, op: &OperatingPoint) -> LinkGains {
        let users = op.bob_zeta.len();
        let bob = &self.truth.bob;
        let mut cross = DMatrix::from_fn(users, users, |b, k| bob[(b, k)] * op.bob_zeta[b]);
        cross.fill_diagonal(0.0);
        LinkGains {
            a: (0..users).map(|b| bob[(b, b)] * op.bob_zeta[b] / op.noise).collect(),
            e: &self.truth.eve * op.eve_zeta,
            cross,
            noise: op.noise,
        }
    }
}

/// Allocation chosen by `scheme` on the designer's view, and the secrecy it
/// achieves on the true channels.
pub fn evaluate_point(
    designed: &DesignedTrial,
    op: &OperatingPoint,
    scheme: Scheme,
    sca: &ScaOptions,
) -> Result<(PaSolution, SecrecyReport), PowerError> {
    let problem = extract_pa_problem(
        &designed.designer.bob,
        &designed.designer.eve,
        &op.bob_zeta,
        op.eve_zeta,
        op.noise,
        op.total_power,
    )?;
    let solution = match scheme {
        Scheme::Proposed => solve_sca(&problem, sca)?,
        Scheme::Fixed(f) => fixed_pa(&problem, f)?,
    };
    let report = secrecy_report(&designed.true_gains(op), &solution.alpha, &solution.beta);
    Ok((solution, report))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointResult {
    pub snr_db: f64,
    pub scheme: String,
    pub report: SecrecyReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial: usize,
    pub points: Vec<PointResult>,
}

pub(crate) fn sca_options(cfg: &ScenarioConfig) -> ScaOptions {
    ScaOptions {
        tolerance: cfg.sca_tolerance,
        max_iterations: cfg.sca_max_iterations,
        ..ScaOptions::default()
    }
}

/// Operating points of `scn` over `snr_db`, all at total power `total_power`.
pub(crate) fn snr_points(scn: &Scenario, snr_db: &[f64], total_power: f64) -> Vec<OperatingPoint> {
    snr_db
        .iter()
        .map(|&s| OperatingPoint {
            noise: noise_power(s),
            total_power,
            bob_zeta: scn.bob_zeta.clone(),
            eve_zeta: scn.eve_zeta,
        })
        .collect()
}

/// Runs one trial of `scn` at every operating point and scheme.
pub(crate) fn trial_reports(
    scn: &Scenario,
    seed: u64,
    trial: usize,
    xi: f64,
    points: &[OperatingPoint],
    schemes: &[Scheme],
    sca: &ScaOptions,
) -> Result<Vec<Vec<SecrecyReport>>, ExperimentError> {
    let ch = draw_trial_channels(scn, seed, trial, xi)?;
    let designed =
        design_trial(scn, &ch).map_err(|source| ExperimentError::Beamforming { trial, source })?;
    points
        .iter()
        .map(|op| {
            schemes
                .iter()
                .map(|&s| {
                    evaluate_point(&designed, op, s, sca)
                        .map(|(_, r)| r)
                        .map_err(|source| ExperimentError::Power { trial, source })
                })
                .collect()
        })
        .collect()
}

/// One trial of the configured scenario over its SNR grid.
pub fn run_trial(cfg: &ScenarioConfig, trial: usize) -> Result<TrialResult, ExperimentError> {
    cfg.validate()?;
    let scn = Scenario::from_config(cfg)?;
    let schemes = cfg.schemes();
    let reports = trial_reports(
        &scn,
        cfg.seed,
        trial,
        cfg.csi_error,
        &snr_points(&scn, &cfg.snr_db, cfg.total_power),
        &schemes,
        &sca_options(cfg),
    )?;
    let points = cfg
        .snr_db
        .iter()
        .zip(reports)
        .flat_map(|(&snr_db, per_scheme)| {
            schemes
                .iter()
                .zip(per_scheme)
                .map(move |(s, report)| PointResult {
                    snr_db,
                    scheme: s.label(),
                    report,
                })
        })
        .collect();
    Ok(TrialResult { trial, points })
}
