//! Self-checks runnable from the command line.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::SpectralModel;
use crate::error::ExperimentError;
use crate::experiments::{design_trial, draw_trial_channels, run_trial, Scenario, ScenarioConfig};
use crate::geometry::ArrayGeometry;
use crate::power::{fixed_pa, grid_search_oracle, solve_sca, PaProblem, ScaOptions};

/// Instance with gains log-uniform in `[1e-2, 1e2]`, unit noise and `P_T = 1`.
pub fn random_pa_problem<R: Rng + ?Sized>(rng: &mut R, users: usize) -> PaProblem {
    let mut draw = || 10f64.powf(rng.random_range(-2.0..=2.0));
    let a = (0..users).map(|_| draw()).collect();
    let e = nalgebra::DMatrix::from_fn(users, users, |_, _| draw());
    PaProblem::new(a, e, 1.0, 1.0).expect("random gains are valid")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OraclePair {
    pub instance: usize,
    pub sca: f64,
    pub grid: f64,
}

impl OraclePair {
    pub fn within(&self, fraction: f64) -> bool {
        self.sca >= fraction * self.grid
    }
}

/// SCA versus exhaustive grid (step `0.02 P_T`) on random two-user problems.
pub fn oracle_compare(seed: u64, instances: usize) -> Result<Vec<OraclePair>, ExperimentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..instances)
        .map(|instance| {
            let p = random_pa_problem(&mut rng, 2);
            let power = |source| ExperimentError::Power {
                trial: instance,
                source,
            };
            let sca = solve_sca(&p, &ScaOptions::default()).map_err(power)?;
            let grid = grid_search_oracle(&p, 0.02 * p.total_power).map_err(power)?;
            Ok(OraclePair {
                instance,
                sca: sca.min_secrecy,
                grid: grid.min_secrecy,
            })
        })
        .collect()
}

/// Fraction of pairs where SCA reaches `0.95 ×` the grid optimum.
pub fn oracle_pass_rate(pairs: &[OraclePair]) -> f64 {
    pairs.iter().filter(|p| p.within(0.95)).count() as f64 / pairs.len().max(1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed,
        detail,
    }
}

fn geometries() -> Vec<(usize, f64)> {
    [20, 10]
        .into_iter()
        .flat_map(|n| [0.125, 0.25, 0.5].into_iter().map(move |s| (n, s)))
        .collect()
}

fn basis_checks() -> Result<Vec<Check>, ExperimentError> {
    let mut worst_unitary: f64 = 0.0;
    let mut worst_power: f64 = 0.0;
    for (n, s) in geometries() {
        let m = SpectralModel::new(ArrayGeometry::new(n, n, s, [0.0; 3])?)?;
        let phi = m.basis();
        let gram = phi.adjoint() * phi;
        let dev = (0..gram.nrows())
            .flat_map(|i| (0..gram.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| {
                let target = if i == j { 1.0 } else { 0.0 };
                (gram[(i, j)] - num_complex::Complex64::new(target, 0.0)).norm()
            })
            .fold(0.0, f64::max);
        worst_unitary = worst_unitary.max(dev);
        let total = m.sigma().iter().map(|v| v * v).sum::<f64>() / m.num_elements() as f64;
        worst_power = worst_power.max((total - 0.5).abs());
    }
    Ok(vec![
        check(
            "basis semi-unitarity",
            worst_unitary < 1e-10,
            format!("max |PhiH Phi - I| = {worst_unitary:e}"),
        ),
        check(
            "variance normalization",
            worst_power < 1e-6,
            format!("max |sum sigma^2 - 0.5| = {worst_power:e}"),
        ),
    ])
}

fn zero_forcing_check(seed: u64, trials: usize) -> Result<Check, ExperimentError> {
    let cfg = ScenarioConfig::default();
    let scn = Scenario::from_config(&cfg)?;
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let ch = draw_trial_channels(&scn, seed, t, 0.0)?;
        let d = design_trial(&scn, &ch)
            .map_err(|source| ExperimentError::Beamforming { trial: t, source })?;
        let g = &d.truth.bob;
        for b in 0..g.nrows() {
            for k in (0..g.ncols()).filter(|&k| k != b) {
                worst = worst.max(g[(b, k)] / g[(b, b)]);
            }
        }
    }
    Ok(check(
        "zero-forcing leakage",
        worst < 1e-16,
        format!("max leakage ratio {worst:e} over {trials} trials"),
    ))
}

fn sca_check(seed: u64, instances: usize) -> Result<Check, ExperimentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    for i in 0..instances {
        let users = [1, 2, 4][i % 3];
        let p = random_pa_problem(&mut rng, users);
        let power = |source| ExperimentError::Power { trial: i, source };
        let s = solve_sca(&p, &ScaOptions::default()).map_err(power)?;
        let start = fixed_pa(&p, 0.5).map_err(power)?;
        let monotone = s.trace.windows(2).all(|w| w[1].tau >= w[0].tau - 1e-9);
        let budget = (s.total_power() - p.total_power).abs() <= 1e-8;
        let ascent = s.min_secrecy >= start.min_secrecy - 1e-6;
        if !(monotone && budget && ascent) {
            failures.push(i);
        }
    }
    Ok(check(
        "SCA monotonicity and feasibility",
        failures.is_empty(),
        format!("{} of {instances} instances failed {failures:?}", failures.len()),
    ))
}

fn determinism_check(seed: u64) -> Result<Check, ExperimentError> {
    let cfg = ScenarioConfig {
        alice_elements: [6, 6],
        bob_elements: [3, 3],
        eve_elements: [3, 3],
        snr_db: vec![10.0],
        seed,
        ..ScenarioConfig::default()
    };
    let same = run_trial(&cfg, 3)? == run_trial(&cfg, 3)?;
    Ok(check("trial determinism", same, "repeat of trial 3".to_string()))
}

/// Invariant checks across all modules; takes a few seconds.
pub fn run_validation(seed: u64) -> Result<ValidationReport, ExperimentError> {
    let mut checks = basis_checks()?;
    checks.push(zero_forcing_check(seed, 5)?);
    checks.push(sca_check(seed, 30)?);
    let pairs = oracle_compare(seed, 20)?;
    let rate = oracle_pass_rate(&pairs);
    checks.push(check(
        "oracle gap",
        rate >= 0.9,
        format!("{:.0}% of instances within 5% of the grid optimum", rate * 100.0),
    ));
    checks.push(determinism_check(seed)?);
    Ok(ValidationReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_problems_are_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            let p = random_pa_problem(&mut rng, 3);
            assert!(p.a.iter().chain(p.e.iter()).all(|&g| (1e-2..=1e2).contains(&g)));
        }
    }

    #[test]
    fn default_validation_passes() {
        let report = run_validation(7).unwrap();
        for c in &report.checks {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
