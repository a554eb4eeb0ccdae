//! Max-min secrecy power allocation between information and artificial-noise
//! streams.

pub mod barrier;
mod grid;
mod sca;

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::PowerError;
use crate::secrecy::{min_secrecy, secrecy_report, LinkGains};

pub use grid::grid_search_oracle;
pub use sca::{
    solve_inner_convex, solve_sca, tangent_exp, tangent_pow2_minus_one, BobAux, Linearization,
    PaIterate, ScaOptions,
};

/// Scalarized power-allocation instance.
#[derive(Debug, Clone, PartialEq)]
pub struct PaProblem {
    /// Bob gains normalized by the noise power.
    pub a: Vec<f64>,
    /// `e[(b, k)]`: gain of stream `k` at Eve's combiner for Bob `b`.
    pub e: DMatrix<f64>,
    pub noise: f64,
    pub total_power: f64,
}

impl PaProblem {
    pub fn new(
        a: Vec<f64>,
        e: DMatrix<f64>,
        noise: f64,
        total_power: f64,
    ) -> Result<Self, PowerError> {
        let users = a.len();
        if users == 0 {
            return Err(PowerError::InvalidProblem("no users".into()));
        }
        if e.shape() != (users, users) {
            return Err(PowerError::InvalidProblem(format!(
                "Eve gain matrix is {:?}, expected {users}x{users}",
                e.shape()
            )));
        }
        if a.iter().chain(e.iter()).any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(PowerError::InvalidProblem(
                "gains must be finite and nonnegative".into(),
            ));
        }
        if !(noise.is_finite() && noise > 0.0) {
            return Err(PowerError::InvalidProblem(format!("noise power {noise}")));
        }
        if !(total_power.is_finite() && total_power > 0.0) {
            return Err(PowerError::InvalidProblem(format!(
                "total power {total_power}"
            )));
        }
        Ok(Self {
            a,
            e,
            noise,
            total_power,
        })
    }

    pub fn num_users(&self) -> usize {
        self.a.len()
    }

    /// Gains as seen by the designer (no leakage at Bobs).
    pub fn link_gains(&self) -> LinkGains {
        LinkGains::perfect(self.a.clone(), self.e.clone(), self.noise)
    }

    /// `α_b = β_b = P_T / 2B`.
    pub fn uniform_point(&self) -> (Vec<f64>, Vec<f64>) {
        let v = self.total_power / (2 * self.num_users()) as f64;
        (vec![v; self.num_users()], vec![v; self.num_users()])
    }
}

/// Builds the allocation problem from unscaled combined gains.
///
/// `bob_raw[(b, k)]` and `eve_raw[(b, k)]` are `|q ᴴ H f_k|²` for Bob `b`'s
/// combiner and for Eve's combiner aimed at Bob `b`.
pub fn extract_pa_problem(
    bob_raw: &DMatrix<f64>,
    eve_raw: &DMatrix<f64>,
    bob_zeta: &[f64],
    eve_zeta: f64,
    noise: f64,
    total_power: f64,
) -> Result<PaProblem, PowerError> {
    let a = (0..bob_zeta.len())
        .map(|b| bob_raw[(b, b)] * bob_zeta[b] / noise)
        .collect();
    PaProblem::new(a, eve_raw * eve_zeta, noise, total_power)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub tau: f64,
    pub feasibility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaSolution {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub tau: f64,
    pub secrecy: Vec<f64>,
    pub min_secrecy: f64,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
    pub iterations: usize,
    /// Bobs with `a_b = 0`, whose secrecy is necessarily zero.
    pub zero_gain_bobs: Vec<usize>,
}

impl PaSolution {
    pub(crate) fn evaluate(problem: &PaProblem, alpha: Vec<f64>, beta: Vec<f64>) -> Self {
        let report = secrecy_report(&problem.link_gains(), &alpha, &beta);
        Self {
            alpha,
            beta,
            tau: report.min_margin(),
            secrecy: report.secrecy,
            min_secrecy: report.min_secrecy,
            trace: Vec::new(),
            converged: true,
            iterations: 0,
            zero_gain_bobs: zero_gain_bobs(problem),
        }
    }

    pub fn total_power(&self) -> f64 {
        self.alpha.iter().chain(&self.beta).sum()
    }

    /// Writes the iteration trace as CSV.
    pub fn write_trace<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for entry in &self.trace {
            w.serialize(entry)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_trace_file(&self, path: &Path) -> csv::Result<()> {
        self.write_trace(std::fs::File::create(path)?)
    }
}

fn zero_gain_bobs(problem: &PaProblem) -> Vec<usize> {
    (0..problem.num_users())
        .filter(|&b| problem.a[b] == 0.0)
        .collect()
}

/// Same split for every Bob: `α_b = f P_T / B`, `β_b = (1 - f) P_T / B`.
pub fn fixed_pa(problem: &PaProblem, fraction: f64) -> Result<PaSolution, PowerError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(PowerError::Fraction(fraction));
    }
    let users = problem.num_users();
    let share = problem.total_power / users as f64;
    Ok(PaSolution::evaluate(
        problem,
        vec![fraction * share; users],
        vec![(1.0 - fraction) * share; users],
    ))
}

pub(crate) fn min_secrecy_of(problem: &PaProblem, alpha: &[f64], beta: &[f64]) -> f64 {
    min_secrecy(&problem.link_gains(), alpha, beta)
}
