//! Successive convex approximation over the auxiliary-variable form of the
//! max-min problem.
//!
//! Per Bob `b` with `e_bb > 0` the inner problem carries `C_b` (Eve rate
//! bound), `I_b` (Eve interference bound), and `X_b, Y_b, Z_b` (log-domain
//! signal, interference and SINR). The two nonconvex constraints are replaced by
//! their tangents at `(X̄_b, C̄_b)`. Bobs with `e_bb = 0` face no eavesdropping
//! on their stream, so their auxiliaries are dropped and `C_b = 0`.

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVector};

use super::barrier::{self, BarrierOptions, BarrierProblem, Constraint, Curvature};
use super::{min_secrecy_of, zero_gain_bobs, PaProblem, PaSolution, TraceEntry};
use crate::error::PowerError;

/// Lower bound on every power variable inside the barrier, relative to `P_T`.
const POWER_FLOOR: f64 = 1e-12;
/// Powers below this fraction of `P_T` are reported as exactly zero.
const CLIP_FRACTION: f64 = 1e-9;
/// Offset that makes each inequality of a constructed start strictly slack.
const START_MARGIN: f64 = 0.01;
/// Drop in `τ` beyond which a step is treated as a solver failure.
const MONOTONE_SLACK: f64 = 1e-6;

/// `exp(X̄)(X − X̄ + 1)`: tangent of `exp` at `X̄`.
pub fn tangent_exp(x_bar: f64, x: f64) -> f64 {
    x_bar.exp() * (x - x_bar + 1.0)
}

/// `2^C̄ (ln2 (C − C̄) + 1) − 1`: tangent of `2^C − 1` at `C̄`.
pub fn tangent_pow2_minus_one(c_bar: f64, c: f64) -> f64 {
    c_bar.exp2() * (LN_2 * (c - c_bar) + 1.0) - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BobAux {
    pub c: f64,
    pub i: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Tangent points `(X̄_b, C̄_b)`; entries for Bobs without auxiliaries are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct Linearization {
    pub x_bar: Vec<f64>,
    pub c_bar: Vec<f64>,
}

impl Linearization {
    /// Tangent points of the uniform starting allocation.
    pub fn initial(problem: &PaProblem) -> Self {
        initial_iterate(problem).lin
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PaIterate {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub tau: f64,
    pub aux: Vec<Option<BobAux>>,
    /// Linearization the iterate was computed under.
    pub lin: Linearization,
    pub kkt_residual: f64,
    /// Smallest inequality value of the inner problem at this iterate.
    pub min_slack: f64,
}

impl PaIterate {
    /// Next linearization: the iterate's own `X_b` and `C_b`.
    pub fn next_linearization(&self) -> Linearization {
        let mut lin = self.lin.clone();
        for (b, aux) in self.aux.iter().enumerate() {
            if let Some(aux) = aux {
                lin.x_bar[b] = aux.x;
                lin.c_bar[b] = aux.c;
            }
        }
        lin
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub barrier: BarrierOptions,
}

impl Default for ScaOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-4,
            max_iterations: 50,
            barrier: BarrierOptions::default(),
        }
    }
}

/// Variable indices of the inner problem.
struct Layout {
    users: usize,
    slot: Vec<Option<usize>>,
    dim: usize,
}

const C: usize = 0;
const I: usize = 1;
const X: usize = 2;
const Y: usize = 3;
const Z: usize = 4;

impl Layout {
    fn new(problem: &PaProblem) -> Self {
        let users = problem.num_users();
        let mut next = 0;
        let slot = (0..users)
            .map(|b| {
                (problem.e[(b, b)] > 0.0).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        Self {
            users,
            slot,
            dim: 2 * users + 1 + 5 * next,
        }
    }

    fn alpha(&self, b: usize) -> usize {
        b
    }

    fn beta(&self, b: usize) -> usize {
        self.users + b
    }

    fn tau(&self) -> usize {
        2 * self.users
    }

    fn aux(&self, b: usize, field: usize) -> Option<usize> {
        self.slot[b].map(|s| 2 * self.users + 1 + 5 * s + field)
    }
}

fn interference(problem: &PaProblem, b: usize, alpha: &[f64], beta: &[f64]) -> f64 {
    (0..problem.num_users())
        .map(|k| {
            let own_alpha = if k == b { 0.0 } else { alpha[k] };
            problem.e[(b, k)] * (own_alpha + beta[k])
        })
        .sum::<f64>()
        + problem.noise
}

fn build_inner(problem: &PaProblem, layout: &Layout, lin: &Linearization) -> BarrierProblem {
    let users = layout.users;
    let floor = POWER_FLOOR * problem.total_power;
    let mut objective = DVector::zeros(layout.dim);
    objective[layout.tau()] = -1.0;

    let mut constraints = Vec::new();
    for b in 0..users {
        constraints.push(Constraint::affine(vec![(layout.alpha(b), 1.0)], -floor));
        constraints.push(Constraint::affine(vec![(layout.beta(b), 1.0)], -floor));
    }
    for b in 0..users {
        let mut rate = vec![(layout.tau(), -1.0)];
        if let Some(c) = layout.aux(b, C) {
            rate.push((c, -1.0));
        }
        constraints.push(Constraint {
            linear: rate,
            constant: 0.0,
            curvature: Curvature::Log2OnePlus {
                var: layout.alpha(b),
                gain: problem.a[b],
            },
        });

        let Some(base) = layout.aux(b, 0) else {
            continue;
        };
        let (c, i, x, y, z) = (base + C, base + I, base + X, base + Y, base + Z);
        constraints.push(Constraint::affine(
            vec![(z, 1.0), (x, -1.0), (y, 1.0)],
            -problem.e[(b, b)].ln(),
        ));
        let mut spread = vec![(i, -1.0)];
        for k in 0..users {
            if k != b {
                spread.push((layout.alpha(k), problem.e[(b, k)]));
            }
            spread.push((layout.beta(k), problem.e[(b, k)]));
        }
        constraints.push(Constraint::affine(spread, problem.noise));
        constraints.push(Constraint {
            linear: vec![(i, 1.0)],
            constant: 0.0,
            curvature: Curvature::NegExp { var: y },
        });
        let ex = lin.x_bar[b].exp();
        constraints.push(Constraint::affine(
            vec![(x, ex), (layout.alpha(b), -1.0)],
            ex * (1.0 - lin.x_bar[b]),
        ));
        let pc = lin.c_bar[b].exp2();
        constraints.push(Constraint {
            linear: vec![(c, pc * LN_2)],
            constant: pc * (1.0 - LN_2 * lin.c_bar[b]) - 1.0,
            curvature: Curvature::NegExp { var: z },
        });
    }

    let mut eq_matrix = DMatrix::zeros(1, layout.dim);
    for b in 0..users {
        eq_matrix[(0, layout.alpha(b))] = 1.0;
        eq_matrix[(0, layout.beta(b))] = 1.0;
    }
    BarrierProblem {
        objective,
        constraints,
        eq_matrix,
        eq_rhs: DVector::from_element(1, problem.total_power),
    }
}

fn rate(gain: f64, power: f64) -> f64 {
    (gain * power).ln_1p() / LN_2
}

/// Strictly feasible point for the given tangents, keeping `(α, β)` and
/// choosing each auxiliary just inside its bound.
fn strict_start(
    problem: &PaProblem,
    layout: &Layout,
    lin: &Linearization,
    alpha: &[f64],
    beta: &[f64],
) -> DVector<f64> {
    let mut x = DVector::zeros(layout.dim);
    let mut tau = f64::INFINITY;
    for b in 0..layout.users {
        x[layout.alpha(b)] = alpha[b];
        x[layout.beta(b)] = beta[b];
        let mut c_b = 0.0;
        if let Some(base) = layout.aux(b, 0) {
            let i = (1.0 - START_MARGIN) * interference(problem, b, alpha, beta);
            let y = i.ln() - START_MARGIN;
            let xb = lin.x_bar[b] - 1.0 + alpha[b] * (-lin.x_bar[b]).exp() + START_MARGIN;
            let z = problem.e[(b, b)].ln() + xb - y + START_MARGIN;
            c_b = lin.c_bar[b] + ((1.0 + z.exp()) * (-lin.c_bar[b]).exp2() - 1.0) / LN_2
                + START_MARGIN;
            x[base + C] = c_b;
            x[base + I] = i;
            x[base + X] = xb;
            x[base + Y] = y;
            x[base + Z] = z;
        }
        tau = tau.min(rate(problem.a[b], alpha[b]) - c_b);
    }
    x[layout.tau()] = tau - START_MARGIN;
    x
}

fn unpack(
    problem: &PaProblem,
    layout: &Layout,
    lin: &Linearization,
    x: &DVector<f64>,
    inner: &BarrierProblem,
    kkt_residual: f64,
) -> PaIterate {
    let users = layout.users;
    PaIterate {
        alpha: (0..users).map(|b| x[layout.alpha(b)]).collect(),
        beta: (0..users).map(|b| x[layout.beta(b)]).collect(),
        tau: x[layout.tau()],
        aux: (0..users)
            .map(|b| {
                layout.aux(b, 0).map(|base| BobAux {
                    c: x[base + C],
                    i: x[base + I],
                    x: x[base + X],
                    y: x[base + Y],
                    z: x[base + Z],
                })
            })
            .collect(),
        lin: lin.clone(),
        kkt_residual,
        min_slack: inner
            .min_slack(x)
            .min(-((&inner.eq_matrix * x)[0] - problem.total_power).abs()),
    }
}

/// The uniform allocation with the prescribed auxiliary start; its tangent
/// points sit at its own `X_b` and `C_b`.
fn initial_iterate(problem: &PaProblem) -> PaIterate {
    let layout = Layout::new(problem);
    let (alpha, beta) = problem.uniform_point();
    let users = layout.users;
    let mut lin = Linearization {
        x_bar: vec![0.0; users],
        c_bar: vec![0.0; users],
    };
    let mut aux = vec![None; users];
    let mut tau = f64::INFINITY;
    for b in 0..users {
        let mut c_b = 0.0;
        if layout.slot[b].is_some() {
            let i = (1.0 - START_MARGIN) * interference(problem, b, &alpha, &beta);
            let y = i.ln() - START_MARGIN;
            let x = alpha[b].ln() + START_MARGIN;
            let z = problem.e[(b, b)].ln() + x - y + START_MARGIN;
            c_b = z.exp().ln_1p() / LN_2 + START_MARGIN;
            lin.x_bar[b] = x;
            lin.c_bar[b] = c_b;
            aux[b] = Some(BobAux { c: c_b, i, x, y, z });
        }
        tau = tau.min(rate(problem.a[b], alpha[b]) - c_b);
    }
    let inner = build_inner(problem, &layout, &lin);
    let x = pack(&layout, &alpha, &beta, tau - START_MARGIN, &aux);
    let min_slack = inner.min_slack(&x);
    PaIterate {
        alpha,
        beta,
        tau: tau - START_MARGIN,
        aux,
        lin,
        kkt_residual: f64::INFINITY,
        min_slack,
    }
}

fn pack(layout: &Layout, alpha: &[f64], beta: &[f64], tau: f64, aux: &[Option<BobAux>]) -> DVector<f64> {
    let mut x = DVector::zeros(layout.dim);
    for b in 0..layout.users {
        x[layout.alpha(b)] = alpha[b];
        x[layout.beta(b)] = beta[b];
        if let (Some(base), Some(a)) = (layout.aux(b, 0), aux[b]) {
            x[base + C] = a.c;
            x[base + I] = a.i;
            x[base + X] = a.x;
            x[base + Y] = a.y;
            x[base + Z] = a.z;
        }
    }
    x[layout.tau()] = tau;
    x
}

fn solve_from(
    problem: &PaProblem,
    lin: &Linearization,
    x0: DVector<f64>,
    opts: &BarrierOptions,
) -> Result<PaIterate, PowerError> {
    let layout = Layout::new(problem);
    let inner = build_inner(problem, &layout, lin);
    let result = barrier::solve(&inner, x0, opts)?;
    Ok(unpack(problem, &layout, lin, &result.x, &inner, result.kkt_residual()))
}

fn check_lin(problem: &PaProblem, lin: &Linearization) -> Result<(), PowerError> {
    let users = problem.num_users();
    if lin.x_bar.len() != users || lin.c_bar.len() != users {
        return Err(PowerError::InvalidProblem(format!(
            "linearization has {} / {} points for {users} users",
            lin.x_bar.len(),
            lin.c_bar.len()
        )));
    }
    if lin.x_bar.iter().chain(&lin.c_bar).any(|v| !v.is_finite()) {
        return Err(PowerError::InvalidProblem(
            "linearization points must be finite".into(),
        ));
    }
    Ok(())
}

/// Solves the convexified problem at tangent points `lin`, starting from the
/// uniform allocation.
pub fn solve_inner_convex(
    problem: &PaProblem,
    lin: &Linearization,
    opts: &BarrierOptions,
) -> Result<PaIterate, PowerError> {
    check_lin(problem, lin)?;
    let layout = Layout::new(problem);
    let (alpha, beta) = problem.uniform_point();
    let x0 = strict_start(problem, &layout, lin, &alpha, &beta);
    solve_from(problem, lin, x0, opts)
}

/// Pulls an allocation slightly toward uniform so every power is strictly
/// above the barrier floor.
fn interior(problem: &PaProblem, alpha: &[f64], beta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    const PULL: f64 = 1e-6;
    let (ua, ub) = problem.uniform_point();
    let mix = |v: &[f64], u: &[f64]| -> Vec<f64> {
        v.iter().zip(u).map(|(v, u)| (1.0 - PULL) * v + PULL * u).collect()
    };
    (mix(alpha, &ua), mix(beta, &ub))
}

fn clip(problem: &PaProblem, alpha: &[f64], beta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let limit = CLIP_FRACTION * problem.total_power;
    let cut = |v: &[f64]| -> Vec<f64> { v.iter().map(|&p| if p < limit { 0.0 } else { p }).collect() };
    let (mut alpha, mut beta) = (cut(alpha), cut(beta));
    let total: f64 = alpha.iter().chain(&beta).sum();
    let scale = problem.total_power / total;
    alpha.iter_mut().chain(beta.iter_mut()).for_each(|p| *p *= scale);
    (alpha, beta)
}

fn feasibility(it: &PaIterate) -> f64 {
    (-it.min_slack).max(0.0)
}

/// Max-min secrecy allocation by successive convex approximation from the
/// uniform point.
pub fn solve_sca(problem: &PaProblem, opts: &ScaOptions) -> Result<PaSolution, PowerError> {
    let layout = Layout::new(problem);
    let start = initial_iterate(problem);
    let start_value = min_secrecy_of(problem, &start.alpha, &start.beta);

    let mut trace = vec![TraceEntry {
        iteration: 0,
        tau: start.tau,
        feasibility: feasibility(&start),
    }];
    let x0 = pack(&layout, &start.alpha, &start.beta, start.tau, &start.aux);
    let mut current = solve_from(problem, &start.lin, x0, &opts.barrier)?;
    let mut best_tau = start.tau;
    let mut converged = false;
    let mut iterations = 0;

    loop {
        iterations += 1;
        if current.tau < best_tau {
            if best_tau - current.tau > MONOTONE_SLACK {
                return Err(PowerError::NonMonotone {
                    previous: best_tau,
                    current: current.tau,
                });
            }
            // Inner-solver tolerance; the previous iterate stands.
            converged = true;
            break;
        }
        let step = current.tau - best_tau;
        best_tau = current.tau;
        trace.push(TraceEntry {
            iteration: iterations,
            tau: current.tau,
            feasibility: feasibility(&current),
        });
        if step < opts.tolerance {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        let lin = current.next_linearization();
        let (alpha, beta) = interior(problem, &current.alpha, &current.beta);
        let x0 = strict_start(problem, &layout, &lin, &alpha, &beta);
        let next = solve_from(problem, &lin, x0, &opts.barrier)?;
        if next.tau < current.tau {
            if current.tau - next.tau > MONOTONE_SLACK {
                return Err(PowerError::NonMonotone {
                    previous: current.tau,
                    current: next.tau,
                });
            }
            converged = true;
            break;
        }
        current = next;
    }

    let (alpha, beta) = clip(problem, &current.alpha, &current.beta);
    let value = min_secrecy_of(problem, &alpha, &beta);
    let (alpha, beta) = if value >= start_value {
        (alpha, beta)
    } else {
        (start.alpha.clone(), start.beta.clone())
    };
    let mut solution = PaSolution::evaluate(problem, alpha, beta);
    solution.tau = *trace.last().map(|e| &e.tau).unwrap_or(&start.tau);
    solution.trace = trace;
    solution.converged = converged;
    solution.iterations = iterations;
    solution.zero_gain_bobs = zero_gain_bobs(problem);
    Ok(solution)
}
