//! Log-barrier interior-point method for small dense convex programs of the form
//!
//! ```text
//! minimize   cᵀx
//! subject to s_i(x) ≥ 0   (s_i concave)
//!            A x = b
//! ```
//!
//! where each `s_i` is affine plus at most one separable concave term. Every
//! centering step is an equality-constrained Newton iteration on
//! `t·cᵀx − Σ ln s_i(x)` started from a strictly feasible point.

use nalgebra::{DMatrix, DVector};

use crate::error::PowerError;

/// Backtracking gives up below this step length.
const MIN_STEP: f64 = 1e-10;
/// Constraints with smaller slack get least-squares multipliers in the KKT
/// residual.
const ACTIVE_SLACK: f64 = 1e-6;
/// Extra Newton steps at the final barrier parameter.
const POLISH_STEPS: usize = 20;

/// Optional curved part of a constraint, acting on a single variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Curvature {
    None,
    /// `-exp(x[var])`
    NegExp { var: usize },
    /// `log2(1 + gain · x[var])`
    Log2OnePlus { var: usize, gain: f64 },
}

/// `s(x) = Σ coeff·x[idx] + constant + curvature(x) ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub linear: Vec<(usize, f64)>,
    pub constant: f64,
    pub curvature: Curvature,
}

impl Constraint {
    pub fn affine(linear: Vec<(usize, f64)>, constant: f64) -> Self {
        Self {
            linear,
            constant,
            curvature: Curvature::None,
        }
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        let lin: f64 = self.linear.iter().map(|&(i, c)| c * x[i]).sum();
        let curve = match self.curvature {
            Curvature::None => 0.0,
            Curvature::NegExp { var } => -x[var].exp(),
            Curvature::Log2OnePlus { var, gain } => {
                let arg = gain * x[var];
                if arg <= -1.0 {
                    f64::NEG_INFINITY
                } else {
                    arg.ln_1p() / std::f64::consts::LN_2
                }
            }
        };
        lin + self.constant + curve
    }

    /// `s(x + dx) − s(x)` without cancellation.
    fn change(&self, x: &DVector<f64>, dx: &DVector<f64>) -> f64 {
        let lin: f64 = self.linear.iter().map(|&(i, c)| c * dx[i]).sum();
        let curve = match self.curvature {
            Curvature::None => 0.0,
            Curvature::NegExp { var } => -x[var].exp() * dx[var].exp_m1(),
            Curvature::Log2OnePlus { var, gain } => {
                (gain * dx[var] / (1.0 + gain * x[var])).ln_1p() / std::f64::consts::LN_2
            }
        };
        lin + curve
    }

    /// Gradient as sparse `(index, value)` pairs; indices may repeat.
    fn gradient(&self, x: &DVector<f64>) -> Vec<(usize, f64)> {
        let mut g = self.linear.clone();
        match self.curvature {
            Curvature::None => {}
            Curvature::NegExp { var } => g.push((var, -x[var].exp())),
            Curvature::Log2OnePlus { var, gain } => g.push((
                var,
                gain / ((1.0 + gain * x[var]) * std::f64::consts::LN_2),
            )),
        }
        g
    }

    /// Single nonzero entry of the (diagonal) Hessian, if any.
    fn hessian(&self, x: &DVector<f64>) -> Option<(usize, f64)> {
        match self.curvature {
            Curvature::None => None,
            Curvature::NegExp { var } => Some((var, -x[var].exp())),
            Curvature::Log2OnePlus { var, gain } => {
                let d = 1.0 + gain * x[var];
                Some((var, -gain * gain / (d * d * std::f64::consts::LN_2)))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct BarrierProblem {
    pub objective: DVector<f64>,
    pub constraints: Vec<Constraint>,
    pub eq_matrix: DMatrix<f64>,
    pub eq_rhs: DVector<f64>,
}

impl BarrierProblem {
    pub fn dim(&self) -> usize {
        self.objective.len()
    }

    /// Smallest constraint value at `x` (positive when strictly feasible).
    pub fn min_slack(&self, x: &DVector<f64>) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.value(x))
            .fold(f64::INFINITY, |m, v| if v.is_nan() { f64::NEG_INFINITY } else { m.min(v) })
    }

    /// KKT residual at `x`: stationarity `‖c − Σ λ_i ∇s_i + Aᵀν‖∞` plus
    /// complementarity `Σ λ_i s_i`.
    ///
    /// Inactive constraints keep their central-path multipliers `1/(t s_i)`.
    /// Near-active slacks are tiny differences whose relative rounding error
    /// would swamp `1/(t s_i)`, so their multipliers are refit by least
    /// squares, falling back to the central values if that fit goes negative.
    fn kkt_residual(&self, x: &DVector<f64>, t: f64) -> f64 {
        let n = self.dim();
        let p = self.eq_matrix.nrows();
        let slacks: Vec<f64> = self.constraints.iter().map(|c| c.value(x)).collect();
        let central: Vec<f64> = slacks.iter().map(|s| 1.0 / (t * s)).collect();
        let active: Vec<usize> = (0..slacks.len()).filter(|&i| slacks[i] < ACTIVE_SLACK).collect();

        let grad = |i: usize| {
            let mut g = DVector::zeros(n);
            for (j, v) in self.constraints[i].gradient(x) {
                g[j] += v;
            }
            g
        };
        let mut rhs = self.objective.clone();
        for i in (0..slacks.len()).filter(|i| !active.contains(i)) {
            rhs -= grad(i) * central[i];
        }
        let residual = |lambda: &[f64]| -> f64 {
            let mut r = rhs.clone();
            for (k, &i) in active.iter().enumerate() {
                r -= grad(i) * lambda[k];
            }
            if p > 0 {
                let a = &self.eq_matrix;
                if let Some(chol) = (a * a.transpose()).cholesky() {
                    r -= a.transpose() * chol.solve(&(a * &r));
                }
            }
            let comp: f64 = active.iter().zip(lambda).map(|(&i, l)| l * slacks[i]).sum::<f64>()
                + (0..slacks.len())
                    .filter(|i| !active.contains(i))
                    .map(|i| central[i] * slacks[i])
                    .sum::<f64>();
            r.amax().max(comp)
        };

        let central_active: Vec<f64> = active.iter().map(|&i| central[i]).collect();
        let mut best = residual(&central_active);
        if !active.is_empty() {
            let mut m = DMatrix::zeros(n, active.len() + p);
            for (k, &i) in active.iter().enumerate() {
                m.set_column(k, &grad(i));
            }
            for r in 0..p {
                m.set_column(active.len() + r, &(-self.eq_matrix.row(r).transpose()));
            }
            if let Ok(sol) = m.svd(true, true).solve(&rhs, 1e-14) {
                let fit: Vec<f64> = sol.iter().take(active.len()).copied().collect();
                if fit.iter().all(|&l| l >= 0.0) {
                    best = best.min(residual(&fit));
                }
            }
        }
        best
    }

    /// `φ(x + dx) − φ(x)` for the barrier function `φ` at parameter `t`,
    /// formed term by term so large `t` does not swamp the difference.
    fn barrier_change(&self, x: &DVector<f64>, dx: &DVector<f64>, t: f64) -> f64 {
        let moved = x + dx;
        let mut change = t * self.objective.dot(dx);
        for c in &self.constraints {
            if !(c.value(&moved) > 0.0) {
                return f64::INFINITY;
            }
            let ratio = c.change(x, dx) / c.value(x);
            if !(ratio > -1.0) {
                return f64::INFINITY;
            }
            change -= ratio.ln_1p();
        }
        change
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierOptions {
    pub t0: f64,
    pub mu: f64,
    /// Stop once `m / t` falls below this.
    pub gap_tolerance: f64,
    /// Centering stops once half the squared Newton decrement falls below this.
    pub newton_tolerance: f64,
    pub armijo: f64,
    pub backtrack: f64,
    pub max_newton_per_center: usize,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self {
            t0: 1.0,
            mu: 10.0,
            gap_tolerance: 1e-8,
            newton_tolerance: 1e-9,
            armijo: 0.01,
            backtrack: 0.5,
            max_newton_per_center: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BarrierResult {
    pub x: DVector<f64>,
    /// Duality gap bound `m / t` at termination.
    pub gap: f64,
    /// Stationarity and complementarity residual at `x`.
    pub dual_residual: f64,
    pub newton_iterations: usize,
}

impl BarrierResult {
    pub fn kkt_residual(&self) -> f64 {
        self.gap.max(self.dual_residual)
    }
}

struct NewtonStep {
    dx: DVector<f64>,
    decrement_sq: f64,
}

fn newton_step(problem: &BarrierProblem, x: &DVector<f64>, t: f64) -> Option<NewtonStep> {
    let n = problem.dim();
    let p = problem.eq_matrix.nrows();
    let mut grad = &problem.objective * t;
    let mut hess = DMatrix::<f64>::zeros(n, n);
    for c in &problem.constraints {
        let s = c.value(x);
        let g = c.gradient(x);
        for &(i, gi) in &g {
            grad[i] -= gi / s;
            for &(j, gj) in &g {
                hess[(i, j)] += gi * gj / (s * s);
            }
        }
        if let Some((i, h)) = c.hessian(x) {
            hess[(i, i)] -= h / s;
        }
    }

    // Symmetric Jacobi scaling: curvatures of the variables differ by many
    // orders of magnitude near the boundary.
    let d = DVector::from_iterator(
        n,
        hess.diagonal().iter().map(|&h| if h > 0.0 { 1.0 / h.sqrt() } else { 1.0 }),
    );
    let a = DMatrix::from_fn(p, n, |r, c| problem.eq_matrix[(r, c)] * d[c]);
    let e = DVector::from_iterator(
        p,
        a.row_iter().map(|row| {
            let norm = row.norm();
            if norm > 0.0 { 1.0 / norm } else { 1.0 }
        }),
    );
    let a = DMatrix::from_fn(p, n, |r, c| a[(r, c)] * e[r]);
    let mut kkt = DMatrix::<f64>::zeros(n + p, n + p);
    kkt.view_mut((0, 0), (n, n))
        .copy_from(&DMatrix::from_fn(n, n, |i, j| hess[(i, j)] * d[i] * d[j]));
    kkt.view_mut((n, 0), (p, n)).copy_from(&a);
    kkt.view_mut((0, n), (n, p)).copy_from(&a.transpose());
    let mut rhs = DVector::<f64>::zeros(n + p);
    rhs.rows_mut(0, n).copy_from(&(-grad.component_mul(&d)));

    let sol = kkt.clone().lu().solve(&rhs).or_else(|| {
        // Regularize the primal block if the Hessian is singular.
        for i in 0..n {
            kkt[(i, i)] += 1e-12;
        }
        kkt.lu().solve(&rhs)
    })?;
    let mut y = sol.rows(0, n).into_owned();
    if p > 0 {
        // Remove the rounding drift off the equality plane; at large t it
        // otherwise dominates the directional derivative.
        if let Some(c) = (&a * a.transpose()).cholesky() {
            y -= a.transpose() * c.solve(&(&a * &y));
        }
    }
    let dx = y.component_mul(&d);
    let decrement_sq = dx.dot(&(&hess * &dx)).max(0.0);
    Some(NewtonStep { dx, decrement_sq })
}

/// Damped Newton iterations at fixed `t`. Returns the number of steps taken,
/// or `limit + 1` if the limit was exceeded.
fn center(
    problem: &BarrierProblem,
    x: &mut DVector<f64>,
    t: f64,
    opts: &BarrierOptions,
    tolerance: f64,
    limit: usize,
) -> Result<usize, PowerError> {
    let mut iters = 0;
    loop {
        let step = newton_step(problem, x, t)
            .ok_or_else(|| PowerError::Infeasible("singular KKT system".into()))?;
        if step.decrement_sq / 2.0 <= tolerance {
            return Ok(iters);
        }
        iters += 1;
        if iters > limit {
            return Ok(iters);
        }

        let slope = -step.decrement_sq;
        let mut s = 1.0;
        loop {
            if s <= MIN_STEP {
                // Rounding in the gradient now exceeds the remaining decrease.
                return Ok(iters);
            }
            let dx = &step.dx * s;
            if problem.barrier_change(x, &dx, t) <= opts.armijo * s * slope {
                *x += dx;
                break;
            }
            s *= opts.backtrack;
        }
    }
}

/// Minimizes `problem` from the strictly feasible point `x0`.
pub fn solve(
    problem: &BarrierProblem,
    x0: DVector<f64>,
    opts: &BarrierOptions,
) -> Result<BarrierResult, PowerError> {
    let slack = problem.min_slack(&x0);
    if !(slack > 0.0) {
        return Err(PowerError::Infeasible(format!(
            "starting point violates a constraint (min slack {slack:e})"
        )));
    }
    let eq_res = (&problem.eq_matrix * &x0 - &problem.eq_rhs).amax();
    if eq_res > 1e-9 * (1.0 + problem.eq_rhs.amax()) {
        return Err(PowerError::Infeasible(format!(
            "starting point violates the equality constraints by {eq_res:e}"
        )));
    }

    let m = problem.constraints.len() as f64;
    let mut x = x0;
    let mut t = opts.t0;
    let mut total_newton = 0;
    loop {
        let iters = center(problem, &mut x, t, opts, opts.newton_tolerance, opts.max_newton_per_center)?;
        total_newton += iters;
        if iters > opts.max_newton_per_center {
            return Err(PowerError::MaxIterations(total_newton));
        }
        if m / t < opts.gap_tolerance {
            break;
        }
        t *= opts.mu;
    }
    // A small decrement still allows sizable stationarity error along
    // high-curvature directions; a few more quadratic steps remove it.
    total_newton += center(problem, &mut x, t, opts, 0.0, POLISH_STEPS)?.min(POLISH_STEPS);
    let dual_residual = problem.kkt_residual(&x, t);
    Ok(BarrierResult {
        x,
        gap: m / t,
        dual_residual,
        newton_iterations: total_newton,
    })
}
