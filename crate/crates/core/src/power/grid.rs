//! Exhaustive search over the power simplex, used as a reference.

use super::{min_secrecy_of, PaProblem, PaSolution};
use crate::error::PowerError;

const MAX_USERS: usize = 3;

/// Best allocation among all `(α, β)` with entries on multiples of `step`
/// summing to `P_T`. Ties keep the first point in enumeration order.
pub fn grid_search_oracle(problem: &PaProblem, step: f64) -> Result<PaSolution, PowerError> {
    let users = problem.num_users();
    if users > MAX_USERS {
        return Err(PowerError::TooManyUsers(users));
    }
    if !(step.is_finite() && step > 0.0 && step <= problem.total_power) {
        return Err(PowerError::InvalidProblem(format!("grid step {step}")));
    }
    let units = (problem.total_power / step).round().max(1.0) as usize;
    let unit = problem.total_power / units as f64;
    let parts = 2 * users;

    let mut counts = vec![0usize; parts];
    let mut alpha = vec![0.0; users];
    let mut beta = vec![0.0; users];
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut visit = |counts: &[usize]| {
        for b in 0..users {
            alpha[b] = counts[b] as f64 * unit;
            beta[b] = counts[users + b] as f64 * unit;
        }
        let v = min_secrecy_of(problem, &alpha, &beta);
        if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
            best = Some((v, counts.to_vec()));
        }
    };
    compositions(&mut counts, 0, units, &mut visit);

    let (_, counts) = best.expect("simplex grid is never empty");
    let alpha = counts[..users].iter().map(|&c| c as f64 * unit).collect();
    let beta = counts[users..].iter().map(|&c| c as f64 * unit).collect();
    Ok(PaSolution::evaluate(problem, alpha, beta))
}

fn compositions(counts: &mut [usize], at: usize, left: usize, visit: &mut impl FnMut(&[usize])) {
    if at + 1 == counts.len() {
        counts[at] = left;
        visit(counts);
        return;
    }
    for c in 0..=left {
        counts[at] = c;
        compositions(counts, at + 1, left - c, visit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn no_eavesdropping_puts_everything_on_signal() {
        let p = PaProblem::new(vec![1.0], DMatrix::zeros(1, 1), 1.0, 2.0).unwrap();
        let s = grid_search_oracle(&p, 0.1).unwrap();
        assert_eq!(s.alpha, vec![2.0]);
        assert_eq!(s.beta, vec![0.0]);
    }

    #[test]
    fn refinement_never_hurts() {
        let p = PaProblem::new(
            vec![4.0, 1.5],
            DMatrix::from_row_slice(2, 2, &[0.9, 0.3, 0.2, 0.6]),
            1.0,
            1.0,
        )
        .unwrap();
        let mut last = f64::NEG_INFINITY;
        for step in [0.2, 0.1, 0.05, 0.025] {
            let v = grid_search_oracle(&p, step).unwrap().min_secrecy;
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn rejects_large_problems() {
        let p = PaProblem::new(vec![1.0; 4], DMatrix::zeros(4, 4), 1.0, 1.0).unwrap();
        assert_eq!(
            grid_search_oracle(&p, 0.1).unwrap_err(),
            PowerError::TooManyUsers(4)
        );
    }
}
