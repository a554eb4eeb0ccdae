//! SINRs, rates and secrecy capacity.
//!
//! Bobs remove their own artificial noise by SIC. Under imperfect CSI the
//! residual leakage of the other streams (signal and AN) reaches Bob through
//! `cross`; with perfect CSI `cross` vanishes and the Bob SINR is simply
//! `a_b α_b`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::beamforming::effective_channel;
use crate::channel::SpectralModel;
use crate::{CMatrix, CVector};

/// Unscaled `|q_rᴴ H_r f_k|²` for every receiver `r` (rows) and stream `k`
/// (columns). Each receiver is given as its model, small-scale matrix and
/// combiner.
pub fn combined_gains(
    receivers: &[(&SpectralModel, &CMatrix, &CVector)],
    sigma_a: &DVector<f64>,
    inner: &[CVector],
) -> DMatrix<f64> {
    DMatrix::from_fn(receivers.len(), inner.len(), |r, k| {
        let (rx, g, q) = receivers[r];
        q.dotc(&effective_channel(rx, g, sigma_a, &inner[k])).norm_sqr()
    })
}

/// Scalar link gains of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGains {
    /// `|q_bᴴ H_b f_b|² ζ_b / σ_z²`.
    pub a: Vec<f64>,
    /// `e[(b, k)] = |q_E^(b)ᴴ H_E f_k|² ζ_E`.
    pub e: DMatrix<f64>,
    /// `cross[(b, k)] = |q_bᴴ H_b f_k|² ζ_b` for `k ≠ b`; diagonal unused.
    pub cross: DMatrix<f64>,
    /// `σ_z²`.
    pub noise: f64,
}

impl LinkGains {
    /// Gains with no inter-user leakage at Bobs.
    pub fn perfect(a: Vec<f64>, e: DMatrix<f64>, noise: f64) -> Self {
        let n = a.len();
        Self {
            a,
            e,
            cross: DMatrix::zeros(n, n),
            noise,
        }
    }

    pub fn num_users(&self) -> usize {
        self.a.len()
    }
}

/// `min_b S_b` without building a full report.
pub fn min_secrecy(gains: &LinkGains, alpha: &[f64], beta: &[f64]) -> f64 {
    (0..gains.num_users())
        .map(|b| {
            let r = bob_sinr(gains, b, alpha, beta).ln_1p();
            let e = eve_sinr(gains, b, alpha, beta).ln_1p();
            ((r - e) / std::f64::consts::LN_2).max(0.0)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Bob `b`'s post-SIC SINR.
pub fn bob_sinr(gains: &LinkGains, b: usize, alpha: &[f64], beta: &[f64]) -> f64 {
    let leak: f64 = (0..gains.num_users())
        .filter(|&k| k != b)
        .map(|k| gains.cross[(b, k)] * (alpha[k] + beta[k]))
        .sum();
    if leak == 0.0 {
        return gains.a[b] * alpha[b];
    }
    gains.a[b] * alpha[b] * gains.noise / (leak + gains.noise)
}

/// Eve's SINR when eavesdropping on Bob `b`'s stream.
///
/// The denominator holds Bob `b`'s AN, the other streams' signals and AN,
/// and the noise.
pub fn eve_sinr(gains: &LinkGains, b: usize, alpha: &[f64], beta: &[f64]) -> f64 {
    let own = gains.e[(b, b)];
    let signal = own * alpha[b];
    if signal == 0.0 {
        return 0.0;
    }
    let own_an = own * beta[b];
    let others: f64 = (0..gains.num_users())
        .filter(|&k| k != b)
        .map(|k| gains.e[(b, k)] * (alpha[k] + beta[k]))
        .sum();
    signal / (own_an + others + gains.noise)
}

/// Per-Bob rates and secrecy in bits per channel use.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecrecyReport {
    pub bob_rate: Vec<f64>,
    pub eve_rate: Vec<f64>,
    pub secrecy: Vec<f64>,
    pub min_secrecy: f64,
    pub sum_secrecy: f64,
}

impl SecrecyReport {
    /// Smallest unclipped difference `R_b - R_E^b`.
    pub fn min_margin(&self) -> f64 {
        self.bob_rate
            .iter()
            .zip(&self.eve_rate)
            .map(|(r, e)| r - e)
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn secrecy_report(gains: &LinkGains, alpha: &[f64], beta: &[f64]) -> SecrecyReport {
    let users = gains.num_users();
    let bob_rate: Vec<f64> = (0..users)
        .map(|b| bob_sinr(gains, b, alpha, beta).ln_1p() / std::f64::consts::LN_2)
        .collect();
    let eve_rate: Vec<f64> = (0..users)
        .map(|b| eve_sinr(gains, b, alpha, beta).ln_1p() / std::f64::consts::LN_2)
        .collect();
    let secrecy: Vec<f64> = bob_rate
        .iter()
        .zip(&eve_rate)
        .map(|(r, e)| (r - e).max(0.0))
        .collect();
    let min_secrecy = secrecy.iter().copied().fold(f64::INFINITY, f64::min);
    let sum_secrecy = secrecy.iter().sum();
    SecrecyReport {
        bob_rate,
        eve_rate,
        secrecy,
        min_secrecy: if users == 0 { 0.0 } else { min_secrecy },
        sum_secrecy,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gains(a: Vec<f64>, e: Vec<f64>, noise: f64) -> LinkGains {
        let n = a.len();
        LinkGains::perfect(a, DMatrix::from_row_slice(n, n, &e), noise)
    }

    #[test]
    fn bob_sinr_examples() {
        let g = gains(vec![10.0, 3.0], vec![1.0; 4], 0.1);
        assert_eq!(bob_sinr(&g, 0, &[0.0, 1.0], &[1.0, 0.0]), 0.0);
        assert_eq!(bob_sinr(&g, 0, &[0.5, 0.5], &[0.5, 0.5]), 5.0);
        let mut leaky = g.clone();
        leaky.cross[(0, 1)] = 0.05;
        assert!(bob_sinr(&leaky, 0, &[0.5, 0.5], &[0.5, 0.5]) < 5.0);
    }

    #[test]
    fn eve_sinr_examples() {
        let g = gains(vec![1.0], vec![1.0], 1.0);
        assert_eq!(eve_sinr(&g, 0, &[1.0], &[1.0]), 0.5);
        assert_eq!(eve_sinr(&g, 0, &[0.0], &[1.0]), 0.0);
        let g2 = gains(vec![1.0, 1.0], vec![2.0, 0.5, 0.3, 1.5], 0.2);
        let lo = eve_sinr(&g2, 0, &[0.6, 0.4], &[0.5, 0.5]);
        let hi = eve_sinr(&g2, 0, &[0.6, 0.4], &[0.5 + 1e-3, 0.5]);
        assert!(hi < lo);
    }

    #[test]
    fn report_examples() {
        // γ_b = 3, γ_E = 1
        let g = gains(vec![3.0], vec![1.0], 1.0);
        let r = secrecy_report(&g, &[1.0], &[0.0]);
        assert!((r.secrecy[0] - 1.0).abs() < 1e-15);
        assert_eq!(r.sum_secrecy, r.secrecy[0]);

        // equal SINRs: a α = e α / σ²
        let g = gains(vec![2.0, 2.0], vec![2.0, 0.0, 0.0, 2.0], 1.0);
        let r = secrecy_report(&g, &[1.0, 1.0], &[0.0, 0.0]);
        assert_eq!(r.secrecy, vec![0.0, 0.0]);
        assert_eq!(r.sum_secrecy, 0.0);

        // Eve stronger than Bob: clipped
        let g = gains(vec![0.1], vec![10.0], 1.0);
        let r = secrecy_report(&g, &[1.0], &[0.0]);
        assert!(r.bob_rate[0] < r.eve_rate[0]);
        assert_eq!(r.secrecy[0], 0.0);
        assert!(r.min_margin() < 0.0);
    }

    fn instance() -> impl Strategy<Value = (LinkGains, Vec<f64>, Vec<f64>)> {
        (1usize..5).prop_flat_map(|n| {
            (
                prop::collection::vec(1e-2f64..1e2, n),
                prop::collection::vec(1e-2f64..1e2, n * n),
                prop::collection::vec(0.0f64..1.0, n * n),
                0.01f64..2.0,
                prop::collection::vec(1e-3f64..1.0, n),
                prop::collection::vec(1e-3f64..1.0, n),
            )
                .prop_map(move |(a, e, c, noise, alpha, beta)| {
                    let mut g = gains(a, e, noise);
                    g.cross = DMatrix::from_row_slice(n, n, &c);
                    (g, alpha, beta)
                })
        })
    }

    proptest! {
        #[test]
        fn report_invariants((g, alpha, beta) in instance()) {
            let r = secrecy_report(&g, &alpha, &beta);
            let n = g.num_users() as f64;
            prop_assert!(r.secrecy.iter().all(|&s| s >= 0.0));
            prop_assert!((r.sum_secrecy - r.secrecy.iter().sum::<f64>()).abs() < 1e-12);
            prop_assert!(r.min_secrecy <= r.sum_secrecy / n + 1e-12);
            prop_assert!((min_secrecy(&g, &alpha, &beta) - r.min_secrecy).abs() < 1e-12);
        }

        #[test]
        fn eve_sinr_monotonicity((g, alpha, beta) in instance(), which in 0usize..4) {
            let n = g.num_users();
            let b = which % n;
            let base = eve_sinr(&g, b, &alpha, &beta);
            let h = 1e-6;
            for k in 0..n {
                let mut beta2 = beta.clone();
                beta2[k] += h;
                prop_assert!(eve_sinr(&g, b, &alpha, &beta2) <= base);
                let mut alpha2 = alpha.clone();
                alpha2[k] += h;
                let moved = eve_sinr(&g, b, &alpha2, &beta);
                if k == b {
                    prop_assert!(moved >= base);
                } else {
                    prop_assert!(moved <= base);
                }
            }
        }
    }
}
