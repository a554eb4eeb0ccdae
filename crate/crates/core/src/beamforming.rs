//! Null-space transmit beamforming and matched-filter combining.
//!
//! Alice's beamformer for Bob `b` is `f_b = Φ_A p_b`, where `p_b` lies in the
//! null space of every other Bob's reduced effective channel `Φ_Aᴴ H_{b'}ᴴ`.
//! Receivers combine with the normalized effective channel of their stream.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::channel::{check_shape, SpectralModel};
use crate::error::BeamformingError;
use crate::{CMatrix, CVector};

/// Relative cutoff for counting a singular value as nonzero, scaled by
/// `σ_max · max(rows, cols)`.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Effective channel norms below this are treated as zero.
pub const DEGENERATE_NORM: f64 = 1e-14;

/// `Φ_txᴴ Hᴴ = diag(σ_tx) · gᴴ · diag(σ_rx) · Φ_rxᴴ`, shape `n_tx × N_rx`.
pub fn reduced_effective_channel(
    tx: &SpectralModel,
    rx: &SpectralModel,
    g: &CMatrix,
) -> Result<CMatrix, BeamformingError> {
    check_shape(
        "small-scale matrix",
        (rx.num_points(), tx.num_points()),
        g.shape(),
    )?;
    let scaled = g
        .adjoint()
        .map_with_location(|i, j, v| v * (tx.sigma()[i] * rx.sigma()[j]));
    Ok(scaled * rx.basis().adjoint())
}

/// Reduced channels of every Bob except `b`, concatenated column-wise in
/// ascending Bob order. Empty (`n_tx × 0`) for a single Bob.
pub fn interference_stack(b: usize, reduced: &[CMatrix]) -> CMatrix {
    let rows = reduced.first().map_or(0, |m| m.nrows());
    let others: Vec<&CMatrix> = reduced
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != b)
        .map(|(_, m)| m)
        .collect();
    let cols: usize = others.iter().map(|m| m.ncols()).sum();
    let mut stack = CMatrix::zeros(rows, cols);
    let mut offset = 0;
    for m in others {
        stack.columns_mut(offset, m.ncols()).copy_from(m);
        offset += m.ncols();
    }
    stack
}

/// Numerical rank under the [`RANK_TOLERANCE`] cutoff.
pub fn numerical_rank(m: &CMatrix) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let threshold = max * m.nrows().max(m.ncols()) as f64 * RANK_TOLERANCE;
    sv.iter().filter(|&&s| s > threshold && s > 0.0).count()
}

/// Rank of an interference stack and the dimension left for beamforming.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankInfo {
    pub rank: usize,
    pub null_dim: usize,
}

#[derive(Debug, Clone)]
pub struct NullSpaceBeam {
    /// Inner beamformer `p`, length `n_A`.
    pub inner: CVector,
    /// Outer beamformer `f = Φ_A p`, length `N_A`.
    pub outer: CVector,
    pub rank: RankInfo,
}

/// Rotates `v` so its largest-magnitude entry (first one on ties) is real positive.
fn fix_phase(v: &mut CVector) {
    let mut best = 0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > v[best].norm() {
            best = i;
        }
    }
    let pivot = v[best];
    if pivot.norm() > 0.0 {
        let rot = pivot.conj() / pivot.norm();
        v.apply(|z| *z *= rot);
    }
}

/// Picks `p` from the null space of `stackᴴ`.
///
/// Only lattice points where Alice's spectrum is nonzero are eligible: a
/// direction supported on zero-variance points is trivially in every null
/// space but carries no power to anyone. Within the active subspace `p` is
/// the left singular vector of the smallest singular value of the full SVD.
pub fn null_space_beamformer(
    stack: &CMatrix,
    tx: &SpectralModel,
) -> Result<NullSpaceBeam, BeamformingError> {
    check_shape(
        "interference stack",
        (tx.num_points(), stack.ncols()),
        stack.shape(),
    )?;
    let live = tx.active_points();
    let m = live.len();
    if m == 0 {
        return Err(BeamformingError::InfeasibleNullSpace { live: 0, rank: 0 });
    }

    let (p_live, rank) = if stack.ncols() == 0 {
        let mut e = CVector::zeros(m);
        e[0] = Complex64::new(1.0, 0.0);
        (e, 0)
    } else {
        // Zero padding to at least m columns yields the full m×m U.
        let width = stack.ncols().max(m);
        let mut sub = CMatrix::zeros(m, width);
        for (r, &row) in live.iter().enumerate() {
            sub.view_mut((r, 0), (1, stack.ncols()))
                .copy_from(&stack.row(row));
        }
        let svd = sub.svd(true, false);
        let u = svd.u.expect("U requested");
        let sv = &svd.singular_values;
        let max = sv.iter().copied().fold(0.0, f64::max);
        let threshold = max * m.max(stack.ncols()) as f64 * RANK_TOLERANCE;
        let rank = sv.iter().filter(|&&s| s > threshold && s > 0.0).count();
        if rank >= m {
            return Err(BeamformingError::InfeasibleNullSpace { live: m, rank });
        }
        // Last index among the smallest singular values.
        let mut order: Vec<usize> = (0..sv.len()).collect();
        order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
        let pick = *order.last().expect("non-empty");
        (u.column(pick).into_owned(), rank)
    };

    let mut inner = CVector::zeros(tx.num_points());
    for (r, &row) in live.iter().enumerate() {
        inner[row] = p_live[r];
    }
    let norm = inner.norm();
    inner /= Complex64::new(norm, 0.0);
    fix_phase(&mut inner);
    let outer = tx.basis() * &inner;
    Ok(NullSpaceBeam {
        inner,
        outer,
        rank: RankInfo {
            rank,
            null_dim: m - rank,
        },
    })
}

/// `σ_rx ⊙ (g · (σ_tx ⊙ p))`: the effective channel in the receiver's
/// angular domain. Its norm equals that of `H f` since `Φ_rx` is semi-unitary.
pub fn effective_angular(
    rx: &SpectralModel,
    g: &CMatrix,
    sigma_tx: &DVector<f64>,
    p: &CVector,
) -> CVector {
    let weighted = p.zip_map(sigma_tx, |z, s| z * s);
    (g * weighted).zip_map(rx.sigma(), |z, s| z * s)
}

/// `H f` for `f = Φ_tx p`, computed through the factor chain.
pub fn effective_channel(
    rx: &SpectralModel,
    g: &CMatrix,
    sigma_tx: &DVector<f64>,
    p: &CVector,
) -> CVector {
    rx.basis() * effective_angular(rx, g, sigma_tx, p)
}

fn matched_filter(
    rx: &SpectralModel,
    g: &CMatrix,
    sigma_tx: &DVector<f64>,
    p: &CVector,
) -> Result<CVector, BeamformingError> {
    check_shape(
        "small-scale matrix",
        (rx.num_points(), sigma_tx.len()),
        g.shape(),
    )?;
    let v = effective_channel(rx, g, sigma_tx, p);
    let norm = v.norm();
    if norm < DEGENERATE_NORM {
        return Err(BeamformingError::DegenerateChannel { norm });
    }
    Ok(v / Complex64::new(norm, 0.0))
}

/// Bob's combiner `q_b = Φ_bΔ_bG_bΔ_A p_b / ‖·‖`, length `N_B`.
pub fn bob_matched_filter(
    rx: &SpectralModel,
    g_b: &CMatrix,
    sigma_a: &DVector<f64>,
    p_b: &CVector,
) -> Result<CVector, BeamformingError> {
    matched_filter(rx, g_b, sigma_a, p_b)
}

/// Eve's combiner when targeting the stream with inner beamformer `p_b`.
pub fn eve_combiner(
    eve: &SpectralModel,
    g_e: &CMatrix,
    sigma_a: &DVector<f64>,
    p_b: &CVector,
) -> Result<CVector, BeamformingError> {
    matched_filter(eve, g_e, sigma_a, p_b)
}

/// Full per-trial design: beamformers and combiners for every Bob and for
/// Eve targeting every Bob.
#[derive(Debug, Clone)]
pub struct BeamformingSolution {
    pub inner: Vec<CVector>,
    pub outer: Vec<CVector>,
    pub bob_combiners: Vec<CVector>,
    pub eve_combiners: Vec<CVector>,
    pub rank_info: Vec<RankInfo>,
}

/// Transmit side only: null-space beamformers for every Bob.
pub fn design_transmit(
    alice: &SpectralModel,
    bobs: &[&SpectralModel],
    g_bobs: &[CMatrix],
) -> Result<Vec<NullSpaceBeam>, BeamformingError> {
    let reduced = bobs
        .iter()
        .zip(g_bobs)
        .map(|(rx, g)| reduced_effective_channel(alice, rx, g))
        .collect::<Result<Vec<_>, _>>()?;
    (0..bobs.len())
        .map(|b| null_space_beamformer(&interference_stack(b, &reduced), alice))
        .collect()
}

impl BeamformingSolution {
    /// Designs everything from the given channel knowledge.
    pub fn design(
        alice: &SpectralModel,
        bobs: &[&SpectralModel],
        g_bobs: &[CMatrix],
        eve: &SpectralModel,
        g_eve: &CMatrix,
    ) -> Result<Self, BeamformingError> {
        let beams = design_transmit(alice, bobs, g_bobs)?;
        let sigma_a = alice.sigma();
        let bob_combiners = beams
            .iter()
            .zip(bobs.iter().zip(g_bobs))
            .map(|(beam, (rx, g))| bob_matched_filter(rx, g, sigma_a, &beam.inner))
            .collect::<Result<Vec<_>, _>>()?;
        let eve_combiners = beams
            .iter()
            .map(|beam| eve_combiner(eve, g_eve, sigma_a, &beam.inner))
            .collect::<Result<Vec<_>, _>>()?;
        let rank_info = beams.iter().map(|b| b.rank).collect();
        let (inner, outer) = beams.into_iter().map(|b| (b.inner, b.outer)).unzip();
        Ok(Self {
            inner,
            outer,
            bob_combiners,
            eve_combiners,
            rank_info,
        })
    }
}
