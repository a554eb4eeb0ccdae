//! Wavenumber-domain channel model.
//!
//! Each node gets a [`SpectralModel`]: an integer lattice of angular sampling
//! points, a semi-unitary basis of array responses over that lattice, and the
//! per-point standard deviations derived from the isotropic-scattering
//! variance integral. A channel between two nodes is then
//! `Φ_rx · diag(σ_rx) · G · diag(σ_tx) · Φ_txᴴ` with `G` i.i.d. complex Gaussian.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::ChannelError;
use crate::geometry::{ArrayGeometry, CEIL_EPS};
use crate::quadrature::integrate_smoothed;
use crate::CMatrix;

/// Absolute tolerance for the outer x-integral of a cell variance.
const VARIANCE_ABS_TOL: f64 = 1e-11;

/// Integer angular sampling points `(l_x, l_y)` of one array.
///
/// Points run over `{-m_x, …, m_x-1} × {-m_y, …, m_y-1}` with `l_x` as the
/// slow index. Points whose cell misses the unit disk stay in the list and
/// carry zero variance.
#[derive(Debug, Clone, PartialEq)]
pub struct WavenumberLattice {
    m_x: usize,
    m_y: usize,
    points: Vec<(i32, i32)>,
}

impl WavenumberLattice {
    pub fn new(m_x: usize, m_y: usize) -> Self {
        let (mx, my) = (m_x as i32, m_y as i32);
        let points = (-mx..mx)
            .flat_map(|lx| (-my..my).map(move |ly| (lx, ly)))
            .collect();
        Self { m_x, m_y, points }
    }

    pub fn half_counts(&self) -> (usize, usize) {
        (self.m_x, self.m_y)
    }

    pub fn points(&self) -> &[(i32, i32)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Position of `(l_x, l_y)` in the point list.
    pub fn index_of(&self, lx: i32, ly: i32) -> Option<usize> {
        let (mx, my) = (self.m_x as i32, self.m_y as i32);
        if lx < -mx || lx >= mx || ly < -my || ly >= my {
            return None;
        }
        Some(((lx + mx) * 2 * my + (ly + my)) as usize)
    }
}

/// Lattice covering the whole wavenumber disk: `m = ⌈L/λ⌉` per axis.
pub fn build_lattice(geom: &ArrayGeometry) -> WavenumberLattice {
    let (lx, ly) = geom.aperture();
    WavenumberLattice::new(
        (lx - CEIL_EPS).ceil() as usize,
        (ly - CEIL_EPS).ceil() as usize,
    )
}

/// Array response matrix for coordinates given in wavelengths.
///
/// Column `k` is `exp(j[2πl_x/L_x, 2πl_y/L_y, γ]·c_n)/√N` for lattice point
/// `k`, with `γ` set to zero at evanescent points.
pub fn array_response_matrix(
    coords: &[[f64; 3]],
    lattice: &WavenumberLattice,
    aperture: (f64, f64),
) -> Result<CMatrix, ChannelError> {
    let (z_min, z_max) = coords
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
            (lo.min(c[2]), hi.max(c[2]))
        });
    let spread = z_max - z_min;
    if spread > 1e-12 * (1.0 + z_max.abs().max(z_min.abs())) {
        return Err(ChannelError::NonPlanar { spread });
    }
    let n = coords.len();
    let scale = 1.0 / (n as f64).sqrt();
    let (lx_len, ly_len) = aperture;
    let wavevectors: Vec<[f64; 3]> = lattice
        .points()
        .iter()
        .map(|&(lx, ly)| {
            let kx = lx as f64 / lx_len;
            let ky = ly as f64 / ly_len;
            let kz2 = 1.0 - kx * kx - ky * ky;
            let kz = if kz2 > 0.0 { kz2.sqrt() } else { 0.0 };
            [2.0 * PI * kx, 2.0 * PI * ky, 2.0 * PI * kz]
        })
        .collect();
    Ok(CMatrix::from_fn(n, lattice.len(), |row, col| {
        let c = coords[row];
        let k = wavevectors[col];
        Complex64::from_polar(scale, k[0] * c[0] + k[1] * c[1] + k[2] * c[2])
    }))
}

/// Basis `Φ` for an array over its lattice.
///
/// Semi-unitary whenever the lattice has at most as many points per axis as
/// the array has elements (`2⌈Nδ⌉ ≤ N`). Tiny arrays such as a single element
/// fall outside that range and get an overcomplete basis.
pub fn build_basis(
    geom: &ArrayGeometry,
    lattice: &WavenumberLattice,
) -> Result<CMatrix, ChannelError> {
    array_response_matrix(&geom.element_offsets(), lattice, geom.aperture())
}

/// Variance of the isotropic spectrum over the normalized cell
/// `[x0, x1] × [y0, y1]`, i.e. `(1/4π) ∬_D dx dy / √(1 - x² - y²)`.
///
/// The y-integral is done in closed form (`arcsin`), the x-integral by
/// adaptive quadrature split at the points where the clipping kicks in.
pub fn cell_variance(x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let nearest = |lo: f64, hi: f64| 0.0f64.clamp(lo, hi);
    let (nx, ny) = (nearest(x0, x1), nearest(y0, y1));
    if nx * nx + ny * ny >= 1.0 {
        return 0.0;
    }
    let a = x0.max(-1.0);
    let b = x1.min(1.0);
    let mut breaks = vec![a, b];
    for y in [y0, y1] {
        if y.abs() < 1.0 {
            let r = (1.0 - y * y).sqrt();
            breaks.extend([-r, r].into_iter().filter(|&x| x > a && x < b));
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let inner = |x: f64| {
        let rho = (1.0 - x * x).max(0.0).sqrt();
        if rho == 0.0 {
            return 0.0;
        }
        (y1 / rho).clamp(-1.0, 1.0).asin() - (y0 / rho).clamp(-1.0, 1.0).asin()
    };
    let pieces = (breaks.len() - 1) as f64;
    let total: f64 = breaks
        .windows(2)
        .map(|w| integrate_smoothed(inner, w[0], w[1], VARIANCE_ABS_TOL / pieces).0)
        .sum();
    (total / (4.0 * PI)).max(0.0)
}

/// `σ²(l_x, l_y)` for an array: the variance over cell
/// `[λl_x/L_x, λ(l_x+1)/L_x] × [λl_y/L_y, λ(l_y+1)/L_y]`.
pub fn angular_variance(lx: i32, ly: i32, geom: &ArrayGeometry) -> f64 {
    let (ax, ay) = geom.aperture();
    let (wx, wy) = (1.0 / ax, 1.0 / ay);
    cell_variance(
        lx as f64 * wx,
        (lx + 1) as f64 * wx,
        ly as f64 * wy,
        (ly + 1) as f64 * wy,
    )
}

/// Entries `√N · σ(l_x, l_y)` over the lattice.
pub fn build_sigma_vector(geom: &ArrayGeometry, lattice: &WavenumberLattice) -> DVector<f64> {
    let n = geom.num_elements() as f64;
    DVector::from_iterator(
        lattice.len(),
        lattice
            .points()
            .iter()
            .map(|&(lx, ly)| (n * angular_variance(lx, ly, geom)).sqrt()),
    )
}

/// Per-node spectral description, built once per geometry and shared.
#[derive(Debug, Clone)]
pub struct SpectralModel {
    geometry: ArrayGeometry,
    lattice: WavenumberLattice,
    basis: CMatrix,
    sigma: DVector<f64>,
}

impl SpectralModel {
    pub fn new(geometry: ArrayGeometry) -> Result<Self, ChannelError> {
        let lattice = build_lattice(&geometry);
        let basis = build_basis(&geometry, &lattice)?;
        let sigma = build_sigma_vector(&geometry, &lattice);
        Ok(Self {
            geometry,
            lattice,
            basis,
            sigma,
        })
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    pub fn lattice(&self) -> &WavenumberLattice {
        &self.lattice
    }

    /// `Φ`, shape `N × n`.
    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn sigma(&self) -> &DVector<f64> {
        &self.sigma
    }

    /// `Δ = diag(σ)` as a dense complex matrix.
    pub fn delta(&self) -> CMatrix {
        CMatrix::from_diagonal(&self.sigma.map(|s| Complex64::new(s, 0.0)))
    }

    pub fn num_elements(&self) -> usize {
        self.basis.nrows()
    }

    pub fn num_points(&self) -> usize {
        self.basis.ncols()
    }

    /// Lattice indices whose variance is nonzero.
    pub fn active_points(&self) -> Vec<usize> {
        self.sigma
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// Lift an angular-domain vector to the antenna domain: `Φ · diag(σ) · v`.
    pub fn to_antenna_domain(&self, v: &crate::CVector) -> crate::CVector {
        let scaled = v.zip_map(&self.sigma, |x, s| x * s);
        &self.basis * scaled
    }
}

/// Deterministic per-trial random stream derived from a master seed.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

/// `rows × cols` matrix of i.i.d. circularly-symmetric unit-variance Gaussians.
pub fn draw_small_scale<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
    })
}

/// `√(1-ξ²)·G + ξ·E` for a given error draw.
pub fn corrupt_csi_with(g: &CMatrix, xi: f64, error: &CMatrix) -> Result<CMatrix, ChannelError> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(ChannelError::CsiError(xi));
    }
    if g.shape() != error.shape() {
        return Err(ChannelError::Shape {
            what: "CSI error matrix",
            expected: g.shape(),
            got: error.shape(),
        });
    }
    let keep = (1.0 - xi * xi).sqrt();
    Ok(g.zip_map(error, |a, e| a * keep + e * xi))
}

/// Gauss–Markov CSI corruption with a fresh error draw.
pub fn corrupt_csi<R: Rng + ?Sized>(
    g: &CMatrix,
    xi: f64,
    rng: &mut R,
) -> Result<CMatrix, ChannelError> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(ChannelError::CsiError(xi));
    }
    let error = draw_small_scale(rng, g.nrows(), g.ncols());
    corrupt_csi_with(g, xi, &error)
}

/// One link's stochastic state.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// True angular coefficients, `n_rx × n_tx`.
    pub g: CMatrix,
    /// Estimation error draw `E`.
    pub error: CMatrix,
    /// Designer's estimate `√(1-ξ²)G + ξE`.
    pub g_hat: CMatrix,
    /// Large-scale gain.
    pub zeta: f64,
}

impl ChannelRealization {
    /// Draws `G` then `E` from `rng`. The error is drawn even when `xi = 0`
    /// so that realizations stay paired across CSI levels.
    pub fn draw<R: Rng + ?Sized>(
        rng: &mut R,
        rx: &SpectralModel,
        tx: &SpectralModel,
        xi: f64,
        zeta: f64,
    ) -> Result<Self, ChannelError> {
        let g = draw_small_scale(rng, rx.num_points(), tx.num_points());
        let error = draw_small_scale(rng, rx.num_points(), tx.num_points());
        let g_hat = corrupt_csi_with(&g, xi, &error)?;
        Ok(Self {
            g,
            error,
            g_hat,
            zeta,
        })
    }
}

fn check_link_shape(
    tx: &SpectralModel,
    rx: &SpectralModel,
    g: &CMatrix,
) -> Result<(), ChannelError> {
    let expected = (rx.num_points(), tx.num_points());
    if g.shape() != expected {
        return Err(ChannelError::Shape {
            what: "small-scale matrix",
            expected,
            got: g.shape(),
        });
    }
    Ok(())
}

/// `H = Φ_rx · diag(σ_rx) · G · diag(σ_tx) · Φ_txᴴ`, shape `N_rx × N_tx`.
pub fn assemble_channel(
    tx: &SpectralModel,
    rx: &SpectralModel,
    g: &CMatrix,
) -> Result<CMatrix, ChannelError> {
    check_link_shape(tx, rx, g)?;
    let scaled = g.map_with_location(|i, j, v| v * (rx.sigma[i] * tx.sigma[j]));
    Ok(rx.basis() * scaled * tx.basis().adjoint())
}

/// Same channel through `H̃ = (σ_rx σ_txᵀ) ⊙ G`; used to cross-check
/// [`assemble_channel`].
pub fn assemble_channel_hadamard(
    tx: &SpectralModel,
    rx: &SpectralModel,
    g: &CMatrix,
) -> Result<CMatrix, ChannelError> {
    check_link_shape(tx, rx, g)?;
    let outer = &rx.sigma * tx.sigma.transpose();
    let h_tilde = g.zip_map(&outer.map(|s| Complex64::new(s, 0.0)), |a, b| a * b);
    Ok(rx.basis() * h_tilde * tx.basis().adjoint())
}

pub(crate) fn check_shape(
    what: &'static str,
    expected: (usize, usize),
    got: (usize, usize),
) -> Result<(), ChannelError> {
    if expected != got {
        return Err(ChannelError::Shape {
            what,
            expected,
            got,
        });
    }
    Ok(())
}
