//! Secrecy-rate simulation for multi-user holographic MIMO downlinks with
//! artificial noise.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub mod beamforming;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod experiments;
pub mod output;
pub mod parallel;
pub mod power;
pub mod quadrature;
pub mod secrecy;
pub mod validation;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;
