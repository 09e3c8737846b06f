//! Fourier representation of periodic vector fields on the unit cube.
//!
//! Fields are stored as coefficients of `exp(2πi k·x)` for integer `k` in the
//! cube `max |k_i| <= floor(n/3)`. Every quadratic product is formed on a grid
//! large enough that the truncation back to that cube is alias free.

mod fft;
mod field;
mod grid;
mod ops;

pub use field::{forward_transform, inverse_transform, RealVectorField, SpectralVectorField};
pub(crate) use field::{from_product, product_scalar_to_native, to_product, ProductField};
pub use grid::Grid3;
pub(crate) use ops::{cross, dot};
pub use ops::{
    cross_product_dealiased, curl, divergence, gradient, inner_product, laplacian, leray_project,
    vector_potential,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("resolution must be an even integer >= 4, got {n}")]
    InvalidResolution { n: usize },
    #[error("array extents {found:?} do not match the grid, expected {expected:?}")]
    DimensionMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("fields live on different grids (n = {left} vs n = {right})")]
    GridMismatch { left: usize, right: usize },
}
