use super::field::{from_product, to_product, ProductField};
use super::{SpectralError, SpectralVectorField};
use num_complex::Complex64;
use std::f64::consts::TAU;

#[inline]
pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Orthogonal projection onto divergence-free fields, mode by mode:
/// `F(k) <- (I - k kᵀ/|k|²) F(k)`. The mean mode passes through.
pub fn leray_project(f: &SpectralVectorField) -> SpectralVectorField {
    f.map_modes(|k, v| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            return v;
        }
        let kv = (v[0] * k[0] + v[1] * k[1] + v[2] * k[2]) / k2;
        [v[0] - kv * k[0], v[1] - kv * k[1], v[2] - kv * k[2]]
    })
}

/// Spectral curl, `2πi k × F(k)`.
pub fn curl(f: &SpectralVectorField) -> SpectralVectorField {
    f.map_modes(|k, v| {
        let i2pi = Complex64::new(0.0, TAU);
        [
            i2pi * (v[2] * k[1] - v[1] * k[2]),
            i2pi * (v[0] * k[2] - v[2] * k[0]),
            i2pi * (v[1] * k[0] - v[0] * k[1]),
        ]
    })
}

/// Componentwise Laplacian, `-4π²|k|² F(k)`.
pub fn laplacian(f: &SpectralVectorField) -> SpectralVectorField {
    f.scale_modes(|k| -TAU * TAU * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]))
}

/// Gradient of the scalar with coefficients `phi` (mode storage order).
pub fn gradient(grid: &super::Grid3, phi: &[Complex64]) -> SpectralVectorField {
    let mut out = SpectralVectorField::zeros(grid);
    for (idx, k) in grid.waves().iter().enumerate() {
        let g = Complex64::new(0.0, TAU) * phi[idx];
        out.set(idx, [g * k[0], g * k[1], g * k[2]]);
    }
    out
}

/// Spectral divergence coefficients, `2πi k·F(k)`.
pub fn divergence(f: &SpectralVectorField) -> Vec<Complex64> {
    f.grid()
        .waves()
        .iter()
        .enumerate()
        .map(|(idx, k)| {
            let v = f.at(idx);
            Complex64::new(0.0, TAU) * (v[0] * k[0] + v[1] * k[1] + v[2] * k[2])
        })
        .collect()
}

/// Zero-mean Coulomb-gauge vector potential: `curl A = B` for divergence-free,
/// zero-mean `B`, with `A(k) = 2πi k × B(k) / |2πk|²`.
pub fn vector_potential(b: &SpectralVectorField) -> SpectralVectorField {
    b.map_modes(|k, v| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            return [Complex64::new(0.0, 0.0); 3];
        }
        let s = Complex64::new(0.0, TAU) / (TAU * TAU * k2);
        [
            s * (v[2] * k[1] - v[1] * k[2]),
            s * (v[0] * k[2] - v[2] * k[0]),
            s * (v[1] * k[0] - v[0] * k[1]),
        ]
    })
}

/// Pointwise `F × G` evaluated on the product grid and truncated back to the
/// retained cube.
pub fn cross_product_dealiased(
    f: &SpectralVectorField,
    g: &SpectralVectorField,
) -> Result<SpectralVectorField, SpectralError> {
    f.grid().check_same(g.grid())?;
    let phys = to_product(&[f, g]);
    let prod = pointwise_cross(&phys[0], &phys[1]);
    Ok(from_product(f.grid(), &[prod]).pop().expect("one field"))
}

pub(crate) fn pointwise_cross(a: &ProductField, b: &ProductField) -> ProductField {
    ProductField::from_fn(a.len(), |p| cross(a.at(p), b.at(p)))
}

/// `⟨F, G⟩ = ∫ F·G dx` over the unit box, by Parseval on the retained modes.
pub fn inner_product(
    f: &SpectralVectorField,
    g: &SpectralVectorField,
) -> Result<f64, SpectralError> {
    f.grid().check_same(g.grid())?;
    Ok(f.coeffs()
        .iter()
        .zip(g.coeffs().iter())
        .map(|(a, b)| a.re * b.re + a.im * b.im)
        .sum())
}
