//! Named initial conditions. Every preset is a closed-form expression so that
//! runs can be reproduced outside this crate.

use crate::spectral::{leray_project, Grid3, SpectralVectorField};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::TAU;

/// `A (sin 2πz + cos 2πy, sin 2πx + cos 2πz, sin 2πy + cos 2πx)`, a Beltrami
/// field with `∇×B = 2πB`.
pub fn abc(grid: &Grid3, amplitude: f64) -> SpectralVectorField {
    SpectralVectorField::from_fn(grid, |x, y, z| {
        [
            amplitude * ((TAU * z).sin() + (TAU * y).cos()),
            amplitude * ((TAU * x).sin() + (TAU * z).cos()),
            amplitude * ((TAU * y).sin() + (TAU * x).cos()),
        ]
    })
}

/// Seeded random solenoidal field with zero mean.
///
/// For every wavevector with `0 < |k| <= kcut` (one of each `±k` pair, visited
/// in storage order) six standard normal draws give a complex vector `v`; the
/// coefficient is `v exp(-|k|²/kcut²)` at `k` and its conjugate at `-k`. The
/// result is Leray-projected and scaled to `‖F‖ = rms`.
pub fn random_solenoidal(grid: &Grid3, seed: u64, rms: f64, kcut: f64) -> SpectralVectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralVectorField::zeros(grid);
    let waves = grid.waves().to_vec();
    for (idx, k) in waves.iter().enumerate() {
        let mirror = grid.mirror_index(idx);
        if mirror <= idx {
            continue;
        }
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 || k2 > kcut * kcut {
            continue;
        }
        let env = (-k2 / (kcut * kcut)).exp();
        let v: [Complex64; 3] = std::array::from_fn(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im) * env
        });
        f.set(idx, v);
        f.set(mirror, v.map(|c| c.conj()));
    }
    let f = leray_project(&f);
    let norm = f.norm();
    if norm == 0.0 {
        return f;
    }
    f * (rms / norm)
}

/// Circularly polarized wave `A (sin 2πz, cos 2πz, 0)`: Beltrami with
/// `∇×B = 2πB` and `|B| = A` everywhere, so free of magnetic nulls.
pub fn helical(grid: &Grid3, amplitude: f64) -> SpectralVectorField {
    SpectralVectorField::from_fn(grid, |_, _, z| {
        [
            amplitude * (TAU * z).sin(),
            amplitude * (TAU * z).cos(),
            0.0,
        ]
    })
}

/// Orszag–Tang-like pair `u = (−sin 2πy, sin 2πx, 0)`,
/// `B = (−sin 2πy, sin 4πx, 0)`, both scaled by `amplitude`.
pub fn orszag_tang(grid: &Grid3, amplitude: f64) -> (SpectralVectorField, SpectralVectorField) {
    let u = SpectralVectorField::from_fn(grid, |x, y, _| {
        [
            -amplitude * (TAU * y).sin(),
            amplitude * (TAU * x).sin(),
            0.0,
        ]
    });
    let b = SpectralVectorField::from_fn(grid, |x, y, _| {
        [
            -amplitude * (TAU * y).sin(),
            amplitude * (2.0 * TAU * x).sin(),
            0.0,
        ]
    });
    (u, b)
}

/// Null-free field with a guide component:
/// `B = (1 + a sin 2πz, a sin 2πx, a sin 2πy)`. Divergence-free, not Beltrami,
/// and `|B| >= 1 − √3 a > 0` for `a < 1/√3`.
pub fn guided(grid: &Grid3, a: f64) -> SpectralVectorField {
    SpectralVectorField::from_fn(grid, |x, y, z| {
        [
            1.0 + a * (TAU * z).sin(),
            a * (TAU * x).sin(),
            a * (TAU * y).sin(),
        ]
    })
}

/// Swirl ring for the axisymmetric solver:
/// `b(x, r) = A (r/w) exp(−(r/w)²) (1 + ½ cos(2πx/lx))`.
pub fn swirl_ring(x: f64, r: f64, amplitude: f64, width: f64, lx: f64) -> f64 {
    let s = r / width;
    amplitude * s * (-s * s).exp() * (1.0 + 0.5 * (TAU * x / lx).cos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::curl;

    #[test]
    fn random_field_is_real_solenoidal_and_normalized() {
        let g = Grid3::new(16).unwrap();
        let f = random_solenoidal(&g, 7, 0.3, 3.0);
        assert!((f.norm() - 0.3).abs() < 1e-14);
        assert!(f.hermitian_defect() < 1e-16);
        assert!(f.divergence_max() < 1e-13);
        assert_eq!(f.mean(), [0.0; 3]);
        assert_eq!(f, random_solenoidal(&g, 7, 0.3, 3.0));
        assert_ne!(f, random_solenoidal(&g, 8, 0.3, 3.0));
    }

    #[test]
    fn abc_is_beltrami_and_guided_is_not() {
        let g = Grid3::new(12).unwrap();
        let b = abc(&g, 0.5);
        assert!(curl(&b).max_abs_diff(&(&b * TAU)) < 1e-13);
        let h = guided(&g, 0.3);
        assert!(h.divergence_max() < 1e-13);
        assert!(curl(&h).max_abs_diff(&(&h * TAU)) > 0.1);
    }
}
