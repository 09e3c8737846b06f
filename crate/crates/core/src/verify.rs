//! Quick structural self-checks, run by the `verify` command.

use crate::axisym::{run_axi, AxiGrid, AxiRunConfig, AxiState};
use crate::maxreg::{run_maxreg, InitialE, MaxRegRunConfig, MaxwellRegState};
use crate::presets::{guided, random_solenoidal};
use crate::spectral::{
    cross_product_dealiased, curl, divergence, inner_product, inverse_transform, leray_project,
    Grid3, SpectralVectorField,
};
use std::f64::consts::TAU;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    /// Measured quantity, already divided by its scale.
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.value <= self.tolerance
    }
}

/// `|⟨∇×B, (∇×B)×B⟩| / (‖B‖²_{H¹} ‖B‖_∞)`, worst over `samples` seeds.
pub fn hall_skew_symmetry(n: usize, samples: u64) -> f64 {
    let g = Grid3::new(n).expect("valid resolution");
    (0..samples)
        .map(|seed| {
            let b = random_solenoidal(&g, seed, 1.0, g.kmax() as f64);
            let j = curl(&b);
            let jxb = cross_product_dealiased(&j, &b).expect("same grid");
            let p = inner_product(&j, &jxb).expect("same grid");
            let h1 = b.norm_sq() + b.grad_norm_sq();
            p.abs() / (h1 * b.max_norm())
        })
        .fold(0.0, f64::max)
}

/// `|Σ|f̂|² − mean |f(x)|²| / ‖f‖²` on the native grid.
pub fn parseval_defect(n: usize, seed: u64) -> f64 {
    let g = Grid3::new(n).expect("valid resolution");
    let f = random_solenoidal(&g, seed, 1.0, 2.0 * g.kmax() as f64);
    let phys = inverse_transform(&f);
    let mean = phys.values.iter().map(|v| v * v).sum::<f64>() / (n * n * n) as f64;
    (f.norm_sq() - mean).abs() / f.norm_sq()
}

/// `‖P(Pf) − Pf‖ + max |∇·Pf|`, relative to `‖f‖`.
pub fn projection_defect(n: usize, seed: u64) -> f64 {
    let g = Grid3::new(n).expect("valid resolution");
    let f = SpectralVectorField::from_fn(&g, |x, y, z| {
        [
            (TAU * x).sin() * (TAU * y).cos(),
            (TAU * (y + 2.0 * z)).cos(),
            (TAU * (x + z)).sin() + seed as f64 * 1e-3,
        ]
    });
    let mut f = f;
    f.axpy(1.0, &random_solenoidal(&g, seed, 0.3, 3.0));
    let p = leray_project(&f);
    let pp = leray_project(&p);
    let div = divergence(&p).iter().map(|c| c.norm()).fold(0.0, f64::max);
    ((&pp - &p).norm() + div) / f.norm()
}

/// `max |ψ(t)| / max |b0|` for an axisymmetric run started from pure swirl.
pub fn psi_invariance(t_end: f64) -> f64 {
    let grid = AxiGrid::new(64, 32, 1.0, 1.0).expect("valid grid");
    let s0 = AxiState::swirl(&grid, |x, r| {
        3.0 * r * (-4.0 * r * r).exp() * (1.0 + 0.5 * (TAU * x).sin())
    });
    let cfg = AxiRunConfig {
        t_end,
        ..Default::default()
    };
    let bmax = s0.b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    match run_axi(&grid, &s0, &cfg, &mut |_| {}) {
        Ok(s) => s.psi.iter().fold(0.0f64, |m, v| m.max(v.abs())) / bmax,
        Err(_) => f64::INFINITY,
    }
}

/// Growth of `max |E·B|` over a short `(B, E)` run, relative to
/// `‖E‖_∞ ‖B‖_∞`.
pub fn constraint_drift(n: usize, eps: f64, t_end: f64) -> f64 {
    let g = Grid3::new(n).expect("valid resolution");
    let Ok(s0) = MaxwellRegState::new(guided(&g, 0.1), InitialE::WellPrepared, eps) else {
        return f64::INFINITY;
    };
    let cfg = MaxRegRunConfig {
        t_end,
        ..Default::default()
    };
    let steps = cfg.steps(eps, &s0.b);
    match run_maxreg(&s0, &cfg, steps, &mut |_| {}) {
        Ok(s) => (s.constraint() - s0.constraint()).abs() / (s.e.max_norm() * s.b.max_norm()),
        Err(_) => f64::INFINITY,
    }
}

/// The full suite at desk-check sizes.
pub fn run_suite() -> Vec<Check> {
    vec![
        Check {
            name: "hall skew-symmetry",
            value: hall_skew_symmetry(16, 10),
            tolerance: 1e-12,
        },
        Check {
            name: "parseval",
            value: parseval_defect(16, 1),
            tolerance: 1e-13,
        },
        Check {
            name: "projection idempotence",
            value: projection_defect(16, 2),
            tolerance: 1e-13,
        },
        Check {
            name: "psi invariance",
            value: psi_invariance(0.05),
            tolerance: 1e-13,
        },
        Check {
            name: "E.B constraint conservation",
            value: constraint_drift(32, 1e-2, 0.01),
            tolerance: 1e-8,
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        for c in run_suite() {
            assert!(c.passed(), "{c:?}");
        }
    }
}
