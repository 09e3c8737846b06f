//! Right-hand sides and diagnostics of the incompressible Hall-MHD system
//!
//! ```text
//! ∂t u + u·∇u + ∇p = (∇×B)×B + Δu,              ∇·u = 0
//! ∂t B − ∇×(u×B) + ∇×((∇×B)×B) = ΔB,            ∇·B = 0
//! ```
//!
//! and of the standalone Hall problem (`u ≡ 0`). The pressure never appears:
//! the momentum nonlinearity is Leray-projected, and `u·∇u` is evaluated in
//! rotational form `ω×u + ∇|u|²/2` whose gradient part the projection removes.

use crate::spectral::{
    cross, curl, from_product, inner_product, laplacian, leray_project, to_product,
    vector_potential, Grid3, ProductField, SpectralError, SpectralVectorField,
};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HallError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("need at least 3 trajectory samples for centered differences, got {found}")]
    InsufficientSamples { found: usize },
    #[error("trajectory sample spacing must be positive, got {dt}")]
    BadSpacing { dt: f64 },
}

/// Truncated Fourier state `(u, B, t)` of the coupled system.
#[derive(Clone, Debug, PartialEq)]
pub struct MhdState {
    pub u: SpectralVectorField,
    pub b: SpectralVectorField,
    pub t: f64,
}

impl MhdState {
    pub fn new(
        u: SpectralVectorField,
        b: SpectralVectorField,
        t: f64,
    ) -> Result<Self, SpectralError> {
        u.grid().check_same(b.grid())?;
        Ok(Self { u, b, t })
    }

    /// State of the standalone Hall problem: zero velocity.
    pub fn hall_only(b: SpectralVectorField, t: f64) -> Self {
        let u = SpectralVectorField::zeros(b.grid());
        Self { u, b, t }
    }

    pub fn zeros(grid: &Grid3) -> Self {
        Self::hall_only(SpectralVectorField::zeros(grid), 0.0)
    }

    pub fn grid(&self) -> &Grid3 {
        self.b.grid()
    }

    /// `½(‖u‖² + ‖B‖²)`, the energy whose decay rate is exactly the dissipation.
    pub fn energy_sym(&self) -> f64 {
        0.5 * (self.u.norm_sq() + self.b.norm_sq())
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.b.is_finite()
    }
}

/// Every term of the coupled right-hand side, each already in the form that
/// enters `du` or `dB`.
#[derive(Clone, Debug)]
pub struct RhsTerms {
    /// `P(−u·∇u)`
    pub advection: SpectralVectorField,
    /// `P((∇×B)×B)`
    pub lorentz: SpectralVectorField,
    /// `∇×(u×B)`
    pub induction: SpectralVectorField,
    /// `−∇×((∇×B)×B)`
    pub hall: SpectralVectorField,
    pub diffusion_u: SpectralVectorField,
    pub diffusion_b: SpectralVectorField,
}

impl RhsTerms {
    pub fn du(&self) -> SpectralVectorField {
        let mut du = &self.advection + &self.lorentz;
        du += &self.diffusion_u;
        du
    }

    pub fn db(&self) -> SpectralVectorField {
        let mut db = &self.induction + &self.hall;
        db += &self.diffusion_b;
        db
    }
}

pub fn rhs_terms(s: &MhdState) -> RhsTerms {
    let omega = curl(&s.u);
    let j = curl(&s.b);
    let phys = to_product(&[&s.u, &omega, &s.b, &j]);
    let (u, w, b, jp) = (&phys[0], &phys[1], &phys[2], &phys[3]);
    let len = u.len();
    let products = [
        ProductField::from_fn(len, |p| cross(u.at(p), w.at(p))),
        ProductField::from_fn(len, |p| cross(jp.at(p), b.at(p))),
        ProductField::from_fn(len, |p| cross(u.at(p), b.at(p))),
    ];
    let spec = from_product(s.grid(), &products);
    RhsTerms {
        advection: leray_project(&spec[0]),
        lorentz: leray_project(&spec[1]),
        induction: curl(&spec[2]),
        hall: -&curl(&spec[1]),
        diffusion_u: laplacian(&s.u),
        diffusion_b: laplacian(&s.b),
    }
}

/// `−∇×((∇×B)×B)`, the Hall nonlinearity alone.
pub fn hall_nonlinearity(b: &SpectralVectorField) -> SpectralVectorField {
    let j = curl(b);
    let phys = to_product(&[&j, b]);
    let (jp, bp) = (&phys[0], &phys[1]);
    let jxb = ProductField::from_fn(jp.len(), |p| cross(jp.at(p), bp.at(p)));
    let spec = from_product(b.grid(), &[jxb]);
    -&curl(&spec[0])
}

/// `∂t B = −∇×((∇×B)×B) + ΔB`
pub fn rhs_hall_only(b: &SpectralVectorField) -> SpectralVectorField {
    let mut out = hall_nonlinearity(b);
    out += &laplacian(b);
    out
}

/// Nonlinear parts of the coupled system.
///
/// Returns `P(u×ω + J×B)` and `∇×((u − J)×B)`; the Laplacians are left to the
/// caller so time integrators can treat them separately.
pub fn coupled_nonlinearity(s: &MhdState) -> (SpectralVectorField, SpectralVectorField) {
    let omega = curl(&s.u);
    let j = curl(&s.b);
    let phys = to_product(&[&s.u, &omega, &s.b, &j]);
    let (u, w, b, jp) = (&phys[0], &phys[1], &phys[2], &phys[3]);
    let len = u.len();
    let nu = ProductField::from_fn(len, |p| {
        let a = cross(u.at(p), w.at(p));
        let c = cross(jp.at(p), b.at(p));
        [a[0] + c[0], a[1] + c[1], a[2] + c[2]]
    });
    let nb = ProductField::from_fn(len, |p| {
        let (uu, jj) = (u.at(p), jp.at(p));
        cross([uu[0] - jj[0], uu[1] - jj[1], uu[2] - jj[2]], b.at(p))
    });
    let spec = from_product(s.grid(), &[nu, nb]);
    (leray_project(&spec[0]), curl(&spec[1]))
}

/// `(du, dB)` of the coupled system.
pub fn rhs_coupled(s: &MhdState) -> (SpectralVectorField, SpectralVectorField) {
    let (mut du, mut db) = coupled_nonlinearity(s);
    du += &laplacian(&s.u);
    db += &laplacian(&s.b);
    (du, db)
}

/// Generalized Ohm's law with unit density: `E = −u×B + (∇×B)×B + ∇×B`,
/// so that Faraday's law `∂t B = −∇×E` reproduces the induction equation.
pub fn ohm_electric_field(s: &MhdState) -> SpectralVectorField {
    let j = curl(&s.b);
    let phys = to_product(&[&s.u, &s.b, &j]);
    let (u, b, jp) = (&phys[0], &phys[1], &phys[2]);
    let e = ProductField::from_fn(u.len(), |p| {
        let (uu, bb, jj) = (u.at(p), b.at(p), jp.at(p));
        cross([jj[0] - uu[0], jj[1] - uu[1], jj[2] - uu[2]], bb)
    });
    let mut out = from_product(s.grid(), &[e]).pop().expect("one field");
    out += &j;
    out
}

/// One row of the diagnostic time series.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `½‖u‖² + ‖B‖²`, the weighting written in the existence theorem.
    pub energy_paper: f64,
    /// `½‖u‖² + ½‖B‖²`
    pub energy_sym: f64,
    pub energy_u: f64,
    pub energy_b: f64,
    /// `‖∇u‖² + ‖∇B‖²`
    pub dissipation: f64,
    /// `⟨∇×B, (∇×B)×B⟩`, zero up to round-off.
    pub hall_power: f64,
    /// `⟨A, B⟩` in the zero-mean Coulomb gauge; `None` when `B` has a mean.
    pub helicity: Option<f64>,
    /// `⟨B, ∇×B⟩`
    pub current_helicity: f64,
    pub div_u_max: f64,
    pub div_b_max: f64,
}

pub fn diagnostics(s: &MhdState) -> DiagnosticsRecord {
    let energy_u = 0.5 * s.u.norm_sq();
    let energy_b = 0.5 * s.b.norm_sq();
    let j = curl(&s.b);
    let phys = to_product(&[&j, &s.b]);
    let (jp, bp) = (&phys[0], &phys[1]);
    let jxb = ProductField::from_fn(jp.len(), |p| cross(jp.at(p), bp.at(p)));
    let jxb = from_product(s.grid(), &[jxb]).pop().expect("one field");
    let hall_power = inner_product(&j, &jxb).expect("same grid");
    let mean = s.b.mean();
    let has_mean = mean
        .iter()
        .any(|c| c.abs() > 1e-14 * s.b.norm().max(f64::MIN_POSITIVE));
    let helicity = if has_mean {
        None
    } else {
        Some(inner_product(&vector_potential(&s.b), &s.b).expect("same grid"))
    };
    DiagnosticsRecord {
        t: s.t,
        energy_paper: energy_u + 2.0 * energy_b,
        energy_sym: energy_u + energy_b,
        energy_u,
        energy_b,
        dissipation: s.u.grad_norm_sq() + s.b.grad_norm_sq(),
        hall_power,
        helicity,
        current_helicity: inner_product(&s.b, &j).expect("same grid"),
        div_u_max: s.u.divergence_max(),
        div_b_max: s.b.divergence_max(),
    }
}

/// Magnetic field sampled at uniform spacing `dt`.
#[derive(Clone, Debug)]
pub struct SampledTrajectory {
    pub dt: f64,
    pub samples: Vec<SpectralVectorField>,
}

/// Largest absolute residual of the weak Hall problem
/// `⟨A, ∂t B⟩ + ⟨∇×A, (∇×B)×B⟩ + ⟨∇×A, ∇×B⟩ = 0`
/// over interior samples, with `∂t B` from centered differences.
pub fn weak_residual(traj: &SampledTrajectory, a: &SpectralVectorField) -> Result<f64, HallError> {
    if traj.samples.len() < 3 {
        return Err(HallError::InsufficientSamples {
            found: traj.samples.len(),
        });
    }
    if !(traj.dt > 0.0) {
        return Err(HallError::BadSpacing { dt: traj.dt });
    }
    let curl_a = curl(a);
    let mut worst: f64 = 0.0;
    for i in 1..traj.samples.len() - 1 {
        let b = &traj.samples[i];
        a.grid().check_same(b.grid())?;
        let dbdt = (&traj.samples[i + 1] - &traj.samples[i - 1]) * (0.5 / traj.dt);
        let j = curl(b);
        let phys = to_product(&[&j, b]);
        let jxb = ProductField::from_fn(phys[0].len(), |p| cross(phys[0].at(p), phys[1].at(p)));
        let jxb = from_product(b.grid(), &[jxb]).pop().expect("one field");
        let r =
            inner_product(a, &dbdt)? + inner_product(&curl_a, &jxb)? + inner_product(&curl_a, &j)?;
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// Built-in test fields for [`weak_residual`]: the initial field, one
/// divergence-free single-mode field for each `k` with `0 < |k| <= 2` (one of
/// each `±k` pair), and one seeded random solenoidal field.
pub fn weak_test_fields(b0: &SpectralVectorField, seed: u64) -> Vec<SpectralVectorField> {
    let grid = b0.grid();
    let mut out = vec![b0.clone()];
    for k in low_wavevectors(2) {
        out.push(single_mode_field(grid, k));
    }
    out.push(crate::presets::random_solenoidal(grid, seed, 1.0, 2.0));
    out
}

/// Integer wavevectors with `0 < |k|² <= kmax²`, one representative per `±k`.
pub(crate) fn low_wavevectors(kmax: i64) -> Vec<[i64; 3]> {
    let mut ks = Vec::new();
    for a in -kmax..=kmax {
        for b in -kmax..=kmax {
            for c in -kmax..=kmax {
                let k2 = a * a + b * b + c * c;
                if k2 == 0 || k2 > kmax * kmax {
                    continue;
                }
                // keep the lexicographically positive member of each pair
                if (a, b, c) > (0, 0, 0) {
                    ks.push([a, b, c]);
                }
            }
        }
    }
    ks
}

/// Real divergence-free field `p cos(2π k·x)` with polarization `p ⊥ k`.
pub fn single_mode_field(grid: &Grid3, k: [i64; 3]) -> SpectralVectorField {
    let kf = k.map(|c| c as f64);
    let helper = if k[0] == 0 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let mut p = cross(kf, helper);
    if p.iter().all(|c| *c == 0.0) {
        p = cross(kf, [0.0, 1.0, 0.0]);
    }
    let norm = p.iter().map(|c| c * c).sum::<f64>().sqrt();
    let p = p.map(|c| c / norm);
    let mut f = SpectralVectorField::zeros(grid);
    let half = p.map(|c| num_complex::Complex64::new(0.5 * c, 0.0));
    if let (Some(i), Some(j)) = (grid.mode_index(k), grid.mode_index(k.map(|c| -c))) {
        f.set(i, half);
        f.set(j, half);
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{abc, random_solenoidal};
    use crate::spectral::inverse_transform;
    use num_complex::Complex64;
    use std::f64::consts::{PI, TAU};

    fn grid(n: usize) -> Grid3 {
        Grid3::new(n).unwrap()
    }

    fn rel(a: &SpectralVectorField, b: &SpectralVectorField) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn beltrami_annihilates_hall_term() {
        let g = grid(16);
        let b = abc(&g, 1.0);
        let rhs = rhs_hall_only(&b);
        let expect = &b * (-4.0 * PI * PI);
        assert!(rel(&rhs, &expect) < 1e-13);
    }

    #[test]
    fn planar_field_has_no_hall_term() {
        let g = grid(16);
        let b = SpectralVectorField::from_fn(&g, |x, y, _| {
            [
                0.0,
                0.0,
                (TAU * x).sin() * (2.0 * TAU * y).cos() + (TAU * y).sin(),
            ]
        });
        assert!(hall_nonlinearity(&b).norm() < 1e-12 * b.norm());
        assert!(rel(&rhs_hall_only(&b), &laplacian(&b)) < 1e-13);
    }

    // Sixth-order centred differences of analytic functions.
    fn d1(f: &dyn Fn([f64; 3]) -> [f64; 3], x: [f64; 3], axis: usize, h: f64) -> [f64; 3] {
        let w = [
            (-3.0, -1.0),
            (-2.0, 9.0),
            (-1.0, -45.0),
            (1.0, 45.0),
            (2.0, -9.0),
            (3.0, 1.0),
        ];
        let mut out = [0.0; 3];
        for (s, c) in w {
            let mut p = x;
            p[axis] += s * h;
            let v = f(p);
            for i in 0..3 {
                out[i] += c * v[i] / (60.0 * h);
            }
        }
        out
    }

    fn d2(f: &dyn Fn([f64; 3]) -> [f64; 3], x: [f64; 3], axis: usize, h: f64) -> [f64; 3] {
        let w = [
            (-3.0, 2.0),
            (-2.0, -27.0),
            (-1.0, 270.0),
            (0.0, -490.0),
            (1.0, 270.0),
            (2.0, -27.0),
            (3.0, 2.0),
        ];
        let mut out = [0.0; 3];
        for (s, c) in w {
            let mut p = x;
            p[axis] += s * h;
            let v = f(p);
            for i in 0..3 {
                out[i] += c * v[i] / (180.0 * h * h);
            }
        }
        out
    }

    fn fd_curl(f: &dyn Fn([f64; 3]) -> [f64; 3], x: [f64; 3], h: f64) -> [f64; 3] {
        let (dx, dy, dz) = (d1(f, x, 0, h), d1(f, x, 1, h), d1(f, x, 2, h));
        [dy[2] - dz[1], dz[0] - dx[2], dx[1] - dy[0]]
    }

    #[test]
    fn hall_rhs_matches_finite_differences() {
        let field = |p: [f64; 3]| [(TAU * p[1]).sin(), (TAU * p[2]).sin(), (TAU * p[0]).sin()];
        let h = 1.0 / 128.0;
        let jxb = |p: [f64; 3]| cross(fd_curl(&field, p, h), field(p));
        let g = grid(32);
        let b = SpectralVectorField::from_fn(&g, |x, y, z| field([x, y, z]));
        let rhs = inverse_transform(&rhs_hall_only(&b));
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        // 32³ points are a subset of the 128³ lattice
        for i in (0..32).step_by(3) {
            for j in (0..32).step_by(5) {
                for l in (0..32).step_by(7) {
                    let x = [i as f64 / 32.0, j as f64 / 32.0, l as f64 / 32.0];
                    let hall = fd_curl(&jxb, x, h);
                    let lap: [f64; 3] =
                        std::array::from_fn(|c| (0..3).map(|a| d2(&field, x, a, h)[c]).sum());
                    for c in 0..3 {
                        let fd = -hall[c] + lap[c];
                        worst = worst.max((fd - rhs.values[[c, i, j, l]]).abs());
                        scale = scale.max(fd.abs());
                    }
                }
            }
        }
        assert!(worst <= 1e-6 * scale, "{worst} vs {scale}");
    }

    #[test]
    fn coupled_reduces_to_hall_only_without_velocity() {
        let g = grid(16);
        let s = MhdState::hall_only(abc(&g, 0.7), 0.0);
        let (du, db) = rhs_coupled(&s);
        assert!(du.norm() < 1e-12);
        assert!(rel(&db, &(&s.b * (-4.0 * PI * PI))) < 1e-13);
    }

    #[test]
    fn alfvenic_beltrami_state_only_diffuses() {
        let g = grid(16);
        let b = abc(&g, 0.5);
        let s = MhdState::new(b.clone(), b, 0.0).unwrap();
        let (du, db) = rhs_coupled(&s);
        assert!(rel(&du, &laplacian(&s.u)) < 1e-12);
        assert!(rel(&db, &laplacian(&s.b)) < 1e-12);
    }

    #[test]
    fn symmetric_energy_rate_closes() {
        let g = grid(16);
        for seed in 0..4 {
            let s = MhdState::new(
                random_solenoidal(&g, seed, 1.0, 3.0),
                random_solenoidal(&g, seed + 100, 1.0, 3.0),
                0.0,
            )
            .unwrap();
            let (du, db) = rhs_coupled(&s);
            let rate = inner_product(&s.u, &du).unwrap() + inner_product(&s.b, &db).unwrap();
            let diss = s.u.grad_norm_sq() + s.b.grad_norm_sq();
            assert!((rate + diss).abs() <= 1e-10 * diss, "{rate} {diss}");
        }
    }

    #[test]
    fn terms_are_divergence_free_and_sum_to_rhs() {
        let g = grid(16);
        let s = MhdState::new(
            random_solenoidal(&g, 3, 1.0, 3.0),
            random_solenoidal(&g, 4, 1.0, 3.0),
            0.0,
        )
        .unwrap();
        let t = rhs_terms(&s);
        for f in [&t.advection, &t.lorentz, &t.induction, &t.hall] {
            assert!(f.divergence_max() < 1e-10 * f.norm().max(1.0));
        }
        let (du, db) = rhs_coupled(&s);
        assert!(rel(&t.du(), &du) < 1e-13);
        assert!(rel(&t.db(), &db) < 1e-13);
    }

    #[test]
    fn hall_skew_symmetry_and_galerkin_balance() {
        let g = grid(16);
        for seed in 0..5 {
            let b = random_solenoidal(&g, seed, 1.0, 4.0);
            let h1 = b.grad_norm_sq();
            let power = inner_product(&b, &hall_nonlinearity(&b)).unwrap();
            assert!(power.abs() <= 1e-12 * h1 * b.max_norm());
            let rate = inner_product(&b, &rhs_hall_only(&b)).unwrap();
            assert!((rate + h1).abs() <= 1e-12 * h1);
        }
    }

    #[test]
    fn mean_modes_are_untouched() {
        let g = grid(16);
        let mut b = random_solenoidal(&g, 9, 1.0, 3.0);
        let zero = g.mode_index([0, 0, 0]).unwrap();
        b.set(zero, [0.3, -0.2, 0.1].map(|v| Complex64::new(v, 0.0)));
        let s = MhdState::new(random_solenoidal(&g, 10, 1.0, 3.0), b, 0.0).unwrap();
        let (du, db) = rhs_coupled(&s);
        assert!(du.at(zero).iter().all(|c| c.norm() < 1e-15));
        assert!(db.at(zero).iter().all(|c| c.norm() < 1e-15));
    }

    #[test]
    fn ohm_field_examples() {
        let g = grid(8);
        let b = abc(&g, 1.0);
        let e = ohm_electric_field(&MhdState::hall_only(b.clone(), 0.0));
        assert!(rel(&e, &(&b * TAU)) < 1e-13);

        let u = SpectralVectorField::from_fn(&g, |_, _, _| [1.0, 0.0, 0.0]);
        let b = SpectralVectorField::from_fn(&g, |_, _, _| [0.0, 1.0, 0.0]);
        let e = ohm_electric_field(&MhdState::new(u, b, 0.0).unwrap());
        let m = e.mean();
        assert!(m[0].abs() < 1e-15 && m[1].abs() < 1e-15 && (m[2] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn faraday_law_reproduces_induction() {
        let g = grid(16);
        for seed in 0..3 {
            let s = MhdState::new(
                random_solenoidal(&g, seed, 1.0, 3.0),
                random_solenoidal(&g, seed + 7, 1.0, 3.0),
                0.0,
            )
            .unwrap();
            let (_, db) = rhs_coupled(&s);
            let minus_curl_e = -&curl(&ohm_electric_field(&s));
            assert!((&minus_curl_e - &db).norm() <= 1e-12 * db.norm());
        }
    }

    #[test]
    fn beltrami_helicities() {
        let g = grid(16);
        let b = abc(&g, 0.8);
        let d = diagnostics(&MhdState::hall_only(b.clone(), 0.0));
        let nb = b.norm_sq();
        assert!((d.helicity.unwrap() - nb / TAU).abs() < 1e-13 * nb);
        assert!((d.current_helicity - TAU * nb).abs() < 1e-12 * nb);
        assert!(d.hall_power.abs() < 1e-12 * nb);
        assert!((d.energy_paper - nb).abs() < 1e-14);
        assert!((d.energy_sym - 0.5 * nb).abs() < 1e-14);
    }

    #[test]
    fn zero_state_gives_zero_record() {
        let g = grid(8);
        let d = diagnostics(&MhdState::zeros(&g));
        assert_eq!(d.energy_paper, 0.0);
        assert_eq!(d.dissipation, 0.0);
        assert_eq!(d.hall_power, 0.0);
        assert_eq!(d.helicity, Some(0.0));
        assert_eq!(d.current_helicity, 0.0);
        assert_eq!(d.div_b_max, 0.0);
    }

    #[test]
    fn mirror_image_flips_helicity() {
        let g = grid(16);
        let b = random_solenoidal(&g, 5, 1.0, 3.0);
        // B'(x) = -B(-x)  <=>  B'(k) = -conj(B(k))
        let mirrored = b.map_modes(|_, v| v.map(|c| -c.conj()));
        let h = diagnostics(&MhdState::hall_only(b, 0.0)).helicity.unwrap();
        let hm = diagnostics(&MhdState::hall_only(mirrored, 0.0))
            .helicity
            .unwrap();
        assert!(h.abs() > 1e-6);
        assert!((h + hm).abs() < 1e-14);
    }

    #[test]
    fn helicity_is_flagged_for_mean_field() {
        let g = grid(8);
        let b = SpectralVectorField::from_fn(&g, |x, _, _| [0.0, 1.0, (TAU * x).sin()]);
        assert_eq!(diagnostics(&MhdState::hall_only(b, 0.0)).helicity, None);
    }

    #[test]
    fn weak_residual_beltrami_closed_form() {
        let g = grid(16);
        let b0 = abc(&g, 1.0);
        let a = 4.0 * PI * PI;
        let dt = 1e-4;
        let samples = (0..6).map(|i| &b0 * (-a * dt * i as f64).exp()).collect();
        let r = weak_residual(&SampledTrajectory { dt, samples }, &b0).unwrap();
        // centred differences of e^{-at}: the residual is a e^{-at}|B0|² (sinh(ah)/(ah) - 1),
        // largest at the first interior sample
        let ah = a * dt;
        let expect = a * (-ah).exp() * b0.norm_sq() * (ah.sinh() / ah - 1.0);
        assert!((r - expect).abs() < 1e-6 * expect, "{r} {expect}");
    }

    #[test]
    fn weak_residual_zero_test_field_and_short_trajectory() {
        let g = grid(8);
        let b = random_solenoidal(&g, 1, 1.0, 2.0);
        let traj = SampledTrajectory {
            dt: 0.1,
            samples: vec![b.clone(), b.clone(), b.clone()],
        };
        assert_eq!(
            weak_residual(&traj, &SpectralVectorField::zeros(&g)).unwrap(),
            0.0
        );
        let short = SampledTrajectory {
            dt: 0.1,
            samples: vec![b.clone(), b],
        };
        assert_eq!(
            weak_residual(&short, &SpectralVectorField::zeros(&g)),
            Err(HallError::InsufficientSamples { found: 2 })
        );
    }

    #[test]
    fn weak_residual_single_mode_matches_galerkin_ode() {
        let g = grid(16);
        let dt = 1e-3;
        let samples: Vec<_> = (0..5)
            .map(|i| random_solenoidal(&g, 40 + i, 1.0, 3.0))
            .collect();
        let traj = SampledTrajectory {
            dt,
            samples: samples.clone(),
        };
        for k in [[1, 0, 0], [1, 1, 0], [0, 1, -2]] {
            let a = single_mode_field(&g, k);
            let mut expect: f64 = 0.0;
            for i in 1..samples.len() - 1 {
                let cd = (&samples[i + 1] - &samples[i - 1]) * (0.5 / dt);
                let r = inner_product(&a, &(&cd - &rhs_hall_only(&samples[i]))).unwrap();
                expect = expect.max(r.abs());
            }
            let got = weak_residual(&traj, &a).unwrap();
            assert!((got - expect).abs() < 1e-10 * expect.max(1.0));
        }
    }

    #[test]
    fn weak_test_field_library() {
        let g = grid(16);
        let b0 = abc(&g, 1.0);
        let fields = weak_test_fields(&b0, 3);
        // B0, the low modes, one random field
        assert_eq!(fields.len(), 2 + low_wavevectors(2).len());
        for f in &fields {
            assert!(f.divergence_max() < 1e-12);
            assert!(f.hermitian_defect() < 1e-15);
        }
    }

    mod props {
        use super::*;
        use crate::spectral::cross_product_dealiased;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn hall_term_does_no_work(seed in any::<u64>(), rms in 0.01f64..10.0) {
                let g = grid(12);
                let b = random_solenoidal(&g, seed, rms, g.kmax() as f64);
                let j = curl(&b);
                let p = inner_product(&j, &cross_product_dealiased(&j, &b).unwrap()).unwrap();
                let scale = (b.norm_sq() + b.grad_norm_sq()) * b.max_norm();
                prop_assert!(p.abs() <= 1e-12 * scale);
                let r = diagnostics(&MhdState::hall_only(b, 0.0));
                prop_assert!(r.hall_power.abs() <= 1e-12 * scale);
            }

            #[test]
            fn coupled_nonlinearity_conserves_symmetric_energy(seed in any::<u64>()) {
                let g = grid(8);
                let s = MhdState::new(
                    random_solenoidal(&g, seed, 0.7, 3.0),
                    random_solenoidal(&g, seed.wrapping_add(1), 0.7, 3.0),
                    0.0,
                ).unwrap();
                let (nu, nb) = coupled_nonlinearity(&s);
                let w = inner_product(&s.u, &nu).unwrap() + inner_product(&s.b, &nb).unwrap();
                let scale = s.u.norm() * nu.norm() + s.b.norm() * nb.norm();
                prop_assert!(w.abs() <= 1e-12 * scale.max(1e-300));
            }
        }
    }
}
