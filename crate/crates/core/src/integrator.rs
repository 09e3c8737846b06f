//! Time stepping for the truncated systems.
//!
//! All schemes split `∂t y = L y + N(y)` with `L = Δ` (diagonal in Fourier
//! space, `−4π²|k|²` on both fields) and `N` the quadratic terms.

use crate::hall::{
    coupled_nonlinearity, diagnostics, hall_nonlinearity, DiagnosticsRecord, MhdState,
};
use crate::spectral::SpectralVectorField;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    ImexEuler,
    ImexRk2,
    IntegratingFactorRk4,
}

impl Scheme {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "imex_euler" => Some(Self::ImexEuler),
            "imex_rk2" => Some(Self::ImexRk2),
            "integrating_factor_rk4" | "if_rk4" => Some(Self::IntegratingFactorRk4),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::ImexEuler => "imex_euler",
            Self::ImexRk2 => "imex_rk2",
            Self::IntegratingFactorRk4 => "integrating_factor_rk4",
        }
    }
}

/// Which equations are advanced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    /// `u ≡ 0`, only the magnetic field evolves.
    HallOnly,
    Coupled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub cfl_safety: f64,
    /// Shrink the step to the CFL bound instead of failing.
    pub adapt: bool,
    /// Emit diagnostics every this many accepted steps.
    pub diag_every: usize,
    pub model: Model,
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64, scheme: Scheme, model: Model) -> Self {
        Self {
            dt,
            t_end,
            scheme,
            cfl_safety: 1.0,
            adapt: false,
            diag_every: 1,
            model,
        }
    }

    pub fn validate(&self) -> Result<(), IntegratorError> {
        let bad = |msg: String| Err(IntegratorError::InvalidConfig(msg));
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return bad(format!("t_end must be >= 0, got {}", self.t_end));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            ));
        }
        if self.diag_every == 0 {
            return bad("diag_every must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum IntegratorError {
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("step dt = {dt:e} exceeds the Hall CFL bound {admissible:e}")]
    StepRejected { dt: f64, admissible: f64 },
    #[error("energy still increased after {halvings} step halvings at t = {t}")]
    EnergyIncrease { t: f64, halvings: usize },
    #[error("non-finite field values at t = {t}")]
    BlowUp { t: f64, last_good: Box<MhdState> },
}

/// Number of retries with a halved step before giving up on energy growth.
pub const MAX_HALVINGS: usize = 20;
/// Relative energy growth tolerated in one step.
pub const ENERGY_TOL: f64 = 1e-12;

/// Step bound `safety Δx² / (π max|B| + 1)` from the whistler dispersion
/// `ω ~ |B| k²`; the `+ 1` accounts for the unit diffusivity.
pub fn hall_cfl_dt(b: &SpectralVectorField, safety: f64) -> f64 {
    let dx = b.grid().dx();
    safety * dx * dx / (PI * b.max_norm() + 1.0)
}

/// Advances `s` by exactly `cfg.dt`.
///
/// Without `adapt` a step above the CFL bound is refused; with it the interval
/// is split into equal substeps that respect the bound.
pub fn step(s: &MhdState, cfg: &IntegratorConfig) -> Result<MhdState, IntegratorError> {
    cfg.validate()?;
    let admissible = hall_cfl_dt(&s.b, cfg.cfl_safety);
    if cfg.dt <= admissible {
        return Ok(advance(s, cfg.dt, cfg.scheme, cfg.model));
    }
    if !cfg.adapt {
        return Err(IntegratorError::StepRejected {
            dt: cfg.dt,
            admissible,
        });
    }
    let t_target = s.t + cfg.dt;
    let mut cur = s.clone();
    while t_target - cur.t > 1e-12 * cfg.dt {
        let remaining = t_target - cur.t;
        let bound = hall_cfl_dt(&cur.b, cfg.cfl_safety);
        let pieces = (remaining / bound).ceil().max(1.0);
        cur = advance(&cur, remaining / pieces, cfg.scheme, cfg.model);
        if !cur.is_finite() {
            return Err(IntegratorError::BlowUp {
                t: cur.t,
                last_good: Box::new(s.clone()),
            });
        }
    }
    cur.t = t_target;
    Ok(cur)
}

/// Advances from `s0` to `cfg.t_end`, handing diagnostics to `sink` at the
/// initial time, every `diag_every` accepted steps and at the end.
///
/// Each step whose symmetric energy grows by more than [`ENERGY_TOL`]
/// relative is retried with half the step, up to [`MAX_HALVINGS`] times.
pub fn run(
    s0: &MhdState,
    cfg: &IntegratorConfig,
    sink: &mut dyn FnMut(&DiagnosticsRecord),
) -> Result<MhdState, IntegratorError> {
    cfg.validate()?;
    let mut s = s0.clone();
    sink(&diagnostics(&s));
    if cfg.t_end <= s.t {
        return Ok(s);
    }
    let t_end = cfg.t_end;
    let mut accepted = 0usize;
    let mut last_emitted = true;
    while t_end - s.t > 1e-9 * cfg.dt {
        let mut h = cfg.dt.min(t_end - s.t);
        let admissible = hall_cfl_dt(&s.b, cfg.cfl_safety);
        if h > admissible {
            if !cfg.adapt {
                return Err(IntegratorError::StepRejected { dt: h, admissible });
            }
            h = admissible;
        }
        let e0 = s.energy_sym();
        let mut halvings = 0;
        let next = loop {
            let trial = advance(&s, h, cfg.scheme, cfg.model);
            if !trial.is_finite() {
                return Err(IntegratorError::BlowUp {
                    t: trial.t,
                    last_good: Box::new(s),
                });
            }
            if trial.energy_sym() <= e0 * (1.0 + ENERGY_TOL) {
                break trial;
            }
            if halvings == MAX_HALVINGS {
                return Err(IntegratorError::EnergyIncrease { t: s.t, halvings });
            }
            halvings += 1;
            h *= 0.5;
        };
        s = next;
        if t_end - s.t <= 1e-9 * cfg.dt {
            s.t = t_end;
        }
        accepted += 1;
        last_emitted = accepted % cfg.diag_every == 0;
        if last_emitted {
            sink(&diagnostics(&s));
        }
    }
    if !last_emitted {
        sink(&diagnostics(&s));
    }
    Ok(s)
}

/// Nonlinear tendencies `(N_u, N_B)`.
fn nonlinear(s: &MhdState, model: Model) -> (SpectralVectorField, SpectralVectorField) {
    match model {
        Model::HallOnly => (
            SpectralVectorField::zeros(s.grid()),
            hall_nonlinearity(&s.b),
        ),
        Model::Coupled => coupled_nonlinearity(s),
    }
}

fn k2_factor(f: impl Fn(f64) -> f64) -> impl Fn([f64; 3]) -> f64 {
    move |k| f(4.0 * PI * PI * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]))
}

fn make(u: SpectralVectorField, b: SpectralVectorField, t: f64) -> MhdState {
    MhdState { u, b, t }
}

fn lin_comb(terms: &[(f64, &SpectralVectorField)]) -> SpectralVectorField {
    let mut out = terms[0].1 * terms[0].0;
    for (a, f) in &terms[1..] {
        out.axpy(*a, f);
    }
    out
}

fn advance(s: &MhdState, h: f64, scheme: Scheme, model: Model) -> MhdState {
    match scheme {
        Scheme::ImexEuler => imex_euler(s, h, model),
        Scheme::ImexRk2 => imex_rk2(s, h, model),
        Scheme::IntegratingFactorRk4 => if_rk4(s, h, model),
    }
}

fn imex_euler(s: &MhdState, h: f64, model: Model) -> MhdState {
    let (nu, nb) = nonlinear(s, model);
    let solve = k2_factor(|l| 1.0 / (1.0 + h * l));
    let u = lin_comb(&[(1.0, &s.u), (h, &nu)]).scale_modes(&solve);
    let b = lin_comb(&[(1.0, &s.b), (h, &nb)]).scale_modes(&solve);
    make(u, b, s.t + h)
}

/// Two-stage, second-order L-stable IMEX scheme with
/// `γ = 1 − 1/√2`, `δ = 1 − 1/(2γ)`.
fn imex_rk2(s: &MhdState, h: f64, model: Model) -> MhdState {
    let gamma = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
    let delta = 1.0 - 1.0 / (2.0 * gamma);
    let solve = k2_factor(|l| 1.0 / (1.0 + gamma * h * l));
    let lap = k2_factor(|l| -l);

    let (nu1, nb1) = nonlinear(s, model);
    let u2 = lin_comb(&[(1.0, &s.u), (gamma * h, &nu1)]).scale_modes(&solve);
    let b2 = lin_comb(&[(1.0, &s.b), (gamma * h, &nb1)]).scale_modes(&solve);
    let y2 = make(u2, b2, s.t + gamma * h);
    let (nu2, nb2) = nonlinear(&y2, model);

    let stage = |y: &SpectralVectorField,
                 n1: &SpectralVectorField,
                 n2: &SpectralVectorField,
                 y2: &SpectralVectorField| {
        let ly2 = y2.scale_modes(&lap);
        lin_comb(&[
            (1.0, y),
            (h * delta, n1),
            (h * (1.0 - delta), n2),
            (h * (1.0 - gamma), &ly2),
        ])
        .scale_modes(&solve)
    };
    let u = stage(&s.u, &nu1, &nu2, &y2.u);
    let b = stage(&s.b, &nb1, &nb2, &y2.b);
    make(u, b, s.t + h)
}

/// Classical RK4 on `v = e^{−Lt} y`, so diffusion is integrated exactly.
fn if_rk4(s: &MhdState, h: f64, model: Model) -> MhdState {
    let half = k2_factor(|l| (-0.5 * h * l).exp());
    let full = k2_factor(|l| (-h * l).exp());
    let e_half = |f: &SpectralVectorField| f.scale_modes(&half);
    let e_full = |f: &SpectralVectorField| f.scale_modes(&full);

    let (ku1, kb1) = nonlinear(s, model);
    let y2 = make(
        e_half(&lin_comb(&[(1.0, &s.u), (0.5 * h, &ku1)])),
        e_half(&lin_comb(&[(1.0, &s.b), (0.5 * h, &kb1)])),
        s.t + 0.5 * h,
    );
    let (ku2, kb2) = nonlinear(&y2, model);
    let (hu, hb) = (e_half(&s.u), e_half(&s.b));
    let y3 = make(
        lin_comb(&[(1.0, &hu), (0.5 * h, &ku2)]),
        lin_comb(&[(1.0, &hb), (0.5 * h, &kb2)]),
        s.t + 0.5 * h,
    );
    let (ku3, kb3) = nonlinear(&y3, model);
    let y4 = make(
        lin_comb(&[(1.0, &e_full(&s.u)), (h, &e_half(&ku3))]),
        lin_comb(&[(1.0, &e_full(&s.b)), (h, &e_half(&kb3))]),
        s.t + h,
    );
    let (ku4, kb4) = nonlinear(&y4, model);

    let combine = |y: &SpectralVectorField,
                   k1: &SpectralVectorField,
                   k2: &SpectralVectorField,
                   k3: &SpectralVectorField,
                   k4: &SpectralVectorField| {
        let mid = e_half(&(k2 + k3));
        lin_comb(&[
            (1.0, &e_full(y)),
            (h / 6.0, &e_full(k1)),
            (h / 3.0, &mid),
            (h / 6.0, k4),
        ])
    };
    make(
        combine(&s.u, &ku1, &ku2, &ku3, &ku4),
        combine(&s.b, &kb1, &kb2, &kb3, &kb4),
        s.t + h,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hall::single_mode_field;
    use crate::presets::{abc, random_solenoidal};
    use crate::spectral::{Grid3, RealVectorField};
    use std::f64::consts::TAU;

    fn hall_cfg(dt: f64, t_end: f64, scheme: Scheme) -> IntegratorConfig {
        IntegratorConfig::new(dt, t_end, scheme, Model::HallOnly)
    }

    #[test]
    fn beltrami_decay_is_exact_with_integrating_factor() {
        let g = Grid3::new(16).unwrap();
        let b0 = abc(&g, 0.02);
        let s0 = MhdState::hall_only(b0.clone(), 0.0);
        let mut cfg = hall_cfg(1e-3, 1e-3, Scheme::IntegratingFactorRk4);
        cfg.adapt = true;
        let s1 = step(&s0, &cfg).unwrap();
        let exact = &b0 * (-4.0 * PI * PI * 1e-3f64).exp();
        assert!((&s1.b - &exact).norm() <= 1e-10 * b0.norm());
        assert!((s1.t - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn zero_state_stays_zero() {
        let g = Grid3::new(8).unwrap();
        for scheme in [
            Scheme::ImexEuler,
            Scheme::ImexRk2,
            Scheme::IntegratingFactorRk4,
        ] {
            let mut cfg = IntegratorConfig::new(1e-3, 0.01, scheme, Model::Coupled);
            cfg.adapt = true;
            let out = run(&MhdState::zeros(&g), &cfg, &mut |_| {}).unwrap();
            assert_eq!(out.u.norm(), 0.0);
            assert_eq!(out.b.norm(), 0.0);
            assert!((out.t - 0.01).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_horizon_returns_initial_state() {
        let g = Grid3::new(8).unwrap();
        let s0 = MhdState::hall_only(random_solenoidal(&g, 1, 1.0, 2.0), 0.0);
        let mut n = 0;
        let out = run(&s0, &hall_cfg(1e-4, 0.0, Scheme::ImexRk2), &mut |_| n += 1).unwrap();
        assert_eq!(out, s0);
        assert_eq!(n, 1);
    }

    #[test]
    fn energy_never_increases() {
        let g = Grid3::new(16).unwrap();
        // sum of two non-parallel modes, so the Hall term is active
        let b0 = &single_mode_field(&g, [1, 0, 0]) + &single_mode_field(&g, [0, 1, 1]);
        let b0 = &b0 * 3.0;
        assert!(crate::hall::hall_nonlinearity(&b0).norm() > 1e-3);
        for scheme in [
            Scheme::ImexEuler,
            Scheme::ImexRk2,
            Scheme::IntegratingFactorRk4,
        ] {
            let mut cfg = hall_cfg(2e-4, 0.01, scheme);
            cfg.adapt = true;
            let mut energies = Vec::new();
            run(&MhdState::hall_only(b0.clone(), 0.0), &cfg, &mut |d| {
                energies.push(d.energy_sym)
            })
            .unwrap();
            assert!(energies.len() > 40);
            for w in energies.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + ENERGY_TOL));
            }
        }
    }

    #[test]
    fn cfl_bound_scaling() {
        let safety = 0.5;
        for n in [8, 16, 32] {
            let g = Grid3::new(n).unwrap();
            let dx = 1.0 / n as f64;
            let dt = hall_cfl_dt(&SpectralVectorField::zeros(&g), safety);
            assert!((dt - safety * dx * dx).abs() < 1e-18);
        }
        let b8 = abc(&Grid3::new(8).unwrap(), 1.0);
        let b16 = abc(&Grid3::new(16).unwrap(), 1.0);
        let ratio = hall_cfl_dt(&b8, 1.0) / hall_cfl_dt(&b16, 1.0);
        assert!((ratio - 4.0).abs() < 1e-12);
    }

    #[test]
    fn cfl_uses_grid_maximum() {
        let g = Grid3::new(16).unwrap();
        let f = |x: f64, y: f64, z: f64| {
            [
                (TAU * y).sin() + 0.3 * (2.0 * TAU * z).cos(),
                (TAU * z).sin(),
                (TAU * x).sin() * (TAU * y).cos(),
            ]
        };
        let b = SpectralVectorField::from_fn(&g, f);
        let direct = RealVectorField::from_fn(&g, f).max_norm();
        assert!((b.max_norm() - direct).abs() < 1e-12);
        let dt = hall_cfl_dt(&b, 1.0);
        let expect = (1.0 / 256.0) / (PI * direct + 1.0);
        assert!((dt - expect).abs() < 1e-15);
    }

    #[test]
    fn oversize_step_is_rejected_without_adapt() {
        let g = Grid3::new(16).unwrap();
        let s = MhdState::hall_only(abc(&g, 1.0), 0.0);
        let err = step(&s, &hall_cfg(1e-2, 1.0, Scheme::ImexRk2)).unwrap_err();
        match err {
            IntegratorError::StepRejected { admissible, .. } => {
                assert!((admissible - hall_cfl_dt(&s.b, 1.0)).abs() < 1e-18)
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = hall_cfg(-1.0, 1.0, Scheme::ImexRk2);
        assert!(cfg.validate().is_err());
        cfg.dt = 1e-3;
        cfg.cfl_safety = 1.5;
        assert!(cfg.validate().is_err());
        cfg.cfl_safety = 1.0;
        cfg.t_end = -1.0;
        assert!(cfg.validate().is_err());
    }

    fn self_convergence(
        scheme: Scheme,
        model: Model,
        s0: &MhdState,
        t: f64,
        dts: &[f64],
        refine: f64,
    ) -> Vec<f64> {
        let solve = |dt: f64| {
            let cfg = IntegratorConfig::new(dt, t, scheme, model);
            run(s0, &cfg, &mut |_| {}).unwrap()
        };
        let reference = solve(dts[dts.len() - 1] / refine);
        dts.iter()
            .map(|&dt| {
                let s = solve(dt);
                ((&s.u - &reference.u).norm_sq() + (&s.b - &reference.b).norm_sq()).sqrt()
            })
            .collect()
    }

    #[test]
    fn imex_rk2_is_second_order() {
        let g = Grid3::new(8).unwrap();
        let s0 = MhdState::new(
            random_solenoidal(&g, 1, 0.5, 2.0),
            random_solenoidal(&g, 2, 0.5, 2.0),
            0.0,
        )
        .unwrap();
        let e = self_convergence(
            Scheme::ImexRk2,
            Model::Coupled,
            &s0,
            0.02,
            &[2e-3, 1e-3, 5e-4],
            8.0,
        );
        for w in e.windows(2) {
            let r = w[0] / w[1];
            assert!((3.6..4.6).contains(&r), "ratio {r}");
        }
    }

    #[test]
    fn if_rk4_is_fourth_order() {
        let g = Grid3::new(8).unwrap();
        let s0 = MhdState::hall_only(random_solenoidal(&g, 3, 1.0, 2.0), 0.0);
        let e = self_convergence(
            Scheme::IntegratingFactorRk4,
            Model::HallOnly,
            &s0,
            0.02,
            &[2e-3, 1e-3, 5e-4],
            4.0,
        );
        for w in e.windows(2) {
            let r = w[0] / w[1];
            assert!((13.0..19.0).contains(&r), "ratio {r}");
        }
    }

    #[test]
    fn imex_euler_is_first_order() {
        let g = Grid3::new(8).unwrap();
        let s0 = MhdState::hall_only(random_solenoidal(&g, 4, 1.0, 2.0), 0.0);
        let e = self_convergence(
            Scheme::ImexEuler,
            Model::HallOnly,
            &s0,
            0.02,
            &[2e-3, 1e-3, 5e-4],
            64.0,
        );
        for w in e.windows(2) {
            let r = w[0] / w[1];
            assert!((1.7..2.3).contains(&r), "ratio {r}");
        }
    }

    #[test]
    fn divergence_drift_over_many_steps() {
        let g = Grid3::new(8).unwrap();
        let s0 = MhdState::new(
            random_solenoidal(&g, 5, 0.5, 2.0),
            random_solenoidal(&g, 6, 0.5, 2.0),
            0.0,
        )
        .unwrap();
        let cfg = IntegratorConfig::new(1e-4, 1.0, Scheme::ImexRk2, Model::Coupled);
        let mut worst: f64 = 0.0;
        let mut count = 0;
        run(&s0, &cfg, &mut |d| {
            count += 1;
            worst = worst.max(d.div_u_max).max(d.div_b_max);
        })
        .unwrap();
        assert!(count > 10_000);
        // relative to the initial field size
        assert!(worst <= 1e-10 * 0.5, "{worst}");
    }

    #[test]
    fn blow_up_reports_last_good_state() {
        let g = Grid3::new(8).unwrap();
        let mut b = abc(&g, 1.0);
        b.set(1, [num_complex::Complex64::new(f64::NAN, 0.0); 3]);
        let s = MhdState::hall_only(b, 0.0);
        let mut cfg = hall_cfg(1e-4, 1e-3, Scheme::ImexEuler);
        cfg.adapt = true;
        match run(&s, &cfg, &mut |_| {}) {
            Err(IntegratorError::BlowUp { last_good, .. }) => assert_eq!(last_good.t, 0.0),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }
}
