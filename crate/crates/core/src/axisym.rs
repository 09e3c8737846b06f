//! Axisymmetric fields `B = b e_θ + ∇×(ψ e_θ)` on an `(x, r)` grid.
//!
//! With `L = ∂²x + ∂²r + (1/r)∂r − 1/r²` and `j = −Lψ` the system reads
//!
//! ```text
//! ψ_t + (1/r²){rb, rψ} = Lψ
//! b_t + {j/r, rψ} − {b/r, rb} = Lb,        {a, c} = a_x c_r − a_r c_x
//! ```
//!
//! For `ψ = 0` the swirl obeys `b_t − (2/r) b b_x = Lb`, a viscous Burgers
//! equation at each radius.

use crate::hall::rhs_hall_only;
use crate::spectral::{inverse_transform, Grid3, SpectralError, SpectralVectorField};
use ndarray::Array2;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AxiError {
    #[error("invalid axisymmetric grid: {0}")]
    InvalidGrid(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite values at t = {t}")]
    BlowUp { t: f64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Periodic in `x ∈ [0, lx)`, cell-centred in `r ∈ (0, r_max]`:
/// `x_i = i Δx`, `r_j = (j + ½) Δr`.
#[derive(Clone, Debug, PartialEq)]
pub struct AxiGrid {
    pub nx: usize,
    pub nr: usize,
    pub lx: f64,
    pub r_max: f64,
}

impl AxiGrid {
    pub fn new(nx: usize, nr: usize, lx: f64, r_max: f64) -> Result<Self, AxiError> {
        if nx < 8 || nr < 8 {
            return Err(AxiError::InvalidGrid(format!(
                "need nx, nr >= 8, got {nx} x {nr}"
            )));
        }
        if !(lx > 0.0 && r_max > 0.0) || !lx.is_finite() || !r_max.is_finite() {
            return Err(AxiError::InvalidGrid(format!(
                "extents must be positive, got lx = {lx}, R = {r_max}"
            )));
        }
        Ok(Self { nx, nr, lx, r_max })
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dr(&self) -> f64 {
        self.r_max / self.nr as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn r(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dr()
    }

    /// Signed radius of padded column `jp` (column 0 is the ghost across the
    /// axis, column `nr + 1` the ghost beyond `R`).
    fn r_padded(&self, jp: usize) -> f64 {
        (jp as f64 - 0.5) * self.dr()
    }

    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Array2<f64> {
        Array2::from_shape_fn((self.nx, self.nr), |(i, j)| f(self.x(i), self.r(j)))
    }

    fn check(&self, f: &Array2<f64>) {
        assert_eq!(f.dim(), (self.nx, self.nr), "array does not match the grid");
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AxiState {
    pub psi: Array2<f64>,
    pub b: Array2<f64>,
    pub t: f64,
}

impl AxiState {
    pub fn swirl(grid: &AxiGrid, b: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            psi: Array2::zeros((grid.nx, grid.nr)),
            b: grid.sample(b),
            t: 0.0,
        }
    }

    /// Azimuthal current `j = −Lψ`.
    pub fn current(&self, grid: &AxiGrid) -> Array2<f64> {
        operator_l(grid, &self.psi).mapv(|v| -v)
    }

    pub fn is_finite(&self) -> bool {
        self.psi.iter().chain(self.b.iter()).all(|v| v.is_finite())
    }
}

/// Pads `f` by one cell on every side: periodic in `x`, odd across the axis
/// and odd about `R` (homogeneous Dirichlet).
fn padded(grid: &AxiGrid, f: &Array2<f64>) -> Array2<f64> {
    let (nx, nr) = (grid.nx, grid.nr);
    let mut p = Array2::zeros((nx + 2, nr + 2));
    for ip in 0..nx + 2 {
        let i = (ip + nx - 1) % nx;
        for j in 0..nr {
            p[[ip, j + 1]] = f[[i, j]];
        }
        p[[ip, 0]] = -f[[i, 0]];
        p[[ip, nr + 1]] = -f[[i, nr - 1]];
    }
    p
}

/// `g(r, f)` evaluated on the padded array with signed ghost radii.
fn composite(grid: &AxiGrid, fp: &Array2<f64>, g: impl Fn(f64, f64) -> f64) -> Array2<f64> {
    Array2::from_shape_fn(fp.dim(), |(ip, jp)| g(grid.r_padded(jp), fp[[ip, jp]]))
}

/// `∂²x + ∂²r + (1/r)∂r − 1/r²` with second-order centred differences.
pub fn operator_l(grid: &AxiGrid, f: &Array2<f64>) -> Array2<f64> {
    grid.check(f);
    let p = padded(grid, f);
    let (dx, dr) = (grid.dx(), grid.dr());
    Array2::from_shape_fn((grid.nx, grid.nr), |(i, j)| {
        let (ip, jp) = (i + 1, j + 1);
        let r = grid.r(j);
        let c = p[[ip, jp]];
        let fxx = (p[[ip + 1, jp]] - 2.0 * c + p[[ip - 1, jp]]) / (dx * dx);
        let frr = (p[[ip, jp + 1]] - 2.0 * c + p[[ip, jp - 1]]) / (dr * dr);
        let fr = (p[[ip, jp + 1]] - p[[ip, jp - 1]]) / (2.0 * dr);
        fxx + frr + fr / r - c / (r * r)
    })
}

/// `{a, c} = a_x c_r − a_r c_x` of two padded arrays, on the interior.
fn bracket(grid: &AxiGrid, a: &Array2<f64>, c: &Array2<f64>) -> Array2<f64> {
    let (dx, dr) = (grid.dx(), grid.dr());
    Array2::from_shape_fn((grid.nx, grid.nr), |(i, j)| {
        let (ip, jp) = (i + 1, j + 1);
        let ax = (a[[ip + 1, jp]] - a[[ip - 1, jp]]) / (2.0 * dx);
        let ar = (a[[ip, jp + 1]] - a[[ip, jp - 1]]) / (2.0 * dr);
        let cx = (c[[ip + 1, jp]] - c[[ip - 1, jp]]) / (2.0 * dx);
        let cr = (c[[ip, jp + 1]] - c[[ip, jp - 1]]) / (2.0 * dr);
        ax * cr - ar * cx
    })
}

/// `(ψ_t, b_t)`.
pub fn rhs_axi(grid: &AxiGrid, s: &AxiState) -> (Array2<f64>, Array2<f64>) {
    grid.check(&s.psi);
    grid.check(&s.b);
    let psi_p = padded(grid, &s.psi);
    let b_p = padded(grid, &s.b);
    let r_psi = composite(grid, &psi_p, |r, v| r * v);
    let r_b = composite(grid, &b_p, |r, v| r * v);
    let b_over_r = composite(grid, &b_p, |r, v| v / r);

    let lpsi = operator_l(grid, &s.psi);
    let j = lpsi.mapv(|v| -v);
    let j_over_r = composite(grid, &padded(grid, &j), |r, v| v / r);

    let mut dpsi = bracket(grid, &r_b, &r_psi);
    for ((i, jj), v) in dpsi.indexed_iter_mut() {
        let r = grid.r(jj);
        *v = lpsi[[i, jj]] - *v / (r * r);
    }
    let db =
        operator_l(grid, &s.b) - bracket(grid, &j_over_r, &r_psi) + bracket(grid, &b_over_r, &r_b);
    (dpsi, db)
}

/// Explicit step bound: diffusion, swirl advection `2b/r` and whistlers.
pub fn axi_stable_dt(grid: &AxiGrid, s: &AxiState, safety: f64) -> f64 {
    let (dx, dr) = (grid.dx(), grid.dr());
    let h = dx.min(dr);
    // largest eigenvalue of −L, including 1/r² at the first cell
    let lam = 4.0 / (dx * dx) + 8.0 / (dr * dr);
    let mut adv: f64 = 0.0;
    for ((_, j), v) in s.b.indexed_iter() {
        adv = adv.max(2.0 * v.abs() / grid.r(j));
    }
    let pol = poloidal_max(grid, &s.psi);
    let bmax = s.b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(pol);
    let mut dt = 2.0 / lam;
    if adv > 0.0 {
        dt = dt.min(h / adv);
    }
    if pol > 0.0 {
        dt = dt.min(h * h / (std::f64::consts::PI * bmax));
    }
    safety * dt
}

/// Largest poloidal field strength `|∇×(ψ e_θ)| = sqrt(ψ_x² + ((rψ)_r / r)²)`.
fn poloidal_max(grid: &AxiGrid, psi: &Array2<f64>) -> f64 {
    let p = padded(grid, psi);
    let rp = composite(grid, &p, |r, v| r * v);
    let (dx, dr) = (grid.dx(), grid.dr());
    let mut m: f64 = 0.0;
    for i in 0..grid.nx {
        for j in 0..grid.nr {
            let (ip, jp) = (i + 1, j + 1);
            let bx = (rp[[ip, jp + 1]] - rp[[ip, jp - 1]]) / (2.0 * dr * grid.r(j));
            let br = -(p[[ip + 1, jp]] - p[[ip - 1, jp]]) / (2.0 * dx);
            m = m.max((bx * bx + br * br).sqrt());
        }
    }
    m
}

#[derive(Clone, Debug, PartialEq)]
pub struct AxiRunConfig {
    pub t_end: f64,
    /// Fraction of the explicit stability bound used per step.
    pub safety: f64,
    /// Call the sink every this many steps.
    pub every: usize,
}

impl Default for AxiRunConfig {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            safety: 0.4,
            every: 100,
        }
    }
}

/// Heun (explicit RK2) integration to `cfg.t_end`. The sink sees the initial
/// state, every `cfg.every` steps and the final state.
pub fn run_axi(
    grid: &AxiGrid,
    s0: &AxiState,
    cfg: &AxiRunConfig,
    sink: &mut dyn FnMut(&AxiState),
) -> Result<AxiState, AxiError> {
    if !(cfg.safety > 0.0 && cfg.safety <= 1.0) || !(cfg.t_end >= 0.0) || cfg.every == 0 {
        return Err(AxiError::Config(format!("bad run settings {cfg:?}")));
    }
    let mut s = s0.clone();
    sink(&s);
    let mut steps = 0usize;
    while cfg.t_end - s.t > 1e-12 * cfg.t_end.max(1e-300) {
        let dt = axi_stable_dt(grid, &s, cfg.safety).min(cfg.t_end - s.t);
        let (p1, b1) = rhs_axi(grid, &s);
        let mid = AxiState {
            psi: &s.psi + &(&p1 * dt),
            b: &s.b + &(&b1 * dt),
            t: s.t + dt,
        };
        let (p2, b2) = rhs_axi(grid, &mid);
        s = AxiState {
            psi: &s.psi + &((&p1 + &p2) * (0.5 * dt)),
            b: &s.b + &((&b1 + &b2) * (0.5 * dt)),
            t: s.t + dt,
        };
        if !s.is_finite() {
            return Err(AxiError::BlowUp { t: s.t });
        }
        steps += 1;
        if steps % cfg.every == 0 {
            sink(&s);
        }
    }
    s.t = cfg.t_end.max(s0.t);
    if steps % cfg.every != 0 {
        sink(&s);
    }
    Ok(s)
}

/// Viscosity of the one-dimensional swirl runs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KmcViscosity {
    /// `ν = 2Δx`, the grid-scale stand-in for the inviscid limit.
    InviscidLimit,
    Value(f64),
}

/// `b_t − (2/r0) b b_x = ν b_xx` on `[0, lx]` with zero-gradient ends.
#[derive(Clone, Debug, PartialEq)]
pub struct KmcConfig {
    pub b_left: f64,
    pub b_right: f64,
    pub r0: f64,
    pub nx: usize,
    pub lx: f64,
    pub t_end: f64,
    pub viscosity: KmcViscosity,
    /// Number of stored profiles (besides the initial one).
    pub samples: usize,
}

impl KmcConfig {
    pub fn riemann(b_left: f64, b_right: f64, r0: f64) -> Self {
        Self {
            b_left,
            b_right,
            r0,
            nx: 1024,
            lx: 4.0,
            t_end: 0.5,
            viscosity: KmcViscosity::InviscidLimit,
            samples: 50,
        }
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn nu(&self) -> f64 {
        match self.viscosity {
            KmcViscosity::InviscidLimit => 2.0 * self.dx(),
            KmcViscosity::Value(v) => v,
        }
    }

    /// Cell centres `(i + ½) Δx`.
    pub fn x(&self) -> Vec<f64> {
        (0..self.nx).map(|i| (i as f64 + 0.5) * self.dx()).collect()
    }

    /// Rankine–Hugoniot speed `−(b_L + b_R)/r0` of the flux `−b²/r0`.
    pub fn rh_speed(&self) -> f64 {
        -(self.b_left + self.b_right) / self.r0
    }

    fn validate(&self) -> Result<(), AxiError> {
        let nu = self.nu();
        if self.nx < 8 || !(self.lx > 0.0) || !(self.r0 > 0.0) || !(self.t_end >= 0.0) {
            return Err(AxiError::Config(format!(
                "need nx >= 8, lx > 0, r0 > 0, t_end >= 0 (got {}, {}, {}, {})",
                self.nx, self.lx, self.r0, self.t_end
            )));
        }
        if !(nu > 0.0) {
            return Err(AxiError::Config(format!(
                "viscosity must be positive, got {nu}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KmcResult {
    pub x: Vec<f64>,
    pub times: Vec<f64>,
    pub profiles: Vec<Vec<f64>>,
    /// Midpoint level-set position after every step.
    pub front: Vec<(f64, f64)>,
    /// Least-squares front speed over the second half of the run.
    pub speed: Option<f64>,
    /// Set when the front left the domain before `t_end`.
    pub warning: Option<String>,
}

/// Riemann problem for the frozen-radius swirl equation.
pub fn run_kmc(cfg: &KmcConfig) -> Result<KmcResult, AxiError> {
    cfg.validate()?;
    let half = 0.5 * cfg.lx;
    let b0: Vec<f64> = cfg
        .x()
        .iter()
        .map(|&x| if x < half { cfg.b_left } else { cfg.b_right })
        .collect();
    let level = 0.5 * (cfg.b_left + cfg.b_right);
    let track = cfg.b_left != cfg.b_right;
    evolve_swirl_1d(cfg, b0, track.then_some(level))
}

/// Integrates from an arbitrary initial profile; `level` selects the tracked
/// level set.
pub fn evolve_swirl_1d(
    cfg: &KmcConfig,
    b0: Vec<f64>,
    level: Option<f64>,
) -> Result<KmcResult, AxiError> {
    cfg.validate()?;
    if b0.len() != cfg.nx {
        return Err(AxiError::Config(format!(
            "profile has {} points, grid has {}",
            b0.len(),
            cfg.nx
        )));
    }
    let (dx, nu, r0) = (cfg.dx(), cfg.nu(), cfg.r0);
    let x = cfg.x();
    let mut b = b0;
    let mut t = 0.0;
    let mut times = vec![0.0];
    let mut profiles = vec![b.clone()];
    let mut front = Vec::new();
    let mut lost = false;
    if let Some(m) = level {
        if let Some(p) = crossing(&x, &b, m) {
            front.push((0.0, p));
        }
    }
    let sample_dt = cfg.t_end / cfg.samples.max(1) as f64;
    let mut next_sample = sample_dt;

    let rhs = |b: &[f64]| -> Vec<f64> {
        let n = b.len();
        let at = |i: isize| b[i.clamp(0, n as isize - 1) as usize];
        (0..n as isize)
            .map(|i| {
                // conservative form b_t + (−b²/r0)_x = ν b_xx
                let fp = -at(i + 1) * at(i + 1) / r0;
                let fm = -at(i - 1) * at(i - 1) / r0;
                -(fp - fm) / (2.0 * dx) + nu * (at(i + 1) - 2.0 * at(i) + at(i - 1)) / (dx * dx)
            })
            .collect()
    };

    while cfg.t_end - t > 1e-12 * cfg.t_end.max(1e-300) {
        let bmax = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut dt = dx * dx / nu;
        if bmax > 0.0 {
            dt = dt.min(dx * r0 / (2.0 * bmax));
        }
        let dt = (0.4 * dt).min(cfg.t_end - t);
        let k1 = rhs(&b);
        let mid: Vec<f64> = b.iter().zip(&k1).map(|(v, k)| v + dt * k).collect();
        let k2 = rhs(&mid);
        for i in 0..b.len() {
            b[i] += 0.5 * dt * (k1[i] + k2[i]);
        }
        t += dt;
        if b.iter().any(|v| !v.is_finite()) {
            return Err(AxiError::BlowUp { t });
        }
        if let Some(m) = level {
            match crossing(&x, &b, m) {
                Some(p) if !lost => front.push((t, p)),
                _ => lost = true,
            }
        }
        if t >= next_sample - 1e-12 * sample_dt || cfg.t_end - t <= 1e-12 * cfg.t_end {
            times.push(t);
            profiles.push(b.clone());
            next_sample += sample_dt;
        }
    }

    let second_half: Vec<(f64, f64)> = front
        .iter()
        .copied()
        .filter(|(ft, _)| *ft >= 0.5 * cfg.t_end)
        .collect();
    let speed = level.and_then(|_| fit_slope(&second_half));
    let warning = lost.then(|| {
        format!(
            "front left the domain before t = {}; speed fitted on {} partial samples",
            cfg.t_end,
            second_half.len()
        )
    });
    Ok(KmcResult {
        x,
        times,
        profiles,
        front,
        speed,
        warning,
    })
}

/// First position where the piecewise-linear profile crosses `level`, not
/// counting the end cells.
fn crossing(x: &[f64], b: &[f64], level: f64) -> Option<f64> {
    for i in 0..b.len() - 1 {
        let (a, c) = (b[i] - level, b[i + 1] - level);
        if a == 0.0 && c == 0.0 {
            continue;
        }
        if a * c <= 0.0 && (i > 0 || a != 0.0) && (i + 2 < b.len() || c != 0.0) {
            let w = a / (a - c);
            return Some(x[i] + w * (x[i + 1] - x[i]));
        }
    }
    None
}

fn fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mx = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - mx)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Radial window `½(1 − tanh((r − radius)/width))` used to embed a swirl
/// profile in the periodic box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwirlWindow {
    pub radius: f64,
    pub width: f64,
}

impl SwirlWindow {
    pub fn weight(&self, r: f64) -> f64 {
        0.5 * (1.0 - ((r - self.radius) / self.width).tanh())
    }

    /// Radius inside which the window is treated as flat.
    pub fn interior(&self) -> f64 {
        self.radius - 3.0 * self.width
    }
}

/// Embeds `B = b(x, r) W(r) e_θ` in the unit box with the symmetry axis
/// along `x`, evaluates the three-dimensional Hall-plus-diffusion right-hand
/// side and compares its `θ` component with the axisymmetric one.
///
/// Returns `max |Δ| / scale` over grid points with `r <= window.interior()`,
/// where `scale` is the larger of `max |b_t|` and `max |b| / r_int²` there
/// (the latter keeps steady profiles from dividing by zero).
pub fn swirl_consistency_check(
    b0: &dyn Fn(f64, f64) -> f64,
    grid3: &Grid3,
    axi: &AxiGrid,
    window: SwirlWindow,
) -> Result<f64, AxiError> {
    let r_int = window.interior();
    if !(window.width > 0.0) || r_int < 0.25 * 0.5 || window.radius + 3.0 * window.width > 0.5 {
        return Err(AxiError::Config(format!(
            "window {window:?} leaves less than 25% interior margin in the half box"
        )));
    }
    if (axi.lx - grid3.side()).abs() > 1e-12 {
        return Err(AxiError::Config(format!(
            "axial period {} must equal the box side",
            axi.lx
        )));
    }
    if axi.r_max < r_int {
        return Err(AxiError::Config(format!(
            "axisymmetric domain R = {} does not cover the interior radius {r_int}",
            axi.r_max
        )));
    }
    let profile = |x: f64, r: f64| b0(x, r) * window.weight(r);

    let n = grid3.n();
    // the axis sits at a cell centre so no grid point lies on it
    let c = 0.5 + 0.5 / n as f64;
    let b3 = SpectralVectorField::from_fn(grid3, |x, y, z| {
        let (dy, dz) = (y - c, z - c);
        let r = (dy * dy + dz * dz).sqrt();
        let v = profile(x, r) / r;
        [0.0, -dz * v, dy * v]
    });
    let rhs3 = inverse_transform(&rhs_hall_only(&b3));

    let state = AxiState::swirl(axi, profile);
    let (_, db) = rhs_axi(axi, &state);
    let db = padded(axi, &db);

    let mut worst: f64 = 0.0;
    let mut rate: f64 = 0.0;
    let mut bmax: f64 = 0.0;
    for i in 0..n {
        let x = i as f64 / n as f64;
        for j in 0..n {
            for l in 0..n {
                let (dy, dz) = (j as f64 / n as f64 - c, l as f64 / n as f64 - c);
                let r = (dy * dy + dz * dz).sqrt();
                if r > r_int {
                    continue;
                }
                let theta = (-dz * rhs3.values[[1, i, j, l]] + dy * rhs3.values[[2, i, j, l]]) / r;
                let axi_val = interp(axi, &db, x, r);
                worst = worst.max((theta - axi_val).abs());
                rate = rate.max(axi_val.abs());
                bmax = bmax.max(profile(x, r).abs());
            }
        }
    }
    let scale = rate.max(bmax / (r_int * r_int));
    Ok(if scale == 0.0 { worst } else { worst / scale })
}

/// Bilinear interpolation in a padded array.
fn interp(grid: &AxiGrid, p: &Array2<f64>, x: f64, r: f64) -> f64 {
    let fx = (x / grid.dx()).rem_euclid(grid.nx as f64);
    let i0 = fx.floor() as usize % grid.nx;
    let i1 = (i0 + 1) % grid.nx;
    let wx = fx - fx.floor();
    // padded column jp sits at (jp − ½) Δr
    let fr = r / grid.dr() + 0.5;
    let jp0 = (fr.floor() as usize).min(grid.nr);
    let wr = fr - jp0 as f64;
    let at = |i: usize, jp: usize| p[[i + 1, jp]];
    let lo = at(i0, jp0) * (1.0 - wr) + at(i0, jp0 + 1) * wr;
    let hi = at(i1, jp0) * (1.0 - wr) + at(i1, jp0 + 1) * wr;
    lo * (1.0 - wx) + hi * wx
}
