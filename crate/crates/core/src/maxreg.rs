//! Maxwell-regularized non-resistive Hall problem.
//!
//! Restoring the displacement current gives
//!
//! ```text
//! ∂t B + ∇×E = 0,      −ε ∂t E + ∇×B = j,      E = j×B,  E·B = 0
//! ```
//!
//! Away from magnetic nulls `j = (B×E)/|B|² + λB`, and the multiplier
//! `λ = (−ε (∇×E)·E + (∇×B)·B)/|B|²` is the one value that keeps `E·B`
//! constant in time.

use crate::hall::hall_nonlinearity;
use crate::spectral::{
    cross, curl, dot, from_product, product_scalar_to_native, to_product, Grid3, ProductField,
    SpectralError, SpectralVectorField,
};
use ndarray::Array3;
use thiserror::Error;

/// Relative floor on `|B|²` below which a point counts as a magnetic null.
pub const NULL_FLOOR: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaxRegError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("magnetic null: min |B|² = {min:e} is below the floor {floor:e}")]
    MagneticNull { min: f64, floor: f64 },
    #[error("{0}; use the (B, E) formulation instead")]
    Formulation(String),
    #[error("non-finite values at t = {t}")]
    BlowUp { t: f64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxwellRegState {
    pub b: SpectralVectorField,
    pub e: SpectralVectorField,
    pub eps: f64,
    pub t: f64,
}

/// Initial electric field.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialE {
    /// `E0 = (∇×B0)×B0`, orthogonal to `B0` by construction.
    WellPrepared,
    /// A given field, made orthogonal to `B0` pointwise before use.
    Given(SpectralVectorField),
}

impl MaxwellRegState {
    pub fn new(b: SpectralVectorField, init: InitialE, eps: f64) -> Result<Self, MaxRegError> {
        check_eps(eps)?;
        let phys = to_product(&[&b, &curl(&b)]);
        let (bp, jp) = (&phys[0], &phys[1]);
        check_nulls(bp)?;
        let e = match init {
            InitialE::WellPrepared => {
                let e = ProductField::from_fn(bp.len(), |p| cross(jp.at(p), bp.at(p)));
                from_product(b.grid(), &[e]).pop().expect("one field")
            }
            InitialE::Given(e0) => {
                b.grid().check_same(e0.grid())?;
                let ep = to_product(&[&e0]).pop().expect("one field");
                let e = ProductField::from_fn(bp.len(), |p| {
                    let (bb, ee) = (bp.at(p), ep.at(p));
                    let s = dot(ee, bb) / dot(bb, bb);
                    [ee[0] - s * bb[0], ee[1] - s * bb[1], ee[2] - s * bb[2]]
                });
                from_product(b.grid(), &[e]).pop().expect("one field")
            }
        };
        Ok(Self { b, e, eps, t: 0.0 })
    }

    pub fn grid(&self) -> &Grid3 {
        self.b.grid()
    }

    /// `½‖B‖² + ½ε‖E‖²`
    pub fn energy(&self) -> f64 {
        0.5 * self.b.norm_sq() + 0.5 * self.eps * self.e.norm_sq()
    }

    /// `max_x |E·B|` on the product grid.
    pub fn constraint(&self) -> f64 {
        let phys = to_product(&[&self.b, &self.e]);
        (0..phys[0].len())
            .map(|p| dot(phys[0].at(p), phys[1].at(p)).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.b.is_finite() && self.e.is_finite()
    }
}

fn check_eps(eps: f64) -> Result<(), MaxRegError> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(MaxRegError::Parameter(format!(
            "eps must be positive, got {eps}"
        )))
    }
}

fn check_nulls(b: &ProductField) -> Result<(), MaxRegError> {
    let n = b.len();
    let (mut min, mut mean) = (f64::INFINITY, 0.0);
    for p in 0..n {
        let b2 = dot(b.at(p), b.at(p));
        min = min.min(b2);
        mean += b2;
    }
    mean /= n as f64;
    let floor = NULL_FLOOR * mean;
    if min < floor || mean == 0.0 {
        return Err(MaxRegError::MagneticNull { min, floor });
    }
    Ok(())
}

/// Physical-space ingredients of the right-hand side on the product grid.
struct Pointwise {
    b: ProductField,
    e: ProductField,
    curl_b: ProductField,
    curl_e: ProductField,
}

impl Pointwise {
    fn new(b: &SpectralVectorField, e: &SpectralVectorField) -> Result<Self, MaxRegError> {
        let mut phys = to_product(&[b, e, &curl(b), &curl(e)]).into_iter();
        let mut next = || phys.next().expect("four fields");
        let out = Self {
            b: next(),
            e: next(),
            curl_b: next(),
            curl_e: next(),
        };
        check_nulls(&out.b)?;
        Ok(out)
    }

    fn lambda(&self, p: usize, eps: f64) -> f64 {
        let b = self.b.at(p);
        (-eps * dot(self.curl_e.at(p), self.e.at(p)) + dot(self.curl_b.at(p), b)) / dot(b, b)
    }

    /// `j = (B×E)/|B|² + λB`
    fn current(&self, p: usize, lambda: f64) -> [f64; 3] {
        let b = self.b.at(p);
        let b2 = dot(b, b);
        let bxe = cross(b, self.e.at(p));
        std::array::from_fn(|c| bxe[c] / b2 + lambda * b[c])
    }

    /// `(1/ε)(∇×B − j)`
    fn de(&self, p: usize, eps: f64, lambda: f64) -> [f64; 3] {
        let j = self.current(p, lambda);
        let cb = self.curl_b.at(p);
        std::array::from_fn(|c| (cb[c] - j[c]) / eps)
    }
}

/// `λ` on the native grid, evaluated on the product grid and truncated.
pub fn lambda_multiplier(s: &MaxwellRegState) -> Result<Array3<f64>, MaxRegError> {
    lambda_with_eps(s, s.eps)
}

/// Same as [`lambda_multiplier`] with an explicit `ε`; `ε = 0` drops the
/// electric term.
pub fn lambda_with_eps(s: &MaxwellRegState, eps: f64) -> Result<Array3<f64>, MaxRegError> {
    let pw = Pointwise::new(&s.b, &s.e)?;
    let lam: Vec<f64> = (0..pw.b.len()).map(|p| pw.lambda(p, eps)).collect();
    Ok(product_scalar_to_native(s.grid(), &lam))
}

/// `(∂t B, ∂t E)` of the `(B, E)` system.
pub fn rhs_be(
    s: &MaxwellRegState,
) -> Result<(SpectralVectorField, SpectralVectorField), MaxRegError> {
    check_eps(s.eps)?;
    let pw = Pointwise::new(&s.b, &s.e)?;
    let de = ProductField::from_fn(pw.b.len(), |p| pw.de(p, s.eps, pw.lambda(p, s.eps)));
    let de = from_product(s.grid(), &[de]).pop().expect("one field");
    Ok((-&curl(&s.e), de))
}

/// Largest pointwise `|∂t(E·B)|` implied by the right-hand side, before the
/// truncation of `∂t E`. Zero up to round-off for any admissible state.
pub fn constraint_rate(s: &MaxwellRegState) -> Result<f64, MaxRegError> {
    let pw = Pointwise::new(&s.b, &s.e)?;
    let mut worst: f64 = 0.0;
    for p in 0..pw.b.len() {
        let de = pw.de(p, s.eps, pw.lambda(p, s.eps));
        let ce = pw.curl_e.at(p);
        let db = [-ce[0], -ce[1], -ce[2]];
        worst = worst.max((dot(de, pw.b.at(p)) + dot(pw.e.at(p), db)).abs());
    }
    Ok(worst)
}

/// `⟨E, j⟩` with `j` the recovered current; the energy
/// `½‖B‖² + ½ε‖E‖²` decays at exactly this rate.
pub fn current_power(s: &MaxwellRegState) -> Result<f64, MaxRegError> {
    let pw = Pointwise::new(&s.b, &s.e)?;
    let j = ProductField::from_fn(pw.b.len(), |p| pw.current(p, pw.lambda(p, s.eps)));
    let j = from_product(s.grid(), &[j]).pop().expect("one field");
    Ok(crate::spectral::inner_product(&s.e, &j)?)
}

/// `(∂t B, ∂t G)` of the `(B, G = j×B)` formulation, with the current
/// rebuilt as `j = (B×G)/|B|² + ((∇×B)·B/|B|²) B`.
pub fn rhs_bj(
    b: &SpectralVectorField,
    g: &SpectralVectorField,
    eps: f64,
) -> Result<(SpectralVectorField, SpectralVectorField), MaxRegError> {
    check_eps(eps)?;
    let pw = Pointwise::new(b, g).map_err(|err| match err {
        MaxRegError::MagneticNull { min, .. } => {
            MaxRegError::Formulation(format!("cannot recover j from j×B where |B|² = {min:e}"))
        }
        other => other,
    })?;
    // the (B, j) current has no ε-correction in its parallel part
    let dg = ProductField::from_fn(pw.b.len(), |p| pw.de(p, eps, pw.lambda(p, 0.0)));
    let dg = from_product(b.grid(), &[dg]).pop().expect("one field");
    Ok((-&curl(g), dg))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExplicitScheme {
    /// Heun's method.
    Rk2,
    /// Classical fourth-order Runge–Kutta.
    Rk4,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxRegRunConfig {
    pub t_end: f64,
    /// Fraction of `ε Δx` used as the step.
    pub eps_cfl: f64,
    /// Extra bound from the Hall dispersion, as a multiple of
    /// `Δx² / (π max|B|)`; `None` disables it.
    pub hall_cfl: Option<f64>,
    pub scheme: ExplicitScheme,
}

impl Default for MaxRegRunConfig {
    fn default() -> Self {
        Self {
            t_end: 0.05,
            eps_cfl: 0.5,
            hall_cfl: Some(0.5),
            scheme: ExplicitScheme::Rk2,
        }
    }
}

impl MaxRegRunConfig {
    /// Number of equal steps covering `[0, t_end]` for the given `ε` and
    /// initial field.
    pub fn steps(&self, eps: f64, b0: &SpectralVectorField) -> usize {
        if self.t_end == 0.0 {
            return 0;
        }
        let dx = b0.grid().dx();
        let mut dt = self.eps_cfl * eps * dx;
        if let Some(c) = self.hall_cfl {
            let bmax = b0.max_norm();
            if bmax > 0.0 {
                dt = dt.min(c * dx * dx / (std::f64::consts::PI * bmax));
            }
        }
        (self.t_end / dt).ceil().max(1.0) as usize
    }
}

fn explicit_step<S: Clone>(
    y: &S,
    h: f64,
    scheme: ExplicitScheme,
    f: &dyn Fn(&S) -> Result<S, MaxRegError>,
    axpy: &dyn Fn(&S, f64, &S) -> S,
) -> Result<S, MaxRegError> {
    match scheme {
        ExplicitScheme::Rk2 => {
            let k1 = f(y)?;
            let k2 = f(&axpy(y, h, &k1))?;
            Ok(axpy(&axpy(y, 0.5 * h, &k1), 0.5 * h, &k2))
        }
        ExplicitScheme::Rk4 => {
            let k1 = f(y)?;
            let k2 = f(&axpy(y, 0.5 * h, &k1))?;
            let k3 = f(&axpy(y, 0.5 * h, &k2))?;
            let k4 = f(&axpy(y, h, &k3))?;
            let mut out = axpy(y, h / 6.0, &k1);
            out = axpy(&out, h / 3.0, &k2);
            out = axpy(&out, h / 3.0, &k3);
            Ok(axpy(&out, h / 6.0, &k4))
        }
    }
}

type Pair = (SpectralVectorField, SpectralVectorField);

fn pair_axpy(y: &Pair, a: f64, k: &Pair) -> Pair {
    let mut out = y.clone();
    out.0.axpy(a, &k.0);
    out.1.axpy(a, &k.1);
    out
}

/// Advances the `(B, E)` system with `steps` equal steps to `cfg.t_end`,
/// reporting each accepted state to `sink`.
pub fn run_maxreg(
    s0: &MaxwellRegState,
    cfg: &MaxRegRunConfig,
    steps: usize,
    sink: &mut dyn FnMut(&MaxwellRegState),
) -> Result<MaxwellRegState, MaxRegError> {
    check_eps(s0.eps)?;
    sink(s0);
    if steps == 0 {
        return Ok(s0.clone());
    }
    let h = (cfg.t_end - s0.t) / steps as f64;
    let eps = s0.eps;
    let rhs = |y: &Pair| -> Result<Pair, MaxRegError> {
        let st = MaxwellRegState {
            b: y.0.clone(),
            e: y.1.clone(),
            eps,
            t: 0.0,
        };
        rhs_be(&st)
    };
    let mut y = (s0.b.clone(), s0.e.clone());
    let mut s = s0.clone();
    for i in 1..=steps {
        y = explicit_step(&y, h, cfg.scheme, &rhs, &pair_axpy)?;
        s = MaxwellRegState {
            b: y.0.clone(),
            e: y.1.clone(),
            eps,
            t: s0.t + i as f64 * h,
        };
        if !s.is_finite() {
            return Err(MaxRegError::BlowUp { t: s.t });
        }
        sink(&s);
    }
    Ok(s)
}

/// Non-resistive Hall reference `∂t B = −∇×((∇×B)×B)` with the same scheme
/// and step count.
pub fn run_hall_reference(
    b0: &SpectralVectorField,
    cfg: &MaxRegRunConfig,
    steps: usize,
) -> Result<SpectralVectorField, MaxRegError> {
    if steps == 0 {
        return Ok(b0.clone());
    }
    let h = cfg.t_end / steps as f64;
    let rhs = |b: &SpectralVectorField| Ok(hall_nonlinearity(b));
    let axpy = |y: &SpectralVectorField, a: f64, k: &SpectralVectorField| {
        let mut out = y.clone();
        out.axpy(a, k);
        out
    };
    let mut b = b0.clone();
    for _ in 0..steps {
        b = explicit_step(&b, h, cfg.scheme, &rhs, &axpy)?;
        if !b.is_finite() {
            return Err(MaxRegError::BlowUp { t: f64::NAN });
        }
    }
    Ok(b)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    pub eps: f64,
    pub steps: usize,
    /// `‖B_ε(t_end) − B_Hall(t_end)‖`, or the failure message.
    pub deviation: Result<f64, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
    /// Least-squares slope of `log deviation` against `log ε`.
    pub order: Option<f64>,
}

impl StudyReport {
    /// Whether the successful deviations decrease strictly with `ε`.
    pub fn monotone(&self) -> bool {
        let mut ok: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter_map(|r| r.deviation.as_ref().ok().map(|d| (r.eps, *d)))
            .collect();
        ok.sort_by(|a, b| b.0.total_cmp(&a.0));
        ok.windows(2).all(|w| w[1].1 < w[0].1)
    }
}

/// Runs the `(B, E)` system for every `ε` and compares with the Hall
/// reference at the matching step count. Runs are spread over `threads`
/// workers; results do not depend on the thread count.
pub fn eps_convergence_study(
    b0: &SpectralVectorField,
    eps_list: &[f64],
    cfg: &MaxRegRunConfig,
    threads: usize,
) -> StudyReport {
    let one = |eps: f64| -> StudyRow {
        let steps = cfg.steps(eps, b0);
        let deviation = (|| {
            let s0 = MaxwellRegState::new(b0.clone(), InitialE::WellPrepared, eps)?;
            let end = run_maxreg(&s0, cfg, steps, &mut |_| {})?;
            let reference = run_hall_reference(b0, cfg, steps)?;
            Ok::<f64, MaxRegError>((&end.b - &reference).norm())
        })()
        .map_err(|e| e.to_string());
        StudyRow {
            eps,
            steps,
            deviation,
        }
    };

    let threads = threads.clamp(1, eps_list.len().max(1));
    let mut rows: Vec<Option<StudyRow>> = vec![None; eps_list.len()];
    std::thread::scope(|scope| {
        let chunks: Vec<Vec<usize>> = (0..threads)
            .map(|w| (w..eps_list.len()).step_by(threads).collect())
            .collect();
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|idx| {
                let one = &one;
                scope.spawn(move || {
                    idx.into_iter()
                        .map(|i| (i, one(eps_list[i])))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, row) in h.join().expect("study worker panicked") {
                rows[i] = Some(row);
            }
        }
    });
    let rows: Vec<StudyRow> = rows.into_iter().map(|r| r.expect("filled")).collect();
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| match r.deviation {
            Ok(d) if d > 0.0 => Some((r.eps.ln(), d.ln())),
            _ => None,
        })
        .collect();
    let order = fit_slope(&pts);
    StudyReport { rows, order }
}

fn fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{guided, helical, random_solenoidal};
    use crate::spectral::inner_product;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    #[test]
    fn helical_multiplier_is_two_pi() {
        let g = Grid3::new(16).unwrap();
        let s = MaxwellRegState::new(helical(&g, 0.7), InitialE::WellPrepared, 1e-2).unwrap();
        assert!(s.e.norm() < 1e-14);
        let lam = lambda_multiplier(&s).unwrap();
        assert!(lam.iter().all(|l| (l - TAU).abs() < 1e-10));
    }

    #[test]
    fn shear_multiplier_matches_closed_form() {
        // B = (0, c, sin 2πx): (∇×B)·B = −2πc cos 2πx, and the well-prepared
        // E = (−2π sin 2πx cos 2πx, 0, 0) is curl free, so λ does not see ε
        let c = 5.0;
        let g = Grid3::new(32).unwrap();
        let b = SpectralVectorField::from_fn(&g, |x, _, _| [0.0, c, (TAU * x).sin()]);
        let s = MaxwellRegState::new(b, InitialE::WellPrepared, 1e-2).unwrap();
        let lam = lambda_multiplier(&s).unwrap();
        let lam0 = lambda_with_eps(&s, 0.0).unwrap();
        let n = g.n();
        for ((i, j, l), v) in lam.indexed_iter() {
            let x = i as f64 / n as f64;
            let exact = -TAU * c * (TAU * x).cos() / (c * c + (TAU * x).sin().powi(2));
            assert!((v - exact).abs() < 1e-9, "({i},{j},{l}) {v} vs {exact}");
            assert!((v - lam0[[i, j, l]]).abs() < 1e-12);
        }
    }

    #[test]
    fn beltrami_states_are_fixed_points() {
        let g = Grid3::new(12).unwrap();
        let b = helical(&g, 1.3);
        for eps in [1e-1, 1e-2, 1e-3] {
            let s = MaxwellRegState::new(b.clone(), InitialE::WellPrepared, eps).unwrap();
            let (db, de) = rhs_be(&s).unwrap();
            assert!(db.norm() <= 1e-12 * b.norm(), "{}", db.norm());
            assert!(de.norm() <= 1e-12 * b.norm() / eps, "{}", de.norm());
        }
    }

    #[test]
    fn nulls_and_bad_eps_are_rejected() {
        let g = Grid3::new(8).unwrap();
        let null = SpectralVectorField::from_fn(&g, |x, _, _| [0.0, (TAU * x).sin(), 0.0]);
        assert!(matches!(
            MaxwellRegState::new(null.clone(), InitialE::WellPrepared, 1e-2),
            Err(MaxRegError::MagneticNull { .. })
        ));
        assert!(matches!(
            MaxwellRegState::new(SpectralVectorField::zeros(&g), InitialE::WellPrepared, 1e-2),
            Err(MaxRegError::MagneticNull { .. })
        ));
        for eps in [0.0, -1e-3, f64::NAN] {
            assert!(matches!(
                MaxwellRegState::new(guided(&g, 0.2), InitialE::WellPrepared, eps),
                Err(MaxRegError::Parameter(_))
            ));
        }
        let z = SpectralVectorField::zeros(&g);
        assert!(matches!(
            rhs_bj(&null, &z, 1e-2),
            Err(MaxRegError::Formulation(_))
        ));
    }

    fn admissible(seed: u64, a: f64, eps: f64) -> MaxwellRegState {
        let g = Grid3::new(8).unwrap();
        let mut b = guided(&g, a);
        b.axpy(1.0, &random_solenoidal(&g, seed, 0.1, 2.0));
        let e = random_solenoidal(&g, seed + 1000, 1.0, 2.0);
        MaxwellRegState::new(b, InitialE::Given(e), eps).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn constraint_rate_vanishes(seed in 0u64..10_000, a in 0.0f64..0.3, le in -3.0f64..-1.0) {
            let eps = 10f64.powf(le);
            let s = admissible(seed, a, eps);
            let (db, de) = rhs_be(&s).unwrap();
            let scale = de.max_norm() * s.b.max_norm() + db.max_norm() * s.e.max_norm();
            prop_assert!(constraint_rate(&s).unwrap() <= 1e-12 * scale);
        }

        #[test]
        fn energy_changes_by_current_power(seed in 0u64..10_000, a in 0.0f64..0.3, le in -3.0f64..-1.0) {
            let eps = 10f64.powf(le);
            let s = admissible(seed, a, eps);
            let (db, de) = rhs_be(&s).unwrap();
            let rate = inner_product(&s.b, &db).unwrap() + eps * inner_product(&s.e, &de).unwrap();
            let p = current_power(&s).unwrap();
            let scale = s.b.norm() * db.norm() + eps * s.e.norm() * de.norm();
            prop_assert!((rate + p).abs() <= 1e-12 * scale, "{rate} {p}");
        }
    }

    #[test]
    fn well_prepared_field_is_orthogonal() {
        let g = Grid3::new(12).unwrap();
        let s = MaxwellRegState::new(guided(&g, 0.3), InitialE::WellPrepared, 1e-2).unwrap();
        let scale = s.e.max_norm() * s.b.max_norm();
        // E = J×B is a product of retained modes but not itself retained, so
        // truncation leaves a small residue of E·B on the product grid
        assert!(s.constraint() <= 1e-2 * scale);
        assert!(s.e.norm() > 0.1);
    }

    #[test]
    fn bj_formulation_agrees_with_be_as_eps_shrinks() {
        let base = admissible(5, 0.2, 1.0);
        let mut rel = Vec::new();
        for eps in [1e-1, 1e-2, 1e-3] {
            let s = MaxwellRegState {
                eps,
                ..base.clone()
            };
            let (db, de) = rhs_be(&s).unwrap();
            let (db2, dg) = rhs_bj(&s.b, &s.e, eps).unwrap();
            assert!(db.max_abs_diff(&db2) == 0.0);
            rel.push((&de - &dg).norm() / de.norm());
        }
        assert!(rel[1] < 0.2 * rel[0] && rel[2] < 0.2 * rel[1], "{rel:?}");

        let g = Grid3::new(8).unwrap();
        let b = helical(&g, 1.0);
        let z = SpectralVectorField::zeros(&g);
        let (db, dg) = rhs_bj(&b, &z, 1e-2).unwrap();
        assert!(
            db.norm() < 1e-14 && dg.norm() < 1e-10,
            "{} {}",
            db.norm(),
            dg.norm()
        );
    }

    #[test]
    fn step_counts() {
        let g = Grid3::new(16).unwrap();
        let b = guided(&g, 0.1);
        let cfg = MaxRegRunConfig::default();
        // ε Δx / 2 = 3.125e-4 beats the Hall bound at ε = 1e-2
        assert_eq!(cfg.steps(1e-2, &b), 160);
        let slow = MaxRegRunConfig {
            hall_cfl: None,
            ..cfg.clone()
        };
        assert_eq!(slow.steps(1.0, &b), 2);
        assert!(cfg.steps(1.0, &b) > 2);
        let none = MaxRegRunConfig { t_end: 0.0, ..cfg };
        assert_eq!(none.steps(1e-3, &b), 0);
    }

    #[test]
    fn run_keeps_constraint_and_reports_every_step() {
        let g = Grid3::new(8).unwrap();
        let s0 = MaxwellRegState::new(guided(&g, 0.15), InitialE::WellPrepared, 1e-2).unwrap();
        let cfg = MaxRegRunConfig {
            t_end: 0.01,
            ..Default::default()
        };
        let steps = cfg.steps(s0.eps, &s0.b);
        let mut seen = 0;
        let end = run_maxreg(&s0, &cfg, steps, &mut |_| seen += 1).unwrap();
        assert_eq!(seen, steps + 1);
        assert!((end.t - 0.01).abs() < 1e-15);
        let drift = (end.energy() - s0.energy()).abs() / s0.energy();
        assert!(drift < 1e-4, "{drift}");
    }

    #[test]
    fn beltrami_study_has_zero_deviation() {
        let g = Grid3::new(8).unwrap();
        let b = helical(&g, 1.0);
        let cfg = MaxRegRunConfig {
            t_end: 0.005,
            ..Default::default()
        };
        let rep = eps_convergence_study(&b, &[1e-1, 1e-2], &cfg, 2);
        for row in &rep.rows {
            assert!(*row.deviation.as_ref().unwrap() < 1e-12, "{row:?}");
        }
    }

    #[test]
    fn study_is_deterministic_across_thread_counts() {
        let g = Grid3::new(8).unwrap();
        let b = guided(&g, 0.1);
        let cfg = MaxRegRunConfig {
            t_end: 0.002,
            ..Default::default()
        };
        let eps = [1e-1, 3e-2, 1e-2];
        let one = eps_convergence_study(&b, &eps, &cfg, 1);
        let three = eps_convergence_study(&b, &eps, &cfg, 3);
        assert_eq!(one, three);
        assert_eq!(one, eps_convergence_study(&b, &eps, &cfg, 2));
        assert!(one.monotone());
        assert!(one.order.is_some());
    }

    #[test]
    fn study_reports_failures_per_row() {
        let g = Grid3::new(8).unwrap();
        let b = SpectralVectorField::from_fn(&g, |x, _, _| [0.0, (TAU * x).sin(), 0.0]);
        let rep = eps_convergence_study(&b, &[1e-1, 1e-2], &MaxRegRunConfig::default(), 2);
        assert!(rep.rows.iter().all(|r| r.deviation.is_err()));
        assert_eq!(rep.order, None);
    }
}
