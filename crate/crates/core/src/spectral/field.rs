use super::{Grid3, SpectralError};
use ndarray::{Array3, Array4, Axis};
use num_complex::Complex64;
use std::f64::consts::TAU;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

/// Fourier coefficients of a real periodic vector field on the retained cube.
///
/// `coeffs[[c, ix, iy, iz]]` multiplies `exp(2πi k·x)` in component `c`, with
/// `k = (ix, iy, iz) - kmax`. The field is real, so `coeff(-k) = conj(coeff(k))`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralVectorField {
    grid: Grid3,
    coeffs: Array4<Complex64>,
}

/// Real samples `values[[c, i, j, l]]` at `x = (i, j, l) / n`.
#[derive(Clone, Debug)]
pub struct RealVectorField {
    pub grid: Grid3,
    pub values: Array4<f64>,
}

impl RealVectorField {
    pub fn zeros(grid: &Grid3) -> Self {
        let n = grid.n();
        Self {
            grid: grid.clone(),
            values: Array4::zeros((3, n, n, n)),
        }
    }

    /// Samples `f(x, y, z)` at every grid point.
    pub fn from_fn(grid: &Grid3, f: impl Fn(f64, f64, f64) -> [f64; 3]) -> Self {
        let n = grid.n();
        let h = grid.dx();
        let mut values = Array4::zeros((3, n, n, n));
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let v = f(i as f64 * h, j as f64 * h, l as f64 * h);
                    for c in 0..3 {
                        values[[c, i, j, l]] = v[c];
                    }
                }
            }
        }
        Self {
            grid: grid.clone(),
            values,
        }
    }

    /// Largest pointwise Euclidean norm.
    pub fn max_norm(&self) -> f64 {
        let n = self.grid.n();
        let mut best: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let s: f64 = (0..3).map(|c| self.values[[c, i, j, l]].powi(2)).sum();
                    best = best.max(s);
                }
            }
        }
        best.sqrt()
    }
}

/// Real vector samples on the product grid, one flat array per component in
/// transform order (`[y][z][x]`, `x` fastest).
#[derive(Clone, Debug)]
pub(crate) struct ProductField {
    pub(crate) comps: [Vec<f64>; 3],
}

impl ProductField {
    pub(crate) fn len(&self) -> usize {
        self.comps[0].len()
    }

    #[inline]
    pub(crate) fn at(&self, p: usize) -> [f64; 3] {
        [self.comps[0][p], self.comps[1][p], self.comps[2][p]]
    }

    pub(crate) fn from_fn(len: usize, f: impl Fn(usize) -> [f64; 3]) -> Self {
        let mut comps = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
        for p in 0..len {
            let v = f(p);
            comps[0][p] = v[0];
            comps[1][p] = v[1];
            comps[2][p] = v[2];
        }
        Self { comps }
    }
}

impl SpectralVectorField {
    pub fn zeros(grid: &Grid3) -> Self {
        let nm = grid.modes_per_axis();
        Self {
            grid: grid.clone(),
            coeffs: Array4::zeros((3, nm, nm, nm)),
        }
    }

    /// Wraps a coefficient array; the shape must be `(3, M, M, M)` with
    /// `M = 2*kmax + 1`.
    pub fn from_coeffs(grid: &Grid3, coeffs: Array4<Complex64>) -> Result<Self, SpectralError> {
        let nm = grid.modes_per_axis();
        if coeffs.dim() != (3, nm, nm, nm) {
            return Err(SpectralError::DimensionMismatch {
                expected: vec![3, nm, nm, nm],
                found: coeffs.shape().to_vec(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs: coeffs.as_standard_layout().into_owned(),
        })
    }

    /// Builds a field mode by mode from `f(k) -> [coeff; 3]`.
    pub fn from_modes(grid: &Grid3, f: impl Fn([f64; 3]) -> [Complex64; 3]) -> Self {
        let mut out = Self::zeros(grid);
        for (idx, k) in grid.waves().iter().enumerate() {
            let v = f(*k);
            for (c, value) in v.into_iter().enumerate() {
                out.comp_mut(c)[idx] = value;
            }
        }
        out
    }

    /// Samples `f` on the native grid and transforms it.
    pub fn from_fn(grid: &Grid3, f: impl Fn(f64, f64, f64) -> [f64; 3]) -> Self {
        forward_transform(&RealVectorField::from_fn(grid, f))
            .expect("sampled field matches its own grid")
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn coeffs(&self) -> &Array4<Complex64> {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Array4<Complex64> {
        self.coeffs
    }

    /// Coefficients of one component, in mode storage order.
    pub fn comp(&self, c: usize) -> &[Complex64] {
        let len = self.grid.mode_count();
        let all = self.coeffs.as_slice().expect("standard layout");
        &all[c * len..(c + 1) * len]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [Complex64] {
        let len = self.grid.mode_count();
        let all = self.coeffs.as_slice_mut().expect("standard layout");
        &mut all[c * len..(c + 1) * len]
    }

    /// Vector coefficient at storage index `idx`.
    #[inline]
    pub fn at(&self, idx: usize) -> [Complex64; 3] {
        let len = self.grid.mode_count();
        let all = self.coeffs.as_slice().expect("standard layout");
        [all[idx], all[len + idx], all[2 * len + idx]]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, v: [Complex64; 3]) {
        let len = self.grid.mode_count();
        let all = self.coeffs.as_slice_mut().expect("standard layout");
        all[idx] = v[0];
        all[len + idx] = v[1];
        all[2 * len + idx] = v[2];
    }

    /// Vector coefficient of the integer wavevector `k`, zero if not retained.
    pub fn mode(&self, k: [i64; 3]) -> [Complex64; 3] {
        match self.grid.mode_index(k) {
            Some(idx) => self.at(idx),
            None => [Complex64::new(0.0, 0.0); 3],
        }
    }

    pub fn mean(&self) -> [f64; 3] {
        self.mode([0, 0, 0]).map(|c| c.re)
    }

    /// Applies `f(k, coeff) -> coeff` to every mode.
    pub fn map_modes(&self, f: impl Fn([f64; 3], [Complex64; 3]) -> [Complex64; 3]) -> Self {
        let mut out = Self::zeros(&self.grid);
        for (idx, k) in self.grid.waves().iter().enumerate() {
            out.set(idx, f(*k, self.at(idx)));
        }
        out
    }

    /// Multiplies each mode by the real factor `f(k)`.
    pub fn scale_modes(&self, f: impl Fn([f64; 3]) -> f64) -> Self {
        let mut out = self.clone();
        let len = self.grid.mode_count();
        let waves = self.grid.waves();
        let all = out.coeffs.as_slice_mut().expect("standard layout");
        for idx in 0..len {
            let s = f(waves[idx]);
            for c in 0..3 {
                all[c * len + idx] *= s;
            }
        }
        out
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &Self) {
        debug_assert!(self.grid == other.grid);
        self.coeffs
            .scaled_add(Complex64::new(a, 0.0), &other.coeffs);
    }

    /// Squared L² norm over the unit box.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `‖∇F‖²`, the squared L² norm of the full gradient.
    pub fn grad_norm_sq(&self) -> f64 {
        let len = self.grid.mode_count();
        let waves = self.grid.waves();
        let all = self.coeffs.as_slice().expect("standard layout");
        let mut acc = 0.0;
        for idx in 0..len {
            let k = waves[idx];
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            let e: f64 = (0..3).map(|c| all[c * len + idx].norm_sqr()).sum();
            acc += k2 * e;
        }
        TAU * TAU * acc
    }

    /// Largest modulus of the spectral divergence `2πi k·F(k)` over all modes.
    pub fn divergence_max(&self) -> f64 {
        let mut best: f64 = 0.0;
        for (idx, k) in self.grid.waves().iter().enumerate() {
            let v = self.at(idx);
            let d = v[0] * k[0] + v[1] * k[1] + v[2] * k[2];
            best = best.max(TAU * d.norm());
        }
        best
    }

    /// Largest violation of `coeff(-k) = conj(coeff(k))`.
    pub fn hermitian_defect(&self) -> f64 {
        let len = self.grid.mode_count();
        let mut worst: f64 = 0.0;
        for c in 0..3 {
            let comp = self.comp(c);
            for idx in 0..len {
                let mirror = self.grid.mirror_index(idx);
                worst = worst.max((comp[idx] - comp[mirror].conj()).norm());
            }
        }
        worst
    }

    /// Largest absolute coefficient difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(other.coeffs.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Maximum pointwise norm on the native grid.
    pub fn max_norm(&self) -> f64 {
        inverse_transform(self).max_norm()
    }
}

/// Coefficients of the native-grid samples, truncated to the retained cube.
pub fn forward_transform(f: &RealVectorField) -> Result<SpectralVectorField, SpectralError> {
    let n = f.grid.n();
    if f.values.dim() != (3, n, n, n) {
        return Err(SpectralError::DimensionMismatch {
            expected: vec![3, n, n, n],
            found: f.values.shape().to_vec(),
        });
    }
    let plan = f.grid.native_plan();
    let flat: Vec<Vec<f64>> = (0..3)
        .map(|c| {
            let comp = f.values.index_axis(Axis(0), c);
            // [x][y][z] -> transform order [y][z][x]
            comp.permuted_axes([1, 2, 0]).iter().copied().collect()
        })
        .collect();
    let (a, b) = plan.analyze_pair(&flat[0], Some(&flat[1]));
    let (c, _) = plan.analyze_pair(&flat[2], None);
    let mut out = SpectralVectorField::zeros(&f.grid);
    out.comp_mut(0).copy_from_slice(&a);
    out.comp_mut(1).copy_from_slice(&b.expect("paired"));
    out.comp_mut(2).copy_from_slice(&c);
    Ok(out)
}

/// Evaluates the truncated Fourier series on the native grid.
pub fn inverse_transform(f: &SpectralVectorField) -> RealVectorField {
    let n = f.grid.n();
    let plan = f.grid.native_plan();
    let (a, b) = plan.synthesize_pair(f.comp(0), Some(f.comp(1)));
    let (c, _) = plan.synthesize_pair(f.comp(2), None);
    let mut values = Array4::zeros((3, n, n, n));
    for (ci, data) in [a, b.expect("paired"), c].into_iter().enumerate() {
        values
            .index_axis_mut(Axis(0), ci)
            .assign(&transform_order_to_xyz(n, data));
    }
    RealVectorField {
        grid: f.grid.clone(),
        values,
    }
}

/// Evaluates several spectral fields on the product grid, pairing components
/// so that two real fields share one complex transform.
pub(crate) fn to_product(fields: &[&SpectralVectorField]) -> Vec<ProductField> {
    let Some(first) = fields.first() else {
        return Vec::new();
    };
    let plan = first.grid.product_plan();
    let slots: Vec<&[Complex64]> = fields
        .iter()
        .flat_map(|f| (0..3).map(move |c| f.comp(c)))
        .collect();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(slots.len());
    for pair in slots.chunks(2) {
        let (a, b) = plan.synthesize_pair(pair[0], pair.get(1).copied());
        out.push(a);
        if let Some(b) = b {
            out.push(b);
        }
    }
    let mut it = out.into_iter();
    fields
        .iter()
        .map(|_| ProductField {
            comps: [
                it.next().expect("component"),
                it.next().expect("component"),
                it.next().expect("component"),
            ],
        })
        .collect()
}

/// Transforms product-grid samples back, truncating to the retained cube.
pub(crate) fn from_product(grid: &Grid3, fields: &[ProductField]) -> Vec<SpectralVectorField> {
    let plan = grid.product_plan();
    let slots: Vec<&[f64]> = fields
        .iter()
        .flat_map(|f| f.comps.iter().map(|v| v.as_slice()))
        .collect();
    let mut coeffs: Vec<Vec<Complex64>> = Vec::with_capacity(slots.len());
    for pair in slots.chunks(2) {
        let (a, b) = plan.analyze_pair(pair[0], pair.get(1).copied());
        coeffs.push(a);
        if let Some(b) = b {
            coeffs.push(b);
        }
    }
    let mut it = coeffs.into_iter();
    fields
        .iter()
        .map(|_| {
            let mut f = SpectralVectorField::zeros(grid);
            for c in 0..3 {
                f.comp_mut(c)
                    .copy_from_slice(&it.next().expect("component"));
            }
            f
        })
        .collect()
}

/// Scalar samples on the product grid, analyzed and re-synthesized on the
/// native grid: the dealiased native-grid view of a pointwise quantity.
pub(crate) fn product_scalar_to_native(grid: &Grid3, data: &[f64]) -> Array3<f64> {
    let (coeffs, _) = grid.product_plan().analyze_pair(data, None);
    let (native, _) = grid.native_plan().synthesize_pair(&coeffs, None);
    transform_order_to_xyz(grid.n(), native)
}

fn transform_order_to_xyz(n: usize, data: Vec<f64>) -> Array3<f64> {
    let yzx = Array3::from_shape_vec((n, n, n), data).expect("grid sized");
    yzx.permuted_axes([2, 0, 1])
        .as_standard_layout()
        .into_owned()
}

impl Add for &SpectralVectorField {
    type Output = SpectralVectorField;
    fn add(self, rhs: Self) -> SpectralVectorField {
        debug_assert!(self.grid == rhs.grid);
        SpectralVectorField {
            grid: self.grid.clone(),
            coeffs: &self.coeffs + &rhs.coeffs,
        }
    }
}

impl Sub for &SpectralVectorField {
    type Output = SpectralVectorField;
    fn sub(self, rhs: Self) -> SpectralVectorField {
        debug_assert!(self.grid == rhs.grid);
        SpectralVectorField {
            grid: self.grid.clone(),
            coeffs: &self.coeffs - &rhs.coeffs,
        }
    }
}

impl Mul<f64> for &SpectralVectorField {
    type Output = SpectralVectorField;
    fn mul(self, rhs: f64) -> SpectralVectorField {
        SpectralVectorField {
            grid: self.grid.clone(),
            coeffs: self.coeffs.mapv(|c| c * rhs),
        }
    }
}

impl Mul<f64> for SpectralVectorField {
    type Output = SpectralVectorField;
    fn mul(mut self, rhs: f64) -> SpectralVectorField {
        self.coeffs.mapv_inplace(|c| c * rhs);
        self
    }
}

impl Neg for &SpectralVectorField {
    type Output = SpectralVectorField;
    fn neg(self) -> SpectralVectorField {
        self * -1.0
    }
}

impl AddAssign<&SpectralVectorField> for SpectralVectorField {
    fn add_assign(&mut self, rhs: &SpectralVectorField) {
        self.coeffs += &rhs.coeffs;
    }
}

impl SubAssign<&SpectralVectorField> for SpectralVectorField {
    fn sub_assign(&mut self, rhs: &SpectralVectorField) {
        self.coeffs -= &rhs.coeffs;
    }
}
