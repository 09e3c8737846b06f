use super::fft::Plan3;
use super::SpectralError;
use std::fmt;
use std::sync::Arc;

/// Periodic cube `[0,1)^3` sampled at `n` points per axis.
///
/// Spectral fields keep the wavenumber cube `max_i |k_i| <= kmax` with
/// `kmax = floor(n/3)`. Quadratic products are evaluated on a grid of `m`
/// points with `m >= 3*kmax + 1`, so no product mode aliases back onto a
/// retained one. For `n` not divisible by 3 this is the native grid itself.
#[derive(Clone)]
pub struct Grid3 {
    n: usize,
    kmax: usize,
    inner: Arc<GridInner>,
}

struct GridInner {
    native: Plan3,
    product: Option<Plan3>,
    /// Integer wavevector of every retained mode, in storage order.
    waves: Vec<[f64; 3]>,
}

impl Grid3 {
    pub fn new(n: usize) -> Result<Self, SpectralError> {
        if n < 4 || n % 2 != 0 {
            return Err(SpectralError::InvalidResolution { n });
        }
        let kmax = n / 3;
        let native = Plan3::new(n, kmax);
        let m = product_grid_size(n, kmax);
        let product = (m != n).then(|| Plan3::new(m, kmax));
        let nm = 2 * kmax + 1;
        let mut waves = Vec::with_capacity(nm * nm * nm);
        let k0 = kmax as f64;
        for ix in 0..nm {
            for iy in 0..nm {
                for iz in 0..nm {
                    waves.push([ix as f64 - k0, iy as f64 - k0, iz as f64 - k0]);
                }
            }
        }
        Ok(Self {
            n,
            kmax,
            inner: Arc::new(GridInner {
                native,
                product,
                waves,
            }),
        })
    }

    /// Grid points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Largest retained wavenumber component.
    pub fn kmax(&self) -> usize {
        self.kmax
    }

    /// Box side length; always 1.
    pub fn side(&self) -> f64 {
        1.0
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Retained modes per axis, `2*kmax + 1`.
    pub fn modes_per_axis(&self) -> usize {
        2 * self.kmax + 1
    }

    pub fn mode_count(&self) -> usize {
        self.inner.waves.len()
    }

    /// Points per axis of the grid used for dealiased products.
    pub fn product_size(&self) -> usize {
        self.product_plan().size()
    }

    /// Integer wavevectors in storage order.
    pub fn waves(&self) -> &[[f64; 3]] {
        &self.inner.waves
    }

    /// Storage index of the wavevector `k`, if retained.
    pub fn mode_index(&self, k: [i64; 3]) -> Option<usize> {
        let km = self.kmax as i64;
        if k.iter().any(|c| c.abs() > km) {
            return None;
        }
        let nm = self.modes_per_axis();
        let [a, b, c] = k.map(|c| (c + km) as usize);
        Some((a * nm + b) * nm + c)
    }

    /// Storage index of `-k` given the index of `k`.
    pub fn mirror_index(&self, idx: usize) -> usize {
        self.mode_count() - 1 - idx
    }

    pub(crate) fn native_plan(&self) -> &Plan3 {
        &self.inner.native
    }

    pub(crate) fn product_plan(&self) -> &Plan3 {
        self.inner.product.as_ref().unwrap_or(&self.inner.native)
    }

    pub(crate) fn check_same(&self, other: &Grid3) -> Result<(), SpectralError> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(SpectralError::GridMismatch {
                left: self.n,
                right: other.n,
            })
        }
    }
}

fn product_grid_size(n: usize, kmax: usize) -> usize {
    let needed = 3 * kmax + 1;
    if n >= needed {
        n
    } else {
        // keep it even so the FFT stays on a friendly radix
        needed + needed % 2
    }
}

impl PartialEq for Grid3 {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl fmt::Debug for Grid3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid3")
            .field("n", &self.n)
            .field("kmax", &self.kmax)
            .field("product_size", &self.product_size())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_and_tiny_resolutions() {
        assert!(Grid3::new(33).is_err());
        assert!(Grid3::new(2).is_err());
        assert!(Grid3::new(4).is_ok());
    }

    #[test]
    fn two_thirds_cutoff_and_product_grid() {
        let g = Grid3::new(32).unwrap();
        assert_eq!(g.kmax(), 10);
        assert_eq!(g.product_size(), 32);
        // 48 is divisible by 3, so the native grid would alias onto kmax
        let g = Grid3::new(48).unwrap();
        assert_eq!(g.kmax(), 16);
        assert!(g.product_size() > 3 * g.kmax());
    }

    #[test]
    fn mode_index_roundtrip() {
        let g = Grid3::new(16).unwrap();
        for (idx, k) in g.waves().iter().enumerate() {
            let ki = k.map(|c| c as i64);
            assert_eq!(g.mode_index(ki), Some(idx));
            let neg = g.waves()[g.mirror_index(idx)];
            assert_eq!(neg, k.map(|c| -c));
        }
        assert_eq!(g.mode_index([6, 0, 0]), None);
    }
}
