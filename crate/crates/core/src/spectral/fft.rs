//! Pruned 3D transforms between the retained-mode cube and a physical grid.
//!
//! Spectral data lives on the cube `|k_i| <= kmax` (index `k + kmax`), physical
//! data on an `m^3` grid in `[y][z][x]` order (`x` fastest), which is the order
//! the last transform pass produces. Only lines that can carry retained modes
//! are transformed. Two real fields are packed into
//! one complex transform (`f + i g`) and split again via Hermitian symmetry.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub(crate) struct Plan3 {
    m: usize,
    kmax: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// FFT bin of mode index `i` (wavenumber `i - kmax`).
    bins: Vec<usize>,
}

impl std::fmt::Debug for Plan3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Plan3")
            .field("m", &self.m)
            .field("kmax", &self.kmax)
            .finish()
    }
}

impl Plan3 {
    pub(crate) fn new(m: usize, kmax: usize) -> Self {
        assert!(2 * kmax < m, "retained cube must fit the grid");
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(m);
        let inv = planner.plan_fft_inverse(m);
        let bins = (0..2 * kmax + 1)
            .map(|i| {
                let k = i as isize - kmax as isize;
                k.rem_euclid(m as isize) as usize
            })
            .collect();
        Self {
            m,
            kmax,
            fwd,
            inv,
            bins,
        }
    }

    pub(crate) fn size(&self) -> usize {
        self.m
    }

    fn modes(&self) -> usize {
        2 * self.kmax + 1
    }

    fn run(&self, fft: &Arc<dyn Fft<f64>>, buf: &mut [Complex64]) {
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(buf, &mut scratch);
    }

    /// Evaluates the Fourier series with coefficients `z` (retained cube,
    /// length `modes^3`) on the physical grid.
    fn synthesize_complex(&self, z: &[Complex64]) -> Vec<Complex64> {
        let (m, nm) = (self.m, self.modes());
        let zero = Complex64::new(0.0, 0.0);
        debug_assert_eq!(z.len(), nm * nm * nm);

        // z lines: one per (ix, iy)
        let mut s1 = vec![zero; nm * nm * m];
        for line in 0..nm * nm {
            let out = &mut s1[line * m..(line + 1) * m];
            let src = &z[line * nm..(line + 1) * nm];
            for (iz, &c) in src.iter().enumerate() {
                out[self.bins[iz]] = c;
            }
        }
        self.run(&self.inv, &mut s1);

        // y lines: one per (ix, zj)
        let mut s2 = vec![zero; nm * m * m];
        for ix in 0..nm {
            for iy in 0..nm {
                let src = &s1[(ix * nm + iy) * m..(ix * nm + iy + 1) * m];
                let b = self.bins[iy];
                for (zj, &c) in src.iter().enumerate() {
                    s2[(ix * m + zj) * m + b] = c;
                }
            }
        }
        self.run(&self.inv, &mut s2);

        // x lines: one per (yj, zj)
        let mut s3 = vec![zero; m * m * m];
        for ix in 0..nm {
            let b = self.bins[ix];
            for zj in 0..m {
                let src = &s2[(ix * m + zj) * m..(ix * m + zj + 1) * m];
                for (yj, &c) in src.iter().enumerate() {
                    s3[(yj * m + zj) * m + b] = c;
                }
            }
        }
        self.run(&self.inv, &mut s3);
        s3
    }

    /// Normalized Fourier coefficients of grid data, restricted to the
    /// retained cube.
    fn analyze_complex(&self, data: &[Complex64]) -> Vec<Complex64> {
        let (m, nm) = (self.m, self.modes());
        let zero = Complex64::new(0.0, 0.0);
        debug_assert_eq!(data.len(), m * m * m);

        // x lines
        let mut s3 = data.to_vec();
        self.run(&self.fwd, &mut s3);

        // y lines, keeping retained kx
        let mut s2 = vec![zero; nm * m * m];
        for yj in 0..m {
            for zj in 0..m {
                let src = &s3[(yj * m + zj) * m..(yj * m + zj + 1) * m];
                for ix in 0..nm {
                    s2[(ix * m + zj) * m + yj] = src[self.bins[ix]];
                }
            }
        }
        self.run(&self.fwd, &mut s2);

        // z lines, keeping retained ky
        let mut s1 = vec![zero; nm * nm * m];
        for ix in 0..nm {
            for zj in 0..m {
                let src = &s2[(ix * m + zj) * m..(ix * m + zj + 1) * m];
                for iy in 0..nm {
                    s1[(ix * nm + iy) * m + zj] = src[self.bins[iy]];
                }
            }
        }
        self.run(&self.fwd, &mut s1);

        let norm = 1.0 / (m * m * m) as f64;
        let mut z = vec![zero; nm * nm * nm];
        for line in 0..nm * nm {
            let src = &s1[line * m..(line + 1) * m];
            for iz in 0..nm {
                z[line * nm + iz] = src[self.bins[iz]] * norm;
            }
        }
        z
    }

    /// Synthesizes two real fields from their (Hermitian) coefficient cubes.
    pub(crate) fn synthesize_pair(
        &self,
        a: &[Complex64],
        b: Option<&[Complex64]>,
    ) -> (Vec<f64>, Option<Vec<f64>>) {
        let packed: Vec<Complex64> = match b {
            Some(b) => a
                .iter()
                .zip(b)
                .map(|(&fa, &fb)| Complex64::new(fa.re - fb.im, fa.im + fb.re))
                .collect(),
            None => a.to_vec(),
        };
        let phys = self.synthesize_complex(&packed);
        let re = phys.iter().map(|c| c.re).collect();
        let im = b.map(|_| phys.iter().map(|c| c.im).collect());
        (re, im)
    }

    /// Analyzes two real grid fields at once; returns their coefficient cubes.
    pub(crate) fn analyze_pair(
        &self,
        f: &[f64],
        g: Option<&[f64]>,
    ) -> (Vec<Complex64>, Option<Vec<Complex64>>) {
        let packed: Vec<Complex64> = match g {
            Some(g) => f
                .iter()
                .zip(g)
                .map(|(&x, &y)| Complex64::new(x, y))
                .collect(),
            None => f.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        };
        let z = self.analyze_complex(&packed);
        let total = z.len();
        let mut fa = vec![Complex64::new(0.0, 0.0); total];
        let mut fb = g.map(|_| vec![Complex64::new(0.0, 0.0); total]);
        for idx in 0..total {
            // the cube is symmetric, so -k sits at the reversed index
            let mirror = total - 1 - idx;
            let zk = z[idx];
            let zm = z[mirror].conj();
            fa[idx] = (zk + zm) * 0.5;
            if let Some(fb) = fb.as_mut() {
                let d = zk - zm;
                // (zk - conj z(-k)) / (2i)
                fb[idx] = Complex64::new(d.im * 0.5, -d.re * 0.5);
            }
        }
        (fa, fb)
    }
}
