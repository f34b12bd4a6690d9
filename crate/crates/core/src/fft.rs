//! Multi-dimensional transforms between collocation samples and
//! [`SpectralField`] coefficients.
//!
//! The normalization is `c_k = N^{-1} sum_x theta(x) e^{-ik.x}` with grid
//! points `x_j = -pi + j h`; the offset contributes the checkerboard sign
//! `(-1)^{k_1 + ... + k_d}`. Real transforms are paired into a single complex
//! transform (`a + i b`) and separated afterwards, which also yields exactly
//! Hermitian coefficient arrays.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;

/// Transform plans and scratch space for one grid. Owned by a single run.
pub struct Transformer {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    buf: Vec<Complex64>,
    sign: Vec<f64>,
    neg: Vec<usize>,
}

impl Transformer {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.n());
        let inverse = planner.plan_fft_inverse(grid.n());
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        let sign = (0..grid.len())
            .map(|i| {
                let a = grid.axes(i);
                if (a[0] + a[1] + a[2]) % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        let neg = (0..grid.len()).map(|i| grid.neg_index(i)).collect();
        Transformer {
            grid,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            buf: vec![Complex64::new(0.0, 0.0); grid.len()],
            sign,
            neg,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Coefficients of the trigonometric interpolant of `samples`, with the
    /// mean and Nyquist modes removed.
    pub fn forward(&mut self, samples: &[f64]) -> Result<SpectralField> {
        if samples.len() != self.grid.len() {
            return Err(Error::ShapeMismatch {
                expected: self.grid.len(),
                actual: samples.len(),
            });
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("physical samples"));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        self.forward_pair(samples, None, &mut out, None);
        Ok(SpectralField::from_raw(self.grid, out))
    }

    /// Real collocation samples of `f`. Fails if the inverse transform leaves
    /// an imaginary residue above `1e-12` of the field magnitude.
    pub fn backward(&mut self, f: &SpectralField) -> Result<Vec<f64>> {
        if f.grid() != self.grid {
            return Err(Error::GridMismatch(format!(
                "transformer on {:?}, field on {:?}",
                self.grid,
                f.grid()
            )));
        }
        let c = f.coeffs();
        for (i, b) in self.buf.iter_mut().enumerate() {
            *b = c[i] * self.sign[i];
        }
        self.transform(false);
        let magnitude: f64 = c.iter().map(|z| z.norm()).sum();
        let residue = self.buf.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        let tolerance = 1e-12 * magnitude.max(f64::MIN_POSITIVE);
        if residue > tolerance {
            return Err(Error::SymmetryViolated {
                defect: residue,
                tolerance,
            });
        }
        Ok(self.buf.iter().map(|z| z.re).collect())
    }

    /// Inverse transform of one or two Hermitian coefficient arrays.
    pub(crate) fn backward_pair(
        &mut self,
        a: &[Complex64],
        b: Option<&[Complex64]>,
        out_a: &mut [f64],
        out_b: Option<&mut [f64]>,
    ) {
        match b {
            Some(b) => {
                for i in 0..self.buf.len() {
                    let z = a[i] + Complex64::new(-b[i].im, b[i].re);
                    self.buf[i] = z * self.sign[i];
                }
            }
            None => {
                for i in 0..self.buf.len() {
                    self.buf[i] = a[i] * self.sign[i];
                }
            }
        }
        self.transform(false);
        for (o, z) in out_a.iter_mut().zip(&self.buf) {
            *o = z.re;
        }
        if let Some(out_b) = out_b {
            for (o, z) in out_b.iter_mut().zip(&self.buf) {
                *o = z.im;
            }
        }
    }

    /// Forward transform of one or two real sample arrays. Outputs are exactly
    /// Hermitian with zero mean and zero Nyquist modes.
    pub(crate) fn forward_pair(
        &mut self,
        a: &[f64],
        b: Option<&[f64]>,
        out_a: &mut [Complex64],
        out_b: Option<&mut [Complex64]>,
    ) {
        match b {
            Some(b) => {
                for i in 0..self.buf.len() {
                    self.buf[i] = Complex64::new(a[i], b[i]);
                }
            }
            None => {
                for i in 0..self.buf.len() {
                    self.buf[i] = Complex64::new(a[i], 0.0);
                }
            }
        }
        self.transform(true);
        let inv_n = 1.0 / self.grid.len() as f64;
        let g = self.grid;
        for i in 0..self.buf.len() {
            let z = self.buf[i];
            let zn = self.buf[self.neg[i]].conj();
            let s = self.sign[i] * inv_n * 0.5;
            out_a[i] = (z + zn) * s;
        }
        out_a[0] = Complex64::new(0.0, 0.0);
        if let Some(out_b) = out_b {
            for i in 0..self.buf.len() {
                let d = self.buf[i] - self.buf[self.neg[i]].conj();
                let s = self.sign[i] * inv_n * 0.5;
                // (z - conj z(-k)) / (2i)
                out_b[i] = Complex64::new(d.im, -d.re) * s;
            }
            out_b[0] = Complex64::new(0.0, 0.0);
            zero_nyquist(g, out_b);
        }
        zero_nyquist(g, out_a);
    }

    /// Unnormalized in-place transform of `self.buf` along every axis.
    fn transform(&mut self, forward: bool) {
        let n = self.grid.n();
        let fft = if forward {
            Arc::clone(&self.forward)
        } else {
            Arc::clone(&self.inverse)
        };
        let buf = &mut self.buf;
        let scratch = &mut self.scratch;
        match self.grid.dim() {
            2 => {
                fft.process_with_scratch(buf, scratch);
                transpose_square(buf, n, 0);
                fft.process_with_scratch(buf, scratch);
                transpose_square(buf, n, 0);
            }
            _ => {
                let slab = n * n;
                fft.process_with_scratch(buf, scratch);
                for a in 0..n {
                    transpose_square(buf, n, a * slab);
                }
                fft.process_with_scratch(buf, scratch);
                for a in 0..n {
                    transpose_square(buf, n, a * slab);
                }
                swap_outer_inner(buf, n);
                fft.process_with_scratch(buf, scratch);
                swap_outer_inner(buf, n);
            }
        }
    }
}

fn zero_nyquist(g: Grid, c: &mut [Complex64]) {
    let n = g.n();
    let h = n / 2;
    match g.dim() {
        2 => {
            for j in 0..n {
                c[h * n + j] = Complex64::new(0.0, 0.0);
                c[j * n + h] = Complex64::new(0.0, 0.0);
            }
        }
        _ => {
            for p in 0..n {
                for q in 0..n {
                    c[(h * n + p) * n + q] = Complex64::new(0.0, 0.0);
                    c[(p * n + h) * n + q] = Complex64::new(0.0, 0.0);
                    c[(p * n + q) * n + h] = Complex64::new(0.0, 0.0);
                }
            }
        }
    }
}

fn transpose_square(buf: &mut [Complex64], n: usize, offset: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(offset + i * n + j, offset + j * n + i);
        }
    }
}

/// Exchanges axes 0 and 2 of an `n^3` array in place.
fn swap_outer_inner(buf: &mut [Complex64], n: usize) {
    for a in 0..n {
        for c in (a + 1)..n {
            for b in 0..n {
                buf.swap((a * n + b) * n + c, (c * n + b) * n + a);
            }
        }
    }
}

/// Forward transform with a throwaway plan.
pub fn transform_forward(grid: Grid, samples: &[f64]) -> Result<SpectralField> {
    Transformer::new(grid).forward(samples)
}

/// Inverse transform with a throwaway plan.
pub fn transform_backward(f: &SpectralField) -> Result<Vec<f64>> {
    Transformer::new(f.grid()).backward(f)
}
