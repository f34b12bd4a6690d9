use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Collocation grid on the torus `[-pi, pi]^dim`.
///
/// Coefficient arrays are stored in FFT order (index `i` carries wavenumber
/// `i` for `i <= n/2`, `i - n` otherwise), row-major with the last axis
/// fastest. Two-dimensional grids report a zero third wavenumber component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    dim: usize,
    n: usize,
}

impl Grid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::InvalidGrid(format!("dim must be 2 or 3, got {dim}")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and >= 8, got {n}"
            )));
        }
        Ok(Grid { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of collocation points (and stored coefficients).
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing `h = 2 pi / n`.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Lebesgue measure of the torus, `(2 pi)^dim`.
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.dim as i32)
    }

    /// Signed wavenumber carried by FFT index `i` along one axis.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Per-axis FFT indices of a flat index (unused axes are zero).
    #[inline]
    pub fn axes(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        match self.dim {
            2 => [idx / n, idx % n, 0],
            _ => [idx / (n * n), (idx / n) % n, idx % n],
        }
    }

    /// Wavevector at a flat index.
    #[inline]
    pub fn k_at(&self, idx: usize) -> [i64; 3] {
        let a = self.axes(idx);
        match self.dim {
            2 => [self.wavenumber(a[0]), self.wavenumber(a[1]), 0],
            _ => [
                self.wavenumber(a[0]),
                self.wavenumber(a[1]),
                self.wavenumber(a[2]),
            ],
        }
    }

    /// Flat index of a wavevector, if it lies in the representable range
    /// `[-n/2 + 1, n/2]` on every axis.
    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dim {
            return None;
        }
        let half = (self.n / 2) as i64;
        let mut idx = 0usize;
        for &kj in k {
            if kj <= -half || kj > half {
                return None;
            }
            let i = if kj >= 0 { kj } else { kj + self.n as i64 } as usize;
            idx = idx * self.n + i;
        }
        Some(idx)
    }

    /// Flat index of `-k` for the wavevector stored at `idx`.
    #[inline]
    pub fn neg_index(&self, idx: usize) -> usize {
        let n = self.n;
        let a = self.axes(idx);
        let neg = |i: usize| if i == 0 { 0 } else { n - i };
        match self.dim {
            2 => neg(a[0]) * n + neg(a[1]),
            _ => (neg(a[0]) * n + neg(a[1])) * n + neg(a[2]),
        }
    }

    /// True when any component sits on the Nyquist wavenumber `n/2`.
    #[inline]
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let a = self.axes(idx);
        let h = self.n / 2;
        a[..self.dim].iter().any(|&i| i == h)
    }

    /// True when the 2/3 rule removes the mode (`|k_j| > n/3` on some axis).
    #[inline]
    pub fn is_aliased(&self, idx: usize) -> bool {
        let k = self.k_at(idx);
        k[..self.dim]
            .iter()
            .any(|&kj| 3 * kj.unsigned_abs() as usize > self.n)
    }

    /// Physical coordinates of collocation point `idx`: `x_j = -pi + i_j h`.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let a = self.axes(idx);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for j in 0..self.dim {
            x[j] = -PI + a[j] as f64 * h;
        }
        x
    }

    /// Samples `f` at every collocation point.
    pub fn sample<F: Fn([f64; 3]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|i| f(self.point(i))).collect()
    }
}

/// `|k|` for an integer wavevector.
#[inline]
pub fn k_norm(k: &[i64; 3]) -> f64 {
    ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt()
}
