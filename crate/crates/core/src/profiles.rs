//! Reproducible initial data.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::{k_norm, Grid};

/// Random field with `|c_k| ~ |k|^{-slope}` and uniform phases, supported on
/// `|k| <= n/4`, scaled to the given L² norm.
pub fn random_smooth(grid: Grid, seed: u64, l2: f64, slope: f64) -> Result<SpectralField> {
    random_smooth_where(grid, seed, l2, slope, |_| true)
}

/// As [`random_smooth`], keeping only the modes accepted by `keep`.
pub fn random_smooth_where<F: Fn(&[i64; 3]) -> bool>(
    grid: Grid,
    seed: u64,
    l2: f64,
    slope: f64,
    keep: F,
) -> Result<SpectralField> {
    if !(l2 >= 0.0 && l2.is_finite()) {
        return Err(Error::InvalidParameter(format!("target L2 norm must be >= 0, got {l2}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cutoff = grid.n() as f64 / 4.0;
    let mut c = vec![Complex64::new(0.0, 0.0); grid.len()];
    for i in 0..grid.len() {
        let j = grid.neg_index(i);
        // one draw per conjugate pair, in index order
        if i == 0 || j < i || grid.is_nyquist(i) {
            continue;
        }
        let k = grid.k_at(i);
        let r = k_norm(&k);
        let phase: f64 = rng.gen_range(0.0..TAU);
        if r > cutoff || !keep(&k) {
            continue;
        }
        let z = Complex64::from_polar(r.powf(-slope), phase);
        c[i] = z;
        c[j] = z.conj();
    }
    let f = SpectralField::from_coeffs(grid, c)?;
    let norm = f.norm_l2();
    if norm == 0.0 {
        return Ok(f);
    }
    Ok(f.scaled(l2 / norm))
}

/// `amplitude * cos(k . x)`.
pub fn cosine_mode(grid: Grid, k: &[i64], amplitude: f64) -> Result<SpectralField> {
    SpectralField::single_mode(grid, k, Complex64::new(0.5 * amplitude, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn normalized_and_reproducible() {
        let g = Grid::new(2, 32).unwrap();
        let a = random_smooth(g, 11, 3.0, 3.0).unwrap();
        let b = random_smooth(g, 11, 3.0, 3.0).unwrap();
        let c = random_smooth(g, 12, 3.0, 3.0).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_relative_eq!(a.norm_l2(), 3.0, max_relative = 1e-14);
        assert_eq!(a.hermitian_defect(), 0.0);
        for i in 0..g.len() {
            if k_norm(&g.k_at(i)) > 8.0 {
                assert_eq!(a.coeffs()[i], Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn mask_keeps_phases_stable() {
        let g = Grid::new(3, 8).unwrap();
        let all = random_smooth(g, 5, 1.0, 3.0).unwrap();
        let off_plane = random_smooth_where(g, 5, 1.0, 3.0, |k| k[2] != 0).unwrap();
        let k = [1, 0, 1];
        let ratio = off_plane.coeff(&k) / all.coeff(&k);
        assert!(ratio.im.abs() < 1e-14 && ratio.re > 0.0);
        assert_eq!(off_plane.coeff(&[1, 0, 0]), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn cosine_profile() {
        let g = Grid::new(2, 16).unwrap();
        let f = cosine_mode(g, &[1, 0], 2.0).unwrap();
        assert_eq!(f.coeff(&[-1, 0]), Complex64::new(1.0, 0.0));
        assert!(cosine_mode(g, &[0, 0], 1.0).is_err());
    }
}
