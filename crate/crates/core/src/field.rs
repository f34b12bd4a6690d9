use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{k_norm, Grid};

/// Relative tolerance used when accepting externally supplied coefficients.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Truncated Fourier representation of a real, zero-mean scalar on the torus,
/// `theta(x) = sum_k c_k exp(i k.x)`.
///
/// The coefficient array is kept exactly Hermitian (`c(-k) = conj c(k)`), the
/// mean and every Nyquist mode are identically zero, and all entries are
/// finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        SpectralField {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Builds a field from a full coefficient array, checking the invariants.
    ///
    /// Small Hermitian defects (relative [`SYMMETRY_TOLERANCE`]) are
    /// symmetrized away; larger ones are rejected.
    pub fn from_coeffs(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                actual: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("spectral coefficients"));
        }
        let mut f = SpectralField { grid, coeffs };
        f.coeffs[0] = Complex64::new(0.0, 0.0);
        for idx in 0..grid.len() {
            if grid.is_nyquist(idx) {
                f.coeffs[idx] = Complex64::new(0.0, 0.0);
            }
        }
        let scale = f.max_abs();
        let defect = f.hermitian_defect();
        let tol = SYMMETRY_TOLERANCE * scale.max(f64::MIN_POSITIVE);
        if defect > tol {
            return Err(Error::SymmetryViolated {
                defect,
                tolerance: tol,
            });
        }
        f.symmetrize();
        Ok(f)
    }

    /// Wraps a coefficient array produced internally that already satisfies
    /// every invariant.
    pub(crate) fn from_raw(grid: Grid, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        SpectralField { grid, coeffs }
    }

    /// Field with a single real Fourier pair, `a e^{ik.x} + conj(a) e^{-ik.x}`.
    pub fn single_mode(grid: Grid, k: &[i64], amplitude: Complex64) -> Result<Self> {
        let mut f = SpectralField::zeros(grid);
        f.set_mode(k, amplitude)?;
        Ok(f)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient at wavevector `k`; zero for wavevectors outside the lattice.
    pub fn coeff(&self, k: &[i64]) -> Complex64 {
        self.grid
            .index_of(k)
            .map(|i| self.coeffs[i])
            .unwrap_or_default()
    }

    /// Sets `c(k) = a` and `c(-k) = conj(a)`.
    pub fn set_mode(&mut self, k: &[i64], amplitude: Complex64) -> Result<()> {
        let idx = self
            .grid
            .index_of(k)
            .ok_or_else(|| Error::InvalidParameter(format!("wavevector {k:?} outside lattice")))?;
        if idx == 0 || self.grid.is_nyquist(idx) {
            return Err(Error::InvalidParameter(format!(
                "wavevector {k:?} is the mean or a Nyquist mode"
            )));
        }
        if !amplitude.re.is_finite() || !amplitude.im.is_finite() {
            return Err(Error::NonFinite("mode amplitude"));
        }
        let neg = self.grid.neg_index(idx);
        self.coeffs[idx] = amplitude;
        self.coeffs[neg] = amplitude.conj();
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// `max_k |c(k) - conj c(-k)|`.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|i| (self.coeffs[i] - self.coeffs[self.grid.neg_index(i)].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub(crate) fn symmetrize(&mut self) {
        for i in 0..self.coeffs.len() {
            let j = self.grid.neg_index(i);
            if j < i {
                continue;
            }
            if j == i {
                self.coeffs[i].im = 0.0;
                continue;
            }
            let a = (self.coeffs[i] + self.coeffs[j].conj()) * 0.5;
            self.coeffs[i] = a;
            self.coeffs[j] = a.conj();
        }
    }

    fn check_grid(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    /// Multiplies every coefficient by a real even multiplier `m(k)`.
    /// Zero mode and Nyquist modes stay zero.
    pub fn map_multiplier<F: Fn(&[i64; 3]) -> f64>(&self, m: F) -> SpectralField {
        let g = self.grid;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if i == 0 || g.is_nyquist(i) {
                    Complex64::new(0.0, 0.0)
                } else {
                    c * m(&g.k_at(i))
                }
            })
            .collect();
        SpectralField::from_raw(g, coeffs)
    }

    pub fn scaled(&self, a: f64) -> SpectralField {
        SpectralField::from_raw(self.grid, self.coeffs.iter().map(|c| c * a).collect())
    }

    /// `self + a * other`.
    pub fn add_scaled(&self, a: f64, other: &SpectralField) -> Result<SpectralField> {
        self.check_grid(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| x + y * a)
            .collect();
        Ok(SpectralField::from_raw(self.grid, coeffs))
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.add_scaled(-1.0, other)
    }

    /// In-place `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &SpectralField) -> Result<()> {
        self.check_grid(other)?;
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += y * a;
        }
        Ok(())
    }

    /// `L^2` inner product `(2 pi)^d sum_k Re(f(k) conj g(k))`.
    pub fn inner_l2(&self, other: &SpectralField) -> Result<f64> {
        self.weighted_inner(other, |_| 1.0)
    }

    /// `H^1` inner product `<Lambda f, Lambda g>`.
    pub fn inner_h1(&self, other: &SpectralField) -> Result<f64> {
        let g = self.grid;
        self.check_grid(other)?;
        let s: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .enumerate()
            .map(|(i, (a, b))| {
                let k = g.k_at(i);
                let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
                k2 * (a.re * b.re + a.im * b.im)
            })
            .sum();
        Ok(g.volume() * s)
    }

    /// `(2 pi)^d sum_k w(|k|) Re(f(k) conj g(k))`.
    pub fn weighted_inner<W: Fn(f64) -> f64>(&self, other: &SpectralField, w: W) -> Result<f64> {
        self.check_grid(other)?;
        let g = self.grid;
        let s: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .enumerate()
            .skip(1)
            .map(|(i, (a, b))| w(k_norm(&g.k_at(i))) * (a.re * b.re + a.im * b.im))
            .sum();
        Ok(g.volume() * s)
    }

    /// `(2 pi)^d sum_k w(|k|) |c(k)|^2`.
    pub fn weighted_energy<W: Fn(f64) -> f64>(&self, w: W) -> f64 {
        let g = self.grid;
        let s: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| w(k_norm(&g.k_at(i))) * c.norm_sqr())
            .sum();
        g.volume() * s
    }

    /// Spectral `L^2` norm via Parseval.
    pub fn norm_l2(&self) -> f64 {
        self.weighted_energy(|_| 1.0).sqrt()
    }

    /// Homogeneous Sobolev norm `||Lambda^s f||_{L^2}`.
    pub fn norm_hs(&self, s: f64) -> f64 {
        self.weighted_energy(|k| k.powf(2.0 * s)).sqrt()
    }

    pub fn norm_h1(&self) -> f64 {
        self.norm_hs(1.0)
    }
}

/// Fractional power of `Lambda = sqrt(-Laplacian)`: the multiplier `|k|^s`.
pub fn apply_lambda_power(f: &SpectralField, s: f64) -> Result<SpectralField> {
    if !(-2.0..=4.0).contains(&s) || !s.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Lambda power s = {s} outside [-2, 4]"
        )));
    }
    if s == 0.0 {
        return Ok(f.clone());
    }
    Ok(f.map_multiplier(|k| k_norm(k).powf(s)))
}

/// Damping operator `D = Lambda + 1`.
pub fn apply_damping(f: &SpectralField) -> SpectralField {
    f.map_multiplier(|k| k_norm(k) + 1.0)
}

/// Zeroes every coefficient with some `|k_j| > n/3`.
pub fn dealias_two_thirds(f: &SpectralField) -> SpectralField {
    let g = f.grid();
    let coeffs = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if g.is_aliased(i) {
                Complex64::new(0.0, 0.0)
            } else {
                *c
            }
        })
        .collect();
    SpectralField::from_raw(g, coeffs)
}

/// A vector field stored as `dim` spectral components.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: Vec<SpectralField>,
}

impl VectorField {
    pub fn new(components: Vec<SpectralField>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidParameter("vector field needs components".into()))?;
        let g = first.grid();
        if components.len() != g.dim() || components.iter().any(|c| c.grid() != g) {
            return Err(Error::GridMismatch(
                "vector components must share one grid and match its dimension".into(),
            ));
        }
        Ok(VectorField { components })
    }

    pub fn grid(&self) -> Grid {
        self.components[0].grid()
    }

    pub fn components(&self) -> &[SpectralField] {
        &self.components
    }

    pub fn component(&self, j: usize) -> &SpectralField {
        &self.components[j]
    }

    /// `max_k |k . u(k)|`, the spectral divergence defect.
    pub fn max_divergence(&self) -> f64 {
        let g = self.grid();
        (0..g.len())
            .map(|i| {
                let k = g.k_at(i);
                self.components
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c.coeffs()[i] * k[j] as f64)
                    .sum::<Complex64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.max_abs())
            .fold(0.0, f64::max)
    }

    /// `L^2` norm of the vector, `(sum_j ||u_j||^2)^{1/2}`.
    pub fn norm_l2(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.norm_l2().powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid2(n: usize) -> Grid {
        Grid::new(2, n).unwrap()
    }

    #[test]
    fn lambda_power_single_modes() {
        let g = grid2(16);
        let a = Complex64::new(0.3, -0.7);
        let f = SpectralField::single_mode(g, &[1, 0], a).unwrap();
        let out = apply_lambda_power(&f, 2.0).unwrap();
        assert_eq!(out.coeff(&[1, 0]), a);

        let f = SpectralField::single_mode(g, &[1, 1], a).unwrap();
        let out = apply_lambda_power(&f, 1.5).unwrap();
        let factor = 2f64.powf(0.75);
        assert_relative_eq!(out.coeff(&[1, 1]).re, a.re * factor, max_relative = 1e-14);
        assert_relative_eq!(out.coeff(&[-1, -1]).im, -a.im * factor, max_relative = 1e-14);

        assert_eq!(apply_lambda_power(&f, 0.0).unwrap(), f);
        assert!(apply_lambda_power(&f, 4.5).is_err());
    }

    #[test]
    fn damping_examples() {
        let a = Complex64::new(1.25, 0.0);
        let f = SpectralField::single_mode(grid2(16), &[1, 0], a).unwrap();
        assert_eq!(apply_damping(&f).coeff(&[1, 0]), a * 2.0);

        let g3 = Grid::new(3, 8).unwrap();
        let f = SpectralField::single_mode(g3, &[0, 1, 1], a).unwrap();
        let d = apply_damping(&f).coeff(&[0, 1, 1]);
        assert_relative_eq!(d.re, (2f64.sqrt() + 1.0) * a.re, max_relative = 1e-15);

        let z = SpectralField::zeros(g3);
        assert_eq!(apply_damping(&z), z);
    }

    #[test]
    fn dealias_examples() {
        let g = grid2(12);
        let mut f = SpectralField::zeros(g);
        f.set_mode(&[5, 0], Complex64::new(1.0, 0.0)).unwrap();
        f.set_mode(&[1, 0], Complex64::new(0.5, 0.0)).unwrap();
        let d = dealias_two_thirds(&f);
        assert_eq!(d.coeff(&[5, 0]), Complex64::new(0.0, 0.0));
        assert_eq!(d.coeff(&[1, 0]), Complex64::new(0.5, 0.0));
    }

    #[test]
    fn from_coeffs_rejects_asymmetry_and_nan() {
        let g = grid2(8);
        let mut c = vec![Complex64::new(0.0, 0.0); g.len()];
        c[g.index_of(&[1, 0]).unwrap()] = Complex64::new(1.0, 0.0);
        assert!(matches!(
            SpectralField::from_coeffs(g, c.clone()),
            Err(Error::SymmetryViolated { .. })
        ));
        c[g.index_of(&[-1, 0]).unwrap()] = Complex64::new(1.0, 0.0);
        c[0] = Complex64::new(3.0, 0.0);
        let f = SpectralField::from_coeffs(g, c.clone()).unwrap();
        assert_eq!(f.coeffs()[0], Complex64::new(0.0, 0.0));
        c[5] = Complex64::new(f64::NAN, 0.0);
        assert!(SpectralField::from_coeffs(g, c).is_err());
    }

    #[test]
    fn set_mode_rejects_mean_and_nyquist() {
        let mut f = SpectralField::zeros(grid2(8));
        assert!(f.set_mode(&[0, 0], Complex64::new(1.0, 0.0)).is_err());
        assert!(f.set_mode(&[4, 0], Complex64::new(1.0, 0.0)).is_err());
    }
}
