//! Energy budgets, dissipation rates, long-time averages and the sup-norm
//! bound checkers evaluated along a trajectory.

use std::io::Write;

use crate::dynamics::{ForcingSpec, ModelParams};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::{k_norm, Grid};
use crate::norms::{norms, NormReport};

/// Per-mode weights for the quadratic forms in the energy balance.
#[derive(Debug, Clone)]
pub struct BudgetWeights {
    grid: Grid,
    half: Vec<f64>,
    gamma: Vec<f64>,
    grad: Vec<f64>,
}

impl BudgetWeights {
    pub fn new(grid: Grid, gamma: f64) -> Self {
        let mut half = Vec::with_capacity(grid.len());
        let mut gam = Vec::with_capacity(grid.len());
        let mut grad = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let r = k_norm(&grid.k_at(i));
            half.push(r + 1.0);
            gam.push(r.powf(gamma));
            grad.push(r * r);
        }
        BudgetWeights {
            grid,
            half,
            gamma: gam,
            grad,
        }
    }

    /// Budget of one step, with every integrand evaluated at the midpoint
    /// state `(prev + next) / 2`.
    pub fn step_budget(
        &self,
        prev: &SpectralField,
        next: &SpectralField,
        lambda: f64,
        kappa: f64,
        forcing: &SpectralField,
        dt: f64,
    ) -> BudgetTerms {
        let vol = self.grid.volume();
        let (a, b, s) = (prev.coeffs(), next.coeffs(), forcing.coeffs());
        let (mut e0, mut e1, mut h, mut g, mut d, mut inj) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..a.len() {
            let m = (a[i] + b[i]) * 0.5;
            let q = m.norm_sqr();
            e0 += a[i].norm_sqr();
            e1 += b[i].norm_sqr();
            h += self.half[i] * q;
            g += self.gamma[i] * q;
            d += self.grad[i] * q;
            inj += s[i].re * m.re + s[i].im * m.im;
        }
        let de_dt = 0.5 * vol * (e1 - e0) / dt;
        let h_half = vol * h;
        let lambda_gamma = vol * g;
        let injection = vol * inj;
        let damping = lambda * h_half;
        let dissipation = kappa * lambda_gamma;
        BudgetTerms {
            de_dt,
            damping,
            dissipation,
            injection,
            residual: de_dt + damping + dissipation - injection,
            grad_sq: vol * d,
            h_half,
            lambda_gamma,
        }
    }
}

/// Rates over one step. `residual = de_dt + damping + dissipation - injection`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BudgetTerms {
    /// `(||theta_next||^2 - ||theta_prev||^2) / (2 dt)`.
    pub de_dt: f64,
    /// `lambda (||Lambda^{1/2} theta||^2 + ||theta||^2)`.
    pub damping: f64,
    /// `kappa ||Lambda^{gamma/2} theta||^2`.
    pub dissipation: f64,
    /// `<S, theta>`.
    pub injection: f64,
    pub residual: f64,
    /// `||grad theta||^2`.
    pub grad_sq: f64,
    /// `||Lambda^{1/2} theta||^2 + ||theta||^2`.
    pub h_half: f64,
    /// `||Lambda^{gamma/2} theta||^2`.
    pub lambda_gamma: f64,
}

pub fn energy_budget(
    theta_prev: &SpectralField,
    theta_next: &SpectralField,
    params: &ModelParams,
    forcing: &ForcingSpec,
    dt: f64,
) -> Result<BudgetTerms> {
    let g = theta_prev.grid();
    if theta_next.grid() != g || forcing.field().grid() != g {
        return Err(Error::GridMismatch("budget operands differ".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    Ok(BudgetWeights::new(g, params.gamma).step_budget(
        theta_prev,
        theta_next,
        params.lambda,
        params.kappa,
        forcing.field(),
        dt,
    ))
}

/// Time integrals accumulated step by step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Cumulative {
    pub grad_sq: f64,
    pub lambda_gamma: f64,
    pub h_half: f64,
    pub injection: f64,
    pub residual: f64,
    pub abs_residual: f64,
}

impl Cumulative {
    pub fn add(&mut self, b: &BudgetTerms, dt: f64) {
        self.grad_sq += b.grad_sq * dt;
        self.lambda_gamma += b.lambda_gamma * dt;
        self.h_half += b.h_half * dt;
        self.injection += b.injection * dt;
        self.residual += b.residual * dt;
        self.abs_residual += b.residual.abs() * dt;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub step: u64,
    /// `||theta||^2`.
    pub energy: f64,
    pub norms: NormReport,
    /// Budget of the step that ended at this sample; zero at `t = 0`.
    pub budget: BudgetTerms,
    pub cumulative: Cumulative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub grid: Grid,
    pub lambda: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub dt: f64,
    pub samples: Vec<Sample>,
    /// States at each sample, when requested.
    pub states: Vec<SpectralField>,
    /// Observer failures, in order of occurrence.
    pub annotations: Vec<String>,
    pub final_state: SpectralField,
}

impl TrajectoryRecord {
    pub fn initial(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("a record always holds the initial sample")
    }

    pub fn horizon(&self) -> f64 {
        self.last().t
    }

    /// Sample at time `t`, matched to within a relative `1e-9`.
    pub fn sample_at(&self, t: f64) -> Result<&Sample> {
        if t > self.horizon() * (1.0 + 1e-9) {
            return Err(Error::HorizonExceeded(format!(
                "requested t = {t}, record ends at {}",
                self.horizon()
            )));
        }
        self.samples
            .iter()
            .find(|s| (s.t - t).abs() <= 1e-9 * t.max(self.dt))
            .ok_or_else(|| Error::InvalidParameter(format!("no sample at t = {t}")))
    }

    fn norm_series(&self, p: f64) -> Result<Vec<(f64, f64)>> {
        self.samples
            .iter()
            .map(|s| {
                s.norms
                    .lp(p)
                    .map(|v| (s.t, v))
                    .ok_or_else(|| Error::InvalidParameter(format!("L^{p} norm was not recorded")))
            })
            .collect()
    }
}

/// `eps(t) = kappa / t * int_0^t ||grad theta||^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationSeries {
    pub t: Vec<f64>,
    pub eps: Vec<f64>,
}

impl DissipationSeries {
    pub fn last(&self) -> Option<f64> {
        self.eps.last().copied()
    }
}

pub fn dissipation_rate(record: &TrajectoryRecord, kappa: f64) -> DissipationSeries {
    let (t, eps) = record
        .samples
        .iter()
        .filter(|s| s.t > 0.0)
        .map(|s| (s.t, kappa * s.cumulative.grad_sq / s.t))
        .unzip();
    DissipationSeries { t, eps }
}

/// `(value at the horizon, max over the final 20% of samples)`.
pub fn limsup_proxy(values: &[f64]) -> Option<(f64, f64)> {
    let last = *values.last()?;
    let start = values.len() - values.len().div_ceil(5);
    let tail_max = values[start..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some((last, tail_max))
}

/// Finite-horizon averages of the energy balance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatBalance {
    pub horizon: f64,
    pub avg_damping: f64,
    pub avg_dissipation: f64,
    pub avg_injection: f64,
    /// `avg_damping + avg_dissipation - avg_injection`.
    pub residual: f64,
    /// `(||theta_0||^2 + ||theta(T)||^2) / (2T)`.
    pub bound: f64,
    /// `residual + (||theta(T)||^2 - ||theta_0||^2) / (2T)`; zero up to the
    /// scheme error.
    pub identity_defect: f64,
}

impl StatBalance {
    pub fn within_bound(&self, scheme_error: f64) -> bool {
        self.residual.abs() <= self.bound + scheme_error
    }
}

pub fn stat_balance(record: &TrajectoryRecord, horizon: f64) -> Result<StatBalance> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    let s = record.sample_at(horizon)?;
    let e0 = record.initial().energy;
    let c = &s.cumulative;
    let avg_damping = record.lambda * c.h_half / horizon;
    let avg_dissipation = record.kappa * c.lambda_gamma / horizon;
    let avg_injection = c.injection / horizon;
    let residual = avg_damping + avg_dissipation - avg_injection;
    Ok(StatBalance {
        horizon,
        avg_damping,
        avg_dissipation,
        avg_injection,
        residual,
        bound: (e0 + s.energy) / (2.0 * horizon),
        identity_defect: residual + (s.energy - e0) / (2.0 * horizon),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRow {
    pub t: f64,
    pub bound: f64,
    pub value: f64,
    /// `bound - value`.
    pub margin: f64,
}

/// A bound evaluated at every sample; a row violates it when the margin is
/// below `-tolerance * bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub rows: Vec<BoundRow>,
    pub tolerance: f64,
}

impl BoundCheck {
    fn new<F: Fn(f64) -> f64>(series: &[(f64, f64)], bound: F, tolerance: f64) -> Self {
        let rows = series
            .iter()
            .map(|&(t, value)| {
                let b = bound(t);
                BoundRow {
                    t,
                    bound: b,
                    value,
                    margin: b - value,
                }
            })
            .collect();
        BoundCheck { rows, tolerance }
    }

    pub fn violations(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.margin < -self.tolerance * r.bound.abs())
            .count()
    }

    pub fn holds(&self) -> bool {
        self.violations() == 0
    }

    /// Smallest `margin / bound`.
    pub fn min_relative_margin(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| if r.bound != 0.0 { r.margin / r.bound.abs() } else { r.margin })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn margins(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.margin).collect()
    }
}

/// Tolerance on bound checks, relative to the bound.
pub const BOUND_TOLERANCE: f64 = 1e-6;

fn forcing_norm(forcing: &ForcingSpec, p: f64) -> Result<f64> {
    let r = norms(forcing.field(), &[], &[p], &[])?;
    Ok(r.lp(p).unwrap_or(0.0))
}

/// `e^{-lambda t} (||theta_0||_p - ||S||_p / lambda) + ||S||_p / lambda`.
pub fn lp_bound(t: f64, lambda: f64, theta0_p: f64, forcing_p: f64) -> f64 {
    let r = forcing_p / lambda;
    (-lambda * t).exp() * (theta0_p - r) + r
}

pub fn lp_bound_check(record: &TrajectoryRecord, forcing: &ForcingSpec, p: f64) -> Result<BoundCheck> {
    let lambda = record.lambda;
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter("L^p damping bound needs lambda > 0".into()));
    }
    let series = record.norm_series(p)?;
    let s_p = forcing_norm(forcing, p)?;
    let th0 = series[0].1;
    Ok(BoundCheck::new(&series, |t| lp_bound(t, lambda, th0, s_p), BOUND_TOLERANCE))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinfCheck {
    /// `||theta_0||_inf e^{-c0 kappa t} + ||S||_inf / (c0 kappa)`.
    pub decay: BoundCheck,
    /// `||theta_0||_inf + ||S||_inf`.
    pub uniform: BoundCheck,
}

pub fn linf_decay_bound(t: f64, kappa: f64, c0: f64, theta0_inf: f64, forcing_inf: f64) -> f64 {
    theta0_inf * (-c0 * kappa * t).exp() + forcing_inf / (c0 * kappa)
}

pub fn linf_decay_check(record: &TrajectoryRecord, forcing: &ForcingSpec, c0: f64) -> Result<LinfCheck> {
    let kappa = record.kappa;
    if !(kappa > 0.0) || !(c0 > 0.0) {
        return Err(Error::InvalidParameter("sup-norm decay bound needs kappa > 0 and c0 > 0".into()));
    }
    let series = record.norm_series(f64::INFINITY)?;
    let s_inf = forcing_norm(forcing, f64::INFINITY)?;
    let th0 = series[0].1;
    Ok(LinfCheck {
        decay: BoundCheck::new(&series, |t| linf_decay_bound(t, kappa, c0, th0, s_inf), BOUND_TOLERANCE),
        uniform: BoundCheck::new(&series, |_| th0 + s_inf, BOUND_TOLERANCE),
    })
}

/// Constant-free shape of the small-time L² to L^∞ smoothing bound:
/// `(2/t + 1)^{(d+1-gamma)/(2 gamma)} (||theta_0||_2 + ||S||_2 / sqrt(c0 kappa)) + ||S||_inf`.
#[allow(clippy::too_many_arguments)]
pub fn de_giorgi_shape(
    t: f64,
    d: usize,
    gamma: f64,
    kappa: f64,
    c0: f64,
    theta0_l2: f64,
    forcing_l2: f64,
    forcing_inf: f64,
) -> f64 {
    let e = (d as f64 + 1.0 - gamma) / (2.0 * gamma);
    (2.0 / t + 1.0).powf(e) * (theta0_l2 + forcing_l2 / (c0 * kappa).sqrt()) + forcing_inf
}

fn de_giorgi_series(record: &TrajectoryRecord, forcing: &ForcingSpec, c0: f64) -> Result<Vec<(f64, f64, f64)>> {
    if !(record.kappa > 0.0) {
        return Err(Error::InvalidParameter("smoothing bound needs kappa > 0".into()));
    }
    let s2 = forcing_norm(forcing, 2.0)?;
    let sinf = forcing_norm(forcing, f64::INFINITY)?;
    let th0 = record.initial().norms.l2;
    let linf = record.norm_series(f64::INFINITY)?;
    Ok(linf
        .into_iter()
        .filter(|(t, _)| *t > 0.0 && *t <= 1.0)
        .map(|(t, v)| {
            let shape = de_giorgi_shape(t, record.grid.dim(), record.gamma, record.kappa, c0, th0, s2, sinf);
            (t, v, shape)
        })
        .collect())
}

/// Smallest constant for which the smoothing bound holds on `(0, 1]` of a
/// calibration run.
pub fn fit_de_giorgi_constant(record: &TrajectoryRecord, forcing: &ForcingSpec, c0: f64) -> Result<f64> {
    let series = de_giorgi_series(record, forcing, c0)?;
    if series.is_empty() {
        return Err(Error::InvalidParameter("no samples in (0, 1]".into()));
    }
    Ok(series.iter().map(|(_, v, s)| v / s).fold(0.0, f64::max))
}

/// The smoothing bound with a frozen constant on a held-out run.
pub fn de_giorgi_check(record: &TrajectoryRecord, forcing: &ForcingSpec, c0: f64, constant: f64) -> Result<BoundCheck> {
    let series = de_giorgi_series(record, forcing, c0)?;
    let rows = series
        .iter()
        .map(|&(t, value, shape)| BoundRow {
            t,
            bound: constant * shape,
            value,
            margin: constant * shape - value,
        })
        .collect();
    Ok(BoundCheck {
        rows,
        tolerance: BOUND_TOLERANCE,
    })
}

/// Column names of [`write_csv`] before any extra columns.
pub const CSV_COLUMNS: [&str; 12] = [
    "t",
    "l2",
    "hs_half",
    "hs1",
    "linf",
    "de_dt",
    "damping",
    "dissipation",
    "injection",
    "residual",
    "cum_grad_sq",
    "eps",
];

/// One row per sample. A `# fingerprint=...` line precedes the header; extra
/// columns must have one value per sample.
pub fn write_csv<W: Write>(
    record: &TrajectoryRecord,
    fingerprint: &str,
    extra: &[(&str, Vec<f64>)],
    mut out: W,
) -> Result<()> {
    for (name, v) in extra {
        if v.len() != record.samples.len() {
            return Err(Error::ShapeMismatch {
                expected: record.samples.len(),
                actual: v.len(),
            });
        }
        if name.contains(',') {
            return Err(Error::InvalidParameter(format!("column name {name:?} contains a comma")));
        }
    }
    writeln!(out, "# fingerprint={fingerprint}")?;
    let mut header: Vec<&str> = CSV_COLUMNS.to_vec();
    header.extend(extra.iter().map(|(n, _)| *n));
    writeln!(out, "{}", header.join(","))?;
    for (i, s) in record.samples.iter().enumerate() {
        let eps = if s.t > 0.0 {
            record.kappa * s.cumulative.grad_sq / s.t
        } else {
            0.0
        };
        let nan = f64::NAN;
        let mut row = vec![
            s.t,
            s.norms.l2,
            s.norms.hs(0.5).unwrap_or(nan),
            s.norms.hs(1.0).unwrap_or(nan),
            s.norms.linf,
            s.budget.de_dt,
            s.budget.damping,
            s.budget.dissipation,
            s.budget.injection,
            s.budget.residual,
            s.cumulative.grad_sq,
            eps,
        ];
        row.extend(extra.iter().map(|(_, v)| v[i]));
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lp_bound_examples() {
        for t in [0.0, 0.3, 1.0, 5.0] {
            assert_relative_eq!(lp_bound(t, 2.0, 0.0, 1.0), (1.0 - (-2.0 * t).exp()) / 2.0, epsilon = 1e-15);
            assert_relative_eq!(lp_bound(t, 0.7, 3.0, 0.0), 3.0 * (-0.7 * t).exp(), epsilon = 1e-15);
        }
    }

    #[test]
    fn linf_bound_without_data_is_constant() {
        for t in [0.0, 1.0, 100.0] {
            assert_eq!(linf_decay_bound(t, 0.5, 1.0, 0.0, 2.0), 4.0);
        }
    }

    #[test]
    fn limsup_uses_final_fifth() {
        let v: Vec<f64> = vec![9.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 3.0, 2.0];
        assert_eq!(limsup_proxy(&v), Some((2.0, 3.0)));
        assert_eq!(limsup_proxy(&[4.0]), Some((4.0, 4.0)));
        assert_eq!(limsup_proxy(&[]), None);
    }

    #[test]
    fn de_giorgi_shape_exponent() {
        // d = 2, gamma = 1: exponent 1
        let v = de_giorgi_shape(1.0, 2, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0);
        assert_relative_eq!(v, 3.0, epsilon = 1e-15);
        let v = de_giorgi_shape(0.5, 3, 2.0, 4.0, 1.0, 0.0, 2.0, 1.0);
        assert_relative_eq!(v, 5f64.powf(0.5) * 1.0 + 1.0, epsilon = 1e-14);
    }
}
