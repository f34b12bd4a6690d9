//! Tangent dynamics, phase-space volume growth, and the explicit constants
//! behind the attractor dimension bound.

use crate::dynamics::{step_count, ForcingSpec, Integrator, ModelParams, SimulationState, StepOptions};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::{k_norm, Grid};
use crate::profiles::random_smooth_where;

/// Largest tangent set accepted by [`propagate_volume`].
pub const MAX_TANGENTS: usize = 64;

/// A pivot below this fraction of the pre-orthogonalization norm is a rank
/// collapse.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Gram deviation accepted by [`trace_estimate`].
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-6;

/// `-kappa Lambda^gamma psi`, minus `lambda (Lambda + 1) psi` when damping is
/// included.
fn linear_part(params: &ModelParams, include_damping: bool, psi: &SpectralField) -> SpectralField {
    psi.map_multiplier(|k| {
        let r = k_norm(k);
        let mut s = if params.kappa != 0.0 {
            params.kappa * r.powf(params.gamma)
        } else {
            0.0
        };
        if include_damping {
            s += params.lambda * (r + 1.0);
        }
        -s
    })
}

fn probe_integrator(params: &ModelParams, theta: &SpectralField) -> Result<Integrator> {
    let state = SimulationState::new(params.clone(), ForcingSpec::zero(theta.grid()), theta.clone(), 1.0)?;
    Integrator::new(&state, StepOptions::default())
}

fn apply_tangent_operator(
    integ: &mut Integrator,
    params: &ModelParams,
    include_damping: bool,
    theta: &SpectralField,
    psi: &SpectralField,
) -> Result<SpectralField> {
    let mut out = linear_part(params, include_damping, psi);
    if params.nonlinear {
        out.axpy(1.0, &integ.tangent_term(theta, psi)?)?;
    }
    Ok(out)
}

/// `A_theta psi = -kappa Lambda^gamma psi - u[theta].grad psi - u[psi].grad theta`,
/// additionally `- lambda (Lambda + 1) psi` with `include_damping`. The
/// transport terms are band-limited like the solver's.
pub fn linearized_rhs(
    psi: &SpectralField,
    theta: &SpectralField,
    params: &ModelParams,
    include_damping: bool,
) -> Result<SpectralField> {
    if psi.grid() != theta.grid() {
        return Err(Error::GridMismatch("tangent and base fields differ".into()));
    }
    let mut integ = probe_integrator(params, theta)?;
    apply_tangent_operator(&mut integ, params, include_damping, theta, psi)
}

/// `(eps, r(eps))` with
/// `r = ||pi(t)(theta0 + eps psi0) - pi(t) theta0 - eps psi(t)||_{H^1} / (eps ||psi0||_{H^1})`.
///
/// `psi(t)` follows the linearization of the discrete flow, including the
/// damping term, so that it is the derivative of the computed solution map.
pub fn gateaux_check(
    theta0: &SpectralField,
    psi0: &SpectralField,
    params: &ModelParams,
    forcing: &ForcingSpec,
    t: f64,
    dt: f64,
    eps_list: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if eps_list.iter().any(|&e| !(e > 0.0)) || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("eps values must be positive and decreasing".into()));
    }
    let steps = step_count(t, dt)?;
    let grid = theta0.grid();
    // project the direction the same way the solver projects data
    let psi0 = SimulationState::new(params.clone(), ForcingSpec::zero(grid), psi0.clone(), dt)?.theta;
    let mut base = SimulationState::new(params.clone(), forcing.clone(), theta0.clone(), dt)?;
    let mut integ = Integrator::new(&base, StepOptions::default())?;
    let mut tangent = [psi0.clone()];
    for _ in 0..steps {
        integ.step_with_tangents(&mut base, &mut tangent, true)?;
    }
    let psi_norm = psi0.norm_h1();
    let mut out = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let start = base_start(theta0, &psi0, eps)?;
        let mut pert = SimulationState::new(params.clone(), forcing.clone(), start, dt)?;
        let mut integ = Integrator::new(&pert, StepOptions::default())?;
        for _ in 0..steps {
            integ.step(&mut pert)?;
        }
        let mut rem = pert.theta.sub(&base.theta)?;
        rem.axpy(-eps, &tangent[0])?;
        out.push((eps, rem.norm_h1() / (eps * psi_norm)));
    }
    Ok(out)
}

fn base_start(theta0: &SpectralField, psi0: &SpectralField, eps: f64) -> Result<SpectralField> {
    theta0.add_scaled(eps, psi0)
}

/// Tangent vectors kept H¹-orthonormal by repeated Gram–Schmidt, with the
/// accumulated logarithm of the volume they span.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentBundle {
    psi: Vec<SpectralField>,
    log_volume: f64,
    last_orthonormalization: u64,
}

impl TangentBundle {
    /// Orthonormalizes the given vectors; their initial volume is the
    /// reference, so the bundle starts at `log V = 0`.
    pub fn new(psi: Vec<SpectralField>) -> Result<Self> {
        if psi.is_empty() {
            return Err(Error::EmptySet);
        }
        let grid = psi[0].grid();
        if psi.iter().any(|p| p.grid() != grid) {
            return Err(Error::GridMismatch("tangent vectors on different grids".into()));
        }
        let mut b = TangentBundle {
            psi,
            log_volume: 0.0,
            last_orthonormalization: 0,
        };
        b.orthonormalize()?;
        Ok(b)
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    pub fn vectors(&self) -> &[SpectralField] {
        &self.psi
    }

    /// Accumulated `log V_n` since construction.
    pub fn log_volume(&self) -> f64 {
        self.log_volume
    }

    /// Step count of the last orthonormalization.
    pub fn last_orthonormalization(&self) -> u64 {
        self.last_orthonormalization
    }

    /// Modified Gram–Schmidt in the H¹ inner product; returns
    /// `sum_j log R_jj` without adding it to the accumulated volume.
    fn orthonormalize(&mut self) -> Result<f64> {
        let mut log_sum = 0.0;
        for j in 0..self.psi.len() {
            let before = self.psi[j].norm_h1();
            for i in 0..j {
                let (done, rest) = self.psi.split_at_mut(j);
                let c = done[i].inner_h1(&rest[0])?;
                rest[0].axpy(-c, &done[i])?;
            }
            let pivot = self.psi[j].norm_h1();
            if !(pivot > RANK_TOLERANCE * before) || pivot == 0.0 {
                return Err(Error::RankCollapse { index: j, pivot });
            }
            self.psi[j] = self.psi[j].scaled(1.0 / pivot);
            log_sum += pivot.ln();
        }
        Ok(log_sum)
    }

    fn reorthonormalize(&mut self, step: u64) -> Result<()> {
        self.log_volume += self.orthonormalize()?;
        self.last_orthonormalization = step;
        Ok(())
    }
}

/// `max |G - I|` of the H¹ Gram matrix.
pub fn gram_deviation(set: &[SpectralField]) -> Result<f64> {
    let mut dev = 0.0f64;
    for i in 0..set.len() {
        for j in i..set.len() {
            let g = set[i].inner_h1(&set[j])?;
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g - target).abs());
        }
    }
    Ok(dev)
}

/// `sum_j <Lambda^2 phi_j, A_theta phi_j>` over an H¹-orthonormal set.
pub fn trace_estimate(
    theta: &SpectralField,
    set: &[SpectralField],
    params: &ModelParams,
    include_damping: bool,
) -> Result<f64> {
    if set.is_empty() {
        return Ok(0.0);
    }
    let mut integ = probe_integrator(params, theta)?;
    trace_with(&mut integ, theta, set, params, include_damping)
}

fn trace_with(
    integ: &mut Integrator,
    theta: &SpectralField,
    set: &[SpectralField],
    params: &ModelParams,
    include_damping: bool,
) -> Result<f64> {
    let dev = gram_deviation(set)?;
    if dev > ORTHONORMAL_TOLERANCE {
        return Err(Error::NotOrthonormal(dev));
    }
    let mut tr = 0.0;
    for phi in set {
        let a = apply_tangent_operator(integ, params, include_damping, theta, phi)?;
        // <Lambda^2 phi, a> = <phi, a>_{H^1}
        tr += phi.inner_h1(&a)?;
    }
    Ok(tr)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeControls {
    /// Absolute end time of the base run.
    pub t_end: f64,
    pub reorth_stride: u64,
    pub include_damping: bool,
    /// Evaluate [`trace_estimate`] at every orthonormalization.
    pub record_trace: bool,
}

impl VolumeControls {
    pub fn new(t_end: f64) -> Self {
        VolumeControls {
            t_end,
            reorth_stride: 10,
            include_damping: true,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeReport {
    /// Times of orthonormalization, starting with the initial time.
    pub t: Vec<f64>,
    /// Accumulated `log V_n` at those times.
    pub log_volume: Vec<f64>,
    /// Instantaneous trace at those times, when recorded.
    pub trace: Vec<f64>,
    /// `log V_n(T) / (T - t_0)`.
    pub average_trace: f64,
    pub final_state: SimulationState,
}

impl VolumeReport {
    /// Mean of the recorded instantaneous traces over `[t_from, T]`,
    /// trapezoid in time.
    pub fn mean_trace_since(&self, t_from: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .t
            .iter()
            .zip(&self.trace)
            .filter(|(t, _)| **t >= t_from)
            .map(|(t, v)| (*t, *v))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let area: f64 = pts.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum();
        Some(area / (pts[pts.len() - 1].0 - pts[0].0))
    }

    /// Slope of `log V_n` over `[t_from, T]`.
    pub fn volume_slope_since(&self, t_from: f64) -> Option<f64> {
        let i = self.t.iter().position(|&t| t >= t_from)?;
        let j = self.t.len() - 1;
        if j <= i {
            return None;
        }
        Some((self.log_volume[j] - self.log_volume[i]) / (self.t[j] - self.t[i]))
    }
}

/// Co-evolves the bundle with the base flow, orthonormalizing every
/// `reorth_stride` steps and at the end.
pub fn propagate_volume(
    mut base: SimulationState,
    bundle: &mut TangentBundle,
    controls: &VolumeControls,
) -> Result<VolumeReport> {
    if bundle.len() > MAX_TANGENTS {
        return Err(Error::InvalidParameter(format!(
            "at most {MAX_TANGENTS} tangents, got {}",
            bundle.len()
        )));
    }
    if controls.reorth_stride == 0 {
        return Err(Error::InvalidParameter("reorth_stride must be at least 1".into()));
    }
    if bundle.psi.iter().any(|p| p.grid() != base.grid()) {
        return Err(Error::GridMismatch("tangents and base state differ".into()));
    }
    let total = step_count(controls.t_end, base.dt)?;
    if total <= base.step {
        return Err(Error::InvalidParameter("t_end must lie after the base state time".into()));
    }
    let mut integ = Integrator::new(&base, StepOptions::default())?;
    let params = base.params.clone();
    let t0 = base.t;
    let log0 = bundle.log_volume;
    let mut report = VolumeReport {
        t: vec![t0],
        log_volume: vec![0.0],
        trace: Vec::new(),
        average_trace: 0.0,
        final_state: base.clone(),
    };
    if controls.record_trace {
        let tr = trace_with(&mut integ, &base.theta, &bundle.psi, &params, controls.include_damping)?;
        report.trace.push(tr);
    }
    while base.step < total {
        integ.step_with_tangents(&mut base, &mut bundle.psi, controls.include_damping)?;
        if base.step % controls.reorth_stride == 0 || base.step == total {
            bundle.reorthonormalize(base.step)?;
            report.t.push(base.t);
            report.log_volume.push(bundle.log_volume - log0);
            if controls.record_trace {
                let tr = trace_with(&mut integ, &base.theta, &bundle.psi, &params, controls.include_damping)?;
                report.trace.push(tr);
            }
        }
    }
    report.average_trace = (bundle.log_volume - log0) / (base.t - t0);
    report.final_state = base;
    Ok(report)
}

/// The `n` smallest values of `|k|^gamma` over `k in Z^d \ {0}`, ascending.
/// Each lattice point is one eigenvalue of `Lambda^gamma` on real zero-mean
/// fields.
pub fn smallest_eigenvalues(d: usize, gamma: f64, n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let mut radius = 1i64;
    loop {
        let mut sq: Vec<i64> = Vec::new();
        let third = if d == 3 { radius } else { 0 };
        for a in -radius..=radius {
            for b in -radius..=radius {
                for c in -third..=third {
                    let q = a * a + b * b + c * c;
                    if q > 0 && q <= radius * radius {
                        sq.push(q);
                    }
                }
            }
        }
        // the ball of this radius is complete, so its n smallest are exact
        if sq.len() >= n {
            sq.sort_unstable();
            return sq[..n].iter().map(|&q| (q as f64).powf(gamma / 2.0)).collect();
        }
        radius *= 2;
    }
}

pub fn eigenvalue_sum(d: usize, gamma: f64, n: usize) -> f64 {
    smallest_eigenvalues(d, gamma, n).iter().sum()
}

/// Smallest `C` with `sum_{j<=n} lambda_j >= n^{1+gamma/d} / C` for every `n`
/// in `ns`.
pub fn eigenvalue_sum_constant(d: usize, gamma: f64, ns: &[usize]) -> f64 {
    let max_n = ns.iter().copied().max().unwrap_or(0);
    let vals = smallest_eigenvalues(d, gamma, max_n);
    let mut prefix = 0.0;
    let mut sums = Vec::with_capacity(max_n);
    for v in &vals {
        prefix += v;
        sums.push(prefix);
    }
    ns.iter()
        .filter(|&&n| n > 0)
        .map(|&n| (n as f64).powf(1.0 + gamma / d as f64) / sums[n - 1])
        .fold(0.0, f64::max)
}

/// Which dissipation controls volume contraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Contraction {
    /// `kappa Lambda^gamma`.
    Dissipation { kappa: f64, gamma: f64 },
    /// `lambda (Lambda + 1)`, for which `gamma` is effectively 1.
    Damping { lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionInputs {
    pub contraction: Contraction,
    pub d: usize,
    /// Attractor bound `M`.
    pub m: f64,
    /// Universal constant, configured.
    pub c: f64,
}

/// Smallest integer `N` with `(rate / C) N^{gamma/d} > C (M + M^2)`, i.e.
/// `floor((C^2 (M + M^2) / rate)^{d/gamma}) + 1`.
pub fn dimension_threshold(inp: &DimensionInputs) -> Result<u64> {
    let (rate, gamma) = match inp.contraction {
        Contraction::Dissipation { kappa, gamma } => (kappa, gamma),
        Contraction::Damping { lambda } => (lambda, 1.0),
    };
    if !(rate > 0.0 && gamma > 0.0 && inp.c > 0.0 && inp.m >= 0.0) || !(inp.d == 2 || inp.d == 3) {
        return Err(Error::InvalidParameter(format!("invalid dimension inputs {inp:?}")));
    }
    let x = (inp.c * inp.c * (inp.m + inp.m * inp.m) / rate).powf(inp.d as f64 / gamma);
    if !x.is_finite() || x >= u64::MAX as f64 {
        return Err(Error::InvalidParameter(format!("threshold overflows: {x:e}")));
    }
    Ok(x.floor() as u64 + 1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiiInputs {
    pub kappa: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub forcing_linf: f64,
    pub c0: f64,
    /// Bound on `||theta_0||_inf`; defaults to the radius of the sup-norm
    /// absorbing ball.
    pub theta0_bound: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorbingRadii {
    pub k_inf: f64,
    pub k_bar_inf: f64,
    pub c_alpha: f64,
    /// Upper end of the admissible Hölder exponent range.
    pub alpha_max: f64,
    pub theta0_bound: f64,
}

/// `min{2 / (c0 kappa), 2 / (c0 lambda)} ||S||_inf`, ignoring a zero rate.
pub fn sup_ball_radius(inp: &RadiiInputs) -> Result<f64> {
    let mut r = f64::INFINITY;
    if inp.kappa > 0.0 {
        r = r.min(2.0 / (inp.c0 * inp.kappa));
    }
    if inp.lambda > 0.0 {
        r = r.min(2.0 / (inp.c0 * inp.lambda));
    }
    if r.is_infinite() {
        return Err(Error::InvalidParameter("absorbing ball needs kappa > 0 or lambda > 0".into()));
    }
    Ok(r * inp.forcing_linf)
}

/// The closed-form constants, either on the dissipation branch (`kappa > 0`)
/// or the damping branch (`lambda > 0`, exponents at `gamma = 1`).
pub fn absorbing_radii(inp: &RadiiInputs, branch: Contraction) -> Result<AbsorbingRadii> {
    if !(inp.c0 > 0.0) || !(inp.forcing_linf >= 0.0) {
        return Err(Error::InvalidParameter("c0 must be positive and ||S||_inf >= 0".into()));
    }
    let theta0 = match inp.theta0_bound {
        Some(b) => b,
        None => sup_ball_radius(inp)?,
    };
    let s = inp.forcing_linf;
    match branch {
        Contraction::Dissipation { kappa, gamma } => {
            if !(kappa > 0.0) {
                return Err(Error::InvalidParameter("dissipative radii need kappa > 0".into()));
            }
            let bar = |k: f64| {
                kappa.powf(-1.0 / gamma) * k
                    + s.powf((2.0 + gamma) / (2.0 * (1.0 + gamma)))
                        * kappa.powf(-1.0 / (2.0 * (1.0 + gamma)))
                        * k.powf(gamma / (2.0 * (1.0 + gamma)))
                    + kappa.powf(-1.0 / gamma) * k.powf((6.0 + gamma) / 4.0)
            };
            let k_inf = theta0 + s / (inp.c0 * kappa);
            let r = 3.0 * s / (inp.c0 * kappa);
            Ok(AbsorbingRadii {
                k_inf,
                k_bar_inf: bar(k_inf),
                c_alpha: (r + bar(r)).max(1.0),
                alpha_max: gamma / (3.0 + gamma),
                theta0_bound: theta0,
            })
        }
        Contraction::Damping { lambda } => {
            if !(lambda > 0.0) {
                return Err(Error::InvalidParameter("damped radii need lambda > 0".into()));
            }
            let bar = |k: f64| {
                k / lambda + s.powf(0.75) * lambda.powf(-0.25) * k.powf(0.25) + k.powf(1.75) / lambda
            };
            let k_inf = theta0 + s / (inp.c0 * lambda);
            let r = 3.0 * s / (inp.c0 * lambda);
            Ok(AbsorbingRadii {
                k_inf,
                k_bar_inf: bar(k_inf),
                c_alpha: (r + bar(r)).max(1.0),
                alpha_max: 0.25,
                theta0_bound: theta0,
            })
        }
    }
}

/// `sup_{a in A} inf_{b in B} ||a - b||_{H^1}`.
pub fn attractor_distance(a: &[SpectralField], b: &[SpectralField]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut sup = 0.0f64;
    for x in a {
        let mut inf = f64::INFINITY;
        for y in b {
            inf = inf.min(x.sub(y)?.norm_h1());
        }
        sup = sup.max(inf);
    }
    Ok(sup)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttractorSampling {
    /// Number of random initial conditions.
    pub trajectories: usize,
    pub samples_per_trajectory: usize,
    pub t_spinup: f64,
    pub t_gap: f64,
    pub seed: u64,
    /// H¹ norm of the initial conditions.
    pub radius: f64,
}

impl Default for AttractorSampling {
    fn default() -> Self {
        AttractorSampling {
            trajectories: 8,
            samples_per_trajectory: 8,
            t_spinup: 100.0,
            t_gap: 10.0,
            seed: 0,
            radius: 1.0,
        }
    }
}

/// Long-time states `theta(T_spinup + j T_gap)`, `j = 1..=samples`, from
/// random smooth initial data; trajectory `i` uses seed `seed + i`.
pub fn sample_attractor(
    params: &ModelParams,
    forcing: &ForcingSpec,
    grid: Grid,
    dt: f64,
    sampling: &AttractorSampling,
) -> Result<Vec<SpectralField>> {
    let plane = params.symbol.vanishes_on_horizontal_plane();
    let spin = step_count(sampling.t_spinup, dt)?;
    let gap = step_count(sampling.t_gap, dt)?;
    let mut out = Vec::with_capacity(sampling.trajectories * sampling.samples_per_trajectory);
    for i in 0..sampling.trajectories {
        let seed = sampling.seed.wrapping_add(i as u64);
        let th0 = random_smooth_where(grid, seed, 1.0, 3.0, |k| !plane || k[2] != 0)?;
        let h1 = th0.norm_h1();
        let th0 = if h1 > 0.0 { th0.scaled(sampling.radius / h1) } else { th0 };
        let mut st = SimulationState::new(params.clone(), forcing.clone(), th0, dt)?;
        let mut integ = Integrator::new(&st, StepOptions::default())?;
        for _ in 0..spin {
            integ.step(&mut st)?;
        }
        for _ in 0..sampling.samples_per_trajectory {
            for _ in 0..gap {
                integ.step(&mut st)?;
            }
            out.push(st.theta.clone());
        }
    }
    Ok(out)
}
