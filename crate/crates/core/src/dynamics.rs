//! Time integration of the forced, damped active scalar equation
//!
//! ```text
//! d_t theta + u[theta] . grad theta + lambda (Lambda + 1) theta + kappa Lambda^gamma theta = S
//! ```
//!
//! The linear part `sigma(k) = lambda (|k| + 1) + kappa |k|^gamma` and the
//! time-independent forcing are integrated exactly; the transport term is
//! treated explicitly by a two-stage integrating-factor Runge–Kutta scheme.
//! When transport is active only the two-thirds band is evolved, which makes
//! the discrete transport term exactly skew-adjoint.

use num_complex::Complex64;

use crate::constitutive::{MultiplierSymbol, SymbolTable};
use crate::diagnostics::{BudgetTerms, BudgetWeights, Cumulative, Sample, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::fft::Transformer;
use crate::field::SpectralField;
use crate::grid::{k_norm, Grid};
use crate::norms::norms_with;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default advective stability constant.
pub const DEFAULT_CFL: f64 = 0.4;

/// Blow-up is declared when `||theta||_inf` exceeds this multiple of
/// `||theta_0||_inf + ||S||_inf`.
pub const BLOWUP_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub lambda: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub symbol: MultiplierSymbol,
    /// Transport term on or off; off leaves the exactly solvable linear flow.
    pub nonlinear: bool,
}

impl ModelParams {
    pub fn new(lambda: f64, kappa: f64, gamma: f64, symbol: MultiplierSymbol) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa must be >= 0, got {kappa}")));
        }
        if !(gamma > 0.0 && gamma <= 2.0) {
            return Err(Error::InvalidParameter(format!("gamma must lie in (0, 2], got {gamma}")));
        }
        Ok(ModelParams {
            lambda,
            kappa,
            gamma,
            symbol,
            nonlinear: true,
        })
    }

    pub fn linear(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    pub fn dim(&self) -> usize {
        self.symbol.dim()
    }

    /// Linear decay rate of mode `k`.
    pub fn sigma(&self, k: &[i64; 3]) -> f64 {
        let r = k_norm(k);
        let mut s = self.lambda * (r + 1.0);
        if self.kappa != 0.0 {
            s += self.kappa * r.powf(self.gamma);
        }
        s
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let mut p = ModelParams::new(lambda, self.kappa, self.gamma, self.symbol.clone())?;
        p.nonlinear = self.nonlinear;
        Ok(p)
    }

    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        let mut p = ModelParams::new(self.lambda, kappa, self.gamma, self.symbol.clone())?;
        p.nonlinear = self.nonlinear;
        Ok(p)
    }
}

/// `exp(-sigma(k) dt)`.
pub fn linear_decay_factor(k: &[i64], params: &ModelParams, dt: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    Ok((-params.sigma(&pad(k)) * dt).exp())
}

fn pad(k: &[i64]) -> [i64; 3] {
    let mut out = [0; 3];
    out[..k.len()].copy_from_slice(k);
    out
}

/// Time-independent forcing.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingSpec {
    field: SpectralField,
}

impl ForcingSpec {
    /// Rejects forcing that lives on the plane where the symbol vanishes.
    pub fn new(field: SpectralField, symbol: &MultiplierSymbol) -> Result<Self> {
        if symbol.dim() != field.grid().dim() {
            return Err(Error::DimensionMismatch {
                symbol: symbol.dim(),
                field: field.grid().dim(),
            });
        }
        if symbol.vanishes_on_horizontal_plane() {
            let g = field.grid();
            let tol = 1e-14 * field.max_abs();
            let on_plane = (0..g.len())
                .filter(|&i| g.k_at(i)[2] == 0)
                .map(|i| field.coeffs()[i].norm())
                .fold(0.0, f64::max);
            if on_plane > tol {
                return Err(Error::InvalidParameter(format!(
                    "forcing has content {on_plane:e} on the k3 = 0 plane"
                )));
            }
        }
        Ok(ForcingSpec { field })
    }

    pub fn zero(grid: Grid) -> Self {
        ForcingSpec {
            field: SpectralField::zeros(grid),
        }
    }

    pub fn field(&self) -> &SpectralField {
        &self.field
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    pub t: f64,
    pub step: u64,
    pub theta: SpectralField,
    pub params: ModelParams,
    pub forcing: ForcingSpec,
    pub dt: f64,
}

impl SimulationState {
    /// Initial state. With transport on, data and forcing are projected onto
    /// the two-thirds band; for symbols vanishing on `k_3 = 0` that plane is
    /// removed from the data.
    pub fn new(
        params: ModelParams,
        forcing: ForcingSpec,
        theta0: SpectralField,
        dt: f64,
    ) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        let grid = theta0.grid();
        if params.dim() != grid.dim() {
            return Err(Error::DimensionMismatch {
                symbol: params.dim(),
                field: grid.dim(),
            });
        }
        if forcing.field.grid() != grid {
            return Err(Error::GridMismatch("forcing and initial data differ".into()));
        }
        let mask = evolution_mask(grid, &params);
        let theta = masked(&theta0, &mask);
        let forcing = ForcingSpec {
            field: masked(&forcing.field, &mask),
        };
        Ok(SimulationState {
            t: 0.0,
            step: 0,
            theta,
            params,
            forcing,
            dt,
        })
    }

    /// Reassembles a stored state; the time is recomputed from the step count.
    pub fn restore(
        params: ModelParams,
        forcing: ForcingSpec,
        theta: SpectralField,
        dt: f64,
        step: u64,
    ) -> Result<Self> {
        let mut s = SimulationState::new(params, forcing, theta, dt)?;
        s.step = step;
        s.t = step as f64 * dt;
        Ok(s)
    }

    pub fn grid(&self) -> Grid {
        self.theta.grid()
    }
}

/// 1 for evolved modes, 0 for modes held at zero.
fn evolution_mask(grid: Grid, params: &ModelParams) -> Vec<f64> {
    let plane = params.symbol.vanishes_on_horizontal_plane();
    (0..grid.len())
        .map(|i| {
            let dropped = i == 0
                || grid.is_nyquist(i)
                || (params.nonlinear && grid.is_aliased(i))
                || (plane && grid.k_at(i)[2] == 0);
            if dropped {
                0.0
            } else {
                1.0
            }
        })
        .collect()
}

fn masked(f: &SpectralField, mask: &[f64]) -> SpectralField {
    let c = f
        .coeffs()
        .iter()
        .zip(mask)
        .map(|(c, m)| if *m == 0.0 { ZERO } else { *c })
        .collect();
    SpectralField::from_raw(f.grid(), c)
}

/// Closed-form solution of the flow without transport.
pub fn exact_linear_solution(
    theta0: &SpectralField,
    forcing: &ForcingSpec,
    params: &ModelParams,
    t: f64,
) -> Result<SpectralField> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("t must be >= 0, got {t}")));
    }
    let g = theta0.grid();
    if forcing.field.grid() != g {
        return Err(Error::GridMismatch("forcing and initial data differ".into()));
    }
    let s = forcing.field.coeffs();
    let c = theta0
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c0)| {
            let sig = params.sigma(&g.k_at(i));
            let (e, phi) = propagator(sig, t);
            c0 * e + s[i] * phi
        })
        .collect();
    Ok(SpectralField::from_raw(g, c))
}

/// `(exp(-sigma t), (1 - exp(-sigma t)) / sigma)`, the second taken as `t`
/// when `sigma = 0`.
fn propagator(sigma: f64, t: f64) -> (f64, f64) {
    if sigma == 0.0 {
        (1.0, t)
    } else {
        ((-sigma * t).exp(), -(-sigma * t).exp_m1() / sigma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    pub cfl: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions { cfl: DEFAULT_CFL }
    }
}

/// Physical-space samples of a scalar and its velocity.
#[derive(Default)]
struct Phys {
    theta: Vec<f64>,
    u: Vec<Vec<f64>>,
}

/// Precomputed tables and work space for stepping one run.
pub struct Integrator {
    grid: Grid,
    params: ModelParams,
    dt: f64,
    cfl: f64,
    table: SymbolTable,
    transformer: Transformer,
    kf: [Vec<f64>; 3],
    mask: Vec<f64>,
    decay: Vec<f64>,
    tangent_decay: Vec<f64>,
    forced: Vec<Complex64>,
    blowup_threshold: f64,
    // work space
    ucoef: Vec<Vec<Complex64>>,
    prod: Vec<Vec<f64>>,
    pcoef: Vec<Vec<Complex64>>,
    base_n: Phys,
    base_star: Phys,
    tmp_phys: Phys,
    n0: Vec<Complex64>,
    n1: Vec<Complex64>,
    stage: Vec<Complex64>,
    next: Vec<Complex64>,
    last_max_velocity: f64,
}

impl Integrator {
    /// Tables for the run in `state`; the blow-up threshold is referenced to
    /// the data held by `state` at construction.
    pub fn new(state: &SimulationState, opts: StepOptions) -> Result<Self> {
        let grid = state.grid();
        let params = state.params.clone();
        let dt = state.dt;
        if !(opts.cfl > 0.0) {
            return Err(Error::InvalidParameter(format!("CFL constant must be positive, got {}", opts.cfl)));
        }
        let table = SymbolTable::build(&params.symbol, grid)?;
        let mut kf = [vec![0.0; grid.len()], vec![0.0; grid.len()], vec![0.0; grid.len()]];
        let mut decay = vec![0.0; grid.len()];
        let mut tangent_decay = vec![0.0; grid.len()];
        let mut forced = vec![ZERO; grid.len()];
        let s = state.forcing.field.coeffs();
        for i in 0..grid.len() {
            let k = grid.k_at(i);
            for j in 0..3 {
                kf[j][i] = k[j] as f64;
            }
            let (e, phi) = propagator(params.sigma(&k), dt);
            decay[i] = e;
            forced[i] = s[i] * phi;
            tangent_decay[i] = if params.kappa == 0.0 {
                1.0
            } else {
                (-params.kappa * k_norm(&k).powf(params.gamma) * dt).exp()
            };
        }
        let mask = evolution_mask(grid, &params);
        let mut transformer = Transformer::new(grid);
        let linf0 = transformer.backward(&state.theta)?.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let linf_s = transformer
            .backward(&state.forcing.field)?
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let d = grid.dim();
        let phys = || Phys {
            theta: vec![0.0; grid.len()],
            u: vec![vec![0.0; grid.len()]; d],
        };
        Ok(Integrator {
            grid,
            params,
            dt,
            cfl: opts.cfl,
            table,
            transformer,
            kf,
            mask,
            decay,
            tangent_decay,
            forced,
            blowup_threshold: BLOWUP_FACTOR * (linf0 + linf_s),
            ucoef: vec![vec![ZERO; grid.len()]; d],
            prod: vec![vec![0.0; grid.len()]; d],
            pcoef: vec![vec![ZERO; grid.len()]; d],
            base_n: phys(),
            base_star: phys(),
            tmp_phys: phys(),
            n0: vec![ZERO; grid.len()],
            n1: vec![ZERO; grid.len()],
            stage: vec![ZERO; grid.len()],
            next: vec![ZERO; grid.len()],
            last_max_velocity: 0.0,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn blowup_threshold(&self) -> f64 {
        self.blowup_threshold
    }

    /// Largest velocity magnitude seen at the start of the last step.
    pub fn last_max_velocity(&self) -> f64 {
        self.last_max_velocity
    }

    /// Samples of `c` and `u[c]`.
    fn to_phys(&mut self, c: &[Complex64], out: &mut Phys) {
        self.table.apply(c, &mut self.ucoef);
        let t = &mut self.transformer;
        t.backward_pair(c, Some(&self.ucoef[0]), &mut out.theta, Some(&mut out.u[0]));
        let (u1, rest) = out.u[1..].split_at_mut(1);
        match rest.first_mut() {
            Some(u2) => t.backward_pair(&self.ucoef[1], Some(&self.ucoef[2]), &mut u1[0], Some(u2)),
            None => t.backward_pair(&self.ucoef[1], None, &mut u1[0], None),
        }
    }

    /// `-P div(prod)` into `out`.
    fn divergence_of_products(&mut self, out: &mut [Complex64]) {
        let t = &mut self.transformer;
        {
            let (p0, rest) = self.pcoef.split_at_mut(1);
            t.forward_pair(&self.prod[0], Some(&self.prod[1]), &mut p0[0], Some(&mut rest[0]));
            if self.grid.dim() == 3 {
                t.forward_pair(&self.prod[2], None, &mut rest[1], None);
            }
        }
        let d = self.grid.dim();
        for i in 0..out.len() {
            let mut s = ZERO;
            for j in 0..d {
                s += self.pcoef[j][i] * self.kf[j][i];
            }
            // -i s
            out[i] = Complex64::new(s.im, -s.re) * self.mask[i];
        }
    }

    fn max_velocity(p: &Phys) -> f64 {
        let mut m = 0.0f64;
        for i in 0..p.theta.len() {
            let s: f64 = p.u.iter().map(|u| u[i] * u[i]).sum();
            m = m.max(s);
        }
        m.sqrt()
    }

    /// `N(theta) = -P div(u[theta] theta)`; the samples used are left in
    /// `phys`.
    fn eval_nonlinear(&mut self, c: &[Complex64], phys: &mut Phys, out: &mut [Complex64]) -> Result<()> {
        self.to_phys(c, phys);
        for (j, p) in self.prod.iter_mut().enumerate() {
            for ((o, u), th) in p.iter_mut().zip(&phys.u[j]).zip(&phys.theta) {
                *o = u * th;
            }
        }
        self.divergence_of_products(out);
        if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("nonlinear term"));
        }
        Ok(())
    }

    /// `N'(theta) psi = -P div(u[theta] psi + u[psi] theta)` with the base
    /// samples in `base`.
    fn eval_tangent(&mut self, psi: &[Complex64], base: &Phys, out: &mut [Complex64]) {
        let mut tp = std::mem::take(&mut self.tmp_phys);
        self.to_phys(psi, &mut tp);
        for (j, p) in self.prod.iter_mut().enumerate() {
            for i in 0..p.len() {
                p[i] = base.u[j][i] * tp.theta[i] + tp.u[j][i] * base.theta[i];
            }
        }
        self.tmp_phys = tp;
        self.divergence_of_products(out);
    }

    /// Spectral representation of the transport term for an arbitrary field.
    pub fn nonlinear_term(&mut self, theta: &SpectralField) -> Result<SpectralField> {
        self.check_grid(theta)?;
        let mut phys = std::mem::take(&mut self.tmp_phys);
        let mut out = vec![ZERO; self.grid.len()];
        let r = self.eval_nonlinear(theta.coeffs(), &mut phys, &mut out);
        self.tmp_phys = phys;
        r?;
        Ok(SpectralField::from_raw(self.grid, out))
    }

    /// `N'(theta) psi`.
    pub fn tangent_term(&mut self, theta: &SpectralField, psi: &SpectralField) -> Result<SpectralField> {
        self.check_grid(theta)?;
        self.check_grid(psi)?;
        let mut base = std::mem::take(&mut self.base_n);
        self.to_phys(theta.coeffs(), &mut base);
        let mut out = vec![ZERO; self.grid.len()];
        self.eval_tangent(psi.coeffs(), &base, &mut out);
        self.base_n = base;
        Ok(SpectralField::from_raw(self.grid, out))
    }

    fn check_grid(&self, f: &SpectralField) -> Result<()> {
        if f.grid() != self.grid {
            return Err(Error::GridMismatch(format!(
                "integrator on {:?}, field on {:?}",
                self.grid,
                f.grid()
            )));
        }
        Ok(())
    }

    pub fn step(&mut self, state: &mut SimulationState) -> Result<()> {
        self.step_with_tangents(state, &mut [], true)
    }

    /// Advances the base state one step and, alongside, each tangent field by
    /// the exact linearization of the discrete step. Without `include_damping`
    /// tangents see only the dissipative part of the linear operator. On
    /// error neither the state nor the tangents are modified.
    pub fn step_with_tangents(
        &mut self,
        state: &mut SimulationState,
        tangents: &mut [SpectralField],
        include_damping: bool,
    ) -> Result<()> {
        self.check_grid(&state.theta)?;
        let n = self.grid.len();
        let dt = self.dt;
        let theta = state.theta.coeffs();
        let mut next = std::mem::take(&mut self.next);
        let mut base_n = std::mem::take(&mut self.base_n);
        let mut base_star = std::mem::take(&mut self.base_star);
        let mut n0 = std::mem::take(&mut self.n0);
        let mut n1 = std::mem::take(&mut self.n1);
        let mut stage = std::mem::take(&mut self.stage);

        let result = (|| -> Result<()> {
            if self.params.nonlinear {
                self.eval_nonlinear(theta, &mut base_n, &mut n0)?;
                let vmax = Self::max_velocity(&base_n);
                self.last_max_velocity = vmax;
                let limit = self.cfl * self.grid.spacing();
                if vmax * dt > limit {
                    return Err(Error::CflViolation {
                        t: state.t,
                        dt,
                        limit: limit / vmax,
                        max_velocity: vmax,
                    });
                }
                let linf = base_n.theta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if linf > self.blowup_threshold {
                    return Err(Error::BlowUp {
                        t: state.t,
                        linf,
                        threshold: self.blowup_threshold,
                    });
                }
                for i in 0..n {
                    n0[i] *= self.decay[i];
                    stage[i] = (theta[i] * self.decay[i] + self.forced[i]) * self.mask[i];
                    next[i] = stage[i] + n0[i] * (0.5 * dt);
                    stage[i] += n0[i] * dt;
                }
                self.eval_nonlinear(&stage, &mut base_star, &mut n1)?;
                for i in 0..n {
                    next[i] += n1[i] * (0.5 * dt);
                }
            } else {
                for i in 0..n {
                    next[i] = (theta[i] * self.decay[i] + self.forced[i]) * self.mask[i];
                }
            }
            if next.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonFinite("state after step"));
            }
            if !self.params.nonlinear {
                // cheap upper bound before paying for a transform
                let bound: f64 = next.iter().map(|z| z.norm()).sum();
                if bound > self.blowup_threshold {
                    let f = SpectralField::from_raw(self.grid, next.clone());
                    let linf = self.transformer.backward(&f)?.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    if linf > self.blowup_threshold {
                        return Err(Error::BlowUp {
                            t: state.t + dt,
                            linf,
                            threshold: self.blowup_threshold,
                        });
                    }
                }
            }
            for psi in tangents.iter() {
                self.check_grid(psi)?;
            }
            for psi in tangents.iter_mut() {
                self.advance_tangent(psi, &base_n, &base_star, include_damping, &mut n0, &mut n1, &mut stage);
            }
            Ok(())
        })();

        self.base_n = base_n;
        self.base_star = base_star;
        self.n0 = n0;
        self.n1 = n1;
        self.stage = stage;
        match result {
            Ok(()) => {
                let old = std::mem::replace(&mut state.theta, SpectralField::from_raw(self.grid, next));
                self.next = old.into_coeffs();
                state.step += 1;
                state.t = state.step as f64 * dt;
                Ok(())
            }
            Err(e) => {
                self.next = next;
                Err(e)
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn advance_tangent(
        &mut self,
        psi: &mut SpectralField,
        base_n: &Phys,
        base_star: &Phys,
        include_damping: bool,
        w0: &mut [Complex64],
        w1: &mut [Complex64],
        stage: &mut [Complex64],
    ) {
        let n = self.grid.len();
        let dt = self.dt;
        let decay = if include_damping {
            std::mem::take(&mut self.decay)
        } else {
            std::mem::take(&mut self.tangent_decay)
        };
        let p = psi.coeffs_mut();
        if self.params.nonlinear {
            self.eval_tangent(p, base_n, w0);
            for i in 0..n {
                w0[i] *= decay[i];
                let e = p[i] * decay[i] * self.mask[i];
                p[i] = e + w0[i] * (0.5 * dt);
                stage[i] = e + w0[i] * dt;
            }
            self.eval_tangent(stage, base_star, w1);
            for i in 0..n {
                p[i] += w1[i] * (0.5 * dt);
            }
        } else {
            for i in 0..n {
                p[i] *= decay[i] * self.mask[i];
            }
        }
        if include_damping {
            self.decay = decay;
        } else {
            self.tangent_decay = decay;
        }
    }
}

/// One step with throwaway tables.
pub fn step(state: &SimulationState) -> Result<SimulationState> {
    let mut next = state.clone();
    Integrator::new(state, StepOptions::default())?.step(&mut next)?;
    Ok(next)
}

/// `N(theta)` with throwaway tables.
pub fn nonlinear_term(theta: &SpectralField, symbol: &MultiplierSymbol) -> Result<SpectralField> {
    let g = theta.grid();
    let params = ModelParams::new(0.0, 0.0, 1.0, symbol.clone())?;
    let state = SimulationState {
        t: 0.0,
        step: 0,
        theta: theta.clone(),
        params,
        forcing: ForcingSpec::zero(g),
        dt: 1.0,
    };
    Integrator::new(&state, StepOptions::default())?.nonlinear_term(theta)
}

/// Number of steps of size `dt` that reach `t_end` exactly.
pub fn step_count(t_end: f64, dt: f64) -> Result<u64> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_end must be >= 0, got {t_end}")));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let n = (t_end / dt).round();
    if (n * dt - t_end).abs() > 1e-9 * t_end.max(dt) {
        return Err(Error::InvalidParameter(format!(
            "t_end = {t_end} is not a whole number of steps dt = {dt}"
        )));
    }
    Ok(n as u64)
}

/// What to record along a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunControls {
    /// Absolute end time; a whole number of steps.
    pub t_end: f64,
    /// Sample every `stride` steps (and always at the end).
    pub stride: u64,
    pub s_list: Vec<f64>,
    pub p_list: Vec<f64>,
    pub alpha_list: Vec<f64>,
    /// Keep the state at every sample in the record.
    pub keep_states: bool,
    pub step: StepOptions,
}

impl RunControls {
    pub fn new(t_end: f64, stride: u64) -> Self {
        RunControls {
            t_end,
            stride: stride.max(1),
            s_list: vec![0.5, 1.0],
            p_list: vec![2.0, f64::INFINITY],
            alpha_list: Vec::new(),
            keep_states: false,
            step: StepOptions::default(),
        }
    }
}

/// Called at every sample. A failure is recorded in the trajectory's
/// annotations and the run continues.
pub trait Observer {
    fn observe(&mut self, state: &SimulationState, sample: &Sample) -> std::result::Result<(), String>;
}

impl<F> Observer for F
where
    F: FnMut(&SimulationState, &Sample) -> std::result::Result<(), String>,
{
    fn observe(&mut self, state: &SimulationState, sample: &Sample) -> std::result::Result<(), String> {
        self(state, sample)
    }
}

/// Integrates from `theta0` to `controls.t_end`.
pub fn run(
    params: &ModelParams,
    theta0: &SpectralField,
    forcing: &ForcingSpec,
    dt: f64,
    controls: &RunControls,
    observers: &mut [&mut dyn Observer],
) -> Result<TrajectoryRecord> {
    let state = SimulationState::new(params.clone(), forcing.clone(), theta0.clone(), dt)?;
    run_from(state, controls, observers).map(|(r, _)| r)
}

/// Continues `state` to `controls.t_end`, returning the record (whose
/// integrals start at the state's time) and the final state.
pub fn run_from(
    mut state: SimulationState,
    controls: &RunControls,
    observers: &mut [&mut dyn Observer],
) -> Result<(TrajectoryRecord, SimulationState)> {
    let total = step_count(controls.t_end, state.dt)?;
    if total < state.step {
        return Err(Error::InvalidParameter(format!(
            "t_end = {} lies before the state time {}",
            controls.t_end, state.t
        )));
    }
    let grid = state.grid();
    let mut integ = Integrator::new(&state, controls.step)?;
    let weights = BudgetWeights::new(grid, state.params.gamma);
    let mut transformer = Transformer::new(grid);
    let mut record = TrajectoryRecord {
        grid,
        lambda: state.params.lambda,
        kappa: state.params.kappa,
        gamma: state.params.gamma,
        dt: state.dt,
        samples: Vec::new(),
        states: Vec::new(),
        annotations: Vec::new(),
        final_state: state.theta.clone(),
    };
    let mut cumulative = Cumulative::default();
    let mut budget = BudgetTerms::default();
    let mut take_sample = |state: &SimulationState,
                           budget: &BudgetTerms,
                           cumulative: &Cumulative,
                           record: &mut TrajectoryRecord,
                           observers: &mut [&mut dyn Observer]|
     -> Result<()> {
        let norms = norms_with(
            &mut transformer,
            &state.theta,
            &controls.s_list,
            &controls.p_list,
            &controls.alpha_list,
        )?;
        let sample = Sample {
            t: state.t,
            step: state.step,
            energy: norms.l2 * norms.l2,
            norms,
            budget: *budget,
            cumulative: *cumulative,
        };
        for obs in observers.iter_mut() {
            if let Err(msg) = obs.observe(state, &sample) {
                record.annotations.push(format!("t={}: {msg}", state.t));
            }
        }
        if controls.keep_states {
            record.states.push(state.theta.clone());
        }
        record.samples.push(sample);
        Ok(())
    };
    take_sample(&state, &budget, &cumulative, &mut record, observers)?;
    let forcing = state.forcing.field().clone();
    let (lambda, kappa, dt) = (state.params.lambda, state.params.kappa, state.dt);
    let mut prev = state.theta.clone();
    while state.step < total {
        integ.step(&mut state)?;
        budget = weights.step_budget(&prev, &state.theta, lambda, kappa, &forcing, dt);
        cumulative.add(&budget, dt);
        if state.step % controls.stride == 0 || state.step == total {
            take_sample(&state, &budget, &cumulative, &mut record, observers)?;
        }
        prev.clone_from(&state.theta);
    }
    record.final_state = state.theta.clone();
    Ok((record, state))
}
