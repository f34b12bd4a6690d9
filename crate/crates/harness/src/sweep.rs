//! Parameter sweeps. Members run on a dedicated pool, each sequentially;
//! results are gathered in input order, so tables do not depend on the
//! number of threads.

use std::io::Write;

use ascl_core::diagnostics::{dissipation_rate, limsup_proxy, write_csv, TrajectoryRecord};
use ascl_core::dynamics::{run, ModelParams, RunControls};
use rayon::prelude::*;

use crate::config::{Experiment, SweepAxis};
use crate::error::{HarnessError, Result};
use crate::fit::{fit_power_law, FitResult};

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot build thread pool: {e}")))
}

fn check_decreasing(values: &[f64], allow_zero: bool) -> Result<()> {
    let ok_value = |v: f64| v.is_finite() && (v > 0.0 || (allow_zero && v == 0.0));
    if values.is_empty() || !values.iter().all(|&v| ok_value(v)) || values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(HarnessError::Config(format!(
            "sweep values must be {} and strictly decreasing, got {values:?}",
            if allow_zero { "nonnegative" } else { "positive" }
        )));
    }
    Ok(())
}

fn controls(exp: &Experiment, keep_states: bool) -> RunControls {
    let mut c = RunControls::new(exp.t_end, exp.stride);
    c.keep_states = keep_states;
    c
}

fn with_axis(params: &ModelParams, axis: SweepAxis, v: f64) -> Result<ModelParams> {
    Ok(match axis {
        SweepAxis::Kappa => params.with_kappa(v)?,
        SweepAxis::Lambda => params.with_lambda(v)?,
    })
}

fn axis_name(axis: SweepAxis) -> &'static str {
    match axis {
        SweepAxis::Kappa => "kappa",
        SweepAxis::Lambda => "lambda",
    }
}

#[derive(Debug, Clone)]
pub struct KappaRow {
    pub kappa: f64,
    /// `eps^kappa(T)`.
    pub eps: f64,
    /// Max of `eps^kappa` over the final 20% of samples.
    pub eps_tail_max: f64,
    pub record: Option<TrajectoryRecord>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone)]
pub struct KappaSweep {
    pub fingerprint: String,
    pub rows: Vec<KappaRow>,
    /// `eps` strictly decreasing along the (decreasing) kappa list, with every
    /// member successful.
    pub monotone: bool,
    pub fit: Option<FitResult>,
}

/// `eps^kappa(T) = (kappa / T) int_0^T ||grad theta||^2` for each kappa, from
/// identical data.
pub fn sweep_kappa(exp: &Experiment, kappas: &[f64], threads: usize) -> Result<KappaSweep> {
    check_decreasing(kappas, false)?;
    let ctl = controls(exp, false);
    let rows: Vec<KappaRow> = pool(threads)?.install(|| {
        kappas
            .par_iter()
            .map(|&k| {
                let out = with_axis(&exp.params, SweepAxis::Kappa, k)
                    .and_then(|p| Ok(run(&p, &exp.theta0, &exp.forcing, exp.dt, &ctl, &mut [])?));
                match out {
                    Ok(rec) => {
                        let series = dissipation_rate(&rec, k);
                        let (eps, tail) = limsup_proxy(&series.eps).unwrap_or((0.0, 0.0));
                        KappaRow {
                            kappa: k,
                            eps,
                            eps_tail_max: tail,
                            record: Some(rec),
                            failure: None,
                        }
                    }
                    Err(e) => KappaRow {
                        kappa: k,
                        eps: f64::NAN,
                        eps_tail_max: f64::NAN,
                        record: None,
                        failure: Some(e.to_string()),
                    },
                }
            })
            .collect()
    });
    let ok = rows.iter().all(|r| r.failure.is_none());
    let monotone = ok && rows.windows(2).all(|w| w[1].eps < w[0].eps);
    let (x, y): (Vec<f64>, Vec<f64>) = rows.iter().filter(|r| r.failure.is_none()).map(|r| (r.kappa, r.eps)).unzip();
    Ok(KappaSweep {
        fingerprint: exp.fingerprint.clone(),
        rows,
        monotone,
        fit: fit_power_law(&x, &y),
    })
}

impl KappaSweep {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.failure.is_some()).count()
    }

    pub fn write_table<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "fingerprint,kappa,eps,eps_tail_max,status")?;
        for r in &self.rows {
            let status = r.failure.as_deref().map_or("ok".to_string(), |f| format!("failed: {}", f.replace(',', ";")));
            writeln!(w, "{},{},{},{},{}", self.fingerprint, r.kappa, r.eps, r.eps_tail_max, status)?;
        }
        Ok(())
    }

    /// The summary table and one trajectory CSV per successful member.
    pub fn csv_files(&self) -> Vec<(String, Vec<u8>)> {
        let mut out = Vec::new();
        let mut t = Vec::new();
        self.write_table(&mut t).expect("writing to memory");
        out.push(("sweep_kappa.csv".to_string(), t));
        for (i, r) in self.rows.iter().enumerate() {
            if let Some(rec) = &r.record {
                let mut buf = Vec::new();
                write_csv(rec, &self.fingerprint, &[], &mut buf).expect("writing to memory");
                out.push((format!("kappa_{i:02}.csv"), buf));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub value: f64,
    /// `sup_t ||theta_v - theta_ref||_{H^s}` for each requested `s`.
    pub errors: Vec<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceSweep {
    pub fingerprint: String,
    pub axis: SweepAxis,
    pub s_list: Vec<f64>,
    pub rows: Vec<ConvergenceRow>,
    /// Errors (first `s`) strictly decreasing along the list.
    pub monotone: bool,
    /// Log-log fit of the first-`s` error against the parameter.
    pub fit: Option<FitResult>,
}

impl ConvergenceSweep {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.failure.is_some()).count()
    }

    pub fn write_table<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "fingerprint,{}", axis_name(self.axis))?;
        for s in &self.s_list {
            write!(w, ",err_hs{s}")?;
        }
        writeln!(w, ",status")?;
        for r in &self.rows {
            write!(w, "{},{}", self.fingerprint, r.value)?;
            for e in &r.errors {
                write!(w, ",{e}")?;
            }
            let status = r.failure.as_deref().map_or("ok".to_string(), |f| format!("failed: {}", f.replace(',', ";")));
            writeln!(w, ",{status}")?;
        }
        Ok(())
    }

    pub fn file_name(&self) -> &'static str {
        match self.axis {
            SweepAxis::Lambda => "sweep_lambda.csv",
            SweepAxis::Kappa => "sweep_kappa_conv.csv",
        }
    }
}

/// Errors against the reference run at parameter 0 on the shared sample times.
fn convergence_sweep(
    exp: &Experiment,
    axis: SweepAxis,
    values: &[f64],
    s_list: &[f64],
    threads: usize,
) -> Result<ConvergenceSweep> {
    check_decreasing(values, true)?;
    if s_list.is_empty() || s_list.iter().any(|s| !(*s >= 0.0)) {
        return Err(HarnessError::Config(format!("s_list must be nonempty and nonnegative, got {s_list:?}")));
    }
    let ctl = controls(exp, true);
    let reference = run(&with_axis(&exp.params, axis, 0.0)?, &exp.theta0, &exp.forcing, exp.dt, &ctl, &mut [])?;
    let rows: Vec<ConvergenceRow> = pool(threads)?.install(|| {
        values
            .par_iter()
            .map(|&v| {
                let out = (|| -> Result<Vec<f64>> {
                    if v == 0.0 {
                        return Ok(vec![0.0; s_list.len()]);
                    }
                    let rec = run(&with_axis(&exp.params, axis, v)?, &exp.theta0, &exp.forcing, exp.dt, &ctl, &mut [])?;
                    let mut errs = vec![0.0f64; s_list.len()];
                    for (a, b) in rec.states.iter().zip(&reference.states) {
                        let d = a.sub(b)?;
                        for (e, &s) in errs.iter_mut().zip(s_list) {
                            *e = e.max(d.norm_hs(s));
                        }
                    }
                    Ok(errs)
                })();
                match out {
                    Ok(errors) => ConvergenceRow {
                        value: v,
                        errors,
                        failure: None,
                    },
                    Err(e) => ConvergenceRow {
                        value: v,
                        errors: vec![f64::NAN; s_list.len()],
                        failure: Some(e.to_string()),
                    },
                }
            })
            .collect()
    });
    let ok = rows.iter().all(|r| r.failure.is_none());
    let monotone = ok && rows.windows(2).all(|w| w[1].errors[0] < w[0].errors[0]);
    let (x, y): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.failure.is_none())
        .map(|r| (r.value, r.errors[0]))
        .unzip();
    Ok(ConvergenceSweep {
        fingerprint: exp.fingerprint.clone(),
        axis,
        s_list: s_list.to_vec(),
        rows,
        monotone,
        fit: fit_power_law(&x, &y),
    })
}

/// `sup_{t <= T} ||theta^(lambda) - theta^(0)||_{H^s}` over a decreasing
/// lambda list.
pub fn sweep_lambda(exp: &Experiment, lambdas: &[f64], s_list: &[f64], threads: usize) -> Result<ConvergenceSweep> {
    convergence_sweep(exp, SweepAxis::Lambda, lambdas, s_list, threads)
}

/// As [`sweep_lambda`] with the roles of kappa and lambda exchanged.
pub fn sweep_kappa_convergence(
    exp: &Experiment,
    kappas: &[f64],
    s_list: &[f64],
    threads: usize,
) -> Result<ConvergenceSweep> {
    if !(exp.params.lambda > 0.0) {
        return Err(HarnessError::Config("kappa convergence needs lambda > 0".into()));
    }
    convergence_sweep(exp, SweepAxis::Kappa, kappas, s_list, threads)
}
