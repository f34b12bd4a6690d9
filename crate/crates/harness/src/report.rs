//! Plain-text summary of every bound check on a run.

use std::fmt;

use ascl_core::attractor::{absorbing_radii, dimension_threshold, Contraction, DimensionInputs, RadiiInputs};
use ascl_core::diagnostics::{linf_decay_check, lp_bound_check, stat_balance, BoundCheck, TrajectoryRecord};
use ascl_core::norms;

use crate::config::{AttractorConfig, Experiment};
use crate::error::Result;

/// Scheme error allowed on top of the stationary balance bound.
pub const BALANCE_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    /// `None` for informational lines.
    pub passed: Option<bool>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub fingerprint: String,
    pub lines: Vec<CheckLine>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed != Some(false))
    }

    fn check(&mut self, name: impl Into<String>, passed: bool, detail: String) {
        self.lines.push(CheckLine {
            name: name.into(),
            passed: Some(passed),
            detail,
        });
    }

    fn info(&mut self, name: impl Into<String>, detail: String) {
        self.lines.push(CheckLine {
            name: name.into(),
            passed: None,
            detail,
        });
    }

    fn bound(&mut self, name: String, c: &BoundCheck) {
        self.check(
            name,
            c.holds(),
            format!(
                "{} samples, {} violations, min relative margin {:.3e}",
                c.rows.len(),
                c.violations(),
                c.min_relative_margin()
            ),
        );
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "fingerprint {}", self.fingerprint)?;
        for l in &self.lines {
            let tag = match l.passed {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "INFO",
            };
            writeln!(f, "{tag} {}: {}", l.name, l.detail)?;
        }
        Ok(())
    }
}

/// Evaluates the bounds that apply to the run's parameters, with `c0 = 1`.
pub fn run_report(exp: &Experiment, record: &TrajectoryRecord, attractor: Option<&AttractorConfig>) -> Result<Report> {
    let c0 = 1.0;
    let mut r = Report {
        fingerprint: exp.fingerprint.clone(),
        lines: Vec::new(),
    };
    let p = &exp.params;
    let t_end = record.horizon();
    let last = record.last();
    r.info(
        "energy budget",
        format!(
            "per-unit-time residual {:.3e} over T = {t_end}",
            last.cumulative.abs_residual / t_end
        ),
    );
    if p.lambda > 0.0 {
        for q in [2.0, f64::INFINITY] {
            r.bound(format!("L^{q} damping bound"), &lp_bound_check(record, &exp.forcing, q)?);
        }
    }
    if p.kappa > 0.0 {
        let c = linf_decay_check(record, &exp.forcing, c0)?;
        r.bound("sup-norm decay bound".into(), &c.decay);
        r.bound("sup-norm uniform bound".into(), &c.uniform);
    }
    let sb = stat_balance(record, t_end)?;
    r.check(
        "stationary balance",
        sb.within_bound(BALANCE_SLACK),
        format!(
            "residual {:.6e}, bound {:.6e}, identity defect {:.3e}",
            sb.residual, sb.bound, sb.identity_defect
        ),
    );
    if record.annotations.is_empty() {
        r.info("observers", "no failures".into());
    } else {
        r.check("observers", false, record.annotations.join("; "));
    }

    let s_inf = norms(exp.forcing.field(), &[], &[f64::INFINITY], &[])?
        .lp(f64::INFINITY)
        .unwrap_or(0.0);
    let inp = RadiiInputs {
        kappa: p.kappa,
        lambda: p.lambda,
        gamma: p.gamma,
        forcing_linf: s_inf,
        c0,
        theta0_bound: None,
    };
    let mut branches = Vec::new();
    if p.kappa > 0.0 {
        branches.push(("dissipative", Contraction::Dissipation { kappa: p.kappa, gamma: p.gamma }));
    }
    if p.lambda > 0.0 {
        branches.push(("damped", Contraction::Damping { lambda: p.lambda }));
    }
    for (name, b) in &branches {
        let a = absorbing_radii(&inp, *b)?;
        r.info(
            format!("absorbing radii ({name})"),
            format!(
                "theta0 bound {:.6e}, K {:.6e}, K bar {:.6e}, C_alpha {:.6e}, alpha <= {}",
                a.theta0_bound, a.k_inf, a.k_bar_inf, a.c_alpha, a.alpha_max
            ),
        );
    }
    if let Some(m) = attractor.and_then(|a| a.m_bound.map(|m| (a.c, m))) {
        for (name, b) in &branches {
            let n = dimension_threshold(&DimensionInputs {
                contraction: *b,
                d: exp.grid.dim(),
                m: m.1,
                c: m.0,
            })?;
            r.info(format!("dimension threshold ({name})"), format!("N = {n} with C = {}, M = {}", m.0, m.1));
        }
    }
    Ok(r)
}
