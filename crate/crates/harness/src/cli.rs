//! Command-line interface. Exit status: 0 on success, 1 on configuration or
//! usage errors, 2 on numerical faults.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use ascl_core::attractor::attractor_distance;
use ascl_core::constitutive::{audit_assumptions, MultiplierSymbol};
use ascl_core::diagnostics::write_csv;
use ascl_core::dynamics::{run, ModelParams, RunControls};
use ascl_core::snapshot::{save_checkpoint, save_snapshot};
use ascl_core::Grid;
use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{AttractorConfig, Experiment, ExperimentConfig, SweepAxis};
use crate::error::{HarnessError, Result};
use crate::oracle::{linear_oracle_deviation, ORACLE_TOLERANCE};
use crate::report::run_report;
use crate::samples::{read_samples, sample, write_samples};
use crate::sweep::{sweep_kappa, sweep_kappa_convergence, sweep_lambda};

#[derive(Debug, Parser)]
#[command(name = "ascl", version, about = "Forced, damped active scalar experiments")]
struct Cli {
    /// Validate the configuration and exit.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one trajectory; writes run.csv, final.ascl, final.chkp and report.txt.
    Run(ConfigArg),
    /// Dissipation rate across the configured kappa list.
    SweepKappa(ConfigArg),
    /// Convergence as lambda -> 0 against a lambda = 0 reference.
    SweepLambda(ConfigArg),
    /// Convergence as kappa -> 0 against a kappa = 0 reference.
    SweepKappaConv(ConfigArg),
    /// Long-time samples from random initial data.
    Attractor {
        #[command(flatten)]
        config: ConfigArg,
        /// Sample directory to measure the H^1 semi-distance against.
        #[arg(long)]
        compare: Option<PathBuf>,
    },
    /// Audit a velocity multiplier.
    VerifySymbol {
        #[arg(long, value_enum)]
        model: Model,
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
        #[arg(long, default_value_t = 16)]
        kmax: i64,
    },
    /// Compare stepped linear runs with the closed form.
    LinearOracle {
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run the configured trajectory and print the bound-check report.
    Report(ConfigArg),
}

#[derive(Debug, clap::Args)]
struct ConfigArg {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Model {
    Sqg,
    Mg,
}

/// Parses `argv` (including the program name), executes, and returns the
/// exit status.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load(arg: &ConfigArg) -> Result<(ExperimentConfig, Experiment)> {
    let mut cfg = ExperimentConfig::load(&arg.config)?;
    cfg.apply_env()?;
    let base = arg.config.parent().unwrap_or(Path::new("."));
    let exp = cfg.build(base)?;
    Ok((cfg, exp))
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::output(dir, e))?;
    let p = dir.join(name);
    std::fs::write(&p, bytes).map_err(|e| HarnessError::output(&p, e))
}

fn sweep_values(cfg: &ExperimentConfig, axis: SweepAxis) -> Result<(Vec<f64>, Vec<f64>)> {
    match &cfg.sweep {
        Some(s) if s.parameter == axis => Ok((s.values.clone(), s.s_list.clone())),
        _ => Err(HarnessError::Config(format!("this command needs a [sweep] section over {axis:?}"))),
    }
}

fn execute(cli: Cli) -> Result<i32> {
    let dry = cli.dry_run;
    match cli.command {
        Command::Run(arg) | Command::Report(arg) if dry => {
            load(&arg)?;
            println!("configuration ok");
            Ok(0)
        }
        Command::Run(arg) => {
            let (cfg, exp) = load(&arg)?;
            let rec = run(&exp.params, &exp.theta0, &exp.forcing, exp.dt, &RunControls::new(exp.t_end, exp.stride), &mut [])?;
            let dir = &cfg.output.dir;
            let mut csv = Vec::new();
            write_csv(&rec, &exp.fingerprint, &[], &mut csv)?;
            write_file(dir, "run.csv", &csv)?;
            save_snapshot(&rec.final_state, &dir.join("final.ascl"))?;
            let state = ascl_core::dynamics::SimulationState::restore(
                exp.params.clone(),
                exp.forcing.clone(),
                rec.final_state.clone(),
                exp.dt,
                rec.last().step,
            )?;
            save_checkpoint(&state, &dir.join("final.chkp"))?;
            let report = run_report(&exp, &rec, cfg.attractor.as_ref())?;
            write_file(dir, "report.txt", report.to_string().as_bytes())?;
            print!("{report}");
            Ok(0)
        }
        Command::Report(arg) => {
            let (cfg, exp) = load(&arg)?;
            let rec = run(&exp.params, &exp.theta0, &exp.forcing, exp.dt, &RunControls::new(exp.t_end, exp.stride), &mut [])?;
            let report = run_report(&exp, &rec, cfg.attractor.as_ref())?;
            write_file(&cfg.output.dir, "report.txt", report.to_string().as_bytes())?;
            print!("{report}");
            Ok(0)
        }
        Command::SweepKappa(arg) => {
            let (cfg, exp) = load(&arg)?;
            let (values, _) = sweep_values(&cfg, SweepAxis::Kappa)?;
            if dry {
                println!("configuration ok");
                return Ok(0);
            }
            let s = sweep_kappa(&exp, &values, cfg.output.threads)?;
            for (name, bytes) in s.csv_files() {
                write_file(&cfg.output.dir, &name, &bytes)?;
            }
            s.write_table(std::io::stdout()).map_err(|e| HarnessError::output(Path::new("stdout"), e))?;
            println!("monotone {}", s.monotone);
            if let Some(f) = s.fit {
                println!("fit slope {} intercept {} r2 {}", f.slope, f.intercept, f.r_squared);
            }
            Ok(if s.failures() > 0 { 2 } else { 0 })
        }
        Command::SweepLambda(arg) | Command::SweepKappaConv(arg) if dry => {
            load(&arg)?;
            println!("configuration ok");
            Ok(0)
        }
        Command::SweepLambda(arg) => convergence(&arg, SweepAxis::Lambda),
        Command::SweepKappaConv(arg) => convergence(&arg, SweepAxis::Kappa),
        Command::Attractor { config, compare } => {
            let (cfg, exp) = load(&config)?;
            if dry {
                println!("configuration ok");
                return Ok(0);
            }
            let acfg = cfg.attractor.clone().unwrap_or_else(AttractorConfig::default);
            let samples = sample(&exp, &acfg)?;
            let dir = cfg.output.dir.join("attractor");
            write_samples(&dir, &samples, &acfg, &exp.fingerprint)?;
            println!("{} samples written to {}", samples.len(), dir.display());
            if let Some(other) = compare {
                let b = read_samples(&other)?;
                println!("H1 semi-distance {}", attractor_distance(&samples, &b)?);
            }
            Ok(0)
        }
        Command::VerifySymbol { model, nu, kmax } => {
            let sym = match model {
                Model::Sqg => MultiplierSymbol::Sqg,
                Model::Mg => MultiplierSymbol::mg(nu)?,
            };
            if dry {
                return Ok(0);
            }
            print!("{}", audit_assumptions(&sym, kmax)?);
            Ok(0)
        }
        Command::LinearOracle {
            gamma,
            kappa,
            lambda,
            n,
            t,
            dt,
            seed,
        } => {
            let p = ModelParams::new(lambda, kappa, gamma, MultiplierSymbol::Sqg)?;
            let g = Grid::new(2, n)?;
            if dry {
                return Ok(0);
            }
            let dev = linear_oracle_deviation(&p, g, t, dt, seed)?;
            println!("max modewise relative deviation {dev:e} (tolerance {ORACLE_TOLERANCE:e})");
            Ok(if dev <= ORACLE_TOLERANCE { 0 } else { 2 })
        }
    }
}

fn convergence(arg: &ConfigArg, axis: SweepAxis) -> Result<i32> {
    let (cfg, exp) = load(arg)?;
    let (values, s_list) = sweep_values(&cfg, axis)?;
    let s = match axis {
        SweepAxis::Lambda => sweep_lambda(&exp, &values, &s_list, cfg.output.threads)?,
        SweepAxis::Kappa => sweep_kappa_convergence(&exp, &values, &s_list, cfg.output.threads)?,
    };
    let mut t = Vec::new();
    s.write_table(&mut t).expect("writing to memory");
    write_file(&cfg.output.dir, s.file_name(), &t)?;
    print!("{}", String::from_utf8_lossy(&t));
    println!("monotone {}", s.monotone);
    if let Some(f) = s.fit {
        println!("fit slope {} intercept {} r2 {}", f.slope, f.intercept, f.r_squared);
    }
    Ok(if s.failures() > 0 { 2 } else { 0 })
}
