use std::path::Path;
use std::process::{Command, Output};

use ascl_core::dynamics::exact_linear_solution;
use ascl_harness::config::ExperimentConfig;
use ascl_harness::sweep::{sweep_kappa, sweep_lambda};

fn ascl(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ascl"))
        .args(args)
        .env("ASCL_OUTPUT_DIR", out_dir)
        .env_remove("ASCL_THREADS")
        .output()
        .unwrap()
}

const SMALL: &str = r#"
[model]
equation = "sqg"
lambda = 0.5
kappa = 0.1
gamma = 1.0

[grid]
n = 16

[initial]
profile = "random-smooth"
seed = 3
l2 = 1.0

[time]
t_end = 0.5
dt = 0.01
stride = 10

[sweep]
parameter = "kappa"
values = [0.2, 0.1, 0.05]
"#;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("exp.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn verify_symbol_prints_the_audit() {
    let dir = tempfile::tempdir().unwrap();
    let o = ascl(&["verify-symbol", "--model", "mg", "--nu", "1", "--kmax", "16"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("not checked"), "{text}");
}

#[test]
fn missing_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = ascl(&["run", "--config", "missing.cfg"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_flags_print_usage() {
    let dir = tempfile::tempdir().unwrap();
    let o = ascl(&["run", "--bogus"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn linear_oracle_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = ascl(&["linear-oracle", "--gamma", "2", "--kappa", "1"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn dry_run_validates_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = ascl(&["--dry-run", "run", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0));
    assert!(!out.exists());
    let bad = write_config(dir.path(), &SMALL.replace("n = 16", "n = 15"));
    let o = ascl(&["run", "--dry-run", "--config", bad.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn run_writes_outputs_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = ascl(&["run", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["run.csv", "final.ascl", "final.chkp", "report.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("PASS L^2 damping bound"), "{report}");
    assert!(!report.contains("FAIL"), "{report}");
    let fp = ExperimentConfig::from_toml(SMALL).unwrap().fingerprint();
    let csv = std::fs::read_to_string(out.join("run.csv")).unwrap();
    assert!(csv.starts_with(&format!("# fingerprint={fp}\n")));
}

#[test]
fn numerical_faults_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // far beyond the CFL limit
    let text = SMALL.replace("l2 = 1.0", "l2 = 1000.0").replace("dt = 0.01", "dt = 0.1").replace("t_end = 0.5", "t_end = 1.0");
    let cfg = write_config(dir.path(), &text);
    let o = ascl(&["run", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn sweep_outputs_do_not_depend_on_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(ascl(&["sweep-kappa", "--config", cfg.to_str().unwrap()], &a).status.code(), Some(0));
    let o = Command::new(env!("CARGO_BIN_EXE_ascl"))
        .args(["sweep-kappa", "--config", cfg.to_str().unwrap()])
        .env("ASCL_OUTPUT_DIR", &b)
        .env("ASCL_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 4);
    for n in names {
        assert_eq!(std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap());
    }
}

#[test]
fn wrong_sweep_axis_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = ascl(&["sweep-lambda", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn attractor_samples_and_distance() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{SMALL}\n[attractor]\ntrajectories = 2\nsamples_per_trajectory = 2\nt_spinup = 0.5\nt_gap = 0.1\n"
    );
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("out");
    let o = ascl(&["attractor", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let samples = out.join("attractor");
    assert!(samples.join("manifest.txt").exists());
    let o = ascl(
        &["attractor", "--config", cfg.to_str().unwrap(), "--compare", samples.to_str().unwrap()],
        &dir.path().join("out2"),
    );
    assert!(String::from_utf8_lossy(&o.stdout).contains("H1 semi-distance 0"));
}

fn linear_unforced(dt: &str, stride: &str) -> ascl_harness::Experiment {
    let text = SMALL
        .replace("gamma = 1.0", "gamma = 1.0\nnonlinear = false")
        .replace("dt = 0.01", dt)
        .replace("stride = 10", stride)
        .replace("[initial]", "[forcing]\nprofile = \"zero\"\n\n[initial]");
    ExperimentConfig::from_toml(&text).unwrap().build(Path::new(".")).unwrap()
}

#[test]
fn linear_kappa_sweep_matches_closed_form() {
    // midpoint quadrature of the dissipation integral is second order in dt
    let e = linear_unforced("dt = 0.001", "stride = 100");
    let s = sweep_kappa(&e, &[0.2, 0.1, 0.05], 1).unwrap();
    for r in &s.rows {
        // (kappa / T) int_0^T sum 2 (2 pi)^2 |k|^2 |c_k|^2 e^{-2 sigma t} dt
        let g = e.grid;
        let mut want = 0.0;
        for (i, c) in e.theta0.coeffs().iter().enumerate() {
            let k = g.k_at(i);
            let kk = (k[0] * k[0] + k[1] * k[1]) as f64;
            if kk == 0.0 {
                continue;
            }
            let sigma = 0.5 * (kk.sqrt() + 1.0) + r.kappa * kk.sqrt();
            let integral = (1.0 - (-2.0 * sigma * e.t_end).exp()) / (2.0 * sigma);
            want += g.volume() * kk * c.norm_sqr() * integral;
        }
        want *= r.kappa / e.t_end;
        assert!((r.eps - want).abs() <= 1e-6 * want, "kappa {}: {} vs {want}", r.kappa, r.eps);
    }
    let single = sweep_kappa(&e, &[0.1], 1).unwrap();
    assert_eq!(single.rows.len(), 1);
    assert!(single.fit.is_none());
}

#[test]
fn linear_lambda_sweep_matches_closed_form() {
    let e = linear_unforced("dt = 0.01", "stride = 10");
    // linear response: the error is proportional to lambda as lambda -> 0
    let s = sweep_lambda(&e, &[0.01, 0.005, 0.0025], &[0.0, 1.0], 1).unwrap();
    let zero = e.params.with_lambda(0.0).unwrap();
    for r in &s.rows {
        let p = e.params.with_lambda(r.value).unwrap();
        let mut want = [0.0f64; 2];
        for j in 0..=((e.t_end / e.dt) as u64 / e.stride) {
            let t = (j * e.stride) as f64 * e.dt;
            let d = exact_linear_solution(&e.theta0, &e.forcing, &p, t)
                .unwrap()
                .sub(&exact_linear_solution(&e.theta0, &e.forcing, &zero, t).unwrap())
                .unwrap();
            want[0] = want[0].max(d.norm_hs(0.0));
            want[1] = want[1].max(d.norm_hs(1.0));
        }
        for i in 0..2 {
            assert!((r.errors[i] - want[i]).abs() <= 1e-10 * want[i]);
        }
    }
    assert!(s.monotone);
    let f = s.fit.unwrap();
    assert!((f.slope - 1.0).abs() < 0.02, "{f:?}");
    let only_zero = sweep_lambda(&e, &[0.0], &[0.0], 1).unwrap();
    assert_eq!(only_zero.rows[0].errors, vec![0.0]);
}
