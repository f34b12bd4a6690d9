use ascl_core::attractor::{gateaux_check, propagate_volume, TangentBundle, VolumeControls};
use ascl_core::constitutive::MultiplierSymbol;
use ascl_core::diagnostics::{dissipation_rate, write_csv};
use ascl_core::dynamics::{
    exact_linear_solution, run, run_from, ForcingSpec, Integrator, ModelParams, RunControls, SimulationState, StepOptions,
};
use ascl_core::profiles::{cosine_mode, random_smooth, random_smooth_where};
use ascl_core::snapshot::{read_checkpoint, write_checkpoint};
use ascl_core::{Error, Grid, SpectralField};

fn sqg(lambda: f64, kappa: f64, gamma: f64) -> ModelParams {
    ModelParams::new(lambda, kappa, gamma, MultiplierSymbol::Sqg).unwrap()
}

#[test]
fn checkpoint_resume_is_bit_exact() {
    let g = Grid::new(2, 32).unwrap();
    let p = sqg(0.5, 0.1, 1.0);
    let s = ForcingSpec::new(cosine_mode(g, &[1, 0], 1.0).unwrap(), &p.symbol).unwrap();
    let th0 = random_smooth(g, 3, 2.0, 3.0).unwrap();
    let dt = 0.01;
    let mut straight = SimulationState::new(p.clone(), s.clone(), th0.clone(), dt).unwrap();
    let mut integ = Integrator::new(&straight, StepOptions::default()).unwrap();
    for _ in 0..200 {
        integ.step(&mut straight).unwrap();
    }

    let mut first = SimulationState::new(p, s, th0, dt).unwrap();
    let mut integ = Integrator::new(&first, StepOptions::default()).unwrap();
    for _ in 0..120 {
        integ.step(&mut first).unwrap();
    }
    let mut bytes = Vec::new();
    write_checkpoint(&first, &mut bytes).unwrap();
    let mut resumed = read_checkpoint(bytes.as_slice()).unwrap();
    assert_eq!(resumed, first);
    let mut integ = Integrator::new(&resumed, StepOptions::default()).unwrap();
    for _ in 120..200 {
        integ.step(&mut resumed).unwrap();
    }
    assert_eq!(resumed.theta, straight.theta);
    assert_eq!(resumed.t, straight.t);
}

#[test]
fn mg_checkpoint_round_trip() {
    let g = Grid::new(3, 8).unwrap();
    let p = ModelParams::new(0.5, 0.5, 2.0, MultiplierSymbol::mg(2.0).unwrap()).unwrap();
    let th0 = random_smooth_where(g, 1, 1.0, 3.0, |k| k[2] != 0).unwrap();
    let st = SimulationState::new(p, ForcingSpec::zero(g), th0, 0.02).unwrap();
    let mut bytes = Vec::new();
    write_checkpoint(&st, &mut bytes).unwrap();
    assert_eq!(read_checkpoint(bytes.as_slice()).unwrap(), st);
    bytes.truncate(bytes.len() - 1);
    assert!(matches!(read_checkpoint(bytes.as_slice()), Err(Error::Format(_))));
}

#[test]
fn run_from_matches_a_single_run() {
    let g = Grid::new(2, 16).unwrap();
    let p = sqg(0.2, 0.2, 1.5);
    let s = ForcingSpec::new(cosine_mode(g, &[0, 1], 0.5).unwrap(), &p.symbol).unwrap();
    let th0 = random_smooth(g, 9, 1.0, 3.0).unwrap();
    let mut keep = RunControls::new(2.0, 10);
    keep.keep_states = true;
    let whole = run(&p, &th0, &s, 0.01, &keep, &mut []).unwrap();
    let st = SimulationState::new(p, s, th0, 0.01).unwrap();
    let (half, st) = run_from(st, &RunControls::new(1.0, 10), &mut []).unwrap();
    let (rest, _) = run_from(st, &RunControls::new(2.0, 10), &mut []).unwrap();
    let mid = whole.samples.iter().position(|x| x.step == 100).unwrap();
    assert_eq!(half.final_state, whole.states[mid]);
    assert_eq!(rest.final_state, whole.final_state);
}

#[test]
fn csv_is_reproducible_and_stride_independent_in_eps() {
    let g = Grid::new(2, 16).unwrap();
    let p = sqg(0.5, 0.1, 1.0);
    let s = ForcingSpec::new(cosine_mode(g, &[1, 0], 1.0).unwrap(), &p.symbol).unwrap();
    let th0 = random_smooth(g, 2, 1.0, 3.0).unwrap();
    let a = run(&p, &th0, &s, 0.01, &RunControls::new(1.0, 5), &mut []).unwrap();
    let b = run(&p, &th0, &s, 0.01, &RunControls::new(1.0, 5), &mut []).unwrap();
    let c = run(&p, &th0, &s, 0.01, &RunControls::new(1.0, 20), &mut []).unwrap();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    write_csv(&a, "f", &[], &mut x).unwrap();
    write_csv(&b, "f", &[], &mut y).unwrap();
    assert_eq!(x, y);
    assert!(String::from_utf8(x).unwrap().starts_with("# fingerprint=f\nt,l2,"));
    assert_eq!(dissipation_rate(&a, 0.1).last(), dissipation_rate(&c, 0.1).last());
}

#[test]
fn observer_failures_are_annotated() {
    let g = Grid::new(2, 8).unwrap();
    let p = sqg(0.5, 0.1, 1.0);
    let th0 = random_smooth(g, 2, 1.0, 3.0).unwrap();
    let mut calls = 0;
    let mut obs = |_: &SimulationState, s: &ascl_core::diagnostics::Sample| {
        calls += 1;
        if s.step == 10 {
            Err("refused".to_string())
        } else {
            Ok(())
        }
    };
    let rec = run(&p, &th0, &ForcingSpec::zero(g), 0.01, &RunControls::new(0.3, 10), &mut [&mut obs]).unwrap();
    assert_eq!(rec.samples.len(), 4);
    assert_eq!(rec.annotations.len(), 1);
    assert!(rec.annotations[0].contains("refused"));
    assert_eq!(calls, 4);
}

#[test]
fn volume_without_dynamics_is_conserved() {
    let g = Grid::new(2, 16).unwrap();
    let p = sqg(0.0, 0.0, 1.0).linear();
    let base = SimulationState::new(p, ForcingSpec::zero(g), SpectralField::zeros(g), 0.01).unwrap();
    let tangents: Vec<_> = (0..5).map(|i| random_smooth(g, i, 1.0, 1.0).unwrap()).collect();
    let mut b = TangentBundle::new(tangents).unwrap();
    let r = propagate_volume(base, &mut b, &VolumeControls::new(1.0)).unwrap();
    assert!(r.log_volume.iter().all(|v| v.abs() <= 1e-10));
}

#[test]
fn decoupled_modes_give_the_eigenvalue_sum() {
    let g = Grid::new(2, 16).unwrap();
    let (kappa, gamma) = (0.3, 1.5);
    let p = sqg(0.0, kappa, gamma).linear();
    let base = SimulationState::new(p, ForcingSpec::zero(g), SpectralField::zeros(g), 0.01).unwrap();
    let ks = [[1i64, 0], [2, 1], [0, 3]];
    let modes: Vec<_> = ks.iter().map(|k| cosine_mode(g, k, 1.0).unwrap()).collect();
    let mut b = TangentBundle::new(modes).unwrap();
    let r = propagate_volume(base, &mut b, &VolumeControls::new(1.0)).unwrap();
    let want: f64 = -kappa * ks.iter().map(|k| ((k[0] * k[0] + k[1] * k[1]) as f64).powf(gamma / 2.0)).sum::<f64>();
    assert!((r.average_trace - want).abs() <= 1e-10 * want.abs());
}

#[test]
fn affine_flow_has_no_gateaux_remainder() {
    let g = Grid::new(2, 16).unwrap();
    let p = sqg(0.5, 0.1, 1.0).linear();
    let s = ForcingSpec::new(cosine_mode(g, &[1, 0], 1.0).unwrap(), &p.symbol).unwrap();
    let th0 = random_smooth(g, 1, 1.0, 3.0).unwrap();
    let psi = random_smooth(g, 2, 1.0, 3.0).unwrap();
    for (_, r) in gateaux_check(&th0, &psi, &p, &s, 0.5, 0.01, &[1e-2, 1e-3, 1e-4]).unwrap() {
        assert!(r <= 1e-10, "{r}");
    }
}

#[test]
fn linear_run_tracks_the_closed_form() {
    let g = Grid::new(3, 8).unwrap();
    let p = ModelParams::new(0.5, 0.2, 2.0, MultiplierSymbol::mg(1.0).unwrap()).unwrap().linear();
    let th0 = random_smooth_where(g, 4, 1.0, 3.0, |k| k[2] != 0).unwrap();
    let s = ForcingSpec::new(random_smooth_where(g, 5, 1.0, 3.0, |k| k[2] != 0).unwrap(), &p.symbol).unwrap();
    let rec = run(&p, &th0, &s, 0.05, &RunControls::new(1.0, 20), &mut []).unwrap();
    let exact = exact_linear_solution(&th0, &s, &p, 1.0).unwrap();
    assert!(rec.final_state.sub(&exact).unwrap().max_abs() <= 1e-13);
}
