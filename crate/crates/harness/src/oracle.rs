//! Stepped linear runs against the closed-form solution.

use ascl_core::dynamics::{exact_linear_solution, step_count, ForcingSpec, Integrator, ModelParams, SimulationState, StepOptions};
use ascl_core::profiles::random_smooth;
use ascl_core::Grid;

use crate::error::Result;

/// Pass threshold of the linear oracle.
pub const ORACLE_TOLERANCE: f64 = 1e-10;

/// Largest modewise relative deviation over the sampled times of a stepped
/// run with transport off, from random data and random forcing.
pub fn linear_oracle_deviation(params: &ModelParams, grid: Grid, t_end: f64, dt: f64, seed: u64) -> Result<f64> {
    let params = params.clone().linear();
    let theta0 = random_smooth(grid, seed, 1.0, 3.0)?;
    let forcing = ForcingSpec::new(random_smooth(grid, seed.wrapping_add(1), 1.0, 2.0)?, &params.symbol)?;
    let mut state = SimulationState::new(params.clone(), forcing.clone(), theta0.clone(), dt)?;
    let mut integ = Integrator::new(&state, StepOptions::default())?;
    let steps = step_count(t_end, dt)?;
    let every = (steps / 10).max(1);
    let mut worst = 0.0f64;
    for _ in 0..steps {
        integ.step(&mut state)?;
        if state.step % every == 0 || state.step == steps {
            let exact = exact_linear_solution(&theta0, &forcing, &params, state.t)?;
            for (a, b) in state.theta.coeffs().iter().zip(exact.coeffs()) {
                let d = (a - b).norm();
                let dev = if b.norm() > 0.0 { d / b.norm() } else { d };
                worst = worst.max(dev);
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ascl_core::constitutive::MultiplierSymbol;

    #[test]
    fn oracle_is_exact_for_a_few_parameters() {
        let g = Grid::new(2, 16).unwrap();
        for (l, k, gm) in [(0.0, 0.0, 1.0), (0.5, 1.0, 2.0), (2.0, 0.1, 0.5)] {
            let p = ModelParams::new(l, k, gm, MultiplierSymbol::Sqg).unwrap();
            assert!(linear_oracle_deviation(&p, g, 1.0, 0.05, 4).unwrap() <= ORACLE_TOLERANCE);
        }
    }
}
