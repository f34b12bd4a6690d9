//! Pseudo-spectral building blocks for forced, damped active scalar equations
//! on the periodic torus.

pub mod attractor;
pub mod constitutive;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod norms;
pub mod profiles;
pub mod snapshot;

pub use error::{Error, Result};
pub use fft::{transform_backward, transform_forward, Transformer};
pub use field::{apply_damping, apply_lambda_power, dealias_two_thirds, SpectralField, VectorField};
pub use grid::Grid;
pub use norms::{norms, NormReport};
