//! Numerical laboratory for quasilinear degenerate parabolic-hyperbolic SPDEs
//! with multiplicative noise on the torus.

pub mod analysis;
pub mod error;
pub mod field;
pub mod harness;
pub mod kinetic;
pub mod model;
pub mod multiplier_kernels;
pub mod noise;
pub mod quad;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision instances used by the harness and the CLI.
pub type Field64 = field::Field<f64>;
pub type ModelSpec64 = model::ModelSpec<f64>;
pub type NoiseModel64 = noise::NoiseModel<f64>;
pub type SolverConfig64 = solver::SolverConfig<f64>;
pub type Solver64 = solver::Solver<f64>;
pub type Trajectory64 = solver::Trajectory<f64>;
