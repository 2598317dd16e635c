//! Numerical laboratory for the Schrödinger–Newton two-body problem and its
//! quantized-Newtonian counterpart.

pub mod correlations;
pub mod ensemble;
pub mod error;
pub mod fields;
pub mod grid;
pub mod gaussian;
pub mod params;
pub mod quadrature;
pub mod reference;
pub mod snapshot;
pub mod solver;
pub mod specfun;

pub use correlations::CorrelationReport;
pub use ensemble::{EnsembleMode, EnsembleState, EnsembleTrajectory, VonNeumannReport};
pub use error::{Result, SnError};
pub use gaussian::{BlockInvariants, CovarianceMatrix};
pub use grid::{Axis, GridSpec, WaveField};
pub use params::{FrequencyConvention, PdeUnits, PhysicalParams};
pub use solver::{BipartiteKernel, Diagnostics, NonlinearityUpdate, Scheme, SolverConfig, Trajectory};
pub use specfun::EllipticModulus;
