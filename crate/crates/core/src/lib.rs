//! Centered autologistic models for binary fields on a lattice observed
//! over time: simulation by perfect sampling, pseudo-likelihood fitting,
//! neighborhood selection and replicate studies.

pub mod error;
pub mod estimator;
pub mod io;
pub mod lattice;
pub mod linalg;
pub mod model;
pub mod optim;
pub mod presets;
pub mod rng;
pub mod sampler;
pub mod scalar;
pub mod selector;
pub mod series;
pub mod simstudy;

pub use error::{Error, Result};
pub use estimator::{empl_fit, pl_gradient, pseudo_log_likelihood, variance_sandwich, EmplOptions, FitResult, SpatialRows};
pub use lattice::{build_neighbor_graph, neighbor_sum, GridShape, NeighborGraph, NeighborhoodSpec};
pub use model::{CenteringVariant, ModelParams};
pub use rng::{Purpose, RngStream};
pub use sampler::{simulate_trajectory, InitialSlice, SamplerConfig, SamplerMode};
pub use scalar::Scalar;
pub use series::{BinaryFieldSeries, CovariateSeries};

pub type ModelParams64 = ModelParams<f64>;
pub type ModelParams32 = ModelParams<f32>;
pub type CovariateSeries64 = CovariateSeries<f64>;
pub type CovariateSeries32 = CovariateSeries<f32>;
pub type FitResult64 = FitResult<f64>;
pub type FitResult32 = FitResult<f32>;
