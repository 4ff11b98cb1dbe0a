use serde::{Deserialize, Serialize};

use super::{past_neighbor_counts, Dataset, Metadata, PAST_NEIGHBORS};
use crate::error::Result;
use crate::lattice::{build_neighbor_graph, GridShape, NeighborhoodSpec};
use crate::model::{CenteringVariant, ModelParams};
use crate::rng::RngStream;
use crate::sampler::{simulate_trajectory_with, InitialSlice, SamplerConfig};

/// Parameters of the synthetic vineyard: spontaneous level `beta0`, effect
/// `beta1` of infected past neighbors, instantaneous `rho1`, persistence
/// `rho2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogateConfig {
    pub shape: GridShape,
    /// Number of yearly slices, including the initial one.
    pub years: usize,
    pub beta0: f64,
    pub beta1: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub instantaneous: NeighborhoodSpec,
    pub past: NeighborhoodSpec,
    /// Prevalence of the first year.
    pub p0: f64,
    pub sampler: SamplerConfig,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            shape: GridShape::with_spacing(30, 66, 1.5, 1.0).expect("valid grid"),
            years: 14,
            beta0: -3.04,
            beta1: 0.178,
            rho1: 0.135,
            rho2: 2.28,
            instantaneous: NeighborhoodSpec::Ellipse(5.0, 4.0),
            past: NeighborhoodSpec::Ellipse(1.0, 1.0),
            p0: 0.05,
            sampler: SamplerConfig::default(),
        }
    }
}

impl SurrogateConfig {
    pub fn params(&self) -> Result<ModelParams<f64>> {
        ModelParams::new(
            vec![self.beta0, self.beta1],
            self.rho1,
            self.rho2,
            CenteringVariant::NewCentered,
        )
    }
}

/// Simulates a vineyard whose single covariate is the number of infected
/// past neighbors. Years are slices `0..years`.
pub fn generate_surrogate_vineyard(config: &SurrogateConfig, stream: &RngStream) -> Result<Dataset<f64>> {
    config.shape.validate()?;
    let params = config.params()?;
    let graph = build_neighbor_graph(config.shape, config.instantaneous);
    let past = build_neighbor_graph(config.shape, config.past);
    let sampler = SamplerConfig {
        initial: InitialSlice::Bernoulli(config.p0),
        ..config.sampler.fallback_for(&params)
    };
    let n = config.shape.n_sites();
    let horizon = config.years.saturating_sub(1);
    let (z, x) = simulate_trajectory_with(
        horizon,
        vec![PAST_NEIGHBORS.to_string()],
        &params,
        &graph,
        &sampler,
        stream,
        |_, prev| match prev {
            None => vec![0.0; n],
            Some(z) => past_neighbor_counts(z, &past),
        },
    )?;
    let metadata = Metadata {
        shape: Some(config.shape),
        seed: Some(stream.seed()),
        generator: Some(serde_json::to_value(config)?),
        notes: Some("synthetic vineyard".into()),
    };
    Dataset::new(config.shape, z, x, metadata)
}
