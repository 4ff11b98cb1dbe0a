//! Replicate studies comparing the large-scale mean `L_t`, the mean
//! conditional on the past `C_t` and the empirical mean `D_t` across
//! centering variants.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{build_neighbor_graph, GridShape, NeighborhoodSpec};
use crate::model::{CenteringVariant, ModelParams};
use crate::presets::CovariateShape;
use crate::rng::RngStream;
use crate::sampler::{simulate_trajectory, InitialSlice, SamplerConfig};
use crate::scalar::{logistic, logit, Scalar};
use crate::series::CovariateSeries;

/// `L_t`: the logistic large-scale mean, averaged over sites when the
/// covariates vary in space.
pub fn large_scale_l<T: Scalar>(params: &ModelParams<T>, x: &CovariateSeries<T>, t: usize) -> T {
    if x.is_spatially_constant() {
        return logistic(params.linear_predictor(x.x(0, t)));
    }
    let n = x.n_sites();
    (0..n).map(|i| logistic(params.linear_predictor(x.x(i, t)))).sum::<T>() / T::of_usize(n)
}

/// `C_t`: mean over sites of `logistic(x'β + ρ2 z_prev)`.
pub fn conditional_scale_c<T: Scalar>(params: &ModelParams<T>, x: &CovariateSeries<T>, t: usize, z_prev: &[u8]) -> T {
    let n = z_prev.len();
    z_prev
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let past = if z == 1 { params.rho2 } else { T::zero() };
            logistic(params.linear_predictor(x.x(i, t)) + past)
        })
        .sum::<T>()
        / T::of_usize(n)
}

/// `D_t`: fraction of ones.
pub fn empirical_mean_d(slice: &[u8]) -> f64 {
    slice.iter().map(|&v| v as usize).sum::<usize>() as f64 / slice.len() as f64
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub name: String,
    pub shape: GridShape,
    pub horizon: usize,
    pub neighborhood: NeighborhoodSpec,
    pub variants: Vec<CenteringVariant>,
    /// `(ρ1, ρ2)` cells.
    pub grid: Vec<(f64, f64)>,
    pub replicates: usize,
    pub beta: Vec<f64>,
    pub covariate: CovariateShape,
    pub p0: f64,
    pub sampler: SamplerConfig,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self::model1()
    }
}

fn square(values: &[f64]) -> Vec<(f64, f64)> {
    values
        .iter()
        .flat_map(|&a| values.iter().map(move |&b| (a, b)))
        .collect()
}

impl StudyConfig {
    /// Intercept only with `L_t = 0.2`, 20×20, `t = 0..=50`.
    pub fn model1() -> Self {
        StudyConfig {
            name: "model1".into(),
            shape: GridShape::new(20, 20).expect("valid grid"),
            horizon: 50,
            neighborhood: NeighborhoodSpec::Rect(1, 1),
            variants: CenteringVariant::ALL.to_vec(),
            grid: square(&[0.3, 0.5, 0.7]),
            replicates: 100,
            beta: vec![logit(0.2)],
            covariate: CovariateShape::None,
            p0: 0.2,
            sampler: SamplerConfig::default(),
        }
    }

    /// Increasing trend `X_t = t` with `L_1 ≈ 0.1` and `L_50 ≈ 0.94`.
    pub fn model2() -> Self {
        StudyConfig {
            name: "model2".into(),
            beta: vec![logit(0.1), 0.1],
            covariate: CovariateShape::Linear,
            p0: 0.1,
            ..Self::model1()
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "model1" => Some(Self::model1()),
            "model2" => Some(Self::model2()),
            _ => None,
        }
    }

    /// Restricts the grid to `values²`.
    pub fn with_grid(mut self, values: &[f64]) -> Self {
        self.grid = square(values);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.shape.validate()?;
        self.sampler.validate()?;
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("replicates must be at least 1".into()));
        }
        if self.grid.is_empty() || self.variants.is_empty() {
            return Err(Error::InvalidParameter("study needs at least one variant and one grid cell".into()));
        }
        let p = match self.covariate {
            CovariateShape::None => 0,
            _ => 1,
        };
        if self.beta.len() != p + 1 {
            return Err(Error::InvalidParameter(format!(
                "beta has {} entries, covariate shape needs {}",
                self.beta.len(),
                p + 1
            )));
        }
        if !(0.0..=1.0).contains(&self.p0) {
            return Err(Error::InvalidParameter(format!("p0 = {} not in [0,1]", self.p0)));
        }
        Ok(())
    }

    pub fn params(&self, variant: CenteringVariant, rho1: f64, rho2: f64) -> Result<ModelParams<f64>> {
        ModelParams::new(self.beta.clone(), rho1, rho2, variant)
    }
}

/// One time point of one replicate trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub variant: CenteringVariant,
    pub rho1: f64,
    pub rho2: f64,
    pub replicate: usize,
    pub t: usize,
    #[serde(rename = "L")]
    pub l: f64,
    /// Undefined at `t = 0`.
    #[serde(rename = "C")]
    pub c: Option<f64>,
    #[serde(rename = "D")]
    pub d: f64,
}

/// Across-replicate summary of `D_t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyBand {
    pub variant: CenteringVariant,
    pub rho1: f64,
    pub rho2: f64,
    pub t: usize,
    #[serde(rename = "L")]
    pub l: f64,
    pub d_mean: f64,
    pub d_lower: f64,
    pub d_median: f64,
    pub d_upper: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct StudySeries {
    /// Ordered by variant, cell, replicate, `t`.
    pub records: Vec<StudyRecord>,
    /// Ordered by variant, cell, `t`.
    pub bands: Vec<StudyBand>,
}

impl StudySeries {
    /// Records of one `(variant, ρ1, ρ2)` cell.
    pub fn cell(&self, variant: CenteringVariant, rho1: f64, rho2: f64) -> impl Iterator<Item = &StudyRecord> {
        self.records
            .iter()
            .filter(move |r| r.variant == variant && r.rho1 == rho1 && r.rho2 == rho2)
    }

    /// Time-averaged `D_t` (over `t = 1..=T`) of each replicate of a cell, by
    /// replicate index.
    pub fn time_averaged_d(&self, variant: CenteringVariant, rho1: f64, rho2: f64) -> Vec<f64> {
        let mut sums: Vec<(f64, usize)> = Vec::new();
        for r in self.cell(variant, rho1, rho2).filter(|r| r.t > 0) {
            if sums.len() <= r.replicate {
                sums.resize(r.replicate + 1, (0.0, 0));
            }
            sums[r.replicate].0 += r.d;
            sums[r.replicate].1 += 1;
        }
        sums.into_iter().map(|(s, k)| s / k as f64).collect()
    }

    pub fn write_records_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_bands_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for b in &self.bands {
            w.serialize(b)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Simulates every `(variant, cell, replicate)` trajectory and summarizes
/// `D_t` by its 2.5%, 50% and 97.5% percentiles.
///
/// Replicate `r` of cell `k` uses `stream.derive(k).replicate(r)` for every
/// variant, so variants are compared on common random numbers.
pub fn replicate_study(config: &StudyConfig, stream: &RngStream) -> Result<StudySeries> {
    config.validate()?;
    let graph = build_neighbor_graph(config.shape, config.neighborhood);
    let n = config.shape.n_sites();
    let x: CovariateSeries<f64> = config.covariate.series(n, config.horizon)?;
    let base = SamplerConfig {
        initial: InitialSlice::Bernoulli(config.p0),
        ..config.sampler.clone()
    };
    let jobs: Vec<(CenteringVariant, usize, usize)> = config
        .variants
        .iter()
        .flat_map(|&v| (0..config.grid.len()).flat_map(move |k| (0..config.replicates).map(move |r| (v, k, r))))
        .collect();
    let trajectories: Vec<Vec<StudyRecord>> = jobs
        .par_iter()
        .map(|&(variant, k, r)| {
            let (rho1, rho2) = config.grid[k];
            let params = config.params(variant, rho1, rho2)?;
            let sampler = base.fallback_for(&params);
            let z = simulate_trajectory(config.horizon, &x, &params, &graph, &sampler, &stream.derive(k as u64).replicate(r))
                .map_err(|e| {
                    Error::Validation(format!("{variant} at (rho1={rho1}, rho2={rho2}), replicate {r}: {e}"))
                })?;
            Ok((0..=config.horizon)
                .map(|t| StudyRecord {
                    variant,
                    rho1,
                    rho2,
                    replicate: r,
                    t,
                    l: large_scale_l(&params, &x, t),
                    c: (t > 0).then(|| conditional_scale_c(&params, &x, t, z.slice(t - 1))),
                    d: empirical_mean_d(z.slice(t)),
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut bands = Vec::new();
    for (cell, chunk) in trajectories.chunks(config.replicates).enumerate() {
        let (variant, k, _) = jobs[cell * config.replicates];
        let (rho1, rho2) = config.grid[k];
        for t in 0..=config.horizon {
            let mut d: Vec<f64> = chunk.iter().map(|traj| traj[t].d).collect();
            d.sort_by(f64::total_cmp);
            bands.push(StudyBand {
                variant,
                rho1,
                rho2,
                t,
                l: chunk[0][t].l,
                d_mean: d.iter().sum::<f64>() / d.len() as f64,
                d_lower: quantile(&d, 0.025),
                d_median: quantile(&d, 0.5),
                d_upper: quantile(&d, 0.975),
            });
        }
    }
    Ok(StudySeries {
        records: trajectories.into_iter().flatten().collect(),
        bands,
    })
}
