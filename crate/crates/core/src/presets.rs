//! Reference configurations used by the estimation, selection and
//! simulation studies.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lattice::{GridShape, NeighborhoodSpec};
use crate::model::{CenteringVariant, ModelParams};
use crate::scalar::Scalar;
use crate::series::CovariateSeries;

/// Rises by one per year up to 8, then falls back: `t` for `t ≤ 8`,
/// `16 − t` afterwards.
pub fn tent(t: usize) -> f64 {
    if t <= 8 {
        t as f64
    } else {
        16.0 - t as f64
    }
}

/// `X_t = t`.
pub fn linear(t: usize) -> f64 {
    t as f64
}

/// Temporal covariate shapes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateShape {
    None,
    Linear,
    Tent,
}

impl CovariateShape {
    /// Spatially constant series over `t = 0..=horizon`, column named `x`.
    pub fn series<T: Scalar>(&self, n_sites: usize, horizon: usize) -> Result<CovariateSeries<T>> {
        let f: fn(usize) -> f64 = match self {
            CovariateShape::None => return Ok(CovariateSeries::empty(n_sites, horizon)),
            CovariateShape::Linear => linear,
            CovariateShape::Tent => tent,
        };
        CovariateSeries::constant(n_sites, vec!["x".into()], (0..=horizon).map(|t| vec![T::of(f(t))]).collect())
    }
}

/// A simulation scenario for estimation or selection experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub shape: GridShape,
    pub horizon: usize,
    pub neighborhood: NeighborhoodSpec,
    pub beta: Vec<f64>,
    pub rho1: f64,
    pub rho2: f64,
    pub covariate: CovariateShape,
    /// Bernoulli probability of the initial slice.
    pub p0: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self::estimation_model1()
    }
}

impl Scenario {
    /// Model 1 of the estimation study: 20×20, 15 years, tent covariate with
    /// zero slope.
    pub fn estimation_model1() -> Self {
        Scenario {
            shape: GridShape::new(20, 20).expect("valid grid"),
            horizon: 15,
            neighborhood: NeighborhoodSpec::Rect(2, 1),
            beta: vec![-1.4, 0.0],
            rho1: 0.5,
            rho2: 0.5,
            covariate: CovariateShape::Tent,
            p0: 0.1,
        }
    }

    /// Model 2 of the estimation study: as model 1 with `β = (−2.8, 0.1)`.
    pub fn estimation_model2() -> Self {
        Scenario {
            beta: vec![-2.8, 0.1],
            ..Self::estimation_model1()
        }
    }

    /// Selection scenario without covariate.
    pub fn selection(rho1: f64) -> Self {
        Scenario {
            beta: vec![-1.4],
            rho1,
            covariate: CovariateShape::None,
            ..Self::estimation_model1()
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "model1" => Some(Self::estimation_model1()),
            "model2" => Some(Self::estimation_model2()),
            "selection" => Some(Self::selection(0.5)),
            _ => None,
        }
    }

    pub fn params<T: Scalar>(&self, variant: CenteringVariant) -> Result<ModelParams<T>> {
        ModelParams::new(
            self.beta.iter().map(|&b| T::of(b)).collect(),
            T::of(self.rho1),
            T::of(self.rho2),
            variant,
        )
    }

    pub fn covariates<T: Scalar>(&self) -> Result<CovariateSeries<T>> {
        self.covariate.series(self.shape.n_sites(), self.horizon)
    }
}
