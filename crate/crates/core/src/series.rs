//! Binary field and covariate time series on a lattice.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Binary states `Z[site, t]` for `t = 0..=T`; slice 0 is the initial field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryFieldSeries {
    n_sites: usize,
    slices: Vec<Vec<u8>>,
}

impl BinaryFieldSeries {
    pub fn new(n_sites: usize, slices: Vec<Vec<u8>>) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::Dimension("a field series needs at least the initial slice".into()));
        }
        for (t, s) in slices.iter().enumerate() {
            if s.len() != n_sites {
                return Err(Error::Dimension(format!(
                    "slice {t} has {} sites, expected {n_sites}",
                    s.len()
                )));
            }
            if let Some(i) = s.iter().position(|&v| v > 1) {
                return Err(Error::Validation(format!(
                    "non-binary value {} at site {i}, t = {t}",
                    s[i]
                )));
            }
        }
        Ok(BinaryFieldSeries { n_sites, slices })
    }

    /// Series holding only an initial slice.
    pub fn from_initial(initial: Vec<u8>) -> Result<Self> {
        Self::new(initial.len(), vec![initial])
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Last time index `T`.
    pub fn horizon(&self) -> usize {
        self.slices.len() - 1
    }

    pub fn slice(&self, t: usize) -> &[u8] {
        &self.slices[t]
    }

    pub fn slices(&self) -> &[Vec<u8>] {
        &self.slices
    }

    #[inline]
    pub fn get(&self, site: usize, t: usize) -> u8 {
        self.slices[t][site]
    }

    pub(crate) fn push(&mut self, slice: Vec<u8>) {
        debug_assert_eq!(slice.len(), self.n_sites);
        self.slices.push(slice);
    }

    /// Series truncated to `t = 0..=horizon`.
    pub fn truncated(&self, horizon: usize) -> Self {
        BinaryFieldSeries {
            n_sites: self.n_sites,
            slices: self.slices[..=horizon.min(self.horizon())].to_vec(),
        }
    }
}

/// Covariate vectors `X[site, t]` of length `p` (the intercept is not stored),
/// for `t = 0..=T`.
///
/// Spatially constant covariates (`X[i, t] = X[t]`) are stored once per time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CovariateSeries<T> {
    n_sites: usize,
    n_slices: usize,
    names: Vec<String>,
    spatially_constant: bool,
    values: Vec<T>,
}

impl<T: Scalar> CovariateSeries<T> {
    /// No covariates at all (intercept-only models).
    pub fn empty(n_sites: usize, horizon: usize) -> Self {
        CovariateSeries {
            n_sites,
            n_slices: horizon + 1,
            names: Vec::new(),
            spatially_constant: true,
            values: Vec::new(),
        }
    }

    /// Spatially constant covariates; `rows[t]` holds the `p` values at time `t`.
    pub fn constant(n_sites: usize, names: Vec<String>, rows: Vec<Vec<T>>) -> Result<Self> {
        let p = names.len();
        check_names(&names)?;
        if rows.is_empty() {
            return Err(Error::Dimension("covariates need at least one time slice".into()));
        }
        let mut values = Vec::with_capacity(rows.len() * p);
        for (t, r) in rows.iter().enumerate() {
            if r.len() != p {
                return Err(Error::Dimension(format!(
                    "covariate row at t = {t} has {} values, expected {p}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        Ok(CovariateSeries {
            n_sites,
            n_slices: rows.len(),
            names,
            spatially_constant: true,
            values,
        })
    }

    /// Site-varying covariates; `values` is laid out `[t][site][k]`.
    pub fn varying(n_sites: usize, names: Vec<String>, n_slices: usize, values: Vec<T>) -> Result<Self> {
        check_names(&names)?;
        if values.len() != n_slices * n_sites * names.len() {
            return Err(Error::Dimension(format!(
                "expected {} covariate values, got {}",
                n_slices * n_sites * names.len(),
                values.len()
            )));
        }
        Ok(CovariateSeries {
            n_sites,
            n_slices,
            names,
            spatially_constant: false,
            values,
        })
    }

    /// Number of covariates `p`.
    pub fn p(&self) -> usize {
        self.names.len()
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn horizon(&self) -> usize {
        self.n_slices - 1
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn is_spatially_constant(&self) -> bool {
        self.spatially_constant
    }

    /// Covariate vector of `site` at time `t`.
    #[inline]
    pub fn x(&self, site: usize, t: usize) -> &[T] {
        let p = self.names.len();
        let start = if self.spatially_constant {
            t * p
        } else {
            (t * self.n_sites + site) * p
        };
        &self.values[start..start + p]
    }

    /// Appends a site-varying column; `column` is laid out `[t][site]`.
    pub fn with_column(&self, name: &str, column: &[T]) -> Result<Self> {
        if self.names.iter().any(|n| n == name) {
            return Err(Error::Validation(format!("duplicate covariate name `{name}`")));
        }
        if column.len() != self.n_slices * self.n_sites {
            return Err(Error::Dimension(format!(
                "column `{name}` has {} values, expected {}",
                column.len(),
                self.n_slices * self.n_sites
            )));
        }
        let p = self.p();
        let mut values = Vec::with_capacity(column.len() * (p + 1));
        for t in 0..self.n_slices {
            for i in 0..self.n_sites {
                values.extend_from_slice(self.x(i, t));
                values.push(column[t * self.n_sites + i]);
            }
        }
        let mut names = self.names.clone();
        names.push(name.to_string());
        Ok(CovariateSeries {
            n_sites: self.n_sites,
            n_slices: self.n_slices,
            names,
            spatially_constant: false,
            values,
        })
    }

    /// Series truncated to `t = 0..=horizon`.
    pub fn truncated(&self, horizon: usize) -> Self {
        let n_slices = (horizon + 1).min(self.n_slices);
        let per_slice = if self.spatially_constant { 1 } else { self.n_sites } * self.p();
        CovariateSeries {
            n_sites: self.n_sites,
            n_slices,
            names: self.names.clone(),
            spatially_constant: self.spatially_constant,
            values: self.values[..n_slices * per_slice].to_vec(),
        }
    }

    pub(crate) fn check_covers(&self, n_sites: usize, horizon: usize) -> Result<()> {
        if self.n_sites != n_sites {
            return Err(Error::Dimension(format!(
                "covariates cover {} sites, field has {n_sites}",
                self.n_sites
            )));
        }
        if self.horizon() < horizon {
            return Err(Error::Dimension(format!(
                "covariates end at t = {}, field needs t = {horizon}",
                self.horizon()
            )));
        }
        Ok(())
    }
}

fn check_names(names: &[String]) -> Result<()> {
    for (k, n) in names.iter().enumerate() {
        if names[..k].contains(n) {
            return Err(Error::Validation(format!("duplicate covariate name `{n}`")));
        }
    }
    Ok(())
}
