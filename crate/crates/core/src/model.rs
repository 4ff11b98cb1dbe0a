//! Conditional law of the centered spatio-temporal autologistic model.
//!
//! Given the previous slice `Z_{t-1}` and covariates `X_t`, slice `Z_t` is a
//! binary Markov random field with full conditionals
//!
//! ```text
//! logit P(Z_it = 1 | rest) = x_it'β + ρ1 Σ_{j∈N_i} (Z_jt − μ_jt) + ρ2 Z_i,t−1
//! ```
//!
//! where the centering offset `μ_jt` depends on the [`CenteringVariant`].
//! Collecting the terms that do not involve `Z_t` gives the singleton field
//! `α_i = x_it'β − ρ1 Σ_{j∈N_i} μ_jt + ρ2 Z_i,t−1`, and the slice law is the
//! Gibbs measure `exp(Σ α_i z_i + ρ1 Σ_{i~j} z_i z_j) / C`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::NeighborGraph;
use crate::scalar::{logistic, Scalar};
use crate::series::{BinaryFieldSeries, CovariateSeries};

/// Largest lattice the brute-force oracles will enumerate.
pub const BRUTE_FORCE_MAX_SITES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenteringVariant {
    /// Neighbors enter uncentered.
    Traditional,
    /// Neighbors centered by `logistic(x'β)`.
    OneStep,
    /// Neighbors centered by `logistic(x'β + ρ2 z_prev)`, the conditional
    /// mean given the past.
    NewCentered,
}

impl CenteringVariant {
    pub const ALL: [CenteringVariant; 3] = [
        CenteringVariant::Traditional,
        CenteringVariant::OneStep,
        CenteringVariant::NewCentered,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CenteringVariant::Traditional => "traditional",
            CenteringVariant::OneStep => "one_step",
            CenteringVariant::NewCentered => "new_centered",
        }
    }
}

impl std::fmt::Display for CenteringVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters `θ = (β, ρ1, ρ2)`; `beta[0]` is the intercept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ModelParams<T> {
    pub beta: Vec<T>,
    pub rho1: T,
    pub rho2: T,
    pub variant: CenteringVariant,
}

impl<T: Scalar> ModelParams<T> {
    pub fn new(beta: Vec<T>, rho1: T, rho2: T, variant: CenteringVariant) -> Result<Self> {
        let p = ModelParams {
            beta,
            rho1,
            rho2,
            variant,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta.is_empty() {
            return Err(Error::InvalidParameter("beta needs at least the intercept".into()));
        }
        if !self.to_vec().iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite parameter in {:?}", self.to_vec())));
        }
        Ok(())
    }

    /// Number of covariates `p` (excluding the intercept).
    pub fn n_covariates(&self) -> usize {
        self.beta.len() - 1
    }

    /// Length of the flattened parameter vector, `p + 3`.
    pub fn dim(&self) -> usize {
        self.beta.len() + 2
    }

    /// Flattened `[β0, β1..βp, ρ1, ρ2]`.
    pub fn to_vec(&self) -> Vec<T> {
        let mut v = self.beta.clone();
        v.push(self.rho1);
        v.push(self.rho2);
        v
    }

    pub fn from_vec(v: &[T], variant: CenteringVariant) -> Self {
        let k = v.len();
        assert!(k >= 3, "parameter vector needs intercept, rho1 and rho2");
        ModelParams {
            beta: v[..k - 2].to_vec(),
            rho1: v[k - 2],
            rho2: v[k - 1],
            variant,
        }
    }

    pub fn is_independence(&self) -> bool {
        self.rho1 == T::zero() && self.rho2 == T::zero()
    }

    /// `x'β` with the intercept prepended.
    #[inline]
    pub fn linear_predictor(&self, x: &[T]) -> T {
        debug_assert_eq!(x.len() + 1, self.beta.len());
        self.beta[1..]
            .iter()
            .zip(x)
            .fold(self.beta[0], |acc, (&b, &xv)| acc + b * xv)
    }

    fn check_covariates(&self, x: &CovariateSeries<T>) -> Result<()> {
        if x.p() + 1 != self.beta.len() {
            return Err(Error::Dimension(format!(
                "{} covariates supplied for {} slope coefficients",
                x.p(),
                self.beta.len() - 1
            )));
        }
        Ok(())
    }
}

/// Centering offset subtracted from a neighbor's value.
///
/// Zero for [`CenteringVariant::Traditional`], `logistic(x'β)` for
/// [`CenteringVariant::OneStep`] and `logistic(x'β + ρ2 z_prev)` for
/// [`CenteringVariant::NewCentered`].
#[inline]
pub fn centering_offset<T: Scalar>(variant: CenteringVariant, params: &ModelParams<T>, x: &[T], z_prev: u8) -> T {
    match variant {
        CenteringVariant::Traditional => T::zero(),
        CenteringVariant::OneStep => logistic(params.linear_predictor(x)),
        CenteringVariant::NewCentered => {
            let past = if z_prev == 1 { params.rho2 } else { T::zero() };
            logistic(params.linear_predictor(x) + past)
        }
    }
}

/// Centering offsets of every site at time `t`, using `params.variant`.
pub fn slice_offsets<T: Scalar>(params: &ModelParams<T>, x: &CovariateSeries<T>, t: usize, z_prev: &[u8]) -> Vec<T> {
    (0..z_prev.len())
        .map(|j| centering_offset(params.variant, params, x.x(j, t), z_prev[j]))
        .collect()
}

/// Singleton potentials `α_i` of the slice Gibbs measure at time `t`.
///
/// The full conditional logit of site `i` is `α_i + ρ1 · (#neighbors at 1)`.
pub fn slice_fields<T: Scalar>(
    params: &ModelParams<T>,
    graph: &NeighborGraph,
    x: &CovariateSeries<T>,
    t: usize,
    z_prev: &[u8],
) -> Result<Vec<T>> {
    params.check_covariates(x)?;
    let n = graph.n_sites();
    if z_prev.len() != n {
        return Err(Error::Dimension(format!(
            "previous slice has {} sites, lattice has {n}",
            z_prev.len()
        )));
    }
    if x.n_sites() != n || x.horizon() < t {
        return Err(Error::Dimension(format!("covariates do not cover t = {t} on {n} sites")));
    }
    let offsets = slice_offsets(params, x, t, z_prev);
    Ok((0..n)
        .map(|i| {
            let centering: T = graph.neighbors(i).iter().map(|&j| offsets[j]).sum();
            let past = if z_prev[i] == 1 { params.rho2 } else { T::zero() };
            params.linear_predictor(x.x(i, t)) - params.rho1 * centering + past
        })
        .collect())
}

fn check_time(z: &BinaryFieldSeries, t: usize) -> Result<()> {
    if t == 0 {
        return Err(Error::NoPastSlice { t });
    }
    if t > z.horizon() {
        return Err(Error::Dimension(format!("t = {t} beyond horizon {}", z.horizon())));
    }
    Ok(())
}

/// Full conditional log-odds of `Z_it = 1` given the rest of slice `t`, the
/// previous slice and the covariates.
pub fn conditional_logit<T: Scalar>(
    site: usize,
    t: usize,
    z: &BinaryFieldSeries,
    x: &CovariateSeries<T>,
    params: &ModelParams<T>,
    graph: &NeighborGraph,
) -> Result<T> {
    check_time(z, t)?;
    params.check_covariates(x)?;
    let n = graph.n_sites();
    if site >= n {
        return Err(Error::SiteOutOfRange { site, n });
    }
    if z.n_sites() != n {
        return Err(Error::Dimension(format!("field has {} sites, lattice has {n}", z.n_sites())));
    }
    let cur = z.slice(t);
    let prev = z.slice(t - 1);
    let spatial: T = graph
        .neighbors(site)
        .iter()
        .map(|&j| T::of(cur[j] as f64) - centering_offset(params.variant, params, x.x(j, t), prev[j]))
        .sum();
    let past = if prev[site] == 1 { params.rho2 } else { T::zero() };
    Ok(params.linear_predictor(x.x(site, t)) + params.rho1 * spatial + past)
}

/// Full conditional probability of `Z_it = 1`.
pub fn conditional_prob<T: Scalar>(
    site: usize,
    t: usize,
    z: &BinaryFieldSeries,
    x: &CovariateSeries<T>,
    params: &ModelParams<T>,
    graph: &NeighborGraph,
) -> Result<T> {
    conditional_logit(site, t, z, x, params, graph).map(logistic)
}

fn check_state(z: &[u8], n: usize, what: &str) -> Result<()> {
    if z.len() != n {
        return Err(Error::Dimension(format!("{what} has {} sites, lattice has {n}", z.len())));
    }
    Ok(())
}

fn log_density_with_fields<T: Scalar>(z: &[u8], fields: &[T], rho1: T, graph: &NeighborGraph) -> T {
    let singles: T = z
        .iter()
        .zip(fields)
        .filter(|(&zi, _)| zi == 1)
        .map(|(_, &a)| a)
        .sum();
    let pairs = graph.edges().filter(|&(i, j)| z[i] == 1 && z[j] == 1).count();
    singles + rho1 * T::of_usize(pairs)
}

/// Unnormalized log-probability `Σ_i Φ_i(z_i) + Σ_{i~j} Φ_ij(z_i, z_j)` of slice
/// state `z` given the previous slice and the covariates at `t`.
///
/// The additive normalizing constant is omitted.
pub fn joint_unnormalized_log_density<T: Scalar>(
    z: &[u8],
    z_prev: &[u8],
    x: &CovariateSeries<T>,
    t: usize,
    params: &ModelParams<T>,
    graph: &NeighborGraph,
) -> Result<T> {
    check_state(z, graph.n_sites(), "state")?;
    let fields = slice_fields(params, graph, x, t, z_prev)?;
    Ok(log_density_with_fields(z, &fields, params.rho1, graph))
}

/// Exact slice law, indexed by bitmask (bit `i` is site `i`).
#[derive(Clone, Debug, PartialEq)]
pub struct JointTable<T> {
    n_sites: usize,
    probs: Vec<T>,
}

impl<T: Scalar> JointTable<T> {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn prob(&self, mask: usize) -> T {
        self.probs[mask]
    }

    /// `P(Z_i = 1 | all other sites as in mask)`.
    pub fn conditional(&self, mask: usize, site: usize) -> T {
        let on = self.probs[mask | (1 << site)];
        let off = self.probs[mask & !(1 << site)];
        on / (on + off)
    }

    /// Marginal `P(Z_i = 1)`.
    pub fn marginal(&self, site: usize) -> T {
        self.probs
            .iter()
            .enumerate()
            .filter(|(m, _)| m & (1 << site) != 0)
            .map(|(_, &p)| p)
            .sum()
    }
}

/// Encodes a binary state as a bitmask.
pub fn state_to_mask(z: &[u8]) -> usize {
    z.iter().enumerate().fold(0, |m, (i, &v)| m | ((v as usize) << i))
}

/// Decodes a bitmask into a binary state of `n` sites.
pub fn mask_to_state(mask: usize, n: usize) -> Vec<u8> {
    (0..n).map(|i| ((mask >> i) & 1) as u8).collect()
}

fn log_densities<T: Scalar>(fields: &[T], rho1: T, graph: &NeighborGraph) -> Vec<T> {
    let n = graph.n_sites();
    let mut z = vec![0u8; n];
    (0..1usize << n)
        .map(|mask| {
            for (i, zi) in z.iter_mut().enumerate() {
                *zi = ((mask >> i) & 1) as u8;
            }
            log_density_with_fields(&z, fields, rho1, graph)
        })
        .collect()
}

fn log_sum_exp<T: Scalar>(v: &[T]) -> T {
    let m = v.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    m + v.iter().map(|&x| (x - m).exp()).sum::<T>().ln()
}

fn check_brute_force_size(n: usize) -> Result<()> {
    if n > BRUTE_FORCE_MAX_SITES {
        return Err(Error::LatticeTooLarge {
            n,
            limit: BRUTE_FORCE_MAX_SITES,
        });
    }
    Ok(())
}

/// Exact slice law at time `t` by enumerating all `2^n` states.
pub fn brute_force_joint<T: Scalar>(
    z_prev: &[u8],
    x: &CovariateSeries<T>,
    t: usize,
    params: &ModelParams<T>,
    graph: &NeighborGraph,
) -> Result<JointTable<T>> {
    let n = graph.n_sites();
    check_brute_force_size(n)?;
    let fields = slice_fields(params, graph, x, t, z_prev)?;
    let ld = log_densities(&fields, params.rho1, graph);
    let lz = log_sum_exp(&ld);
    Ok(JointTable {
        n_sites: n,
        probs: ld.into_iter().map(|l| (l - lz).exp()).collect(),
    })
}

/// `log P(Z_t = z | Z_{t-1} = y)` with the normalizer computed by enumeration.
pub fn transition_log_prob<T: Scalar>(
    y: &[u8],
    z: &[u8],
    x: &CovariateSeries<T>,
    t: usize,
    params: &ModelParams<T>,
    graph: &NeighborGraph,
) -> Result<T> {
    let n = graph.n_sites();
    check_brute_force_size(n)?;
    check_state(z, n, "state")?;
    let fields = slice_fields(params, graph, x, t, y)?;
    let ld = log_densities(&fields, params.rho1, graph);
    Ok(ld[state_to_mask(z)] - log_sum_exp(&ld))
}
