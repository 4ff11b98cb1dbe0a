//! Maximum pseudo-likelihood estimation.
//!
//! The pseudo-likelihood multiplies the full conditionals of every cell
//! `(i, t)` with `t ≥ 1`. Because the centered neighbor sums depend on
//! `(β, ρ2)`, the maximization alternates two steps: freeze the centered
//! sums at the current estimate, then maximize the resulting logistic
//! log-likelihood by BFGS. Before that, `(β, ρ2)` are fitted without the
//! spatial term and `ρ1` starts at 1.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::NeighborGraph;
use crate::linalg::{inverse_spd, zeros, Matrix};
use crate::model::{slice_offsets, CenteringVariant, ModelParams};
use crate::optim::{minimize, BfgsOptions};
use crate::rng::RngStream;
use crate::sampler::{simulate_trajectory, InitialSlice, SamplerConfig};
use crate::scalar::{logistic, softplus, Scalar};
use crate::series::{BinaryFieldSeries, CovariateSeries};

/// Spatial regressor used in the rows of the information matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialRows {
    /// `Σ_j (Z_jt − μ_jt)` at the estimate, consistent with the objective.
    Centered,
    /// Raw neighbor count `Σ_j Z_jt`.
    Raw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmplOptions {
    pub max_em_iter: usize,
    /// Sup-norm change of θ between EM iterations that counts as converged.
    pub em_tol: f64,
    pub max_bfgs_iter: usize,
    pub grad_tol: f64,
    pub rho1_init: f64,
    pub variance_rows: SpatialRows,
    /// Constrain `ρ1 = 0` (independence in space).
    pub fix_rho1_zero: bool,
}

impl Default for EmplOptions {
    fn default() -> Self {
        EmplOptions {
            max_em_iter: 50,
            em_tol: 1e-6,
            max_bfgs_iter: 200,
            grad_tol: 1e-8,
            rho1_init: 1.0,
            variance_rows: SpatialRows::Centered,
            fix_rho1_zero: false,
        }
    }
}

impl EmplOptions {
    fn bfgs(&self) -> BfgsOptions {
        BfgsOptions {
            max_iter: self.max_bfgs_iter,
            grad_tol: self.grad_tol,
        }
    }
}

/// One EM iteration: log-PL with the centering frozen, before and after
/// the maximization step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EmTraceEntry<T> {
    pub iteration: usize,
    pub pl_before: T,
    pub pl_after: T,
    pub max_change: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FitResult<T> {
    pub params: ModelParams<T>,
    /// Parameter names, aligned with `params.to_vec()`.
    pub names: Vec<String>,
    /// Log pseudo-likelihood at the estimate.
    pub pl_value: T,
    /// `(U'WU)^{-1}`.
    pub cov_sandwich: Matrix<T>,
    /// `U'WU` itself.
    pub information: Matrix<T>,
    pub std_errors: Vec<T>,
    pub cov_bootstrap: Option<Matrix<T>>,
    pub em_iterations: usize,
    pub converged: bool,
    pub trace: Vec<EmTraceEntry<T>>,
    /// Number of scored cells `n T`.
    pub n_cells: usize,
}

impl<T: Scalar> FitResult<T> {
    pub fn estimates(&self) -> Vec<T> {
        self.params.to_vec()
    }

    pub fn bootstrap_std_errors(&self) -> Option<Vec<T>> {
        self.cov_bootstrap
            .as_ref()
            .map(|c| (0..c.len()).map(|i| c[i][i].max(T::zero()).sqrt()).collect())
    }
}

/// Parameter names for covariates `x`: intercept, covariates, rho1, rho2.
pub fn parameter_names(covariate_names: &[String]) -> Vec<String> {
    let mut names = vec!["intercept".to_string()];
    names.extend(covariate_names.iter().cloned());
    names.push("rho1".into());
    names.push("rho2".into());
    names
}

fn validate_data<T: Scalar>(z: &BinaryFieldSeries, x: &CovariateSeries<T>, graph: &NeighborGraph) -> Result<()> {
    if z.n_sites() != graph.n_sites() {
        return Err(Error::Dimension(format!(
            "field has {} sites, lattice has {}",
            z.n_sites(),
            graph.n_sites()
        )));
    }
    if z.horizon() == 0 {
        return Err(Error::Dimension("pseudo-likelihood needs at least one slice after t = 0".into()));
    }
    x.check_covers(z.n_sites(), z.horizon())
}

fn validate_params<T: Scalar>(params: &ModelParams<T>, x: &CovariateSeries<T>) -> Result<()> {
    params.validate()?;
    if params.n_covariates() != x.p() {
        return Err(Error::Dimension(format!(
            "{} covariates supplied for {} slope coefficients",
            x.p(),
            params.n_covariates()
        )));
    }
    Ok(())
}

/// Regression rows `[1, x_it, spatial_it, z_i,t−1]` and responses for every
/// scored cell, `t = 1..=T` outer, sites inner.
#[derive(Clone, Debug)]
pub struct Design<T> {
    k: usize,
    rows: Vec<T>,
    y: Vec<u8>,
}

impl<T: Scalar> Design<T> {
    /// Rows with the spatial column frozen at the centering of `centering`
    /// (or raw counts).
    pub fn build(
        z: &BinaryFieldSeries,
        x: &CovariateSeries<T>,
        graph: &NeighborGraph,
        centering: &ModelParams<T>,
        spatial: SpatialRows,
    ) -> Self {
        let n = z.n_sites();
        let p = x.p();
        let k = p + 3;
        let cells = n * z.horizon();
        let mut rows = Vec::with_capacity(cells * k);
        let mut y = Vec::with_capacity(cells);
        for t in 1..=z.horizon() {
            let cur = z.slice(t);
            let prev = z.slice(t - 1);
            let offsets = match spatial {
                SpatialRows::Centered => slice_offsets(centering, x, t, prev),
                SpatialRows::Raw => vec![T::zero(); n],
            };
            for i in 0..n {
                rows.push(T::one());
                rows.extend_from_slice(x.x(i, t));
                let s: T = graph
                    .neighbors(i)
                    .iter()
                    .map(|&j| T::of(cur[j] as f64) - offsets[j])
                    .sum();
                rows.push(s);
                rows.push(T::of(prev[i] as f64));
                y.push(cur[i]);
            }
        }
        Design { k, rows, y }
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_cols(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.rows[r * self.k..(r + 1) * self.k]
    }

    pub fn response(&self) -> &[u8] {
        &self.y
    }

    /// Indices of columns that are identically zero.
    pub fn zero_columns(&self) -> Vec<usize> {
        (0..self.k)
            .filter(|&c| (0..self.n_rows()).all(|r| self.row(r)[c] == T::zero()))
            .collect()
    }

    /// Logistic log-likelihood at `theta`; accumulates its gradient into
    /// `grad` when given.
    pub fn log_likelihood(&self, theta: &[T], mut grad: Option<&mut [T]>) -> T {
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|v| *v = T::zero());
        }
        let mut ll = T::zero();
        for r in 0..self.n_rows() {
            let u = self.row(r);
            let eta = u.iter().zip(theta).fold(T::zero(), |a, (&ui, &ti)| a + ui * ti);
            let y = self.y[r];
            ll = ll + if y == 1 { eta } else { T::zero() } - softplus(eta);
            if let Some(g) = grad.as_deref_mut() {
                let resid = T::of(y as f64) - logistic(eta);
                for (gi, &ui) in g.iter_mut().zip(u) {
                    *gi = *gi + resid * ui;
                }
            }
        }
        ll
    }

    /// `U'WU` with `W = diag(p(1 − p))` and `p` from `weights_theta` applied
    /// to `weight_rows` (which may differ from `self` for raw-count rows).
    fn information(&self, weight_rows: &Design<T>, weights_theta: &[T], keep: &[usize]) -> Matrix<T> {
        let kk = keep.len();
        let mut info = zeros(kk);
        for r in 0..self.n_rows() {
            let eta = weight_rows
                .row(r)
                .iter()
                .zip(weights_theta)
                .fold(T::zero(), |a, (&ui, &ti)| a + ui * ti);
            let pr = logistic(eta);
            let w = pr * (T::one() - pr);
            let u = self.row(r);
            for a in 0..kk {
                let ua = u[keep[a]] * w;
                for b in 0..=a {
                    info[a][b] = info[a][b] + ua * u[keep[b]];
                }
            }
        }
        for a in 0..kk {
            for b in 0..a {
                info[b][a] = info[a][b];
            }
        }
        info
    }
}

/// Log pseudo-likelihood of `params` (centering evaluated at `params`).
pub fn pseudo_log_likelihood<T: Scalar>(
    params: &ModelParams<T>,
    z: &BinaryFieldSeries,
    x: &CovariateSeries<T>,
    graph: &NeighborGraph,
) -> Result<T> {
    validate_data(z, x, graph)?;
    validate_params(params, x)?;
    let design = Design::build(z, x, graph, params, SpatialRows::Centered);
    Ok(design.log_likelihood(&params.to_vec(), None))
}

/// Gradient of the log pseudo-likelihood in `[β, ρ1, ρ2]`.
///
/// With `centering_fixed` the centered sums are treated as constants (the
/// score of the maximization step); otherwise their dependence on `(β, ρ2)`
/// is differentiated as well.
pub fn pl_gradient<T: Scalar>(
    params: &ModelParams<T>,
    z: &BinaryFieldSeries,
    x: &CovariateSeries<T>,
    graph: &NeighborGraph,
    centering_fixed: bool,
) -> Result<Vec<T>> {
    validate_data(z, x, graph)?;
    validate_params(params, x)?;
    let theta = params.to_vec();
    let k = theta.len();
    let design = Design::build(z, x, graph, params, SpatialRows::Centered);
    let mut grad = vec![T::zero(); k];
    design.log_likelihood(&theta, Some(&mut grad));
    if centering_fixed || params.variant == CenteringVariant::Traditional {
        return Ok(grad);
    }
    // d/dθ of ρ1 Σ_j (Z_jt − μ_jt) is −ρ1 Σ_j μ_jt (1 − μ_jt) ∂η_jt/∂θ.
    let n = z.n_sites();
    let p = x.p();
    let mut row = 0;
    let mut dmu = vec![T::zero(); n * k];
    for t in 1..=z.horizon() {
        let prev = z.slice(t - 1);
        for j in 0..n {
            let mu = crate::model::centering_offset(params.variant, params, x.x(j, t), prev[j]);
            let w = mu * (T::one() - mu);
            let d = &mut dmu[j * k..(j + 1) * k];
            d[0] = w;
            for (m, &xv) in x.x(j, t).iter().enumerate() {
                d[1 + m] = w * xv;
            }
            d[p + 1] = T::zero();
            d[p + 2] = if params.variant == CenteringVariant::NewCentered && prev[j] == 1 {
                w
            } else {
                T::zero()
            };
        }
        for i in 0..n {
            let u = design.row(row);
            let eta = u.iter().zip(&theta).fold(T::zero(), |a, (&ui, &ti)| a + ui * ti);
            let resid = T::of(design.y[row] as f64) - logistic(eta);
            for &j in graph.neighbors(i) {
                for c in 0..k {
                    grad[c] = grad[c] - resid * params.rho1 * dmu[j * k + c];
                }
            }
            row += 1;
        }
    }
    Ok(grad)
}

/// Maximizes the logistic log-likelihood of a frozen design over the
/// parameters flagged in `free`, starting from `init`.
pub fn maximize_pl_step<T: Scalar>(
    design: &Design<T>,
    init: &ModelParams<T>,
    free: &[bool],
    opts: &EmplOptions,
) -> Result<ModelParams<T>> {
    let full0 = init.to_vec();
    assert_eq!(full0.len(), design.n_cols());
    assert_eq!(free.len(), full0.len());
    let idx: Vec<usize> = (0..free.len()).filter(|&c| free[c]).collect();
    let x0: Vec<T> = idx.iter().map(|&c| full0[c]).collect();
    let mut full = full0.clone();
    let mut gfull = vec![T::zero(); full0.len()];
    let res = minimize(
        |v: &[T], g: &mut [T]| {
            for (&c, &vi) in idx.iter().zip(v) {
                full[c] = vi;
            }
            let ll = design.log_likelihood(&full, Some(&mut gfull));
            for (gi, &c) in g.iter_mut().zip(&idx) {
                *gi = -gfull[c];
            }
            -ll
        },
        &x0,
        opts.bfgs(),
    )?;
    let mut out = full0;
    for (&c, &v) in idx.iter().zip(&res.x) {
        out[c] = v;
    }
    Ok(ModelParams::from_vec(&out, init.variant))
}

fn sup_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()))
}

/// Fits `variant` to the data by alternating centering and BFGS steps.
pub fn empl_fit<T: Scalar>(
    z: &BinaryFieldSeries,
    x: &CovariateSeries<T>,
    graph: &NeighborGraph,
    variant: CenteringVariant,
    opts: &EmplOptions,
) -> Result<FitResult<T>> {
    validate_data(z, x, graph)?;
    let p = x.p();
    let k = p + 3;
    let names = parameter_names(x.names());
    let rho1_col = p + 1;

    // Stage 1: logistic regression on covariates and the past only.
    let base = ModelParams::from_vec(&vec![T::zero(); k], variant);
    let design0 = Design::build(z, x, graph, &base, SpatialRows::Raw);
    let zero_cols = design0.zero_columns();
    if let Some(&c) = zero_cols.iter().find(|&&c| c != rho1_col) {
        return Err(Error::ZeroColumn { column: names[c].clone() });
    }
    let mut free = vec![true; k];
    free[rho1_col] = false;
    let stage1 = maximize_pl_step(&design0, &base, &free, opts).map_err(|e| Error::EmStep {
        iteration: 0,
        source: Box::new(e),
    })?;

    let mut current = stage1.clone();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    if opts.fix_rho1_zero {
        current.rho1 = T::zero();
        converged = true;
    } else {
        if zero_cols.contains(&rho1_col) {
            return Err(Error::ZeroColumn { column: names[rho1_col].clone() });
        }
        current.rho1 = T::of(opts.rho1_init);
        let free = vec![true; k];
        for iteration in 1..=opts.max_em_iter {
            iterations = iteration;
            let design = Design::build(z, x, graph, &current, SpatialRows::Centered);
            let before = current.to_vec();
            let pl_before = design.log_likelihood(&before, None);
            let next = maximize_pl_step(&design, &current, &free, opts).map_err(|e| Error::EmStep {
                iteration,
                source: Box::new(e),
            })?;
            let after = next.to_vec();
            let pl_after = design.log_likelihood(&after, None);
            let change = sup_diff(&before, &after);
            trace.push(EmTraceEntry {
                iteration,
                pl_before,
                pl_after,
                max_change: change,
            });
            current = next;
            if change < T::of(opts.em_tol) {
                converged = true;
                break;
            }
        }
    }

    let pl_value = pseudo_log_likelihood(&current, z, x, graph)?;
    let (cov, info) = sandwich_inner(&current, z, x, graph, opts.variance_rows, opts.fix_rho1_zero, &names)?;
    let std_errors = (0..k).map(|i| cov[i][i].max(T::zero()).sqrt()).collect();
    Ok(FitResult {
        params: current,
        names,
        pl_value,
        cov_sandwich: cov,
        information: info,
        std_errors,
        cov_bootstrap: None,
        em_iterations: iterations,
        converged,
        trace,
        n_cells: z.n_sites() * z.horizon(),
    })
}

fn sandwich_inner<T: Scalar>(
    params: &ModelParams<T>,
    z: &BinaryFieldSeries,
    x: &CovariateSeries<T>,
    graph: &NeighborGraph,
    rows: SpatialRows,
    drop_rho1: bool,
    names: &[String],
) -> Result<(Matrix<T>, Matrix<T>)> {
    let k = params.dim();
    let keep: Vec<usize> = (0..k).filter(|&c| !(drop_rho1 && c == k - 2)).collect();
    let model_rows = Design::build(z, x, graph, params, SpatialRows::Centered);
    let theta = params.to_vec();
    let info_kept = match rows {
        SpatialRows::Centered => model_rows.information(&model_rows, &theta, &keep),
        SpatialRows::Raw => Design::build(z, x, graph, params, SpatialRows::Raw).information(&model_rows, &theta, &keep),
    };
    let kept_names: Vec<String> = keep.iter().map(|&c| names[c].clone()).collect();
    let inv = inverse_spd(&info_kept, &kept_names)?;
    let mut cov = zeros(k);
    let mut info = zeros(k);
    for (a, &ca) in keep.iter().enumerate() {
        for (b, &cb) in keep.iter().enumerate() {
            cov[ca][cb] = inv[a][b];
            info[ca][cb] = info_kept[a][b];
        }
    }
    Ok((cov, info))
}

/// Coefficient covariance `(U'WU)^{-1}` at `params`, with
/// `W = diag(p̂(1 − p̂))`. Returns `(covariance, U'WU)`.
pub fn variance_sandwich<T: Scalar>(
    params: &ModelParams<T>,
    z: &BinaryFieldSeries,
    x: &CovariateSeries<T>,
    graph: &NeighborGraph,
    rows: SpatialRows,
) -> Result<(Matrix<T>, Matrix<T>)> {
    validate_data(z, x, graph)?;
    validate_params(params, x)?;
    sandwich_inner(params, z, x, graph, rows, false, &parameter_names(x.names()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BootstrapReport<T> {
    pub covariance: Matrix<T>,
    pub std_errors: Vec<T>,
    pub replicates_ok: usize,
    /// `(replicate index, error)` for dropped replicates.
    pub failures: Vec<(usize, String)>,
    pub estimates: Vec<Vec<T>>,
}

/// Sample covariance (denominator `m − 1`) of row vectors.
pub fn empirical_covariance<T: Scalar>(rows: &[Vec<T>]) -> Matrix<T> {
    let m = rows.len();
    let k = rows.first().map_or(0, |r| r.len());
    let mean: Vec<T> = (0..k)
        .map(|c| rows.iter().map(|r| r[c]).sum::<T>() / T::of_usize(m))
        .collect();
    let mut cov = zeros(k);
    for r in rows {
        for a in 0..k {
            for b in 0..k {
                cov[a][b] = cov[a][b] + (r[a] - mean[a]) * (r[b] - mean[b]);
            }
        }
    }
    let denom = T::of_usize(m.saturating_sub(1).max(1));
    cov.iter_mut()
        .for_each(|row| row.iter_mut().for_each(|v| *v = *v / denom));
    cov
}

/// Parametric bootstrap from caller-supplied replicate streams: each stream
/// simulates one dataset at the estimate, which is then refitted.
pub fn bootstrap_with_streams<T, S>(
    fit: &FitResult<T>,
    graph: &NeighborGraph,
    streams: &[RngStream],
    opts: &EmplOptions,
    simulate: S,
) -> Result<BootstrapReport<T>>
where
    T: Scalar,
    S: Fn(&ModelParams<T>, &RngStream) -> Result<(BinaryFieldSeries, CovariateSeries<T>)> + Sync,
{
    if streams.len() < 2 {
        return Err(Error::InvalidParameter("bootstrap needs B >= 2".into()));
    }
    let outcomes: Vec<Result<Vec<T>>> = streams
        .par_iter()
        .map(|s| {
            let (z, x) = simulate(&fit.params, s)?;
            Ok(empl_fit(&z, &x, graph, fit.params.variant, opts)?.estimates())
        })
        .collect();
    let mut estimates = Vec::new();
    let mut failures = Vec::new();
    for (b, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(v) => estimates.push(v),
            Err(e) => failures.push((b, e.to_string())),
        }
    }
    if estimates.len() < 2 {
        return Err(Error::Bootstrap { ok: estimates.len() });
    }
    let covariance = empirical_covariance(&estimates);
    let std_errors = (0..covariance.len()).map(|i| covariance[i][i].sqrt()).collect();
    Ok(BootstrapReport {
        covariance,
        std_errors,
        replicates_ok: estimates.len(),
        failures,
        estimates,
    })
}

/// How bootstrap trajectories are started.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapStart {
    /// Reuse the observed slice 0 (conditional bootstrap).
    Observed,
    Bernoulli(f64),
}

/// Parametric bootstrap for fixed covariates: `b` trajectories simulated at
/// the estimate with streams `stream.replicate(0..b)`, each refitted.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_variance<T: Scalar>(
    fit: &FitResult<T>,
    z_obs: &BinaryFieldSeries,
    x: &CovariateSeries<T>,
    graph: &NeighborGraph,
    b: usize,
    stream: &RngStream,
    sampler: &SamplerConfig,
    start: &BootstrapStart,
    opts: &EmplOptions,
) -> Result<BootstrapReport<T>> {
    let streams: Vec<RngStream> = (0..b).map(|r| stream.replicate(r)).collect();
    let config = SamplerConfig {
        initial: match start {
            BootstrapStart::Observed => InitialSlice::Explicit(z_obs.slice(0).to_vec()),
            BootstrapStart::Bernoulli(p) => InitialSlice::Bernoulli(*p),
        },
        ..sampler.fallback_for(&fit.params)
    };
    let horizon = z_obs.horizon();
    bootstrap_with_streams(fit, graph, &streams, opts, |params, s| {
        Ok((simulate_trajectory(horizon, x, params, graph, &config, s)?, x.clone()))
    })
}
