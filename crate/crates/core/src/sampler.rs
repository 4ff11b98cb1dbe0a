//! Simulation of the Markov chain of Markov random fields.
//!
//! Each slice is drawn from its conditional Gibbs law given the previous
//! slice, either exactly by monotone coupling from the past, by Gibbs
//! sweeps started from an exact draw (PGS), or by plain Gibbs sweeps started
//! from the previous slice.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{GridShape, NeighborGraph};
use crate::model::{slice_fields, ModelParams};
use crate::rng::{Purpose, RngStream};
use crate::scalar::{logistic, Scalar};
use crate::series::{BinaryFieldSeries, CovariateSeries};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMode {
    /// One exact draw per slice.
    PerfectCftp,
    /// Exact draw followed by `gibbs_sweeps` Gibbs sweeps.
    Pgs,
    /// `gibbs_sweeps` Gibbs sweeps started from the previous slice.
    PlainGibbs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialSlice {
    Bernoulli(f64),
    Explicit(Vec<u8>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub mode: SamplerMode,
    pub gibbs_sweeps: usize,
    /// Length of the first coupling epoch; doubled until coalescence.
    pub cftp_start: u64,
    /// Give up once an epoch would exceed this many sweeps.
    pub cftp_max_sweeps: u64,
    pub initial: InitialSlice,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            mode: SamplerMode::PerfectCftp,
            gibbs_sweeps: 100,
            cftp_start: 1,
            cftp_max_sweeps: 1 << 20,
            initial: InitialSlice::Bernoulli(0.2),
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gibbs_sweeps == 0 {
            return Err(Error::InvalidParameter("gibbs_sweeps must be at least 1".into()));
        }
        if self.cftp_start == 0 {
            return Err(Error::InvalidParameter("cftp_start must be at least 1".into()));
        }
        if let InitialSlice::Bernoulli(p) = self.initial {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("initial Bernoulli probability {p} not in [0,1]")));
            }
        }
        Ok(())
    }

    /// Configuration to use for `params`: monotone coupling is unavailable
    /// when `rho1 < 0`, in which case plain Gibbs with ten times the sweeps
    /// is substituted.
    pub fn fallback_for<T: Scalar>(&self, params: &ModelParams<T>) -> SamplerConfig {
        if params.rho1 < T::zero() && self.mode != SamplerMode::PlainGibbs {
            SamplerConfig {
                mode: SamplerMode::PlainGibbs,
                gibbs_sweeps: self.gibbs_sweeps * 10,
                ..self.clone()
            }
        } else {
            self.clone()
        }
    }
}

/// Precomputed full-conditional probabilities of one slice: site `i` with
/// `k` neighbors at 1 turns on with probability `probs[offsets[i] + k]`.
pub struct SliceKernel<'g, T> {
    graph: &'g NeighborGraph,
    offsets: Vec<usize>,
    probs: Vec<T>,
}

impl<'g, T: Scalar> SliceKernel<'g, T> {
    pub fn new(fields: &[T], rho1: T, graph: &'g NeighborGraph) -> Self {
        let n = graph.n_sites();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut probs = Vec::new();
        offsets.push(0);
        for (i, &a) in fields.iter().enumerate() {
            for k in 0..=graph.degree(i) {
                probs.push(logistic(a + rho1 * T::of_usize(k)));
            }
            offsets.push(probs.len());
        }
        SliceKernel { graph, offsets, probs }
    }

    /// Builds the kernel of slice `t` from the model.
    pub fn for_slice(
        params: &ModelParams<T>,
        graph: &'g NeighborGraph,
        x: &CovariateSeries<T>,
        t: usize,
        z_prev: &[u8],
    ) -> Result<Self> {
        let fields = slice_fields(params, graph, x, t, z_prev)?;
        Ok(Self::new(&fields, params.rho1, graph))
    }

    #[inline]
    pub fn prob(&self, slice: &[u8], site: usize) -> T {
        self.probs[self.offsets[site] + self.graph.count_ones(slice, site) as usize]
    }

    /// One systematic-scan sweep in site order driven by `uniforms`.
    #[inline]
    pub fn sweep_with(&self, slice: &mut [u8], uniforms: &[T]) {
        for (i, &u) in uniforms.iter().enumerate() {
            slice[i] = (u < self.prob(slice, i)) as u8;
        }
    }

    pub fn sweep(&self, slice: &mut [u8], rng: &mut ChaCha8Rng) {
        for i in 0..slice.len() {
            let u = T::of(rng.gen::<f64>());
            slice[i] = (u < self.prob(slice, i)) as u8;
        }
    }
}

/// One systematic-scan Gibbs sweep of slice `t` (sites in row-major order).
#[allow(clippy::too_many_arguments)]
pub fn gibbs_sweep<T: Scalar>(
    slice: &mut [u8],
    z_prev: &[u8],
    x: &CovariateSeries<T>,
    t: usize,
    params: &ModelParams<T>,
    graph: &NeighborGraph,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    if slice.len() != graph.n_sites() {
        return Err(Error::Dimension(format!(
            "slice has {} sites, lattice has {}",
            slice.len(),
            graph.n_sites()
        )));
    }
    SliceKernel::for_slice(params, graph, x, t, z_prev)?.sweep(slice, rng);
    Ok(())
}

/// Outcome of a coupling-from-the-past run.
#[derive(Clone, Debug)]
pub struct CftpDraw {
    pub state: Vec<u8>,
    /// Length of the epoch that coalesced.
    pub epoch: u64,
}

/// Monotone coupling from the past with a prepared kernel.
///
/// Sweep `m` (the one ending `m - 1` steps before time 0) always uses the
/// same uniforms, read from block `m - 1` of the stream, so longer epochs
/// reuse the recent past exactly.
pub fn cftp_with_kernel<T: Scalar>(
    kernel: &SliceKernel<'_, T>,
    rho1: T,
    stream: &RngStream,
    start: u64,
    max_sweeps: u64,
) -> Result<CftpDraw> {
    if rho1 < T::zero() {
        return Err(Error::NonMonotone { rho1: rho1.as_f64() });
    }
    let n = kernel.graph.n_sites();
    let mut uniforms = vec![T::zero(); n];
    let mut lower = vec![0u8; n];
    let mut upper = vec![1u8; n];
    let mut epoch = start.max(1);
    loop {
        if epoch > max_sweeps {
            return Err(Error::NoCoalescence { sweeps: max_sweeps });
        }
        lower.iter_mut().for_each(|v| *v = 0);
        upper.iter_mut().for_each(|v| *v = 1);
        for m in (1..=epoch).rev() {
            let mut rng = stream.rng_at(Purpose::Cftp, m - 1, 2 * n as u64);
            for u in uniforms.iter_mut() {
                *u = T::of(rng.gen::<f64>());
            }
            kernel.sweep_with(&mut lower, &uniforms);
            kernel.sweep_with(&mut upper, &uniforms);
            debug_assert!(lower.iter().zip(&upper).all(|(l, u)| l <= u));
        }
        if lower == upper {
            return Ok(CftpDraw { state: lower, epoch });
        }
        epoch *= 2;
    }
}

/// Exact draw of slice `t` given `z_prev`, using the stream of that slice.
pub fn cftp_slice_sample<T: Scalar>(
    z_prev: &[u8],
    x: &CovariateSeries<T>,
    t: usize,
    params: &ModelParams<T>,
    graph: &NeighborGraph,
    stream: &RngStream,
    config: &SamplerConfig,
) -> Result<Vec<u8>> {
    if params.rho1 < T::zero() {
        return Err(Error::NonMonotone { rho1: params.rho1.as_f64() });
    }
    let kernel = SliceKernel::for_slice(params, graph, x, t, z_prev)?;
    Ok(cftp_with_kernel(&kernel, params.rho1, stream, config.cftp_start, config.cftp_max_sweeps)?.state)
}

/// Draws slice `t` given `z_prev` according to `config.mode`.
///
/// `stream` must already be positioned at `(replicate, t)`.
pub fn sample_next_slice<T: Scalar>(
    z_prev: &[u8],
    x: &CovariateSeries<T>,
    t: usize,
    params: &ModelParams<T>,
    graph: &NeighborGraph,
    config: &SamplerConfig,
    stream: &RngStream,
) -> Result<Vec<u8>> {
    let kernel = SliceKernel::for_slice(params, graph, x, t, z_prev)?;
    sample_with_kernel(&kernel, z_prev, params.rho1, config, stream)
}

/// Draws one slice from a prepared kernel according to `config.mode`.
pub fn sample_with_kernel<T: Scalar>(
    kernel: &SliceKernel<'_, T>,
    z_prev: &[u8],
    rho1: T,
    config: &SamplerConfig,
    stream: &RngStream,
) -> Result<Vec<u8>> {
    let sweeps = |mut state: Vec<u8>| {
        let mut rng = stream.rng(Purpose::Gibbs);
        for _ in 0..config.gibbs_sweeps {
            kernel.sweep(&mut state, &mut rng);
        }
        state
    };
    match config.mode {
        SamplerMode::PerfectCftp => Ok(cftp_with_kernel(kernel, rho1, stream, config.cftp_start, config.cftp_max_sweeps)?.state),
        SamplerMode::Pgs => {
            let exact = cftp_with_kernel(kernel, rho1, stream, config.cftp_start, config.cftp_max_sweeps)?;
            Ok(sweeps(exact.state))
        }
        SamplerMode::PlainGibbs => Ok(sweeps(z_prev.to_vec())),
    }
}

/// I.i.d. Bernoulli(`p0`) slice.
pub fn init_bernoulli(shape: &GridShape, p0: f64, rng: &mut ChaCha8Rng) -> Result<Vec<u8>> {
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::InvalidParameter(format!("Bernoulli probability {p0} not in [0,1]")));
    }
    Ok((0..shape.n_sites()).map(|_| (rng.gen::<f64>() < p0) as u8).collect())
}

/// Initial slice of replicate `stream` under `config.initial`.
pub fn initial_slice(shape: &GridShape, config: &SamplerConfig, stream: &RngStream) -> Result<Vec<u8>> {
    match &config.initial {
        InitialSlice::Bernoulli(p0) => init_bernoulli(shape, *p0, &mut stream.at_time(0).rng(Purpose::Init)),
        InitialSlice::Explicit(z) => {
            if z.len() != shape.n_sites() || z.iter().any(|&v| v > 1) {
                return Err(Error::InvalidParameter(format!(
                    "explicit initial slice must be {} binary values",
                    shape.n_sites()
                )));
            }
            Ok(z.clone())
        }
    }
}

/// Simulates slices `0..=horizon` of one replicate.
///
/// `stream` identifies the replicate; slice `t` draws from `stream.at_time(t)`.
pub fn simulate_trajectory<T: Scalar>(
    horizon: usize,
    x: &CovariateSeries<T>,
    params: &ModelParams<T>,
    graph: &NeighborGraph,
    config: &SamplerConfig,
    stream: &RngStream,
) -> Result<BinaryFieldSeries> {
    config.validate()?;
    params.validate()?;
    let n = graph.n_sites();
    x.check_covers(n, horizon)?;
    let mut series = BinaryFieldSeries::from_initial(initial_slice(graph.shape(), config, stream)?)?;
    for t in 1..=horizon {
        let next = sample_next_slice(series.slice(t - 1), x, t, params, graph, config, &stream.at_time(t))?;
        series.push(next);
    }
    Ok(series)
}

/// Simulates a trajectory whose covariates at `t` are computed from slice
/// `t − 1` (`None` at `t = 0`). `covariates` returns the `n × p` values of
/// one slice, site-major.
pub fn simulate_trajectory_with<T, F>(
    horizon: usize,
    names: Vec<String>,
    params: &ModelParams<T>,
    graph: &NeighborGraph,
    config: &SamplerConfig,
    stream: &RngStream,
    mut covariates: F,
) -> Result<(BinaryFieldSeries, CovariateSeries<T>)>
where
    T: Scalar,
    F: FnMut(usize, Option<&[u8]>) -> Vec<T>,
{
    config.validate()?;
    params.validate()?;
    let n = graph.n_sites();
    let p = names.len();
    if params.n_covariates() != p {
        return Err(Error::Dimension(format!("{p} covariates for {} slopes", params.n_covariates())));
    }
    let mut values = Vec::with_capacity((horizon + 1) * n * p);
    let first = covariates(0, None);
    if first.len() != n * p {
        return Err(Error::Dimension(format!("covariate slice has {} values, expected {}", first.len(), n * p)));
    }
    values.extend(first);
    let mut series = BinaryFieldSeries::from_initial(initial_slice(graph.shape(), config, stream)?)?;
    for t in 1..=horizon {
        let row = covariates(t, Some(series.slice(t - 1)));
        if row.len() != n * p {
            return Err(Error::Dimension(format!("covariate slice has {} values, expected {}", row.len(), n * p)));
        }
        let mut two = vec![T::zero(); n * p];
        two.extend_from_slice(&row);
        values.extend(row);
        let x = CovariateSeries::varying(n, names.clone(), 2, two)?;
        let kernel = SliceKernel::for_slice(params, graph, &x, 1, series.slice(t - 1))?;
        let next = sample_with_kernel(&kernel, series.slice(t - 1), params.rho1, config, &stream.at_time(t))?;
        series.push(next);
    }
    Ok((series, CovariateSeries::varying(n, names, horizon + 1, values)?))
}
