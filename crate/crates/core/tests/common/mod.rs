//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use autologistic::presets::Scenario;
use autologistic::*;

pub fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Neighbor test written directly from the rule definitions.
pub fn is_neighbor(shape: &GridShape, spec: &NeighborhoodSpec, a: usize, b: usize) -> bool {
    if a == b {
        return false;
    }
    let (ra, ca) = (a / shape.cols, a % shape.cols);
    let (rb, cb) = (b / shape.cols, b % shape.cols);
    let dr = ra.abs_diff(rb);
    let dc = ca.abs_diff(cb);
    match *spec {
        NeighborhoodSpec::Rect(vr, vc) => (dr == 0 && dc <= vr) || (dc == 0 && dr <= vc),
        NeighborhoodSpec::Ellipse(ar, ac) => {
            let u = dc as f64 * shape.col_spacing / ar;
            let v = dr as f64 * shape.row_spacing / ac;
            u * u + v * v <= 1.0 + 1e-12
        }
    }
}

pub fn naive_neighbors(shape: &GridShape, spec: &NeighborhoodSpec) -> Vec<Vec<usize>> {
    let n = shape.rows * shape.cols;
    (0..n)
        .map(|a| (0..n).filter(|&b| is_neighbor(shape, spec, a, b)).collect())
        .collect()
}

/// Plain-loop parameter bundle.
#[derive(Clone, Debug)]
pub struct Theta {
    pub beta: Vec<f64>,
    pub rho1: f64,
    pub rho2: f64,
    pub variant: CenteringVariant,
}

impl Theta {
    pub fn of(p: &ModelParams<f64>) -> Self {
        Theta {
            beta: p.beta.clone(),
            rho1: p.rho1,
            rho2: p.rho2,
            variant: p.variant,
        }
    }

    fn lin(&self, x: &[f64]) -> f64 {
        self.beta[0] + self.beta[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    pub fn mu(&self, x: &[f64], zp: u8) -> f64 {
        match self.variant {
            CenteringVariant::Traditional => 0.0,
            CenteringVariant::OneStep => sigmoid(self.lin(x)),
            CenteringVariant::NewCentered => sigmoid(self.lin(x) + self.rho2 * zp as f64),
        }
    }

    /// Conditional probability of `Z_it = 1` from the model formula.
    pub fn cond(&self, nb: &[Vec<usize>], x: &CovariateSeries<f64>, cur: &[u8], prev: &[u8], t: usize, i: usize) -> f64 {
        let mut s = 0.0;
        for &j in &nb[i] {
            s += cur[j] as f64 - self.mu(x.x(j, t), prev[j]);
        }
        sigmoid(self.lin(x.x(i, t)) + self.rho1 * s + self.rho2 * prev[i] as f64)
    }
}

/// Log pseudo-likelihood by a double loop over cells.
pub fn naive_pl(th: &Theta, nb: &[Vec<usize>], z: &BinaryFieldSeries, x: &CovariateSeries<f64>) -> f64 {
    let mut total = 0.0;
    for t in 1..=z.horizon() {
        for i in 0..z.n_sites() {
            let p = th.cond(nb, x, z.slice(t), z.slice(t - 1), t, i);
            total += if z.get(i, t) == 1 { p.ln() } else { (1.0 - p).ln() };
        }
    }
    total
}

/// Joint law of one slice by enumeration of the unnormalized
/// `exp(Σ a_i z_i + ρ1 Σ_{edges} z_i z_j)`.
pub fn naive_joint(th: &Theta, nb: &[Vec<usize>], x: &CovariateSeries<f64>, prev: &[u8], t: usize) -> Vec<f64> {
    let n = prev.len();
    let a: Vec<f64> = (0..n)
        .map(|i| {
            let c: f64 = nb[i].iter().map(|&j| th.mu(x.x(j, t), prev[j])).sum();
            th.lin(x.x(i, t)) - th.rho1 * c + th.rho2 * prev[i] as f64
        })
        .collect();
    let mut w: Vec<f64> = (0..1usize << n)
        .map(|m| {
            let on = |i: usize| (m >> i) & 1 == 1;
            let mut e = 0.0;
            for i in 0..n {
                if on(i) {
                    e += a[i];
                    for &j in &nb[i] {
                        if j > i && on(j) {
                            e += th.rho1;
                        }
                    }
                }
            }
            e.exp()
        })
        .collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let k = b.len();
    for c in 0..k {
        let piv = (c..k).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..k {
            let f = a[r][c] / a[c][c];
            for cc in c..k {
                a[r][cc] -= f * a[c][cc];
            }
            b[r] -= f * b[c];
        }
    }
    let mut xs = vec![0.0; k];
    for r in (0..k).rev() {
        let s: f64 = (r + 1..k).map(|c| a[r][c] * xs[c]).sum();
        xs[r] = (b[r] - s) / a[r][r];
    }
    xs
}

pub fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = a.len();
    let cols: Vec<Vec<f64>> = (0..k)
        .map(|c| solve(a.to_vec(), (0..k).map(|r| (r == c) as u8 as f64).collect()))
        .collect();
    (0..k).map(|r| (0..k).map(|c| cols[c][r]).collect()).collect()
}

/// Logistic regression by Newton-Raphson (IRLS). Returns the coefficients
/// and the inverse observed information.
pub fn irls(rows: &[Vec<f64>], y: &[u8]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let k = rows[0].len();
    let mut b = vec![0.0; k];
    for _ in 0..100 {
        let mut g = vec![0.0; k];
        let mut h = vec![vec![0.0; k]; k];
        for (u, &yy) in rows.iter().zip(y) {
            let p = sigmoid(u.iter().zip(&b).map(|(a, c)| a * c).sum());
            for a in 0..k {
                g[a] += (yy as f64 - p) * u[a];
                for c in 0..k {
                    h[a][c] += p * (1.0 - p) * u[a] * u[c];
                }
            }
        }
        let step = solve(h, g);
        b.iter_mut().zip(&step).for_each(|(v, s)| *v += s);
        if step.iter().all(|s| s.abs() < 1e-13) {
            break;
        }
    }
    let mut h = vec![vec![0.0; k]; k];
    for u in rows {
        let p = sigmoid(u.iter().zip(&b).map(|(a, c)| a * c).sum());
        for a in 0..k {
            for c in 0..k {
                h[a][c] += p * (1.0 - p) * u[a] * u[c];
            }
        }
    }
    (b, invert(&h))
}

/// Rows `[1, x, z_prev]` and responses for `t = 1..=T`.
pub fn independence_design(z: &BinaryFieldSeries, x: &CovariateSeries<f64>) -> (Vec<Vec<f64>>, Vec<u8>) {
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for t in 1..=z.horizon() {
        for i in 0..z.n_sites() {
            let mut u = vec![1.0];
            u.extend_from_slice(x.x(i, t));
            u.push(z.get(i, t - 1) as f64);
            rows.push(u);
            y.push(z.get(i, t));
        }
    }
    (rows, y)
}

/// Simulates one replicate of a scenario.
pub fn simulate(sc: &Scenario, variant: CenteringVariant, stream: &RngStream) -> (BinaryFieldSeries, CovariateSeries<f64>, NeighborGraph) {
    let g = build_neighbor_graph(sc.shape, sc.neighborhood);
    let x = sc.covariates::<f64>().unwrap();
    let p = sc.params::<f64>(variant).unwrap();
    let cfg = SamplerConfig {
        initial: InitialSlice::Bernoulli(sc.p0),
        ..Default::default()
    };
    let z = simulate_trajectory(sc.horizon, &x, &p, &g, &cfg, stream).unwrap();
    (z, x, g)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Total-variation distance between an empirical histogram and a law.
pub fn tv_distance(counts: &[usize], law: &[f64]) -> f64 {
    let total: usize = counts.iter().sum();
    0.5 * counts
        .iter()
        .zip(law)
        .map(|(&c, &p)| (c as f64 / total as f64 - p).abs())
        .sum::<f64>()
}
