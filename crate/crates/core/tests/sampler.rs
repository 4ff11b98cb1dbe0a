mod common;

use autologistic::model::{brute_force_joint, slice_fields, state_to_mask};
use autologistic::sampler::{cftp_slice_sample, cftp_with_kernel, sample_next_slice, SliceKernel};
use autologistic::*;
use proptest::prelude::*;

fn law_2x2(params: &ModelParams<f64>, prev: &[u8]) -> (NeighborGraph, CovariateSeries<f64>, Vec<f64>) {
    let g = build_neighbor_graph(GridShape::new(2, 2).unwrap(), NeighborhoodSpec::Rect(1, 1));
    let x = CovariateSeries::empty(4, 1);
    let law = brute_force_joint(prev, &x, 1, params, &g).unwrap().probs().to_vec();
    (g, x, law)
}

fn histogram<F: FnMut(usize) -> Vec<u8>>(draws: usize, n: usize, mut draw: F) -> Vec<usize> {
    let mut counts = vec![0usize; 1 << n];
    for k in 0..draws {
        counts[state_to_mask(&draw(k))] += 1;
    }
    counts
}

#[test]
fn cftp_reproduces_the_slice_law() {
    let p = ModelParams::new(vec![-0.4], 0.9, 0.6, CenteringVariant::NewCentered).unwrap();
    let prev = [1, 0, 0, 1];
    let (g, x, law) = law_2x2(&p, &prev);
    let cfg = SamplerConfig::default();
    let root = RngStream::new(2024);
    let counts = histogram(20_000, 4, |k| cftp_slice_sample(&prev, &x, 1, &p, &g, &root.replicate(k), &cfg).unwrap());
    let tv = common::tv_distance(&counts, &law);
    assert!(tv < 0.02, "tv {tv}");
}

#[test]
fn pgs_and_gibbs_preserve_the_law() {
    let p = ModelParams::new(vec![-0.2], 0.7, 0.3, CenteringVariant::Traditional).unwrap();
    let prev = [0, 1, 1, 0];
    let (g, x, law) = law_2x2(&p, &prev);
    let root = RngStream::new(8);
    for mode in [SamplerMode::Pgs, SamplerMode::PlainGibbs] {
        let cfg = SamplerConfig {
            mode,
            gibbs_sweeps: 20,
            ..Default::default()
        };
        let counts = histogram(20_000, 4, |k| sample_next_slice(&prev, &x, 1, &p, &g, &cfg, &root.replicate(k)).unwrap());
        let tv = common::tv_distance(&counts, &law);
        assert!(tv < 0.02, "{mode:?} tv {tv}");
    }
}

#[test]
fn independent_sites_when_uncoupled() {
    let shape = GridShape::new(10, 10).unwrap();
    let g = build_neighbor_graph(shape, NeighborhoodSpec::Rect(1, 1));
    let x = CovariateSeries::empty(100, 1);
    let p = ModelParams::new(vec![0.8], 0.0, 0.0, CenteringVariant::NewCentered).unwrap();
    let root = RngStream::new(5);
    let ones: usize = (0..200)
        .map(|k| {
            cftp_slice_sample(&[0; 100], &x, 1, &p, &g, &root.replicate(k), &SamplerConfig::default())
                .unwrap()
                .iter()
                .map(|&v| v as usize)
                .sum::<usize>()
        })
        .sum();
    let freq = ones as f64 / 20_000.0;
    let expect = common::sigmoid(0.8);
    // binomial sd is about 0.0033
    assert!((freq - expect).abs() < 0.015, "{freq} vs {expect}");
}

#[test]
fn epochs_double_from_start() {
    let shape = GridShape::new(6, 6).unwrap();
    let g = build_neighbor_graph(shape, NeighborhoodSpec::Rect(1, 1));
    let x = CovariateSeries::empty(36, 1);
    let p = ModelParams::new(vec![-1.0], 0.8, 0.0, CenteringVariant::Traditional).unwrap();
    let fields = slice_fields(&p, &g, &x, 1, &[0; 36]).unwrap();
    let k = SliceKernel::new(&fields, p.rho1, &g);
    for r in 0..20 {
        let d = cftp_with_kernel(&k, p.rho1, &RngStream::new(1).replicate(r), 3, 1 << 20).unwrap();
        assert!(d.epoch % 3 == 0 && (d.epoch / 3).is_power_of_two(), "{}", d.epoch);
        // a longer first epoch reuses the same uniforms and finds the same state
        let again = cftp_with_kernel(&k, p.rho1, &RngStream::new(1).replicate(r), d.epoch * 4, 1 << 20).unwrap();
        assert_eq!(again.state, d.state);
    }
}

#[test]
fn trajectories_are_reproducible_and_distinct() {
    let shape = GridShape::new(8, 8).unwrap();
    let g = build_neighbor_graph(shape, NeighborhoodSpec::Rect(2, 1));
    let x = CovariateSeries::empty(64, 6);
    let p = ModelParams::new(vec![-1.0], 0.5, 0.5, CenteringVariant::NewCentered).unwrap();
    let cfg = SamplerConfig::default();
    let a = simulate_trajectory(6, &x, &p, &g, &cfg, &RngStream::new(3).replicate(0)).unwrap();
    let b = simulate_trajectory(6, &x, &p, &g, &cfg, &RngStream::new(3).replicate(0)).unwrap();
    let c = simulate_trajectory(6, &x, &p, &g, &cfg, &RngStream::new(3).replicate(1)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.horizon(), 6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sweeps_preserve_order(
        fields in proptest::collection::vec(-3.0f64..3.0, 16),
        rho1 in 0.0f64..2.0,
        low in proptest::collection::vec(0u8..2, 16),
        extra in proptest::collection::vec(0u8..2, 16),
        uniforms in proptest::collection::vec(0.0f64..1.0, 16),
    ) {
        let g = build_neighbor_graph(GridShape::new(4, 4).unwrap(), NeighborhoodSpec::Rect(1, 1));
        let k = SliceKernel::new(&fields, rho1, &g);
        let mut a = low.clone();
        let mut b: Vec<u8> = low.iter().zip(&extra).map(|(&l, &e)| l | e).collect();
        k.sweep_with(&mut a, &uniforms);
        k.sweep_with(&mut b, &uniforms);
        prop_assert!(a.iter().zip(&b).all(|(x, y)| x <= y));
    }
}
