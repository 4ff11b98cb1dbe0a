//! Dataset files, derived covariates and the synthetic vineyard generator.

mod dataset;
mod surrogate;

pub use dataset::{load_dataset, load_dataset_dir, save_dataset, Dataset, Metadata};
pub use surrogate::{generate_surrogate_vineyard, SurrogateConfig};

use crate::error::Result;
use crate::lattice::NeighborGraph;
use crate::scalar::Scalar;
use crate::series::{BinaryFieldSeries, CovariateSeries};

/// Reserved name of the past-neighborhood count column.
pub const PAST_NEIGHBORS: &str = "past_neighbors";

/// `Σ_{j ∈ N^p_i} z_prev[j]` for every site.
pub fn past_neighbor_counts<T: Scalar>(z_prev: &[u8], past_graph: &NeighborGraph) -> Vec<T> {
    (0..past_graph.n_sites())
        .map(|i| T::of(past_graph.count_ones(z_prev, i) as f64))
        .collect()
}

/// Column `[t][site]` with the count of past neighbors at 1 in slice `t − 1`
/// (zero at `t = 0`).
pub fn build_past_neighbor_covariate<T: Scalar>(z: &BinaryFieldSeries, past_graph: &NeighborGraph) -> Vec<T> {
    let n = z.n_sites();
    let mut col = vec![T::zero(); n];
    for t in 1..=z.horizon() {
        col.extend(past_neighbor_counts::<T>(z.slice(t - 1), past_graph));
    }
    col
}

/// `x` with the past-neighborhood count column appended.
pub fn with_past_neighbor_covariate<T: Scalar>(
    x: &CovariateSeries<T>,
    z: &BinaryFieldSeries,
    past_graph: &NeighborGraph,
) -> Result<CovariateSeries<T>> {
    x.with_column(PAST_NEIGHBORS, &build_past_neighbor_covariate(z, past_graph))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_neighbor_graph, GridShape, NeighborhoodSpec};

    #[test]
    fn single_infected_site_lights_rook_neighbors() {
        let shape = GridShape::new(5, 5).unwrap();
        let g = build_neighbor_graph(shape, NeighborhoodSpec::Ellipse(1.0, 1.0));
        let mut s0 = vec![0u8; 25];
        s0[12] = 1;
        let z = BinaryFieldSeries::new(25, vec![s0, vec![0; 25]]).unwrap();
        let col = build_past_neighbor_covariate::<f64>(&z, &g);
        assert!(col[..25].iter().all(|&v| v == 0.0));
        let lit: Vec<usize> = (0..25).filter(|&i| col[25 + i] == 1.0).collect();
        assert_eq!(lit, vec![7, 11, 13, 17]);
        assert_eq!(col[25..].iter().sum::<f64>(), 4.0);
    }

    #[test]
    fn appended_column_is_named() {
        let shape = GridShape::new(2, 2).unwrap();
        let g = build_neighbor_graph(shape, NeighborhoodSpec::Rect(1, 1));
        let z = BinaryFieldSeries::new(4, vec![vec![1, 1, 0, 0], vec![0; 4]]).unwrap();
        let x = with_past_neighbor_covariate(&CovariateSeries::<f64>::empty(4, 1), &z, &g).unwrap();
        assert_eq!(x.names(), &[PAST_NEIGHBORS.to_string()]);
        assert_eq!(x.x(2, 1), &[1.0]);
        assert_eq!(x.x(0, 1), &[1.0]);
        assert_eq!(x.x(3, 0), &[0.0]);
    }
}
