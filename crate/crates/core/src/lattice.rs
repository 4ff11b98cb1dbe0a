//! Lattice geometry and neighborhood graphs.
//!
//! Sites are indexed row-major: site `r * cols + c` sits at row `r`,
//! column `c`. Neighborhoods are regular (the same rule at every site) and
//! truncated at the border; there is no wraparound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rectangular lattice with physical spacing between adjacent rows and
/// adjacent columns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridShape {
    pub rows: usize,
    pub cols: usize,
    /// Distance between two adjacent rows.
    #[serde(default = "unit_spacing")]
    pub row_spacing: f64,
    /// Distance between two adjacent sites of the same row.
    #[serde(default = "unit_spacing")]
    pub col_spacing: f64,
}

fn unit_spacing() -> f64 {
    1.0
}

impl GridShape {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        Self::with_spacing(rows, cols, 1.0, 1.0)
    }

    pub fn with_spacing(rows: usize, cols: usize, row_spacing: f64, col_spacing: f64) -> Result<Self> {
        let shape = GridShape {
            rows,
            cols,
            row_spacing,
            col_spacing,
        };
        shape.validate()?;
        Ok(shape)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidGrid(format!(
                "{}x{} lattice has no sites",
                self.rows, self.cols
            )));
        }
        if !(self.row_spacing > 0.0 && self.col_spacing > 0.0)
            || !self.row_spacing.is_finite()
            || !self.col_spacing.is_finite()
        {
            return Err(Error::InvalidGrid(format!(
                "spacings must be positive and finite (row {}, col {})",
                self.row_spacing, self.col_spacing
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn n_sites(&self) -> usize {
        self.rows * self.cols
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    #[inline]
    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site / self.cols, site % self.cols)
    }
}

/// Neighborhood rule applied identically at every site.
///
/// In configuration files this reads `{"rect": [v_r, v_c]}` or
/// `{"ellipse": [a_r, a_c]}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeighborhoodSpec {
    /// `v_r` neighbors on each side within the same row and `v_c` on each
    /// side within the same column. Never includes diagonals.
    Rect(usize, usize),
    /// All sites inside the ellipse with semi-axis `a_r` along the row and
    /// `a_c` along the column, in the units of the grid spacing.
    Ellipse(f64, f64),
}

impl NeighborhoodSpec {
    /// Short stable label, e.g. `rect(2,1)` or `ellipse(5,4)`.
    pub fn label(&self) -> String {
        match *self {
            NeighborhoodSpec::Rect(vr, vc) => format!("rect({vr},{vc})"),
            NeighborhoodSpec::Ellipse(ar, ac) => format!("ellipse({ar},{ac})"),
        }
    }

    /// Axis extents `(along row, along column)` as reported in tables.
    pub fn extents(&self) -> (f64, f64) {
        match *self {
            NeighborhoodSpec::Rect(vr, vc) => (vr as f64, vc as f64),
            NeighborhoodSpec::Ellipse(ar, ac) => (ar, ac),
        }
    }

    /// Relative offsets `(d_row, d_col)` admitted by the rule, row-major.
    fn offsets(&self, shape: &GridShape) -> Vec<(isize, isize)> {
        let mut out = Vec::new();
        match *self {
            NeighborhoodSpec::Rect(vr, vc) => {
                let (vr, vc) = (vr as isize, vc as isize);
                for dr in -vc..=vc {
                    for dc in -vr..=vr {
                        if (dr == 0) != (dc == 0) {
                            out.push((dr, dc));
                        }
                    }
                }
            }
            NeighborhoodSpec::Ellipse(ar, ac) => {
                if !(ar > 0.0 && ac > 0.0) {
                    return out;
                }
                let max_dc = (ar / shape.col_spacing + 1e-9).floor() as isize;
                let max_dr = (ac / shape.row_spacing + 1e-9).floor() as isize;
                for dr in -max_dr..=max_dr {
                    for dc in -max_dc..=max_dc {
                        if dr == 0 && dc == 0 {
                            continue;
                        }
                        let u = dc as f64 * shape.col_spacing / ar;
                        let v = dr as f64 * shape.row_spacing / ac;
                        if u * u + v * v <= 1.0 + 1e-12 {
                            out.push((dr, dc));
                        }
                    }
                }
            }
        }
        out
    }
}

/// Symmetric adjacency of a lattice, stored in compressed rows with each
/// site's neighbors sorted by index.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborGraph {
    shape: GridShape,
    spec: NeighborhoodSpec,
    offsets: Vec<usize>,
    indices: Vec<usize>,
}

/// Builds the neighbor graph of `spec` on `shape`, truncating at the border.
pub fn build_neighbor_graph(shape: GridShape, spec: NeighborhoodSpec) -> NeighborGraph {
    let rel = spec.offsets(&shape);
    let n = shape.n_sites();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut indices = Vec::with_capacity(n * rel.len());
    offsets.push(0);
    for site in 0..n {
        let (r, c) = shape.coords(site);
        // `rel` is already row-major, so the pushed indices are increasing.
        for &(dr, dc) in &rel {
            let rr = r as isize + dr;
            let cc = c as isize + dc;
            if rr >= 0 && cc >= 0 && (rr as usize) < shape.rows && (cc as usize) < shape.cols {
                indices.push(shape.index(rr as usize, cc as usize));
            }
        }
        offsets.push(indices.len());
    }
    NeighborGraph {
        shape,
        spec,
        offsets,
        indices,
    }
}

impl NeighborGraph {
    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn spec(&self) -> &NeighborhoodSpec {
        &self.spec
    }

    #[inline]
    pub fn n_sites(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn neighbors(&self, site: usize) -> &[usize] {
        &self.indices[self.offsets[site]..self.offsets[site + 1]]
    }

    #[inline]
    pub fn degree(&self, site: usize) -> usize {
        self.offsets[site + 1] - self.offsets[site]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n_sites()).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.indices.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Undirected edges `(i, j)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_sites()).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .filter(move |&&j| j > i)
                .map(move |&j| (i, j))
        })
    }

    /// Number of neighbors of `site` whose value is 1; no bounds checks.
    #[inline]
    pub(crate) fn count_ones(&self, slice: &[u8], site: usize) -> u32 {
        self.neighbors(site).iter().map(|&j| slice[j] as u32).sum()
    }
}

/// Number of neighbors of `site` that are in state 1.
pub fn neighbor_sum(slice: &[u8], graph: &NeighborGraph, site: usize) -> Result<usize> {
    let n = graph.n_sites();
    if slice.len() != n {
        return Err(Error::Dimension(format!(
            "slice has {} entries, lattice has {n} sites",
            slice.len()
        )));
    }
    if site >= n {
        return Err(Error::SiteOutOfRange { site, n });
    }
    Ok(graph.count_ones(slice, site) as usize)
}
