//! Choice of neighborhood structure by maximal pseudo-likelihood.

use std::collections::HashSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{empl_fit, EmplOptions, FitResult};
use crate::io::with_past_neighbor_covariate;
use crate::lattice::{build_neighbor_graph, GridShape, NeighborhoodSpec};
use crate::model::CenteringVariant;
use crate::scalar::Scalar;
use crate::series::{BinaryFieldSeries, CovariateSeries};

/// An instantaneous neighborhood, optionally paired with a past neighborhood
/// whose infected count enters as a covariate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub label: String,
    pub instantaneous: NeighborhoodSpec,
    pub past: Option<NeighborhoodSpec>,
}

impl Candidate {
    pub fn new(instantaneous: NeighborhoodSpec, past: Option<NeighborhoodSpec>) -> Self {
        let label = match &past {
            None => instantaneous.label(),
            Some(p) => format!("{}|past:{}", instantaneous.label(), p.label()),
        };
        Candidate {
            label,
            instantaneous,
            past,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Candidate>", into = "Vec<Candidate>")]
pub struct CandidateSet {
    candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub fn new(candidates: Vec<Candidate>) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        let mut seen = HashSet::new();
        for c in &candidates {
            if !seen.insert(c.label.as_str()) {
                return Err(Error::DuplicateLabel(c.label.clone()));
            }
        }
        Ok(CandidateSet { candidates })
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Candidate> {
        self.candidates.iter()
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }
}

impl TryFrom<Vec<Candidate>> for CandidateSet {
    type Error = Error;

    fn try_from(v: Vec<Candidate>) -> Result<Self> {
        CandidateSet::new(v)
    }
}

impl From<CandidateSet> for Vec<Candidate> {
    fn from(s: CandidateSet) -> Self {
        s.candidates
    }
}

fn push_unique(out: &mut Vec<Candidate>, c: Candidate) {
    if !out.iter().any(|o| o.label == c.label) {
        out.push(c);
    }
}

/// All `Rect(v_r, v_c)`, `v_r` outer; with `triangular` only `v_c ≤ v_r`.
pub fn enumerate_rect_candidates(v_r: &[usize], v_c: &[usize], triangular: bool) -> Result<CandidateSet> {
    let mut out = Vec::new();
    for &r in v_r {
        for &c in v_c {
            if !triangular || c <= r {
                push_unique(&mut out, Candidate::new(NeighborhoodSpec::Rect(r, c), None));
            }
        }
    }
    CandidateSet::new(out)
}

/// Ellipses over `a_r × a_c`, each optionally crossed with past ellipses
/// over `past_r × past_c` (instantaneous outer).
pub fn enumerate_ellipse_candidates(a_r: &[f64], a_c: &[f64], past: Option<(&[f64], &[f64])>) -> Result<CandidateSet> {
    let mut out = Vec::new();
    for &r in a_r {
        for &c in a_c {
            let inst = NeighborhoodSpec::Ellipse(r, c);
            match past {
                None => push_unique(&mut out, Candidate::new(inst, None)),
                Some((pr, pc)) => {
                    for &p in pr {
                        for &q in pc {
                            push_unique(&mut out, Candidate::new(inst, Some(NeighborhoodSpec::Ellipse(p, q))));
                        }
                    }
                }
            }
        }
    }
    CandidateSet::new(out)
}

/// Fit of one candidate.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CandidateFit<T> {
    pub candidate: Candidate,
    /// Edges of the instantaneous plus the past graph.
    pub edges: usize,
    pub fit: Option<FitResult<T>>,
    pub error: Option<String>,
}

impl<T: Scalar> CandidateFit<T> {
    pub fn log_pl(&self) -> Option<T> {
        self.fit.as_ref().map(|f| f.pl_value)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SelectionReport<T> {
    pub variant: CenteringVariant,
    /// In candidate order.
    pub fits: Vec<CandidateFit<T>>,
    /// Indices into `fits` of successful candidates, best first.
    pub ranking: Vec<usize>,
    pub winner: Option<String>,
}

impl<T: Scalar> SelectionReport<T> {
    pub fn winner_fit(&self) -> Option<&CandidateFit<T>> {
        self.ranking.first().map(|&i| &self.fits[i])
    }

    /// 1-based rank of `label` among successful fits.
    pub fn rank_of(&self, label: &str) -> Option<usize> {
        self.ranking
            .iter()
            .position(|&i| self.fits[i].candidate.label == label)
            .map(|r| r + 1)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CandidateFit<T>> {
        self.fits.iter().filter(|f| f.fit.is_none())
    }

    /// One row per candidate: label, extents, edges, log-PL, rank, then
    /// estimates and standard errors for every parameter name seen.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut names: Vec<String> = Vec::new();
        for f in self.fits.iter().filter_map(|f| f.fit.as_ref()) {
            for n in &f.names {
                if !names.contains(n) {
                    names.push(n.clone());
                }
            }
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = ["label", "v_r", "v_c", "p_r", "p_c", "edges", "log_pl", "rank"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend(names.iter().cloned());
        header.extend(names.iter().map(|n| format!("sd_{n}")));
        header.push("error".into());
        w.write_record(&header)?;
        for (idx, cf) in self.fits.iter().enumerate() {
            let (vr, vc) = cf.candidate.instantaneous.extents();
            let (pr, pc) = cf
                .candidate
                .past
                .map_or((String::new(), String::new()), |p| {
                    let (a, b) = p.extents();
                    (a.to_string(), b.to_string())
                });
            let mut rec = vec![
                cf.candidate.label.clone(),
                vr.to_string(),
                vc.to_string(),
                pr,
                pc,
                cf.edges.to_string(),
                cf.log_pl().map_or(String::new(), |v| v.as_f64().to_string()),
                self.ranking
                    .iter()
                    .position(|&i| i == idx)
                    .map_or(String::new(), |r| (r + 1).to_string()),
            ];
            let lookup = |vals: &dyn Fn(&FitResult<T>) -> Vec<T>| -> Vec<String> {
                names
                    .iter()
                    .map(|n| match &cf.fit {
                        Some(f) => f
                            .names
                            .iter()
                            .position(|m| m == n)
                            .map_or(String::new(), |k| vals(f)[k].as_f64().to_string()),
                        None => String::new(),
                    })
                    .collect()
            };
            rec.extend(lookup(&|f| f.estimates()));
            rec.extend(lookup(&|f| f.std_errors.clone()));
            rec.push(cf.error.clone().unwrap_or_default());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn fit_candidate<T: Scalar>(
    z: &BinaryFieldSeries,
    x: &CovariateSeries<T>,
    shape: GridShape,
    c: &Candidate,
    variant: CenteringVariant,
    opts: &EmplOptions,
) -> CandidateFit<T> {
    let graph = build_neighbor_graph(shape, c.instantaneous);
    let mut edges = graph.edge_count();
    let result = (|| {
        let x = match c.past {
            Some(p) => {
                let pg = build_neighbor_graph(shape, p);
                edges += pg.edge_count();
                with_past_neighbor_covariate(x, z, &pg)?
            }
            None => x.clone(),
        };
        empl_fit(z, &x, &graph, variant, opts)
    })();
    let (fit, error) = match result {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    CandidateFit {
        candidate: c.clone(),
        edges,
        fit,
        error,
    }
}

/// Fits every candidate (in parallel) and ranks them by log-PL, breaking
/// ties by fewer edges and then by label.
pub fn select_by_pl<T: Scalar>(
    z: &BinaryFieldSeries,
    x: &CovariateSeries<T>,
    shape: GridShape,
    candidates: &CandidateSet,
    variant: CenteringVariant,
    opts: &EmplOptions,
) -> Result<SelectionReport<T>> {
    shape.validate()?;
    if shape.n_sites() != z.n_sites() {
        return Err(Error::Dimension(format!(
            "grid has {} sites, field has {}",
            shape.n_sites(),
            z.n_sites()
        )));
    }
    let fits: Vec<CandidateFit<T>> = candidates
        .candidates()
        .par_iter()
        .map(|c| fit_candidate(z, x, shape, c, variant, opts))
        .collect();
    let mut ranking: Vec<usize> = (0..fits.len()).filter(|&i| fits[i].fit.is_some()).collect();
    ranking.sort_by(|&a, &b| {
        let (fa, fb) = (&fits[a], &fits[b]);
        let pa = fa.log_pl().unwrap().as_f64();
        let pb = fb.log_pl().unwrap().as_f64();
        pb.total_cmp(&pa)
            .then(fa.edges.cmp(&fb.edges))
            .then_with(|| fa.candidate.label.cmp(&fb.candidate.label))
    });
    let winner = ranking.first().map(|&i| fits[i].candidate.label.clone());
    Ok(SelectionReport {
        variant,
        fits,
        ranking,
        winner,
    })
}

/// Estimates of every candidate side by side, in candidate order; failed
/// candidates carry their error.
pub fn misspecification_profile<T: Scalar>(
    z: &BinaryFieldSeries,
    x: &CovariateSeries<T>,
    shape: GridShape,
    candidates: &CandidateSet,
    variant: CenteringVariant,
    opts: &EmplOptions,
) -> Result<Vec<CandidateFit<T>>> {
    Ok(select_by_pl(z, x, shape, candidates, variant, opts)?.fits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangular_rect_grid_matches_reference_models() {
        let s = enumerate_rect_candidates(&[1, 2, 3], &[1, 2, 3], true).unwrap();
        let labels: Vec<&str> = s.iter().map(|c| c.label.as_str()).collect();
        assert_eq!(
            labels,
            ["rect(1,1)", "rect(2,1)", "rect(2,2)", "rect(3,1)", "rect(3,2)", "rect(3,3)"]
        );
        assert_eq!(enumerate_rect_candidates(&[2], &[1], false).unwrap().len(), 1);
        assert_eq!(enumerate_rect_candidates(&[2, 2], &[1, 1], false).unwrap().len(), 1);
    }

    #[test]
    fn ellipse_grid_sizes() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(enumerate_ellipse_candidates(&a, &a, Some((&a, &a))).unwrap().len(), 625);
        assert_eq!(enumerate_ellipse_candidates(&a, &a, None).unwrap().len(), 25);
    }

    #[test]
    fn candidate_set_invariants() {
        assert!(matches!(CandidateSet::new(vec![]), Err(Error::EmptyCandidates)));
        let c = Candidate::new(NeighborhoodSpec::Rect(1, 1), None);
        assert!(matches!(
            CandidateSet::new(vec![c.clone(), c]),
            Err(Error::DuplicateLabel(_))
        ));
    }
}
