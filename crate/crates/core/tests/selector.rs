mod common;

use autologistic::io::PAST_NEIGHBORS;
use autologistic::presets::Scenario;
use autologistic::selector::*;
use autologistic::*;

fn data(seed: u64) -> (BinaryFieldSeries, CovariateSeries<f64>, GridShape) {
    let sc = Scenario::selection(0.5);
    let (z, x, _) = common::simulate(&sc, CenteringVariant::NewCentered, &RngStream::new(seed));
    (z, x, sc.shape)
}

fn log_pls(r: &SelectionReport<f64>) -> Vec<Option<f64>> {
    r.fits.iter().map(|f| f.log_pl()).collect()
}

#[test]
fn single_candidate_wins() {
    let (z, x, shape) = data(1);
    let set = CandidateSet::new(vec![Candidate::new(NeighborhoodSpec::Rect(1, 1), None)]).unwrap();
    let r = select_by_pl(&z, &x, shape, &set, CenteringVariant::NewCentered, &EmplOptions::default()).unwrap();
    assert_eq!(r.winner.as_deref(), Some("rect(1,1)"));
    assert_eq!(r.rank_of("rect(1,1)"), Some(1));
    assert_eq!(r.winner_fit().unwrap().edges, build_neighbor_graph(shape, NeighborhoodSpec::Rect(1, 1)).edge_count());
}

#[test]
fn true_neighborhood_wins_and_ranking_is_sorted() {
    let (z, x, shape) = data(2);
    let set = enumerate_rect_candidates(&[1, 2, 3], &[1, 2, 3], true).unwrap();
    let r = select_by_pl(&z, &x, shape, &set, CenteringVariant::NewCentered, &EmplOptions::default()).unwrap();
    assert_eq!(r.winner.as_deref(), Some("rect(2,1)"));
    assert_eq!(r.ranking.len(), 6);
    let pls: Vec<f64> = r.ranking.iter().map(|&i| r.fits[i].log_pl().unwrap()).collect();
    assert!(pls.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn relabeling_and_reordering_do_not_change_the_choice() {
    let (z, x, shape) = data(3);
    let specs = [NeighborhoodSpec::Rect(1, 1), NeighborhoodSpec::Rect(2, 1), NeighborhoodSpec::Rect(2, 2)];
    let a = CandidateSet::new(specs.iter().map(|&s| Candidate::new(s, None)).collect()).unwrap();
    let b = CandidateSet::new(
        specs
            .iter()
            .rev()
            .enumerate()
            .map(|(k, &s)| Candidate::new(s, None).with_label(format!("m{k}")))
            .collect(),
    )
    .unwrap();
    let opts = EmplOptions::default();
    let ra = select_by_pl(&z, &x, shape, &a, CenteringVariant::NewCentered, &opts).unwrap();
    let rb = select_by_pl(&z, &x, shape, &b, CenteringVariant::NewCentered, &opts).unwrap();
    let wa = ra.winner_fit().unwrap();
    let wb = rb.winner_fit().unwrap();
    assert_eq!(wa.candidate.instantaneous, wb.candidate.instantaneous);
    assert_eq!(wa.log_pl(), wb.log_pl());
    let mut pa = log_pls(&ra);
    pa.reverse();
    assert_eq!(pa, log_pls(&rb));
}

#[test]
fn selection_is_deterministic() {
    let (z, x, shape) = data(4);
    let set = enumerate_rect_candidates(&[1, 2], &[1, 2], false).unwrap();
    let opts = EmplOptions::default();
    let a = select_by_pl(&z, &x, shape, &set, CenteringVariant::OneStep, &opts).unwrap();
    let b = select_by_pl(&z, &x, shape, &set, CenteringVariant::OneStep, &opts).unwrap();
    assert_eq!(a.ranking, b.ranking);
    assert_eq!(log_pls(&a), log_pls(&b));
}

#[test]
fn ties_break_by_label() {
    let (z, x, shape) = data(5);
    let set = CandidateSet::new(vec![
        Candidate::new(NeighborhoodSpec::Rect(1, 1), None).with_label("b"),
        Candidate::new(NeighborhoodSpec::Rect(1, 1), None).with_label("a"),
    ])
    .unwrap();
    let r = select_by_pl(&z, &x, shape, &set, CenteringVariant::NewCentered, &EmplOptions::default()).unwrap();
    assert_eq!(r.winner.as_deref(), Some("a"));
}

#[test]
fn failed_candidates_are_reported_not_ranked() {
    let (z, x, shape) = data(6);
    let set = CandidateSet::new(vec![
        Candidate::new(NeighborhoodSpec::Rect(0, 0), None),
        Candidate::new(NeighborhoodSpec::Rect(2, 1), None),
    ])
    .unwrap();
    let r = select_by_pl(&z, &x, shape, &set, CenteringVariant::NewCentered, &EmplOptions::default()).unwrap();
    assert_eq!(r.winner.as_deref(), Some("rect(2,1)"));
    let failed: Vec<_> = r.failures().collect();
    assert_eq!(failed.len(), 1);
    assert!(failed[0].error.as_ref().unwrap().contains("rho1"));
    assert_eq!(r.rank_of("rect(0,0)"), None);

    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("label,v_r,v_c,p_r,p_c,edges,log_pl,rank,intercept,rho1,rho2,sd_intercept"));
    assert!(lines[0].ends_with(",error"));
    assert!(lines[1].starts_with("\"rect(0,0)\",0,0,,,0,,,"));
    assert!(lines[2].starts_with("\"rect(2,1)\",2,1,,,"));
}

#[test]
fn past_neighborhood_adds_a_covariate() {
    let (z, x, shape) = data(7);
    let set = enumerate_ellipse_candidates(&[1.0], &[1.0], Some((&[1.0], &[1.0]))).unwrap();
    assert_eq!(set.candidates()[0].label, "ellipse(1,1)|past:ellipse(1,1)");
    let r = select_by_pl(&z, &x, shape, &set, CenteringVariant::NewCentered, &EmplOptions::default()).unwrap();
    let f = r.winner_fit().unwrap();
    let fit = f.fit.as_ref().unwrap();
    assert_eq!(fit.names, ["intercept", PAST_NEIGHBORS, "rho1", "rho2"]);
    let g = build_neighbor_graph(shape, NeighborhoodSpec::Ellipse(1.0, 1.0));
    assert_eq!(f.edges, 2 * g.edge_count());
    // data have no past-neighbor effect
    assert!(fit.estimates()[1].abs() < 3.0 * fit.std_errors[1]);
}

#[test]
fn candidate_sets_reject_duplicates_and_empties() {
    assert!(CandidateSet::new(vec![]).is_err());
    let c = Candidate::new(NeighborhoodSpec::Rect(1, 1), None);
    assert!(CandidateSet::new(vec![c.clone(), c]).is_err());
    let json = r#"[{"label":"q","instantaneous":{"rect":[1,2]},"past":null}]"#;
    let set: CandidateSet = serde_json::from_str(json).unwrap();
    assert_eq!(set.candidates()[0].instantaneous, NeighborhoodSpec::Rect(1, 2));
    let dup = r#"[{"label":"q","instantaneous":{"rect":[1,2]}},{"label":"q","instantaneous":{"rect":[1,1]}}]"#;
    assert!(serde_json::from_str::<CandidateSet>(dup).is_err());
}
