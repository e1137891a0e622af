mod common;
mod oracles;

use arrhythmia_risk::selection::{
    draw_probe, gram_schmidt_rank, probe_rank, probe_risk, SelectionConfig,
};
use common::selection_instance;
use oracles::{gs_rank_oracle, probe_rank_oracle};
use proptest::prelude::*;

fn names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("f{j}")).collect()
}

#[test]
fn ranking_matches_reprojection_oracle() {
    for seed in 0..100 {
        let (cols, y) = selection_instance(seed);
        let got = gram_schmidt_rank(&cols, &names(cols.len()), &y).unwrap();
        let want = gs_rank_oracle(&cols, &y, 1e-10);
        assert_eq!(got.len(), want.len(), "seed {seed}");
        for (g, (j, rel)) in got.iter().zip(&want) {
            assert_eq!(g.name, format!("f{j}"), "seed {seed}");
            assert!(
                (g.relevance - rel).abs() <= 1e-10,
                "seed {seed}: {} vs {rel}",
                g.relevance
            );
        }
    }
}

#[test]
fn duplicated_column_is_dropped_like_the_oracle() {
    let (mut cols, y) = selection_instance(7);
    let copy: Vec<f64> = cols[0].iter().map(|v| 2.0 * v).collect();
    cols.push(copy);
    let got = gram_schmidt_rank(&cols, &names(cols.len()), &y).unwrap();
    let want = gs_rank_oracle(&cols, &y, 1e-10);
    let got_idx: Vec<String> = got.iter().map(|f| f.name.clone()).collect();
    let want_idx: Vec<String> = want.iter().map(|(j, _)| format!("f{j}")).collect();
    assert_eq!(got_idx, want_idx);
    assert!(got.len() < cols.len());
}

#[test]
fn probe_rank_matches_oracle() {
    for seed in 0..50 {
        let (cols, y) = selection_instance(seed + 1000);
        let probe = draw_probe(y.len(), seed);
        assert_eq!(
            probe_rank(&cols, &y, &probe).unwrap(),
            probe_rank_oracle(&cols, &y, &probe),
            "seed {seed}"
        );
    }
}

#[test]
fn risk_curve_is_a_nondecreasing_fraction() {
    for seed in 0..5 {
        let (cols, y) = selection_instance(seed + 2000);
        let cfg = SelectionConfig {
            n_probe_realizations: 200,
            seed,
            ..SelectionConfig::default()
        };
        let rho = probe_risk(&cols, &y, &cfg).unwrap().rho;
        assert_eq!(rho.len(), cols.len());
        assert!(rho.windows(2).all(|w| w[0] <= w[1]), "{rho:?}");
        assert!(rho.iter().all(|r| (0.0..=1.0).contains(r)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ranking_ignores_positive_column_scaling(seed in 0u64..10_000, scale in 0.01f64..100.0) {
        let (cols, y) = selection_instance(seed);
        let scaled: Vec<Vec<f64>> = cols.iter().map(|c| c.iter().map(|v| v * scale).collect()).collect();
        let a = gram_schmidt_rank(&cols, &names(cols.len()), &y).unwrap();
        let b = gram_schmidt_rank(&scaled, &names(cols.len()), &y).unwrap();
        let order = |r: &[arrhythmia_risk::selection::RankedFeature]| r.iter().map(|f| f.name.clone()).collect::<Vec<_>>();
        prop_assert_eq!(order(&a), order(&b));
    }

    #[test]
    fn relevances_are_squared_cosines(seed in 0u64..10_000) {
        let (cols, y) = selection_instance(seed);
        for f in gram_schmidt_rank(&cols, &names(cols.len()), &y).unwrap() {
            prop_assert!((0.0..=1.0).contains(&f.relevance));
        }
    }
}
