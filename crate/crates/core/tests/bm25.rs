mod common;

use anchorkit::bm25::{rank_bm25, Bm25Params, QueryMode};
use anchorkit::dataset::{build_dataset, FilterConfig};

use common::*;

#[test]
fn fixture_scores_match_oracle() {
    let corpus = fixture_corpus();
    let ds = build_dataset(&corpus, &FilterConfig::default()).unwrap();
    assert!(check_against_oracle(&corpus, &ds.examples, Bm25Params::default()) > 500);
    let other = Bm25Params { k1: 2.0, b: 0.3 };
    check_against_oracle(&corpus, &ds.examples, other);
}

#[test]
fn permissive_fixture_scores_match_oracle() {
    let corpus = fixture_corpus();
    let ds = build_dataset(&corpus, &permissive()).unwrap();
    check_against_oracle(&corpus, &ds.examples, Bm25Params::default());
}

#[test]
fn zero_overlap_predicts_lead_everywhere() {
    let corpus = disjoint_corpus();
    let ds = build_dataset(&corpus, &permissive()).unwrap();
    assert_eq!(ds.examples.len(), 24);
    for ex in &ds.examples {
        for mode in [QueryMode::Title, QueryMode::Context] {
            let p = rank_bm25(ex, &corpus, mode, 50, Bm25Params::default()).unwrap();
            assert!(p.scores.iter().all(|&s| s == 0.0));
            assert_eq!(p.chosen_index, ex.lead_index());
            assert_eq!(p.chosen_index, 0);
        }
    }
}
