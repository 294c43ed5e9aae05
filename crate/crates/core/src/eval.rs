//! Multi-acceptance accuracy and cross-ranker comparison tables.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Example;
use crate::error::{Error, Result};
use crate::ranking::Prediction;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleOutcome {
    pub example_id: String,
    pub chosen_index: usize,
    pub n_candidates: usize,
    pub correct: bool,
}

/// Accuracy within one slice of examples ordered by candidate count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecileRow {
    pub decile: usize,
    pub min_candidates: usize,
    pub max_candidates: usize,
    pub n_examples: usize,
    pub n_correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub ranker: String,
    pub n_examples: usize,
    pub n_correct: usize,
    pub accuracy: f64,
    /// Sorted by example id.
    pub per_example: Vec<ExampleOutcome>,
    /// Present when there are at least ten examples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deciles: Option<Vec<DecileRow>>,
}

/// Score one prediction per example. A choice is correct when it is in the
/// example's relevant set, which for reader annotations is the union over
/// annotators.
pub fn evaluate(
    predictions: &[Prediction],
    examples: &[Example],
    dataset: &str,
    ranker: &str,
) -> Result<EvalReport> {
    let mut by_id: HashMap<&str, &Prediction> = HashMap::with_capacity(predictions.len());
    let mut duplicate = Vec::new();
    for p in predictions {
        if by_id.insert(p.example_id.as_str(), p).is_some() {
            duplicate.push(p.example_id.clone());
        }
    }
    let known: HashMap<&str, ()> = examples.iter().map(|e| (e.example_id.as_str(), ())).collect();
    let mut missing: Vec<String> = examples
        .iter()
        .filter(|e| !by_id.contains_key(e.example_id.as_str()))
        .map(|e| e.example_id.clone())
        .collect();
    let mut unknown: Vec<String> = predictions
        .iter()
        .filter(|p| !known.contains_key(p.example_id.as_str()))
        .map(|p| p.example_id.clone())
        .collect();
    if !(missing.is_empty() && duplicate.is_empty() && unknown.is_empty()) {
        missing.sort();
        duplicate.sort();
        duplicate.dedup();
        unknown.sort();
        unknown.dedup();
        return Err(Error::Misaligned {
            missing,
            duplicate,
            unknown,
        });
    }
    if examples.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let mut per_example: Vec<ExampleOutcome> = examples
        .par_iter()
        .map(|e| {
            let p = by_id[e.example_id.as_str()];
            ExampleOutcome {
                example_id: e.example_id.clone(),
                chosen_index: p.chosen_index,
                n_candidates: e.candidates.len(),
                correct: e.is_correct(p.chosen_index),
            }
        })
        .collect();
    per_example.sort_by(|a, b| a.example_id.cmp(&b.example_id));

    let n_examples = per_example.len();
    let n_correct = per_example.iter().filter(|o| o.correct).count();
    let deciles = (n_examples >= 10).then(|| decile_breakdown(&per_example));
    Ok(EvalReport {
        dataset: dataset.to_string(),
        ranker: ranker.to_string(),
        n_examples,
        n_correct,
        accuracy: n_correct as f64 / n_examples as f64,
        per_example,
        deciles,
    })
}

/// Ten near-equal slices after sorting by candidate count, then id.
fn decile_breakdown(outcomes: &[ExampleOutcome]) -> Vec<DecileRow> {
    let mut sorted: Vec<&ExampleOutcome> = outcomes.iter().collect();
    sorted.sort_by(|a, b| {
        a.n_candidates
            .cmp(&b.n_candidates)
            .then_with(|| a.example_id.cmp(&b.example_id))
    });
    let n = sorted.len();
    (0..10)
        .map(|d| {
            let slice = &sorted[d * n / 10..(d + 1) * n / 10];
            let n_correct = slice.iter().filter(|o| o.correct).count();
            DecileRow {
                decile: d + 1,
                min_candidates: slice.first().map_or(0, |o| o.n_candidates),
                max_candidates: slice.last().map_or(0, |o| o.n_candidates),
                n_examples: slice.len(),
                n_correct,
                accuracy: if slice.is_empty() {
                    0.0
                } else {
                    n_correct as f64 / slice.len() as f64
                },
            }
        })
        .collect()
}

/// Rankers as rows, datasets as columns, accuracy in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub datasets: Vec<String>,
    pub rankers: Vec<String>,
    /// `cells[r][d]` for ranker `r` and dataset `d`.
    pub cells: Vec<Vec<Option<f64>>>,
}

/// Arrange reports into a table. Rows and columns keep first-seen order.
/// Reports in one column must agree on the example count, and each
/// (ranker, dataset) pair may appear once.
pub fn compare(reports: &[EvalReport]) -> Result<ComparisonTable> {
    if reports.is_empty() {
        return Err(Error::InvalidArgument("no reports to compare".into()));
    }
    let mut datasets: Vec<String> = Vec::new();
    let mut rankers: Vec<String> = Vec::new();
    let mut sizes: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    let mut values: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for r in reports {
        if !datasets.contains(&r.dataset) {
            datasets.push(r.dataset.clone());
        }
        if !rankers.contains(&r.ranker) {
            rankers.push(r.ranker.clone());
        }
        match sizes.get(r.dataset.as_str()) {
            Some(&(n, other)) if n != r.n_examples => {
                return Err(Error::MixedColumn {
                    dataset: r.dataset.clone(),
                    detail: format!(
                        "{other} has {n} examples but {} has {}",
                        r.ranker, r.n_examples
                    ),
                })
            }
            Some(_) => {}
            None => {
                sizes.insert(&r.dataset, (r.n_examples, &r.ranker));
            }
        }
        if values
            .insert((&r.ranker, &r.dataset), r.accuracy * 100.0)
            .is_some()
        {
            return Err(Error::MixedColumn {
                dataset: r.dataset.clone(),
                detail: format!("ranker {} appears twice", r.ranker),
            });
        }
    }
    let cells = rankers
        .iter()
        .map(|rk| {
            datasets
                .iter()
                .map(|ds| values.get(&(rk.as_str(), ds.as_str())).copied())
                .collect()
        })
        .collect();
    Ok(ComparisonTable {
        datasets,
        rankers,
        cells,
    })
}

impl ComparisonTable {
    fn rows(&self, precise: bool) -> Vec<Vec<String>> {
        let mut rows = vec![std::iter::once("ranker".to_string())
            .chain(self.datasets.iter().cloned())
            .collect::<Vec<_>>()];
        for (name, cells) in self.rankers.iter().zip(&self.cells) {
            let mut row = vec![name.clone()];
            row.extend(cells.iter().map(|c| match (c, precise) {
                (None, _) => "-".to_string(),
                (Some(v), false) => format!("{v:.1}"),
                (Some(v), true) => format!("{v}"),
            }));
            rows.push(row);
        }
        rows
    }

    /// Space-aligned text with a rule under the header.
    pub fn render_text(&self) -> String {
        let rows = self.rows(false);
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (i, row) in rows.iter().enumerate() {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, &w))| {
                    if c == 0 {
                        format!("{cell:<w$}")
                    } else {
                        format!("{cell:>w$}")
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
            if i == 0 {
                let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
                let _ = writeln!(out, "{}", "-".repeat(total));
            }
        }
        out
    }

    /// Tab-separated values at full precision.
    pub fn render_tsv(&self) -> String {
        self.rows(true)
            .into_iter()
            .map(|r| r.join("\t") + "\n")
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::synthetic_example;
    use proptest::prelude::*;

    fn pred(id: &str, chosen: usize) -> Prediction {
        Prediction {
            example_id: id.into(),
            chosen_index: chosen,
            scores: vec![],
            fragment_url: None,
        }
    }

    fn report(ranker: &str, dataset: &str, n: usize, correct: usize) -> EvalReport {
        EvalReport {
            dataset: dataset.into(),
            ranker: ranker.into(),
            n_examples: n,
            n_correct: correct,
            accuracy: correct as f64 / n as f64,
            per_example: vec![],
            deciles: None,
        }
    }

    #[test]
    fn two_of_three() {
        let exs = vec![
            synthetic_example("a", 3, &[0]),
            synthetic_example("b", 3, &[1]),
            synthetic_example("c", 3, &[2]),
        ];
        let preds = vec![pred("a", 0), pred("b", 1), pred("c", 0)];
        let r = evaluate(&preds, &exs, "d", "r").unwrap();
        assert_eq!((r.n_examples, r.n_correct), (3, 2));
        assert_eq!(r.accuracy, 2.0 / 3.0);
        assert!(r.deciles.is_none());
    }

    #[test]
    fn any_acceptable_anchor_counts() {
        let exs = vec![synthetic_example("a", 6, &[1, 3, 5])];
        let r = evaluate(&[pred("a", 3)], &exs, "d", "r").unwrap();
        assert_eq!(r.n_correct, 1);
    }

    #[test]
    fn misalignment_lists_ids() {
        let exs = vec![synthetic_example("a", 2, &[0]), synthetic_example("b", 2, &[0])];
        let err = evaluate(&[pred("a", 0), pred("a", 1), pred("z", 0)], &exs, "d", "r").unwrap_err();
        match err {
            Error::Misaligned {
                missing,
                duplicate,
                unknown,
            } => {
                assert_eq!(missing, ["b"]);
                assert_eq!(duplicate, ["a"]);
                assert_eq!(unknown, ["z"]);
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn deciles_cover_everything() {
        let exs: Vec<Example> = (0..25)
            .map(|i| synthetic_example(&format!("e{i:02}"), 2 + i, &[0]))
            .collect();
        let preds: Vec<Prediction> = exs.iter().map(|e| pred(&e.example_id, 0)).collect();
        let r = evaluate(&preds, &exs, "d", "r").unwrap();
        let d = r.deciles.unwrap();
        assert_eq!(d.len(), 10);
        assert_eq!(d.iter().map(|r| r.n_examples).sum::<usize>(), 25);
        assert_eq!(d[0].min_candidates, 2);
        assert_eq!(d[9].max_candidates, 26);
        assert!(d.windows(2).all(|w| w[0].max_candidates <= w[1].min_candidates));
    }

    #[test]
    fn comparison_table() {
        let t = compare(&[report("bm25-title", "dev", 10, 1), report("random", "dev", 10, 2)]).unwrap();
        assert_eq!(t.rankers.len(), 2);
        assert_eq!(
            t.render_text(),
            "ranker       dev\n----------------\nbm25-title  10.0\nrandom      20.0\n"
        );
        assert_eq!(t.render_tsv(), "ranker\tdev\nbm25-title\t10\nrandom\t20\n");
    }

    #[test]
    fn missing_cells_and_errors() {
        let t = compare(&[report("a", "x", 4, 1), report("b", "y", 2, 1)]).unwrap();
        assert_eq!(t.cells, vec![vec![Some(25.0), None], vec![None, Some(50.0)]]);
        assert!(t.render_text().contains('-'));
        assert!(compare(&[]).is_err());
        assert!(matches!(
            compare(&[report("a", "x", 4, 1), report("b", "x", 5, 1)]),
            Err(Error::MixedColumn { .. })
        ));
        assert!(matches!(
            compare(&[report("a", "x", 4, 1), report("a", "x", 4, 2)]),
            Err(Error::MixedColumn { .. })
        ));
    }

    proptest! {
        #[test]
        fn permutation_invariant(
            cands in prop::collection::vec(1usize..12, 1..40),
            picks in prop::collection::vec(0usize..12, 40),
            rot in 0usize..40,
        ) {
            let exs: Vec<Example> = cands
                .iter()
                .enumerate()
                .map(|(i, &n)| synthetic_example(&format!("e{i}"), n, &[i % n]))
                .collect();
            let preds: Vec<Prediction> = exs
                .iter()
                .zip(&picks)
                .map(|(e, &p)| pred(&e.example_id, p % e.candidates.len()))
                .collect();
            let a = evaluate(&preds, &exs, "d", "r").unwrap();
            let mut exs2 = exs.clone();
            let k = rot % exs2.len();
            exs2.rotate_left(k);
            let mut preds2 = preds.clone();
            preds2.reverse();
            let b = evaluate(&preds2, &exs2, "d", "r").unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn union_superset_never_hurts(
            n in 2usize..20,
            base in prop::collection::btree_set(0usize..20, 1..5),
            extra in prop::collection::btree_set(0usize..20, 0..5),
            chosen in 0usize..20,
        ) {
            let base: Vec<usize> = base.into_iter().map(|i| i % n).collect();
            let mut one = synthetic_example("e", n, &base);
            one.relevant_by_annotator = Some(vec![one.relevant.clone()]);
            let mut two = one.clone();
            let superset: std::collections::BTreeSet<usize> =
                one.relevant.iter().copied().chain(extra.iter().map(|i| i % n)).collect();
            two.relevant_by_annotator.as_mut().unwrap().push(superset.clone());
            two.relevant = superset;
            let p = [pred("e", chosen % n)];
            let a = evaluate(&p, &[one], "d", "r").unwrap();
            let b = evaluate(&p, &[two], "d", "r").unwrap();
            prop_assert!(b.accuracy >= a.accuracy);
        }
    }
}
