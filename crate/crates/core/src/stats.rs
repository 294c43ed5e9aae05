//! Dataset statistics and inter-annotator agreement.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::hash::Hash;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::tokenize::token_count;
use crate::corpus::Corpus;
use crate::dataset::Example;
use crate::error::{Error, Result};

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> MeanSd {
        if values.is_empty() {
            return MeanSd { mean: 0.0, sd: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        MeanSd {
            mean,
            sd: var.sqrt(),
        }
    }

    fn show(&self, decimals: usize) -> String {
        format!("{:.*} ± {:.*}", decimals, self.mean, decimals, self.sd)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub n_examples: usize,
    pub unique_relevant_anchors: MeanSd,
    pub candidate_anchors: MeanSd,
    pub relevant_anchor_position: MeanSd,
    pub source_tokens: MeanSd,
    pub link_position: MeanSd,
}

/// Normalized position `index / (n - 1)`, or 0.5 for a single candidate.
pub fn normalized_position(index: usize, n: usize) -> f64 {
    if n <= 1 {
        0.5
    } else {
        index as f64 / (n - 1) as f64
    }
}

/// Mean normalized position over the example's relevant indices.
pub fn anchor_position(example: &Example) -> f64 {
    let n = example.candidates.len();
    let total: f64 = example
        .relevant
        .iter()
        .map(|&i| normalized_position(i, n))
        .sum();
    total / example.relevant.len().max(1) as f64
}

struct Row {
    unique: f64,
    candidates: f64,
    position: f64,
    tokens: f64,
    link: f64,
}

pub fn dataset_statistics(examples: &[Example], corpus: &Corpus) -> Result<StatsReport> {
    let mut token_cache: HashMap<&str, usize> = HashMap::new();
    for e in examples {
        if !token_cache.contains_key(e.source_id.as_str()) {
            let source = corpus.article(&e.source_id).map_err(|err| Error::Ranker {
                example_id: e.example_id.clone(),
                source: Box::new(err),
            })?;
            token_cache.insert(&e.source_id, token_count(&source.text));
        }
    }
    let rows: Vec<Row> = examples
        .par_iter()
        .map(|e| {
            let source = corpus.article(&e.source_id)?;
            Ok(Row {
                unique: e.relevant.len() as f64,
                candidates: e.candidates.len() as f64,
                position: anchor_position(e),
                tokens: token_cache[e.source_id.as_str()] as f64,
                link: e.link_span.begin as f64 / source.char_len().max(1) as f64,
            })
        })
        .collect::<Result<_>>()?;
    let col = |f: fn(&Row) -> f64| MeanSd::of(&rows.iter().map(f).collect::<Vec<_>>());
    Ok(StatsReport {
        n_examples: rows.len(),
        unique_relevant_anchors: col(|r| r.unique),
        candidate_anchors: col(|r| r.candidates),
        relevant_anchor_position: col(|r| r.position),
        source_tokens: col(|r| r.tokens),
        link_position: col(|r| r.link),
    })
}

/// Statistics per split, keyed by split name, in train/dev/test order.
pub fn split_statistics(
    examples: &[Example],
    corpus: &Corpus,
) -> Result<Vec<(String, StatsReport)>> {
    let mut out = Vec::new();
    for split in crate::dataset::Split::ALL {
        let subset: Vec<Example> = examples
            .iter()
            .filter(|e| e.split == split)
            .cloned()
            .collect();
        if !subset.is_empty() {
            out.push((split.as_str().to_string(), dataset_statistics(&subset, corpus)?));
        }
    }
    Ok(out)
}

/// Column-per-report text table with one row per statistic.
pub fn render_stats_table(columns: &[(String, StatsReport)]) -> String {
    type Cell = Box<dyn Fn(&StatsReport) -> String>;
    let rows: Vec<(&str, Cell)> = vec![
        ("# Examples", Box::new(|r| r.n_examples.to_string())),
        ("# Unique Relevant Anchors", Box::new(|r| r.unique_relevant_anchors.show(1))),
        ("# Candidate Anchors", Box::new(|r| r.candidate_anchors.show(1))),
        ("Relevant Anchor Position", Box::new(|r| r.relevant_anchor_position.show(2))),
        ("# Source Tokens", Box::new(|r| r.source_tokens.show(0))),
        ("Link Position", Box::new(|r| r.link_position.show(2))),
    ];
    let mut grid: Vec<Vec<String>> = vec![std::iter::once(String::new())
        .chain(columns.iter().map(|(name, _)| name.clone()))
        .collect()];
    for (label, f) in &rows {
        grid.push(
            std::iter::once(label.to_string())
                .chain(columns.iter().map(|(_, r)| f(r)))
                .collect(),
        );
    }
    let widths: Vec<usize> = (0..grid[0].len())
        .map(|c| grid.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &grid {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (cell, &w))| {
                let pad = w - cell.chars().count();
                if c == 0 {
                    format!("{cell}{}", " ".repeat(pad))
                } else {
                    format!("{}{cell}", " ".repeat(pad))
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}

/// Cohen's kappa between two aligned label sequences. When chance agreement
/// is 1 (both annotators constant on the same label) the result is 1.
pub fn cohen_kappa<T: Eq + Hash + Ord>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::InvalidArgument("kappa needs at least one item".into()));
    }
    let n = a.len() as u128;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as u128;
    let mut marg: BTreeMap<&T, (u128, u128)> = BTreeMap::new();
    for x in a {
        marg.entry(x).or_default().0 += 1;
    }
    for y in b {
        marg.entry(y).or_default().1 += 1;
    }
    // kappa = (n * agree - sum ca * cb) / (n^2 - sum ca * cb), in exact integers
    let chance: u128 = marg.values().map(|&(ca, cb)| ca * cb).sum();
    let denom = n * n - chance;
    if denom == 0 {
        return Ok(1.0);
    }
    Ok(((n * agree) as f64 - chance as f64) / denom as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairKappa {
    pub a: usize,
    pub b: usize,
    pub n_examples: usize,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaSummary {
    pub n_annotators: usize,
    pub pairs: Vec<PairKappa>,
    pub mean_kappa: f64,
}

/// Mean of Cohen's kappa over every annotator pair. An annotator's label for
/// an example is their chosen set, with the empty set meaning "none". Each
/// pair uses the examples both annotators labeled.
pub fn mean_pairwise_kappa(examples: &[Example]) -> Result<KappaSummary> {
    let n_annotators = examples
        .iter()
        .filter_map(|e| e.relevant_by_annotator.as_ref().map(Vec::len))
        .max()
        .unwrap_or(0);
    if n_annotators < 2 {
        return Err(Error::InvalidArgument(
            "kappa needs examples with at least two annotators".into(),
        ));
    }
    let mut pairs = Vec::new();
    for i in 0..n_annotators {
        for j in i + 1..n_annotators {
            let (la, lb): (Vec<_>, Vec<_>) = examples
                .iter()
                .filter_map(|e| {
                    let sets = e.relevant_by_annotator.as_ref()?;
                    Some((sets.get(i)?.clone(), sets.get(j)?.clone()))
                })
                .unzip();
            if la.is_empty() {
                continue;
            }
            pairs.push(PairKappa {
                a: i,
                b: j,
                n_examples: la.len(),
                kappa: cohen_kappa(&la, &lb)?,
            });
        }
    }
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("no annotator pair shares an example".into()));
    }
    let mean_kappa = pairs.iter().map(|p| p.kappa).sum::<f64>() / pairs.len() as f64;
    Ok(KappaSummary {
        n_annotators,
        pairs,
        mean_kappa,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementHistogram {
    pub n_examples: usize,
    /// Examples with fewer than two annotators.
    pub skipped: usize,
    /// Number of distinct choices per example -> number of examples.
    pub distinct: BTreeMap<usize, usize>,
    /// Size of the largest agreeing group per example -> number of examples.
    pub max_agreement: BTreeMap<usize, usize>,
}

pub fn agreement_distribution(examples: &[Example]) -> AgreementHistogram {
    let mut h = AgreementHistogram::default();
    for e in examples {
        let sets = match &e.relevant_by_annotator {
            Some(s) if s.len() >= 2 => s,
            _ => {
                h.skipped += 1;
                continue;
            }
        };
        let mut counts: BTreeMap<_, usize> = BTreeMap::new();
        for s in sets {
            *counts.entry(s).or_default() += 1;
        }
        h.n_examples += 1;
        *h.distinct.entry(counts.len()).or_default() += 1;
        *h.max_agreement
            .entry(counts.values().copied().max().unwrap_or(0))
            .or_default() += 1;
    }
    h
}
