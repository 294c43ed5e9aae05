use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::baselines::seeded_rng;
use super::query::{serialize_query, QueryLimits};
use crate::corpus::Corpus;
use crate::dataset::Example;
use crate::error::{Error, Result};

/// One sampled training list: a single positive and `m - 1` negatives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListDraw {
    pub example_id: String,
    pub list_index: usize,
    pub candidate_indices: Vec<usize>,
    pub labels: Vec<u8>,
    /// Set when the example had fewer than `m - 1` negatives and some were
    /// drawn more than once.
    pub with_replacement: bool,
}

/// A [`ListDraw`] with the serialized query for every entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingList {
    pub example_id: String,
    pub list_index: usize,
    pub candidate_indices: Vec<usize>,
    pub queries: Vec<String>,
    pub labels: Vec<u8>,
    pub with_replacement: bool,
}

/// One list per relevant index, in ascending order of the positive.
pub fn sample_training_lists(example: &Example, m: usize, seed: u64) -> Result<Vec<ListDraw>> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("list size must be at least 2, got {m}")));
    }
    if example.relevant.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "example {} has no relevant candidates",
            example.example_id
        )));
    }
    let negatives: Vec<usize> = (0..example.candidates.len())
        .filter(|i| !example.relevant.contains(i))
        .collect();
    if negatives.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "example {} has no non-relevant candidates to sample",
            example.example_id
        )));
    }

    let mut rng = seeded_rng(seed, &example.example_id, "lists");
    let want = m - 1;
    let mut out = Vec::with_capacity(example.relevant.len());
    for (list_index, &positive) in example.relevant.iter().enumerate() {
        let with_replacement = negatives.len() < want;
        let mut items: Vec<usize> = if with_replacement {
            let mut all = negatives.clone();
            while all.len() < want {
                all.push(negatives[rng.random_range(0..negatives.len())]);
            }
            all
        } else {
            index::sample(&mut rng, negatives.len(), want)
                .into_iter()
                .map(|i| negatives[i])
                .collect()
        };
        items.push(positive);
        items.shuffle(&mut rng);
        let labels = items.iter().map(|&i| u8::from(i == positive)).collect();
        out.push(ListDraw {
            example_id: example.example_id.clone(),
            list_index,
            candidate_indices: items,
            labels,
            with_replacement,
        });
    }
    Ok(out)
}

/// Sample lists and attach serialized queries.
pub fn training_lists(
    example: &Example,
    m: usize,
    seed: u64,
    corpus: &Corpus,
    limits: &QueryLimits,
) -> Result<Vec<TrainingList>> {
    sample_training_lists(example, m, seed)?
        .into_iter()
        .map(|d| {
            let queries = d
                .candidate_indices
                .iter()
                .map(|&i| serialize_query(example, i, corpus, limits))
                .collect::<Result<_>>()?;
            Ok(TrainingList {
                example_id: d.example_id,
                list_index: d.list_index,
                candidate_indices: d.candidate_indices,
                queries,
                labels: d.labels,
                with_replacement: d.with_replacement,
            })
        })
        .collect()
}
