use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{Prediction, Ranker};
use crate::bm25::{rank_bm25, Bm25Params, QueryMode};
use crate::corpus::Corpus;
use crate::dataset::{Example, Split};
use crate::error::{Error, Result};

/// How often each candidate index is relevant across training examples.
pub type TrainStats = BTreeMap<usize, usize>;

pub fn train_stats(examples: &[Example]) -> TrainStats {
    let mut stats = TrainStats::new();
    for ex in examples.iter().filter(|e| e.split == Split::Train) {
        for &i in &ex.relevant {
            *stats.entry(i).or_default() += 1;
        }
    }
    stats
}

/// Indices from most to least frequent; lower index first on equal counts.
fn frequency_order(stats: &TrainStats) -> Vec<usize> {
    let mut order: Vec<(usize, usize)> = stats.iter().map(|(&i, &n)| (i, n)).collect();
    order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    order.into_iter().map(|(i, _)| i).collect()
}

fn one_hot(example: &Example, chosen: usize) -> Prediction {
    let scores = (0..example.candidates.len())
        .map(|i| if i == chosen { 1.0 } else { 0.0 })
        .collect();
    Prediction {
        example_id: example.example_id.clone(),
        chosen_index: chosen,
        scores,
        fragment_url: None,
    }
}

pub fn majority_rank(stats: &TrainStats, example: &Example) -> Result<Prediction> {
    if stats.is_empty() {
        return Err(Error::InvalidArgument("majority baseline needs training statistics".into()));
    }
    Ok(MajorityRanker::new(stats.clone())?.pick(example))
}

pub struct MajorityRanker {
    order: Vec<usize>,
}

impl MajorityRanker {
    pub fn new(stats: TrainStats) -> Result<Self> {
        if stats.is_empty() {
            return Err(Error::InvalidArgument(
                "majority baseline needs training statistics (no train examples?)".into(),
            ));
        }
        Ok(MajorityRanker {
            order: frequency_order(&stats),
        })
    }

    fn pick(&self, example: &Example) -> Prediction {
        let n = example.candidates.len();
        let chosen = self.order.iter().copied().find(|&i| i < n).unwrap_or(0);
        one_hot(example, chosen)
    }
}

impl Ranker for MajorityRanker {
    fn name(&self) -> &str {
        "majority"
    }

    fn rank_one(&self, example: &Example) -> Result<Prediction> {
        Ok(self.pick(example))
    }
}

fn example_rng(seed: u64, example_id: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(example_id.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Uniform over candidate indices, reproducible per `(seed, example_id)`.
pub fn random_rank(seed: u64, example: &Example) -> Prediction {
    let n = example.candidates.len().max(1);
    let chosen = example_rng(seed, &example.example_id).random_range(0..n);
    one_hot(example, chosen)
}

pub(crate) fn seeded_rng(seed: u64, example_id: &str, salt: &str) -> ChaCha8Rng {
    example_rng(seed, &format!("{example_id}\u{1f}{salt}"))
}

pub struct RandomRanker {
    seed: u64,
}

impl RandomRanker {
    pub fn new(seed: u64) -> Self {
        RandomRanker { seed }
    }
}

impl Ranker for RandomRanker {
    fn name(&self) -> &str {
        "random"
    }

    fn rank_one(&self, example: &Example) -> Result<Prediction> {
        Ok(random_rank(self.seed, example))
    }
}

/// Predicts the first relevant index. An upper bound for sanity checks.
pub fn oracle_rank(example: &Example) -> Prediction {
    one_hot(example, example.relevant.iter().next().copied().unwrap_or(0))
}

pub struct OracleRanker;

impl Ranker for OracleRanker {
    fn name(&self) -> &str {
        "oracle"
    }

    fn rank_one(&self, example: &Example) -> Result<Prediction> {
        Ok(oracle_rank(example))
    }
}

pub struct Bm25Ranker<'a> {
    corpus: &'a Corpus,
    mode: QueryMode,
    window_tokens: usize,
    params: Bm25Params,
}

impl<'a> Bm25Ranker<'a> {
    pub fn new(corpus: &'a Corpus, mode: QueryMode, window_tokens: usize, params: Bm25Params) -> Self {
        Bm25Ranker {
            corpus,
            mode,
            window_tokens,
            params,
        }
    }
}

impl Ranker for Bm25Ranker<'_> {
    fn name(&self) -> &str {
        match self.mode {
            QueryMode::Title => "bm25-title",
            QueryMode::Context => "bm25-context",
        }
    }

    fn rank_one(&self, example: &Example) -> Result<Prediction> {
        rank_bm25(example, self.corpus, self.mode, self.window_tokens, self.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CandidateAnchor, Span};
    use std::collections::BTreeSet;

    pub(crate) fn synthetic(id: &str, n: usize, relevant: &[usize], split: Split) -> Example {
        Example {
            example_id: id.into(),
            source_id: "S".into(),
            link_span: Span::new(0, 1),
            link_text: "x".into(),
            target_id: "T".into(),
            candidates: (0..n)
                .map(|i| CandidateAnchor {
                    index: i,
                    span: Span::new(i * 10, i * 10 + 5),
                    heading_path: vec![],
                    is_lead: i == 0,
                })
                .collect(),
            relevant: relevant.iter().copied().collect::<BTreeSet<_>>(),
            split,
            relevant_by_annotator: None,
        }
    }

    #[test]
    fn majority_mode_and_clamp() {
        let stats = TrainStats::from([(2, 10), (7, 3), (1, 2)]);
        let ex = synthetic("e", 5, &[0], Split::Dev);
        assert_eq!(majority_rank(&stats, &ex).unwrap().chosen_index, 2);

        let stats = TrainStats::from([(7, 10), (1, 4), (0, 2)]);
        let ex = synthetic("e", 3, &[0], Split::Dev);
        assert_eq!(majority_rank(&stats, &ex).unwrap().chosen_index, 1);

        let stats = TrainStats::from([(7, 10)]);
        assert_eq!(majority_rank(&stats, &ex).unwrap().chosen_index, 0);

        assert!(majority_rank(&TrainStats::new(), &ex).is_err());
    }

    #[test]
    fn majority_matches_counting_oracle() {
        // relevant sets cycle through fixed patterns; index 3 dominates by construction
        let patterns: [&[usize]; 4] = [&[3], &[3, 4], &[1, 3], &[0]];
        let train: Vec<Example> = (0..40)
            .map(|i| synthetic(&format!("t{i}"), 8, patterns[i % 4], Split::Train))
            .chain((0..5).map(|i| synthetic(&format!("d{i}"), 8, &[5], Split::Dev)))
            .collect();
        let stats = train_stats(&train);
        let mut counts = [0usize; 8];
        for ex in train.iter().filter(|e| e.split == Split::Train) {
            for &r in &ex.relevant {
                counts[r] += 1;
            }
        }
        let brute_mode = (0..8).max_by_key(|&i| (counts[i], std::cmp::Reverse(i))).unwrap();
        assert_eq!(brute_mode, 3);
        assert_eq!(stats.get(&5), None);
        let ex = synthetic("q", 8, &[0], Split::Test);
        assert_eq!(majority_rank(&stats, &ex).unwrap().chosen_index, brute_mode);
    }

    #[test]
    fn random_is_reproducible() {
        let one = synthetic("solo", 1, &[0], Split::Dev);
        assert_eq!(random_rank(0, &one).chosen_index, 0);
        let ex = synthetic("abc", 50, &[0], Split::Dev);
        assert_eq!(random_rank(7, &ex), random_rank(7, &ex));
        let picks: BTreeSet<usize> = (0..200).map(|s| random_rank(s, &ex).chosen_index).collect();
        assert!(picks.len() > 30);
    }

    #[test]
    fn random_calibration() {
        // analytic expectation of accuracy = mean(|relevant| / n)
        let mut examples = Vec::new();
        for i in 0..4000 {
            let n = 2 + i % 9;
            let k = 1 + i % n.min(3);
            let rel: Vec<usize> = (0..k).collect();
            examples.push(synthetic(&format!("r{i}"), n, &rel, Split::Test));
        }
        let p: f64 = examples
            .iter()
            .map(|e| e.relevant.len() as f64 / e.candidates.len() as f64)
            .sum::<f64>()
            / examples.len() as f64;
        let hits = examples
            .iter()
            .filter(|e| e.is_correct(random_rank(0, e).chosen_index))
            .count() as f64;
        let var: f64 = examples
            .iter()
            .map(|e| {
                let q = e.relevant.len() as f64 / e.candidates.len() as f64;
                q * (1.0 - q)
            })
            .sum();
        assert!((hits - p * examples.len() as f64).abs() <= 3.0 * var.sqrt());
    }

    #[test]
    fn single_candidate_is_zero_for_all() {
        let ex = synthetic("one", 1, &[0], Split::Dev);
        assert_eq!(OracleRanker.rank_one(&ex).unwrap().chosen_index, 0);
        assert_eq!(RandomRanker::new(3).rank_one(&ex).unwrap().chosen_index, 0);
        let m = MajorityRanker::new(TrainStats::from([(4, 1)])).unwrap();
        assert_eq!(m.rank_one(&ex).unwrap().chosen_index, 0);
    }
}
