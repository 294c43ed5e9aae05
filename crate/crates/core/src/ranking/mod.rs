//! A uniform ranking interface over the baselines, plus the pieces needed to
//! train or call an external neural ranker: query serialization, list
//! sampling, the listwise loss, and the line-delimited JSON scorer client.

mod baselines;
pub mod external;
mod lists;
mod loss;
mod query;
pub mod stub;

use std::io::{BufRead, Write};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use baselines::{
    majority_rank, oracle_rank, random_rank, train_stats, Bm25Ranker, MajorityRanker, OracleRanker,
    RandomRanker, TrainStats,
};
pub use external::{external_scorer_rank, Endpoint, ExternalRanker, ScoreRequest, ScoreResponse};
pub use lists::{sample_training_lists, training_lists, ListDraw, TrainingList};
pub use loss::listwise_softmax_loss;
pub use query::{serialize_query, QueryLimits, FIELD_LABELS};

use crate::bm25::{Bm25Params, QueryMode};
use crate::corpus::Corpus;
use crate::dataset::Example;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub example_id: String,
    pub chosen_index: usize,
    pub scores: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fragment_url: Option<String>,
}

impl Prediction {
    /// Prediction whose choice follows the global tie rule.
    pub fn from_scores(example_id: impl Into<String>, scores: Vec<f64>) -> Self {
        Prediction {
            example_id: example_id.into(),
            chosen_index: argmax(&scores),
            scores,
            fragment_url: None,
        }
    }
}

/// Index of the largest score; the lowest index wins ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

pub trait Ranker: Send + Sync {
    fn name(&self) -> &str;

    fn rank_one(&self, example: &Example) -> Result<Prediction>;

    /// Rank many examples, output aligned with input.
    fn rank_all(&self, examples: &[Example]) -> Result<Vec<Prediction>> {
        examples.par_iter().map(|e| rank(self, e)).collect()
    }
}

/// Rank one example, attaching its id to any failure.
pub fn rank<R: Ranker + ?Sized>(ranker: &R, example: &Example) -> Result<Prediction> {
    ranker.rank_one(example).map_err(|e| match e {
        e @ Error::Ranker { .. } => e,
        e => Error::Ranker {
            example_id: example.example_id.clone(),
            source: Box::new(e),
        },
    })
}

pub const AVAILABLE_RANKERS: [&str; 6] = [
    "bm25-title",
    "bm25-context",
    "majority",
    "random",
    "oracle",
    "external",
];

/// Everything a ranker might need; unused fields are ignored.
#[derive(Debug, Clone)]
pub struct RankerConfig {
    pub bm25: Bm25Params,
    pub window_tokens: usize,
    pub seed: u64,
    pub endpoint: Option<Endpoint>,
    pub timeout: Duration,
    pub limits: QueryLimits,
}

impl Default for RankerConfig {
    fn default() -> Self {
        RankerConfig {
            bm25: Bm25Params::default(),
            window_tokens: 50,
            seed: 0,
            endpoint: None,
            timeout: Duration::from_secs(30),
            limits: QueryLimits::default(),
        }
    }
}

/// Construct a ranker by name. `train` feeds the majority baseline.
pub fn build_ranker<'a>(
    name: &str,
    config: &RankerConfig,
    corpus: &'a Corpus,
    train: &[Example],
) -> Result<Box<dyn Ranker + 'a>> {
    Ok(match name {
        "bm25-title" => Box::new(Bm25Ranker::new(corpus, QueryMode::Title, config.window_tokens, config.bm25)),
        "bm25-context" => Box::new(Bm25Ranker::new(corpus, QueryMode::Context, config.window_tokens, config.bm25)),
        "majority" => Box::new(MajorityRanker::new(train_stats(train))?),
        "random" => Box::new(RandomRanker::new(config.seed)),
        "oracle" => Box::new(OracleRanker),
        "external" => {
            let endpoint = config.endpoint.clone().ok_or_else(|| {
                Error::InvalidArgument("the external ranker needs a scorer endpoint".into())
            })?;
            Box::new(ExternalRanker::new(corpus, endpoint, config.limits, config.timeout))
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown ranker {other:?}; available: {}",
                AVAILABLE_RANKERS.join(", ")
            )))
        }
    })
}

pub fn write_predictions<W: Write>(predictions: &[Prediction], mut out: W) -> Result<()> {
    for p in predictions {
        let line = serde_json::to_string(p).map_err(|e| Error::json("serializing prediction", e))?;
        writeln!(out, "{line}").map_err(|e| Error::io("writing predictions", e))?;
    }
    out.flush().map_err(|e| Error::io("writing predictions", e))
}

pub fn read_predictions<R: BufRead>(reader: R) -> Result<Vec<Prediction>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("reading predictions", e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::json(format!("predictions line {}", i + 1), e))?,
        );
    }
    Ok(out)
}
