//! Reference scorer that speaks the wire protocol and scores with BM25.
//!
//! It recovers the candidate text and the query field from each serialized
//! query, so with untruncated candidates its scores equal the in-process
//! BM25 baselines. Useful as a template for real scorers and as an
//! equivalence check of the client.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use serde::Deserialize;

use super::external::{ScoreRequest, ScoreResponse};
use super::query::parse_query_fields;
use crate::bm25::{Bm25Index, Bm25Params, QueryMode};
use crate::corpus::tokenize;

#[derive(Deserialize)]
#[serde(untagged)]
enum Incoming {
    Done { done: bool },
    Request(ScoreRequest),
}

fn invalid(msg: String) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg)
}

/// Candidate tokens and query tokens of one request.
type TokenPair = (Vec<String>, Vec<String>);

/// Read requests until `{"done": true}` or end of input, then answer all of
/// them and write the closing sentinel.
pub fn serve_bm25<R: BufRead, W: Write>(
    reader: R,
    mut writer: W,
    mode: QueryMode,
    params: Bm25Params,
) -> io::Result<()> {
    // example_id -> candidate_index -> (candidate tokens, query tokens)
    let mut by_example: BTreeMap<String, BTreeMap<usize, TokenPair>> =
        BTreeMap::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let msg: Incoming = serde_json::from_str(&line).map_err(|e| invalid(e.to_string()))?;
        let req = match msg {
            Incoming::Done { done: true } => break,
            Incoming::Done { .. } => continue,
            Incoming::Request(r) => r,
        };
        let fields = parse_query_fields(&req.query)
            .ok_or_else(|| invalid(format!("unparseable query for {}", req.example_id)))?;
        let query = match mode {
            QueryMode::Title => tokenize(&fields[0]),
            QueryMode::Context => tokenize(&fields[4]),
        };
        by_example
            .entry(req.example_id)
            .or_default()
            .insert(req.candidate_index, (tokenize(&fields[6]), query));
    }

    for (example_id, cands) in by_example {
        let query = cands.values().next().map(|(_, q)| q.clone()).unwrap_or_default();
        let indices: Vec<usize> = cands.keys().copied().collect();
        let docs: Vec<Vec<String>> = cands.into_values().map(|(d, _)| d).collect();
        let scores = match Bm25Index::from_tokens(docs, params) {
            Ok(index) => index.score_all(&query),
            Err(_) => vec![0.0; indices.len()],
        };
        for (candidate_index, score) in indices.into_iter().zip(scores) {
            let resp = ScoreResponse {
                example_id: example_id.clone(),
                candidate_index,
                score,
            };
            serde_json::to_writer(&mut writer, &resp).map_err(|e| invalid(e.to_string()))?;
            writer.write_all(b"\n")?;
        }
    }
    writer.write_all(b"{\"done\":true}\n")?;
    writer.flush()
}
