//! Dataset construction from naturally occurring anchored links, and the
//! JSON Lines example schema shared by every downstream command.

mod filter;
mod pipeline;
mod split;

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

pub use filter::{
    is_valid_target, link_fraction, non_trivial_sections, FilterConfig, FilterDecision,
    RejectReason,
};
pub use pipeline::{
    build_dataset, deduplicate, expand_section_labels, extract_anchored_links, filter_trivial,
    AnchoredLink, BuildReport, Dataset,
};
pub use split::{assign_split, example_id, Split};

use crate::corpus::{CandidateAnchor, Span};
use crate::error::{Error, Result};

/// One task instance, one JSON line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub example_id: String,
    pub source_id: String,
    pub link_span: Span,
    pub link_text: String,
    pub target_id: String,
    pub candidates: Vec<CandidateAnchor>,
    /// Acceptable candidate indices. For reader annotations this is the
    /// union over annotators.
    #[serde(default)]
    pub relevant: BTreeSet<usize>,
    pub split: Split,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevant_by_annotator: Option<Vec<BTreeSet<usize>>>,
}

impl Example {
    pub fn is_correct(&self, chosen: usize) -> bool {
        self.relevant.contains(&chosen)
    }

    pub fn lead_index(&self) -> usize {
        self.candidates
            .iter()
            .find(|c| c.is_lead)
            .map(|c| c.index)
            .unwrap_or(0)
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.candidates.is_empty() {
            return Err("no candidates".into());
        }
        if self.relevant.is_empty() {
            return Err("empty relevant set".into());
        }
        if let Some(&max) = self.relevant.iter().next_back() {
            if max >= self.candidates.len() {
                return Err(format!(
                    "relevant index {max} out of range for {} candidates",
                    self.candidates.len()
                ));
            }
        }
        if self.candidates.iter().enumerate().any(|(i, c)| c.index != i) {
            return Err("candidate indices are not 0..n in order".into());
        }
        Ok(())
    }
}

pub fn write_examples<W: Write>(examples: &[Example], mut out: W) -> Result<()> {
    for ex in examples {
        let line = serde_json::to_string(ex).map_err(|e| Error::json("serializing example", e))?;
        writeln!(out, "{line}").map_err(|e| Error::io("writing dataset", e))?;
    }
    out.flush().map_err(|e| Error::io("writing dataset", e))
}

/// Read and validate a dataset or reader-annotation file. A missing or empty
/// `relevant` is filled with the union of `relevant_by_annotator`.
pub fn read_examples<R: BufRead>(reader: R) -> Result<Vec<Example>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("reading dataset", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut ex: Example = serde_json::from_str(&line)
            .map_err(|e| Error::json(format!("dataset line {}", i + 1), e))?;
        if ex.relevant.is_empty() {
            if let Some(sets) = &ex.relevant_by_annotator {
                ex.relevant = sets.iter().flatten().copied().collect();
            }
        }
        ex.check().map_err(|m| {
            Error::InvalidArgument(format!("dataset line {} ({}): {m}", i + 1, ex.example_id))
        })?;
        out.push(ex);
    }
    Ok(out)
}
