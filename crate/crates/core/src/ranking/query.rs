use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::corpus::tokenize::{collapse_whitespace, token_byte_ranges};
use crate::corpus::{lead_text, link_context, Corpus};
use crate::dataset::Example;
use crate::error::{Error, Result};

pub const FIELD_LABELS: [&str; 8] = [
    "source_title:",
    "target_title:",
    "source_lead:",
    "target_lead:",
    "context:",
    "source_heading:",
    "candidate:",
    "candidate_heading:",
];

/// Per-field token budgets. `None` means unlimited; the context budget is
/// tokens on each side of the link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLimits {
    pub title: Option<usize>,
    pub lead: Option<usize>,
    pub context: usize,
    pub candidate: Option<usize>,
}

impl Default for QueryLimits {
    fn default() -> Self {
        QueryLimits {
            title: None,
            lead: Some(64),
            context: 50,
            candidate: Some(256),
        }
    }
}

/// Prefix of `text` ending with its `max_tokens`-th token.
pub(crate) fn truncate_tokens(text: &str, max_tokens: Option<usize>) -> String {
    let text: String = text.nfc().collect();
    let Some(max) = max_tokens else {
        return text;
    };
    let ranges = token_byte_ranges(&text);
    if ranges.len() <= max {
        return text;
    }
    if max == 0 {
        return String::new();
    }
    text[..ranges[max - 1].end].to_string()
}

fn join_path(path: &[String]) -> String {
    path.join(" > ")
}

/// One line describing the (link, candidate) pair: title pair, lead
/// excerpts, link context, link heading, candidate text, candidate heading.
pub fn serialize_query(
    example: &Example,
    candidate_index: usize,
    corpus: &Corpus,
    limits: &QueryLimits,
) -> Result<String> {
    let source = corpus.article(&example.source_id)?;
    let target = corpus.article(&example.target_id)?;
    let candidate = example.candidates.get(candidate_index).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "candidate {candidate_index} out of range for example {}",
            example.example_id
        ))
    })?;
    let lead = &example.candidates[example.lead_index()];
    let candidate_text = target.try_slice(candidate.span).ok_or(Error::SpanOutOfBounds {
        article: target.id.clone(),
        begin: candidate.span.begin,
        end: candidate.span.end,
        len: target.char_len(),
    })?;
    let source_heading = source
        .section_containing(example.link_span)
        .map(|s| join_path(&source.sections[s].heading_path))
        .unwrap_or_default();

    let values = [
        truncate_tokens(&source.title, limits.title),
        truncate_tokens(&target.title, limits.title),
        truncate_tokens(lead_text(source), limits.lead),
        truncate_tokens(target.slice(lead.span), limits.lead),
        link_context(source, example.link_span, limits.context)?,
        source_heading,
        truncate_tokens(candidate_text, limits.candidate),
        join_path(&candidate.heading_path),
    ];

    let parts: Vec<String> = FIELD_LABELS
        .iter()
        .zip(values)
        .map(|(label, value)| {
            let value = collapse_whitespace(&value);
            if value.is_empty() {
                label.to_string()
            } else {
                format!("{label} {value}")
            }
        })
        .collect();
    Ok(parts.join(" "))
}

/// Split a serialized query back into its eight values. Values containing a
/// later label verbatim are not supported.
pub fn parse_query_fields(query: &str) -> Option<[String; 8]> {
    let mut out: [String; 8] = Default::default();
    let mut rest = query.strip_prefix(FIELD_LABELS[0])?;
    for i in 0..FIELD_LABELS.len() {
        if i + 1 == FIELD_LABELS.len() {
            out[i] = rest.trim().to_string();
            break;
        }
        let next = FIELD_LABELS[i + 1];
        let cut = if rest.starts_with(' ') && rest[1..].starts_with(next) {
            1
        } else {
            rest.find(&format!(" {next}"))? + 1
        };
        out[i] = rest[..cut].trim().to_string();
        rest = &rest[cut + next.len()..];
    }
    Some(out)
}
