//! The single tokenizer and string normalizer shared by every threshold,
//! ranker and matcher in the crate.

use std::ops::Range;

use unicode_normalization::UnicodeNormalization;

/// Lowercased, NFC-normalized maximal runs of alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    let nfc: String = text.nfc().collect();
    token_byte_ranges(&nfc)
        .into_iter()
        .map(|r| nfc[r].to_lowercase().nfc().collect())
        .collect()
}

/// Byte ranges of the maximal alphanumeric runs in `text`.
///
/// `text` is expected to already be NFC (article text always is); on such
/// input the ranges line up one-to-one with [`tokenize`].
pub fn token_byte_ranges(text: &str) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_alphanumeric(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(s..i);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(s..text.len());
    }
    out
}

pub fn token_count(text: &str) -> usize {
    let nfc: String = text.nfc().collect();
    token_byte_ranges(&nfc).len()
}

fn is_dash(c: char) -> bool {
    matches!(
        c,
        '-' | '\u{00AD}' | '\u{2010}'..='\u{2015}' | '\u{2212}' | '\u{FE58}' | '\u{FE63}' | '\u{FF0D}'
    )
}

/// Matching key for link texts and headings: NFC, lowercase, whitespace
/// collapsed and trimmed, every hyphen or dash variant folded to `-`.
pub fn normalize(text: &str) -> String {
    let lowered: String = text.nfc().collect::<String>().to_lowercase();
    let mut out = String::with_capacity(lowered.len());
    let mut pending_space = false;
    for c in lowered.nfc() {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.push(if is_dash(c) { '-' } else { c });
    }
    out
}

/// Collapse runs of whitespace into single spaces and trim.
pub fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}
