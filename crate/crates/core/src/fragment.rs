//! Scroll-to-text fragment URLs (`#:~:text=start,end`) that point a browser
//! at a predicted paragraph.

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};

use crate::corpus::tokenize::token_byte_ranges;
use crate::corpus::{candidate_anchors, Article, CandidateAnchor};
use crate::error::{Error, Result};

/// Everything except ASCII alphanumerics and `. _ ~ ! * ' ( )` is escaped.
const FRAGMENT_ESCAPE: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'.')
    .remove(b'_')
    .remove(b'~')
    .remove(b'!')
    .remove(b'*')
    .remove(b'\'')
    .remove(b'(')
    .remove(b')');

const PREFIX: &str = "#:~:text=";

/// Initial number of tokens in each of the start and end windows.
pub const WINDOW_TOKENS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextFragment {
    pub text_start: String,
    pub text_end: Option<String>,
    pub encoded: String,
}

fn pct(s: &str) -> String {
    utf8_percent_encode(s, FRAGMENT_ESCAPE).to_string()
}

impl TextFragment {
    pub fn new(text_start: String, text_end: Option<String>) -> Self {
        let mut encoded = format!("{PREFIX}{}", pct(&text_start));
        if let Some(end) = &text_end {
            encoded.push(',');
            encoded.push_str(&pct(end));
        }
        TextFragment {
            text_start,
            text_end,
            encoded,
        }
    }

    /// Decode a `#:~:text=` suffix.
    pub fn parse(encoded: &str) -> Result<TextFragment> {
        let body = encoded
            .strip_prefix(PREFIX)
            .ok_or_else(|| Error::InvalidArgument(format!("not a text fragment: {encoded:?}")))?;
        let decode = |part: &str| {
            percent_decode_str(part)
                .decode_utf8()
                .map(|s| s.into_owned())
                .map_err(|_| Error::InvalidArgument(format!("fragment is not UTF-8: {encoded:?}")))
        };
        let mut parts = body.split(',');
        let start = decode(parts.next().unwrap_or_default())?;
        let end = parts.next().map(decode).transpose()?;
        if start.is_empty() || parts.next().is_some() || end.as_deref() == Some("") {
            return Err(Error::InvalidArgument(format!("malformed text fragment {encoded:?}")));
        }
        Ok(TextFragment::new(start, end))
    }

    fn matches(&self, text: &str) -> bool {
        if !text.starts_with(&self.text_start) {
            return false;
        }
        match &self.text_end {
            None => true,
            Some(end) => {
                text.len() >= self.text_start.len() + end.len() && text.ends_with(end.as_str())
            }
        }
    }
}

/// Start and end windows of `w` tokens. A paragraph of at most `w` tokens is
/// used whole; up to `2w` tokens only the start window is kept.
fn windows(text: &str, w: usize) -> Option<(String, Option<String>)> {
    let ranges = token_byte_ranges(text);
    let n = ranges.len();
    if n == 0 {
        return None;
    }
    if n <= w {
        return Some((text.to_string(), None));
    }
    let start = text[..ranges[w - 1].end].to_string();
    if n <= 2 * w {
        return Some((start, None));
    }
    let end = text[ranges[n - w].start..].to_string();
    Some((start, Some(end)))
}

fn matching(fragment: &TextFragment, target: &Article, cands: &[CandidateAnchor]) -> Vec<usize> {
    cands
        .iter()
        .filter(|c| fragment.matches(target.slice(c.span)))
        .map(|c| c.index)
        .collect()
}

/// Build a fragment for `candidate`, widening the windows by doubling until
/// no other candidate of `target` matches.
pub fn make_fragment(target: &Article, candidate: &CandidateAnchor) -> Result<TextFragment> {
    let cands = candidate_anchors(target)?;
    if cands.get(candidate.index).map(|c| c.span) != Some(candidate.span) {
        return Err(Error::InvalidArgument(format!(
            "candidate {} does not belong to article {:?}",
            candidate.index, target.id
        )));
    }
    let text = target.slice(candidate.span);
    let n = token_byte_ranges(text).len();
    let mut w = WINDOW_TOKENS;
    loop {
        let (start, end) = windows(text, w).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "candidate {} of {:?} has no tokens",
                candidate.index, target.id
            ))
        })?;
        let fragment = TextFragment::new(start, end);
        let hits = matching(&fragment, target, &cands);
        if hits == [candidate.index] {
            return Ok(fragment);
        }
        if w >= n {
            return Err(Error::FragmentAmbiguous {
                article: target.id.clone(),
                indices: hits,
            });
        }
        w *= 2;
    }
}

/// The unique candidate of `target` whose text starts with the fragment's
/// start and, when present, ends with its end.
pub fn resolve_fragment(fragment: &TextFragment, target: &Article) -> Result<usize> {
    let cands = candidate_anchors(target)?;
    let hits = matching(fragment, target, &cands);
    match hits.as_slice() {
        [] => Err(Error::FragmentNoMatch(target.id.clone())),
        [one] => Ok(*one),
        _ => Err(Error::FragmentAmbiguous {
            article: target.id.clone(),
            indices: hits,
        }),
    }
}

/// `base` + escaped article id (spaces as underscores) + fragment.
pub fn fragment_url(base: &str, article_id: &str, fragment: &TextFragment) -> String {
    let path = utf8_percent_encode(&article_id.replace(' ', "_"), FRAGMENT_ESCAPE).to_string();
    format!("{base}{path}{}", fragment.encoded)
}
