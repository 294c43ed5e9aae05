//! Parsed corpus: articles with exact character offsets, plus the derived
//! views every later stage needs (candidate anchors, lead paragraphs, link
//! contexts).

mod article;
mod parse;
pub mod tokenize;

use std::collections::HashMap;
use std::io::BufRead;

use rayon::prelude::*;

pub use article::{Article, CandidateAnchor, Link, Paragraph, Section, Span};
pub use parse::{debug_json, parse_article, to_record, RawRecord};
pub use tokenize::{normalize, tokenize};

use crate::error::{Error, Location, ParseError, Result};

/// Sections that never hold useful anchors. Compared after [`normalize`].
pub const SECTION_STOPLIST: [&str; 7] = [
    "references",
    "see also",
    "external links",
    "notes",
    "further reading",
    "bibliography",
    "sources",
];

pub fn is_stoplisted(heading: &str) -> bool {
    SECTION_STOPLIST.contains(&normalize(heading).as_str())
}

/// A section is trivial when it or any ancestor is stoplisted.
pub fn section_is_trivial(article: &Article, section: usize) -> bool {
    article.sections[section]
        .heading_path
        .iter()
        .any(|h| is_stoplisted(h))
}

/// Paragraph indices that survive the stoplist, in document order.
pub fn retained_paragraphs(article: &Article) -> Vec<usize> {
    article
        .paragraphs
        .iter()
        .enumerate()
        .filter(|(_, p)| p.section.is_none_or(|s| !section_is_trivial(article, s)))
        .map(|(i, _)| i)
        .collect()
}

/// One candidate per retained paragraph. Indices count retained paragraphs
/// only, and candidate 0 is the lead.
pub fn candidate_anchors(target: &Article) -> Result<Vec<CandidateAnchor>> {
    let kept = retained_paragraphs(target);
    if kept.is_empty() {
        return Err(Error::EmptyCandidates(target.id.clone()));
    }
    Ok(kept
        .into_iter()
        .enumerate()
        .map(|(index, p)| {
            let para = &target.paragraphs[p];
            CandidateAnchor {
                index,
                span: para.span,
                heading_path: target.heading_path_of(para.section),
                is_lead: index == 0,
            }
        })
        .collect())
}

/// Text of the lead paragraph, or `""` for an article without paragraphs.
pub fn lead_text(article: &Article) -> &str {
    retained_paragraphs(article)
        .first()
        .or(if article.paragraphs.is_empty() { None } else { Some(&0) })
        .map(|&p| article.slice(article.paragraphs[p].span))
        .unwrap_or("")
}

/// Span of the link plus up to `window_tokens` whole tokens on either side.
pub fn link_context_span(source: &Article, link_span: Span, window_tokens: usize) -> Result<Span> {
    if window_tokens == 0 {
        return Err(Error::InvalidArgument("context window must be positive".into()));
    }
    if link_span.begin >= link_span.end || link_span.end > source.char_len() {
        return Err(Error::SpanOutOfBounds {
            article: source.id.clone(),
            begin: link_span.begin,
            end: link_span.end,
            len: source.char_len(),
        });
    }
    let lb = source.byte_offset(link_span.begin);
    let le = source.byte_offset(link_span.end);
    let tokens = tokenize::token_byte_ranges(&source.text);

    // tokens straddling a link edge belong to the link
    let mut begin = lb;
    let mut end = le;
    for t in &tokens {
        if t.start < lb && t.end > lb {
            begin = t.start;
        }
        if t.start < le && t.end > le {
            end = t.end;
        }
    }
    let left: Vec<_> = tokens.iter().filter(|t| t.end <= begin).collect();
    if left.len() >= window_tokens {
        begin = left[left.len() - window_tokens].start;
    } else if let Some(first) = left.first() {
        begin = first.start;
    }
    if let Some(t) = tokens.iter().filter(|t| t.start >= end).take(window_tokens).last() {
        end = t.end;
    }
    Ok(Span::new(source.char_offset(begin), source.char_offset(end)))
}

pub fn link_context(source: &Article, link_span: Span, window_tokens: usize) -> Result<String> {
    link_context_span(source, link_span, window_tokens).map(|s| source.slice(s).to_string())
}

/// All articles of a corpus file, with in-link counts filled in.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    articles: Vec<Article>,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    /// Assemble a corpus from parsed articles. In-links are every link
    /// occurrence pointing at an article from a different article.
    pub fn from_articles(articles: Vec<Article>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(articles.len());
        for (i, a) in articles.iter().enumerate() {
            if by_id.insert(a.id.clone(), i).is_some() {
                return Err(ParseError::DuplicateId {
                    at: Location {
                        record_line: i + 1,
                        body_line: 0,
                    },
                    id: a.id.clone(),
                }
                .into());
            }
        }
        let mut counts = vec![0usize; articles.len()];
        for a in &articles {
            for l in &a.links {
                if l.target_id == a.id {
                    continue;
                }
                if let Some(&t) = by_id.get(&l.target_id) {
                    counts[t] += 1;
                }
            }
        }
        let mut articles = articles;
        for (a, c) in articles.iter_mut().zip(counts) {
            a.inlink_count = c;
        }
        Ok(Corpus { articles, by_id })
    }

    pub fn from_records(records: &[RawRecord]) -> Result<Self> {
        let articles = records
            .par_iter()
            .map(parse_article)
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::from_articles(articles)
    }

    /// Read a JSON Lines corpus. Blank lines are skipped; errors name the
    /// 1-based file line.
    pub fn from_jsonl<R: BufRead>(reader: R) -> Result<Self> {
        let mut records = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io("reading corpus", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: RawRecord =
                serde_json::from_str(&line).map_err(|e| ParseError::InvalidRecord {
                    at: Location {
                        record_line: i + 1,
                        body_line: 0,
                    },
                    message: e.to_string(),
                })?;
            records.push((i + 1, rec));
        }
        let parsed: Vec<Article> = records
            .par_iter()
            .map(|(line, rec)| {
                parse_article(rec).map_err(|e| relocate(e, *line))
            })
            .collect::<std::result::Result<_, _>>()?;
        let mut seen = HashMap::new();
        for ((line, rec), _) in records.iter().zip(&parsed) {
            if let Some(_first) = seen.insert(rec.id.as_str(), *line) {
                return Err(ParseError::DuplicateId {
                    at: Location {
                        record_line: *line,
                        body_line: 0,
                    },
                    id: rec.id.clone(),
                }
                .into());
            }
        }
        Self::from_articles(parsed)
    }

    pub fn get(&self, id: &str) -> Option<&Article> {
        self.by_id.get(id).map(|&i| &self.articles[i])
    }

    pub fn article(&self, id: &str) -> Result<&Article> {
        self.get(id).ok_or_else(|| Error::UnknownArticle(id.to_string()))
    }

    pub fn articles(&self) -> &[Article] {
        &self.articles
    }

    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }
}

fn relocate(e: ParseError, record_line: usize) -> ParseError {
    let fix = |at: Location| Location {
        record_line,
        body_line: at.body_line,
    };
    match e {
        ParseError::MalformedHeading { at, line } => ParseError::MalformedHeading { at: fix(at), line },
        ParseError::UnclosedLink { at } => ParseError::UnclosedLink { at: fix(at) },
        ParseError::EmptyLinkTarget { at } => ParseError::EmptyLinkTarget { at: fix(at) },
        ParseError::EmptyLinkText { at } => ParseError::EmptyLinkText { at: fix(at) },
        ParseError::DuplicateId { at, id } => ParseError::DuplicateId { at: fix(at), id },
        ParseError::InvalidRecord { at, message } => ParseError::InvalidRecord { at: fix(at), message },
    }
}
