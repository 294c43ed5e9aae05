use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{section_is_trivial, tokenize::token_count, Article};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    MinimalProse,
    LinkDense,
    TooShort,
    TooFewSections,
    TooFewInlinks,
    TooManyInlinks,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectReason::MinimalProse => "minimal_prose",
            RejectReason::LinkDense => "link_dense",
            RejectReason::TooShort => "too_short",
            RejectReason::TooFewSections => "too_few_sections",
            RejectReason::TooFewInlinks => "too_few_inlinks",
            RejectReason::TooManyInlinks => "too_many_inlinks",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FilterDecision {
    pub article_id: String,
    pub accepted: bool,
    pub reason: Option<RejectReason>,
}

/// Thresholds for keeping long, multi-faceted, moderately linked targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub min_tokens: usize,
    pub min_sections: usize,
    pub min_inlinks: usize,
    pub max_inlinks: usize,
    /// Rejected when link characters exceed this share of all characters.
    pub max_link_fraction: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_tokens: 500,
            min_sections: 5,
            min_inlinks: 25,
            max_inlinks: 5000,
            max_link_fraction: 0.5,
        }
    }
}

pub fn link_fraction(article: &Article) -> f64 {
    let total = article.char_len();
    if total == 0 {
        return 0.0;
    }
    let linked: usize = article.links.iter().map(|l| l.span.len()).sum();
    linked as f64 / total as f64
}

pub fn non_trivial_sections(article: &Article) -> usize {
    (0..article.sections.len())
        .filter(|&i| !section_is_trivial(article, i))
        .count()
}

fn is_minimal_prose(title: &str) -> bool {
    let t = title.trim();
    t.starts_with("List of") || t.ends_with("(disambiguation)")
}

/// Checks run in a fixed order; the first failing one is the reason.
pub fn is_valid_target(article: &Article, config: &FilterConfig) -> FilterDecision {
    let reason = if is_minimal_prose(&article.title) {
        Some(RejectReason::MinimalProse)
    } else if link_fraction(article) > config.max_link_fraction {
        Some(RejectReason::LinkDense)
    } else if token_count(&article.text) < config.min_tokens {
        Some(RejectReason::TooShort)
    } else if non_trivial_sections(article) < config.min_sections {
        Some(RejectReason::TooFewSections)
    } else if article.inlink_count < config.min_inlinks {
        Some(RejectReason::TooFewInlinks)
    } else if article.inlink_count > config.max_inlinks {
        Some(RejectReason::TooManyInlinks)
    } else {
        None
    };
    FilterDecision {
        article_id: article.id.clone(),
        accepted: reason.is_none(),
        reason,
    }
}
