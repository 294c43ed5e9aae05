//! Anchor prediction on wiki-style corpora: parse articles, build a dataset
//! of links that point into specific sections, rank candidate paragraphs,
//! and evaluate.

pub mod bm25;
pub mod corpus;
pub mod dataset;
mod error;
pub mod eval;
pub mod fragment;
pub mod ranking;
pub mod stats;

pub use error::{Error, Location, ParseError, ProtocolFault, Result};
