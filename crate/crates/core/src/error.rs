use std::fmt;


pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Where in a corpus file a parse problem was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    /// 1-based line in the corpus file (0 when parsing a detached record).
    pub record_line: usize,
    /// 1-based line inside the record body (0 when the problem is record-level).
    pub body_line: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.record_line, self.body_line) {
            (0, 0) => write!(f, "record"),
            (0, b) => write!(f, "body line {b}"),
            (r, 0) => write!(f, "line {r}"),
            (r, b) => write!(f, "line {r}, body line {b}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("{at}: malformed heading line {line:?}")]
    MalformedHeading { at: Location, line: String },
    #[error("{at}: unclosed link markup")]
    UnclosedLink { at: Location },
    #[error("{at}: link has an empty target")]
    EmptyLinkTarget { at: Location },
    #[error("{at}: link has an empty display text")]
    EmptyLinkText { at: Location },
    #[error("{at}: duplicate article id {id:?}")]
    DuplicateId { at: Location, id: String },
    #[error("{at}: invalid record: {message}")]
    InvalidRecord { at: Location, message: String },
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("article {0:?} has no candidate paragraphs")]
    EmptyCandidates(String),

    #[error("unknown article {0:?}")]
    UnknownArticle(String),

    #[error("link span {begin}..{end} lies outside article {article:?} (length {len})")]
    SpanOutOfBounds {
        article: String,
        begin: usize,
        end: usize,
        len: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no examples survived the build pipeline")]
    EmptyDataset,

    #[error("all candidate paragraphs are empty after tokenization")]
    EmptyIndex,

    #[error("example {example_id}: {source}")]
    Ranker {
        example_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("scorer protocol error for example {example_id:?} candidate {candidate_index}: {kind}")]
    Protocol {
        example_id: String,
        candidate_index: usize,
        kind: ProtocolFault,
    },

    #[error("scorer protocol error: {0}")]
    ProtocolStream(String),

    #[error("scorer did not answer within {0:?}")]
    Timeout(std::time::Duration),

    #[error("prediction ids do not align with the dataset: missing {missing:?}, duplicate {duplicate:?}, unknown {unknown:?}")]
    Misaligned {
        missing: Vec<String>,
        duplicate: Vec<String>,
        unknown: Vec<String>,
    },

    #[error("report column {dataset:?} mixes inconsistent reports: {detail}")]
    MixedColumn { dataset: String, detail: String },

    #[error("label sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("fragment matches no candidate in article {0:?}")]
    FragmentNoMatch(String),

    #[error("fragment matches candidates {indices:?} in article {article:?}")]
    FragmentAmbiguous { article: String, indices: Vec<usize> },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolFault {
    Missing,
    Duplicate,
    NonFinite,
    Unexpected,
}

impl fmt::Display for ProtocolFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProtocolFault::Missing => "missing score",
            ProtocolFault::Duplicate => "duplicate score",
            ProtocolFault::NonFinite => "non-finite score",
            ProtocolFault::Unexpected => "score for a candidate that was never requested",
        })
    }
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}
