use serde::{Deserialize, Serialize};

/// Half-open character range `[begin, end)` into an article's plain text.
///
/// Offsets count Unicode scalar values, not bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct Span {
    pub begin: usize,
    pub end: usize,
}

impl Span {
    pub fn new(begin: usize, end: usize) -> Self {
        Span { begin, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.begin)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.begin
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.begin <= other.begin && other.end <= self.end
    }
}

impl From<(usize, usize)> for Span {
    fn from((begin, end): (usize, usize)) -> Self {
        Span { begin, end }
    }
}

impl From<Span> for (usize, usize) {
    fn from(s: Span) -> Self {
        (s.begin, s.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Section {
    pub heading: String,
    pub level: usize,
    /// Ancestor headings, outermost first, ending with this heading.
    pub heading_path: Vec<String>,
    /// From the heading's first character to the end of the section's last block.
    pub span: Span,
    /// Span of the heading line itself.
    pub heading_span: Span,
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Paragraph {
    pub span: Span,
    /// Innermost enclosing section; `None` for the lead region.
    pub section: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Link {
    pub source_id: String,
    pub span: Span,
    pub text: String,
    pub target_id: String,
    pub target_fragment: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateAnchor {
    pub index: usize,
    pub span: Span,
    pub heading_path: Vec<String>,
    pub is_lead: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Article {
    pub id: String,
    pub title: String,
    pub text: String,
    pub sections: Vec<Section>,
    pub paragraphs: Vec<Paragraph>,
    pub links: Vec<Link>,
    pub inlink_count: usize,
    /// Byte offset of every char boundary, plus `text.len()` at the end.
    #[serde(skip)]
    pub(crate) boundaries: Vec<usize>,
}

impl Article {
    pub(crate) fn new(
        id: String,
        title: String,
        text: String,
        sections: Vec<Section>,
        paragraphs: Vec<Paragraph>,
        links: Vec<Link>,
    ) -> Self {
        let boundaries = char_boundaries(&text);
        Article {
            id,
            title,
            text,
            sections,
            paragraphs,
            links,
            inlink_count: 0,
            boundaries,
        }
    }

    /// Length of the plain text in characters.
    pub fn char_len(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// Text covered by `span`. Panics if the span is outside the article.
    pub fn slice(&self, span: Span) -> &str {
        &self.text[self.boundaries[span.begin]..self.boundaries[span.end]]
    }

    pub fn try_slice(&self, span: Span) -> Option<&str> {
        (span.begin <= span.end && span.end <= self.char_len()).then(|| self.slice(span))
    }

    pub fn byte_offset(&self, char_offset: usize) -> usize {
        self.boundaries[char_offset]
    }

    /// Char offset of a byte offset that sits on a char boundary.
    pub fn char_offset(&self, byte_offset: usize) -> usize {
        self.boundaries
            .binary_search(&byte_offset)
            .expect("byte offset must lie on a char boundary")
    }

    /// Innermost section whose span contains `span`.
    pub fn section_containing(&self, span: Span) -> Option<usize> {
        self.sections
            .iter()
            .enumerate()
            .filter(|(_, s)| s.span.contains(&span))
            .max_by_key(|(_, s)| s.level)
            .map(|(i, _)| i)
    }

    /// Whether `ancestor` is `section` or one of its parents.
    pub fn section_is_within(&self, section: usize, ancestor: usize) -> bool {
        let mut cur = Some(section);
        while let Some(i) = cur {
            if i == ancestor {
                return true;
            }
            cur = self.sections[i].parent;
        }
        false
    }

    pub fn heading_path_of(&self, section: Option<usize>) -> Vec<String> {
        section
            .map(|i| self.sections[i].heading_path.clone())
            .unwrap_or_default()
    }
}

pub(crate) fn char_boundaries(text: &str) -> Vec<usize> {
    let mut b: Vec<usize> = text.char_indices().map(|(i, _)| i).collect();
    b.push(text.len());
    b
}
