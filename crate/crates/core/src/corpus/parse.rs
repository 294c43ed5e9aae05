//! Wiki-lite markup.
//!
//! Blocks are separated by blank lines. A block is either a heading line
//! `== Heading ==` (two `=` per side is level 1, three is level 2, ...) or a
//! paragraph of one or more lines. Links are `[[Target]]`, `[[Target|text]]`
//! or `[[Target#Heading|text]]` and may not span lines.

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::article::{Article, Link, Paragraph, Section, Span};
use crate::error::{Location, ParseError};

/// One corpus line: `{"id": ..., "title": ..., "body": ...}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: String,
    pub title: String,
    pub body: String,
}

struct InlineLink {
    /// Byte range in the stripped line.
    start: usize,
    end: usize,
    target: String,
    fragment: Option<String>,
}

enum Block<'a> {
    Heading {
        line_no: usize,
        level: usize,
        content: &'a str,
    },
    Paragraph(Vec<(usize, &'a str)>),
}

fn at(body_line: usize) -> Location {
    Location {
        record_line: 0,
        body_line,
    }
}

fn heading_parts(line: &str) -> Option<(usize, &str)> {
    let t = line.trim();
    let open = t.chars().take_while(|&c| c == '=').count();
    let close = t.chars().rev().take_while(|&c| c == '=').count();
    if open < 2 || open != close || t.len() <= open + close {
        return None;
    }
    let content = t[open..t.len() - close].trim();
    if content.is_empty() {
        return None;
    }
    Some((open - 1, content))
}

fn strip_links(line: &str, line_no: usize) -> Result<(String, Vec<InlineLink>), ParseError> {
    let mut out = String::with_capacity(line.len());
    let mut links = Vec::new();
    let mut rest = line;
    while let Some(open) = rest.find("[[") {
        out.push_str(&rest[..open]);
        let after = &rest[open + 2..];
        let close = after
            .find("]]")
            .ok_or(ParseError::UnclosedLink { at: at(line_no) })?;
        let inner = &after[..close];
        if inner.contains("[[") {
            return Err(ParseError::UnclosedLink { at: at(line_no) });
        }
        let (target_part, display) = match inner.split_once('|') {
            Some((t, d)) => (t, d),
            None => (inner, inner),
        };
        let (target, fragment) = match target_part.split_once('#') {
            Some((t, f)) => (t.trim(), Some(f.trim()).filter(|f| !f.is_empty())),
            None => (target_part.trim(), None),
        };
        if target.is_empty() {
            return Err(ParseError::EmptyLinkTarget { at: at(line_no) });
        }
        if display.trim().is_empty() {
            return Err(ParseError::EmptyLinkText { at: at(line_no) });
        }
        let start = out.len();
        out.push_str(display);
        links.push(InlineLink {
            start,
            end: out.len(),
            target: target.to_string(),
            fragment: fragment.map(str::to_string),
        });
        rest = &after[close + 2..];
    }
    out.push_str(rest);
    Ok((out, links))
}

fn split_blocks(body: &str) -> Result<Vec<Block<'_>>, ParseError> {
    let mut blocks = Vec::new();
    let mut para: Vec<(usize, &str)> = Vec::new();
    for (i, raw) in body.split('\n').enumerate() {
        let line_no = i + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            if !para.is_empty() {
                blocks.push(Block::Paragraph(std::mem::take(&mut para)));
            }
            continue;
        }
        if line.trim_start().starts_with('=') {
            let (level, content) =
                heading_parts(line).ok_or_else(|| ParseError::MalformedHeading {
                    at: at(line_no),
                    line: line.to_string(),
                })?;
            if !para.is_empty() {
                blocks.push(Block::Paragraph(std::mem::take(&mut para)));
            }
            blocks.push(Block::Heading {
                line_no,
                level,
                content,
            });
            continue;
        }
        para.push((line_no, line));
    }
    if !para.is_empty() {
        blocks.push(Block::Paragraph(para));
    }
    Ok(blocks)
}

struct Builder {
    source_id: String,
    text: String,
    chars: usize,
    links: Vec<Link>,
}

impl Builder {
    fn push_str(&mut self, s: &str) {
        self.text.push_str(s);
        self.chars += s.chars().count();
    }

    /// Appends a stripped line and records its links against the running offsets.
    fn push_line(&mut self, stripped: &str, links: Vec<InlineLink>) {
        let base = self.chars;
        for l in links {
            let begin = base + stripped[..l.start].chars().count();
            let text = stripped[l.start..l.end].to_string();
            let end = begin + text.chars().count();
            self.links.push(Link {
                source_id: self.source_id.clone(),
                span: Span::new(begin, end),
                text,
                target_id: l.target,
                target_fragment: l.fragment,
            });
        }
        self.push_str(stripped);
    }
}

/// Parse one record. Errors carry the offending body line; the caller
/// fills in the record's line in the corpus file.
pub fn parse_article(record: &RawRecord) -> Result<Article, ParseError> {
    if record.id.trim().is_empty() {
        return Err(ParseError::InvalidRecord {
            at: at(0),
            message: "empty article id".into(),
        });
    }
    let body: String = record.body.nfc().collect();
    let blocks = split_blocks(&body)?;

    let mut b = Builder {
        source_id: record.id.clone(),
        text: String::new(),
        chars: 0,
        links: Vec::new(),
    };
    let mut sections: Vec<Section> = Vec::new();
    let mut paragraphs = Vec::new();
    let mut open: Vec<usize> = Vec::new();

    for (n, block) in blocks.iter().enumerate() {
        if n > 0 {
            b.push_str("\n\n");
        }
        let begin = b.chars;
        match block {
            Block::Heading {
                line_no,
                level,
                content,
            } => {
                let (stripped, links) = strip_links(content, *line_no)?;
                b.push_line(&stripped, links);
                while open.last().is_some_and(|&i| sections[i].level >= *level) {
                    open.pop();
                }
                let parent = open.last().copied();
                let mut heading_path = parent
                    .map(|p| sections[p].heading_path.clone())
                    .unwrap_or_default();
                heading_path.push(stripped.clone());
                sections.push(Section {
                    heading: stripped,
                    level: *level,
                    heading_path,
                    span: Span::new(begin, b.chars),
                    heading_span: Span::new(begin, b.chars),
                    parent,
                });
                open.push(sections.len() - 1);
            }
            Block::Paragraph(lines) => {
                for (k, (line_no, line)) in lines.iter().enumerate() {
                    if k > 0 {
                        b.push_str("\n");
                    }
                    let (stripped, links) = strip_links(line, *line_no)?;
                    b.push_line(&stripped, links);
                }
                paragraphs.push(Paragraph {
                    span: Span::new(begin, b.chars),
                    section: open.last().copied(),
                });
            }
        }
        for &i in &open {
            sections[i].span.end = b.chars;
        }
    }

    Ok(Article::new(
        record.id.clone(),
        record.title.clone(),
        b.text,
        sections,
        paragraphs,
        b.links,
    ))
}

/// Re-emit an article as wiki-lite markup. Every link is written in its
/// explicit `[[Target#Fragment|text]]` form, so `parse_article` of the
/// output reproduces the article.
pub fn to_record(article: &Article) -> RawRecord {
    enum Item {
        Heading(usize),
        Paragraph(usize),
    }
    let mut items: Vec<(usize, Item)> = article
        .sections
        .iter()
        .enumerate()
        .map(|(i, s)| (s.heading_span.begin, Item::Heading(i)))
        .chain(
            article
                .paragraphs
                .iter()
                .enumerate()
                .map(|(i, p)| (p.span.begin, Item::Paragraph(i))),
        )
        .collect();
    items.sort_by_key(|(begin, _)| *begin);

    let render = |span: Span| -> String {
        let mut out = String::new();
        let mut cursor = span.begin;
        for l in article.links.iter().filter(|l| span.contains(&l.span)) {
            out.push_str(article.slice(Span::new(cursor, l.span.begin)));
            out.push_str("[[");
            out.push_str(&l.target_id);
            if let Some(f) = &l.target_fragment {
                out.push('#');
                out.push_str(f);
            }
            out.push('|');
            out.push_str(&l.text);
            out.push_str("]]");
            cursor = l.span.end;
        }
        out.push_str(article.slice(Span::new(cursor, span.end)));
        out
    };

    let blocks: Vec<String> = items
        .into_iter()
        .map(|(_, item)| match item {
            Item::Heading(i) => {
                let s = &article.sections[i];
                let marks = "=".repeat(s.level + 1);
                format!("{marks} {} {marks}", render(s.heading_span))
            }
            Item::Paragraph(i) => render(article.paragraphs[i].span),
        })
        .collect();

    RawRecord {
        id: article.id.clone(),
        title: article.title.clone(),
        body: blocks.join("\n\n"),
    }
}

/// Parsed structure as pretty JSON, for golden files and debugging.
pub fn debug_json(article: &Article) -> String {
    serde_json::to_string_pretty(article).expect("article serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(body: &str) -> RawRecord {
        RawRecord {
            id: "A".into(),
            title: "A".into(),
            body: body.into(),
        }
    }

    #[test]
    fn basic_record() {
        let a = parse_article(&rec("Intro para.\n\n== History ==\nSee [[Rome|the city]].")).unwrap();
        assert_eq!(a.paragraphs.len(), 2);
        assert_eq!(a.sections.len(), 1);
        assert_eq!(a.sections[0].heading, "History");
        assert_eq!(a.sections[0].level, 1);
        assert_eq!(a.links.len(), 1);
        assert_eq!(a.links[0].text, "the city");
        assert_eq!(a.links[0].target_id, "Rome");
        assert_eq!(a.links[0].target_fragment, None);
        assert_eq!(a.slice(a.links[0].span), "the city");
        assert_eq!(a.text, "Intro para.\n\nHistory\n\nSee the city.");
        assert_eq!(a.paragraphs[0].section, None);
        assert_eq!(a.paragraphs[1].section, Some(0));
    }

    #[test]
    fn fragment_link() {
        let a = parse_article(&rec(
            "The first hotel in London with [[Elevator#History|hydraulic lifts]].",
        ))
        .unwrap();
        let l = &a.links[0];
        assert_eq!(l.target_id, "Elevator");
        assert_eq!(l.target_fragment.as_deref(), Some("History"));
        assert_eq!(l.text, "hydraulic lifts");
    }

    #[test]
    fn bare_link_displays_inner_text() {
        let a = parse_article(&rec("Go to [[Rome]] and [[Paris#Food]].")).unwrap();
        assert_eq!(a.links[0].text, "Rome");
        assert_eq!(a.links[1].text, "Paris#Food");
        assert_eq!(a.links[1].target_fragment.as_deref(), Some("Food"));
    }

    #[test]
    fn single_paragraph() {
        let a = parse_article(&rec("Just one paragraph here.")).unwrap();
        assert_eq!(a.paragraphs.len(), 1);
        assert!(a.sections.is_empty());
    }

    #[test]
    fn nested_sections() {
        let body = "Lead.\n\n== A ==\np1\n\n=== B ===\np2\n\n== C ==\np3";
        let a = parse_article(&rec(body)).unwrap();
        assert_eq!(a.sections.len(), 3);
        assert_eq!(a.sections[1].heading_path, ["A", "B"]);
        assert_eq!(a.sections[1].parent, Some(0));
        assert_eq!(a.sections[2].parent, None);
        assert!(a.sections[0].span.contains(&a.sections[1].span));
        assert_eq!(a.slice(a.sections[0].span), "A\n\np1\n\nB\n\np2");
        assert_eq!(a.paragraphs[2].section, Some(1));
    }

    #[test]
    fn multi_line_paragraph_and_unicode_offsets() {
        let a = parse_article(&rec("Zürich is\nnear [[Baden|Bädén]] ok.")).unwrap();
        assert_eq!(a.paragraphs.len(), 1);
        let l = &a.links[0];
        assert_eq!(l.span, Span::new(15, 20));
        assert_eq!(a.slice(l.span), "Bädén");
    }

    #[test]
    fn errors_name_the_line() {
        let e = parse_article(&rec("ok\n\n== Bad =\nx")).unwrap_err();
        assert!(matches!(e, ParseError::MalformedHeading { ref at, .. } if at.body_line == 3));
        let e = parse_article(&rec("ok\nsee [[Rome and more")).unwrap_err();
        assert!(matches!(e, ParseError::UnclosedLink { ref at } if at.body_line == 2));
        let e = parse_article(&rec("[[Rome\n]]")).unwrap_err();
        assert!(matches!(e, ParseError::UnclosedLink { .. }));
        let e = parse_article(&rec("[[|x]]")).unwrap_err();
        assert!(matches!(e, ParseError::EmptyLinkTarget { .. }));
        let e = parse_article(&rec("== ==")).unwrap_err();
        assert!(matches!(e, ParseError::MalformedHeading { .. }));
        let e = parse_article(&rec("= Title =")).unwrap_err();
        assert!(matches!(e, ParseError::MalformedHeading { .. }));
    }

    #[test]
    fn link_in_heading() {
        let a = parse_article(&rec("== About [[Rome|the city]] ==\ntext")).unwrap();
        assert_eq!(a.sections[0].heading, "About the city");
        assert_eq!(a.slice(a.links[0].span), "the city");
        let again = parse_article(&to_record(&a)).unwrap();
        assert_eq!(again, a);
    }

    #[test]
    fn deterministic() {
        let r = rec("Intro.\n\n== H ==\n[[X#h|y]] z\n\n=== I ===\nw");
        assert_eq!(debug_json(&parse_article(&r).unwrap()), debug_json(&parse_article(&r).unwrap()));
    }
}
