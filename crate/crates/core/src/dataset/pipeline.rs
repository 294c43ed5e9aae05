use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use log::{debug, warn};
use rayon::prelude::*;
use serde::Serialize;

use super::filter::{is_valid_target, FilterConfig, FilterDecision, RejectReason};
use super::split::{assign_split, example_id, Split};
use super::Example;
use crate::corpus::{candidate_anchors, normalize, retained_paragraphs, Article, Corpus, Link};
use crate::error::{Error, Result};

/// A link whose fragment resolved to a section of its target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchoredLink {
    pub link: Link,
    /// Index into the target's `sections`.
    pub section: usize,
}

/// Per-stage counts of one build.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BuildReport {
    pub articles: usize,
    pub targets_accepted: usize,
    pub targets_rejected: BTreeMap<RejectReason, usize>,
    pub links_total: usize,
    pub links_with_fragment: usize,
    pub dropped_self_link: usize,
    pub dropped_unknown_target: usize,
    pub dropped_rejected_target: usize,
    pub dropped_unmatched_fragment: usize,
    /// Step 1 output.
    pub anchored_links: usize,
    pub dedup_removed: usize,
    /// Step 2 output.
    pub deduplicated: usize,
    pub trivial_removed: usize,
    /// Step 3 output.
    pub non_trivial: usize,
    pub dropped_empty_section: usize,
    pub examples: usize,
    pub splits: BTreeMap<Split, usize>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub examples: Vec<Example>,
    pub report: BuildReport,
}

fn fragment_key(s: &str) -> String {
    normalize(&s.replace('_', " "))
}

/// Step 1. Links with a fragment naming a section of an accepted target,
/// in canonical `(source_id, begin)` order.
pub fn extract_anchored_links(
    corpus: &Corpus,
    accepted: &HashSet<String>,
    report: &mut BuildReport,
) -> Vec<AnchoredLink> {
    let mut sources: Vec<&Article> = corpus.articles().iter().collect();
    sources.sort_by(|a, b| a.id.cmp(&b.id));

    let mut out = Vec::new();
    for source in sources {
        let mut links: Vec<&Link> = source.links.iter().collect();
        links.sort_by_key(|l| l.span.begin);
        for link in links {
            report.links_total += 1;
            let Some(fragment) = &link.target_fragment else {
                continue;
            };
            report.links_with_fragment += 1;
            if link.target_id == source.id {
                report.dropped_self_link += 1;
                continue;
            }
            let Some(target) = corpus.get(&link.target_id) else {
                report.dropped_unknown_target += 1;
                continue;
            };
            if !accepted.contains(&target.id) {
                report.dropped_rejected_target += 1;
                continue;
            }
            let key = fragment_key(fragment);
            match target.sections.iter().position(|s| normalize(&s.heading) == key) {
                Some(section) => out.push(AnchoredLink {
                    link: link.clone(),
                    section,
                }),
                None => {
                    report.dropped_unmatched_fragment += 1;
                    warn!(
                        "{}: fragment {:?} names no section of {:?}; dropped",
                        source.id, fragment, target.id
                    );
                }
            }
        }
    }
    report.anchored_links = out.len();
    out
}

/// Step 2. First link per `(normalized text, target)`, input order kept.
pub fn deduplicate(links: Vec<AnchoredLink>) -> Vec<AnchoredLink> {
    let mut seen = HashSet::new();
    links
        .into_iter()
        .filter(|l| seen.insert((normalize(&l.link.text), l.link.target_id.clone())))
        .collect()
}

/// Step 3. Drop links whose text just repeats the linked heading.
pub fn filter_trivial(links: Vec<AnchoredLink>, corpus: &Corpus) -> Vec<AnchoredLink> {
    links
        .into_iter()
        .filter(|l| {
            let target = corpus
                .get(&l.link.target_id)
                .expect("anchored links point at corpus articles");
            normalize(&l.link.text) != normalize(&target.sections[l.section].heading)
        })
        .collect()
}

/// Candidate indices of every retained paragraph inside the linked section
/// or any of its subsections.
pub fn expand_section_labels(link: &AnchoredLink, target: &Article) -> BTreeSet<usize> {
    retained_paragraphs(target)
        .into_iter()
        .enumerate()
        .filter(|&(_, p)| {
            target.paragraphs[p]
                .section
                .is_some_and(|s| target.section_is_within(s, link.section))
        })
        .map(|(candidate, _)| candidate)
        .collect()
}

/// Run the whole pipeline: filter targets, extract, deduplicate, drop trivial
/// links, expand section labels to paragraphs, split.
pub fn build_dataset(corpus: &Corpus, config: &FilterConfig) -> Result<Dataset> {
    let mut report = BuildReport {
        articles: corpus.len(),
        ..Default::default()
    };

    let decisions: Vec<FilterDecision> = corpus
        .articles()
        .par_iter()
        .map(|a| is_valid_target(a, config))
        .collect();
    let mut accepted = HashSet::new();
    for d in decisions {
        match d.reason {
            None => {
                accepted.insert(d.article_id);
            }
            Some(r) => *report.targets_rejected.entry(r).or_default() += 1,
        }
    }
    report.targets_accepted = accepted.len();

    let anchored = extract_anchored_links(corpus, &accepted, &mut report);
    let deduped = deduplicate(anchored);
    report.dedup_removed = report.anchored_links - deduped.len();
    report.deduplicated = deduped.len();
    let kept = filter_trivial(deduped, corpus);
    report.trivial_removed = report.deduplicated - kept.len();
    report.non_trivial = kept.len();

    let mut candidate_cache: HashMap<&str, _> = HashMap::new();
    let mut examples = Vec::with_capacity(kept.len());
    for l in kept {
        let target = corpus.article(&l.link.target_id)?;
        let relevant = expand_section_labels(&l, target);
        if relevant.is_empty() {
            report.dropped_empty_section += 1;
            debug!(
                "{} -> {}#{}: linked section has no candidate paragraphs; dropped",
                l.link.source_id, target.id, target.sections[l.section].heading
            );
            continue;
        }
        let candidates = match candidate_cache.get(target.id.as_str()) {
            Some(c) => Vec::clone(c),
            None => {
                let c = candidate_anchors(target)?;
                candidate_cache.insert(target.id.as_str(), c.clone());
                c
            }
        };
        let id = example_id(&l.link.source_id, l.link.span.begin, l.link.span.end, &target.id);
        let split = assign_split(&id);
        *report.splits.entry(split).or_default() += 1;
        examples.push(Example {
            example_id: id,
            source_id: l.link.source_id,
            link_span: l.link.span,
            link_text: l.link.text,
            target_id: l.link.target_id,
            candidates,
            relevant,
            split,
            relevant_by_annotator: None,
        });
    }
    report.examples = examples.len();
    if examples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(Dataset { examples, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_article, RawRecord, Span};

    fn article(id: &str, body: &str) -> Article {
        parse_article(&RawRecord {
            id: id.into(),
            title: id.into(),
            body: body.into(),
        })
        .unwrap()
    }

    fn anchored(source: &str, begin: usize, text: &str, target: &str, section: usize) -> AnchoredLink {
        AnchoredLink {
            link: Link {
                source_id: source.into(),
                span: Span::new(begin, begin + text.chars().count()),
                text: text.into(),
                target_id: target.into(),
                target_fragment: Some("x".into()),
            },
            section,
        }
    }

    fn corpus_with(target_body: &str, source_body: &str) -> Corpus {
        Corpus::from_articles(vec![article("X", target_body), article("S", source_body)]).unwrap()
    }

    #[test]
    fn extraction_rules() {
        let c = corpus_with(
            "lead\n\n== History ==\nh",
            "a [[X#History|one]] b [[X|two]] c [[X#history|three]] d [[X#Nope|four]] e [[Y#History|five]] [[S#Other|six]]",
        );
        let accepted: HashSet<String> = ["X".to_string()].into();
        let mut r = BuildReport::default();
        let got = extract_anchored_links(&c, &accepted, &mut r);
        let texts: Vec<_> = got.iter().map(|l| l.link.text.as_str()).collect();
        assert_eq!(texts, ["one", "three"]);
        assert_eq!(r.links_total, 6);
        assert_eq!(r.links_with_fragment, 5);
        assert_eq!(r.dropped_unmatched_fragment, 1);
        assert_eq!(r.dropped_unknown_target, 1);
        assert_eq!(r.dropped_self_link, 1);

        let mut r = BuildReport::default();
        assert!(extract_anchored_links(&c, &HashSet::new(), &mut r).is_empty());
        assert_eq!(r.dropped_rejected_target, 3);
    }

    #[test]
    fn underscore_fragments() {
        let c = corpus_with("lead\n\n== Early life ==\nh", "[[X#Early_life|childhood]]");
        let accepted: HashSet<String> = ["X".to_string()].into();
        let got = extract_anchored_links(&c, &accepted, &mut BuildReport::default());
        assert_eq!(got.len(), 1);
    }

    #[test]
    fn dedup_cases() {
        let two = vec![
            anchored("A", 0, "Gregory-Aland", "Bm", 0),
            anchored("B", 5, "Gregory-Aland", "Bm", 0),
        ];
        assert_eq!(deduplicate(two).len(), 1);
        let diff = vec![
            anchored("A", 0, "Gregory-Aland", "Bm", 0),
            anchored("B", 5, "Gregory-Aland", "Other", 0),
        ];
        assert_eq!(deduplicate(diff).len(), 2);

        let mixed = vec![
            anchored("A", 0, "dup", "T", 0),
            anchored("A", 9, "u1", "T", 0),
            anchored("B", 1, "DUP", "T", 1),
            anchored("C", 2, "u2", "T", 0),
            anchored("D", 8, "  Dup ", "T", 0),
        ];
        // brute-force key grouping
        let mut keys: Vec<(String, String)> = mixed
            .iter()
            .map(|l| (normalize(&l.link.text), l.link.target_id.clone()))
            .collect();
        keys.sort();
        keys.dedup();
        let out = deduplicate(mixed);
        assert_eq!(out.len(), keys.len());
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].link.source_id, "A");
        assert_eq!(out[0].link.span.begin, 0);
    }

    #[test]
    fn trivial_filter() {
        let c = corpus_with(
            "lead\n\n== Gregory\u{2013}Aland ==\ng\n\n== quarter-final ==\nq",
            "x",
        );
        let links = vec![
            anchored("S", 0, "Gregory-Aland", "X", 0),
            anchored("S", 20, "quarter-final second leg", "X", 1),
        ];
        let out = filter_trivial(links, &c);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].link.text, "quarter-final second leg");
        assert!(filter_trivial(Vec::new(), &c).is_empty());
    }

    #[test]
    fn expansion() {
        let t = article(
            "X",
            "lead\n\n== A ==\na1\n\na2\n\na3\n\n=== A.1 ===\nb1\n\nb2\n\n== References ==\nr\n\n== C ==\nc",
        );
        let sec = |name: &str| t.sections.iter().position(|s| s.heading == name).unwrap();
        let l = anchored("S", 0, "t", "X", sec("A.1"));
        assert_eq!(expand_section_labels(&l, &t), BTreeSet::from([4, 5]));
        let l = anchored("S", 0, "t", "X", sec("A"));
        // oracle: span containment against the candidate list
        let cands = candidate_anchors(&t).unwrap();
        let want: BTreeSet<usize> = cands
            .iter()
            .filter(|c| t.sections[sec("A")].span.contains(&c.span))
            .map(|c| c.index)
            .collect();
        assert_eq!(want.len(), 5);
        assert_eq!(expand_section_labels(&l, &t), want);
        let l = anchored("S", 0, "t", "X", sec("References"));
        assert!(expand_section_labels(&l, &t).is_empty());
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let c = corpus_with("lead", "no anchored links here [[X]]");
        assert!(matches!(
            build_dataset(&c, &FilterConfig::default()),
            Err(Error::EmptyDataset)
        ));
    }
}
