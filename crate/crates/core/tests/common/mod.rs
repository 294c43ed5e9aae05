#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use anchorkit::bm25::{query_tokens, rank_bm25, Bm25Params, QueryMode};
use anchorkit::corpus::{normalize, tokenize, Article, Corpus, RawRecord};
use anchorkit::dataset::{Example, FilterConfig};
use rand::seq::IndexedRandom;
use rand::Rng;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

pub fn fixture_corpus() -> Corpus {
    let f = File::open(fixtures_dir().join("corpus.jsonl")).expect("fixture corpus");
    Corpus::from_jsonl(BufReader::new(f)).expect("fixture corpus parses")
}

pub fn permissive() -> FilterConfig {
    FilterConfig {
        min_tokens: 0,
        min_sections: 0,
        min_inlinks: 0,
        max_inlinks: usize::MAX,
        max_link_fraction: 1.0,
    }
}

/// Okapi BM25 computed term by term from raw token lists.
pub fn brute_bm25(query: &[String], docs: &[Vec<String>], k1: f64, b: f64) -> Vec<f64> {
    let n = docs.len() as f64;
    let avg = docs.iter().map(Vec::len).sum::<usize>() as f64 / n;
    docs.iter()
        .map(|d| {
            let mut score = 0.0;
            for q in query {
                let df = docs.iter().filter(|x| x.contains(q)).count() as f64;
                let tf = d.iter().filter(|t| *t == q).count() as f64;
                if tf == 0.0 {
                    continue;
                }
                let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                let norm = if avg > 0.0 { d.len() as f64 / avg } else { 0.0 };
                score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * norm));
            }
            score
        })
        .collect()
}

pub fn candidate_tokens(example: &Example, corpus: &Corpus) -> Vec<Vec<String>> {
    let target = corpus.get(&example.target_id).unwrap();
    example
        .candidates
        .iter()
        .map(|c| tokenize(target.slice(c.span)))
        .collect()
}

/// Context query tokens: up to `w` tokens each side of the link, tokens that
/// overlap the link counted as part of it.
pub fn brute_context_tokens(source: &Article, begin: usize, end: usize, w: usize) -> Vec<String> {
    let chars: Vec<char> = source.text.chars().collect();
    let mut toks: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_alphanumeric() {
            let s = i;
            while i < chars.len() && chars[i].is_alphanumeric() {
                i += 1;
            }
            toks.push((s, i));
        } else {
            i += 1;
        }
    }
    let left: Vec<_> = toks.iter().filter(|t| t.1 <= begin).collect();
    let inside: Vec<_> = toks.iter().filter(|t| t.1 > begin && t.0 < end).collect();
    let right: Vec<_> = toks.iter().filter(|t| t.0 >= end).collect();
    left[left.len().saturating_sub(w)..]
        .iter()
        .chain(inside.iter())
        .chain(right.iter().take(w))
        .map(|&&(s, e)| chars[s..e].iter().collect::<String>().to_lowercase())
        .collect()
}

/// The section a fragment resolves to: the first whose heading matches.
pub fn resolve_section(target: &Article, fragment: &str) -> Option<usize> {
    let key = normalize(&fragment.replace('_', " "));
    target.sections.iter().position(|s| normalize(&s.heading) == key)
}

/// Candidate indices whose paragraph lies inside the section's span.
pub fn containment_labels(example: &Example, target: &Article, section: usize) -> BTreeSet<usize> {
    let span = target.sections[section].span;
    example
        .candidates
        .iter()
        .filter(|c| span.contains(&c.span))
        .map(|c| c.index)
        .collect()
}

/// The link (and resolved section) an example was built from.
pub fn origin<'c>(example: &Example, corpus: &'c Corpus) -> (&'c Article, usize) {
    let source = corpus.get(&example.source_id).unwrap();
    let link = source
        .links
        .iter()
        .find(|l| l.span == example.link_span)
        .expect("example link exists in source");
    let target = corpus.get(&link.target_id).unwrap();
    let section = resolve_section(target, link.target_fragment.as_deref().unwrap()).unwrap();
    (target, section)
}

/// Expected (source, link begin) pairs for a permissive build: every
/// fragment link to a known other article, not a list or disambiguation
/// page, whose fragment resolves, first
/// occurrence per (text, target), text differing from the heading, and a
/// section with at least one candidate.
pub fn expected_origins(corpus: &Corpus) -> Vec<(String, usize)> {
    let mut sources: Vec<&Article> = corpus.articles().iter().collect();
    sources.sort_by(|a, b| a.id.cmp(&b.id));
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for s in sources {
        let mut links: Vec<_> = s.links.iter().collect();
        links.sort_by_key(|l| l.span.begin);
        for l in links {
            let Some(frag) = &l.target_fragment else { continue };
            if l.target_id == s.id {
                continue;
            }
            let Some(t) = corpus.get(&l.target_id) else { continue };
            if t.title.starts_with("List of") || t.title.ends_with("(disambiguation)") {
                continue;
            }
            let Some(sec) = resolve_section(t, frag) else { continue };
            if !seen.insert((normalize(&l.text), t.id.clone())) {
                continue;
            }
            if normalize(&l.text) == normalize(&t.sections[sec].heading) {
                continue;
            }
            let Ok(cands) = anchorkit::corpus::candidate_anchors(t) else { continue };
            let span = t.sections[sec].span;
            if !cands.iter().any(|c| span.contains(&c.span)) {
                continue;
            }
            out.push((s.id.clone(), l.span.begin));
        }
    }
    out
}

const HEADINGS: [&str; 10] = [
    "History", "Design", "Early life", "Quarter-final", "Legacy", "References", "See also",
    "Notes", "Café", "Gregory–Aland",
];
const WORDS: [&str; 16] = [
    "river", "bridge", "stone", "iron", "canal", "lock", "harbour", "tide", "mill", "tower",
    "bell", "choir", "market", "ferry", "quay", "wharf",
];

fn words<R: Rng>(rng: &mut R, n: usize) -> String {
    (0..n)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Link display texts that collide with headings and with each other after
/// normalization.
fn link_text<R: Rng>(rng: &mut R) -> String {
    let h = *HEADINGS.choose(rng).unwrap();
    match rng.random_range(0..6) {
        0 => h.to_string(),
        1 => h.to_uppercase(),
        2 if h.contains('-') => h.replace('-', "\u{2013}"),
        2 => h.replace('\u{2013}', "-"),
        3 => format!(" {} ", h.to_lowercase()),
        _ => {
            let n = rng.random_range(1..3);
            words(rng, n)
        }
    }
}

/// A random wiki-lite corpus and the number of links written into it.
pub fn random_corpus<R: Rng>(rng: &mut R) -> (Vec<RawRecord>, usize) {
    let n_targets = rng.random_range(2..5);
    let n_sources = rng.random_range(3..8);
    let mut records = Vec::new();
    let mut links = 0;
    for t in 0..n_targets {
        let mut body = words(rng, 6);
        for _ in 0..rng.random_range(1..8) {
            let level = rng.random_range(1..3);
            let eq = "=".repeat(level + 1);
            body.push_str(&format!("\n\n{eq} {} {eq}", HEADINGS.choose(rng).unwrap()));
            for _ in 0..rng.random_range(0..3) {
                let n = rng.random_range(1..10);
                body.push_str(&format!("\n\n{}", words(rng, n)));
            }
        }
        records.push(RawRecord {
            id: format!("T{t}"),
            title: format!("Target {t}"),
            body,
        });
    }
    for s in 0..n_sources {
        let mut body = String::new();
        for p in 0..rng.random_range(1..5) {
            if p > 0 {
                body.push_str("\n\n");
            }
            for _ in 0..rng.random_range(5..40) {
                let n = rng.random_range(0..3);
                body.push_str(&words(rng, n));
                let target = match rng.random_range(0..20) {
                    0 => "Nowhere".to_string(),
                    1 => format!("S{s}"),
                    _ => format!("T{}", rng.random_range(0..n_targets)),
                };
                let frag = match rng.random_range(0..10) {
                    0 => String::new(),
                    1 => "#Missing".to_string(),
                    2 => format!("#{}", HEADINGS.choose(rng).unwrap().replace(' ', "_")),
                    _ => format!("#{}", HEADINGS.choose(rng).unwrap()),
                };
                body.push_str(&format!(" [[{target}{frag}|{}]] ", link_text(rng).trim()));
                links += 1;
            }
        }
        records.push(RawRecord {
            id: format!("S{s}"),
            title: format!("Source {s}"),
            body,
        });
    }
    (records, links)
}

/// Targets whose paragraphs share no token with any source.
pub fn disjoint_corpus() -> Corpus {
    let mut records = Vec::new();
    for t in 0..4 {
        let mut body = format!("alpha{t} beta{t} gamma{t}.");
        for s in 0..(3 + t) {
            body.push_str(&format!("\n\n== Part {s} ==\ndelta{s} epsilon{t} zeta{s}{t}."));
            body.push_str(&format!("\n\neta{s}{t} theta{t}."));
        }
        records.push(RawRecord {
            id: format!("Target {t}"),
            title: format!("Target {t}"),
            body,
        });
    }
    for s in 0..6 {
        let links: Vec<String> = (0..4)
            .map(|t| format!("[[Target {t}#Part {}|lorem{s}x{t}]]", (s + t) % 3))
            .collect();
        records.push(RawRecord {
            id: format!("Source {s}"),
            title: format!("Zz{s} Qq{s}"),
            body: format!("ipsum dolor {} sit amet.", links.join(" consectetur ")),
        });
    }
    Corpus::from_records(&records).unwrap()
}

/// Assert every score matches the oracle in both query modes; returns the
/// number of scores checked.
pub fn check_against_oracle(corpus: &Corpus, examples: &[Example], params: Bm25Params) -> usize {
    let mut checked = 0;
    for ex in examples {
        let docs = candidate_tokens(ex, corpus);
        let source = corpus.get(&ex.source_id).unwrap();
        for (mode, query) in [
            (QueryMode::Title, tokenize(&source.title)),
            (
                QueryMode::Context,
                brute_context_tokens(source, ex.link_span.begin, ex.link_span.end, 50),
            ),
        ] {
            assert_eq!(query_tokens(ex, corpus, mode, 50).unwrap(), query);
            let want = brute_bm25(&query, &docs, params.k1, params.b);
            let got = rank_bm25(ex, corpus, mode, 50, params).unwrap();
            for (g, w) in got.scores.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-9, "{}: {g} vs {w}", ex.example_id);
                checked += 1;
            }
            if want.iter().all(|&s| s == 0.0) {
                assert_eq!(got.chosen_index, ex.lead_index());
            }
        }
    }
    checked
}
