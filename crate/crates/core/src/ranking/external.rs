//! Client for an out-of-process scorer speaking line-delimited JSON.
//!
//! The client writes one request per (example, candidate) and then
//! `{"done": true}`. The scorer answers each request exactly once, in any
//! order, and finishes with its own `{"done": true}` (or by closing the
//! stream). Requests are written from a separate thread so a scorer that
//! answers eagerly never deadlocks on full pipes.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::net::{Shutdown, TcpStream};
use std::process::{Child, Command, Stdio};
use std::str::FromStr;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::query::{serialize_query, QueryLimits};
use super::{Prediction, Ranker};
use crate::corpus::Corpus;
use crate::dataset::Example;
use crate::error::{Error, ProtocolFault, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub example_id: String,
    pub candidate_index: usize,
    pub query: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub example_id: String,
    pub candidate_index: usize,
    pub score: f64,
}

#[derive(Serialize)]
struct Done {
    done: bool,
}

/// Where the scorer lives: `tcp://host:port`, or a command line
/// (optionally prefixed with `cmd:`) to spawn as a child process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Command(Vec<String>),
    Tcp(String),
}

impl FromStr for Endpoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(addr) = s.strip_prefix("tcp://").or_else(|| s.strip_prefix("tcp:")) {
            return Ok(Endpoint::Tcp(addr.to_string()));
        }
        let cmd = s.strip_prefix("cmd:").unwrap_or(s);
        let argv: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
        if argv.is_empty() {
            return Err(Error::InvalidArgument("empty scorer endpoint".into()));
        }
        Ok(Endpoint::Command(argv))
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Command(argv) => write!(f, "cmd:{}", argv.join(" ")),
            Endpoint::Tcp(addr) => write!(f, "tcp://{addr}"),
        }
    }
}

enum Conn {
    Child(Child),
    Tcp(TcpStream),
}

impl Conn {
    fn close(self) {
        match self {
            Conn::Child(mut c) => {
                let _ = c.kill();
                let _ = c.wait();
            }
            Conn::Tcp(s) => {
                let _ = s.shutdown(Shutdown::Both);
            }
        }
    }
}

type Reader = Box<dyn BufRead + Send>;
type Writer = Box<dyn FnOnce(Vec<ScoreRequest>) -> std::io::Result<()> + Send>;

fn open(endpoint: &Endpoint) -> Result<(Conn, Reader, Writer)> {
    match endpoint {
        Endpoint::Command(argv) => {
            let mut child = Command::new(&argv[0])
                .args(&argv[1..])
                .stdin(Stdio::piped())
                .stdout(Stdio::piped())
                .stderr(Stdio::inherit())
                .spawn()
                .map_err(|e| Error::io(format!("spawning scorer {:?}", argv[0]), e))?;
            let stdin = child.stdin.take().expect("piped stdin");
            let stdout = child.stdout.take().expect("piped stdout");
            let writer: Writer = Box::new(move |reqs| {
                let mut w = std::io::BufWriter::new(stdin);
                write_requests(&mut w, &reqs)
                // dropping the writer closes the child's stdin
            });
            Ok((Conn::Child(child), Box::new(BufReader::new(stdout)), writer))
        }
        Endpoint::Tcp(addr) => {
            let stream = TcpStream::connect(addr)
                .map_err(|e| Error::io(format!("connecting to scorer at {addr}"), e))?;
            let write_half = stream
                .try_clone()
                .map_err(|e| Error::io("cloning scorer socket", e))?;
            let read_half = stream
                .try_clone()
                .map_err(|e| Error::io("cloning scorer socket", e))?;
            let writer: Writer = Box::new(move |reqs| {
                let mut w = std::io::BufWriter::new(&write_half);
                write_requests(&mut w, &reqs)?;
                drop(w);
                write_half.shutdown(Shutdown::Write)
            });
            Ok((Conn::Tcp(stream), Box::new(BufReader::new(read_half)), writer))
        }
    }
}

fn write_requests<W: Write>(w: &mut W, reqs: &[ScoreRequest]) -> std::io::Result<()> {
    for r in reqs {
        serde_json::to_writer(&mut *w, r)?;
        w.write_all(b"\n")?;
    }
    serde_json::to_writer(&mut *w, &Done { done: true })?;
    w.write_all(b"\n")?;
    w.flush()
}

enum Line {
    Done,
    Score {
        example_id: String,
        candidate_index: usize,
        score: f64,
    },
}

fn parse_line(line: &str) -> Result<Line> {
    let value: serde_json::Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(first) => {
            // bare NaN / Infinity tokens, as emitted by some JSON encoders
            let bare = Regex::new(r"(?P<pre>[:\[,]\s*)(?P<tok>-?(?:NaN|Infinity|inf))\b")
                .expect("valid regex");
            let patched = bare.replace_all(line, "${pre}\"${tok}\"");
            serde_json::from_str(&patched).map_err(|_| {
                Error::ProtocolStream(format!("malformed response line {line:?}: {first}"))
            })?
        }
    };
    if value.get("done").and_then(|d| d.as_bool()) == Some(true) {
        return Ok(Line::Done);
    }
    let malformed = || Error::ProtocolStream(format!("malformed response line {line:?}"));
    let example_id = value
        .get("example_id")
        .and_then(|v| v.as_str())
        .ok_or_else(malformed)?
        .to_string();
    let candidate_index = value
        .get("candidate_index")
        .and_then(|v| v.as_u64())
        .ok_or_else(malformed)? as usize;
    let score = match value.get("score") {
        Some(serde_json::Value::Number(n)) => n.as_f64().unwrap_or(f64::NAN),
        Some(serde_json::Value::String(s)) => s.trim().parse::<f64>().unwrap_or(f64::NAN),
        Some(serde_json::Value::Null) | None => f64::NAN,
        Some(_) => return Err(malformed()),
    };
    Ok(Line::Score {
        example_id,
        candidate_index,
        score,
    })
}

/// Send `requests` in one session and return one finite score per request,
/// keyed by `(example_id, candidate_index)`. `timeout` bounds the wait for
/// each response line.
pub fn score_session(
    endpoint: &Endpoint,
    requests: Vec<ScoreRequest>,
    timeout: Duration,
) -> Result<HashMap<(String, usize), f64>> {
    let expected: Vec<(String, usize)> = requests
        .iter()
        .map(|r| (r.example_id.clone(), r.candidate_index))
        .collect();
    let mut scores: HashMap<(String, usize), Option<f64>> =
        expected.iter().cloned().map(|k| (k, None)).collect();

    let (conn, reader, writer) = open(endpoint)?;
    let write_thread = thread::spawn(move || writer(requests));
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in reader.lines() {
            if tx.send(line).is_err() {
                break;
            }
        }
    });

    let result = (|| -> Result<()> {
        loop {
            let line = match rx.recv_timeout(timeout) {
                Ok(Ok(line)) => line,
                Ok(Err(e)) => return Err(Error::io("reading scorer output", e)),
                Err(mpsc::RecvTimeoutError::Timeout) => return Err(Error::Timeout(timeout)),
                Err(mpsc::RecvTimeoutError::Disconnected) => return Ok(()),
            };
            if line.trim().is_empty() {
                continue;
            }
            match parse_line(&line)? {
                Line::Done => return Ok(()),
                Line::Score {
                    example_id,
                    candidate_index,
                    score,
                } => {
                    let fault = |kind| Error::Protocol {
                        example_id: example_id.clone(),
                        candidate_index,
                        kind,
                    };
                    let slot = scores
                        .get_mut(&(example_id.clone(), candidate_index))
                        .ok_or_else(|| fault(ProtocolFault::Unexpected))?;
                    if slot.is_some() {
                        return Err(fault(ProtocolFault::Duplicate));
                    }
                    if !score.is_finite() {
                        return Err(fault(ProtocolFault::NonFinite));
                    }
                    *slot = Some(score);
                }
            }
        }
    })();

    conn.close();
    let _ = write_thread.join();
    result?;

    let mut out = HashMap::with_capacity(scores.len());
    for key in expected {
        match scores.remove(&key) {
            Some(Some(s)) => {
                out.insert(key, s);
            }
            Some(None) => {
                return Err(Error::Protocol {
                    example_id: key.0,
                    candidate_index: key.1,
                    kind: ProtocolFault::Missing,
                })
            }
            // repeated request key: already collected
            None => {}
        }
    }
    Ok(out)
}

fn requests_for(
    example: &Example,
    corpus: &Corpus,
    limits: &QueryLimits,
) -> Result<Vec<ScoreRequest>> {
    (0..example.candidates.len())
        .map(|i| {
            Ok(ScoreRequest {
                example_id: example.example_id.clone(),
                candidate_index: i,
                query: serialize_query(example, i, corpus, limits)?,
            })
        })
        .collect()
}

fn assemble(example: &Example, scores: &HashMap<(String, usize), f64>) -> Prediction {
    let s = (0..example.candidates.len())
        .map(|i| scores[&(example.example_id.clone(), i)])
        .collect();
    Prediction::from_scores(example.example_id.clone(), s)
}

/// Score every candidate of one example through the external scorer.
pub fn external_scorer_rank(
    example: &Example,
    corpus: &Corpus,
    endpoint: &Endpoint,
    limits: &QueryLimits,
    timeout: Duration,
) -> Result<Prediction> {
    let scores = score_session(endpoint, requests_for(example, corpus, limits)?, timeout)?;
    Ok(assemble(example, &scores))
}

/// Ranker backed by an external scorer. `rank_all` uses one session for
/// the whole batch.
pub struct ExternalRanker<'a> {
    corpus: &'a Corpus,
    endpoint: Endpoint,
    limits: QueryLimits,
    timeout: Duration,
}

impl<'a> ExternalRanker<'a> {
    pub fn new(corpus: &'a Corpus, endpoint: Endpoint, limits: QueryLimits, timeout: Duration) -> Self {
        ExternalRanker {
            corpus,
            endpoint,
            limits,
            timeout,
        }
    }
}

impl Ranker for ExternalRanker<'_> {
    fn name(&self) -> &str {
        "external"
    }

    fn rank_one(&self, example: &Example) -> Result<Prediction> {
        external_scorer_rank(example, self.corpus, &self.endpoint, &self.limits, self.timeout)
    }

    fn rank_all(&self, examples: &[Example]) -> Result<Vec<Prediction>> {
        let mut requests = Vec::new();
        for ex in examples {
            requests.extend(requests_for(ex, self.corpus, &self.limits).map_err(|e| {
                Error::Ranker {
                    example_id: ex.example_id.clone(),
                    source: Box::new(e),
                }
            })?);
        }
        let scores = score_session(&self.endpoint, requests, self.timeout)?;
        Ok(examples.iter().map(|ex| assemble(ex, &scores)).collect())
    }
}
