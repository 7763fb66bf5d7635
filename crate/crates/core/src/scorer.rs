//! Line-oriented JSON protocol for talking to external text detectors.
//!
//! Request line: `{"id":"...","text":"..."}`. Response line:
//! `{"id":"...","score":0.73}` where `score` is the probability that the text
//! is machine-generated. One JSON object per line, UTF-8, `\n` terminated.
//!
//! Two transports carry the same lines:
//!
//! * stdio: the scorer program reads the whole request stream until EOF on
//!   stdin and writes one response line per request on stdout;
//! * http: `POST {endpoint}/score` with the request lines as the body, the
//!   response lines as the reply body.
//!
//! Responses may arrive in any order. The bridge matches them to requests by
//! id, validates every score, and returns them in request order.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::augment::splitmix64;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(300);

/// Environment variable consulted for the scorer when none is given.
pub const SCORER_ENV: &str = "TEXTMUT_SCORER";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScorerError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("timed out waiting for {} response(s): {}", missing.len(), preview(missing))]
    Timeout { missing: Vec<String> },
    #[error("protocol error on response line {line}: {message}")]
    Protocol { line: usize, message: String },
    #[error("score {score} for id {id:?} is outside [0, 1]")]
    Range { id: String, score: f64 },
    #[error("duplicate request id {0:?}")]
    DuplicateRequestId(String),
    #[error("invalid scorer spec {0:?}: expected `mock`, `http://host:port[/path]` or `cmd:<program> [args..]`")]
    InvalidSpec(String),
}

fn preview(ids: &[String]) -> String {
    const SHOWN: usize = 10;
    let mut s = ids
        .iter()
        .take(SHOWN)
        .cloned()
        .collect::<Vec<_>>()
        .join(", ");
    if ids.len() > SHOWN {
        s.push_str(&format!(", ... ({} more)", ids.len() - SHOWN));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub id: String,
    pub text: String,
}

impl ScoreRequest {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        ScoreRequest {
            id: id.into(),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub id: String,
    pub score: f64,
}

pub fn encode_requests(requests: &[ScoreRequest]) -> String {
    encode_lines(requests)
}

pub fn encode_responses(responses: &[ScoreResponse]) -> String {
    encode_lines(responses)
}

fn encode_lines<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("protocol types always serialize"));
        out.push('\n');
    }
    out
}

/// Parses one response line. `line_no` is 1-based and used in errors.
pub fn parse_response_line(line: &str, line_no: usize) -> Result<ScoreResponse, ScorerError> {
    serde_json::from_str(line).map_err(|e| ScorerError::Protocol {
        line: line_no,
        message: e.to_string(),
    })
}

/// Parses raw response lines and pairs them with `requests`.
///
/// Blank lines are ignored. Unknown or repeated ids are protocol errors, scores
/// outside `[0, 1]` are range errors, and ids that never showed up are
/// reported as a timeout.
pub fn match_responses<S: AsRef<str>>(
    requests: &[ScoreRequest],
    lines: &[S],
) -> Result<Vec<ScoreResponse>, ScorerError> {
    let wanted: HashMap<&str, usize> = requests
        .iter()
        .enumerate()
        .map(|(i, r)| (r.id.as_str(), i))
        .collect();
    let mut slots: Vec<Option<f64>> = vec![None; requests.len()];

    for (k, line) in lines.iter().enumerate() {
        let line = line.as_ref();
        if line.trim().is_empty() {
            continue;
        }
        let resp = parse_response_line(line, k + 1)?;
        if !resp.score.is_finite() || !(0.0..=1.0).contains(&resp.score) {
            return Err(ScorerError::Range {
                id: resp.id,
                score: resp.score,
            });
        }
        let Some(&slot) = wanted.get(resp.id.as_str()) else {
            return Err(ScorerError::Protocol {
                line: k + 1,
                message: format!("unexpected id {:?}", resp.id),
            });
        };
        if slots[slot].replace(resp.score).is_some() {
            return Err(ScorerError::Protocol {
                line: k + 1,
                message: format!("duplicate response for id {:?}", resp.id),
            });
        }
    }

    let missing: Vec<String> = requests
        .iter()
        .zip(&slots)
        .filter(|(_, s)| s.is_none())
        .map(|(r, _)| r.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(ScorerError::Timeout { missing });
    }
    Ok(requests
        .iter()
        .zip(slots)
        .map(|(r, s)| ScoreResponse {
            id: r.id.clone(),
            score: s.expect("checked above"),
        })
        .collect())
}

fn check_unique(requests: &[ScoreRequest]) -> Result<(), ScorerError> {
    let mut seen = HashSet::with_capacity(requests.len());
    for r in requests {
        if !seen.insert(r.id.as_str()) {
            return Err(ScorerError::DuplicateRequestId(r.id.clone()));
        }
    }
    Ok(())
}

/// A detector reachable through the scoring protocol.
pub trait Scorer: Send + Sync {
    /// Scores a batch; responses come back in request order, one per request.
    fn score_batch(&self, requests: &[ScoreRequest]) -> Result<Vec<ScoreResponse>, ScorerError>;

    fn describe(&self) -> String;
}

/// Deterministic stand-in detector.
///
/// The score is FNV-1a (64-bit) over the UTF-8 bytes, passed through the
/// SplitMix64 finalizer, with the top 53 bits scaled into `[0, 1)`. The empty
/// string scores exactly 0.5.
pub fn mock_score(text: &str) -> f64 {
    if text.is_empty() {
        return 0.5;
    }
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    (splitmix64(h) >> 11) as f64 / (1u64 << 53) as f64
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MockScorer;

impl Scorer for MockScorer {
    fn score_batch(&self, requests: &[ScoreRequest]) -> Result<Vec<ScoreResponse>, ScorerError> {
        check_unique(requests)?;
        Ok(requests
            .iter()
            .map(|r| ScoreResponse {
                id: r.id.clone(),
                score: mock_score(&r.text),
            })
            .collect())
    }

    fn describe(&self) -> String {
        "mock".to_owned()
    }
}

/// Serves the protocol over a reader/writer pair, answering each request line
/// as it arrives. Returns the number of requests answered.
pub fn serve_lines<R, W, F>(reader: R, mut writer: W, score: F) -> io::Result<usize>
where
    R: BufRead,
    W: Write,
    F: Fn(&str) -> f64,
{
    let mut n = 0;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let req: ScoreRequest = serde_json::from_str(&line).map_err(|e| {
            io::Error::new(
                io::ErrorKind::InvalidData,
                format!("request {}: {e}", n + 1),
            )
        })?;
        let resp = ScoreResponse {
            score: score(&req.text),
            id: req.id,
        };
        serde_json::to_writer(&mut writer, &resp)?;
        writer.write_all(b"\n")?;
        n += 1;
    }
    writer.flush()?;
    Ok(n)
}

/// Runs a scorer program per batch over stdin/stdout.
#[derive(Debug, Clone)]
pub struct StdioScorer {
    pub program: String,
    pub args: Vec<String>,
    pub timeout: Duration,
}

impl StdioScorer {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        StdioScorer {
            program: program.into(),
            args,
            timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }
}

impl Scorer for StdioScorer {
    fn score_batch(&self, requests: &[ScoreRequest]) -> Result<Vec<ScoreResponse>, ScorerError> {
        check_unique(requests)?;
        if requests.is_empty() {
            return Ok(Vec::new());
        }
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ScorerError::Transport(format!("cannot start {}: {e}", self.program)))?;

        let body = encode_requests(requests);
        let mut stdin = child.stdin.take().expect("stdin is piped");
        let writer = thread::spawn(move || {
            // The scorer may exit early; its response stream tells us what went wrong.
            let _ = stdin.write_all(body.as_bytes());
        });

        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        let reader = thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let failed = line.is_err();
                if tx.send(line).is_err() || failed {
                    break;
                }
            }
        });

        let deadline = Instant::now() + self.timeout;
        let mut lines = Vec::with_capacity(requests.len());
        let mut timed_out = false;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            match rx.recv_timeout(left) {
                Ok(Ok(line)) => lines.push(line),
                Ok(Err(e)) => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(ScorerError::Transport(format!(
                        "reading scorer output: {e}"
                    )));
                }
                Err(mpsc::RecvTimeoutError::Timeout) => {
                    timed_out = true;
                    break;
                }
                Err(mpsc::RecvTimeoutError::Disconnected) => break,
            }
        }
        if timed_out {
            let _ = child.kill();
        }
        let status = child
            .wait()
            .map_err(|e| ScorerError::Transport(format!("waiting for scorer: {e}")))?;
        if !timed_out {
            let _ = writer.join();
            let _ = reader.join();
        }
        // After a timeout, grandchildren of the scorer may still hold the pipes
        // open; the I/O threads are left to finish on their own.

        if !timed_out && !status.success() {
            return Err(ScorerError::Transport(format!(
                "scorer exited with {status}"
            )));
        }
        match_responses(requests, &lines)
    }

    fn describe(&self) -> String {
        let mut s = format!("cmd:{}", self.program);
        for a in &self.args {
            s.push(' ');
            s.push_str(a);
        }
        s
    }
}

/// Posts each batch to `{endpoint}/score`.
#[derive(Debug, Clone)]
pub struct HttpScorer {
    pub url: String,
    pub timeout: Duration,
}

impl HttpScorer {
    /// `endpoint` may be a base URL or already end in `/score`.
    pub fn new(endpoint: &str) -> Self {
        let trimmed = endpoint.trim_end_matches('/');
        let url = if trimmed.ends_with("/score") {
            trimmed.to_owned()
        } else {
            format!("{trimmed}/score")
        };
        HttpScorer {
            url,
            timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }
}

impl Scorer for HttpScorer {
    fn score_batch(&self, requests: &[ScoreRequest]) -> Result<Vec<ScoreResponse>, ScorerError> {
        check_unique(requests)?;
        if requests.is_empty() {
            return Ok(Vec::new());
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let result = agent
            .post(&self.url)
            .header("Content-Type", "application/x-ndjson")
            .send(encode_requests(requests).as_bytes());
        let mut response = match result {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => {
                return Err(ScorerError::Timeout {
                    missing: requests.iter().map(|r| r.id.clone()).collect(),
                })
            }
            Err(e) => return Err(ScorerError::Transport(format!("POST {}: {e}", self.url))),
        };
        let status = response.status();
        let mut body = String::new();
        response
            .body_mut()
            .as_reader()
            .read_to_string(&mut body)
            .map_err(|e| {
                ScorerError::Transport(format!("reading response from {}: {e}", self.url))
            })?;
        if !status.is_success() {
            return Err(ScorerError::Transport(format!(
                "POST {} returned {status}: {}",
                self.url,
                body.lines().next().unwrap_or_default()
            )));
        }
        let lines: Vec<&str> = body.lines().collect();
        match_responses(requests, &lines)
    }

    fn describe(&self) -> String {
        self.url.clone()
    }
}

/// Parsed form of a scorer spec string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScorerSpec {
    Mock,
    Http(String),
    Command { program: String, args: Vec<String> },
}

impl ScorerSpec {
    pub fn parse(spec: &str) -> Result<Self, ScorerError> {
        let spec = spec.trim();
        if spec == "mock" {
            return Ok(ScorerSpec::Mock);
        }
        if spec.starts_with("http://") || spec.starts_with("https://") {
            return Ok(ScorerSpec::Http(spec.to_owned()));
        }
        if let Some(cmd) = spec.strip_prefix("cmd:") {
            let mut parts = cmd.split_whitespace().map(str::to_owned);
            if let Some(program) = parts.next() {
                return Ok(ScorerSpec::Command {
                    program,
                    args: parts.collect(),
                });
            }
        }
        Err(ScorerError::InvalidSpec(spec.to_owned()))
    }

    pub fn build(&self, timeout: Duration) -> Box<dyn Scorer> {
        match self {
            ScorerSpec::Mock => Box::new(MockScorer),
            ScorerSpec::Http(url) => Box::new(HttpScorer::new(url).with_timeout(timeout)),
            ScorerSpec::Command { program, args } => {
                Box::new(StdioScorer::new(program.clone(), args.clone()).with_timeout(timeout))
            }
        }
    }
}

impl fmt::Display for ScorerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScorerSpec::Mock => f.write_str("mock"),
            ScorerSpec::Http(url) => f.write_str(url),
            ScorerSpec::Command { program, args } => {
                write!(f, "cmd:{program}")?;
                args.iter().try_for_each(|a| write!(f, " {a}"))
            }
        }
    }
}
