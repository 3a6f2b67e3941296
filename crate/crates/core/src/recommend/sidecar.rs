//! Client for an external recommender process speaking line-delimited JSON
//! over its stdin and stdout.
//!
//! Request: `{"id", "function", "kind", "name", "k", "context"}`.
//! Response: `{"id", "candidates": [{"type", "score"}]}`, in any order.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{Recommendation, RecommendError, Recommender, SlotRequest};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Serialize)]
struct WireRequest<'a> {
    id: u64,
    function: &'a str,
    kind: &'a str,
    name: &'a str,
    k: usize,
    context: &'a [String],
}

#[derive(Deserialize)]
struct WireCandidate {
    #[serde(rename = "type")]
    typ: String,
    #[serde(default)]
    score: f64,
}

#[derive(Deserialize)]
struct WireResponse {
    id: Option<u64>,
    #[serde(default)]
    candidates: Vec<WireCandidate>,
}

struct Connection {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

impl Drop for Connection {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Spawns `sh -c <command>` on first use and keeps it for later batches.
/// Requests are serialized over the one connection. Failures degrade the
/// affected slots to empty recommendations and are kept in `errors`.
pub struct SidecarRecommender {
    command: String,
    timeout: Duration,
    next_id: Mutex<u64>,
    conn: Mutex<Option<Connection>>,
    errors: Mutex<Vec<RecommendError>>,
}

impl SidecarRecommender {
    pub fn new(command: impl Into<String>) -> SidecarRecommender {
        SidecarRecommender {
            command: command.into(),
            timeout: DEFAULT_TIMEOUT,
            next_id: Mutex::new(0),
            conn: Mutex::new(None),
            errors: Mutex::new(Vec::new()),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> SidecarRecommender {
        self.timeout = timeout;
        self
    }

    /// Errors seen so far, oldest first.
    pub fn errors(&self) -> Vec<RecommendError> {
        self.errors.lock().unwrap().clone()
    }

    fn spawn(&self) -> Result<Connection, RecommendError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| RecommendError::SidecarUnavailable(format!("{}: {e}", self.command)))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Connection {
            child,
            stdin,
            lines: rx,
        })
    }

    fn exchange(&self, reqs: &[SlotRequest]) -> Result<BTreeMap<u64, Vec<(String, f64)>>, RecommendError> {
        let mut guard = self.conn.lock().unwrap();
        if guard.is_none() {
            *guard = Some(self.spawn()?);
        }
        let conn = guard.as_mut().unwrap();
        let first = {
            let mut n = self.next_id.lock().unwrap();
            let first = *n;
            *n += reqs.len() as u64;
            first
        };
        let mut payload = String::new();
        for (i, r) in reqs.iter().enumerate() {
            let w = WireRequest {
                id: first + i as u64,
                function: &r.function,
                kind: r.kind.as_str(),
                name: &r.name,
                k: r.k,
                context: &r.context,
            };
            payload.push_str(&serde_json::to_string(&w).expect("serializable request"));
            payload.push('\n');
        }
        let sent = conn.stdin.write_all(payload.as_bytes()).and_then(|_| conn.stdin.flush());
        if let Err(e) = sent {
            *guard = None;
            return Err(RecommendError::SidecarUnavailable(e.to_string()));
        }
        let wanted = first..first + reqs.len() as u64;
        let mut got = BTreeMap::new();
        let deadline = Instant::now() + self.timeout;
        while got.len() < reqs.len() {
            let left = deadline.saturating_duration_since(Instant::now());
            match conn.lines.recv_timeout(left) {
                Ok(line) => match serde_json::from_str::<WireResponse>(&line) {
                    Ok(WireResponse { id: Some(id), candidates }) if wanted.contains(&id) => {
                        got.insert(id, candidates.into_iter().map(|c| (c.typ, c.score)).collect());
                    }
                    Ok(_) => self.note(RecommendError::ProtocolError(format!("unexpected response: {line}"))),
                    Err(e) => self.note(RecommendError::ProtocolError(format!("{e}: {line}"))),
                },
                Err(RecvTimeoutError::Timeout) => {
                    self.note(RecommendError::SidecarUnavailable("timed out waiting for responses".into()));
                    *guard = None;
                    break;
                }
                Err(RecvTimeoutError::Disconnected) => {
                    self.note(RecommendError::SidecarUnavailable("process closed its output".into()));
                    *guard = None;
                    break;
                }
            }
        }
        Ok(got.into_iter().map(|(id, c)| (id - first, c)).collect())
    }

    fn note(&self, e: RecommendError) {
        self.errors.lock().unwrap().push(e);
    }
}

impl Recommender for SidecarRecommender {
    fn recommend_batch(&self, reqs: &[SlotRequest]) -> Vec<Recommendation> {
        if reqs.is_empty() {
            return Vec::new();
        }
        let mut answers = match self.exchange(reqs) {
            Ok(a) => a,
            Err(e) => {
                self.note(e);
                BTreeMap::new()
            }
        };
        reqs.iter()
            .enumerate()
            .map(|(i, r)| {
                let mut candidates = answers.remove(&(i as u64)).unwrap_or_default();
                candidates.truncate(r.k);
                Recommendation {
                    slot: r.slot_key(),
                    candidates,
                }
            })
            .collect()
    }
}
