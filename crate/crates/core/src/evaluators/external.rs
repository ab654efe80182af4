use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{EvalRequest, Objective};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalOptions {
    /// Program and arguments.
    pub command: Vec<String>,
    /// Per-request timeout in seconds.
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    /// Identifier stored in history records.
    #[serde(default = "default_id")]
    pub id: String,
}

fn default_timeout() -> f64 {
    600.0
}

fn default_id() -> String {
    "external".into()
}

#[derive(Serialize)]
struct WireRequest<'a> {
    id: u64,
    point: &'a [i8],
    resource: f64,
}

#[derive(Deserialize)]
struct Handshake {
    proto: u32,
    n: usize,
}

type Pending = Arc<Mutex<HashMap<u64, Sender<Result<f64>>>>>;

/// Client for an evaluator subprocess speaking newline-delimited JSON over
/// its standard streams.
///
/// The evaluator first prints `{"proto": 1, "n": <bits>}`. Each request is
/// `{"id", "point", "resource"}`; each response is `{"id", "loss"}` or
/// `{"id", "error"}`. Responses may arrive in any order and are matched to
/// waiting callers by id, so the client can be shared across threads.
pub struct ExternalEvaluator {
    id: String,
    n: usize,
    timeout: Duration,
    child: Mutex<Child>,
    stdin: Mutex<Option<ChildStdin>>,
    pending: Pending,
    reader: Option<JoinHandle<()>>,
}

impl ExternalEvaluator {
    /// Spawns the evaluator and completes the handshake. `expected_n`, when
    /// given, must match the dimension the evaluator announces.
    pub fn spawn(opts: &ExternalOptions, expected_n: Option<usize>) -> Result<Self> {
        let (program, args) = opts
            .command
            .split_first()
            .ok_or_else(|| Error::Argument("external evaluator command is empty".into()))?;
        if !(opts.timeout_secs > 0.0 && opts.timeout_secs.is_finite()) {
            return Err(Error::Argument(format!("timeout {}", opts.timeout_secs)));
        }
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let mut stdout = BufReader::new(child.stdout.take().expect("piped stdout"));

        let mut first = String::new();
        let shake = stdout
            .read_line(&mut first)
            .map_err(Error::from)
            .and_then(|read| {
                if read == 0 {
                    return Err(protocol("evaluator closed its output before the handshake", ""));
                }
                let h: Handshake = serde_json::from_str(first.trim())
                    .map_err(|e| protocol(&format!("bad handshake: {e}"), &first))?;
                if h.proto != 1 {
                    return Err(protocol(
                        &format!("unsupported protocol version {}", h.proto),
                        &first,
                    ));
                }
                if let Some(n) = expected_n.filter(|&n| n != h.n) {
                    return Err(protocol(
                        &format!("evaluator expects n = {}, search space has n = {n}", h.n),
                        &first,
                    ));
                }
                Ok(h.n)
            });
        let n = match shake {
            Ok(n) => n,
            Err(e) => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(e);
            }
        };

        let pending: Pending = Arc::default();
        let reader = {
            let pending = Arc::clone(&pending);
            std::thread::spawn(move || read_responses(stdout, pending))
        };
        Ok(Self {
            id: opts.id.clone(),
            n,
            timeout: Duration::from_secs_f64(opts.timeout_secs),
            child: Mutex::new(child),
            stdin: Mutex::new(Some(stdin)),
            pending,
            reader: Some(reader),
        })
    }

    /// Dimension announced in the handshake.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn external_eval(&self, request: &EvalRequest) -> Result<f64> {
        request.point.check_dim(self.n)?;
        let (tx, rx) = mpsc::channel();
        {
            let mut pending = self.pending.lock().unwrap();
            if pending.insert(request.seq, tx).is_some() {
                return Err(Error::Argument(format!(
                    "request id {} already in flight",
                    request.seq
                )));
            }
        }
        let mut line = serde_json::to_string(&WireRequest {
            id: request.seq,
            point: request.point.bits(),
            resource: request.resource,
        })
        .expect("request serializes");
        line.push('\n');
        let sent = match self.stdin.lock().unwrap().as_mut() {
            Some(stdin) => stdin.write_all(line.as_bytes()).and_then(|()| stdin.flush()),
            None => Err(std::io::Error::other("evaluator input closed")),
        };
        if let Err(e) = sent {
            self.pending.lock().unwrap().remove(&request.seq);
            return Err(Error::Evaluator(format!("cannot write request: {e}")));
        }
        match rx.recv_timeout(self.timeout) {
            Ok(result) => result,
            Err(RecvTimeoutError::Timeout) => {
                self.pending.lock().unwrap().remove(&request.seq);
                Err(Error::Timeout(self.timeout))
            }
            Err(RecvTimeoutError::Disconnected) => {
                Err(Error::Evaluator("evaluator exited before answering".into()))
            }
        }
    }
}

impl Objective for ExternalEvaluator {
    fn id(&self) -> &str {
        &self.id
    }

    fn evaluate(&self, request: &EvalRequest) -> Result<f64> {
        self.external_eval(request)
    }
}

impl Drop for ExternalEvaluator {
    fn drop(&mut self) {
        // Closing stdin asks the evaluator to exit.
        self.stdin.lock().unwrap().take();
        let mut child = self.child.lock().unwrap();
        let deadline = std::time::Instant::now() + Duration::from_secs(2);
        loop {
            match child.try_wait() {
                Ok(Some(_)) => break,
                Ok(None) if std::time::Instant::now() < deadline => {
                    std::thread::sleep(Duration::from_millis(10))
                }
                _ => {
                    let _ = child.kill();
                    let _ = child.wait();
                    break;
                }
            }
        }
        if let Some(h) = self.reader.take() {
            let _ = h.join();
        }
    }
}

fn protocol(message: &str, raw: &str) -> Error {
    Error::Protocol {
        message: message.to_string(),
        raw: raw.trim_end().to_string(),
    }
}

/// Pulls `"id": <int>` out of a line that may not be valid JSON (for
/// example a bare `NaN` loss).
fn sniff_id(raw: &str) -> Option<u64> {
    let at = raw.find("\"id\"")?;
    let rest = raw[at + 4..].trim_start().strip_prefix(':')?.trim_start();
    let digits: String = rest.chars().take_while(char::is_ascii_digit).collect();
    digits.parse().ok()
}

fn parse_response(raw: &str) -> (Option<u64>, Result<f64>) {
    let value: Value = match serde_json::from_str(raw) {
        Ok(v) => v,
        Err(e) => {
            return (
                sniff_id(raw),
                Err(protocol(&format!("malformed response: {e}"), raw)),
            )
        }
    };
    let id = value.get("id").and_then(Value::as_u64);
    let Some(id) = id else {
        return (None, Err(protocol("response has no integer id", raw)));
    };
    if let Some(err) = value.get("error") {
        let msg = err.as_str().map_or_else(|| err.to_string(), str::to_string);
        return (Some(id), Err(Error::Evaluator(msg)));
    }
    match value.get("loss").and_then(Value::as_f64) {
        Some(v) if v.is_finite() => (Some(id), Ok(v)),
        _ => (
            Some(id),
            Err(protocol("loss is missing or not a finite number", raw)),
        ),
    }
}

fn read_responses<R: BufRead>(reader: R, pending: Pending) {
    for line in reader.lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let (id, result) = parse_response(line.trim());
        if let Err(e @ Error::Protocol { .. }) = &result {
            log::error!("{e}");
        }
        match id {
            Some(id) => match pending.lock().unwrap().remove(&id) {
                Some(tx) => {
                    let _ = tx.send(result);
                }
                None => log::warn!("response for unknown request id {id} ignored"),
            },
            None => {
                // Unroutable: fail everyone waiting.
                for (_, tx) in pending.lock().unwrap().drain() {
                    let _ = tx.send(Err(protocol("unroutable response", &line)));
                }
            }
        }
    }
    // EOF: dropping the senders wakes every waiter with Disconnected.
    pending.lock().unwrap().clear();
}
