//! Subprocess transport: requests on the child's stdin, responses on its
//! stdout, diagnostics passed through on stderr.
//!
//! Many requests may be in flight; a reader thread matches responses to
//! waiters by id, so the child may answer out of order.

use super::protocol::{parse_response, ProtocolError, Request};
use super::{GatewayError, Predictor};
use crate::dataset::VariantInstance;
use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{channel, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

type Reply = Result<Result<u8, String>, GatewayError>;

#[derive(Default)]
struct Shared {
    pending: HashMap<String, Vec<Sender<Reply>>>,
    issued: HashSet<String>,
    /// Set once the stream is unusable; every later call fails with it.
    dead: Option<GatewayError>,
}

pub struct SubprocessPredictor {
    child: Mutex<Child>,
    stdin: Mutex<Option<ChildStdin>>,
    shared: Arc<Mutex<Shared>>,
    reader: Option<JoinHandle<()>>,
    timeout: Duration,
}

fn fail_all(shared: &mut Shared, err: GatewayError) {
    for (_, senders) in shared.pending.drain() {
        for s in senders {
            let _ = s.send(Err(err.clone()));
        }
    }
    shared.dead = Some(err);
}

fn read_loop(stdout: impl BufRead, shared: Arc<Mutex<Shared>>) {
    for line in stdout.lines() {
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                fail_all(&mut shared.lock().unwrap(), GatewayError::Transport(format!("reading predictor output: {e}")));
                return;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        let mut s = shared.lock().unwrap();
        match parse_response(&line) {
            Ok(resp) => match s.pending.get_mut(&resp.id).and_then(|v| (!v.is_empty()).then(|| v.remove(0))) {
                Some(tx) => {
                    let _ = tx.send(Ok(resp.outcome));
                }
                // late answer to a request that already timed out
                None if s.issued.contains(&resp.id) => {}
                None => {
                    fail_all(&mut s, ProtocolError::UnknownId { id: resp.id }.into());
                    return;
                }
            },
            Err(e) => {
                fail_all(&mut s, e.into());
                return;
            }
        }
    }
    fail_all(
        &mut shared.lock().unwrap(),
        GatewayError::Transport("predictor closed its output".into()),
    );
}

impl SubprocessPredictor {
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self, GatewayError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| GatewayError::Transport(format!("spawning {command:?}: {e}")))?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("piped stdout");
        let shared = Arc::new(Mutex::new(Shared::default()));
        let reader_shared = Arc::clone(&shared);
        let reader = std::thread::Builder::new()
            .name("predictor-reader".into())
            .spawn(move || read_loop(BufReader::new(stdout), reader_shared))
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        Ok(Self {
            child: Mutex::new(child),
            stdin: Mutex::new(stdin),
            shared,
            reader: Some(reader),
            timeout,
        })
    }

    fn exchange(&self, req: &Request) -> Reply {
        let (tx, rx) = channel();
        {
            let mut s = self.shared.lock().unwrap();
            if let Some(err) = &s.dead {
                return Err(err.clone());
            }
            s.pending.entry(req.id.clone()).or_default().push(tx);
            s.issued.insert(req.id.clone());
        }
        let written = {
            let mut guard = self.stdin.lock().unwrap();
            match guard.as_mut() {
                Some(w) => writeln!(w, "{}", req.to_line()).and_then(|_| w.flush()),
                None => Err(std::io::Error::new(std::io::ErrorKind::BrokenPipe, "stdin closed")),
            }
        };
        if let Err(e) = written {
            let mut s = self.shared.lock().unwrap();
            s.pending.remove(&req.id);
            return Err(s
                .dead
                .clone()
                .unwrap_or_else(|| GatewayError::Transport(format!("writing request: {e}"))));
        }
        match rx.recv_timeout(self.timeout) {
            Ok(reply) => reply,
            Err(RecvTimeoutError::Timeout) => {
                let mut s = self.shared.lock().unwrap();
                if let Some(v) = s.pending.get_mut(&req.id) {
                    v.pop();
                    if v.is_empty() {
                        s.pending.remove(&req.id);
                    }
                }
                // the reply may have raced in while we took the lock
                if let Ok(reply) = rx.try_recv() {
                    return reply;
                }
                Err(GatewayError::Timeout {
                    id: req.id.clone(),
                    ms: self.timeout.as_millis() as u64,
                })
            }
            Err(RecvTimeoutError::Disconnected) => Err(self
                .shared
                .lock()
                .unwrap()
                .dead
                .clone()
                .unwrap_or_else(|| GatewayError::Transport("reader stopped".into()))),
        }
    }
}

impl Predictor for SubprocessPredictor {
    fn predict(&self, item: &VariantInstance) -> Result<u8, GatewayError> {
        let req = Request::for_instance(item);
        self.exchange(&req)?.map_err(|message| GatewayError::Predictor {
            id: req.id.clone(),
            message,
        })
    }

    fn health_check(&self) -> Result<(), GatewayError> {
        // an error response still proves the predictor is alive
        self.exchange(&Request::health()).map(|_| ())
    }
}

impl Drop for SubprocessPredictor {
    fn drop(&mut self) {
        // closing stdin asks the child to exit
        self.stdin.lock().unwrap().take();
        let mut child = self.child.lock().unwrap();
        let deadline = std::time::Instant::now() + Duration::from_secs(2);
        loop {
            match child.try_wait() {
                Ok(Some(_)) | Err(_) => break,
                Ok(None) if std::time::Instant::now() >= deadline => {
                    let _ = child.kill();
                    let _ = child.wait();
                    break;
                }
                Ok(None) => std::thread::sleep(Duration::from_millis(10)),
            }
        }
        if let Some(h) = self.reader.take() {
            let _ = h.join();
        }
    }
}
