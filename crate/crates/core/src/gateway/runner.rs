//! Run a predictor over a dataset, using and filling the prediction cache.

use super::store::{PredictionStore, StoreError};
use super::{GatewayError, Predictor, ProtocolError};
use crate::dataset::{VariantDataset, VariantInstance};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

pub const PREDICTIONS_FORMAT: &str = "demoaudit-predictions/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub variant_id: String,
    pub model_id: String,
    pub chosen: u8,
    pub latency_ms: u64,
    /// 1-based attempt that produced the answer.
    pub attempt: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub variant_id: String,
    pub model_id: String,
    pub attempts: u32,
    pub error: String,
}

/// One model's answers over one dataset, in dataset order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionSet {
    pub model_id: String,
    pub manifest_digest: String,
    pub predictions: Vec<PredictionRecord>,
    pub failures: Vec<FailureRecord>,
}

impl PredictionSet {
    /// `(variant_id, chosen)` pairs; equal across replays of a
    /// deterministic predictor, unlike latencies.
    pub fn choices(&self) -> Vec<(&str, u8)> {
        self.predictions.iter().map(|p| (p.variant_id.as_str(), p.chosen)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub model_id: String,
    /// Maximum requests in flight.
    pub jobs: usize,
    /// Extra attempts after the first failure of a request.
    pub max_retries: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RunStats {
    pub instances: usize,
    pub cache_hits: usize,
    /// Requests sent to the predictor, retries included, health check not.
    pub round_trips: usize,
    pub failures: usize,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub set: PredictionSet,
    pub stats: RunStats,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("health check failed: {0}")]
    Health(GatewayError),
    #[error("protocol error: {0}")]
    Protocol(ProtocolError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

type Answer = Result<PredictionRecord, FailureRecord>;

fn ask(item: &VariantInstance, predictor: &dyn Predictor, opts: &RunOptions, round_trips: &AtomicUsize) -> Result<Answer, ProtocolError> {
    let mut last = None;
    for attempt in 1..=opts.max_retries + 1 {
        round_trips.fetch_add(1, Ordering::Relaxed);
        let start = Instant::now();
        match predictor.predict(item) {
            Ok(chosen) => {
                return Ok(Ok(PredictionRecord {
                    variant_id: item.variant_id.clone(),
                    model_id: opts.model_id.clone(),
                    chosen,
                    latency_ms: start.elapsed().as_millis() as u64,
                    attempt,
                }))
            }
            Err(GatewayError::Protocol(p)) => return Err(p),
            Err(e) => {
                log::debug!("{}: attempt {attempt} failed: {e}", item.variant_id);
                last = Some(e);
            }
        }
    }
    Ok(Err(FailureRecord {
        variant_id: item.variant_id.clone(),
        model_id: opts.model_id.clone(),
        attempts: opts.max_retries + 1,
        error: last.map(|e| e.to_string()).unwrap_or_default(),
    }))
}

/// Answer every dataset instance, from the cache when possible.
///
/// Successful answers are appended to the cache as they arrive, so an
/// interrupted run resumes where it stopped. A protocol violation aborts
/// the run; other failures are retried and then reported in the set.
pub fn run(
    dataset: &VariantDataset,
    predictor: &dyn Predictor,
    store: &PredictionStore,
    opts: &RunOptions,
) -> Result<RunOutcome, RunError> {
    let items: Vec<&VariantInstance> = dataset.instances().collect();
    let mut answers: Vec<Option<Answer>> = items.iter().map(|v| store.lookup(v).map(Ok)).collect();
    let cache_hits = answers.iter().filter(|a| a.is_some()).count();
    let todo: Vec<usize> = (0..items.len()).filter(|&i| answers[i].is_none()).collect();

    let round_trips = AtomicUsize::new(0);
    if !todo.is_empty() {
        predictor.health_check().map_err(RunError::Health)?;
        let next = AtomicUsize::new(0);
        let abort = AtomicBool::new(false);
        let fatal: Mutex<Option<ProtocolError>> = Mutex::new(None);
        let store_err: Mutex<Option<StoreError>> = Mutex::new(None);
        let done: Mutex<Vec<(usize, Answer)>> = Mutex::new(Vec::with_capacity(todo.len()));
        std::thread::scope(|s| {
            for _ in 0..opts.jobs.clamp(1, todo.len()) {
                s.spawn(|| {
                    while !abort.load(Ordering::Relaxed) {
                        let k = next.fetch_add(1, Ordering::Relaxed);
                        let Some(&idx) = todo.get(k) else { break };
                        let item = items[idx];
                        match ask(item, predictor, opts, &round_trips) {
                            Ok(answer) => {
                                if let Ok(rec) = &answer {
                                    if let Err(e) = store.append(rec, item) {
                                        store_err.lock().unwrap().get_or_insert(e);
                                        abort.store(true, Ordering::Relaxed);
                                    }
                                }
                                done.lock().unwrap().push((idx, answer));
                            }
                            Err(p) => {
                                fatal.lock().unwrap().get_or_insert(p);
                                abort.store(true, Ordering::Relaxed);
                            }
                        }
                    }
                });
            }
        });
        store.compact()?;
        if let Some(e) = store_err.into_inner().unwrap() {
            return Err(e.into());
        }
        if let Some(p) = fatal.into_inner().unwrap() {
            return Err(RunError::Protocol(p));
        }
        for (idx, a) in done.into_inner().unwrap() {
            answers[idx] = Some(a);
        }
    }

    let mut predictions = Vec::with_capacity(items.len());
    let mut failures = Vec::new();
    for a in answers {
        match a.expect("every instance answered or failed") {
            Ok(p) => predictions.push(p),
            Err(f) => failures.push(f),
        }
    }
    let stats = RunStats {
        instances: items.len(),
        cache_hits,
        round_trips: round_trips.into_inner(),
        failures: failures.len(),
    };
    Ok(RunOutcome {
        set: PredictionSet {
            model_id: opts.model_id.clone(),
            manifest_digest: dataset.manifest.digest(),
            predictions,
            failures,
        },
        stats,
    })
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    model_id: String,
    manifest_digest: String,
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum LineRef<'a> {
    Header(&'a Header),
    Prediction(&'a PredictionRecord),
    Failure(&'a FailureRecord),
}

#[derive(Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum Line {
    Header(Header),
    Prediction(PredictionRecord),
    Failure(FailureRecord),
}

#[derive(Debug, thiserror::Error)]
pub enum PredictionsFileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {message}")]
    Invalid { path: String, line: usize, message: String },
}

pub fn write_predictions(set: &PredictionSet, path: &Path) -> Result<(), PredictionsFileError> {
    let io = |source| PredictionsFileError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let header = Header {
        format: PREDICTIONS_FORMAT.to_string(),
        model_id: set.model_id.clone(),
        manifest_digest: set.manifest_digest.clone(),
    };
    let lines = std::iter::once(LineRef::Header(&header))
        .chain(set.predictions.iter().map(LineRef::Prediction))
        .chain(set.failures.iter().map(LineRef::Failure));
    for l in lines {
        writeln!(w, "{}", serde_json::to_string(&l).expect("record serializes")).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_predictions(path: &Path) -> Result<PredictionSet, PredictionsFileError> {
    let p = path.display().to_string();
    let invalid = |line: usize, message: String| PredictionsFileError::Invalid {
        path: p.clone(),
        line,
        message,
    };
    let file = File::open(path).map_err(|source| PredictionsFileError::Io { path: p.clone(), source })?;
    let mut header: Option<Header> = None;
    let mut predictions = Vec::new();
    let mut failures = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let n = idx + 1;
        let line = line.map_err(|source| PredictionsFileError::Io { path: p.clone(), source })?;
        if line.is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(&line).map_err(|e| invalid(n, e.to_string()))?;
        let model = match (&parsed, &header) {
            (Line::Header(_), None) if n == 1 => None,
            (Line::Header(_), _) => return Err(invalid(n, "header must be the first line".into())),
            (_, None) => return Err(invalid(n, "missing header".into())),
            (Line::Prediction(r), Some(_)) => Some((&r.model_id, &r.variant_id)),
            (Line::Failure(r), Some(_)) => Some((&r.model_id, &r.variant_id)),
        };
        if let (Some((model_id, vid)), Some(h)) = (model, &header) {
            if *model_id != h.model_id {
                return Err(invalid(n, format!("model id {model_id:?} differs from header")));
            }
            if !seen.insert(vid.clone()) {
                return Err(invalid(n, format!("duplicate variant {vid}")));
            }
        }
        match parsed {
            Line::Header(h) => {
                if h.format != PREDICTIONS_FORMAT {
                    return Err(invalid(n, format!("unsupported format {:?}", h.format)));
                }
                header = Some(h);
            }
            Line::Prediction(r) if r.chosen > 3 => return Err(invalid(n, format!("chosen {} out of range", r.chosen))),
            Line::Prediction(r) => predictions.push(r),
            Line::Failure(f) => failures.push(f),
        }
    }
    let h = header.ok_or_else(|| invalid(0, "empty file".into()))?;
    Ok(PredictionSet {
        model_id: h.model_id,
        manifest_digest: h.manifest_digest,
        predictions,
        failures,
    })
}
