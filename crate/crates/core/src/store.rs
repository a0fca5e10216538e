//! File-backed persistence.
//!
//! ```text
//! <root>/
//!   datasets/<sha256>.csv        canonical CSV, named by its own hash
//!   datasets/<sha256>.json       dataset name and row count
//!   runs/<run_id>/record.json    RunRecord (config, status, progress, result)
//!   runs/<run_id>/sweep.csv      grid export, written once the run ends
//!   runs/<run_id>/models/<family>@<fraction>   blob hash of a kept model
//!   runs/<run_id>/roi/<sha256>.json            ROI snapshots keyed by params
//!   blobs/<sha256>.bin           content-addressed binary blobs
//!   sessions/<session_id>.json   active-learning sessions
//! ```
//!
//! Every file is written to a hidden sibling temp file, synced, and renamed
//! into place, so a reader sees either the old or the new version. Leftover
//! temp files from a crash are removed by [`Store::open`].

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::active::{ALConfig, ALState};
use crate::dataset::{DatasetError, LabeledPairDataset};
use crate::models::{Family, TrainedClassifier};
use crate::roi::{CostParams, RoiGrid};
use crate::sweep::{run_sweep_with_workers, CsvOptions, SweepCell, SweepConfig, SweepObserver, SweepResult};
use crate::util::{sha256_hex, write_atomic};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RunStatus {
    Pending,
    Running,
    Done,
    Failed,
    Partial,
}

impl RunStatus {
    pub fn can_become(self, next: RunStatus) -> bool {
        use RunStatus::*;
        matches!(
            (self, next),
            (Pending, Running)
                | (Pending, Failed)
                | (Running, Running)
                | (Running, Done)
                | (Running, Failed)
                | (Running, Partial)
        )
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, RunStatus::Done | RunStatus::Failed | RunStatus::Partial)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub done: usize,
    pub total: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub created_at: DateTime<Utc>,
    pub dataset_hash: String,
    pub config: SweepConfig,
    /// The manifest text the run was launched from, verbatim, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<String>,
    pub status: RunStatus,
    pub progress: Progress,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<SweepResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunRecord {
    pub fn manifest_sha256(&self) -> Option<String> {
        self.manifest.as_ref().map(|m| sha256_hex(m.as_bytes()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub hash: String,
    pub name: String,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: String,
    pub created_at: DateTime<Utc>,
    pub dataset_hash: String,
    pub config: ALConfig,
    pub state: ALState,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{kind} `{id}` not found")]
    NotFound { kind: &'static str, id: String },
    #[error("illegal status transition {from:?} -> {to:?}")]
    IllegalTransition { from: RunStatus, to: RunStatus },
    #[error("invalid record update: {0}")]
    InvalidUpdate(String),
    #[error("corrupt file {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::NotFound { .. } => "NOT_FOUND",
            StoreError::IllegalTransition { .. } => "ILLEGAL_TRANSITION",
            StoreError::InvalidUpdate(_) => "INVALID_UPDATE",
            StoreError::Corrupt { .. } => "CORRUPT_STORE",
            StoreError::Dataset(e) => e.code(),
            StoreError::Io(_) => "IO_ERROR",
        }
    }
}

type Result<T> = std::result::Result<T, StoreError>;

/// Handle on a store directory. Cheap to clone; many handles may share a
/// root. Writes to one run must come from one writer at a time.
#[derive(Clone, Debug)]
pub struct Store {
    root: PathBuf,
}

fn is_temp(name: &str) -> bool {
    name.starts_with('.') && name.ends_with(".tmp")
}

fn remove_stale_temps(dir: &Path) -> io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        if entry.file_type()?.is_dir() {
            remove_stale_temps(&path)?;
        } else if path.file_name().and_then(|n| n.to_str()).is_some_and(is_temp) {
            fs::remove_file(&path)?;
        }
    }
    Ok(())
}

fn valid_token(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl Store {
    /// Opens (creating if needed) a store rooted at `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        for sub in ["datasets", "runs", "blobs", "sessions"] {
            fs::create_dir_all(root.join(sub))?;
        }
        remove_stale_temps(&root)?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn read_json<T: DeserializeOwned>(&self, path: &Path, kind: &'static str, id: &str) -> Result<T> {
        let bytes = fs::read(path).map_err(|e| match e.kind() {
            io::ErrorKind::NotFound => StoreError::NotFound {
                kind,
                id: id.to_string(),
            },
            _ => StoreError::Io(e),
        })?;
        serde_json::from_slice(&bytes).map_err(|e| StoreError::Corrupt {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    fn write_json<T: Serialize>(&self, path: &Path, value: &T) -> Result<()> {
        let bytes = serde_json::to_vec_pretty(value).expect("records serialize");
        Ok(write_atomic(path, &bytes)?)
    }

    // ---- datasets ----

    /// Stores the canonical CSV under its SHA-256 and returns the hash.
    /// Storing the same content again is a no-op.
    pub fn put_dataset(&self, ds: &LabeledPairDataset) -> Result<String> {
        let bytes = ds.to_canonical_csv();
        let hash = sha256_hex(&bytes);
        let csv_path = self.root.join("datasets").join(format!("{hash}.csv"));
        if !csv_path.exists() {
            write_atomic(&csv_path, &bytes)?;
        }
        let meta_path = self.root.join("datasets").join(format!("{hash}.json"));
        if !meta_path.exists() {
            self.write_json(
                &meta_path,
                &DatasetMeta {
                    hash: hash.clone(),
                    name: ds.name().to_string(),
                    n: ds.n(),
                },
            )?;
        }
        Ok(hash)
    }

    pub fn dataset_meta(&self, hash: &str) -> Result<DatasetMeta> {
        if !valid_token(hash) {
            return Err(StoreError::NotFound {
                kind: "dataset",
                id: hash.into(),
            });
        }
        self.read_json(
            &self.root.join("datasets").join(format!("{hash}.json")),
            "dataset",
            hash,
        )
    }

    pub fn has_dataset(&self, hash: &str) -> bool {
        valid_token(hash) && self.root.join("datasets").join(format!("{hash}.csv")).exists()
    }

    pub fn get_dataset(&self, hash: &str) -> Result<LabeledPairDataset> {
        let meta = self.dataset_meta(hash)?;
        let path = self.root.join("datasets").join(format!("{hash}.csv"));
        let bytes = fs::read(&path).map_err(|_| StoreError::NotFound {
            kind: "dataset",
            id: hash.into(),
        })?;
        if sha256_hex(&bytes) != hash {
            return Err(StoreError::Corrupt {
                path,
                message: "content does not match its hash".into(),
            });
        }
        Ok(LabeledPairDataset::from_canonical_csv(meta.name, &bytes)?)
    }

    // ---- runs ----

    fn run_dir(&self, run_id: &str) -> Result<PathBuf> {
        if !valid_token(run_id) {
            return Err(StoreError::NotFound {
                kind: "run",
                id: run_id.into(),
            });
        }
        Ok(self.root.join("runs").join(run_id))
    }

    pub fn create_run(&self, dataset_hash: &str, config: SweepConfig, manifest: Option<String>) -> Result<RunRecord> {
        if !self.has_dataset(dataset_hash) {
            return Err(StoreError::NotFound {
                kind: "dataset",
                id: dataset_hash.into(),
            });
        }
        let total = config.fractions.len() * config.families.len();
        let record = RunRecord {
            run_id: uuid::Uuid::new_v4().simple().to_string(),
            created_at: Utc::now(),
            dataset_hash: dataset_hash.to_string(),
            config,
            manifest,
            status: RunStatus::Pending,
            progress: Progress { done: 0, total },
            result: None,
            error: None,
        };
        let dir = self.run_dir(&record.run_id)?;
        fs::create_dir_all(&dir)?;
        self.write_json(&dir.join("record.json"), &record)?;
        Ok(record)
    }

    pub fn get_run(&self, run_id: &str) -> Result<RunRecord> {
        let dir = self.run_dir(run_id)?;
        self.read_json(&dir.join("record.json"), "run", run_id)
    }

    /// Replaces a record after checking the status transition. The config,
    /// manifest, dataset and creation time are immutable.
    pub fn update_run(&self, record: &RunRecord) -> Result<()> {
        let current = self.get_run(&record.run_id)?;
        if !current.status.can_become(record.status) {
            return Err(StoreError::IllegalTransition {
                from: current.status,
                to: record.status,
            });
        }
        if current.config != record.config
            || current.manifest != record.manifest
            || current.dataset_hash != record.dataset_hash
            || current.created_at != record.created_at
        {
            return Err(StoreError::InvalidUpdate("run snapshot fields are immutable".into()));
        }
        if record.progress.done < current.progress.done {
            return Err(StoreError::InvalidUpdate("progress cannot go backwards".into()));
        }
        if record.status == RunStatus::Done && !record.result.as_ref().is_some_and(SweepResult::is_complete) {
            return Err(StoreError::InvalidUpdate("DONE requires a complete grid".into()));
        }
        let dir = self.run_dir(&record.run_id)?;
        if let Some(result) = &record.result {
            let csv = result.to_csv(&CsvOptions {
                include_timing: false,
                manifest_sha256: record.manifest_sha256(),
            });
            write_atomic(&dir.join("sweep.csv"), csv.as_bytes())?;
        }
        self.write_json(&dir.join("record.json"), record)
    }

    /// Newest first.
    pub fn list_runs(&self) -> Result<Vec<RunRecord>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(self.root.join("runs"))? {
            let entry = entry?;
            if !entry.file_type()?.is_dir() {
                continue;
            }
            let Some(id) = entry.file_name().to_str().map(str::to_string) else {
                continue;
            };
            match self.get_run(&id) {
                Ok(r) => out.push(r),
                // A run directory whose first record write never landed.
                Err(StoreError::NotFound { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        out.sort_by(|a, b| b.created_at.cmp(&a.created_at).then(b.run_id.cmp(&a.run_id)));
        Ok(out)
    }

    pub fn sweep_csv_path(&self, run_id: &str) -> Result<PathBuf> {
        Ok(self.run_dir(run_id)?.join("sweep.csv"))
    }

    // ---- blobs and models ----

    pub fn put_blob(&self, bytes: &[u8]) -> Result<String> {
        let hash = sha256_hex(bytes);
        let path = self.root.join("blobs").join(format!("{hash}.bin"));
        if !path.exists() {
            write_atomic(&path, bytes)?;
        }
        Ok(hash)
    }

    pub fn get_blob(&self, hash: &str) -> Result<Vec<u8>> {
        if !valid_token(hash) {
            return Err(StoreError::NotFound {
                kind: "blob",
                id: hash.into(),
            });
        }
        fs::read(self.root.join("blobs").join(format!("{hash}.bin"))).map_err(|_| StoreError::NotFound {
            kind: "blob",
            id: hash.into(),
        })
    }

    pub fn put_model(&self, run_id: &str, family: Family, fraction: f64, model: &TrainedClassifier) -> Result<String> {
        let hash = self.put_blob(&model.to_blob())?;
        let path = self
            .run_dir(run_id)?
            .join("models")
            .join(format!("{family}@{fraction}"));
        write_atomic(&path, hash.as_bytes())?;
        Ok(hash)
    }

    pub fn get_model(&self, run_id: &str, family: Family, fraction: f64) -> Result<TrainedClassifier> {
        let key = format!("{family}@{fraction}");
        let path = self.run_dir(run_id)?.join("models").join(&key);
        let hash = fs::read_to_string(&path).map_err(|_| StoreError::NotFound { kind: "model", id: key })?;
        let blob = self.get_blob(hash.trim())?;
        TrainedClassifier::from_blob(&blob).map_err(|e| StoreError::Corrupt {
            path,
            message: e.to_string(),
        })
    }

    // ---- ROI snapshots ----

    pub fn save_roi_snapshot(&self, run_id: &str, grid: &RoiGrid) -> Result<String> {
        let key = sha256_hex(&serde_json::to_vec(&grid.params).expect("params serialize"));
        let path = self.run_dir(run_id)?.join("roi").join(format!("{key}.json"));
        self.write_json(&path, grid)?;
        Ok(key)
    }

    pub fn get_roi_snapshot(&self, run_id: &str, params: &CostParams) -> Result<RoiGrid> {
        let key = sha256_hex(&serde_json::to_vec(params).expect("params serialize"));
        self.read_json(
            &self.run_dir(run_id)?.join("roi").join(format!("{key}.json")),
            "roi snapshot",
            &key,
        )
    }

    // ---- active-learning sessions ----

    pub fn create_session(&self, dataset_hash: &str, config: ALConfig, state: ALState) -> Result<SessionRecord> {
        if !self.has_dataset(dataset_hash) {
            return Err(StoreError::NotFound {
                kind: "dataset",
                id: dataset_hash.into(),
            });
        }
        let rec = SessionRecord {
            session_id: uuid::Uuid::new_v4().simple().to_string(),
            created_at: Utc::now(),
            dataset_hash: dataset_hash.into(),
            config,
            state,
        };
        self.save_session(&rec)?;
        Ok(rec)
    }

    pub fn save_session(&self, rec: &SessionRecord) -> Result<()> {
        if !valid_token(&rec.session_id) {
            return Err(StoreError::InvalidUpdate("bad session id".into()));
        }
        self.write_json(
            &self.root.join("sessions").join(format!("{}.json", rec.session_id)),
            rec,
        )
    }

    pub fn get_session(&self, session_id: &str) -> Result<SessionRecord> {
        if !valid_token(session_id) {
            return Err(StoreError::NotFound {
                kind: "session",
                id: session_id.into(),
            });
        }
        self.read_json(
            &self.root.join("sessions").join(format!("{session_id}.json")),
            "session",
            session_id,
        )
    }

    // ---- execution ----

    /// Runs a PENDING run to completion on the calling thread: RUNNING with
    /// per-cell progress, then DONE, PARTIAL (some cells failed) or FAILED.
    pub fn execute_run(&self, run_id: &str, workers: usize) -> Result<RunRecord> {
        let mut record = self.get_run(run_id)?;
        let ds = match self.get_dataset(&record.dataset_hash) {
            Ok(ds) => ds,
            Err(e) => {
                record.status = RunStatus::Failed;
                record.error = Some(e.to_string());
                self.update_run(&record)?;
                return Ok(record);
            }
        };
        record.status = RunStatus::Running;
        self.update_run(&record)?;

        let observer = StoreObserver {
            store: self,
            record: Mutex::new(record.clone()),
            failure: Mutex::new(None),
        };
        let outcome = run_sweep_with_workers(&ds, &record.config, &observer, workers);
        if let Some(e) = observer.failure.into_inner().expect("observer lock") {
            return Err(e);
        }
        let mut record = observer.record.into_inner().expect("observer lock");
        match outcome {
            Ok(result) => {
                record.status = if result.is_complete() {
                    RunStatus::Done
                } else if result.cells.iter().any(SweepCell::is_ok) {
                    RunStatus::Partial
                } else {
                    RunStatus::Failed
                };
                if record.status == RunStatus::Failed {
                    record.error = Some("every cell of the grid failed".into());
                }
                record.progress.done = record.progress.total;
                record.result = Some(result);
            }
            Err(e) => {
                record.status = RunStatus::Failed;
                record.error = Some(format!("{}: {e}", e.code()));
            }
        }
        self.update_run(&record)?;
        Ok(record)
    }
}

struct StoreObserver<'a> {
    store: &'a Store,
    record: Mutex<RunRecord>,
    failure: Mutex<Option<StoreError>>,
}

impl StoreObserver<'_> {
    fn note(&self, r: Result<()>) {
        if let Err(e) = r {
            self.failure.lock().expect("observer lock").get_or_insert(e);
        }
    }
}

impl SweepObserver for StoreObserver<'_> {
    fn cell_done(&self, _cell: &SweepCell, done: usize, _total: usize) {
        let mut rec = self.record.lock().expect("observer lock");
        if done > rec.progress.done {
            rec.progress.done = done;
            let r = self.store.update_run(&rec);
            drop(rec);
            self.note(r);
        }
    }

    fn model_trained(&self, cell: &SweepCell, model: &TrainedClassifier) {
        let run_id = self.record.lock().expect("observer lock").run_id.clone();
        let r = self
            .store
            .put_model(&run_id, cell.family, cell.fraction, model)
            .map(|_| ());
        self.note(r);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_synthetic;
    use crate::models::ClassifierSpec;

    fn small_config() -> SweepConfig {
        SweepConfig {
            fractions: vec![0.5, 1.0],
            families: vec![ClassifierSpec::default_for(Family::NaiveBayes, 0)],
            ..Default::default()
        }
    }

    #[test]
    fn dataset_round_trip_and_dedup() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let ds = generate_synthetic(50, 0.5, 0.9, 1).unwrap().dataset;
        let h1 = store.put_dataset(&ds).unwrap();
        let h2 = store.put_dataset(&ds).unwrap();
        assert_eq!(h1, h2);
        assert_eq!(h1, ds.fingerprint());
        assert_eq!(fs::read_dir(dir.path().join("datasets")).unwrap().count(), 2);
        assert_eq!(store.get_dataset(&h1).unwrap(), ds);
        assert!(matches!(
            store.get_dataset("deadbeef"),
            Err(StoreError::NotFound { .. })
        ));
        assert!(matches!(store.get_dataset("../etc"), Err(StoreError::NotFound { .. })));
    }

    #[test]
    fn run_lifecycle() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let ds = generate_synthetic(80, 0.5, 0.9, 2).unwrap().dataset;
        let hash = store.put_dataset(&ds).unwrap();
        assert!(store.create_run("nope", small_config(), None).is_err());

        let rec = store
            .create_run(&hash, small_config(), Some("seed = 0\n".into()))
            .unwrap();
        assert_eq!(rec.status, RunStatus::Pending);
        let done = store.execute_run(&rec.run_id, 1).unwrap();
        assert_eq!(done.status, RunStatus::Done);
        assert_eq!(done.progress, Progress { done: 2, total: 2 });

        let csv = fs::read_to_string(store.sweep_csv_path(&rec.run_id).unwrap()).unwrap();
        assert!(csv.starts_with(&format!("# manifest_sha256: {}\n", sha256_hex(b"seed = 0\n"))));

        let mut back = done.clone();
        back.status = RunStatus::Running;
        assert!(matches!(
            store.update_run(&back),
            Err(StoreError::IllegalTransition {
                from: RunStatus::Done,
                to: RunStatus::Running
            })
        ));

        // Re-opening sees the same records, newest first.
        let second = store.create_run(&hash, small_config(), None).unwrap();
        let reopened = Store::open(dir.path()).unwrap();
        let runs = reopened.list_runs().unwrap();
        assert_eq!(runs.len(), 2);
        assert_eq!(runs[0].run_id, second.run_id);
        assert_eq!(runs[1], done);
    }

    #[test]
    fn config_is_immutable() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let hash = store
            .put_dataset(&generate_synthetic(40, 0.5, 0.9, 3).unwrap().dataset)
            .unwrap();
        let mut rec = store.create_run(&hash, small_config(), None).unwrap();
        rec.status = RunStatus::Running;
        rec.config.seed = 99;
        assert!(matches!(store.update_run(&rec), Err(StoreError::InvalidUpdate(_))));
    }

    #[test]
    fn interrupted_write_leaves_previous_record() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let hash = store
            .put_dataset(&generate_synthetic(40, 0.5, 0.9, 4).unwrap().dataset)
            .unwrap();
        let rec = store.create_run(&hash, small_config(), None).unwrap();

        // A writer died after creating its temp file but before the rename.
        let run_dir = dir.path().join("runs").join(&rec.run_id);
        let tmp = run_dir.join(".record.json.deadbeef.tmp");
        fs::write(&tmp, b"{\"truncated").unwrap();
        assert_eq!(store.get_run(&rec.run_id).unwrap(), rec);
        assert_eq!(store.list_runs().unwrap(), vec![rec.clone()]);

        // The next open sweeps the leftover away.
        let reopened = Store::open(dir.path()).unwrap();
        assert!(!tmp.exists());
        assert_eq!(reopened.get_run(&rec.run_id).unwrap(), rec);
    }

    #[test]
    fn models_blobs_and_sessions() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let ds = generate_synthetic(60, 0.5, 0.9, 5).unwrap().dataset;
        let hash = store.put_dataset(&ds).unwrap();
        let mut cfg = small_config();
        cfg.persist_models = true;
        let rec = store.create_run(&hash, cfg, None).unwrap();
        store.execute_run(&rec.run_id, 0).unwrap();
        let m = store.get_model(&rec.run_id, Family::NaiveBayes, 1.0).unwrap();
        assert_eq!(m.family(), Family::NaiveBayes);
        assert!(store.get_model(&rec.run_id, Family::LinearSvc, 1.0).is_err());

        let al_cfg = ALConfig {
            annotation_budget: 10,
            ..Default::default()
        };
        let session = crate::active::ActiveSession::start(&ds, &al_cfg).unwrap();
        let srec = store.create_session(&hash, al_cfg, session.state().clone()).unwrap();
        assert_eq!(store.get_session(&srec.session_id).unwrap(), srec);
    }
}
