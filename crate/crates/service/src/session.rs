//! Planning sessions: an instance, its edit log and the last solve.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use tap_core::instance::{apply_edit, apply_edits, Edit, EditError, InstanceFile};
use tap_core::model::build;
use tap_core::solver::{solve, solve_with, Progress, SolveConfig, SolveHooks, SolveOutcome};
use tap_core::Instance;
use tokio::sync::broadcast;

use crate::error::ServiceError;

/// A finished solve and the revision it solved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredOutcome {
    pub revision: u64,
    pub config: SolveConfig,
    pub outcome: SolveOutcome,
}

/// Everything needed to restore or replay a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub id: String,
    pub instance: InstanceFile,
    pub edits: Vec<Edit>,
    pub revision: u64,
    pub last: Option<StoredOutcome>,
}

/// Solves `instance` with `edits` applied, exactly as a session does.
pub fn replay(instance: &Instance, edits: &[Edit], cfg: &SolveConfig) -> Result<SolveOutcome, EditError> {
    let edited = apply_edits(instance, edits)?;
    Ok(solve(&build(&edited), cfg))
}

/// Messages on a session's event stream.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Progress { revision: u64, line: String, progress: Progress },
    Done { revision: u64, status: String, objective: Option<i64> },
}

pub(crate) struct Running {
    pub revision: u64,
    pub cancel: Arc<AtomicBool>,
    pub progress: Arc<Mutex<Option<Progress>>>,
}

pub struct Session {
    id: String,
    base: Instance,
    edits: Vec<Edit>,
    current: Instance,
    last: Option<StoredOutcome>,
    pub(crate) running: Option<Running>,
    pub(crate) events: broadcast::Sender<Event>,
}

impl Session {
    fn new(id: String, base: Instance) -> Self {
        let (events, _) = broadcast::channel(256);
        Session { id, current: base.clone(), base, edits: Vec::new(), last: None, running: None, events }
    }

    fn restore(snapshot: Snapshot) -> Result<Self, ServiceError> {
        let base = Instance::from_file(snapshot.instance).map_err(|e| ServiceError::BadInstance(e.to_string()))?;
        let mut session = Session::new(snapshot.id, base);
        session.current = apply_edits(&session.base, &snapshot.edits).map_err(|e| ServiceError::BadEdit(e.0))?;
        session.edits = snapshot.edits;
        session.last = snapshot.last;
        Ok(session)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Number of accepted edits.
    /// Revision being solved, if a solve is running.
    pub fn running_revision(&self) -> Option<u64> {
        self.running.as_ref().map(|r| r.revision)
    }

    pub fn revision(&self) -> u64 {
        self.edits.len() as u64
    }

    pub fn base(&self) -> &Instance {
        &self.base
    }

    /// The instance with every edit applied.
    pub fn instance(&self) -> &Instance {
        &self.current
    }

    pub fn edits(&self) -> &[Edit] {
        &self.edits
    }

    pub fn last(&self) -> Option<&StoredOutcome> {
        self.last.as_ref()
    }

    /// True when edits arrived after the last solve.
    pub fn is_stale(&self) -> bool {
        self.last.as_ref().is_some_and(|l| l.revision != self.revision())
    }

    pub fn is_running(&self) -> bool {
        self.running.is_some()
    }

    /// Latest progress record of the running solve.
    pub fn progress(&self) -> Option<Progress> {
        self.running.as_ref().and_then(|r| r.progress.lock().unwrap().clone())
    }

    /// The instance as of `revision`.
    pub fn instance_at(&self, revision: u64) -> Instance {
        apply_edits(&self.base, &self.edits[..revision as usize]).expect("accepted edits replay")
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot { id: self.id.clone(), instance: self.base.to_file(), edits: self.edits.clone(), revision: self.revision(), last: self.last.clone() }
    }

    fn apply(&mut self, edit: Edit) -> Result<u64, ServiceError> {
        self.current = apply_edit(&self.current, &edit).map_err(|e| ServiceError::BadEdit(e.0))?;
        self.edits.push(edit);
        Ok(self.revision())
    }
}

/// A solve handed to a worker.
pub struct Job {
    pub(crate) session: Arc<Mutex<Session>>,
    pub(crate) instance: Instance,
    pub(crate) config: SolveConfig,
    pub(crate) revision: u64,
    pub(crate) cancel: Arc<AtomicBool>,
    pub(crate) progress: Arc<Mutex<Option<Progress>>>,
    pub(crate) events: broadcast::Sender<Event>,
}

/// Sessions by id, snapshotted to `dir` when one is given.
pub struct SessionStore {
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    dir: Option<PathBuf>,
    counter: AtomicU64,
}

impl SessionStore {
    pub fn in_memory() -> Self {
        SessionStore { sessions: Mutex::new(HashMap::new()), dir: None, counter: AtomicU64::new(0) }
    }

    /// A store persisted under `dir`, restoring the sessions found there.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| ServiceError::Internal(format!("{}: {e}", dir.display())))?;
        let mut sessions = HashMap::new();
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
            .map_err(|e| ServiceError::Internal(format!("{}: {e}", dir.display())))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        for path in paths {
            let text = std::fs::read_to_string(&path).map_err(|e| ServiceError::Internal(format!("{}: {e}", path.display())))?;
            let snapshot: Snapshot =
                serde_json::from_str(&text).map_err(|e| ServiceError::Internal(format!("{}: {e}", path.display())))?;
            let session = Session::restore(snapshot)?;
            sessions.insert(session.id.clone(), Arc::new(Mutex::new(session)));
        }
        let counter = AtomicU64::new(sessions.len() as u64);
        Ok(SessionStore { sessions: Mutex::new(sessions), dir: Some(dir), counter })
    }

    fn fresh_id(&self) -> String {
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        let nanos = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_nanos() as u64);
        format!("s{n:04}-{:012x}", (nanos ^ n.wrapping_mul(0x9E37_79B9_7F4A_7C15)) & 0xffff_ffff_ffff)
    }

    pub fn create(&self, instance_json: &str) -> Result<String, ServiceError> {
        let instance = Instance::from_json(instance_json).map_err(|e| ServiceError::BadInstance(e.to_string()))?;
        let mut sessions = self.sessions.lock().unwrap();
        let mut id = self.fresh_id();
        while sessions.contains_key(&id) {
            id = self.fresh_id();
        }
        let session = Session::new(id.clone(), instance);
        self.persist(&session)?;
        sessions.insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }

    pub fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
        self.sessions.lock().unwrap().get(id).cloned().ok_or_else(|| ServiceError::NotFound(id.to_string()))
    }

    pub fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.lock().unwrap().keys().cloned().collect();
        ids.sort();
        ids
    }

    /// Appends an edit and returns the new revision.
    pub fn apply_edit(&self, id: &str, edit: Edit) -> Result<u64, ServiceError> {
        let handle = self.get(id)?;
        let mut session = handle.lock().unwrap();
        let revision = session.apply(edit)?;
        self.persist(&session)?;
        Ok(revision)
    }

    /// Marks a solve of the current revision as running and returns the job
    /// for a worker, or the progress of the solve already running.
    pub fn start(&self, id: &str, config: SolveConfig) -> Result<Job, ServiceError> {
        config.validate().map_err(|e| ServiceError::BadConfig(e.0))?;
        let handle = self.get(id)?;
        let mut session = handle.lock().unwrap();
        if session.is_running() {
            return Err(ServiceError::Busy { progress: session.progress() });
        }
        let cancel = Arc::new(AtomicBool::new(false));
        let progress = Arc::new(Mutex::new(None));
        let revision = session.revision();
        session.running = Some(Running { revision, cancel: cancel.clone(), progress: progress.clone() });
        Ok(Job {
            session: handle.clone(),
            instance: session.current.clone(),
            config,
            revision,
            cancel,
            progress,
            events: session.events.clone(),
        })
    }

    /// Runs `job` on the calling thread and stores its outcome.
    pub fn run(&self, job: Job) -> Result<StoredOutcome, ServiceError> {
        let ir = build(&job.instance);
        let on_progress = |p: &Progress| {
            *job.progress.lock().unwrap() = Some(p.clone());
            let _ = job.events.send(Event::Progress { revision: job.revision, line: p.line(), progress: p.clone() });
        };
        let hooks = SolveHooks { cancel: Some(&job.cancel), progress: Some(&on_progress) };
        let outcome = solve_with(&ir, &job.config, hooks);
        let stored = StoredOutcome { revision: job.revision, config: job.config.clone(), outcome };
        let mut session = job.session.lock().unwrap();
        session.running = None;
        session.last = Some(stored.clone());
        let _ = job.events.send(Event::Done {
            revision: job.revision,
            status: stored.outcome.status.to_string(),
            objective: stored.outcome.objective,
        });
        self.persist(&session)?;
        Ok(stored)
    }

    /// Asks the running solve to stop. False when none is running.
    pub fn cancel(&self, id: &str) -> Result<bool, ServiceError> {
        let handle = self.get(id)?;
        let session = handle.lock().unwrap();
        match &session.running {
            Some(r) => {
                r.cancel.store(true, Ordering::Relaxed);
                Ok(true)
            }
            None => Ok(false),
        }
    }

    fn persist(&self, session: &Session) -> Result<(), ServiceError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        write_atomically(&dir.join(format!("{}.json", session.id)), &serde_json::to_string_pretty(&session.snapshot()).expect("snapshot serializes"))
    }
}

fn write_atomically(path: &Path, text: &str) -> Result<(), ServiceError> {
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, text)
        .and_then(|_| std::fs::rename(&tmp, path))
        .map_err(|e| ServiceError::Internal(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tap_core::instance::EditKind;

    const TWO: &str = r#"{"label": "t",
        "tas": [{"id": "a", "year": 1, "employment_fraction": 0, "carryover_hours": 10},
                {"id": "b", "year": 1, "employment_fraction": 0, "carryover_hours": 10}],
        "courses": [{"id": "c", "tasks": [{"kind": "admin", "total_hours": 10, "required_tas": 1}]}]}"#;

    fn forbid(ta: &str) -> Edit {
        Edit::new(EditKind::Forbid { ta: ta.into(), course: "c".into() })
    }

    #[test]
    fn edits_advance_the_revision_and_stale_the_outcome() {
        let store = SessionStore::in_memory();
        let id = store.create(TWO).unwrap();
        let job = store.start(&id, SolveConfig::default()).unwrap();
        assert!(matches!(store.start(&id, SolveConfig::default()), Err(ServiceError::Busy { .. })));
        let stored = store.run(job).unwrap();
        assert_eq!(stored.revision, 0);
        let handle = store.get(&id).unwrap();
        assert!(!handle.lock().unwrap().is_stale());
        assert_eq!(store.apply_edit(&id, forbid("a")).unwrap(), 1);
        assert!(handle.lock().unwrap().is_stale());
        assert!(store.apply_edit(&id, Edit::new(EditKind::Forbid { ta: "z".into(), course: "c".into() })).is_err());
        assert_eq!(handle.lock().unwrap().revision(), 1);
    }

    #[test]
    fn ids_are_distinct_and_unknown_ids_are_reported() {
        let store = SessionStore::in_memory();
        let (a, b) = (store.create(TWO).unwrap(), store.create(TWO).unwrap());
        assert_ne!(a, b);
        assert!(matches!(store.get("nope"), Err(ServiceError::NotFound(_))));
        assert!(matches!(store.create("{"), Err(ServiceError::BadInstance(_))));
    }

    #[test]
    fn snapshots_restore_sessions() {
        let dir = tempfile::tempdir().unwrap();
        let id = {
            let store = SessionStore::open(dir.path()).unwrap();
            let id = store.create(TWO).unwrap();
            store.apply_edit(&id, forbid("b")).unwrap();
            let job = store.start(&id, SolveConfig::default()).unwrap();
            store.run(job).unwrap();
            id
        };
        let store = SessionStore::open(dir.path()).unwrap();
        let handle = store.get(&id).unwrap();
        let session = handle.lock().unwrap();
        assert_eq!(session.revision(), 1);
        assert!(session.instance().pair(1, 0).forbidden);
        let last = session.last().unwrap();
        let again = replay(session.base(), session.edits(), &last.config).unwrap();
        assert_eq!(again.canonical_json(), last.outcome.canonical_json());
    }
}
