//! HTTP planning service. A session holds an instance and an ordered log of
//! planner edits (pins, forbids, bound and weight changes). Solves run on a
//! background worker, one per session at a time, and stream progress as
//! server-sent events. Sessions are snapshotted so a restart restores them and
//! any stored outcome can be replayed from its instance, edits and config.

mod api;
mod error;
mod session;

pub use api::{router, serve, Cell, OutcomeView, ReportBundle, SessionView};
pub use error::ServiceError;
pub use session::{replay, Event, Job, Session, SessionStore, Snapshot, StoredOutcome};
