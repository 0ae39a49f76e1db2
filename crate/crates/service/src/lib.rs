//! Annotation session service: session state, event log and replay, and the
//! HTTP/JSON API over them.

pub mod config;
pub mod error;
pub mod event;
pub mod http;
pub mod session;
pub mod slice;
pub mod state;

pub use config::{BusyPolicy, ServiceConfig};
pub use error::{ServiceError, ServiceResult};
pub use event::{read_log, EventKind, EventPayload, LoggedEvent};
pub use http::{router, SCHEMA_VERSION};
pub use session::{CreateRequest, FinalRecord, Session};
pub use state::AppState;
