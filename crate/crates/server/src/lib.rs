//! Collaborative session server: corpus registry, sequenced sessions with
//! durable logs, document access by role and the live sync endpoint.

pub mod http;
pub mod service;

pub use http::router;
pub use service::{CreateSession, ServiceError, SessionService, SessionSummary};
