//! HTTP routes and the live WebSocket endpoint.

use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use serde::Deserialize;
use translucent_core::graph::DEFAULT_THRESHOLD;
use translucent_core::sync::SubmitError;
use translucent_core::wire::{ClientMessage, ServerMessage};

use crate::service::{CreateSession, ServiceError, SessionService};

/// How long a new connection may take to send its hello.
const HELLO_TIMEOUT: Duration = Duration::from_secs(10);

pub fn router(service: SessionService) -> Router {
    Router::new()
        .route("/corpora", get(list_corpora))
        .route("/sessions", get(list_sessions).post(create_session))
        .route("/sessions/{id}/snapshot", get(snapshot))
        .route("/sessions/{id}/log", get(export_log))
        .route("/sessions/{id}/graph", get(graph))
        .route("/sessions/{id}/documents/{doc_id}", get(document))
        .route("/sessions/{id}/live", get(live))
        .with_state(service)
}

pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        Self(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        use ServiceError as E;
        let status = match &self.0 {
            E::UnknownCorpus(_) | E::UnknownSession(_) | E::UnknownDocument(_) => {
                StatusCode::NOT_FOUND
            }
            E::SessionExists(_) | E::RoleTaken(_) => StatusCode::CONFLICT,
            E::InvalidSessionId(_)
            | E::InvalidConfig(_)
            | E::Protocol(_)
            | E::UnsupportedVersion(_)
            | E::ActorMismatch { .. } => StatusCode::BAD_REQUEST,
            E::Submit(SubmitError::Persist(_)) => StatusCode::INTERNAL_SERVER_ERROR,
            E::Submit(_) => StatusCode::BAD_REQUEST,
            E::BadToken => StatusCode::UNAUTHORIZED,
            E::NotMember | E::Forbidden { .. } => StatusCode::FORBIDDEN,
            E::Corpus { .. } | E::Log { .. } | E::Recover { .. } | E::Io { .. } => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        (
            status,
            Json(serde_json::json!({ "error": self.0.to_string() })),
        )
            .into_response()
    }
}

async fn list_corpora(State(service): State<SessionService>) -> impl IntoResponse {
    Json(service.corpora())
}

async fn list_sessions(State(service): State<SessionService>) -> impl IntoResponse {
    Json(service.sessions())
}

async fn create_session(
    State(service): State<SessionService>,
    Json(req): Json<CreateSession>,
) -> Result<impl IntoResponse, ApiError> {
    let summary = service.create_session(req)?;
    Ok((StatusCode::CREATED, Json(summary)))
}

async fn snapshot(
    State(service): State<SessionService>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let snapshot = service.snapshot(&id)?;
    Ok((
        [(header::CONTENT_TYPE, "application/json")],
        snapshot.to_json(),
    )
        .into_response())
}

async fn export_log(
    State(service): State<SessionService>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let text = service.export_log(&id)?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], text).into_response())
}

#[derive(Debug, Deserialize)]
struct GraphQuery {
    threshold: Option<f64>,
}

async fn graph(
    State(service): State<SessionService>,
    Path(id): Path<String>,
    Query(q): Query<GraphQuery>,
) -> Result<Response, ApiError> {
    let graph = service.graph(&id, q.threshold.unwrap_or(DEFAULT_THRESHOLD))?;
    Ok(Json(graph).into_response())
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
        .map(str::trim)
}

async fn document(
    State(service): State<SessionService>,
    Path((id, doc_id)): Path<(String, String)>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let token = bearer(&headers).ok_or(ServiceError::BadToken)?;
    let doc = service.document(&id, token, &doc_id)?;
    Ok(Json(doc).into_response())
}

async fn live(
    State(service): State<SessionService>,
    Path(id): Path<String>,
    ws: WebSocketUpgrade,
) -> Response {
    ws.on_upgrade(move |socket| connection(service, id, socket))
}

fn text(msg: &ServerMessage) -> Message {
    Message::Text(msg.to_json().into())
}

async fn error_and_close(socket: &mut WebSocket, message: String) {
    let _ = socket.send(text(&ServerMessage::Error { message })).await;
    let _ = socket.close().await;
}

async fn connection(service: SessionService, session_id: String, mut socket: WebSocket) {
    let hello = match tokio::time::timeout(HELLO_TIMEOUT, socket.recv()).await {
        Ok(Some(Ok(Message::Text(t)))) => serde_json::from_str::<ClientMessage>(&t),
        Ok(_) => return,
        Err(_) => return error_and_close(&mut socket, "expected hello".into()).await,
    };
    let (role, version) = match hello {
        Ok(ClientMessage::Hello {
            session,
            role,
            version,
        }) if session == session_id => (role, version),
        Ok(ClientMessage::Hello { session, .. }) => {
            return error_and_close(
                &mut socket,
                format!("hello names session `{session}`, not `{session_id}`"),
            )
            .await
        }
        Ok(_) => return error_and_close(&mut socket, "expected hello".into()).await,
        Err(e) => return error_and_close(&mut socket, format!("malformed message: {e}")).await,
    };
    let membership = match service.join(&session_id, role, version) {
        Ok(m) => m,
        Err(e) => return error_and_close(&mut socket, e.to_string()).await,
    };
    tracing::info!(session = %session_id, %role, "joined");
    let conn_id = membership.conn_id;
    let mut rx = membership.rx;
    let (mut sink, mut stream) = socket.split();

    let writer = tokio::spawn(async move {
        while let Some(msg) = rx.recv().await {
            if sink.send(text(&msg)).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    });

    while let Some(Ok(frame)) = stream.next().await {
        let raw = match frame {
            Message::Text(t) => t,
            Message::Close(_) => break,
            _ => continue,
        };
        let result = match serde_json::from_str::<ClientMessage>(&raw) {
            Ok(ClientMessage::Submit { op }) => service.submit(&session_id, role, conn_id, op),
            Ok(ClientMessage::Hello { .. }) => Err(ServiceError::Protocol("already joined".into())),
            Err(e) => Err(ServiceError::Protocol(format!("malformed message: {e}"))),
        };
        if let Err(e) = result {
            tracing::warn!(session = %session_id, %role, error = %e, "submit failed");
            service.send_to(
                &session_id,
                role,
                conn_id,
                ServerMessage::Error {
                    message: e.to_string(),
                },
            );
        }
    }

    service.leave(&session_id, role, conn_id);
    writer.abort();
    tracing::info!(session = %session_id, %role, "left");
}
