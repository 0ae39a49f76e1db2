//! HTTP/JSON endpoints. Every JSON body, including errors, carries
//! `schema_version`.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use geoseg_core::rle::{MaskPayload, ScribblePayload};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::ServiceError;
use crate::session::CreateRequest;
use crate::slice::{encode_png, mask_slice, volume_slice, Modality, SliceQuery};
use crate::state::AppState;

pub const SCHEMA_VERSION: u32 = 1;

fn envelope(body: impl Serialize) -> Value {
    let mut v = serde_json::to_value(body).unwrap_or(Value::Null);
    match v.as_object_mut() {
        Some(obj) => {
            obj.insert("schema_version".into(), SCHEMA_VERSION.into());
            v
        }
        None => json!({ "schema_version": SCHEMA_VERSION, "data": v }),
    }
}

fn ok(body: impl Serialize) -> Response {
    Json(envelope(body)).into_response()
}

impl ServiceError {
    fn status_and_code(&self) -> (StatusCode, &'static str) {
        use geoseg_core::Error as E;
        match self {
            ServiceError::UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown_session"),
            ServiceError::Sealed(_) => (StatusCode::CONFLICT, "sealed"),
            ServiceError::Busy(_) => (StatusCode::CONFLICT, "busy"),
            ServiceError::NothingToRefine => (StatusCode::CONFLICT, "nothing_to_refine"),
            ServiceError::BadRequest(_) => (StatusCode::BAD_REQUEST, "bad_request"),
            ServiceError::Core(E::UnknownBackend { .. }) => (StatusCode::BAD_REQUEST, "unknown_backend"),
            ServiceError::Core(E::RefineUnsupported(_)) => (StatusCode::BAD_REQUEST, "refine_unsupported"),
            ServiceError::Core(E::DimsMismatch { .. }) => (StatusCode::UNPROCESSABLE_ENTITY, "dims_mismatch"),
            ServiceError::Core(
                E::Io { .. } | E::Header { .. } | E::UnsupportedDatatype(_) | E::SizeMismatch { .. } | E::InvalidVolume(_),
            ) => (StatusCode::UNPROCESSABLE_ENTITY, "load_failed"),
            ServiceError::Core(E::Rle(_)) => (StatusCode::BAD_REQUEST, "bad_request"),
            ServiceError::Core(_) | ServiceError::Config(_) | ServiceError::Log { .. } | ServiceError::Internal(_) => {
                (StatusCode::INTERNAL_SERVER_ERROR, "internal")
            }
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let (status, code) = self.status_and_code();
        if status.is_server_error() {
            tracing::error!("{self}");
        }
        let body = json!({
            "schema_version": SCHEMA_VERSION,
            "error": { "code": code, "message": self.to_string() },
        });
        (status, Json(body)).into_response()
    }
}

type Res = Result<Response, ServiceError>;

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ServiceError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ServiceError::BadRequest(e.body_text()))
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    payload: Result<Json<CreateRequest>, JsonRejection>,
) -> Res {
    let req = body(payload)?;
    let id = state.create(req).await?;
    let summary = state
        .read(&id, |s| {
            Ok(json!({
                "id": s.id(),
                "dims": s.pair().dims(),
                "spacing": s.pair().spacing(),
                "backend": s.backend(),
                "params": s.params(),
                "mask": MaskPayload::from_mask(s.current_mask()),
                "history": s.history(),
                "study_mode": s.gt().is_some(),
            }))
        })
        .await?;
    Ok((StatusCode::CREATED, Json(envelope(summary))).into_response())
}

async fn list_backends(State(state): State<Arc<AppState>>) -> Response {
    ok(json!({ "backends": state.registry.descriptors() }))
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Res {
    let v = state
        .read(&id, |s| {
            Ok(json!({
                "id": s.id(),
                "dims": s.pair().dims(),
                "spacing": s.pair().spacing(),
                "backend": s.backend(),
                "sealed": s.is_sealed(),
                "history": s.history(),
                "study_mode": s.gt().is_some(),
            }))
        })
        .await?;
    Ok(ok(v))
}

async fn propose(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Res {
    let r = state.mutate(&id, |s, reg| s.propose(reg)).await?;
    Ok(ok(json!({ "id": id, "result": r })))
}

async fn add_scribbles(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    payload: Result<Json<ScribblePayload>, JsonRejection>,
) -> Res {
    let delta = body(payload)?.to_set()?;
    let r = state.mutate(&id, move |s, _| s.add_scribbles(&delta)).await?;
    Ok(ok(json!({ "id": id, "result": r })))
}

async fn refine(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Res {
    let r = state.mutate(&id, |s, reg| s.refine(reg)).await?;
    Ok(ok(json!({ "id": id, "result": r })))
}

async fn submit(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Res {
    let r = state.mutate(&id, |s, _| s.submit()).await?;
    Ok(ok(r))
}

async fn get_mask(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Res {
    let v = state
        .read(&id, |s| {
            Ok(json!({
                "id": s.id(),
                "sealed": s.is_sealed(),
                "mask": MaskPayload::from_mask(s.current_mask()),
            }))
        })
        .await?;
    Ok(ok(v))
}

async fn get_scribbles(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Res {
    let v = state
        .read(&id, |s| Ok(ScribblePayload::from_set(s.scribbles())))
        .await?;
    Ok(ok(v))
}

async fn get_slice(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    query: Result<Query<SliceQuery>, axum::extract::rejection::QueryRejection>,
) -> Res {
    let Query(q) = query.map_err(|e| ServiceError::BadRequest(e.body_text()))?;
    let png = state
        .read(&id, |s| {
            let slice = match q.modality {
                Modality::Anatomical => {
                    volume_slice(s.pair().anatomical(), q.axis, q.index, q.window_center, q.window_width)?
                }
                Modality::Functional => {
                    volume_slice(s.pair().functional(), q.axis, q.index, q.window_center, q.window_width)?
                }
                Modality::Mask => mask_slice(s.current_mask(), q.axis, q.index)?,
            };
            encode_png(&slice)
        })
        .await?;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/backends", get(list_backends))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/propose", post(propose))
        .route("/sessions/{id}/scribbles", post(add_scribbles).get(get_scribbles))
        .route("/sessions/{id}/refine", post(refine))
        .route("/sessions/{id}/submit", post(submit))
        .route("/sessions/{id}/mask", get(get_mask))
        .route("/sessions/{id}/slice", get(get_slice))
        .with_state(state)
}
