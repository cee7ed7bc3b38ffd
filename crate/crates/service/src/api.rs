//! Routes under `/api/v1`. Each handler decodes its input, calls one core
//! operation and encodes the result; no rules live here.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use xannot_core::anchoring::{resolve_text_anchor, AnchorResult, PageTextSnapshot};
use xannot_core::presentation::{layout_widgets, AnchorBox, MarginSpec, WidgetPlacement, WidgetSpec};
use xannot_core::{
    AnnotationBundle, AnnotationClass, Annotator, CapturePayload, CaptureReceipt, CleanupReport, Endpoint, EntityId,
    Error, Formality, ImportOutcome, InterchangeDocument, Link, Resource, ResourceKind, Selector, SelectorPayload,
    TextSpan,
};

use crate::error::ApiError;

pub const API_BASE: &str = "/api/v1";

type AppState = Arc<Annotator>;
type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateResource {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub locator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment_body: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub media_type: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSelector {
    pub resource_id: EntityId,
    pub payload: SelectorPayload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateLink {
    pub sources: Vec<Endpoint>,
    pub targets: Vec<Endpoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation_class: Option<AnnotationClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formality: Option<Formality>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutRequest {
    pub anchors: Vec<AnchorBox>,
    pub widgets: Vec<WidgetSpec>,
    pub margins: MarginSpec,
    pub colors: BTreeMap<EntityId, u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolveRequest {
    pub selector: TextSpan,
    pub snapshot: PageTextSnapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
    pub store_version: u64,
}

#[derive(Debug, Deserialize)]
struct LocatorQuery {
    locator: Option<String>,
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    document_id: Option<String>,
}

pub fn router(annotator: Arc<Annotator>) -> Router {
    let api = Router::new()
        .route("/health", get(health))
        .route("/resources", post(create_resource).get(find_resources))
        .route("/resources/{id}", get(get_resource))
        .route("/selectors", post(create_selector))
        .route("/selectors/{id}", get(get_selector))
        .route("/links", post(create_link))
        .route("/links/{id}", get(get_link).delete(delete_link))
        .route("/documents/{id}/annotations", get(annotations))
        .route("/entities/{id}/backlinks", get(backlinks))
        .route("/captures", post(capture))
        .route("/layout", post(layout))
        .route("/anchors/resolve", post(resolve))
        .route("/export", get(export))
        .route("/import", post(import))
        .route("/integrity", get(integrity));
    Router::new()
        .nest(API_BASE, api)
        .fallback(|| async {
            ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such route", serde_json::Value::Null)
        })
        .with_state(annotator)
}

fn body<T: DeserializeOwned>(bytes: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::malformed(e.to_string()))
}

fn id(raw: &str) -> ApiResult<EntityId> {
    raw.parse().map_err(|_| ApiError::malformed(format!("`{raw}` is not an entity id")))
}

/// Runs a mutating core call off the async workers; commits fsync.
async fn blocking<T: Send + 'static>(
    state: &AppState,
    f: impl FnOnce(&Annotator) -> Result<T, Error> + Send + 'static,
) -> ApiResult<T> {
    let state = state.clone();
    tokio::task::spawn_blocking(move || f(&state))
        .await
        .map_err(|e| {
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "IoFailure", e.to_string(), serde_json::Value::Null)
        })?
        .map_err(ApiError::from)
}

async fn health(State(a): State<AppState>) -> Json<Health> {
    Json(Health { status: "ok".into(), version: env!("CARGO_PKG_VERSION").into(), store_version: a.store().version() })
}

async fn create_resource(State(a): State<AppState>, bytes: Bytes) -> ApiResult<(StatusCode, Json<Resource>)> {
    let req: CreateResource = body(&bytes)?;
    let kind: ResourceKind = req.kind.parse().map_err(|_| ApiError::from(Error::InvalidKind(req.kind.clone())))?;
    let text = if kind == ResourceKind::Comment { req.comment_body } else { req.locator }.unwrap_or_default();
    let created = blocking(&a, move |a| a.create_resource(kind, &text, req.title, req.media_type)).await?;
    let status = if created.created { StatusCode::CREATED } else { StatusCode::OK };
    Ok((status, Json(created.value)))
}

async fn find_resources(State(a): State<AppState>, Query(q): Query<LocatorQuery>) -> Json<Vec<Resource>> {
    Json(match q.locator {
        Some(loc) => a.resource_by_locator(&loc).into_iter().collect(),
        None => a.graph().graph.resources().cloned().collect(),
    })
}

async fn get_resource(State(a): State<AppState>, Path(raw): Path<String>) -> ApiResult<Json<Resource>> {
    Ok(Json(a.resource(id(&raw)?)?))
}

async fn create_selector(State(a): State<AppState>, bytes: Bytes) -> ApiResult<(StatusCode, Json<Selector>)> {
    let req: CreateSelector = body(&bytes)?;
    let s = blocking(&a, move |a| a.create_selector(req.resource_id, req.payload)).await?;
    Ok((StatusCode::CREATED, Json(s)))
}

async fn get_selector(State(a): State<AppState>, Path(raw): Path<String>) -> ApiResult<Json<Selector>> {
    Ok(Json(a.selector(id(&raw)?)?))
}

async fn create_link(State(a): State<AppState>, bytes: Bytes) -> ApiResult<(StatusCode, Json<Link>)> {
    let req: CreateLink = body(&bytes)?;
    let l = blocking(&a, move |a| a.create_link(req.sources, req.targets, req.annotation_class, req.formality)).await?;
    Ok((StatusCode::CREATED, Json(l)))
}

async fn get_link(State(a): State<AppState>, Path(raw): Path<String>) -> ApiResult<Json<Link>> {
    Ok(Json(a.link(id(&raw)?)?))
}

async fn delete_link(State(a): State<AppState>, Path(raw): Path<String>) -> ApiResult<Json<CleanupReport>> {
    let link_id = id(&raw)?;
    Ok(Json(blocking(&a, move |a| a.delete_link(link_id)).await?))
}

async fn annotations(State(a): State<AppState>, Path(raw): Path<String>) -> ApiResult<Json<AnnotationBundle>> {
    Ok(Json(a.annotations_for(id(&raw)?)?))
}

async fn backlinks(State(a): State<AppState>, Path(raw): Path<String>) -> ApiResult<Json<Vec<Link>>> {
    Ok(Json(a.backlinks_for(id(&raw)?)?))
}

async fn capture(State(a): State<AppState>, bytes: Bytes) -> ApiResult<(StatusCode, Json<CaptureReceipt>)> {
    let payload: CapturePayload = body(&bytes)?;
    let receipt = blocking(&a, move |a| a.ingest_capture(payload)).await?;
    Ok((StatusCode::CREATED, Json(receipt)))
}

async fn layout(bytes: Bytes) -> ApiResult<Json<Vec<WidgetPlacement>>> {
    let req: LayoutRequest = body(&bytes)?;
    Ok(Json(layout_widgets(&req.anchors, &req.widgets, &req.margins, &req.colors)?))
}

async fn resolve(bytes: Bytes) -> ApiResult<Json<AnchorResult>> {
    let req: ResolveRequest = body(&bytes)?;
    Ok(Json(resolve_text_anchor(&req.selector, &req.snapshot)?))
}

async fn export(State(a): State<AppState>, Query(q): Query<ExportQuery>) -> ApiResult<Response> {
    let document_id = q.document_id.as_deref().map(id).transpose()?;
    let doc = a.export_bundle(document_id)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], doc.to_bytes()).into_response())
}

async fn import(State(a): State<AppState>, bytes: Bytes) -> ApiResult<Json<ImportOutcome>> {
    let doc = InterchangeDocument::parse(&bytes)?;
    Ok(Json(blocking(&a, move |a| a.import_bundle(&doc)).await?))
}

async fn integrity(State(a): State<AppState>) -> Json<xannot_core::IntegrityReport> {
    Json(a.check_integrity())
}
