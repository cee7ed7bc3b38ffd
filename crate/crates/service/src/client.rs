//! Blocking HTTP client for the `/api/v1` routes. Used by the CLI's capture
//! sender and by the HTTP tests.

use serde::de::DeserializeOwned;
use serde::Serialize;
use ureq::http::Response;
use ureq::Body;
use xannot_core::anchoring::AnchorResult;
use xannot_core::presentation::WidgetPlacement;
use xannot_core::{
    AnnotationBundle, CapturePayload, CaptureReceipt, CleanupReport, EntityId, ImportOutcome, Link, Resource, Selector,
};

use crate::api::{CreateLink, CreateResource, CreateSelector, Health, LayoutRequest, ResolveRequest};
use crate::error::ErrorBody;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    /// The service answered with an error body.
    #[error("{} ({status}): {}", body.code, body.message)]
    Api { status: u16, body: ErrorBody },
    #[error("request failed: {0}")]
    Transport(String),
    #[error("unexpected response: {0}")]
    Decode(String),
}

impl ClientError {
    /// Error name as reported by the service, or a local one.
    pub fn code(&self) -> &str {
        match self {
            ClientError::Api { body, .. } => &body.code,
            ClientError::Transport(_) => "ServiceUnreachable",
            ClientError::Decode(_) => "MalformedResponse",
        }
    }
}

pub type ClientResult<T> = Result<T, ClientError>;

#[derive(Debug, Clone)]
pub struct Client {
    agent: ureq::Agent,
    base: String,
}

impl Client {
    /// `base` is the API root, e.g. `http://127.0.0.1:7341/api/v1`.
    pub fn new(base: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder().http_status_as_error(false).build().new_agent();
        Client { agent, base: base.into().trim_end_matches('/').to_string() }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    pub fn health(&self) -> ClientResult<Health> {
        self.get(&self.url("/health"))
    }

    /// Returns the resource and whether it was newly created.
    pub fn create_resource(&self, req: &CreateResource) -> ClientResult<(Resource, bool)> {
        let resp = self.agent.post(self.url("/resources")).send_json(req).map_err(transport)?;
        let created = resp.status().as_u16() == 201;
        Ok((decode(resp)?, created))
    }

    pub fn resource(&self, id: EntityId) -> ClientResult<Resource> {
        self.get(&self.url(&format!("/resources/{id}")))
    }

    pub fn resources_by_locator(&self, locator: &str) -> ClientResult<Vec<Resource>> {
        decode(self.agent.get(self.url("/resources")).query("locator", locator).call().map_err(transport)?)
    }

    pub fn create_selector(&self, req: &CreateSelector) -> ClientResult<Selector> {
        self.post(&self.url("/selectors"), req)
    }

    pub fn selector(&self, id: EntityId) -> ClientResult<Selector> {
        self.get(&self.url(&format!("/selectors/{id}")))
    }

    pub fn create_link(&self, req: &CreateLink) -> ClientResult<Link> {
        self.post(&self.url("/links"), req)
    }

    pub fn link(&self, id: EntityId) -> ClientResult<Link> {
        self.get(&self.url(&format!("/links/{id}")))
    }

    pub fn delete_link(&self, id: EntityId) -> ClientResult<CleanupReport> {
        decode(self.agent.delete(self.url(&format!("/links/{id}"))).call().map_err(transport)?)
    }

    pub fn annotations(&self, document_id: EntityId) -> ClientResult<AnnotationBundle> {
        self.get(&self.url(&format!("/documents/{document_id}/annotations")))
    }

    pub fn backlinks(&self, id: EntityId) -> ClientResult<Vec<Link>> {
        self.get(&self.url(&format!("/entities/{id}/backlinks")))
    }

    pub fn capture(&self, payload: &CapturePayload) -> ClientResult<CaptureReceipt> {
        self.post(&self.url("/captures"), payload)
    }

    pub fn layout(&self, req: &LayoutRequest) -> ClientResult<Vec<WidgetPlacement>> {
        self.post(&self.url("/layout"), req)
    }

    pub fn resolve(&self, req: &ResolveRequest) -> ClientResult<AnchorResult> {
        self.post(&self.url("/anchors/resolve"), req)
    }

    /// Raw interchange bytes.
    pub fn export(&self, document_id: Option<EntityId>) -> ClientResult<Vec<u8>> {
        let mut req = self.agent.get(self.url("/export"));
        if let Some(id) = document_id {
            req = req.query("document_id", id.to_string());
        }
        let mut resp = req.call().map_err(transport)?;
        check(&mut resp)?;
        resp.body_mut().with_config().limit(u64::MAX).read_to_vec().map_err(|e| ClientError::Decode(e.to_string()))
    }

    pub fn import(&self, bytes: &[u8]) -> ClientResult<ImportOutcome> {
        let resp =
            self.agent.post(self.url("/import")).content_type("application/json").send(bytes).map_err(transport)?;
        decode(resp)
    }

    fn get<T: DeserializeOwned>(&self, url: &str) -> ClientResult<T> {
        decode(self.agent.get(url).call().map_err(transport)?)
    }

    fn post<T: DeserializeOwned>(&self, url: &str, body: &impl Serialize) -> ClientResult<T> {
        decode(self.agent.post(url).send_json(body).map_err(transport)?)
    }
}

fn transport(e: ureq::Error) -> ClientError {
    ClientError::Transport(e.to_string())
}

fn check(resp: &mut Response<Body>) -> ClientResult<()> {
    let status = resp.status().as_u16();
    if status < 400 {
        return Ok(());
    }
    let body = resp.body_mut().read_json::<ErrorBody>().map_err(|e| ClientError::Decode(e.to_string()))?;
    Err(ClientError::Api { status, body })
}

fn decode<T: DeserializeOwned>(mut resp: Response<Body>) -> ClientResult<T> {
    check(&mut resp)?;
    let bytes =
        resp.body_mut().with_config().limit(u64::MAX).read_to_vec().map_err(|e| ClientError::Decode(e.to_string()))?;
    serde_json::from_slice(&bytes).map_err(|e| ClientError::Decode(e.to_string()))
}
