//! Selections sent by external applications.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::id::{EntityId, Millis};
use crate::model::{ResourceKind, SelectorPayload};
use crate::rsl::Annotator;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapturedResource {
    pub kind: ResourceKind,
    pub locator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
}

/// A selection made in some other application, plus where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapturePayload {
    pub source_app: String,
    pub resource: CapturedResource,
    pub selection: SelectorPayload,
    /// Client clock; informational only. Stored entities use server time.
    pub captured_at: Millis,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureReceipt {
    pub resource_id: EntityId,
    pub selector_id: EntityId,
    pub resource_created: bool,
}

impl Annotator {
    /// Finds or creates the captured resource and adds a selector on it, in
    /// one transaction. The selector can then be used as a link endpoint.
    pub fn ingest_capture(&self, payload: CapturePayload) -> Result<CaptureReceipt> {
        let CapturePayload { resource, selection, .. } = payload;
        if resource.kind == ResourceKind::Comment {
            return Err(Error::IncompatibleSelectorKind {
                selector: selection.kind(),
                resource: ResourceKind::Comment,
            });
        }
        self.transaction(|tx| {
            let r = tx.create_resource(resource.kind, &resource.locator, resource.title, None)?;
            let s = tx.create_selector(r.value.id, selection)?;
            Ok(CaptureReceipt { resource_id: r.value.id, selector_id: s.id, resource_created: r.created })
        })
    }
}
