//! The `.xannot.json` sharing format.
//!
//! One JSON object with `schema_version` and the arrays `resources`,
//! `selectors` and `links`. Entities appear sorted by id with the same field
//! names as the domain types; timestamps are epoch milliseconds. Output is
//! pretty-printed with two-space indentation and a trailing newline, so a
//! given graph always serializes to the same bytes.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::id::EntityId;
use crate::model::{Endpoint, Link, Resource, ResourceKind, Selector};

pub const SCHEMA_VERSION: u64 = 1;
pub const FILE_EXTENSION: &str = ".xannot.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterchangeDocument {
    pub schema_version: u64,
    pub resources: Vec<Resource>,
    pub selectors: Vec<Selector>,
    pub links: Vec<Link>,
}

impl InterchangeDocument {
    pub fn empty() -> Self {
        InterchangeDocument {
            schema_version: SCHEMA_VERSION,
            resources: Vec::new(),
            selectors: Vec::new(),
            links: Vec::new(),
        }
    }

    /// Builds a document from entity lists, sorting each by id.
    pub fn from_parts(mut resources: Vec<Resource>, mut selectors: Vec<Selector>, mut links: Vec<Link>) -> Self {
        resources.sort_by_key(|r| r.id);
        selectors.sort_by_key(|s| s.id);
        links.sort_by_key(|l| l.id);
        InterchangeDocument { schema_version: SCHEMA_VERSION, resources, selectors, links }
    }

    pub fn from_graph(g: &Graph) -> Self {
        Self::from_parts(
            g.resources().cloned().collect(),
            g.selectors().cloned().collect(),
            g.links().cloned().collect(),
        )
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("interchange document serializes");
        out.push(b'\n');
        out
    }

    /// Parses and checks a document: schema version, well-formed entities,
    /// unique ids, and every reference resolving inside the document.
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_slice(bytes).map_err(|e| Error::MalformedDocument(e.to_string()))?;
        let version = value
            .get("schema_version")
            .ok_or_else(|| Error::MalformedDocument("missing schema_version".into()))?
            .as_u64()
            .ok_or_else(|| Error::MalformedDocument("schema_version is not an integer".into()))?;
        if version != SCHEMA_VERSION {
            return Err(Error::VersionUnsupported(version));
        }
        let doc: InterchangeDocument =
            serde_json::from_value(value).map_err(|e| Error::MalformedDocument(e.to_string()))?;
        doc.validate()?;
        Ok(doc)
    }

    /// Structural checks done by [`parse`](Self::parse); also run on import.
    pub fn validate(&self) -> Result<()> {
        let malformed = |msg: String| Err(Error::MalformedDocument(msg));
        let mut ids = BTreeSet::new();
        let all_ids = self
            .resources
            .iter()
            .map(|r| r.id)
            .chain(self.selectors.iter().map(|s| s.id))
            .chain(self.links.iter().map(|l| l.id));
        for id in all_ids {
            if !ids.insert(id) {
                return malformed(format!("duplicate id {id}"));
            }
        }
        let resources: BTreeSet<EntityId> = self.resources.iter().map(|r| r.id).collect();
        let selectors: BTreeSet<EntityId> = self.selectors.iter().map(|s| s.id).collect();
        let mut locators = BTreeSet::new();
        for r in &self.resources {
            if let Some(p) = r.problem() {
                return malformed(format!("resource {}: {p}", r.id));
            }
            if r.kind != ResourceKind::Comment {
                if let Some(loc) = &r.locator {
                    if !locators.insert(loc.as_str()) {
                        return malformed(format!("locator `{loc}` appears twice"));
                    }
                }
            }
        }
        let by_id = |id: &EntityId| self.resources.iter().find(|r| r.id == *id);
        for s in &self.selectors {
            let Some(r) = by_id(&s.resource_id) else {
                return malformed(format!("selector {} refers to missing resource {}", s.id, s.resource_id));
            };
            if !r.kind.admits(s.payload.kind()) {
                return malformed(format!("selector {} kind does not fit its {} resource", s.id, r.kind));
            }
            if let Some(v) = s.payload.violations().first() {
                return malformed(format!("selector {}: {v}", s.id));
            }
        }
        for l in &self.links {
            if let Some(p) = l.problem() {
                return malformed(format!("link {}: {p}", l.id));
            }
            for e in l.endpoints() {
                let found = match e {
                    Endpoint::Resource(id) => resources.contains(id),
                    Endpoint::Selector(id) => selectors.contains(id),
                };
                if !found {
                    return malformed(format!("link {} endpoint {e} is not in the document", l.id));
                }
            }
        }
        Ok(())
    }
}
