use std::path::PathBuf;

use crate::id::EntityId;
use crate::model::{Endpoint, ResourceKind, SelectorKind, Violation};
use crate::store::IntegrityReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors of the entity-graph operations and the store beneath them.
///
/// [`Error::code`] gives the stable name clients match on.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("comment body is empty")]
    EmptyBody,
    #[error("locator is empty")]
    EmptyLocator,
    #[error("invalid resource kind `{0}`")]
    InvalidKind(String),
    #[error("locator `{locator}` already belongs to a {existing} resource")]
    LocatorConflict { locator: String, existing: ResourceKind },
    #[error("unknown resource {0}")]
    UnknownResource(EntityId),
    #[error("unknown selector {0}")]
    UnknownSelector(EntityId),
    #[error("unknown link {0}")]
    UnknownLink(EntityId),
    #[error("unknown entity {0}")]
    UnknownEntity(EntityId),
    #[error("{selector} selector cannot refer to a {resource} resource")]
    IncompatibleSelectorKind { selector: SelectorKind, resource: ResourceKind },
    #[error("invalid payload: {}", join(.0))]
    InvalidPayload(Vec<Violation>),
    #[error("endpoint {0} does not exist")]
    DanglingEndpoint(Endpoint),
    #[error("link has no sources")]
    EmptySources,
    #[error("link has no targets")]
    EmptyTargets,
    #[error("endpoint {0} is both a source and a target")]
    SelfReference(Endpoint),
    #[error("resource {0} is not a pdf document")]
    NotADocument(EntityId),
    #[error("resource {0} is still referenced")]
    ResourceInUse(EntityId),
    #[error("selector {0} is still referenced by a link")]
    SelectorInUse(EntityId),
    #[error("transaction would break store integrity")]
    IntegrityViolation(Box<IntegrityReport>),
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("unsupported schema version {0}")]
    VersionUnsupported(u64),
    #[error("store file corrupt at line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error("store {0} is locked by another process")]
    StoreLocked(PathBuf),
    #[error("i/o failure: {0}")]
    IoFailure(#[from] std::io::Error),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyBody => "EmptyBody",
            Error::EmptyLocator => "EmptyLocator",
            Error::InvalidKind(_) => "InvalidKind",
            Error::LocatorConflict { .. } => "LocatorConflict",
            Error::UnknownResource(_) => "UnknownResource",
            Error::UnknownSelector(_) => "UnknownSelector",
            Error::UnknownLink(_) => "UnknownLink",
            Error::UnknownEntity(_) => "UnknownEntity",
            Error::IncompatibleSelectorKind { .. } => "IncompatibleSelectorKind",
            Error::InvalidPayload(_) => "InvalidPayload",
            Error::DanglingEndpoint(_) => "DanglingEndpoint",
            Error::EmptySources => "EmptySources",
            Error::EmptyTargets => "EmptyTargets",
            Error::SelfReference(_) => "SelfReference",
            Error::NotADocument(_) => "NotADocument",
            Error::ResourceInUse(_) => "ResourceInUse",
            Error::SelectorInUse(_) => "SelectorInUse",
            Error::IntegrityViolation(_) => "IntegrityViolation",
            Error::MalformedDocument(_) => "MalformedDocument",
            Error::VersionUnsupported(_) => "VersionUnsupported",
            Error::Corrupt { .. } => "Corrupt",
            Error::StoreLocked(_) => "StoreLocked",
            Error::IoFailure(_) => "IoFailure",
        }
    }

    /// Structured detail for error bodies, when the variant carries any.
    pub fn details(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            Error::InvalidPayload(v) => json!({ "violations": v }),
            Error::IntegrityViolation(report) => json!({ "report": report }),
            Error::DanglingEndpoint(e) | Error::SelfReference(e) => json!({ "endpoint": e }),
            Error::UnknownResource(id)
            | Error::UnknownSelector(id)
            | Error::UnknownLink(id)
            | Error::UnknownEntity(id)
            | Error::NotADocument(id)
            | Error::ResourceInUse(id)
            | Error::SelectorInUse(id) => json!({ "id": id }),
            Error::IncompatibleSelectorKind { selector, resource } => {
                json!({ "selector_kind": selector, "resource_kind": resource })
            }
            Error::LocatorConflict { locator, existing } => {
                json!({ "locator": locator, "existing_kind": existing })
            }
            _ => serde_json::Value::Null,
        }
    }
}
