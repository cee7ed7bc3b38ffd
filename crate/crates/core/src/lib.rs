//! Cross-media annotation links: resources, selectors on them, and links
//! between both, with persistence, text re-anchoring and margin layout.

pub mod anchoring;
pub mod capture;
pub mod error;
pub mod graph;
pub mod id;
pub mod model;
pub mod presentation;
pub mod rsl;
pub mod store;

pub use capture::{CapturePayload, CaptureReceipt, CapturedResource};
pub use error::{Error, Result};
pub use graph::{Graph, Mutation};
pub use id::{Clock, EntityId, IdSource, ManualClock, Millis, SystemClock};
pub use model::*;
pub use rsl::{Annotator, Created, ImportOutcome, Tx};
pub use store::interchange::InterchangeDocument;
pub use store::{IntegrityReport, Store, StoreOptions};
