//! Operations over the resource-selector-link graph.
//!
//! Every mutating operation runs inside a [`Tx`] against a working copy of the
//! latest snapshot and commits as exactly one store transaction. Transactions
//! are serialized; reads go to immutable snapshots.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Mutation};
use crate::id::{Clock, EntityId, IdSource, Millis, SystemClock};
use crate::model::{
    AnnotationBundle, AnnotationClass, CleanupReport, Endpoint, Formality, Link, Resource, ResourceKind, Selector,
    SelectorPayload,
};
use crate::presentation::{assign_colors, reading_order, HighlightPosition};
use crate::store::interchange::InterchangeDocument;
use crate::store::{IntegrityReport, Store};

/// Result of an idempotent create: the entity plus whether it is new.
#[derive(Debug, Clone, PartialEq)]
pub struct Created<T> {
    pub value: T,
    pub created: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportOutcome {
    /// Imported id to stored id, for every entity in the document.
    pub id_map: BTreeMap<EntityId, EntityId>,
    pub resources_created: usize,
    pub resources_reused: usize,
    pub selectors_created: usize,
    pub links_created: usize,
}

pub struct Annotator {
    store: Store,
    ids: IdSource,
    clock: Arc<dyn Clock>,
    tx_lock: Mutex<()>,
}

impl std::fmt::Debug for Annotator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Annotator").field("store", &self.store).finish_non_exhaustive()
    }
}

impl Annotator {
    pub fn new(store: Store) -> Self {
        Self::with_sources(store, IdSource::Random, Arc::new(SystemClock))
    }

    pub fn with_sources(store: Store, ids: IdSource, clock: Arc<dyn Clock>) -> Self {
        Annotator { store, ids, clock, tx_lock: Mutex::new(()) }
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn graph(&self) -> Arc<crate::store::Snapshot> {
        self.store.snapshot()
    }

    /// Runs `f` against a working copy and commits whatever it staged as a
    /// single transaction. Nothing is committed if `f` fails or stages nothing.
    pub fn transaction<T>(&self, f: impl FnOnce(&mut Tx<'_>) -> Result<T>) -> Result<T> {
        let _guard = self.tx_lock.lock();
        let snapshot = self.store.snapshot();
        let mut tx =
            Tx { graph: snapshot.graph.clone(), mutations: Vec::new(), ids: &self.ids, now: self.clock.now_ms() };
        let value = f(&mut tx)?;
        if !tx.mutations.is_empty() {
            self.store.commit(tx.mutations)?;
        }
        Ok(value)
    }

    pub fn create_resource(
        &self,
        kind: ResourceKind,
        locator_or_body: &str,
        title: Option<String>,
        media_type: Option<String>,
    ) -> Result<Created<Resource>> {
        self.transaction(|tx| tx.create_resource(kind, locator_or_body, title, media_type))
    }

    pub fn create_selector(&self, resource_id: EntityId, payload: SelectorPayload) -> Result<Selector> {
        self.transaction(|tx| tx.create_selector(resource_id, payload))
    }

    pub fn create_link(
        &self,
        sources: Vec<Endpoint>,
        targets: Vec<Endpoint>,
        annotation_class: Option<AnnotationClass>,
        formality: Option<Formality>,
    ) -> Result<Link> {
        self.transaction(|tx| tx.create_link(sources, targets, annotation_class, formality))
    }

    pub fn delete_link(&self, link_id: EntityId) -> Result<CleanupReport> {
        self.transaction(|tx| tx.delete_link(link_id))
    }

    pub fn delete_resource(&self, id: EntityId) -> Result<()> {
        self.transaction(|tx| tx.delete_resource(id))
    }

    pub fn delete_selector(&self, id: EntityId) -> Result<()> {
        self.transaction(|tx| tx.delete_selector(id))
    }

    /// Removes selectors that no link references and that are at least
    /// `grace_ms` old. Returns the removed ids.
    pub fn sweep_orphans(&self, grace_ms: i64) -> Result<Vec<EntityId>> {
        self.transaction(|tx| {
            let cutoff = tx.now.saturating_sub(grace_ms);
            let orphans: Vec<EntityId> = tx
                .graph
                .selectors()
                .filter(|s| s.created_at <= cutoff && tx.graph.link_refcount(&s.id) == 0)
                .map(|s| s.id)
                .collect();
            for id in &orphans {
                tx.push(Mutation::DeleteSelector(*id));
            }
            Ok(orphans)
        })
    }

    pub fn resource(&self, id: EntityId) -> Result<Resource> {
        self.store.snapshot().graph.resource(&id).cloned().ok_or(Error::UnknownResource(id))
    }

    pub fn selector(&self, id: EntityId) -> Result<Selector> {
        self.store.snapshot().graph.selector(&id).cloned().ok_or(Error::UnknownSelector(id))
    }

    pub fn link(&self, id: EntityId) -> Result<Link> {
        self.store.snapshot().graph.link(&id).cloned().ok_or(Error::UnknownLink(id))
    }

    pub fn resource_by_locator(&self, locator: &str) -> Option<Resource> {
        self.store.snapshot().graph.resource_by_locator(locator).cloned()
    }

    pub fn annotations_for(&self, document_id: EntityId) -> Result<AnnotationBundle> {
        bundle_for(&self.store.snapshot().graph, document_id)
    }

    pub fn backlinks_for(&self, entity_id: EntityId) -> Result<Vec<Link>> {
        backlinks_in(&self.store.snapshot().graph, entity_id)
    }

    pub fn check_integrity(&self) -> IntegrityReport {
        self.store.check_integrity()
    }

    /// The whole store, or just one document's annotation bundle.
    pub fn export_bundle(&self, document_id: Option<EntityId>) -> Result<InterchangeDocument> {
        let snapshot = self.store.snapshot();
        match document_id {
            None => Ok(InterchangeDocument::from_graph(&snapshot.graph)),
            Some(id) => {
                let b = bundle_for(&snapshot.graph, id)?;
                let mut resources = b.target_resources;
                resources.push(b.document);
                let mut selectors = b.highlights;
                selectors.extend(b.target_selectors);
                Ok(InterchangeDocument::from_parts(resources, selectors, b.links))
            }
        }
    }

    /// Adds a document's entities under fresh ids. Resources whose locator is
    /// already stored map onto the stored resource; everything else,
    /// including links, is added anew.
    pub fn import_bundle(&self, doc: &InterchangeDocument) -> Result<ImportOutcome> {
        doc.validate()?;
        self.transaction(|tx| {
            let mut out = ImportOutcome::default();
            for r in &doc.resources {
                let existing = r
                    .locator
                    .as_deref()
                    .filter(|_| r.kind != ResourceKind::Comment)
                    .and_then(|loc| tx.graph.resource_by_locator(loc));
                let stored = match existing {
                    Some(e) if e.kind != r.kind => {
                        return Err(Error::LocatorConflict {
                            locator: e.locator.clone().unwrap_or_default(),
                            existing: e.kind,
                        })
                    }
                    Some(e) => {
                        out.resources_reused += 1;
                        e.id
                    }
                    None => {
                        let id = tx.ids.next_id();
                        tx.push(Mutation::PutResource(Resource { id, ..r.clone() }));
                        out.resources_created += 1;
                        id
                    }
                };
                out.id_map.insert(r.id, stored);
            }
            for s in &doc.selectors {
                let id = tx.ids.next_id();
                let resource_id = out.id_map[&s.resource_id];
                tx.push(Mutation::PutSelector(Selector { id, resource_id, ..s.clone() }));
                out.id_map.insert(s.id, id);
                out.selectors_created += 1;
            }
            for l in &doc.links {
                let id = tx.ids.next_id();
                let remap = |e: &Endpoint| match e {
                    Endpoint::Resource(x) => Endpoint::Resource(out.id_map[x]),
                    Endpoint::Selector(x) => Endpoint::Selector(out.id_map[x]),
                };
                let link = Link {
                    id,
                    sources: l.sources.iter().map(remap).collect(),
                    targets: l.targets.iter().map(remap).collect(),
                    ..l.clone()
                };
                tx.push(Mutation::PutLink(link));
                out.id_map.insert(l.id, id);
                out.links_created += 1;
            }
            Ok(out)
        })
    }
}

/// A transaction in progress: a working graph plus the mutations staged so far.
pub struct Tx<'a> {
    graph: Graph,
    mutations: Vec<Mutation>,
    ids: &'a IdSource,
    now: Millis,
}

impl Tx<'_> {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// Server time for entities created in this transaction.
    pub fn now(&self) -> Millis {
        self.now
    }

    fn push(&mut self, m: Mutation) {
        self.graph.apply(m.clone());
        self.mutations.push(m);
    }

    pub fn create_resource(
        &mut self,
        kind: ResourceKind,
        locator_or_body: &str,
        title: Option<String>,
        media_type: Option<String>,
    ) -> Result<Created<Resource>> {
        let (locator, comment_body) = if kind == ResourceKind::Comment {
            if locator_or_body.trim().is_empty() {
                return Err(Error::EmptyBody);
            }
            (None, Some(locator_or_body.to_owned()))
        } else {
            if locator_or_body.trim().is_empty() {
                return Err(Error::EmptyLocator);
            }
            if let Some(existing) = self.graph.resource_by_locator(locator_or_body) {
                if existing.kind != kind {
                    return Err(Error::LocatorConflict {
                        locator: locator_or_body.to_owned(),
                        existing: existing.kind,
                    });
                }
                return Ok(Created { value: existing.clone(), created: false });
            }
            (Some(locator_or_body.to_owned()), None)
        };
        let resource =
            Resource { id: self.ids.next_id(), kind, locator, title, media_type, comment_body, created_at: self.now };
        self.push(Mutation::PutResource(resource.clone()));
        Ok(Created { value: resource, created: true })
    }

    pub fn create_selector(&mut self, resource_id: EntityId, payload: SelectorPayload) -> Result<Selector> {
        let resource = self.graph.resource(&resource_id).ok_or(Error::UnknownResource(resource_id))?;
        let kind = payload.kind();
        if !resource.kind.admits(kind) {
            return Err(Error::IncompatibleSelectorKind { selector: kind, resource: resource.kind });
        }
        let payload = payload.normalized();
        let violations = payload.violations();
        if !violations.is_empty() {
            return Err(Error::InvalidPayload(violations));
        }
        let selector = Selector { id: self.ids.next_id(), resource_id, payload, created_at: self.now };
        self.push(Mutation::PutSelector(selector.clone()));
        Ok(selector)
    }

    pub fn create_link(
        &mut self,
        sources: Vec<Endpoint>,
        targets: Vec<Endpoint>,
        annotation_class: Option<AnnotationClass>,
        formality: Option<Formality>,
    ) -> Result<Link> {
        let sources = dedup(sources);
        let targets = dedup(targets);
        if sources.is_empty() {
            return Err(Error::EmptySources);
        }
        if targets.is_empty() {
            return Err(Error::EmptyTargets);
        }
        if let Some(e) = sources.iter().chain(&targets).find(|e| !self.graph.contains(e)) {
            return Err(Error::DanglingEndpoint(*e));
        }
        if let Some(e) = sources.iter().find(|e| targets.contains(e)) {
            return Err(Error::SelfReference(*e));
        }
        let link = Link {
            id: self.ids.next_id(),
            sources,
            targets,
            annotation_class: annotation_class.unwrap_or_default(),
            formality: formality.unwrap_or_default(),
            created_at: self.now,
        };
        self.push(Mutation::PutLink(link.clone()));
        Ok(link)
    }

    /// Removes a link, then every selector no other link references, then
    /// every comment resource left without references. Other resources stay.
    pub fn delete_link(&mut self, link_id: EntityId) -> Result<CleanupReport> {
        let link = self.graph.link(&link_id).cloned().ok_or(Error::UnknownLink(link_id))?;
        self.push(Mutation::DeleteLink(link_id));

        let mut report = CleanupReport { link_id: Some(link_id), ..Default::default() };
        let mut candidates = BTreeSet::new();
        for e in dedup(link.endpoints().copied().collect()) {
            match e {
                Endpoint::Selector(sid) => {
                    if self.graph.link_refcount(&sid) == 0 {
                        if let Some(s) = self.graph.selector(&sid) {
                            candidates.insert(s.resource_id);
                            self.push(Mutation::DeleteSelector(sid));
                            report.removed_selectors.push(sid);
                        }
                    }
                }
                Endpoint::Resource(rid) => {
                    candidates.insert(rid);
                }
            }
        }
        for rid in candidates {
            let unreferenced = self.graph.resource(&rid).is_some_and(|r| r.kind == ResourceKind::Comment)
                && self.graph.link_refcount(&rid) == 0
                && self.graph.selectors_of(&rid).next().is_none();
            if unreferenced {
                self.push(Mutation::DeleteResource(rid));
                report.removed_resources.push(rid);
            }
        }
        Ok(report)
    }

    pub fn delete_resource(&mut self, id: EntityId) -> Result<()> {
        if self.graph.resource(&id).is_none() {
            return Err(Error::UnknownResource(id));
        }
        if self.graph.link_refcount(&id) > 0 || self.graph.selectors_of(&id).next().is_some() {
            return Err(Error::ResourceInUse(id));
        }
        self.push(Mutation::DeleteResource(id));
        Ok(())
    }

    pub fn delete_selector(&mut self, id: EntityId) -> Result<()> {
        if self.graph.selector(&id).is_none() {
            return Err(Error::UnknownSelector(id));
        }
        if self.graph.link_refcount(&id) > 0 {
            return Err(Error::SelectorInUse(id));
        }
        self.push(Mutation::DeleteSelector(id));
        Ok(())
    }
}

fn dedup(endpoints: Vec<Endpoint>) -> Vec<Endpoint> {
    let mut seen = BTreeSet::new();
    endpoints.into_iter().filter(|e| seen.insert(*e)).collect()
}

/// Reading-order key used for highlight colors. Text spans are ordered by
/// character offset within their page, regions by their top edge.
pub fn highlight_position(s: &Selector) -> HighlightPosition {
    let (page_index, y, x) = match &s.payload {
        SelectorPayload::TextSpan(t) => (t.page_index, t.char_start as f64, 0.0),
        SelectorPayload::PageRegion(r) => (r.page_index, r.y, r.x),
        _ => (0, 0.0, 0.0),
    };
    HighlightPosition { selector_id: s.id, page_index, y, x }
}

fn by_time(a: &Link, b: &Link) -> std::cmp::Ordering {
    a.created_at.cmp(&b.created_at).then(a.id.cmp(&b.id))
}

/// Assembles the closed annotation bundle of a pdf document.
pub fn bundle_for(g: &Graph, document_id: EntityId) -> Result<AnnotationBundle> {
    let document = g.resource(&document_id).ok_or(Error::UnknownResource(document_id))?;
    if document.kind != ResourceKind::PdfDocument {
        return Err(Error::NotADocument(document_id));
    }

    let mut highlights: Vec<Selector> =
        g.selectors_of(&document_id).filter(|s| g.links_from(&s.id).next().is_some()).cloned().collect();
    let highlight_ids: BTreeSet<EntityId> = highlights.iter().map(|s| s.id).collect();

    let mut links: BTreeMap<EntityId, &Link> = BTreeMap::new();
    for id in highlight_ids.iter().chain(std::iter::once(&document_id)) {
        links.extend(g.links_from(id).map(|l| (l.id, l)));
    }

    let mut other_selectors: BTreeSet<EntityId> = BTreeSet::new();
    let mut other_resources: BTreeSet<EntityId> = BTreeSet::new();
    for l in links.values() {
        for e in l.endpoints() {
            match *e {
                Endpoint::Selector(s) if !highlight_ids.contains(&s) => {
                    other_selectors.insert(s);
                }
                Endpoint::Resource(r) if r != document_id => {
                    other_resources.insert(r);
                }
                _ => {}
            }
        }
    }
    let target_selectors: Vec<Selector> = other_selectors.iter().filter_map(|id| g.selector(id)).cloned().collect();
    for s in &target_selectors {
        if s.resource_id != document_id {
            other_resources.insert(s.resource_id);
        }
    }
    let target_resources: Vec<Resource> = other_resources.iter().filter_map(|id| g.resource(id)).cloned().collect();

    let positions: Vec<HighlightPosition> = highlights.iter().map(highlight_position).collect();
    let colors = assign_colors(&positions).expect("selector ids are unique and positions finite");
    highlights.sort_by(|a, b| reading_order(&highlight_position(a), &highlight_position(b)));

    let mut links: Vec<Link> = links.into_values().cloned().collect();
    links.sort_by(by_time);

    Ok(AnnotationBundle { document: document.clone(), highlights, links, target_selectors, target_resources, colors })
}

/// Links that have `entity_id` among their targets; for a resource, also
/// links targeting any of its selectors.
pub fn backlinks_in(g: &Graph, entity_id: EntityId) -> Result<Vec<Link>> {
    let mut found: BTreeMap<EntityId, &Link> = BTreeMap::new();
    if g.resource(&entity_id).is_some() {
        found.extend(g.links_to(&entity_id).map(|l| (l.id, l)));
        for s in g.selectors_of(&entity_id) {
            found.extend(g.links_to(&s.id).map(|l| (l.id, l)));
        }
    } else if g.selector(&entity_id).is_some() {
        found.extend(g.links_to(&entity_id).map(|l| (l.id, l)));
    } else {
        return Err(Error::UnknownEntity(entity_id));
    }
    let mut links: Vec<Link> = found.into_values().cloned().collect();
    links.sort_by(by_time);
    Ok(links)
}
