//! In-memory entity graph with forward maps and the derived reverse indices.
//!
//! `Graph` is a plain container: it applies mutations without judging them,
//! so a corrupted store can still be loaded and inspected. Validation lives
//! in [`crate::store`] and [`crate::rsl`].

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::id::EntityId;
use crate::model::{Endpoint, Link, Resource, ResourceKind, Selector};

/// One change to the entity graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutation {
    PutResource(Resource),
    PutSelector(Selector),
    PutLink(Link),
    DeleteResource(EntityId),
    DeleteSelector(EntityId),
    DeleteLink(EntityId),
}

/// Reverse indices derived from the forward maps.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Indices {
    pub by_locator: BTreeMap<String, EntityId>,
    pub selectors_by_resource: BTreeMap<EntityId, BTreeSet<EntityId>>,
    pub links_by_source: BTreeMap<EntityId, BTreeSet<EntityId>>,
    pub links_by_target: BTreeMap<EntityId, BTreeSet<EntityId>>,
}

#[derive(Debug, Clone, Default)]
pub struct Graph {
    resources: BTreeMap<EntityId, Resource>,
    selectors: BTreeMap<EntityId, Selector>,
    links: BTreeMap<EntityId, Link>,
    idx: Indices,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn resource(&self, id: &EntityId) -> Option<&Resource> {
        self.resources.get(id)
    }

    pub fn selector(&self, id: &EntityId) -> Option<&Selector> {
        self.selectors.get(id)
    }

    pub fn link(&self, id: &EntityId) -> Option<&Link> {
        self.links.get(id)
    }

    pub fn resources(&self) -> impl Iterator<Item = &Resource> {
        self.resources.values()
    }

    pub fn selectors(&self) -> impl Iterator<Item = &Selector> {
        self.selectors.values()
    }

    pub fn links(&self) -> impl Iterator<Item = &Link> {
        self.links.values()
    }

    pub fn len(&self) -> usize {
        self.resources.len() + self.selectors.len() + self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, endpoint: &Endpoint) -> bool {
        match endpoint {
            Endpoint::Resource(id) => self.resources.contains_key(id),
            Endpoint::Selector(id) => self.selectors.contains_key(id),
        }
    }

    pub fn resource_by_locator(&self, locator: &str) -> Option<&Resource> {
        self.idx.by_locator.get(locator).and_then(|id| self.resources.get(id))
    }

    pub fn selectors_of(&self, resource: &EntityId) -> impl Iterator<Item = &Selector> {
        self.idx.selectors_by_resource.get(resource).into_iter().flatten().filter_map(|id| self.selectors.get(id))
    }

    /// Links having `id` (a resource or selector) among their sources.
    pub fn links_from(&self, id: &EntityId) -> impl Iterator<Item = &Link> {
        self.idx.links_by_source.get(id).into_iter().flatten().filter_map(|l| self.links.get(l))
    }

    /// Links having `id` (a resource or selector) among their targets.
    pub fn links_to(&self, id: &EntityId) -> impl Iterator<Item = &Link> {
        self.idx.links_by_target.get(id).into_iter().flatten().filter_map(|l| self.links.get(l))
    }

    /// Number of links mentioning `id` as an endpoint on either side.
    pub fn link_refcount(&self, id: &EntityId) -> usize {
        let from = self.idx.links_by_source.get(id);
        let to = self.idx.links_by_target.get(id);
        match (from, to) {
            (Some(a), Some(b)) => a.union(b).count(),
            (Some(a), None) | (None, Some(a)) => a.len(),
            (None, None) => 0,
        }
    }

    pub fn indices(&self) -> &Indices {
        &self.idx
    }

    /// Rebuilds the reverse indices from the forward maps alone.
    pub fn recompute_indices(&self) -> Indices {
        let mut idx = Indices::default();
        for r in self.resources.values() {
            if let (Some(loc), true) = (&r.locator, r.kind != ResourceKind::Comment) {
                idx.by_locator.insert(loc.clone(), r.id);
            }
        }
        for s in self.selectors.values() {
            idx.selectors_by_resource.entry(s.resource_id).or_default().insert(s.id);
        }
        for l in self.links.values() {
            for e in &l.sources {
                idx.links_by_source.entry(e.id()).or_default().insert(l.id);
            }
            for e in &l.targets {
                idx.links_by_target.entry(e.id()).or_default().insert(l.id);
            }
        }
        idx
    }

    pub fn apply(&mut self, m: Mutation) {
        match m {
            Mutation::PutResource(r) => {
                self.remove_resource(&r.id);
                if let (Some(loc), true) = (&r.locator, r.kind != ResourceKind::Comment) {
                    self.idx.by_locator.insert(loc.clone(), r.id);
                }
                self.resources.insert(r.id, r);
            }
            Mutation::PutSelector(s) => {
                self.remove_selector(&s.id);
                self.idx.selectors_by_resource.entry(s.resource_id).or_default().insert(s.id);
                self.selectors.insert(s.id, s);
            }
            Mutation::PutLink(l) => {
                self.remove_link(&l.id);
                for e in &l.sources {
                    self.idx.links_by_source.entry(e.id()).or_default().insert(l.id);
                }
                for e in &l.targets {
                    self.idx.links_by_target.entry(e.id()).or_default().insert(l.id);
                }
                self.links.insert(l.id, l);
            }
            Mutation::DeleteResource(id) => {
                self.remove_resource(&id);
            }
            Mutation::DeleteSelector(id) => {
                self.remove_selector(&id);
            }
            Mutation::DeleteLink(id) => {
                self.remove_link(&id);
            }
        }
    }

    fn remove_resource(&mut self, id: &EntityId) -> Option<Resource> {
        let r = self.resources.remove(id)?;
        if let Some(loc) = &r.locator {
            if self.idx.by_locator.get(loc) == Some(id) {
                self.idx.by_locator.remove(loc);
            }
        }
        Some(r)
    }

    fn remove_selector(&mut self, id: &EntityId) -> Option<Selector> {
        let s = self.selectors.remove(id)?;
        remove_from(&mut self.idx.selectors_by_resource, &s.resource_id, id);
        Some(s)
    }

    fn remove_link(&mut self, id: &EntityId) -> Option<Link> {
        let l = self.links.remove(id)?;
        for e in &l.sources {
            remove_from(&mut self.idx.links_by_source, &e.id(), id);
        }
        for e in &l.targets {
            remove_from(&mut self.idx.links_by_target, &e.id(), id);
        }
        Some(l)
    }

    /// Full contents as a list of puts: resources, then selectors, then links.
    pub fn to_mutations(&self) -> Vec<Mutation> {
        self.resources
            .values()
            .cloned()
            .map(Mutation::PutResource)
            .chain(self.selectors.values().cloned().map(Mutation::PutSelector))
            .chain(self.links.values().cloned().map(Mutation::PutLink))
            .collect()
    }
}

fn remove_from(map: &mut BTreeMap<EntityId, BTreeSet<EntityId>>, key: &EntityId, item: &EntityId) {
    if let Some(set) = map.get_mut(key) {
        set.remove(item);
        if set.is_empty() {
            map.remove(key);
        }
    }
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.resources == other.resources && self.selectors == other.selectors && self.links == other.links
    }
}
