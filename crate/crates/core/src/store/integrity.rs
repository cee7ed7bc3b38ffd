//! Whole-graph integrity checking and the per-commit incremental check.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::graph::{Graph, Mutation};
use crate::id::EntityId;
use crate::model::{Endpoint, ResourceKind, SelectorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefRole {
    /// A selector's reference to its resource.
    RefersTo,
    Source,
    Target,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DanglingRef {
    /// The selector or link holding the reference.
    pub holder: EntityId,
    pub role: RefRole,
    pub missing: Endpoint,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KindViolation {
    pub selector_id: EntityId,
    pub selector_kind: SelectorKind,
    pub resource_id: EntityId,
    pub resource_kind: ResourceKind,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InvalidEntity {
    pub id: EntityId,
    pub problem: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DuplicateLocator {
    pub locator: String,
    pub resource_ids: Vec<EntityId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrityReport {
    pub dangling_endpoints: Vec<DanglingRef>,
    pub orphan_selectors: Vec<EntityId>,
    pub kind_violations: Vec<KindViolation>,
    pub invalid_entities: Vec<InvalidEntity>,
    pub duplicate_locators: Vec<DuplicateLocator>,
    pub ok: bool,
}

impl IntegrityReport {
    fn finish(
        mut dangling_endpoints: Vec<DanglingRef>,
        mut orphan_selectors: Vec<EntityId>,
        mut kind_violations: Vec<KindViolation>,
        mut invalid_entities: Vec<InvalidEntity>,
        mut duplicate_locators: Vec<DuplicateLocator>,
    ) -> Self {
        dangling_endpoints.sort();
        dangling_endpoints.dedup();
        orphan_selectors.sort();
        orphan_selectors.dedup();
        kind_violations.sort();
        kind_violations.dedup();
        invalid_entities.sort();
        invalid_entities.dedup();
        duplicate_locators.sort();
        duplicate_locators.dedup();
        let ok = dangling_endpoints.is_empty()
            && orphan_selectors.is_empty()
            && kind_violations.is_empty()
            && invalid_entities.is_empty()
            && duplicate_locators.is_empty();
        IntegrityReport {
            dangling_endpoints,
            orphan_selectors,
            kind_violations,
            invalid_entities,
            duplicate_locators,
            ok,
        }
    }

    pub fn problem_count(&self) -> usize {
        self.dangling_endpoints.len()
            + self.orphan_selectors.len()
            + self.kind_violations.len()
            + self.invalid_entities.len()
            + self.duplicate_locators.len()
    }
}

/// Checks the whole graph from the forward maps only; the reverse indices are
/// not consulted.
pub fn check_graph(g: &Graph) -> IntegrityReport {
    let mut dangling = Vec::new();
    let mut kinds = Vec::new();
    let mut invalid = Vec::new();

    let mut by_locator: BTreeMap<&str, Vec<EntityId>> = BTreeMap::new();
    for r in g.resources() {
        if let Some(p) = r.problem() {
            invalid.push(InvalidEntity { id: r.id, problem: p });
        }
        if let (Some(loc), true) = (&r.locator, r.kind != ResourceKind::Comment) {
            by_locator.entry(loc).or_default().push(r.id);
        }
    }
    let duplicates = by_locator
        .into_iter()
        .filter(|(_, ids)| ids.len() > 1)
        .map(|(loc, ids)| DuplicateLocator { locator: loc.to_owned(), resource_ids: ids })
        .collect();

    for s in g.selectors() {
        check_selector_fields(g, s.id, &mut dangling, &mut kinds, &mut invalid);
    }

    let mut referenced: BTreeSet<EntityId> = BTreeSet::new();
    for l in g.links() {
        if let Some(p) = l.problem() {
            invalid.push(InvalidEntity { id: l.id, problem: p });
        }
        for (role, list) in [(RefRole::Source, &l.sources), (RefRole::Target, &l.targets)] {
            for e in list {
                referenced.insert(e.id());
                if !g.contains(e) {
                    dangling.push(DanglingRef { holder: l.id, role, missing: *e });
                }
            }
        }
    }

    let orphans = g.selectors().filter(|s| !referenced.contains(&s.id)).map(|s| s.id).collect();

    IntegrityReport::finish(dangling, orphans, kinds, invalid, duplicates)
}

fn check_selector_fields(
    g: &Graph,
    id: EntityId,
    dangling: &mut Vec<DanglingRef>,
    kinds: &mut Vec<KindViolation>,
    invalid: &mut Vec<InvalidEntity>,
) {
    let Some(s) = g.selector(&id) else { return };
    let violations = s.payload.violations();
    if !violations.is_empty() {
        let problem = violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
        invalid.push(InvalidEntity { id: s.id, problem });
    }
    match g.resource(&s.resource_id) {
        None => dangling.push(DanglingRef {
            holder: s.id,
            role: RefRole::RefersTo,
            missing: Endpoint::Resource(s.resource_id),
        }),
        Some(r) if !r.kind.admits(s.payload.kind()) => kinds.push(KindViolation {
            selector_id: s.id,
            selector_kind: s.payload.kind(),
            resource_id: r.id,
            resource_kind: r.kind,
        }),
        Some(_) => {}
    }
}

/// Checks only what a batch of mutations could have broken, using the
/// post-state's indices. Orphan selectors are not a commit-time concern.
pub fn check_mutations(after: &Graph, mutations: &[Mutation]) -> IntegrityReport {
    let mut dangling = Vec::new();
    let mut kinds = Vec::new();
    let mut invalid = Vec::new();
    let mut locators: BTreeSet<&str> = BTreeSet::new();

    let check_link = |id: EntityId, dangling: &mut Vec<DanglingRef>, invalid: &mut Vec<InvalidEntity>| {
        let Some(l) = after.link(&id) else { return };
        if let Some(p) = l.problem() {
            invalid.push(InvalidEntity { id, problem: p });
        }
        for (role, list) in [(RefRole::Source, &l.sources), (RefRole::Target, &l.targets)] {
            for e in list.iter().filter(|e| !after.contains(e)) {
                dangling.push(DanglingRef { holder: id, role, missing: *e });
            }
        }
    };

    for m in mutations {
        match m {
            Mutation::PutResource(r) => {
                if let Some(r) = after.resource(&r.id) {
                    if let Some(p) = r.problem() {
                        invalid.push(InvalidEntity { id: r.id, problem: p });
                    }
                    if let (Some(loc), true) = (&r.locator, r.kind != ResourceKind::Comment) {
                        locators.insert(loc);
                    }
                    for s in after.selectors_of(&r.id) {
                        check_selector_fields(after, s.id, &mut dangling, &mut kinds, &mut invalid);
                    }
                }
            }
            Mutation::PutSelector(s) => check_selector_fields(after, s.id, &mut dangling, &mut kinds, &mut invalid),
            Mutation::PutLink(l) => check_link(l.id, &mut dangling, &mut invalid),
            Mutation::DeleteResource(id) | Mutation::DeleteSelector(id) => {
                for s in after.selectors_of(id) {
                    dangling.push(DanglingRef {
                        holder: s.id,
                        role: RefRole::RefersTo,
                        missing: Endpoint::Resource(*id),
                    });
                }
                for l in after.links_from(id).chain(after.links_to(id)) {
                    check_link(l.id, &mut dangling, &mut invalid);
                }
            }
            Mutation::DeleteLink(_) => {}
        }
    }

    let mut duplicates = Vec::new();
    if !locators.is_empty() {
        let mut seen: BTreeMap<&str, Vec<EntityId>> = BTreeMap::new();
        for r in after.resources() {
            if let (Some(loc), true) = (&r.locator, r.kind != ResourceKind::Comment) {
                if locators.contains(loc.as_str()) {
                    seen.entry(loc).or_default().push(r.id);
                }
            }
        }
        duplicates = seen
            .into_iter()
            .filter(|(_, ids)| ids.len() > 1)
            .map(|(loc, ids)| DuplicateLocator { locator: loc.to_owned(), resource_ids: ids })
            .collect();
    }

    IntegrityReport::finish(dangling, Vec::new(), kinds, invalid, duplicates)
}

/// Deletes of entities that do not exist in `before`. Reported separately
/// because the post-state cannot show them.
pub fn unknown_deletes(before: &Graph, mutations: &[Mutation]) -> Vec<InvalidEntity> {
    let mut present: BTreeSet<EntityId> = BTreeSet::new();
    let mut out = Vec::new();
    for m in mutations {
        let (id, exists) = match m {
            Mutation::PutResource(r) => {
                present.insert(r.id);
                continue;
            }
            Mutation::PutSelector(s) => {
                present.insert(s.id);
                continue;
            }
            Mutation::PutLink(l) => {
                present.insert(l.id);
                continue;
            }
            Mutation::DeleteResource(id) => (*id, before.resource(id).is_some()),
            Mutation::DeleteSelector(id) => (*id, before.selector(id).is_some()),
            Mutation::DeleteLink(id) => (*id, before.link(id).is_some()),
        };
        if !exists && !present.contains(&id) {
            out.push(InvalidEntity { id, problem: "delete of an entity that does not exist".into() });
        }
        present.remove(&id);
    }
    out
}

impl IntegrityReport {
    pub(crate) fn with_invalid(mut self, extra: Vec<InvalidEntity>) -> Self {
        if extra.is_empty() {
            return self;
        }
        self.invalid_entities.extend(extra);
        IntegrityReport::finish(
            self.dangling_endpoints,
            self.orphan_selectors,
            self.kind_violations,
            self.invalid_entities,
            self.duplicate_locators,
        )
    }
}
