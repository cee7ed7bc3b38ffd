//! Independent oracles and fixtures shared by the integration tests and the
//! acceptance suite. Nothing here calls the code paths it is used to check.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::Rng;
use xannot_core::anchoring::{AnchorResult, AnchorStatus};
use xannot_core::presentation::{AnchorBox, HighlightPosition, MarginSpec, Side, WidgetPlacement, WidgetSpec};
use xannot_core::*;

// ---------------------------------------------------------------- fixtures

pub fn text_span(page: u32, start: usize, quote: &str, prefix: &str, suffix: &str) -> SelectorPayload {
    SelectorPayload::TextSpan(TextSpan {
        page_index: page,
        char_start: start,
        char_end: start + quote.chars().count(),
        exact_quote: quote.into(),
        prefix: prefix.into(),
        suffix: suffix.into(),
    })
}

pub fn region(page: u32, x: f64, y: f64, w: f64, h: f64) -> SelectorPayload {
    SelectorPayload::PageRegion(PageRegion { page_index: page, x, y, w, h })
}

pub fn segment(start_ms: u64, end_ms: u64) -> SelectorPayload {
    SelectorPayload::TimeSegment(TimeSegment { start_ms, end_ms })
}

pub fn web(quote: &str, path: Option<&str>) -> SelectorPayload {
    SelectorPayload::WebFragment(WebFragment {
        exact_quote: quote.into(),
        prefix: String::new(),
        suffix: String::new(),
        element_path: path.map(Into::into),
    })
}

pub fn seeded_annotator(seed: u64) -> Annotator {
    Annotator::with_sources(Store::in_memory(), IdSource::seeded(seed), std::sync::Arc::new(ManualClock::new(1_000, 1)))
}

pub const MAIN_PDF: &str = "file:///as-we-may-think.pdf";
pub const EXTERNAL_PDF: &str = "file:///memex-figures.pdf";
pub const WEB_PAGE: &str = "https://example.org/memex";
pub const VIDEO: &str = "file:///bush.mp4";
pub const COMMENT: &str = "check the Memex section";

/// Ids produced by [`build_scenario`].
#[derive(Debug, Clone)]
pub struct Scenario {
    pub document: EntityId,
    pub highlight: EntityId,
    pub second_highlight: EntityId,
    pub comment: EntityId,
    /// Links in creation order: image region, text span, web paragraph,
    /// video segment, comment.
    pub links: Vec<EntityId>,
    pub target_selectors: Vec<EntityId>,
    pub target_resources: Vec<EntityId>,
}

/// The reading session: highlight the title phrase, drop an image region
/// and a text span from another PDF onto it, a web paragraph and a video
/// segment onto a second highlight, and attach a comment to the first.
pub fn build_scenario(a: &Annotator) -> Scenario {
    let doc =
        a.create_resource(ResourceKind::PdfDocument, MAIN_PDF, Some("As We May Think".into()), None).unwrap().value;
    let ext = a.create_resource(ResourceKind::PdfDocument, EXTERNAL_PDF, None, None).unwrap().value;
    let page = a.create_resource(ResourceKind::WebPage, WEB_PAGE, None, None).unwrap().value;
    let video = a.create_resource(ResourceKind::Video, VIDEO, None, Some("video/mp4".into())).unwrap().value;

    let highlight =
        a.create_selector(doc.id, text_span(0, 10, "As We May Think", "Article: ", " by Vannevar")).unwrap();
    let second = a.create_selector(doc.id, text_span(1, 120, "memex", "a device called a ", " in which")).unwrap();

    let mut links = Vec::new();
    let mut target_selectors = Vec::new();
    let mut drop_on = |src: EntityId, resource: EntityId, payload: SelectorPayload| {
        let t = a.create_selector(resource, payload).unwrap();
        target_selectors.push(t.id);
        let l = a.create_link(vec![Endpoint::Selector(src)], vec![Endpoint::Selector(t.id)], None, None).unwrap();
        links.push(l.id);
    };
    drop_on(highlight.id, ext.id, region(2, 0.1, 0.2, 0.5, 0.3));
    drop_on(highlight.id, ext.id, text_span(0, 0, "The Memex", "", " is"));
    drop_on(second.id, page.id, web("Consider a future device for individual use.", Some("/html[1]/body[1]/p[3]")));
    drop_on(second.id, video.id, segment(30_000, 65_000));

    let comment = a.create_resource(ResourceKind::Comment, COMMENT, None, None).unwrap().value;
    let l = a
        .create_link(
            vec![Endpoint::Selector(highlight.id)],
            vec![Endpoint::Resource(comment.id)],
            Some(AnnotationClass::Comment),
            Some(Formality::Informal),
        )
        .unwrap();
    links.push(l.id);

    Scenario {
        document: doc.id,
        highlight: highlight.id,
        second_highlight: second.id,
        comment: comment.id,
        links,
        target_selectors,
        target_resources: vec![ext.id, page.id, video.id, comment.id],
    }
}

// ------------------------------------------------------------ graph oracles

/// Resource for `locator` found by scanning every stored resource.
pub fn scan_locator(g: &Graph, locator: &str) -> Option<EntityId> {
    let hits: Vec<EntityId> = g
        .resources()
        .filter(|r| r.kind != ResourceKind::Comment && r.locator.as_deref() == Some(locator))
        .map(|r| r.id)
        .collect();
    assert!(hits.len() <= 1, "locator {locator} stored {} times", hits.len());
    hits.first().copied()
}

/// What deleting `link_id` should remove, counted over the whole graph.
pub fn expected_cleanup(g: &Graph, link_id: EntityId) -> (BTreeSet<EntityId>, BTreeSet<EntityId>) {
    let link = g.link(&link_id).expect("link exists");
    let refs_after = |id: EntityId| {
        g.links()
            .filter(|l| l.id != link_id)
            .filter(|l| l.sources.iter().chain(&l.targets).any(|e| e.id() == id))
            .count()
    };
    let mut selectors = BTreeSet::new();
    for e in link.sources.iter().chain(&link.targets) {
        if let Endpoint::Selector(s) = e {
            if refs_after(*s) == 0 {
                selectors.insert(*s);
            }
        }
    }
    let mut resources = BTreeSet::new();
    for r in g.resources().filter(|r| r.kind == ResourceKind::Comment) {
        let was_touched = link.sources.iter().chain(&link.targets).any(|e| e.id() == r.id)
            || g.selectors().any(|s| s.resource_id == r.id && selectors.contains(&s.id));
        let selectors_left = g.selectors().any(|s| s.resource_id == r.id && !selectors.contains(&s.id));
        if was_touched && refs_after(r.id) == 0 && !selectors_left {
            resources.insert(r.id);
        }
    }
    (selectors, resources)
}

/// Links whose targets name `id`, or for a resource any selector on it.
pub fn brute_backlinks(g: &Graph, id: EntityId) -> BTreeSet<EntityId> {
    let mut hits = BTreeSet::new();
    for l in g.links() {
        for t in &l.targets {
            let owner = match t {
                Endpoint::Selector(s) => g.selectors().find(|x| x.id == *s).map(|x| x.resource_id),
                Endpoint::Resource(_) => None,
            };
            if t.id() == id || owner == Some(id) {
                hits.insert(l.id);
            }
        }
    }
    hits
}

/// Every id an annotation bundle mentions resolves inside the bundle.
pub fn bundle_is_closed(b: &AnnotationBundle) -> bool {
    let selectors: BTreeSet<EntityId> = b.highlights.iter().chain(&b.target_selectors).map(|s| s.id).collect();
    let resources: BTreeSet<EntityId> = std::iter::once(&b.document).chain(&b.target_resources).map(|r| r.id).collect();
    let endpoints_ok = b.links.iter().flat_map(|l| l.sources.iter().chain(&l.targets)).all(|e| match e {
        Endpoint::Selector(s) => selectors.contains(s),
        Endpoint::Resource(r) => resources.contains(r),
    });
    let refers_ok = b.highlights.iter().chain(&b.target_selectors).all(|s| resources.contains(&s.resource_id));
    let colors_ok =
        b.colors.keys().copied().collect::<BTreeSet<_>>() == b.highlights.iter().map(|s| s.id).collect::<BTreeSet<_>>();
    endpoints_ok && refers_ok && colors_ok
}

/// Structural labels that ignore ids: a resource by its fields, a selector by
/// its resource's label and payload, a link by the labels of its endpoints.
/// Equal sorted label lists is a necessary condition for isomorphism.
pub fn canonical_labels(doc: &InterchangeDocument) -> Vec<String> {
    let strip = |v: serde_json::Value| {
        let mut v = v;
        v.as_object_mut().unwrap().remove("id");
        v.to_string()
    };
    let res: BTreeMap<EntityId, String> =
        doc.resources.iter().map(|r| (r.id, strip(serde_json::to_value(r).unwrap()))).collect();
    let sel: BTreeMap<EntityId, String> = doc
        .selectors
        .iter()
        .map(|s| {
            let mut v = serde_json::to_value(s).unwrap();
            v.as_object_mut().unwrap().remove("id");
            v["resource_id"] = res[&s.resource_id].clone().into();
            (s.id, v.to_string())
        })
        .collect();
    let label = |e: &Endpoint| match e {
        Endpoint::Resource(r) => format!("R{}", res[r]),
        Endpoint::Selector(s) => format!("S{}", sel[s]),
    };
    let mut out: Vec<String> = Vec::new();
    out.extend(res.values().map(|l| format!("resource {l}")));
    out.extend(sel.values().map(|l| format!("selector {l}")));
    for l in &doc.links {
        let mut s: Vec<String> = l.sources.iter().map(label).collect();
        let mut t: Vec<String> = l.targets.iter().map(label).collect();
        s.sort();
        t.sort();
        out.push(format!("link {:?} {:?} {s:?} -> {t:?} @{}", l.annotation_class, l.formality, l.created_at));
    }
    out.sort();
    out
}

/// True when `map` is a bijection from `a`'s ids onto `b`'s ids that carries
/// every entity of `a` to an equal entity of `b`.
pub fn isomorphic_under(map: &BTreeMap<EntityId, EntityId>, a: &InterchangeDocument, b: &InterchangeDocument) -> bool {
    let image: BTreeSet<EntityId> = map.values().copied().collect();
    let b_ids: BTreeSet<EntityId> = b
        .resources
        .iter()
        .map(|r| r.id)
        .chain(b.selectors.iter().map(|s| s.id))
        .chain(b.links.iter().map(|l| l.id))
        .collect();
    let a_count = a.resources.len() + a.selectors.len() + a.links.len();
    if map.len() != a_count || image.len() != a_count || image != b_ids {
        return false;
    }
    let m = |id: &EntityId| map[id];
    let me = |e: &Endpoint| match e {
        Endpoint::Resource(x) => Endpoint::Resource(m(x)),
        Endpoint::Selector(x) => Endpoint::Selector(m(x)),
    };
    let resources_ok =
        a.resources.iter().all(|r| b.resources.iter().any(|x| *x == Resource { id: m(&r.id), ..r.clone() }));
    let selectors_ok = a.selectors.iter().all(|s| {
        b.selectors.iter().any(|x| *x == Selector { id: m(&s.id), resource_id: m(&s.resource_id), ..s.clone() })
    });
    let links_ok = a.links.iter().all(|l| {
        let want = Link {
            id: m(&l.id),
            sources: l.sources.iter().map(me).collect(),
            targets: l.targets.iter().map(me).collect(),
            ..l.clone()
        };
        b.links.contains(&want)
    });
    resources_ok && selectors_ok && links_ok
}

// ------------------------------------------------------------ color oracle

/// Sort by page, then y, then x, then id, and count modulo twelve.
pub fn colors_oracle(h: &[HighlightPosition]) -> BTreeMap<EntityId, u8> {
    let mut v: Vec<(u32, f64, f64, EntityId)> = h.iter().map(|p| (p.page_index, p.y, p.x, p.selector_id)).collect();
    // Insertion sort keeps this independent of the library's sort.
    fn after(a: &(u32, f64, f64, EntityId), b: &(u32, f64, f64, EntityId)) -> bool {
        if a.0 != b.0 {
            return a.0 > b.0;
        }
        if a.1 != b.1 {
            return a.1 > b.1;
        }
        if a.2 != b.2 {
            return a.2 > b.2;
        }
        a.3 > b.3
    }
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && after(&v[j - 1], &v[j]) {
            v.swap(j - 1, j);
            j -= 1;
        }
    }
    v.iter().enumerate().map(|(i, p)| (p.3, (i % 12) as u8)).collect()
}

pub fn random_positions(rng: &mut impl Rng, n: usize, ids: &IdSource) -> Vec<HighlightPosition> {
    (0..n)
        .map(|_| HighlightPosition {
            selector_id: ids.next_id(),
            page_index: rng.random_range(0..4),
            // Coarse grid so equal y and x values occur and exercise ties.
            y: rng.random_range(0..40) as f64 * 25.0,
            x: rng.random_range(0..5) as f64 * 0.2,
        })
        .collect()
}

// ----------------------------------------------------------- layout checker

const EPS: f64 = 1e-9;

/// Checks placements against the layout rules: each widget placed once on
/// its anchor's page with the anchor's color, inside a margin band wide
/// enough for it, no two on the same side and page closer than `gap`, and
/// any widget whose slot at its anchor's y is free sitting exactly there.
pub fn check_layout(
    anchors: &[AnchorBox],
    widgets: &[WidgetSpec],
    m: &MarginSpec,
    colors: &BTreeMap<EntityId, u8>,
    out: &[WidgetPlacement],
) -> Result<(), String> {
    if out.len() != widgets.len() {
        return Err(format!("{} widgets but {} placements", widgets.len(), out.len()));
    }
    let anchor = |id: EntityId| anchors.iter().find(|a| a.selector_id == id).unwrap();
    let band = |side: Side| match side {
        Side::Left => (0.0, m.left_width),
        Side::Right => (m.viewport_width - m.right_width, m.viewport_width),
    };
    for w in widgets {
        let hits: Vec<&WidgetPlacement> = out.iter().filter(|p| p.link_id == w.link_id).collect();
        if hits.len() != 1 {
            return Err(format!("link {} placed {} times", w.link_id, hits.len()));
        }
        let p = hits[0];
        let a = anchor(w.anchor_selector_id);
        if p.anchor_selector_id != w.anchor_selector_id || p.page_index != a.page_index {
            return Err(format!("link {} on wrong anchor or page", w.link_id));
        }
        if p.w != w.w || p.h != w.h {
            return Err(format!("link {} resized", w.link_id));
        }
        if p.palette_index != colors[&w.anchor_selector_id] {
            return Err(format!("link {} color {} differs from its anchor's", w.link_id, p.palette_index));
        }
        let (lo, hi) = band(p.side);
        if p.x < lo - EPS || p.x + p.w > hi + EPS {
            return Err(format!("link {} x {}..{} outside band {lo}..{hi}", w.link_id, p.x, p.x + p.w));
        }
        if p.y < m.page_top - EPS || p.y + p.h > m.page_bottom + EPS {
            return Err(format!("link {} y {}..{} outside page", w.link_id, p.y, p.y + p.h));
        }
    }
    for p in out {
        for q in out {
            if p.link_id < q.link_id && p.side == q.side && p.page_index == q.page_index {
                let apart = p.y + p.h + m.gap <= q.y + EPS || q.y + q.h + m.gap <= p.y + EPS;
                if !apart {
                    return Err(format!("links {} and {} overlap", p.link_id, q.link_id));
                }
            }
        }
    }
    for p in out {
        let want = anchor(p.anchor_selector_id).y;
        let in_page = want >= m.page_top - EPS && want + p.h <= m.page_bottom + EPS;
        let clear = out.iter().all(|q| {
            q.link_id == p.link_id
                || q.side != p.side
                || q.page_index != p.page_index
                || want + p.h + m.gap <= q.y + EPS
                || q.y + q.h + m.gap <= want + EPS
        });
        if in_page && clear && (p.y - want).abs() > EPS {
            return Err(format!("link {} has a free slot at {want} but sits at {}", p.link_id, p.y));
        }
    }
    Ok(())
}

pub struct LayoutCase {
    pub anchors: Vec<AnchorBox>,
    pub widgets: Vec<WidgetSpec>,
    pub margins: MarginSpec,
    pub colors: BTreeMap<EntityId, u8>,
}

/// A random page set that is always placeable: per page and side the total
/// widget height with gaps fits the band.
pub fn random_layout_case(rng: &mut impl Rng, ids: &IdSource) -> LayoutCase {
    let margins = MarginSpec {
        left_width: rng.random_range(120..260) as f64,
        right_width: rng.random_range(120..260) as f64,
        viewport_width: 1200.0,
        page_top: rng.random_range(0..60) as f64,
        page_bottom: rng.random_range(900..1200) as f64,
        gap: rng.random_range(0..12) as f64,
    };
    let mut anchors = Vec::new();
    let mut widgets = Vec::new();
    let pages = rng.random_range(1..4);
    for page in 0..pages {
        let budget = (margins.page_bottom - margins.page_top) * 0.9;
        let mut used = 0.0;
        let n_anchors = rng.random_range(0..6);
        for _ in 0..n_anchors {
            let a = AnchorBox {
                selector_id: ids.next_id(),
                page_index: page,
                x: rng.random_range(250..800) as f64,
                y: rng.random_range(margins.page_top as i64..margins.page_bottom as i64) as f64,
                w: rng.random_range(20..150) as f64,
                h: rng.random_range(10..30) as f64,
            };
            for _ in 0..rng.random_range(1..4) {
                let h = rng.random_range(30..160) as f64;
                // Keep the page total within one band so any split is placeable.
                if used + h + margins.gap > budget {
                    break;
                }
                used += h + margins.gap;
                let narrow = margins.left_width.min(margins.right_width);
                let wide = margins.left_width.max(margins.right_width);
                let w =
                    if rng.random_bool(0.8) { rng.random_range(40.0..narrow) } else { rng.random_range(40.0..wide) };
                widgets.push(WidgetSpec {
                    link_id: ids.next_id(),
                    anchor_selector_id: a.selector_id,
                    w,
                    h,
                    seq: widgets.len() as u64,
                });
            }
            anchors.push(a);
        }
    }
    let positions: Vec<HighlightPosition> = anchors
        .iter()
        .map(|a| HighlightPosition { selector_id: a.selector_id, page_index: a.page_index, y: a.y, x: a.x })
        .collect();
    let colors = colors_oracle(&positions);
    LayoutCase { anchors, widgets, margins, colors }
}

// ---------------------------------------------------------- anchor oracle

/// Exhaustive scan: try every char offset, score context one char at a time.
pub fn anchor_oracle(text: &str, span: &TextSpan) -> AnchorResult {
    let t: Vec<char> = text.chars().collect();
    let q: Vec<char> = span.exact_quote.chars().collect();
    let (s, e) = (span.char_start, span.char_end);
    if s < e && e <= t.len() && t[s..e] == q[..] {
        return AnchorResult { status: AnchorStatus::Exact, resolved_start: Some(s), resolved_end: Some(e) };
    }
    let p: Vec<char> = span.prefix.chars().collect();
    let x: Vec<char> = span.suffix.chars().collect();
    let mut scored = Vec::new();
    for start in 0..=t.len().saturating_sub(q.len()) {
        if t.len() < q.len() || t[start..start + q.len()] != q[..] {
            continue;
        }
        let mut score = 0;
        for k in 1..=p.len().min(start) {
            if t[start - k] != p[p.len() - k] {
                break;
            }
            score += 1;
        }
        let end = start + q.len();
        for k in 0..x.len().min(t.len() - end) {
            if t[end + k] != x[k] {
                break;
            }
            score += 1;
        }
        scored.push((score, start));
    }
    let best = scored.iter().map(|(s, _)| *s).max();
    match best {
        None => AnchorResult { status: AnchorStatus::Orphaned, resolved_start: None, resolved_end: None },
        Some(b) => {
            let winners: Vec<usize> = scored.iter().filter(|(s, _)| *s == b).map(|(_, p)| *p).collect();
            if winners.len() > 1 {
                AnchorResult { status: AnchorStatus::Ambiguous, resolved_start: None, resolved_end: None }
            } else {
                AnchorResult {
                    status: AnchorStatus::Reanchored,
                    resolved_start: Some(winners[0]),
                    resolved_end: Some(winners[0] + q.len()),
                }
            }
        }
    }
}

const WORDS: &[&str] = &[
    "memex",
    "trail",
    "record",
    "scholar",
    "microfilm",
    "index",
    "association",
    "selection",
    "desk",
    "lever",
    "screen",
    "codex",
    "margin",
    "note",
    "link",
];

pub fn random_words(rng: &mut impl Rng, n: usize) -> String {
    (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

/// A page text with a quote (containing a marker word absent from the
/// vocabulary) occurring exactly once, and a span selecting it.
pub fn single_occurrence_case(rng: &mut impl Rng) -> (String, TextSpan) {
    let (nb, na) = (rng.random_range(0..30), rng.random_range(0..30));
    let before = random_words(rng, nb);
    let after = random_words(rng, na);
    let quote = format!("{} Vannevar{} {}", random_words(rng, 1), rng.random_range(0..1000), random_words(rng, 2));
    let sep_before = if before.is_empty() { "" } else { " " };
    let sep_after = if after.is_empty() { "" } else { " " };
    let head = format!("{before}{sep_before}");
    let text = format!("{head}{quote}{sep_after}{after}");
    let start = head.chars().count();
    let end = start + quote.chars().count();
    let chars: Vec<char> = text.chars().collect();
    let prefix: String = chars[start.saturating_sub(64)..start].iter().collect();
    let suffix: String = chars[end..(end + 64).min(chars.len())].iter().collect();
    let span = TextSpan { page_index: 0, char_start: start, char_end: end, exact_quote: quote, prefix, suffix };
    (text, span)
}

// ------------------------------------------------------------------ fuzzing

/// Outcome of one fuzz step.
pub enum Step {
    Committed(&'static str),
    Rejected(&'static str, Error),
}

const LOCATORS: &[(ResourceKind, &str)] = &[
    (ResourceKind::PdfDocument, "file:///a.pdf"),
    (ResourceKind::PdfDocument, "file:///b.pdf"),
    (ResourceKind::PdfDocument, "file:///c.pdf"),
    (ResourceKind::WebPage, "https://example.org/x"),
    (ResourceKind::WebPage, "https://example.org/y"),
    (ResourceKind::Video, "file:///v.mp4"),
    (ResourceKind::Audio, "file:///a.ogg"),
    (ResourceKind::Image, "file:///i.png"),
];

pub fn payload_for(rng: &mut impl Rng, kind: ResourceKind) -> Option<SelectorPayload> {
    Some(match kind {
        ResourceKind::PdfDocument if rng.random_bool(0.5) => {
            let (page, start, n) = (rng.random_range(0..5), rng.random_range(0..500), rng.random_range(1..4));
            text_span(page, start, &random_words(rng, n), "", "")
        }
        ResourceKind::PdfDocument => {
            let (x, y) = (rng.random_range(0.0..0.8), rng.random_range(0.0..0.8));
            region(rng.random_range(0..5), x, y, rng.random_range(0.01..0.2), rng.random_range(0.01..0.2))
        }
        ResourceKind::Video | ResourceKind::Audio => {
            let s = rng.random_range(0..100_000);
            segment(s, s + rng.random_range(1..50_000))
        }
        ResourceKind::WebPage => web(&random_words(rng, 3), rng.random_bool(0.5).then_some("/html[1]/body[1]/p[2]")),
        ResourceKind::Comment | ResourceKind::Image => return None,
    })
}

/// Picks an endpoint: an existing entity, or a new selector on a random
/// resource staged in `tx`.
fn pick_endpoint(rng: &mut impl Rng, tx: &mut Tx<'_>) -> Result<Option<Endpoint>> {
    let g = tx.graph();
    let resources: Vec<Resource> = g.resources().cloned().collect();
    if resources.is_empty() {
        return Ok(None);
    }
    let r = resources.choose(rng).unwrap().clone();
    match rng.random_range(0..3) {
        0 => Ok(Some(Endpoint::Resource(r.id))),
        1 => {
            let existing: Vec<EntityId> = g.selectors().map(|s| s.id).collect();
            Ok(existing.choose(rng).map(|s| Endpoint::Selector(*s)).or(Some(Endpoint::Resource(r.id))))
        }
        _ => match payload_for(rng, r.kind) {
            Some(p) => Ok(Some(Endpoint::Selector(tx.create_selector(r.id, p)?.id))),
            None => Ok(Some(Endpoint::Resource(r.id))),
        },
    }
}

/// One random operation across all entity kinds. Selectors are only ever
/// created together with a link that uses them, so a healthy store stays
/// free of orphans.
pub fn fuzz_step(rng: &mut impl Rng, a: &Annotator) -> Step {
    let g = a.graph().graph.clone();
    let op = rng.random_range(0..100);
    let (name, res): (&'static str, Result<()>) = match op {
        0..=19 => {
            let (kind, loc) = *LOCATORS.choose(rng).unwrap();
            ("create_resource", a.create_resource(kind, loc, None, None).map(drop))
        }
        20..=27 => {
            ("create_comment", a.create_resource(ResourceKind::Comment, &random_words(rng, 3), None, None).map(drop))
        }
        28..=59 => (
            "create_link",
            a.transaction(|tx| {
                let mut sources = Vec::new();
                let mut targets = Vec::new();
                for _ in 0..rng.random_range(1..3) {
                    sources.extend(pick_endpoint(rng, tx)?);
                }
                for _ in 0..rng.random_range(1..3) {
                    targets.extend(pick_endpoint(rng, tx)?);
                }
                targets.retain(|t| !sources.contains(t));
                let class = *[AnnotationClass::Comment, AnnotationClass::Example, AnnotationClass::Unspecified]
                    .choose(rng)
                    .unwrap();
                tx.create_link(sources, targets, Some(class), None).map(drop)
            }),
        ),
        60..=79 => match g.links().map(|l| l.id).collect::<Vec<_>>().choose(rng) {
            Some(id) => ("delete_link", a.delete_link(*id).map(drop)),
            None => ("delete_link", a.delete_link(EntityId::from_bytes([7; 16])).map(drop)),
        },
        80..=89 => match g.resources().map(|r| r.id).collect::<Vec<_>>().choose(rng) {
            Some(id) => ("delete_resource", a.delete_resource(*id)),
            None => ("delete_resource", a.delete_resource(EntityId::from_bytes([8; 16]))),
        },
        _ => match g.selectors().map(|s| s.id).collect::<Vec<_>>().choose(rng) {
            Some(id) => ("delete_selector", a.delete_selector(*id)),
            None => ("delete_selector", a.delete_selector(EntityId::from_bytes([9; 16]))),
        },
    };
    match res {
        Ok(()) => Step::Committed(name),
        Err(e) => Step::Rejected(name, e),
    }
}

/// Random graph with up to `max_links` links built through the public API.
pub fn random_graph(rng: &mut impl Rng, a: &Annotator, max_links: usize) {
    for (kind, loc) in LOCATORS {
        a.create_resource(*kind, loc, None, None).unwrap();
    }
    for _ in 0..rng.random_range(0..4) {
        a.create_resource(ResourceKind::Comment, &random_words(rng, 2), None, None).unwrap();
    }
    let want = rng.random_range(0..=max_links);
    while a.graph().graph.links().count() < want {
        let _ = a.transaction(|tx| {
            let mut sources = Vec::new();
            let mut targets = Vec::new();
            sources.extend(pick_endpoint(rng, tx)?);
            for _ in 0..rng.random_range(1..3) {
                targets.extend(pick_endpoint(rng, tx)?);
            }
            targets.retain(|t| !sources.contains(t));
            tx.create_link(sources, targets, None, None).map(drop)
        });
    }
}
