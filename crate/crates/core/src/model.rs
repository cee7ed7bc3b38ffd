//! Resource, selector and link entities plus their field-level invariants.
//!
//! Field names here are the interchange vocabulary: the JSON produced by
//! serde for these types is what the service speaks and what export files
//! contain.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::id::{EntityId, Millis};

/// Longest prefix/suffix context kept on a text span.
pub const MAX_CONTEXT_CHARS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceKind {
    PdfDocument,
    WebPage,
    Video,
    Audio,
    Image,
    Comment,
}

impl ResourceKind {
    pub const ALL: [ResourceKind; 6] = [
        ResourceKind::PdfDocument,
        ResourceKind::WebPage,
        ResourceKind::Video,
        ResourceKind::Audio,
        ResourceKind::Image,
        ResourceKind::Comment,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ResourceKind::PdfDocument => "pdf_document",
            ResourceKind::WebPage => "web_page",
            ResourceKind::Video => "video",
            ResourceKind::Audio => "audio",
            ResourceKind::Image => "image",
            ResourceKind::Comment => "comment",
        }
    }

    /// Whether a selector of the given kind may refer to a resource of this kind.
    pub fn admits(self, selector: SelectorKind) -> bool {
        matches!(
            (self, selector),
            (ResourceKind::PdfDocument, SelectorKind::TextSpan)
                | (ResourceKind::PdfDocument, SelectorKind::PageRegion)
                | (ResourceKind::Video, SelectorKind::TimeSegment)
                | (ResourceKind::Audio, SelectorKind::TimeSegment)
                | (ResourceKind::WebPage, SelectorKind::WebFragment)
        )
    }
}

impl fmt::Display for ResourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown resource kind `{0}`")]
pub struct UnknownKind(pub String);

impl FromStr for ResourceKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ResourceKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| UnknownKind(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resource {
    pub id: EntityId,
    pub kind: ResourceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub locator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub media_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment_body: Option<String>,
    pub created_at: Millis,
}

impl Resource {
    /// Checks the comment/locator exclusivity rule. Returns a description of
    /// the first problem found.
    pub fn problem(&self) -> Option<String> {
        let blank = |s: &Option<String>| s.as_deref().is_none_or(|s| s.trim().is_empty());
        if self.kind == ResourceKind::Comment {
            if blank(&self.comment_body) {
                return Some("comment resource needs a non-empty comment_body".into());
            }
            if self.locator.is_some() {
                return Some("comment resource must not carry a locator".into());
            }
        } else {
            if blank(&self.locator) {
                return Some(format!("{} resource needs a non-empty locator", self.kind));
            }
            if self.comment_body.is_some() {
                return Some(format!("{} resource must not carry a comment_body", self.kind));
            }
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectorKind {
    TextSpan,
    PageRegion,
    TimeSegment,
    WebFragment,
}

impl fmt::Display for SelectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectorKind::TextSpan => "text_span",
            SelectorKind::PageRegion => "page_region",
            SelectorKind::TimeSegment => "time_segment",
            SelectorKind::WebFragment => "web_fragment",
        })
    }
}

/// A character range of one page's normalized extracted text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextSpan {
    pub page_index: u32,
    pub char_start: usize,
    pub char_end: usize,
    pub exact_quote: String,
    #[serde(default)]
    pub prefix: String,
    #[serde(default)]
    pub suffix: String,
}

/// Page-normalized rectangle, origin top-left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageRegion {
    pub page_index: u32,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSegment {
    pub start_ms: u64,
    pub end_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WebFragment {
    pub exact_quote: String,
    #[serde(default)]
    pub prefix: String,
    #[serde(default)]
    pub suffix: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SelectorPayload {
    TextSpan(TextSpan),
    PageRegion(PageRegion),
    TimeSegment(TimeSegment),
    WebFragment(WebFragment),
}

impl SelectorPayload {
    pub fn kind(&self) -> SelectorKind {
        match self {
            SelectorPayload::TextSpan(_) => SelectorKind::TextSpan,
            SelectorPayload::PageRegion(_) => SelectorKind::PageRegion,
            SelectorPayload::TimeSegment(_) => SelectorKind::TimeSegment,
            SelectorPayload::WebFragment(_) => SelectorKind::WebFragment,
        }
    }

    pub fn page_index(&self) -> Option<u32> {
        match self {
            SelectorPayload::TextSpan(t) => Some(t.page_index),
            SelectorPayload::PageRegion(r) => Some(r.page_index),
            _ => None,
        }
    }

    /// Brings text fields into normalized whitespace form and clips text-span
    /// context to [`MAX_CONTEXT_CHARS`]. Applied once at selector creation.
    pub fn normalized(self) -> Self {
        use crate::anchoring::normalize_whitespace as norm;
        match self {
            SelectorPayload::TextSpan(t) => SelectorPayload::TextSpan(TextSpan {
                exact_quote: norm(&t.exact_quote),
                prefix: keep_last_chars(&norm(&t.prefix), MAX_CONTEXT_CHARS),
                suffix: norm(&t.suffix).chars().take(MAX_CONTEXT_CHARS).collect(),
                ..t
            }),
            SelectorPayload::WebFragment(f) => SelectorPayload::WebFragment(WebFragment {
                exact_quote: norm(&f.exact_quote),
                prefix: norm(&f.prefix),
                suffix: norm(&f.suffix),
                element_path: f.element_path,
            }),
            other => other,
        }
    }

    /// Violations of the payload's own invariants (independent of any resource).
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        match self {
            SelectorPayload::TextSpan(t) => {
                if t.char_start >= t.char_end {
                    out.push(Violation::InvertedRange { start: t.char_start as u64, end: t.char_end as u64 });
                }
                let quote_len = t.exact_quote.chars().count();
                if quote_len == 0 {
                    out.push(Violation::EmptyQuote);
                } else if t.char_start < t.char_end && t.char_end - t.char_start != quote_len {
                    out.push(Violation::QuoteLengthMismatch { span: t.char_end - t.char_start, quote: quote_len });
                }
                for (field, value) in [("prefix", &t.prefix), ("suffix", &t.suffix)] {
                    let n = value.chars().count();
                    if n > MAX_CONTEXT_CHARS {
                        out.push(Violation::ContextTooLong { field: field.into(), chars: n });
                    }
                }
            }
            SelectorPayload::PageRegion(r) => region_violations(r, &mut out),
            SelectorPayload::TimeSegment(s) => {
                if s.start_ms >= s.end_ms {
                    out.push(Violation::InvertedRange { start: s.start_ms, end: s.end_ms });
                }
            }
            SelectorPayload::WebFragment(f) => {
                if f.exact_quote.trim().is_empty() {
                    out.push(Violation::EmptyQuote);
                }
                if let Some(path) = &f.element_path {
                    if !is_valid_element_path(path) {
                        out.push(Violation::MalformedElementPath { path: path.clone() });
                    }
                }
            }
        }
        out
    }
}

fn region_violations(r: &PageRegion, out: &mut Vec<Violation>) {
    let fields = [("x", r.x), ("y", r.y), ("w", r.w), ("h", r.h)];
    if let Some((field, value)) = fields.iter().find(|(_, v)| !v.is_finite()) {
        out.push(Violation::CoordinateOutOfRange { field: (*field).into(), value: *value });
        return;
    }
    for (field, value) in [("x", r.x), ("y", r.y)] {
        if !(0.0..=1.0).contains(&value) {
            out.push(Violation::CoordinateOutOfRange { field: field.into(), value });
        }
    }
    for (field, value) in [("w", r.w), ("h", r.h)] {
        if value <= 0.0 {
            out.push(Violation::NonPositiveExtent { field: field.into(), value });
        }
    }
    if r.x + r.w > 1.0 {
        out.push(Violation::RegionOverflow { axis: "x".into(), end: r.x + r.w });
    }
    if r.y + r.h > 1.0 {
        out.push(Violation::RegionOverflow { axis: "y".into(), end: r.y + r.h });
    }
}

/// `html[1]/body[1]/p[3]` style paths: slash-separated element names, each
/// with an optional 1-based ordinal. A single leading slash is allowed.
pub fn is_valid_element_path(path: &str) -> bool {
    let body = path.strip_prefix('/').unwrap_or(path);
    if body.is_empty() {
        return false;
    }
    body.split('/').all(|seg| {
        let (name, ordinal) = match seg.split_once('[') {
            Some((name, rest)) => match rest.strip_suffix(']') {
                Some(n) => (name, Some(n)),
                None => return false,
            },
            None => (seg, None),
        };
        let mut chars = name.chars();
        let name_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic())
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        let ordinal_ok = ordinal.is_none_or(|n| n.parse::<u32>().is_ok_and(|n| n >= 1));
        name_ok && ordinal_ok
    })
}

fn keep_last_chars(s: &str, n: usize) -> String {
    let count = s.chars().count();
    s.chars().skip(count.saturating_sub(n)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selector {
    pub id: EntityId,
    pub resource_id: EntityId,
    pub payload: SelectorPayload,
    pub created_at: Millis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Resource(EntityId),
    Selector(EntityId),
}

impl Endpoint {
    pub fn id(&self) -> EntityId {
        match *self {
            Endpoint::Resource(id) | Endpoint::Selector(id) => id,
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Resource(id) => write!(f, "resource:{id}"),
            Endpoint::Selector(id) => write!(f, "selector:{id}"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationClass {
    Comment,
    Explanation,
    Example,
    #[default]
    Unspecified,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formality {
    Formal,
    Informal,
    #[default]
    Unspecified,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub id: EntityId,
    pub sources: Vec<Endpoint>,
    pub targets: Vec<Endpoint>,
    #[serde(default)]
    pub annotation_class: AnnotationClass,
    #[serde(default)]
    pub formality: Formality,
    pub created_at: Millis,
}

impl Link {
    pub fn endpoints(&self) -> impl Iterator<Item = &Endpoint> {
        self.sources.iter().chain(self.targets.iter())
    }

    pub fn problem(&self) -> Option<String> {
        if self.sources.is_empty() {
            return Some("link has no sources".into());
        }
        if self.targets.is_empty() {
            return Some("link has no targets".into());
        }
        if let Some(e) = self.sources.iter().find(|e| self.targets.contains(e)) {
            return Some(format!("{e} is both a source and a target"));
        }
        None
    }
}

/// Everything needed to re-render one document's annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationBundle {
    pub document: Resource,
    pub highlights: Vec<Selector>,
    pub links: Vec<Link>,
    pub target_selectors: Vec<Selector>,
    pub target_resources: Vec<Resource>,
    pub colors: BTreeMap<EntityId, u8>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanupReport {
    pub link_id: Option<EntityId>,
    pub removed_selectors: Vec<EntityId>,
    pub removed_resources: Vec<EntityId>,
}

/// One reason a selector does not fit its payload rules, its resource, or the
/// known extent of the media.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, thiserror::Error)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    #[error("{selector} selector cannot refer to a {resource} resource")]
    IncompatibleKind { selector: SelectorKind, resource: ResourceKind },
    #[error("selector refers to {found}, not {expected}")]
    ResourceMismatch { expected: EntityId, found: EntityId },
    #[error("quote is empty")]
    EmptyQuote,
    #[error("range start {start} is not before end {end}")]
    InvertedRange { start: u64, end: u64 },
    #[error("span covers {span} characters but the quote has {quote}")]
    QuoteLengthMismatch { span: usize, quote: usize },
    #[error("{field} context has {chars} characters (limit 64)")]
    ContextTooLong { field: String, chars: usize },
    #[error("coordinate {field}={value} outside [0, 1]")]
    CoordinateOutOfRange { field: String, value: f64 },
    #[error("extent {field}={value} must be positive")]
    NonPositiveExtent { field: String, value: f64 },
    #[error("region extends to {end} along {axis}, beyond 1")]
    RegionOverflow { axis: String, end: f64 },
    #[error("page {page_index} is outside a {page_count}-page document")]
    PageOutOfRange { page_index: u32, page_count: u32 },
    #[error("segment ends at {end_ms} ms, beyond the {duration_ms} ms duration")]
    SegmentExceedsDuration { end_ms: u64, duration_ms: u64 },
    #[error("element path `{path}` is malformed")]
    MalformedElementPath { path: String },
}
