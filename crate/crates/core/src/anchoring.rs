//! Resolving stored selectors against the current content of their media.
//!
//! Text offsets are counted in Unicode scalar values of whitespace-normalized
//! page text.

use serde::{Deserialize, Serialize};

use crate::model::{Resource, Selector, SelectorPayload, TextSpan, Violation};

/// Collapses every run of whitespace into a single space. Idempotent.
pub fn normalize_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_space = false;
    for c in text.chars() {
        if c.is_whitespace() {
            if !in_space {
                out.push(' ');
            }
            in_space = true;
        } else {
            out.push(c);
            in_space = false;
        }
    }
    out
}

#[derive(Deserialize)]
struct RawPageText {
    page_index: u32,
    text: String,
}

/// Extracted text of one page, normalized on construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "RawPageText")]
pub struct PageTextSnapshot {
    page_index: u32,
    text: String,
}

impl From<RawPageText> for PageTextSnapshot {
    fn from(raw: RawPageText) -> Self {
        PageTextSnapshot::new(raw.page_index, &raw.text)
    }
}

impl PageTextSnapshot {
    pub fn new(page_index: u32, text: &str) -> Self {
        PageTextSnapshot { page_index, text: normalize_whitespace(text) }
    }

    pub fn page_index(&self) -> u32 {
        self.page_index
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorStatus {
    Exact,
    Reanchored,
    Ambiguous,
    Orphaned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorResult {
    pub status: AnchorStatus,
    pub resolved_start: Option<usize>,
    pub resolved_end: Option<usize>,
}

impl AnchorResult {
    fn located(status: AnchorStatus, start: usize, end: usize) -> Self {
        AnchorResult { status, resolved_start: Some(start), resolved_end: Some(end) }
    }

    fn unlocated(status: AnchorStatus) -> Self {
        AnchorResult { status, resolved_start: None, resolved_end: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnchorError {
    #[error("selector is on page {selector} but the snapshot is page {snapshot}")]
    PageMismatch { selector: u32, snapshot: u32 },
    #[error("selector quote is empty")]
    EmptyQuote,
}

impl AnchorError {
    pub fn code(&self) -> &'static str {
        match self {
            AnchorError::PageMismatch { .. } => "PageMismatch",
            AnchorError::EmptyQuote => "EmptyQuote",
        }
    }
}

/// Finds where a stored text span sits in the current page text.
///
/// The stored offsets win if they still hold the quote. Otherwise every
/// occurrence of the quote is scored by how many characters of the stored
/// prefix (read backwards) and suffix (read forwards) agree with the text
/// around it. A unique best score re-anchors; a tie is reported as ambiguous
/// rather than guessed.
pub fn resolve_text_anchor(span: &TextSpan, snapshot: &PageTextSnapshot) -> Result<AnchorResult, AnchorError> {
    if span.page_index != snapshot.page_index {
        return Err(AnchorError::PageMismatch { selector: span.page_index, snapshot: snapshot.page_index });
    }
    let quote = normalize_whitespace(&span.exact_quote);
    if quote.is_empty() {
        return Err(AnchorError::EmptyQuote);
    }
    let text = snapshot.text();
    let offsets = CharOffsets::new(text);
    let quote_chars = quote.chars().count();

    if span.char_start < span.char_end && span.char_end <= offsets.len() {
        let (a, b) = (offsets.byte(span.char_start), offsets.byte(span.char_end));
        if text[a..b] == quote {
            return Ok(AnchorResult::located(AnchorStatus::Exact, span.char_start, span.char_end));
        }
    }

    let prefix: Vec<char> = normalize_whitespace(&span.prefix).chars().collect();
    let suffix: Vec<char> = normalize_whitespace(&span.suffix).chars().collect();
    let text_chars: Vec<char> = text.chars().collect();

    let mut best: Option<(usize, usize)> = None;
    let mut tied = false;
    let mut from = 0;
    while let Some(found) = text[from..].find(&quote) {
        let byte = from + found;
        let start = offsets.char_at(byte);
        let end = start + quote_chars;
        let score = context_score(&text_chars, start, end, &prefix, &suffix);
        match best {
            Some((_, s)) if score < s => {}
            Some((_, s)) if score == s => tied = true,
            _ => {
                best = Some((start, score));
                tied = false;
            }
        }
        // Step one character so overlapping occurrences are found too.
        from = byte + text[byte..].chars().next().map_or(1, char::len_utf8);
    }

    Ok(match best {
        None => AnchorResult::unlocated(AnchorStatus::Orphaned),
        Some(_) if tied => AnchorResult::unlocated(AnchorStatus::Ambiguous),
        Some((start, _)) => AnchorResult::located(AnchorStatus::Reanchored, start, start + quote_chars),
    })
}

fn context_score(text: &[char], start: usize, end: usize, prefix: &[char], suffix: &[char]) -> usize {
    let before = text[..start].iter().rev().zip(prefix.iter().rev()).take_while(|(a, b)| a == b).count();
    let after = text[end..].iter().zip(suffix.iter()).take_while(|(a, b)| a == b).count();
    before + after
}

/// Byte offset of every char boundary, plus the end.
struct CharOffsets(Vec<usize>);

impl CharOffsets {
    fn new(text: &str) -> Self {
        let mut v: Vec<usize> = text.char_indices().map(|(i, _)| i).collect();
        v.push(text.len());
        CharOffsets(v)
    }

    fn len(&self) -> usize {
        self.0.len() - 1
    }

    fn byte(&self, char_idx: usize) -> usize {
        self.0[char_idx]
    }

    fn char_at(&self, byte: usize) -> usize {
        self.0.binary_search(&byte).expect("match starts on a char boundary")
    }
}

/// Known size of a resource's media, when the caller has it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediaExtent {
    PageCount(u32),
    DurationMs(u64),
}

/// Lists every way `selector` fails to fit `resource` and its extent. An empty
/// list means the selector is valid.
pub fn validate_selector(selector: &Selector, resource: &Resource, extent: Option<MediaExtent>) -> Vec<Violation> {
    let mut out = Vec::new();
    if selector.resource_id != resource.id {
        out.push(Violation::ResourceMismatch { expected: resource.id, found: selector.resource_id });
    }
    let kind = selector.payload.kind();
    if !resource.kind.admits(kind) {
        out.push(Violation::IncompatibleKind { selector: kind, resource: resource.kind });
    }
    out.extend(selector.payload.violations());
    match (extent, &selector.payload) {
        (Some(MediaExtent::PageCount(pages)), p) => {
            if let Some(page) = p.page_index().filter(|&i| i >= pages) {
                out.push(Violation::PageOutOfRange { page_index: page, page_count: pages });
            }
        }
        (Some(MediaExtent::DurationMs(d)), SelectorPayload::TimeSegment(seg)) if seg.end_ms > d => {
            out.push(Violation::SegmentExceedsDuration { end_ms: seg.end_ms, duration_ms: d });
        }
        _ => {}
    }
    out
}
