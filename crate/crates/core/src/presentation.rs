//! Highlight colors and margin widget placement.
//!
//! Two visual channels tie a pop-up widget to its highlight: the widget frame
//! takes the highlight's palette color, and the widget sits in the margin as
//! close to the highlight's vertical position as the other widgets allow.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::id::EntityId;

pub const PALETTE_SIZE: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rgb {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Rgb {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Rgb { r, g, b }
    }

    pub fn hex(&self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.r, self.g, self.b)
    }
}

/// Twelve hues 30° apart at HSL saturation 0.75, lightness 0.55. Index 0 is
/// blue (240°); each next index steps 150° round the wheel, so consecutive
/// highlights land on well-separated hues.
pub const PALETTE: [Rgb; PALETTE_SIZE] = [
    Rgb::new(0x36, 0x36, 0xe2), // 240 blue
    Rgb::new(0xe2, 0x8c, 0x36), // 30 orange
    Rgb::new(0x36, 0xe2, 0xe2), // 180 cyan
    Rgb::new(0xe2, 0x36, 0x8c), // 330 rose
    Rgb::new(0x36, 0xe2, 0x36), // 120 green
    Rgb::new(0x8c, 0x36, 0xe2), // 270 violet
    Rgb::new(0xe2, 0xe2, 0x36), // 60 yellow
    Rgb::new(0x36, 0x8c, 0xe2), // 210 azure
    Rgb::new(0xe2, 0x36, 0x36), // 0 red
    Rgb::new(0x36, 0xe2, 0x8c), // 150 spring green
    Rgb::new(0xe2, 0x36, 0xe2), // 300 magenta
    Rgb::new(0x8c, 0xe2, 0x36), // 90 chartreuse
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PresentationError {
    #[error("selector {0} appears more than once")]
    DuplicateSelectorId(EntityId),
    #[error("position of {0} is not a finite number")]
    InvalidPosition(EntityId),
    #[error("widget for link {link_id} is {w} wide; neither margin fits it")]
    WidgetTooWide { link_id: EntityId, w: f64 },
    #[error("widget for link {link_id} is {h} tall; the page band is {band}")]
    WidgetTooTall { link_id: EntityId, h: f64, band: f64 },
    #[error("widget for link {0} must have positive, finite size")]
    InvalidWidget(EntityId),
    #[error("anchor {0} is not among the anchor boxes")]
    UnknownAnchor(EntityId),
    #[error("anchor {0} has no assigned color")]
    MissingColor(EntityId),
    #[error("invalid margins: {0}")]
    InvalidMargins(String),
    #[error("widgets on page {page_index} do not fit in the {side:?} margin")]
    MarginOverflow { page_index: u32, side: Side },
}

impl PresentationError {
    pub fn code(&self) -> &'static str {
        match self {
            PresentationError::DuplicateSelectorId(_) => "DuplicateSelectorId",
            PresentationError::InvalidPosition(_) => "InvalidPosition",
            PresentationError::WidgetTooWide { .. } => "WidgetTooWide",
            PresentationError::WidgetTooTall { .. } => "WidgetTooTall",
            PresentationError::InvalidWidget(_) => "InvalidWidget",
            PresentationError::UnknownAnchor(_) => "UnknownAnchor",
            PresentationError::MissingColor(_) => "MissingColor",
            PresentationError::InvalidMargins(_) => "InvalidMargins",
            PresentationError::MarginOverflow { .. } => "MarginOverflow",
        }
    }
}

/// Where a highlight sits in the document view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HighlightPosition {
    pub selector_id: EntityId,
    pub page_index: u32,
    pub y: f64,
    pub x: f64,
}

/// Page, then y, then x, then selector id.
pub fn reading_order(a: &HighlightPosition, b: &HighlightPosition) -> Ordering {
    a.page_index
        .cmp(&b.page_index)
        .then(a.y.total_cmp(&b.y))
        .then(a.x.total_cmp(&b.x))
        .then(a.selector_id.cmp(&b.selector_id))
}

/// Numbers highlights top to bottom and takes palette indices cyclically.
///
/// Recomputed from positions alone, so adding a highlight above others
/// shifts their colors.
pub fn assign_colors(highlights: &[HighlightPosition]) -> Result<BTreeMap<EntityId, u8>, PresentationError> {
    let mut seen = BTreeSet::new();
    for h in highlights {
        if !seen.insert(h.selector_id) {
            return Err(PresentationError::DuplicateSelectorId(h.selector_id));
        }
        if !h.x.is_finite() || !h.y.is_finite() {
            return Err(PresentationError::InvalidPosition(h.selector_id));
        }
    }
    let mut ordered: Vec<&HighlightPosition> = highlights.iter().collect();
    ordered.sort_by(|a, b| reading_order(a, b));
    Ok(ordered.into_iter().enumerate().map(|(i, h)| (h.selector_id, (i % PALETTE_SIZE) as u8)).collect())
}

/// A rendered highlight's bounding box in viewport pixels, y downward.
/// Coordinates are page-local: each page has its own margin bands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorBox {
    pub selector_id: EntityId,
    pub page_index: u32,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

/// The left band spans `[0, left_width]`; the right band spans
/// `[viewport_width - right_width, viewport_width]`. Both run vertically from
/// `page_top` to `page_bottom`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginSpec {
    pub left_width: f64,
    pub right_width: f64,
    pub viewport_width: f64,
    pub page_top: f64,
    pub page_bottom: f64,
    pub gap: f64,
}

impl MarginSpec {
    fn check(&self) -> Result<(), PresentationError> {
        let bad = |msg: &str| Err(PresentationError::InvalidMargins(msg.into()));
        let all = [self.left_width, self.right_width, self.viewport_width, self.page_top, self.page_bottom, self.gap];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("all fields must be finite");
        }
        if self.left_width < 0.0 || self.right_width < 0.0 {
            return bad("margin widths must be non-negative");
        }
        if self.left_width + self.right_width > self.viewport_width {
            return bad("margins are wider than the viewport");
        }
        if self.page_top >= self.page_bottom {
            return bad("page_top must be above page_bottom");
        }
        if self.gap < 0.0 {
            return bad("gap must be non-negative");
        }
        Ok(())
    }

    pub fn band_x(&self, side: Side) -> (f64, f64) {
        match side {
            Side::Left => (0.0, self.left_width),
            Side::Right => (self.viewport_width - self.right_width, self.viewport_width),
        }
    }

    fn width(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.left_width,
            Side::Right => self.right_width,
        }
    }
}

/// A widget to place: one per link, anchored at one highlight. `seq` orders
/// widgets sharing an anchor height (creation order).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidgetSpec {
    pub link_id: EntityId,
    pub anchor_selector_id: EntityId,
    pub w: f64,
    pub h: f64,
    #[serde(default)]
    pub seq: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidgetPlacement {
    pub link_id: EntityId,
    pub anchor_selector_id: EntityId,
    pub page_index: u32,
    pub side: Side,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub palette_index: u8,
}

struct Column {
    /// Indices into the output vector, top to bottom.
    placed: Vec<usize>,
}

impl Column {
    fn bottom(&self, out: &[WidgetPlacement]) -> Option<f64> {
        self.placed.last().map(|&i| out[i].y + out[i].h)
    }
}

/// Places one widget per link in the page margins.
///
/// Widgets are taken per page in order of anchor height. Each goes to the
/// margin nearer its anchor that is wide enough (ties go right) at the
/// anchor's height, pushed down below the previous widget on that side when
/// they would overlap. A widget pushed past the page bottom tries the other
/// margin; failing that it is pinned to the page bottom and the widgets above
/// it on that side are shifted up to make room.
pub fn layout_widgets(
    anchors: &[AnchorBox],
    widgets: &[WidgetSpec],
    margins: &MarginSpec,
    colors: &BTreeMap<EntityId, u8>,
) -> Result<Vec<WidgetPlacement>, PresentationError> {
    margins.check()?;
    let mut by_id: BTreeMap<EntityId, &AnchorBox> = BTreeMap::new();
    for a in anchors {
        if by_id.insert(a.selector_id, a).is_some() {
            return Err(PresentationError::DuplicateSelectorId(a.selector_id));
        }
    }
    let band = margins.page_bottom - margins.page_top;
    let mut jobs = Vec::with_capacity(widgets.len());
    for w in widgets {
        let anchor = *by_id.get(&w.anchor_selector_id).ok_or(PresentationError::UnknownAnchor(w.anchor_selector_id))?;
        if !(w.w.is_finite() && w.h.is_finite() && w.w > 0.0 && w.h > 0.0) {
            return Err(PresentationError::InvalidWidget(w.link_id));
        }
        if ![anchor.x, anchor.y, anchor.w, anchor.h].iter().all(|v| v.is_finite()) {
            return Err(PresentationError::InvalidPosition(anchor.selector_id));
        }
        if w.w > margins.left_width && w.w > margins.right_width {
            return Err(PresentationError::WidgetTooWide { link_id: w.link_id, w: w.w });
        }
        if w.h > band {
            return Err(PresentationError::WidgetTooTall { link_id: w.link_id, h: w.h, band });
        }
        let color = *colors.get(&w.anchor_selector_id).ok_or(PresentationError::MissingColor(w.anchor_selector_id))?;
        jobs.push((w, anchor, color));
    }
    jobs.sort_by(|(wa, aa, _), (wb, ab, _)| {
        aa.page_index
            .cmp(&ab.page_index)
            .then(aa.y.total_cmp(&ab.y))
            .then(wa.seq.cmp(&wb.seq))
            .then(wa.link_id.cmp(&wb.link_id))
    });

    let mut out: Vec<WidgetPlacement> = Vec::with_capacity(jobs.len());
    let mut page_start = 0;
    while page_start < jobs.len() {
        let page = jobs[page_start].1.page_index;
        let page_end =
            jobs[page_start..].iter().position(|(_, a, _)| a.page_index != page).map_or(jobs.len(), |n| page_start + n);
        let mut left = Column { placed: Vec::new() };
        let mut right = Column { placed: Vec::new() };

        for &(w, anchor, color) in &jobs[page_start..page_end] {
            let preferred = preferred_side(anchor, w.w, margins);
            let fits_other = w.w <= margins.width(preferred.other());
            let slot = |col: &Column, out: &[WidgetPlacement]| {
                let mut y = anchor.y.max(margins.page_top);
                if let Some(bottom) = col.bottom(out) {
                    y = y.max(bottom + margins.gap);
                }
                (y + w.h <= margins.page_bottom).then_some(y)
            };
            let (pref_col, other_col) = match preferred {
                Side::Left => (&mut left, &mut right),
                Side::Right => (&mut right, &mut left),
            };
            let (side, y, col) = if let Some(y) = slot(pref_col, &out) {
                (preferred, y, pref_col)
            } else if let Some(y) = fits_other.then(|| slot(other_col, &out)).flatten() {
                (preferred.other(), y, other_col)
            } else {
                (preferred, margins.page_bottom - w.h, pref_col)
            };
            let (band_left, band_right) = margins.band_x(side);
            let x = match side {
                Side::Left => band_right - w.w,
                Side::Right => band_left,
            };
            col.placed.push(out.len());
            out.push(WidgetPlacement {
                link_id: w.link_id,
                anchor_selector_id: w.anchor_selector_id,
                page_index: page,
                side,
                x,
                y,
                w: w.w,
                h: w.h,
                palette_index: color,
            });
            lift_column(col, &mut out, margins.gap);
            if let Some(&first) = col.placed.first() {
                if out[first].y < margins.page_top {
                    return Err(PresentationError::MarginOverflow { page_index: page, side });
                }
            }
        }
        page_start = page_end;
    }
    Ok(out)
}

/// Shifts widgets up, bottom to top, until each clears the one below it.
fn lift_column(col: &Column, out: &mut [WidgetPlacement], gap: f64) {
    for pair in col.placed.windows(2).rev() {
        let (above, below) = (pair[0], pair[1]);
        let limit = out[below].y - gap - out[above].h;
        if out[above].y > limit {
            out[above].y = limit;
        }
    }
}

fn preferred_side(anchor: &AnchorBox, w: f64, m: &MarginSpec) -> Side {
    let fits_left = w <= m.left_width;
    let fits_right = w <= m.right_width;
    match (fits_left, fits_right) {
        (true, false) => Side::Left,
        (false, true) => Side::Right,
        _ => {
            let to_left = (anchor.x - m.left_width).max(0.0);
            let to_right = (m.viewport_width - m.right_width - (anchor.x + anchor.w)).max(0.0);
            if to_left < to_right {
                Side::Left
            } else {
                Side::Right
            }
        }
    }
}
