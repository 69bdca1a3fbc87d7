//! Axis-aligned box arithmetic, point containment and the adjacent-frame
//! dynamicity attributes (IOU, aspect-ratio change, area change, motion).
//!
//! Boxes are always stored in corner form. Center and size are derived on
//! demand so there is exactly one canonical representation.

use serde::{Deserialize, Serialize};

/// A point in image coordinates (pixels).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Axis-aligned rectangle `(x1, y1)`–`(x2, y2)`: left, top, right, bottom.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BBox {
    pub const fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self { x1, y1, x2, y2 }
    }

    /// Build from MOT-style left/top/width/height.
    pub fn from_ltwh(left: f64, top: f64, width: f64, height: f64) -> Self {
        Self::new(left, top, left + width, top + height)
    }

    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self::new(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn center(&self) -> Point {
        Point::new((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }

    pub fn area(&self) -> f64 {
        area(self)
    }

    /// Finite coordinates with `x1 <= x2` and `y1 <= y2`.
    pub fn is_valid(&self) -> bool {
        self.x1.is_finite()
            && self.y1.is_finite()
            && self.x2.is_finite()
            && self.y2.is_finite()
            && self.x1 <= self.x2
            && self.y1 <= self.y2
    }

    /// Valid and with strictly positive width and height.
    pub fn is_proper(&self) -> bool {
        self.is_valid() && self.width() > 0.0 && self.height() > 0.0
    }

    pub fn intersection(&self, other: &BBox) -> Option<BBox> {
        let x1 = self.x1.max(other.x1);
        let y1 = self.y1.max(other.y1);
        let x2 = self.x2.min(other.x2);
        let y2 = self.y2.min(other.y2);
        (x1 <= x2 && y1 <= y2).then(|| BBox::new(x1, y1, x2, y2))
    }

    pub fn translate(&self, dx: f64, dy: f64) -> BBox {
        BBox::new(self.x1 + dx, self.y1 + dy, self.x2 + dx, self.y2 + dy)
    }

    pub fn contains(&self, p: Point) -> bool {
        contains(self, p)
    }
}

pub fn area(b: &BBox) -> f64 {
    b.width().max(0.0) * b.height().max(0.0)
}

/// Intersection over union. Boxes with zero-area union give 0.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection(b).map_or(0.0, |i| area(&i));
    let union = area(a) + area(b) - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Closed-interval containment: points on the boundary are inside.
pub fn contains(b: &BBox, p: Point) -> bool {
    b.x1 <= p.x && p.x <= b.x2 && b.y1 <= p.y && p.y <= b.y2
}

/// Area of the union of a set of rectangles, by coordinate compression.
pub fn union_area(boxes: &[BBox]) -> f64 {
    let boxes: Vec<&BBox> = boxes.iter().filter(|b| area(b) > 0.0).collect();
    if boxes.is_empty() {
        return 0.0;
    }
    let mut xs: Vec<f64> = boxes.iter().flat_map(|b| [b.x1, b.x2]).collect();
    let mut ys: Vec<f64> = boxes.iter().flat_map(|b| [b.y1, b.y2]).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let mut total = 0.0;
    for xw in xs.windows(2) {
        for yw in ys.windows(2) {
            let (cx, cy) = ((xw[0] + xw[1]) / 2.0, (yw[0] + yw[1]) / 2.0);
            if boxes
                .iter()
                .any(|b| b.x1 <= cx && cx <= b.x2 && b.y1 <= cy && cy <= b.y2)
            {
                total += (xw[1] - xw[0]) * (yw[1] - yw[0]);
            }
        }
    }
    total
}

/// Dynamicity attributes of one object between two adjacent frames.
///
/// `arc` and `area_change` are `None` when either box is degenerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttributePair {
    pub adjacent_iou: f64,
    pub arc: Option<f64>,
    pub area_change: Option<f64>,
    pub object_motion: f64,
}

/// Attributes from the previous box to the current one:
/// `arc = (w_prev/h_prev) / (w_cur/h_cur)`, `area_change = A_prev / A_cur`,
/// `object_motion` is the L1 displacement of the centers.
pub fn attribute_pair(prev: &BBox, cur: &BBox) -> AttributePair {
    let (wp, hp, wc, hc) = (prev.width(), prev.height(), cur.width(), cur.height());
    let proper = prev.is_proper() && cur.is_proper();
    let arc = proper.then(|| (wp / hp) / (wc / hc));
    let area_change = proper.then(|| (wp * hp) / (wc * hc));
    let (pc, cc) = (prev.center(), cur.center());
    AttributePair {
        adjacent_iou: iou(prev, cur),
        arc,
        area_change,
        object_motion: (cc.x - pc.x).abs() + (cc.y - pc.y).abs(),
    }
}
