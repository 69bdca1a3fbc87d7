use serde::Serialize;

use crate::geometry::attribute_pair;
use crate::sequence::TrackBox;

/// Fixed-width bins starting at `lower`, optionally with a final bin for
/// everything at or above the last edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub lower: f64,
    pub width: f64,
    pub bins: usize,
    pub overflow: bool,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(lower: f64, width: f64, bins: usize, overflow: bool) -> Self {
        Self {
            lower,
            width,
            bins,
            overflow,
            counts: vec![0; bins + usize::from(overflow)],
        }
    }

    /// Values past the last edge go to the overflow bin, or to the last bin
    /// when there is none (so IOU 1.0 lands in `[0.9, 1.0]`).
    pub fn add(&mut self, v: f64) {
        let pos = ((v - self.lower) / self.width).floor().max(0.0) as usize;
        // bin edges are multiples of the width; nudge values that sit on an
        // edge but round just below it
        let pos = if pos < self.bins && (v - self.lower) >= (pos + 1) as f64 * self.width - 1e-12 {
            pos + 1
        } else {
            pos
        };
        let idx = if pos < self.bins {
            pos
        } else if self.overflow {
            self.bins
        } else {
            self.bins - 1
        };
        self.counts[idx] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `(lower, upper)` of each bin; the overflow bin is unbounded above.
    pub fn edges(&self) -> Vec<(f64, f64)> {
        (0..self.counts.len())
            .map(|k| {
                let lo = self.lower + k as f64 * self.width;
                let hi = if k == self.bins { f64::INFINITY } else { lo + self.width };
                (lo, hi)
            })
            .collect()
    }

    /// Fraction of the mass in each bin.
    pub fn normalized(&self) -> Vec<f64> {
        let total = self.total();
        self.counts
            .iter()
            .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributeStats {
    pub histogram: Histogram,
    pub mean: Option<f64>,
    pub median: Option<f64>,
}

impl AttributeStats {
    fn from_values(mut histogram: Histogram, values: &mut [f64]) -> Self {
        for &v in values.iter() {
            histogram.add(v);
        }
        values.sort_by(f64::total_cmp);
        let n = values.len();
        let median = match n {
            0 => None,
            _ if n % 2 == 1 => Some(values[n / 2]),
            _ => Some((values[n / 2 - 1] + values[n / 2]) / 2.0),
        };
        Self {
            histogram,
            mean: (n > 0).then(|| values.iter().sum::<f64>() / n as f64),
            median,
        }
    }
}

/// Histograms of the adjacent-frame attributes of ground-truth objects.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicityReport {
    pub pairs: u64,
    pub iou: AttributeStats,
    pub arc: AttributeStats,
    pub area_change: AttributeStats,
    pub object_motion: AttributeStats,
}

impl DynamicityReport {
    pub fn attributes(&self) -> [(&'static str, &AttributeStats); 4] {
        [
            ("IOU", &self.iou),
            ("ARC", &self.arc),
            ("AC", &self.area_change),
            ("OM", &self.object_motion),
        ]
    }
}

/// Attribute histograms over every pair of consecutive frames in which an
/// object is present in both with non-degenerate boxes. Bins are 0.1 wide
/// for IOU, 0.2 for ARC and AC (up to 3, then overflow) and 20 px for OM
/// (up to 200, then overflow).
pub fn dynamicity_report(gt: &[Vec<TrackBox>]) -> DynamicityReport {
    let mut iou = Vec::new();
    let mut arc = Vec::new();
    let mut ac = Vec::new();
    let mut om = Vec::new();
    for w in gt.windows(2) {
        for cur in &w[1] {
            let Some(prev) = w[0].iter().find(|p| p.id == cur.id) else {
                continue;
            };
            let a = attribute_pair(&prev.bbox, &cur.bbox);
            let (Some(r), Some(c)) = (a.arc, a.area_change) else {
                continue;
            };
            iou.push(a.adjacent_iou);
            arc.push(r);
            ac.push(c);
            om.push(a.object_motion);
        }
    }
    DynamicityReport {
        pairs: iou.len() as u64,
        iou: AttributeStats::from_values(Histogram::new(0.0, 0.1, 10, false), &mut iou),
        arc: AttributeStats::from_values(Histogram::new(0.0, 0.2, 15, true), &mut arc),
        area_change: AttributeStats::from_values(Histogram::new(0.0, 0.2, 15, true), &mut ac),
        object_motion: AttributeStats::from_values(Histogram::new(0.0, 20.0, 10, true), &mut om),
    }
}
