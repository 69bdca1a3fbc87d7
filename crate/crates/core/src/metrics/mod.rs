//! Tracking metrics with TrackEval semantics: HOTA and its open-world
//! variant OWTA, CLEAR MOTA, IDF1 and the TETA components, plus histograms
//! of ground-truth dynamicity attributes.
//!
//! Each metric first reduces a sequence to integer-ish counts
//! ([`SequenceCounts`]); sequences are combined by adding counts and ratios
//! are taken last. Ratios with a zero denominator are `None`.

mod clear;
mod dynamicity;
mod hota;
mod identity;
mod report;

use std::collections::HashMap;

use crate::geometry::iou;
use crate::sequence::TrackBox;

use clear::clear_counts;
pub use clear::ClearCounts;
pub use dynamicity::{dynamicity_report, AttributeStats, DynamicityReport, Histogram};
use hota::hota_counts;
pub use hota::{match_frames, AlphaCounts, FrameMatch};
use identity::identity_counts;
pub use identity::IdentityCounts;
pub use report::{metrics_csv, metrics_markdown, AlphaScores, MetricsReport, SummaryRow};

pub(crate) const EPS: f64 = f64::EPSILON;

/// `0.05, 0.10, ..., 0.95`.
pub fn default_alphas() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

/// Everything needed to compute every metric for one or more sequences.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SequenceCounts {
    pub alphas: Vec<AlphaCounts>,
    pub clear: ClearCounts,
    pub identity: IdentityCounts,
    pub gt_dets: u64,
    pub pred_dets: u64,
}

impl SequenceCounts {
    pub fn add(&mut self, other: &SequenceCounts) {
        if self.alphas.is_empty() {
            self.alphas = other.alphas.iter().map(|a| AlphaCounts::zero(a.alpha)).collect();
        }
        for (a, b) in self.alphas.iter_mut().zip(&other.alphas) {
            a.add(b);
        }
        self.clear.add(&other.clear);
        self.identity.add(&other.identity);
        self.gt_dets += other.gt_dets;
        self.pred_dets += other.pred_dets;
    }

    pub fn combine<'a>(all: impl IntoIterator<Item = &'a SequenceCounts>) -> SequenceCounts {
        let mut total = SequenceCounts::default();
        for c in all {
            total.add(c);
        }
        total
    }
}

/// Count everything for one sequence at the given IOU thresholds.
pub fn evaluate(gt: &[Vec<TrackBox>], pred: &[Vec<TrackBox>], alphas: &[f64]) -> SequenceCounts {
    let frames = IndexedFrames::new(gt, pred);
    SequenceCounts {
        alphas: hota_counts(&frames, alphas),
        clear: clear_counts(&frames),
        identity: identity_counts(&frames),
        gt_dets: frames.gt_count.iter().sum(),
        pred_dets: frames.pred_count.iter().sum(),
    }
}

/// Convenience: evaluate one sequence and compute the report.
pub fn evaluate_report(gt: &[Vec<TrackBox>], pred: &[Vec<TrackBox>]) -> MetricsReport {
    MetricsReport::from_counts(&evaluate(gt, pred, &default_alphas()))
}

/// Per-threshold HOTA, DetA, AssA, OWTA, DetRe and TETA components.
pub fn alpha_scores(gt: &[Vec<TrackBox>], pred: &[Vec<TrackBox>], alphas: &[f64]) -> Vec<AlphaScores> {
    MetricsReport::from_counts(&evaluate(gt, pred, alphas)).per_alpha
}

pub fn mota(gt: &[Vec<TrackBox>], pred: &[Vec<TrackBox>]) -> Option<f64> {
    clear_counts(&IndexedFrames::new(gt, pred)).mota()
}

pub fn idf1(gt: &[Vec<TrackBox>], pred: &[Vec<TrackBox>]) -> Option<f64> {
    identity_counts(&IndexedFrames::new(gt, pred)).idf1()
}

/// Frames with ids mapped to dense indices and IOU matrices precomputed.
pub(crate) struct IndexedFrames {
    pub gt_ids: Vec<Vec<usize>>,
    pub pred_ids: Vec<Vec<usize>>,
    pub gt_classes: Vec<Vec<i32>>,
    pub pred_classes: Vec<Vec<i32>>,
    /// `sim[t][i][j]`: IOU of gt `i` and prediction `j` in frame `t`.
    pub sim: Vec<Vec<Vec<f64>>>,
    /// Detections per dense id.
    pub gt_count: Vec<u64>,
    pub pred_count: Vec<u64>,
}

fn dense(frames: &[Vec<TrackBox>], len: usize) -> (Vec<Vec<usize>>, Vec<u64>) {
    let mut map: HashMap<u64, usize> = HashMap::new();
    let mut sorted: Vec<u64> = frames.iter().flatten().map(|b| b.id).collect();
    sorted.sort_unstable();
    sorted.dedup();
    for (k, id) in sorted.iter().enumerate() {
        map.insert(*id, k);
    }
    let mut count = vec![0; sorted.len()];
    let mut ids = vec![Vec::new(); len];
    for (t, frame) in frames.iter().enumerate() {
        ids[t] = frame
            .iter()
            .map(|b| {
                let k = map[&b.id];
                count[k] += 1;
                k
            })
            .collect();
    }
    (ids, count)
}

impl IndexedFrames {
    pub fn new(gt: &[Vec<TrackBox>], pred: &[Vec<TrackBox>]) -> Self {
        let len = gt.len().max(pred.len());
        let (gt_ids, gt_count) = dense(gt, len);
        let (pred_ids, pred_count) = dense(pred, len);
        let empty = Vec::new();
        let frame = |v: &'_ [Vec<TrackBox>], t: usize| -> Vec<TrackBox> { v.get(t).unwrap_or(&empty).clone() };
        let mut sim = Vec::with_capacity(len);
        let mut gt_classes = Vec::with_capacity(len);
        let mut pred_classes = Vec::with_capacity(len);
        for t in 0..len {
            let (g, p) = (frame(gt, t), frame(pred, t));
            sim.push(
                g.iter()
                    .map(|a| p.iter().map(|b| iou(&a.bbox, &b.bbox)).collect())
                    .collect(),
            );
            gt_classes.push(g.iter().map(|b| b.class_id).collect());
            pred_classes.push(p.iter().map(|b| b.class_id).collect());
        }
        Self {
            gt_ids,
            pred_ids,
            gt_classes,
            pred_classes,
            sim,
            gt_count,
            pred_count,
        }
    }

    pub fn len(&self) -> usize {
        self.sim.len()
    }
}

pub(crate) fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}
