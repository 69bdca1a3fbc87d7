use nalgebra::DMatrix;

use super::{IndexedFrames, EPS};
use crate::assoc::lap;
use crate::geometry::iou;
use crate::sequence::TrackBox;

/// Counts behind HOTA, OWTA and TETA at one IOU threshold.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AlphaCounts {
    pub alpha: f64,
    pub tp: u64,
    pub fn_: u64,
    pub fp: u64,
    /// Sum over true positives of their trajectory-pair association score.
    pub ass_sum: f64,
    /// Sum of IOU over true positives.
    pub loc_sum: f64,
    /// Matched pairs whose classes agree.
    pub tpc: u64,
    /// Matched pairs whose classes differ; each is one FPC and one FNC.
    pub class_errors: u64,
}

impl AlphaCounts {
    pub fn zero(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }

    pub fn add(&mut self, o: &AlphaCounts) {
        self.tp += o.tp;
        self.fn_ += o.fn_;
        self.fp += o.fp;
        self.ass_sum += o.ass_sum;
        self.loc_sum += o.loc_sum;
        self.tpc += o.tpc;
        self.class_errors += o.class_errors;
    }
}

/// Frame-level correspondence; indices refer to positions within the frame.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FrameMatch {
    pub matches: Vec<(usize, usize)>,
    pub unmatched_gt: Vec<usize>,
    pub unmatched_pred: Vec<usize>,
}

/// Per-frame maximum-IOU matching keeping pairs with IOU at least `alpha`.
/// Ignores identities entirely; see [`hota_counts`] for the identity-aware
/// matching used by the metrics.
pub fn match_frames(gt: &[Vec<TrackBox>], pred: &[Vec<TrackBox>], alpha: f64) -> Vec<FrameMatch> {
    let len = gt.len().max(pred.len());
    let empty = Vec::new();
    (0..len)
        .map(|t| {
            let (g, p) = (gt.get(t).unwrap_or(&empty), pred.get(t).unwrap_or(&empty));
            let sim = DMatrix::from_fn(g.len(), p.len(), |i, j| iou(&g[i].bbox, &p[j].bbox));
            let matches: Vec<(usize, usize)> = lap::solve_max(&sim)
                .into_iter()
                .filter(|&(i, j)| sim[(i, j)] >= alpha - EPS)
                .collect();
            FrameMatch {
                unmatched_gt: (0..g.len()).filter(|i| !matches.iter().any(|m| m.0 == *i)).collect(),
                unmatched_pred: (0..p.len()).filter(|j| !matches.iter().any(|m| m.1 == *j)).collect(),
                matches,
            }
        })
        .collect()
}

/// HOTA-family counts. Matching within a frame maximises
/// `alignment(gt_id, pred_id) * IOU`, where the alignment is a
/// sequence-level soft overlap of the two trajectories, and a matched pair
/// counts at threshold `alpha` if its IOU reaches `alpha`.
pub(crate) fn hota_counts(frames: &IndexedFrames, alphas: &[f64]) -> Vec<AlphaCounts> {
    let (ng, np) = (frames.gt_count.len(), frames.pred_count.len());
    let mut potential = DMatrix::<f64>::zeros(ng, np);
    for t in 0..frames.len() {
        let (gi, pi, sim) = (&frames.gt_ids[t], &frames.pred_ids[t], &frames.sim[t]);
        let row_sum: Vec<f64> = sim.iter().map(|r| r.iter().sum()).collect();
        let col_sum: Vec<f64> = (0..pi.len()).map(|j| sim.iter().map(|r| r[j]).sum()).collect();
        for (i, &g) in gi.iter().enumerate() {
            for (j, &p) in pi.iter().enumerate() {
                let denom = row_sum[i] + col_sum[j] - sim[i][j];
                if denom > EPS {
                    potential[(g, p)] += sim[i][j] / denom;
                }
            }
        }
    }
    let alignment = DMatrix::from_fn(ng, np, |g, p| {
        potential[(g, p)] / (frames.gt_count[g] as f64 + frames.pred_count[p] as f64 - potential[(g, p)])
    });

    let mut counts: Vec<AlphaCounts> = alphas.iter().map(|&a| AlphaCounts::zero(a)).collect();
    let mut pair_matches: Vec<DMatrix<f64>> = alphas.iter().map(|_| DMatrix::zeros(ng, np)).collect();
    for t in 0..frames.len() {
        let (gi, pi, sim) = (&frames.gt_ids[t], &frames.pred_ids[t], &frames.sim[t]);
        if gi.is_empty() || pi.is_empty() {
            for c in counts.iter_mut() {
                c.fn_ += gi.len() as u64;
                c.fp += pi.len() as u64;
            }
            continue;
        }
        let score = DMatrix::from_fn(gi.len(), pi.len(), |i, j| alignment[(gi[i], pi[j])] * sim[i][j]);
        let assignment = lap::solve_max(&score);
        for (a, c) in counts.iter_mut().enumerate() {
            let mut matched = 0;
            for &(i, j) in &assignment {
                if sim[i][j] >= c.alpha - EPS {
                    matched += 1;
                    c.loc_sum += sim[i][j];
                    pair_matches[a][(gi[i], pi[j])] += 1.0;
                    if frames.gt_classes[t][i] == frames.pred_classes[t][j] {
                        c.tpc += 1;
                    } else {
                        c.class_errors += 1;
                    }
                }
            }
            c.tp += matched;
            c.fn_ += gi.len() as u64 - matched;
            c.fp += pi.len() as u64 - matched;
        }
    }

    for (c, m) in counts.iter_mut().zip(&pair_matches) {
        let mut sum = 0.0;
        for g in 0..ng {
            for p in 0..np {
                let n = m[(g, p)];
                if n > 0.0 {
                    let denom = (frames.gt_count[g] as f64 + frames.pred_count[p] as f64 - n).max(1.0);
                    sum += n * n / denom;
                }
            }
        }
        c.ass_sum = sum;
    }
    counts
}
