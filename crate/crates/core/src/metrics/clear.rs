use nalgebra::DMatrix;

use super::{IndexedFrames, EPS};
use crate::assoc::lap;

/// CLEAR-MOT matching threshold.
pub const CLEAR_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClearCounts {
    pub tp: u64,
    pub fn_: u64,
    pub fp: u64,
    pub idsw: u64,
}

impl ClearCounts {
    pub fn add(&mut self, o: &ClearCounts) {
        self.tp += o.tp;
        self.fn_ += o.fn_;
        self.fp += o.fp;
        self.idsw += o.idsw;
    }

    pub fn gt_dets(&self) -> u64 {
        self.tp + self.fn_
    }

    /// `1 - (FN + FP + IDSW) / gtDet`.
    pub fn mota(&self) -> Option<f64> {
        let gt = self.gt_dets();
        (gt > 0).then(|| 1.0 - (self.fn_ + self.fp + self.idsw) as f64 / gt as f64)
    }
}

/// Frame-by-frame matching at IOU 0.5 that keeps last frame's pairs when
/// still admissible. An identity switch is a ground-truth object matched to
/// a different prediction than the last time it was matched.
pub(crate) fn clear_counts(frames: &IndexedFrames) -> ClearCounts {
    let ng = frames.gt_count.len();
    let mut c = ClearCounts::default();
    let mut last_matched: Vec<Option<usize>> = vec![None; ng];
    let mut previous_frame: Vec<Option<usize>> = vec![None; ng];
    for t in 0..frames.len() {
        let (gi, pi, sim) = (&frames.gt_ids[t], &frames.pred_ids[t], &frames.sim[t]);
        if gi.is_empty() || pi.is_empty() {
            c.fn_ += gi.len() as u64;
            c.fp += pi.len() as u64;
            continue;
        }
        let score = DMatrix::from_fn(gi.len(), pi.len(), |i, j| {
            if sim[i][j] < CLEAR_THRESHOLD - EPS {
                return 0.0;
            }
            let carried = previous_frame[gi[i]] == Some(pi[j]);
            1000.0 * f64::from(u8::from(carried)) + sim[i][j]
        });
        previous_frame = vec![None; ng];
        let mut matched = 0;
        for (i, j) in lap::solve_max(&score) {
            if score[(i, j)] <= EPS {
                continue;
            }
            matched += 1;
            let (g, p) = (gi[i], pi[j]);
            if last_matched[g].is_some_and(|q| q != p) {
                c.idsw += 1;
            }
            last_matched[g] = Some(p);
            previous_frame[g] = Some(p);
        }
        c.tp += matched;
        c.fn_ += gi.len() as u64 - matched;
        c.fp += pi.len() as u64 - matched;
    }
    c
}
