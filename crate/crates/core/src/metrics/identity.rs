use nalgebra::DMatrix;

use super::IndexedFrames;
use crate::assoc::lap;

pub const IDENTITY_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IdentityCounts {
    pub idtp: u64,
    pub idfp: u64,
    pub idfn: u64,
}

impl IdentityCounts {
    pub fn add(&mut self, o: &IdentityCounts) {
        self.idtp += o.idtp;
        self.idfp += o.idfp;
        self.idfn += o.idfn;
    }

    /// `2 IDTP / (2 IDTP + IDFP + IDFN)`.
    pub fn idf1(&self) -> Option<f64> {
        let den = 2 * self.idtp + self.idfp + self.idfn;
        (den > 0).then(|| 2.0 * self.idtp as f64 / den as f64)
    }
}

/// Global one-to-one mapping between ground-truth and predicted
/// trajectories that maximises the number of frames where the mapped pair
/// overlaps with IOU at least 0.5.
pub(crate) fn identity_counts(frames: &IndexedFrames) -> IdentityCounts {
    let (ng, np) = (frames.gt_count.len(), frames.pred_count.len());
    let mut overlap = DMatrix::<f64>::zeros(ng, np);
    for t in 0..frames.len() {
        for (i, &g) in frames.gt_ids[t].iter().enumerate() {
            for (j, &p) in frames.pred_ids[t].iter().enumerate() {
                if frames.sim[t][i][j] >= IDENTITY_THRESHOLD {
                    overlap[(g, p)] += 1.0;
                }
            }
        }
    }
    let idtp: f64 = lap::solve_max(&overlap).into_iter().map(|(g, p)| overlap[(g, p)]).sum();
    let idtp = idtp as u64;
    let gt: u64 = frames.gt_count.iter().sum();
    let pred: u64 = frames.pred_count.iter().sum();
    IdentityCounts {
        idtp,
        idfn: gt - idtp,
        idfp: pred - idtp,
    }
}
