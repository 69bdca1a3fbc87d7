use nalgebra::DMatrix;

use super::{AssocError, FusionRule};
use crate::assoc::lap;
use crate::geometry::{area, iou, BBox};
use crate::points::PointTrajectory;
use crate::sampler::NetOwner;
use crate::sequence::{Detection, TrackId};

/// The set of POI trajectories attached to one object.
#[derive(Debug, Clone, PartialEq)]
pub struct Net {
    pub owner: NetOwner,
    pub pois: Vec<PointTrajectory>,
}

impl Net {
    pub fn new(pois: Vec<PointTrajectory>) -> Result<Self, AssocError> {
        let owner = pois.first().ok_or(AssocError::EmptyNet)?.owner;
        if pois.iter().any(|p| p.owner != owner) {
            return Err(AssocError::MixedNet);
        }
        Ok(Self { owner, pois })
    }

    pub fn visible_count(&self, frame: u32) -> usize {
        self.pois
            .iter()
            .filter(|p| p.visible_position(frame).is_some())
            .count()
    }
}

/// Scores between tracks (rows) and detections (columns), in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub values: DMatrix<f64>,
    pub row_ids: Vec<TrackId>,
    /// Detection indices within the frame.
    pub col_ids: Vec<usize>,
}

impl ScoreMatrix {
    pub fn new(values: DMatrix<f64>, row_ids: Vec<TrackId>, col_ids: Vec<usize>) -> Self {
        debug_assert_eq!(values.shape(), (row_ids.len(), col_ids.len()));
        Self {
            values,
            row_ids,
            col_ids,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[(row, col)]
    }
}

/// One track's inputs to the fine-grained score.
#[derive(Debug, Clone, Copy)]
pub struct NetRow<'a> {
    pub track_id: TrackId,
    pub net: Option<&'a Net>,
    /// Motion-predicted box for the frame being matched.
    pub predicted: BBox,
}

/// Fine-grained scores plus the number of visible POIs behind each row.
#[derive(Debug, Clone, PartialEq)]
pub struct FineScores {
    pub scores: ScoreMatrix,
    pub visible: Vec<usize>,
}

impl FineScores {
    /// Fuse with coarse scores; rows without visible POIs keep the coarse
    /// score alone.
    pub fn fuse(&self, coarse: &ScoreMatrix, rule: FusionRule, lambda: f64) -> Result<ScoreMatrix, AssocError> {
        let mut fused = fuse_scores(&self.scores, coarse, rule, lambda)?;
        for (i, &n) in self.visible.iter().enumerate() {
            if n == 0 {
                fused.values.set_row(i, &coarse.values.row(i));
            }
        }
        Ok(fused)
    }
}

/// `S[i][j] = w[i][j] * |P_i ∩ b_j| / |P_i|` with
/// `w[i][j] = min(1, A(predicted_i) / A(b_j))`, counting only POIs visible at
/// `frame`. Rows with no visible POIs (or no Net) score 0 everywhere, as do
/// degenerate detection boxes.
pub fn fine_score_matrix(rows: &[NetRow<'_>], detections: &[Detection], frame: u32) -> FineScores {
    let mut values = DMatrix::zeros(rows.len(), detections.len());
    let mut visible = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let points: Vec<_> = row
            .net
            .map(|net| {
                net.pois
                    .iter()
                    .filter_map(|p| p.visible_position(frame))
                    .collect()
            })
            .unwrap_or_default();
        visible.push(points.len());
        if points.is_empty() {
            continue;
        }
        let predicted_area = area(&row.predicted);
        for (j, det) in detections.iter().enumerate() {
            let det_area = area(&det.bbox);
            if det_area <= 0.0 {
                continue;
            }
            let inside = points.iter().filter(|p| det.bbox.contains(**p)).count();
            let weight = (predicted_area / det_area).min(1.0);
            values[(i, j)] = weight * inside as f64 / points.len() as f64;
        }
    }
    FineScores {
        scores: ScoreMatrix::new(
            values,
            rows.iter().map(|r| r.track_id).collect(),
            (0..detections.len()).collect(),
        ),
        visible,
    }
}

/// IOU between each predicted box and each detection.
pub fn coarse_score_matrix(rows: &[(TrackId, BBox)], detections: &[Detection]) -> ScoreMatrix {
    let values = DMatrix::from_fn(rows.len(), detections.len(), |i, j| iou(&rows[i].1, &detections[j].bbox));
    ScoreMatrix::new(
        values,
        rows.iter().map(|r| r.0).collect(),
        (0..detections.len()).collect(),
    )
}

pub fn fuse_scores(
    fine: &ScoreMatrix,
    coarse: &ScoreMatrix,
    rule: FusionRule,
    lambda: f64,
) -> Result<ScoreMatrix, AssocError> {
    if fine.shape() != coarse.shape() {
        return Err(AssocError::ShapeMismatch(fine.shape(), coarse.shape()));
    }
    if fine.row_ids != coarse.row_ids || fine.col_ids != coarse.col_ids {
        return Err(AssocError::IdMismatch);
    }
    let values = fine.values.zip_map(&coarse.values, |f, c| match rule {
        FusionRule::Convex => lambda * f + (1.0 - lambda) * c,
        FusionRule::Max => f.max(c),
    });
    Ok(ScoreMatrix::new(values, fine.row_ids.clone(), fine.col_ids.clone()))
}

/// Matched `(row, col)` index pairs plus the leftovers, all ascending.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Assignment {
    pub matches: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
}

/// Maximum-total-score one-to-one assignment keeping only pairs with
/// `score >= threshold`. Entries below the threshold cannot contribute to the
/// total, so the kept matches are optimal among admissible ones.
pub fn hungarian(scores: &ScoreMatrix, threshold: f64) -> Assignment {
    let (n, m) = scores.shape();
    let gated = scores.values.map(|v| if v >= threshold { v } else { 0.0 });
    let matches: Vec<(usize, usize)> = lap::solve_max(&gated)
        .into_iter()
        .filter(|&(r, c)| scores.values[(r, c)] >= threshold)
        .collect();
    let mut row_used = vec![false; n];
    let mut col_used = vec![false; m];
    for &(r, c) in &matches {
        row_used[r] = true;
        col_used[c] = true;
    }
    Assignment {
        unmatched_rows: (0..n).filter(|&r| !row_used[r]).collect(),
        unmatched_cols: (0..m).filter(|&c| !col_used[c]).collect(),
        matches,
    }
}
