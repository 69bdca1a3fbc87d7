//! Association: fine-grained (Net containment) and coarse (IOU) score
//! matrices, score fusion, assignment, the two-stage BYTE cascade and the
//! active/lost track lifecycle.

mod cascade;
pub mod lap;
mod score;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cascade::{
    byte_cascade, lifecycle_step, predict_tracks, split_by_score, CascadeOutcome, LifecycleOutcome, Track,
    TrackStatus,
};
pub use score::{
    coarse_score_matrix, fine_score_matrix, fuse_scores, hungarian, Assignment, FineScores, Net, NetRow,
    ScoreMatrix,
};

#[derive(Debug, Error, PartialEq)]
pub enum AssocError {
    #[error("score matrices differ in shape: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),
    #[error("score matrices list rows or columns in a different order")]
    IdMismatch,
    #[error("a Net needs at least one POI trajectory")]
    EmptyNet,
    #[error("Net trajectories belong to different owners")]
    MixedNet,
}

/// How fine and coarse scores are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FusionRule {
    /// `lambda * fine + (1 - lambda) * coarse`.
    #[default]
    Convex,
    /// Entry-wise maximum.
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssocConfig {
    /// Detections at or above this score enter the first stage.
    pub det_high: f64,
    /// Detections in `[det_low, det_high)` enter the second stage.
    pub det_low: f64,
    /// Unmatched first-stage detections at or above this score spawn tracks.
    pub new_track_score: f64,
    /// Minimum fused score for a first-stage match.
    pub match_threshold: f64,
    /// Minimum IOU for a second-stage match.
    pub low_match_threshold: f64,
    pub fusion: FusionRule,
    pub fusion_lambda: f64,
    /// Frames a lost track is kept before removal.
    pub max_lost: u32,
    /// Run the low-score second stage (off for the plain IOU baseline).
    pub second_stage: bool,
}

impl Default for AssocConfig {
    fn default() -> Self {
        Self {
            det_high: 0.5,
            det_low: 0.1,
            new_track_score: 0.6,
            match_threshold: 0.2,
            low_match_threshold: 0.5,
            fusion: FusionRule::Convex,
            fusion_lambda: 0.5,
            max_lost: 30,
            second_stage: true,
        }
    }
}

impl AssocConfig {
    /// Check ranges; the error names the offending key.
    pub fn validate(&self) -> Result<(), String> {
        let unit = [
            ("det_high", self.det_high),
            ("det_low", self.det_low),
            ("new_track_score", self.new_track_score),
            ("match_threshold", self.match_threshold),
            ("low_match_threshold", self.low_match_threshold),
            ("fusion_lambda", self.fusion_lambda),
        ];
        for (key, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("assoc.{key} = {v} is outside [0, 1]"));
            }
        }
        if self.det_low > self.det_high {
            return Err(format!(
                "assoc.det_low = {} exceeds assoc.det_high = {}",
                self.det_low, self.det_high
            ));
        }
        Ok(())
    }
}
