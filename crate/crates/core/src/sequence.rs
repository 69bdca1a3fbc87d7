//! Frame-indexed containers shared by the simulator, tracker and metrics.
//!
//! Frames are 1-indexed everywhere, as in MOT files.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::BBox;

/// Track identity. Never reused within a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TrackId(pub u64);

impl fmt::Display for TrackId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A detector output: box, confidence and class label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BBox,
    pub score: f64,
    pub class_id: i32,
}

impl Detection {
    pub fn new(bbox: BBox, score: f64, class_id: i32) -> Self {
        Self { bbox, score, class_id }
    }
}

/// An identified box in one frame: a ground-truth object or a tracker output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackBox {
    pub id: u64,
    pub bbox: BBox,
    pub score: f64,
    pub class_id: i32,
    /// Visible fraction for ground truth; 1 for tracker output.
    pub visibility: f64,
}

impl TrackBox {
    pub fn new(id: u64, bbox: BBox, class_id: i32) -> Self {
        Self {
            id,
            bbox,
            score: 1.0,
            class_id,
            visibility: 1.0,
        }
    }
}

/// Per-frame boxes; `frames[t - 1]` holds frame `t`.
pub type FrameBoxes = Vec<Vec<TrackBox>>;

/// Ground-truth object transform used by the oracle point tracker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub id: u64,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub visibility: f64,
}

impl Pose {
    pub fn bbox(&self) -> BBox {
        BBox::from_center(self.cx, self.cy, self.w, self.h)
    }
}

/// A simulated or loaded sequence.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SequenceBundle {
    pub name: String,
    pub gt: FrameBoxes,
    pub poses: Vec<Vec<Pose>>,
    pub detections: Vec<Vec<Detection>>,
    pub seed: u64,
}

impl SequenceBundle {
    pub fn num_frames(&self) -> usize {
        self.detections.len().max(self.gt.len()).max(self.poses.len())
    }

    pub fn pose(&self, frame: u32, id: u64) -> Option<&Pose> {
        let idx = (frame as usize).checked_sub(1)?;
        self.poses.get(idx)?.iter().find(|p| p.id == id)
    }
}
