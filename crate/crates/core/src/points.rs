//! Point trackers: the component that follows POI queries through a stride
//! window.
//!
//! Two implementations are provided. [`OracleTracker`] transports each POI
//! with the ground-truth pose of the object it lies on, then applies Gaussian
//! jitter, random dropout and occlusion-induced invisibility. [`FileTracker`]
//! answers queries from precomputed trajectories, e.g. produced by an
//! external neural point tracker.

use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;
use crate::io::{self, IoError};
use crate::mix_seed;
use crate::sampler::{NetOwner, PoiQuery};
use crate::sequence::{Pose, TrackId};

#[derive(Debug, Error, PartialEq)]
pub enum PointTrackError {
    #[error("query {index} ({owner:?}, poi {poi_index}) references frame {frame} outside the window or sequence")]
    UnknownFrame {
        index: usize,
        owner: NetOwner,
        poi_index: usize,
        frame: u32,
    },
    #[error("query {index} references {owner:?}, which has no ground truth in frame {frame}")]
    UnknownTrack {
        index: usize,
        owner: NetOwner,
        frame: u32,
    },
    #[error("no point trajectories cover frames {first}..={last}")]
    NoCoverage { first: u32, last: u32 },
}

/// Contiguous run of global frames `first ..= first + len - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameWindow {
    pub first: u32,
    pub len: usize,
}

impl FrameWindow {
    pub fn new(first: u32, len: usize) -> Self {
        Self { first, len }
    }

    pub fn last(&self) -> u32 {
        self.first + self.len as u32 - 1
    }

    pub fn contains(&self, frame: u32) -> bool {
        self.len > 0 && frame >= self.first && frame <= self.last()
    }

    pub fn frames(&self) -> impl Iterator<Item = u32> {
        self.first..self.first + self.len as u32
    }
}

/// Position estimate of one POI in one frame. `visible` implies a position.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PointSample {
    pub position: Option<Point>,
    pub visible: bool,
}

impl PointSample {
    pub const HIDDEN: PointSample = PointSample {
        position: None,
        visible: false,
    };

    pub fn visible_at(p: Point) -> Self {
        Self {
            position: Some(p),
            visible: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointTrajectory {
    pub owner: NetOwner,
    pub poi_index: usize,
    pub first_frame: u32,
    pub samples: Vec<PointSample>,
}

impl PointTrajectory {
    pub fn sample(&self, frame: u32) -> Option<&PointSample> {
        let offset = frame.checked_sub(self.first_frame)? as usize;
        self.samples.get(offset)
    }

    /// Position at `frame` when the point is visible there.
    pub fn visible_position(&self, frame: u32) -> Option<Point> {
        self.sample(frame)
            .filter(|s| s.visible)
            .and_then(|s| s.position)
    }

    pub fn track_id(&self) -> Option<TrackId> {
        self.owner.track_id()
    }
}

/// Follows queries through a window of frames.
pub trait PointTracker {
    fn track(
        &self,
        queries: &[PoiQuery],
        window: FrameWindow,
    ) -> Result<Vec<PointTrajectory>, PointTrackError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleNoiseConfig {
    /// Per-axis Gaussian jitter std (pixels).
    pub sigma: f64,
    /// Probability that a point is lost in a given frame.
    pub dropout: f64,
    pub seed: u64,
    /// Objects less visible than this hide all their points.
    pub occlusion_threshold: f64,
}

impl Default for OracleNoiseConfig {
    fn default() -> Self {
        Self {
            sigma: 0.0,
            dropout: 0.0,
            seed: 0,
            occlusion_threshold: 0.5,
        }
    }
}

/// How the oracle decides which object a query point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Binding {
    /// The query owner's track id is a ground-truth id.
    ById,
    /// The point sticks to whatever object covers it at the query frame
    /// (the most visible one when several do), or to the static background.
    #[default]
    ByPosition,
}

/// Ground-truth driven point tracker.
#[derive(Debug, Clone)]
pub struct OracleTracker<'a> {
    pub poses: &'a [Vec<Pose>],
    pub noise: OracleNoiseConfig,
    pub binding: Binding,
}

impl PointTracker for OracleTracker<'_> {
    fn track(
        &self,
        queries: &[PoiQuery],
        window: FrameWindow,
    ) -> Result<Vec<PointTrajectory>, PointTrackError> {
        oracle_track(self.poses, queries, &self.noise, window, self.binding)
    }
}

fn poses_at(poses: &[Vec<Pose>], frame: u32) -> Option<&[Pose]> {
    let idx = (frame as usize).checked_sub(1)?;
    poses.get(idx).map(Vec::as_slice)
}

/// Track every query through `window` using ground-truth poses.
///
/// Each POI is expressed in box-normalised coordinates of its object at the
/// query frame and carried along with that object's pose. Frames before the
/// query frame are hidden; the query frame itself reports the exact query
/// position. Later frames add jitter and are hidden by dropout, by the
/// object's absence, or when its visibility falls below the threshold.
/// Each query draws from its own RNG stream, so results do not depend on
/// which other queries are in the batch.
pub fn oracle_track(
    poses: &[Vec<Pose>],
    queries: &[PoiQuery],
    noise: &OracleNoiseConfig,
    window: FrameWindow,
    binding: Binding,
) -> Result<Vec<PointTrajectory>, PointTrackError> {
    let mut out = Vec::with_capacity(queries.len());
    for (index, q) in queries.iter().enumerate() {
        let unknown_frame = PointTrackError::UnknownFrame {
            index,
            owner: q.owner,
            poi_index: q.poi_index,
            frame: q.frame,
        };
        if !window.contains(q.frame) {
            return Err(unknown_frame);
        }
        let at_query = poses_at(poses, q.frame).ok_or(unknown_frame)?;
        let anchor = match binding {
            Binding::ById => {
                let found = q
                    .owner
                    .track_id()
                    .and_then(|id| at_query.iter().find(|p| p.id == id.0));
                Some(*found.ok_or(PointTrackError::UnknownTrack {
                    index,
                    owner: q.owner,
                    frame: q.frame,
                })?)
            }
            Binding::ByPosition => at_query
                .iter()
                .filter(|p| p.bbox().contains(q.position))
                .max_by(|a, b| {
                    a.visibility
                        .total_cmp(&b.visibility)
                        .then_with(|| b.id.cmp(&a.id))
                })
                .copied(),
        };
        // box-normalised coordinates of the POI on its object
        let local = anchor.map(|p| {
            let b = p.bbox();
            (
                p.id,
                (q.position.x - b.x1) / b.width(),
                (q.position.y - b.y1) / b.height(),
            )
        });

        let salt = match q.owner {
            NetOwner::Track(id) => [0, id.0, 0],
            NetOwner::Detection { frame, index } => [1, frame as u64, index as u64],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[
            noise.seed,
            salt[0],
            salt[1],
            salt[2],
            q.poi_index as u64,
            q.frame as u64,
        ]));

        let mut samples = Vec::with_capacity(window.len);
        for frame in window.frames() {
            if frame < q.frame {
                samples.push(PointSample::HIDDEN);
                continue;
            }
            if frame == q.frame {
                samples.push(PointSample::visible_at(q.position));
                continue;
            }
            let drop: f64 = rng.random();
            let jx: f64 = rng.sample(StandardNormal);
            let jy: f64 = rng.sample(StandardNormal);
            let (base, object_visible) = match local {
                None => (Some(q.position), true),
                Some((id, u, v)) => match poses_at(poses, frame)
                    .and_then(|ps| ps.iter().find(|p| p.id == id))
                {
                    Some(p) => {
                        let b = p.bbox();
                        (
                            Some(Point::new(b.x1 + u * b.width(), b.y1 + v * b.height())),
                            p.visibility >= noise.occlusion_threshold,
                        )
                    }
                    None => (None, false),
                },
            };
            let position = base.map(|p| Point::new(p.x + noise.sigma * jx, p.y + noise.sigma * jy));
            samples.push(PointSample {
                position,
                visible: position.is_some() && object_visible && drop >= noise.dropout,
            });
        }
        out.push(PointTrajectory {
            owner: q.owner,
            poi_index: q.poi_index,
            first_frame: window.first,
            samples,
        });
    }
    Ok(out)
}

/// Answers queries from precomputed trajectories (see [`load_point_tracks`]).
///
/// A query adopts the file trajectory that is visible at the query frame and
/// closest to the query position, within `snap_radius` pixels. Queries with
/// no such trajectory stay visible only at their own frame.
#[derive(Debug, Clone)]
pub struct FileTracker {
    trajectories: Vec<PointTrajectory>,
    pub snap_radius: f64,
}

impl FileTracker {
    pub fn new(trajectories: Vec<PointTrajectory>, snap_radius: f64) -> Self {
        Self {
            trajectories,
            snap_radius,
        }
    }

    pub fn from_path(path: &Path, snap_radius: f64) -> Result<Self, IoError> {
        Ok(Self::new(load_point_tracks(path)?, snap_radius))
    }
}

impl PointTracker for FileTracker {
    fn track(
        &self,
        queries: &[PoiQuery],
        window: FrameWindow,
    ) -> Result<Vec<PointTrajectory>, PointTrackError> {
        let covered = self
            .trajectories
            .iter()
            .any(|t| window.frames().any(|f| t.sample(f).is_some_and(|s| s.visible)));
        if !covered && !queries.is_empty() {
            return Err(PointTrackError::NoCoverage {
                first: window.first,
                last: window.last(),
            });
        }
        let mut out = Vec::with_capacity(queries.len());
        for (index, q) in queries.iter().enumerate() {
            if !window.contains(q.frame) {
                return Err(PointTrackError::UnknownFrame {
                    index,
                    owner: q.owner,
                    poi_index: q.poi_index,
                    frame: q.frame,
                });
            }
            let nearest = self
                .trajectories
                .iter()
                .filter_map(|t| {
                    let p = t.visible_position(q.frame)?;
                    let d = (p.x - q.position.x).hypot(p.y - q.position.y);
                    (d <= self.snap_radius).then_some((d, t))
                })
                .min_by(|a, b| a.0.total_cmp(&b.0));
            let samples = window
                .frames()
                .map(|f| {
                    if f < q.frame {
                        PointSample::HIDDEN
                    } else if f == q.frame {
                        PointSample::visible_at(q.position)
                    } else {
                        nearest
                            .and_then(|(_, t)| t.sample(f).copied())
                            .unwrap_or(PointSample::HIDDEN)
                    }
                })
                .collect();
            out.push(PointTrajectory {
                owner: q.owner,
                poi_index: q.poi_index,
                first_frame: window.first,
                samples,
            });
        }
        Ok(out)
    }
}

/// Read a point-trajectory CSV (`track_id,poi_index,frame,x,y,visible`).
pub fn load_point_tracks(path: &Path) -> Result<Vec<PointTrajectory>, IoError> {
    io::read_point_tracks(path)
}

/// Group trajectories by owner, keyed by POI index.
pub fn group_by_owner(trajectories: Vec<PointTrajectory>) -> HashMap<NetOwner, Vec<PointTrajectory>> {
    let mut map: HashMap<NetOwner, Vec<PointTrajectory>> = HashMap::new();
    for t in trajectories {
        map.entry(t.owner).or_default().push(t);
    }
    for v in map.values_mut() {
        v.sort_by_key(|t| t.poi_index);
    }
    map
}
