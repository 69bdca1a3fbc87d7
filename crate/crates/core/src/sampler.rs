//! POI discovery over a stride window.
//!
//! The sampling weight is the binary indicator of membership in a track's
//! coarse box, so POIs are drawn inside that box: a deterministic lattice of
//! cell centers by default, or seeded uniform samples for ablations. Each
//! track is queried once, at the earliest window frame where its box is
//! known, so tracks born mid-window are queried at their birth frame.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BBox, Point};
use crate::mix_seed;
use crate::sequence::TrackId;

#[derive(Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error("POI count must be at least 1")]
    ZeroCount,
    #[error("{0} POIs cannot be arranged in a grid with aspect within [1/3, 3]")]
    NoGrid(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub rows: usize,
    pub cols: usize,
    /// Draw POIs uniformly in the box instead of on the lattice.
    pub stochastic: bool,
    pub seed: u64,
    /// Also query POIs on detections the coarse tracker left unmatched.
    pub seed_unmatched_detections: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            rows: 3,
            cols: 3,
            stochastic: false,
            seed: 0,
            seed_unmatched_detections: false,
        }
    }
}

impl SamplerConfig {
    pub fn poi_count(&self) -> usize {
        self.rows * self.cols
    }

    /// Grid for a bare POI count: the squarest `rows x cols` factorisation
    /// with `cols / rows` in `[1/3, 3]`, preferring fewer rows on ties.
    pub fn grid_for_count(count: usize) -> Result<(usize, usize), SamplerError> {
        if count == 0 {
            return Err(SamplerError::ZeroCount);
        }
        (1..=count)
            .filter(|r| count.is_multiple_of(*r))
            .map(|r| (r, count / r))
            .filter(|&(r, c)| c <= 3 * r && r <= 3 * c)
            .min_by_key(|&(r, c)| (r.abs_diff(c), r))
            .ok_or(SamplerError::NoGrid(count))
    }

    pub fn with_count(count: usize) -> Result<Self, SamplerError> {
        let (rows, cols) = Self::grid_for_count(count)?;
        Ok(Self {
            rows,
            cols,
            ..Self::default()
        })
    }
}

/// Cell centers of a `rows x cols` lattice over `b`, row-major.
/// Degenerate boxes yield no points.
pub fn sample_grid(b: &BBox, rows: usize, cols: usize) -> Vec<Point> {
    if !b.is_proper() {
        return Vec::new();
    }
    let (w, h) = (b.width(), b.height());
    let mut pts = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            pts.push(Point::new(
                b.x1 + (c as f64 + 0.5) * w / cols as f64,
                b.y1 + (r as f64 + 0.5) * h / rows as f64,
            ));
        }
    }
    pts
}

fn sample_uniform(b: &BBox, count: usize, seed: u64) -> Vec<Point> {
    if !b.is_proper() {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            Point::new(
                rng.random_range(b.x1..=b.x2),
                rng.random_range(b.y1..=b.y2),
            )
        })
        .collect()
}

/// What a set of POIs is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NetOwner {
    Track(TrackId),
    /// A detection the coarse tracker did not match (opt-in seeding).
    Detection { frame: u32, index: usize },
}

impl NetOwner {
    pub fn track_id(&self) -> Option<TrackId> {
        match self {
            NetOwner::Track(id) => Some(*id),
            NetOwner::Detection { .. } => None,
        }
    }

    fn salt(&self) -> [u64; 3] {
        match *self {
            NetOwner::Track(id) => [0, id.0, 0],
            NetOwner::Detection { frame, index } => [1, frame as u64, index as u64],
        }
    }
}

/// One point to be tracked forward from `frame`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoiQuery {
    pub owner: NetOwner,
    /// Offset of the query frame within the window.
    pub stride_frame: usize,
    /// Global (1-indexed) frame number.
    pub frame: u32,
    pub position: Point,
    pub poi_index: usize,
}

/// Coarse tracker snapshot for one buffered frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoarseFrame {
    pub frame: u32,
    /// Tracks whose box is known (matched) in this frame.
    pub tracks: Vec<(TrackId, BBox)>,
    /// Detections left unmatched by the coarse tracker: `(index, box)`.
    pub unmatched: Vec<(usize, BBox)>,
}

fn points_in(b: &BBox, cfg: &SamplerConfig, owner: &NetOwner, frame: u32) -> Vec<Point> {
    if cfg.stochastic {
        let salt = owner.salt();
        let seed = mix_seed(&[cfg.seed, salt[0], salt[1], salt[2], frame as u64]);
        sample_uniform(b, cfg.poi_count(), seed)
    } else {
        sample_grid(b, cfg.rows, cfg.cols)
    }
}

/// Queries for every track seen in the window, anchored at its first
/// appearance. Output is ordered by (window frame, snapshot order, POI).
pub fn sample_pois(window: &[CoarseFrame], cfg: &SamplerConfig) -> Vec<PoiQuery> {
    let mut seen = std::collections::HashSet::new();
    let mut queries = Vec::new();
    for (offset, snap) in window.iter().enumerate() {
        let owners = snap
            .tracks
            .iter()
            .map(|(id, b)| (NetOwner::Track(*id), b))
            .chain(
                snap.unmatched
                    .iter()
                    .filter(|_| cfg.seed_unmatched_detections)
                    .map(|(index, b)| {
                        let owner = NetOwner::Detection {
                            frame: snap.frame,
                            index: *index,
                        };
                        (owner, b)
                    }),
            );
        for (owner, b) in owners {
            if !seen.insert(owner) {
                continue;
            }
            for (poi_index, position) in points_in(b, cfg, &owner, snap.frame).into_iter().enumerate() {
                queries.push(PoiQuery {
                    owner,
                    stride_frame: offset,
                    frame: snap.frame,
                    position,
                    poi_index,
                });
            }
        }
    }
    queries
}
