//! Fine-grained point-of-interest ("Net") association for multi-object
//! tracking.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: boxes, containment and dynamicity attributes
//! - [`motion`]: constant-velocity Kalman filter
//! - [`sampler`]: POI queries for tracked objects
//! - [`points`]: point-tracker abstraction (ground-truth oracle, file bridge)
//! - [`assoc`]: score matrices, assignment, BYTE cascade, track lifecycle
//! - [`pipeline`]: stride-buffered coarse/fine tracking
//! - [`simulator`]: seeded high-dynamicity sequence generator
//! - [`metrics`]: OWTA, HOTA, CLEAR MOTA, IDF1, TETA and attribute reports
//! - [`io`]: MOT, pose and point-trajectory files plus run configuration

pub mod assoc;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod motion;
pub mod pipeline;
pub mod points;
pub mod sampler;
pub mod sequence;
pub mod simulator;

pub use geometry::{BBox, Point};
pub use sequence::{Detection, SequenceBundle, TrackBox, TrackId};

/// SplitMix64 finaliser folded over `parts`; derives independent RNG
/// streams from a base seed plus labels.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        let mut z = h ^ p.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}
