//! Seeded synthetic sequences with tunable dynamicity: fast turning motion,
//! periodic aspect deformation and occlusion between objects, plus noisy
//! detections derived from the ground truth.
//!
//! Every object lives for the whole sequence and has id `index + 1`. Objects
//! are stacked in a random depth order; an object's visibility is the part
//! of its box not covered by objects in front of it or by static occluders.

use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{union_area, BBox};
use crate::io::{self, IoError};
use crate::sequence::{Detection, Pose, SequenceBundle, TrackBox};

#[derive(Debug, Error, PartialEq)]
pub enum SimulatorError {
    #[error("canvas must have positive width and height, got {0} x {1}")]
    EmptyCanvas(f64, f64),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("decimation factor must be at least 1")]
    ZeroFactor,
}

/// A static rectangle hiding whatever passes behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Occluder {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Occluder {
    pub fn bbox(&self) -> BBox {
        BBox::from_ltwh(self.x, self.y, self.w, self.h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_objects: usize,
    pub frames: usize,
    pub width: f64,
    pub height: f64,
    /// Speed bounds in px/frame.
    pub speed_min: f64,
    pub speed_max: f64,
    /// Std of the per-frame speed change.
    pub speed_jitter: f64,
    /// Largest heading change per frame, radians.
    pub turn_rate_max: f64,
    /// Side of the square with the object's area, px.
    pub size_min: f64,
    pub size_max: f64,
    pub aspect_min: f64,
    pub aspect_max: f64,
    /// Relative amplitude of the aspect oscillation, in `[0, 1)`.
    pub deformation_amplitude: f64,
    /// Oscillation frequency in cycles/frame.
    pub deformation_frequency: f64,
    /// Chance that each consecutive object pair is steered through a crossing.
    pub crossing_probability: f64,
    pub occluders: Vec<Occluder>,
    /// Std of detection center noise, px.
    pub center_jitter: f64,
    /// Std of the relative detection size noise.
    pub size_jitter: f64,
    pub miss_probability: f64,
    /// Extra miss probability at zero visibility, fading out at `occlusion_threshold`.
    pub occlusion_miss_boost: f64,
    pub occlusion_threshold: f64,
    /// Mean false positives per frame.
    pub false_positive_rate: f64,
    pub confidence_mean: f64,
    pub confidence_spread: f64,
    /// Confidence lost at zero visibility.
    pub confidence_occlusion_drop: f64,
    pub fp_confidence_min: f64,
    pub fp_confidence_max: f64,
    pub n_classes: u32,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_objects: 8,
            frames: 120,
            width: 640.0,
            height: 480.0,
            speed_min: 3.0,
            speed_max: 10.0,
            speed_jitter: 0.5,
            turn_rate_max: 0.2,
            size_min: 24.0,
            size_max: 44.0,
            aspect_min: 0.6,
            aspect_max: 1.6,
            deformation_amplitude: 0.4,
            deformation_frequency: 0.08,
            crossing_probability: 0.5,
            occluders: Vec::new(),
            center_jitter: 1.5,
            size_jitter: 0.05,
            miss_probability: 0.03,
            occlusion_miss_boost: 0.6,
            occlusion_threshold: 0.5,
            false_positive_rate: 0.5,
            confidence_mean: 0.85,
            confidence_spread: 0.08,
            confidence_occlusion_drop: 0.5,
            fp_confidence_min: 0.1,
            fp_confidence_max: 0.55,
            n_classes: 1,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    /// Detections equal ground truth: no deformation, noise, misses or
    /// false positives, and constant confidence.
    pub fn noiseless() -> Self {
        Self {
            deformation_amplitude: 0.0,
            center_jitter: 0.0,
            size_jitter: 0.0,
            miss_probability: 0.0,
            occlusion_miss_boost: 0.0,
            false_positive_rate: 0.0,
            confidence_mean: 0.9,
            confidence_spread: 0.0,
            confidence_occlusion_drop: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimulatorError> {
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(SimulatorError::EmptyCanvas(self.width, self.height));
        }
        let bad = |m: String| Err(SimulatorError::Invalid(m));
        let probs = [
            ("crossing_probability", self.crossing_probability),
            ("miss_probability", self.miss_probability),
            ("occlusion_miss_boost", self.occlusion_miss_boost),
            ("occlusion_threshold", self.occlusion_threshold),
        ];
        for (k, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{k} = {p} is outside [0, 1]"));
            }
        }
        if !(0.0..1.0).contains(&self.deformation_amplitude) {
            return bad(format!(
                "deformation_amplitude = {} must be in [0, 1)",
                self.deformation_amplitude
            ));
        }
        let ranges = [
            ("speed", self.speed_min, self.speed_max),
            ("size", self.size_min, self.size_max),
            ("aspect", self.aspect_min, self.aspect_max),
            ("fp_confidence", self.fp_confidence_min, self.fp_confidence_max),
        ];
        for (k, lo, hi) in ranges {
            if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
                return bad(format!("{k}_min = {lo} and {k}_max = {hi} do not form a range"));
            }
        }
        if self.size_min <= 0.0 || self.aspect_min <= 0.0 {
            return bad("size and aspect must be positive".into());
        }
        let non_negative = [
            ("speed_jitter", self.speed_jitter),
            ("turn_rate_max", self.turn_rate_max),
            ("deformation_frequency", self.deformation_frequency),
            ("center_jitter", self.center_jitter),
            ("size_jitter", self.size_jitter),
            ("false_positive_rate", self.false_positive_rate),
            ("confidence_spread", self.confidence_spread),
            ("confidence_occlusion_drop", self.confidence_occlusion_drop),
        ];
        for (k, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{k} = {v} must be finite and non-negative"));
            }
        }
        if self.n_classes == 0 {
            return bad("n_classes must be at least 1".into());
        }
        Ok(())
    }
}

struct Object {
    x: f64,
    y: f64,
    heading: f64,
    speed: f64,
    area: f64,
    aspect: f64,
    frequency: f64,
    phase: f64,
    depth: f64,
    class_id: i32,
}

/// Two objects steered to meet, then carried straight through each other.
struct Crossing {
    a: usize,
    b: usize,
    start: usize,
    meet: Option<(f64, f64, usize)>,
    release: usize,
}

fn reflect(pos: &mut f64, heading: &mut f64, limit: f64, horizontal: bool) {
    let flip = |h: f64| if horizontal { PI - h } else { -h };
    if *pos < 0.0 {
        *pos = -*pos;
        *heading = flip(*heading);
    } else if *pos > limit {
        *pos = 2.0 * limit - *pos;
        *heading = flip(*heading);
    }
    *pos = pos.clamp(0.0, limit);
}

fn sample_range(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn normal(rng: &mut ChaCha8Rng, std: f64) -> f64 {
    if std > 0.0 {
        Normal::new(0.0, std).expect("finite std").sample(rng)
    } else {
        0.0
    }
}

/// Generate a sequence. Identical configs give identical bundles.
pub fn generate(cfg: &ScenarioConfig) -> Result<SequenceBundle, SimulatorError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut objects: Vec<Object> = (0..cfg.n_objects)
        .map(|_| {
            let side = sample_range(&mut rng, cfg.size_min, cfg.size_max);
            Object {
                x: rng.random_range(0.1..0.9) * cfg.width,
                y: rng.random_range(0.1..0.9) * cfg.height,
                heading: rng.random_range(0.0..TAU),
                speed: sample_range(&mut rng, cfg.speed_min, cfg.speed_max),
                area: side * side,
                aspect: sample_range(&mut rng, cfg.aspect_min, cfg.aspect_max),
                frequency: cfg.deformation_frequency * rng.random_range(0.8..1.2),
                phase: rng.random_range(0.0..TAU),
                depth: rng.random(),
                class_id: rng.random_range(1..=cfg.n_classes as i32),
            }
        })
        .collect();

    let mut crossings = Vec::new();
    for pair in 0..cfg.n_objects / 2 {
        if rng.random::<f64>() < cfg.crossing_probability && cfg.frames > 4 {
            let lo = cfg.frames / 10;
            let hi = (cfg.frames * 7 / 10).max(lo + 1);
            crossings.push(Crossing {
                a: 2 * pair,
                b: 2 * pair + 1,
                start: rng.random_range(lo..hi),
                meet: None,
                release: usize::MAX,
            });
        }
    }

    let occluders: Vec<BBox> = cfg.occluders.iter().map(Occluder::bbox).collect();
    let mut gt = Vec::with_capacity(cfg.frames);
    let mut poses = Vec::with_capacity(cfg.frames);
    let mut detections = Vec::with_capacity(cfg.frames);

    for t in 0..cfg.frames {
        if t > 0 {
            step_objects(&mut objects, &mut crossings, cfg, t, &mut rng);
        }
        let boxes: Vec<BBox> = objects
            .iter()
            .map(|o| {
                let r = o.aspect * (1.0 + cfg.deformation_amplitude * (TAU * o.frequency * t as f64 + o.phase).sin());
                BBox::from_center(o.x, o.y, (o.area * r).sqrt(), (o.area / r).sqrt())
            })
            .collect();
        let visibility: Vec<f64> = (0..objects.len())
            .map(|i| {
                let b = &boxes[i];
                let cover: Vec<BBox> = objects
                    .iter()
                    .enumerate()
                    .filter(|&(k, o)| k != i && o.depth > objects[i].depth)
                    .map(|(k, _)| boxes[k])
                    .chain(occluders.iter().copied())
                    .filter_map(|c| c.intersection(b))
                    .collect();
                (1.0 - union_area(&cover) / b.area()).clamp(0.0, 1.0)
            })
            .collect();

        let mut frame_gt = Vec::with_capacity(objects.len());
        let mut frame_poses = Vec::with_capacity(objects.len());
        let mut frame_dets = Vec::new();
        for (i, o) in objects.iter().enumerate() {
            let b = boxes[i];
            let vis = visibility[i];
            frame_gt.push(TrackBox {
                visibility: vis,
                ..TrackBox::new(i as u64 + 1, b, o.class_id)
            });
            let c = b.center();
            frame_poses.push(Pose {
                id: i as u64 + 1,
                cx: c.x,
                cy: c.y,
                w: b.width(),
                h: b.height(),
                visibility: vis,
            });
            let shortfall = ((cfg.occlusion_threshold - vis) / cfg.occlusion_threshold).max(0.0);
            let p_miss = cfg.miss_probability + (1.0 - cfg.miss_probability) * cfg.occlusion_miss_boost * shortfall;
            if rng.random::<f64>() < p_miss {
                continue;
            }
            let bbox = if cfg.center_jitter > 0.0 || cfg.size_jitter > 0.0 {
                let w = (b.width() * (1.0 + normal(&mut rng, cfg.size_jitter))).max(1.0);
                let h = (b.height() * (1.0 + normal(&mut rng, cfg.size_jitter))).max(1.0);
                BBox::from_center(
                    c.x + normal(&mut rng, cfg.center_jitter),
                    c.y + normal(&mut rng, cfg.center_jitter),
                    w,
                    h,
                )
            } else {
                b
            };
            let conf = cfg.confidence_mean - cfg.confidence_occlusion_drop * (1.0 - vis)
                + normal(&mut rng, cfg.confidence_spread);
            frame_dets.push(Detection::new(bbox, conf.clamp(0.01, 1.0), o.class_id));
        }
        if cfg.false_positive_rate > 0.0 {
            let n = Poisson::new(cfg.false_positive_rate)
                .expect("positive rate")
                .sample(&mut rng) as usize;
            for _ in 0..n {
                let side = sample_range(&mut rng, cfg.size_min, cfg.size_max);
                let aspect = sample_range(&mut rng, cfg.aspect_min, cfg.aspect_max);
                let (w, h) = (side * aspect.sqrt(), side / aspect.sqrt());
                let bbox = BBox::from_center(
                    rng.random_range(0.0..cfg.width),
                    rng.random_range(0.0..cfg.height),
                    w,
                    h,
                );
                let conf = sample_range(&mut rng, cfg.fp_confidence_min, cfg.fp_confidence_max);
                let class_id = rng.random_range(1..=cfg.n_classes as i32);
                frame_dets.push(Detection::new(bbox, conf, class_id));
            }
        }
        gt.push(frame_gt);
        poses.push(frame_poses);
        detections.push(frame_dets);
    }

    Ok(SequenceBundle {
        name: format!("seq-{:04}", cfg.seed),
        gt,
        poses,
        detections,
        seed: cfg.seed,
    })
}

fn step_objects(objects: &mut [Object], crossings: &mut [Crossing], cfg: &ScenarioConfig, t: usize, rng: &mut ChaCha8Rng) {
    // random-turn kinematics for everyone, steering overrides afterwards
    let mut velocity: Vec<(f64, f64)> = objects
        .iter_mut()
        .map(|o| {
            o.heading += sample_range(rng, -cfg.turn_rate_max, cfg.turn_rate_max);
            o.speed = (o.speed + normal(rng, cfg.speed_jitter)).clamp(cfg.speed_min, cfg.speed_max);
            (o.speed * o.heading.cos(), o.speed * o.heading.sin())
        })
        .collect();
    let mut steered = vec![false; objects.len()];

    for c in crossings.iter_mut() {
        if t < c.start || t >= c.release || steered[c.a] || steered[c.b] {
            continue;
        }
        let (a, b) = (&objects[c.a], &objects[c.b]);
        let (mx, my, meet_t) = *c.meet.get_or_insert_with(|| {
            let (mx, my) = ((a.x + b.x) / 2.0, (a.y + b.y) / 2.0);
            let half = ((a.x - mx).powi(2) + (a.y - my).powi(2)).sqrt();
            let frames = (half / cfg.speed_max.max(1e-9)).ceil().max(8.0) as usize;
            (mx, my, t + frames)
        });
        if c.release == usize::MAX {
            c.release = meet_t + (meet_t - c.start) / 2 + 1;
        }
        for &k in &[c.a, c.b] {
            let o = &mut objects[k];
            if t <= meet_t {
                let remaining = (meet_t + 1 - t) as f64;
                let (vx, vy) = ((mx - o.x) / remaining, (my - o.y) / remaining);
                o.heading = vy.atan2(vx);
                o.speed = (vx * vx + vy * vy).sqrt();
            }
            // after the meeting point, keep going straight through
            velocity[k] = (o.speed * o.heading.cos(), o.speed * o.heading.sin());
            steered[k] = true;
        }
    }

    for (k, o) in objects.iter_mut().enumerate() {
        o.x += velocity[k].0;
        o.y += velocity[k].1;
        reflect(&mut o.x, &mut o.heading, cfg.width, true);
        reflect(&mut o.y, &mut o.heading, cfg.height, false);
    }
}

/// Keep frames `1, 1 + factor, 1 + 2 * factor, ...`, renumbered from 1.
pub fn decimate(bundle: &SequenceBundle, factor: usize) -> Result<SequenceBundle, SimulatorError> {
    if factor == 0 {
        return Err(SimulatorError::ZeroFactor);
    }
    fn pick<T: Clone>(v: &[T], factor: usize) -> Vec<T> {
        v.iter().step_by(factor).cloned().collect()
    }
    Ok(SequenceBundle {
        name: bundle.name.clone(),
        gt: pick(&bundle.gt, factor),
        poses: pick(&bundle.poses, factor),
        detections: pick(&bundle.detections, factor),
        seed: bundle.seed,
    })
}

pub const GT_FILE: &str = "gt.txt";
pub const DET_FILE: &str = "det.txt";
pub const POSE_FILE: &str = "poses.csv";

/// Write `gt.txt`, `det.txt` and `poses.csv` into `dir`.
pub fn write_bundle(dir: &Path, bundle: &SequenceBundle) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    io::write_mot(&dir.join(GT_FILE), &io::frames_to_rows(&bundle.gt))?;
    io::write_mot(&dir.join(DET_FILE), &io::detections_to_rows(&bundle.detections))?;
    io::write_poses(&dir.join(POSE_FILE), &bundle.poses)
}

/// Read a bundle written by [`write_bundle`]. `det.txt` is required; ground
/// truth and poses are loaded when present. The frame count is the largest
/// frame seen in any file.
pub fn read_bundle(dir: &Path) -> Result<SequenceBundle, IoError> {
    let det_rows = io::read_mot(&dir.join(DET_FILE))?;
    let gt_path = dir.join(GT_FILE);
    let gt_rows = if gt_path.exists() { io::read_mot(&gt_path)? } else { Vec::new() };
    let pose_path = dir.join(POSE_FILE);
    let poses = if pose_path.exists() { io::read_poses(&pose_path, 0)? } else { Vec::new() };
    let max_frame = det_rows
        .iter()
        .chain(&gt_rows)
        .map(|r| r.frame as usize)
        .max()
        .unwrap_or(0)
        .max(poses.len());
    let mut poses = poses;
    poses.resize_with(max_frame, Vec::new);
    Ok(SequenceBundle {
        name: dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        gt: io::rows_to_frames(&gt_rows, max_frame),
        poses,
        detections: io::rows_to_detections(&det_rows, max_frame),
        seed: 0,
    })
}
