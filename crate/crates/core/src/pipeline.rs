//! Stride-buffered tracking loop.
//!
//! Every frame is first tracked coarsely (Kalman prediction plus IOU-only
//! BYTE association). Frames accumulate in a stride buffer; when it holds
//! `stride` frames, POIs are sampled inside the coarse boxes, tracked through
//! the window by a point tracker and every buffered frame is re-associated
//! with fused fine/coarse scores, starting again from the track state at the
//! window's first frame. The re-associated tracks replace the coarse state
//! and are what gets reported.
//!
//! After a flush the last frame stays in the buffer as the seed of the next
//! window. Its tracks are final, so POIs anchored there come from settled
//! identities. Output for a frame is produced once, when its window is
//! flushed, which makes the tracker semi-online with a latency of up to
//! `stride` frames. With `stride = 1` the fine stage is skipped.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assoc::{
    byte_cascade, coarse_score_matrix, fine_score_matrix, lifecycle_step, predict_tracks, split_by_score,
    AssocConfig, LifecycleOutcome, Net, NetRow, ScoreMatrix, Track,
};
use crate::geometry::BBox;
use crate::motion::KalmanConfig;
use crate::points::{group_by_owner, FrameWindow, PointTracker};
use crate::sampler::{sample_pois, CoarseFrame, NetOwner, SamplerConfig};
use crate::sequence::{Detection, FrameBoxes, TrackBox, TrackId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PipelineMode {
    /// Coarse BYTE tracking refined by fine-grained re-association.
    #[default]
    Finenet,
    /// Single-stage IOU association on high-score detections.
    CoarseIou,
    /// Two-stage BYTE association with IOU scores only.
    CoarseByte,
}

impl PipelineMode {
    pub const ALL: [PipelineMode; 3] = [PipelineMode::Finenet, PipelineMode::CoarseIou, PipelineMode::CoarseByte];

    pub fn name(&self) -> &'static str {
        match self {
            PipelineMode::Finenet => "finenet",
            PipelineMode::CoarseIou => "coarse-iou",
            PipelineMode::CoarseByte => "coarse-byte",
        }
    }
}

impl std::fmt::Display for PipelineMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PipelineMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode '{s}' (expected finenet, coarse-iou or coarse-byte)"))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PipelineConfig {
    pub stride: usize,
    pub mode: PipelineMode,
    pub assoc: AssocConfig,
    pub sampler: SamplerConfig,
    pub motion: KalmanConfig,
}

impl PipelineConfig {
    pub fn new(mode: PipelineMode) -> Self {
        Self {
            stride: 8,
            mode,
            ..Self::default()
        }
    }

    /// Association settings with the second stage switched off for the
    /// single-stage IOU baseline.
    fn effective_assoc(&self) -> AssocConfig {
        AssocConfig {
            second_stage: self.assoc.second_stage && self.mode != PipelineMode::CoarseIou,
            ..self.assoc.clone()
        }
    }

    fn fine_enabled(&self) -> bool {
        self.mode == PipelineMode::Finenet && self.stride > 1
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error("frames must arrive in order: expected {expected}, got {got}")]
    OutOfOrder { expected: u32, got: u32 },
    #[error("stride must be at least 1")]
    ZeroStride,
    #[error("finenet mode needs a point tracker")]
    MissingPointTracker,
}

/// A stride whose point tracking failed and kept the coarse result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fallback {
    pub first_frame: u32,
    pub last_frame: u32,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunReport {
    pub frames: usize,
    pub strides: usize,
    pub fallbacks: Vec<Fallback>,
    pub point_queries: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackingResult {
    pub frames: FrameBoxes,
    pub report: RunReport,
}

/// One buffered frame.
#[derive(Debug, Clone, PartialEq)]
struct BufferedFrame {
    frame: u32,
    detections: Vec<Detection>,
    /// Coarse snapshot used for POI sampling.
    coarse: CoarseFrame,
    /// Which coarse track held each detection.
    coarse_assigned: Vec<(TrackId, usize)>,
}

/// Frames awaiting fine re-association. When `seeded`, the first entry is
/// the already-final last frame of the previous window.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StrideBuffer {
    entries: Vec<BufferedFrame>,
    seeded: bool,
}

impl StrideBuffer {
    /// Buffered frames, seed included.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Frames not yet reported.
    pub fn pending(&self) -> usize {
        self.entries.len() - usize::from(self.seeded)
    }

    pub fn frames(&self) -> Vec<u32> {
        self.entries.iter().map(|e| e.frame).collect()
    }
}

fn track_box(id: TrackId, det: &Detection) -> TrackBox {
    TrackBox {
        score: det.score,
        ..TrackBox::new(id.0, det.bbox, det.class_id)
    }
}

fn emit(assigned: &[(TrackId, usize)], dets: &[Detection]) -> Vec<TrackBox> {
    let mut out: Vec<TrackBox> = assigned.iter().map(|&(id, j)| track_box(id, &dets[j])).collect();
    out.sort_by_key(|b| b.id);
    out
}

fn snapshot(frame: u32, assigned: &[(TrackId, usize)], unmatched: &[usize], dets: &[Detection]) -> CoarseFrame {
    CoarseFrame {
        frame,
        tracks: assigned.iter().map(|&(id, j)| (id, dets[j].bbox)).collect(),
        unmatched: unmatched.iter().map(|&j| (j, dets[j].bbox)).collect(),
    }
}

/// Incremental tracker; feed frames with [`Pipeline::process_frame`] and
/// collect output with [`Pipeline::finish`].
pub struct Pipeline<'a> {
    cfg: PipelineConfig,
    assoc: AssocConfig,
    point_tracker: Option<&'a dyn PointTracker>,
    coarse: Vec<Track>,
    /// Fine track state at the seed frame.
    seed_tracks: Vec<Track>,
    next_id: u64,
    last_frame: u32,
    buffer: StrideBuffer,
    output: FrameBoxes,
    report: RunReport,
}

struct FrameStep {
    lifecycle: LifecycleOutcome,
    unmatched: Vec<usize>,
}

fn associate(
    tracks: &mut Vec<Track>,
    dets: &[Detection],
    first_stage: impl FnOnce(&[Track], &[usize]) -> ScoreMatrix,
    assoc: &AssocConfig,
    motion: &KalmanConfig,
    new_id: impl FnMut(usize) -> TrackId,
) -> FrameStep {
    predict_tracks(tracks, motion);
    let (high, _) = split_by_score(dets, assoc);
    let scores = first_stage(tracks, &high);
    let outcome = byte_cascade(tracks, dets, &scores, assoc);
    let lifecycle = lifecycle_step(tracks, &outcome, dets, assoc, motion, new_id);
    let spawned: HashSet<usize> = outcome.spawn.iter().copied().collect();
    FrameStep {
        lifecycle,
        unmatched: outcome
            .unmatched_detections
            .into_iter()
            .filter(|j| !spawned.contains(j))
            .collect(),
    }
}

fn coarse_first_stage(tracks: &[Track], dets: &[Detection], high: &[usize]) -> ScoreMatrix {
    let rows: Vec<(TrackId, BBox)> = tracks.iter().map(|t| (t.id, t.predicted_box())).collect();
    let high_dets: Vec<Detection> = high.iter().map(|&j| dets[j]).collect();
    let mut m = coarse_score_matrix(&rows, &high_dets);
    m.col_ids = high.to_vec();
    m
}

impl<'a> Pipeline<'a> {
    pub fn new(cfg: PipelineConfig, point_tracker: Option<&'a dyn PointTracker>) -> Result<Self, PipelineError> {
        if cfg.stride == 0 {
            return Err(PipelineError::ZeroStride);
        }
        if cfg.fine_enabled() && point_tracker.is_none() {
            return Err(PipelineError::MissingPointTracker);
        }
        Ok(Self {
            assoc: cfg.effective_assoc(),
            cfg,
            point_tracker,
            coarse: Vec::new(),
            seed_tracks: Vec::new(),
            next_id: 1,
            last_frame: 0,
            buffer: StrideBuffer::default(),
            output: Vec::new(),
            report: RunReport::default(),
        })
    }

    pub fn buffer(&self) -> &StrideBuffer {
        &self.buffer
    }

    pub fn coarse_tracks(&self) -> &[Track] {
        &self.coarse
    }

    /// Output produced so far, one entry per finalised frame.
    pub fn output(&self) -> &FrameBoxes {
        &self.output
    }

    /// Advance the coarse tracker by one frame and buffer it. Frames are
    /// numbered from 1 without gaps.
    pub fn process_frame(&mut self, frame: u32, detections: Vec<Detection>) -> Result<(), PipelineError> {
        let expected = self.last_frame + 1;
        if frame != expected {
            return Err(PipelineError::OutOfOrder { expected, got: frame });
        }
        self.last_frame = frame;
        self.report.frames += 1;

        let next_id = &mut self.next_id;
        let step = associate(
            &mut self.coarse,
            &detections,
            |tracks, high| coarse_first_stage(tracks, &detections, high),
            &self.assoc,
            &self.cfg.motion,
            |_| {
                let id = TrackId(*next_id);
                *next_id += 1;
                id
            },
        );

        if !self.cfg.fine_enabled() {
            self.output.push(emit(&step.lifecycle.assigned, &detections));
            return Ok(());
        }

        let assigned = step.lifecycle.assigned;
        self.buffer.entries.push(BufferedFrame {
            frame,
            coarse: snapshot(frame, &assigned, &step.unmatched, &detections),
            coarse_assigned: assigned,
            detections,
        });
        if self.buffer.len() >= self.cfg.stride {
            self.flush();
        }
        Ok(())
    }

    /// Flush any partial stride and return the full result.
    pub fn finish(mut self) -> TrackingResult {
        if self.cfg.fine_enabled() && self.buffer.pending() > 0 {
            self.flush();
        }
        TrackingResult {
            frames: self.output,
            report: self.report,
        }
    }

    fn fallback(&mut self, reason: String) {
        let skip = usize::from(self.buffer.seeded);
        let entries = &self.buffer.entries[skip..];
        self.report.fallbacks.push(Fallback {
            first_frame: entries[0].frame,
            last_frame: entries[entries.len() - 1].frame,
            reason,
        });
        for e in entries {
            self.output.push(emit(&e.coarse_assigned, &e.detections));
        }
        self.seed_tracks = self.coarse.clone();
        self.reseed();
    }

    /// Keep the last frame as the next window's seed.
    fn reseed(&mut self) {
        let last = self.buffer.entries.pop().expect("flush of an empty buffer");
        self.buffer.entries = vec![last];
        self.buffer.seeded = true;
    }

    /// Re-associate the buffered window with fine-grained scores.
    pub fn flush(&mut self) {
        if self.buffer.pending() == 0 {
            return;
        }
        self.report.strides += 1;
        let tracker = self.point_tracker.expect("checked in Pipeline::new");
        let snaps: Vec<CoarseFrame> = self.buffer.entries.iter().map(|e| e.coarse.clone()).collect();
        let queries = sample_pois(&snaps, &self.cfg.sampler);
        self.report.point_queries += queries.len();
        let window = FrameWindow::new(self.buffer.entries[0].frame, self.buffer.len());
        let trajectories = match tracker.track(&queries, window) {
            Ok(t) => t,
            Err(e) => return self.fallback(e.to_string()),
        };
        let nets: HashMap<NetOwner, Net> = group_by_owner(trajectories)
            .into_iter()
            .filter_map(|(owner, pois)| Net::new(pois).ok().map(|n| (owner, n)))
            .collect();

        let mut tracks = self.seed_tracks.clone();
        let mut used: HashSet<TrackId> = tracks.iter().map(|t| t.id).collect();
        let mut net_of: HashMap<TrackId, NetOwner> = HashMap::new();
        let skip = usize::from(self.buffer.seeded);
        let mut last_step = None;

        for entry in &self.buffer.entries[skip..] {
            let dets = &entry.detections;
            let coarse_holder: HashMap<usize, TrackId> = entry.coarse_assigned.iter().map(|&(id, j)| (j, id)).collect();
            let (cfg, assoc) = (&self.cfg, &self.assoc);
            let next_id = &mut self.next_id;
            let mut spawned_nets = Vec::new();
            let step = associate(
                &mut tracks,
                dets,
                |tracks, high| {
                    let rows: Vec<NetRow> = tracks
                        .iter()
                        .map(|t| {
                            let owner = net_of.get(&t.id).copied().unwrap_or(NetOwner::Track(t.id));
                            NetRow {
                                track_id: t.id,
                                net: nets.get(&owner),
                                predicted: t.predicted_box(),
                            }
                        })
                        .collect();
                    let high_dets: Vec<Detection> = high.iter().map(|&j| dets[j]).collect();
                    let fine = fine_score_matrix(&rows, &high_dets, entry.frame);
                    let coarse = coarse_score_matrix(
                        &tracks.iter().map(|t| (t.id, t.predicted_box())).collect::<Vec<_>>(),
                        &high_dets,
                    );
                    let mut fused = fine
                        .fuse(&coarse, assoc.fusion, assoc.fusion_lambda)
                        .expect("fine and coarse matrices share rows and columns");
                    fused.col_ids = high.to_vec();
                    fused
                },
                assoc,
                &cfg.motion,
                |j| {
                    // inherit the coarse id when the fine pass has not used it
                    let holder = coarse_holder.get(&j).copied();
                    let id = match holder {
                        Some(c) if !used.contains(&c) => c,
                        _ => {
                            let id = TrackId(*next_id);
                            *next_id += 1;
                            id
                        }
                    };
                    used.insert(id);
                    let owner = match holder {
                        Some(c) => NetOwner::Track(c),
                        None => NetOwner::Detection { frame: entry.frame, index: j },
                    };
                    spawned_nets.push((id, owner));
                    id
                },
            );
            net_of.extend(spawned_nets);
            self.output.push(emit(&step.lifecycle.assigned, dets));
            last_step = Some((entry.frame, step));
        }

        let (frame, step) = last_step.expect("at least one pending frame");
        let last = self.buffer.entries.last_mut().expect("non-empty buffer");
        last.coarse = snapshot(frame, &step.lifecycle.assigned, &step.unmatched, &last.detections);
        last.coarse_assigned = step.lifecycle.assigned;
        self.coarse = tracks.clone();
        self.seed_tracks = tracks;
        self.reseed();
    }
}

/// Track a whole sequence; `detections[t - 1]` holds frame `t`.
pub fn track_sequence(
    detections: &[Vec<Detection>],
    point_tracker: Option<&dyn PointTracker>,
    cfg: &PipelineConfig,
) -> Result<TrackingResult, PipelineError> {
    let mut pipeline = Pipeline::new(cfg.clone(), point_tracker)?;
    for (t, dets) in detections.iter().enumerate() {
        pipeline.process_frame(t as u32 + 1, dets.clone())?;
    }
    Ok(pipeline.finish())
}
