use super::{coarse_score_matrix, hungarian, AssocConfig, ScoreMatrix};
use crate::geometry::BBox;
use crate::motion::{kf_init, kf_predict, kf_update, KalmanConfig, KalmanState};
use crate::sequence::{Detection, TrackId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackStatus {
    Active,
    Lost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: TrackId,
    pub kf: KalmanState,
    /// Last matched detection box.
    pub last_box: BBox,
    pub status: TrackStatus,
    pub frames_lost: u32,
    pub class_id: i32,
    /// Score of the last matched detection.
    pub score: f64,
    pub hits: u32,
}

impl Track {
    pub fn spawn(id: TrackId, det: &Detection, kcfg: &KalmanConfig) -> Option<Self> {
        let kf = kf_init(&det.bbox, kcfg).ok()?;
        Some(Self {
            id,
            kf,
            last_box: det.bbox,
            status: TrackStatus::Active,
            frames_lost: 0,
            class_id: det.class_id,
            score: det.score,
            hits: 1,
        })
    }

    pub fn predicted_box(&self) -> BBox {
        self.kf.to_box()
    }

    pub fn is_active(&self) -> bool {
        self.status == TrackStatus::Active
    }

    fn mark_matched(&mut self, det: &Detection, kcfg: &KalmanConfig) {
        if let Ok(kf) = kf_update(&self.kf, &det.bbox, kcfg) {
            self.kf = kf;
        }
        self.last_box = det.bbox;
        self.status = TrackStatus::Active;
        self.frames_lost = 0;
        self.class_id = det.class_id;
        self.score = det.score;
        self.hits += 1;
    }

    fn mark_missed(&mut self) {
        self.status = TrackStatus::Lost;
        self.frames_lost += 1;
    }
}

/// Advance every track one frame. Lost tracks stop changing height.
pub fn predict_tracks(tracks: &mut [Track], kcfg: &KalmanConfig) {
    for t in tracks {
        if !t.is_active() {
            t.kf.mean[7] = 0.0;
        }
        t.kf = kf_predict(&t.kf, 1, kcfg);
    }
}

/// Indices of high-score and low-score detections. Detections below
/// `det_low` are discarded.
pub fn split_by_score(detections: &[Detection], cfg: &AssocConfig) -> (Vec<usize>, Vec<usize>) {
    let mut high = Vec::new();
    let mut low = Vec::new();
    for (j, d) in detections.iter().enumerate() {
        if d.score >= cfg.det_high {
            high.push(j);
        } else if d.score >= cfg.det_low {
            low.push(j);
        }
    }
    (high, low)
}

/// Matches as `(track index, detection index)`, both referring to the inputs
/// of [`byte_cascade`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CascadeOutcome {
    pub matches: Vec<(usize, usize)>,
    pub unmatched_tracks: Vec<usize>,
    /// Detections at or above `det_low` left unmatched.
    pub unmatched_detections: Vec<usize>,
    /// Unmatched high detections confident enough to start a track.
    pub spawn: Vec<usize>,
}

/// Two-stage association. `first_stage` scores every track (rows, in order)
/// against the high-score detections (its `col_ids`). Remaining active tracks
/// are then matched to low-score detections by IOU alone.
pub fn byte_cascade(
    tracks: &[Track],
    detections: &[Detection],
    first_stage: &ScoreMatrix,
    cfg: &AssocConfig,
) -> CascadeOutcome {
    debug_assert_eq!(first_stage.row_ids.len(), tracks.len());
    let (_, low) = split_by_score(detections, cfg);
    let mut det_used = vec![false; detections.len()];
    let mut track_used = vec![false; tracks.len()];
    let mut matches = Vec::new();

    let first = hungarian(first_stage, cfg.match_threshold);
    for &(r, c) in &first.matches {
        let j = first_stage.col_ids[c];
        matches.push((r, j));
        track_used[r] = true;
        det_used[j] = true;
    }

    if cfg.second_stage && !low.is_empty() {
        let rows: Vec<usize> = (0..tracks.len())
            .filter(|&i| !track_used[i] && tracks[i].is_active())
            .collect();
        let predicted: Vec<(TrackId, BBox)> = rows
            .iter()
            .map(|&i| (tracks[i].id, tracks[i].predicted_box()))
            .collect();
        let low_dets: Vec<Detection> = low.iter().map(|&j| detections[j]).collect();
        let second = hungarian(&coarse_score_matrix(&predicted, &low_dets), cfg.low_match_threshold);
        for &(r, c) in &second.matches {
            let (i, j) = (rows[r], low[c]);
            matches.push((i, j));
            track_used[i] = true;
            det_used[j] = true;
        }
    }

    matches.sort_unstable();
    let spawn = first_stage
        .col_ids
        .iter()
        .copied()
        .filter(|&j| !det_used[j] && detections[j].score >= cfg.new_track_score)
        .collect();
    let unmatched_detections = (0..detections.len())
        .filter(|&j| !det_used[j] && detections[j].score >= cfg.det_low)
        .collect();
    CascadeOutcome {
        matches,
        unmatched_tracks: (0..tracks.len()).filter(|&i| !track_used[i]).collect(),
        unmatched_detections,
        spawn,
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LifecycleOutcome {
    /// `(track, detection index)` for matched and newly spawned tracks.
    pub assigned: Vec<(TrackId, usize)>,
    pub spawned: Vec<TrackId>,
    pub removed: Vec<TrackId>,
}

/// Apply a cascade outcome: update matched tracks, age unmatched ones, drop
/// tracks lost for more than `max_lost` frames and spawn new tracks.
/// `new_id` is called with the detection index for each spawn.
pub fn lifecycle_step(
    tracks: &mut Vec<Track>,
    outcome: &CascadeOutcome,
    detections: &[Detection],
    cfg: &AssocConfig,
    kcfg: &KalmanConfig,
    mut new_id: impl FnMut(usize) -> TrackId,
) -> LifecycleOutcome {
    let mut out = LifecycleOutcome::default();
    for &(i, j) in &outcome.matches {
        tracks[i].mark_matched(&detections[j], kcfg);
        out.assigned.push((tracks[i].id, j));
    }
    for &i in &outcome.unmatched_tracks {
        tracks[i].mark_missed();
    }
    tracks.retain(|t| {
        let keep = t.frames_lost <= cfg.max_lost;
        if !keep {
            out.removed.push(t.id);
        }
        keep
    });
    for &j in &outcome.spawn {
        if let Some(t) = Track::spawn(new_id(j), &detections[j], kcfg) {
            out.assigned.push((t.id, j));
            out.spawned.push(t.id);
            tracks.push(t);
        }
    }
    out
}
