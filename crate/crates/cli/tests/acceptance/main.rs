//! Acceptance suite: one PASS/FAIL line per criterion, with timings.
//!
//! Runs as a plain binary (no libtest harness) so the report is printed
//! even when output capture is on. Exits non-zero if any criterion fails.

mod oracle;

use std::collections::HashMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use finenet::assoc::{fine_score_matrix, hungarian, Net, NetRow, ScoreMatrix};
use finenet::io::{
    frames_to_rows, read_mot_from, read_point_tracks_from, read_poses_from, write_mot_to, write_point_tracks_to,
    write_poses_to, MotRow, RunConfig,
};
use finenet::metrics::{default_alphas, dynamicity_report, evaluate, DynamicityReport, MetricsReport};
use finenet::pipeline::{track_sequence, PipelineConfig, PipelineMode};
use finenet::points::{Binding, OracleNoiseConfig, OracleTracker, PointSample, PointTrajectory};
use finenet::sampler::NetOwner;
use finenet::sequence::Pose;
use finenet::simulator::{generate, ScenarioConfig};
use finenet::{BBox, Detection, Point, SequenceBundle, TrackBox, TrackId};
use finenet_cli::bench::{self, Cell, CellResult};
use finenet_cli::commands;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- 1

fn random_box(rng: &mut ChaCha8Rng) -> BBox {
    let (x, y) = (rng.random_range(0.0..100.0), rng.random_range(0.0..100.0));
    if rng.random_bool(0.05) {
        // zero width
        return BBox::new(x, y, x, y + rng.random_range(0.0..30.0));
    }
    BBox::new(x, y, x + rng.random_range(1.0..60.0), y + rng.random_range(1.0..60.0))
}

fn random_point(rng: &mut ChaCha8Rng, dets: &[Detection]) -> Point {
    // some points sit exactly on a detection edge or corner
    if !dets.is_empty() && rng.random_bool(0.2) {
        let b = dets[rng.random_range(0..dets.len())].bbox;
        let x = if rng.random_bool(0.5) { b.x1 } else { b.x2 };
        let y = if rng.random_bool(0.5) { b.y1 } else { rng.random_range(b.y1..=b.y2) };
        return Point::new(x, y);
    }
    Point::new(rng.random_range(-10.0..170.0), rng.random_range(-10.0..170.0))
}

fn brute_fine_scores(rows: &[(Vec<Point>, BBox)], dets: &[Detection]) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; dets.len()]; rows.len()];
    for (i, (points, predicted)) in rows.iter().enumerate() {
        for (j, d) in dets.iter().enumerate() {
            let b = d.bbox;
            let det_area = (b.x2 - b.x1) * (b.y2 - b.y1);
            if points.is_empty() || det_area <= 0.0 {
                continue;
            }
            let mut inside = 0usize;
            for p in points {
                if p.x >= b.x1 && p.x <= b.x2 && p.y >= b.y1 && p.y <= b.y2 {
                    inside += 1;
                }
            }
            let pred_area = (predicted.x2 - predicted.x1) * (predicted.y2 - predicted.y1);
            let w = if pred_area < det_area { pred_area / det_area } else { 1.0 };
            out[i][j] = w * inside as f64 / points.len() as f64;
        }
    }
    out
}

fn criterion_1() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let frame = 3;
    let mut cells = 0;
    for instance in 0..1000 {
        let dets: Vec<Detection> = (0..rng.random_range(0..6))
            .map(|_| Detection::new(random_box(&mut rng), 0.9, 1))
            .collect();
        let mut nets = Vec::new();
        let mut visible_points = Vec::new();
        for r in 0..rng.random_range(1..5) {
            let mut pois = Vec::new();
            let mut shown = Vec::new();
            for k in 0..rng.random_range(1..20) {
                let p = random_point(&mut rng, &dets);
                let visible = rng.random_bool(0.8);
                if visible {
                    shown.push(p);
                }
                pois.push(PointTrajectory {
                    owner: NetOwner::Track(TrackId(r)),
                    poi_index: k,
                    first_frame: frame,
                    samples: vec![PointSample { position: Some(p), visible }],
                });
            }
            nets.push(Net::new(pois).map_err(|e| e.to_string())?);
            visible_points.push((shown, random_box(&mut rng)));
        }
        let rows: Vec<NetRow> = nets
            .iter()
            .zip(&visible_points)
            .enumerate()
            .map(|(i, (net, (_, predicted)))| NetRow {
                track_id: TrackId(i as u64),
                net: Some(net),
                predicted: *predicted,
            })
            .collect();
        let fast = fine_score_matrix(&rows, &dets, frame);
        let slow = brute_fine_scores(&visible_points, &dets);
        for (i, row) in slow.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                cells += 1;
                let got = fast.scores.get(i, j);
                ensure(got == v, || format!("instance {instance} cell ({i},{j}): {got} vs brute force {v}"))?;
            }
        }
    }
    Ok(format!("1000 instances, {cells} cells identical"))
}

// ---------------------------------------------------------------- 2

fn brute_assignment(v: &[Vec<f64>], threshold: f64) -> f64 {
    fn go(i: usize, v: &[Vec<f64>], t: f64, used: &mut Vec<bool>) -> f64 {
        if i == v.len() {
            return 0.0;
        }
        let mut best = go(i + 1, v, t, used);
        for j in 0..used.len() {
            if !used[j] && v[i][j] >= t {
                used[j] = true;
                best = best.max(v[i][j] + go(i + 1, v, t, used));
                used[j] = false;
            }
        }
        best
    }
    let m = v.first().map_or(0, |r| r.len());
    go(0, v, threshold, &mut vec![false; m])
}

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for instance in 0..500 {
        let (n, m) = (rng.random_range(0..=6), rng.random_range(0..=6));
        // multiples of 1/64 keep every partial sum exact
        let v: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| rng.random_range(0..=64) as f64 / 64.0).collect())
            .collect();
        let threshold = if instance % 2 == 0 { 0.0 } else { rng.random_range(1..=48) as f64 / 64.0 };
        let scores = ScoreMatrix::new(
            DMatrix::from_fn(n, m, |i, j| v[i][j]),
            (0..n as u64).map(TrackId).collect(),
            (0..m).collect(),
        );
        let a = hungarian(&scores, threshold);
        let mut rows = vec![false; n];
        let mut cols = vec![false; m];
        let mut total = 0.0;
        for &(i, j) in &a.matches {
            ensure(!rows[i] && !cols[j], || format!("instance {instance}: ({i},{j}) reused"))?;
            ensure(v[i][j] >= threshold, || format!("instance {instance}: ({i},{j}) below threshold"))?;
            rows[i] = true;
            cols[j] = true;
            total += v[i][j];
        }
        let best = brute_assignment(&v, threshold);
        ensure(total == best, || format!("instance {instance} ({n}x{m}, t={threshold}): {total} vs optimum {best}"))?;
    }
    Ok("500 instances, n,m <= 6, totals equal the factorial optimum".into())
}

// ---------------------------------------------------------------- 3

fn tb(id: u64, x: f64, y: f64, class_id: i32) -> TrackBox {
    TrackBox::new(id, BBox::new(x, y, x + 20.0, y + 20.0), class_id)
}

/// Two objects tracked perfectly except that the predicted ids swap at
/// frame 6 of 10.
fn swap_fixture() -> (Vec<Vec<TrackBox>>, Vec<Vec<TrackBox>>) {
    let gt: Vec<Vec<TrackBox>> = (0..10)
        .map(|t| vec![tb(1, 10.0 + 3.0 * t as f64, 10.0, 1), tb(2, 100.0, 10.0 + 3.0 * t as f64, 1)])
        .collect();
    let pred = gt
        .iter()
        .enumerate()
        .map(|(t, f)| {
            f.iter()
                .map(|b| {
                    let id = if t >= 5 { 3 - b.id } else { b.id } + 10;
                    TrackBox { id, bbox: b.bbox.translate(0.7, -0.4), ..*b }
                })
                .collect()
        })
        .collect();
    (gt, pred)
}

fn fp_only_fixture() -> (Vec<Vec<TrackBox>>, Vec<Vec<TrackBox>>) {
    let pred = (0..6).map(|t| vec![tb(5, 4.0 * t as f64, 0.0, 1)]).collect();
    (vec![Vec::new(); 6], pred)
}

/// Perfect boxes and ids, but one object is labelled with the wrong class
/// in half its frames.
fn class_fixture() -> (Vec<Vec<TrackBox>>, Vec<Vec<TrackBox>>) {
    let gt: Vec<Vec<TrackBox>> = (0..8)
        .map(|t| vec![tb(1, 5.0 * t as f64, 0.0, 1), tb(2, 5.0 * t as f64, 60.0, 2)])
        .collect();
    let pred = gt
        .iter()
        .enumerate()
        .map(|(t, f)| {
            f.iter()
                .map(|b| TrackBox { class_id: if b.id == 2 && t % 2 == 0 { 1 } else { b.class_id }, ..*b })
                .collect()
        })
        .collect();
    (gt, pred)
}

/// Up to four objects wandering in a small area, with a perturbed,
/// id-shuffled, gappy prediction and occasional false positives.
fn random_fixture(rng: &mut ChaCha8Rng) -> (Vec<Vec<TrackBox>>, Vec<Vec<TrackBox>>) {
    let frames = rng.random_range(1..=20);
    let objects = rng.random_range(1..=4);
    let mut pos: Vec<(f64, f64)> = (0..objects)
        .map(|_| (rng.random_range(0.0..80.0), rng.random_range(0.0..80.0)))
        .collect();
    let mut gt = Vec::new();
    let mut pred = Vec::new();
    for _ in 0..frames {
        let mut g = Vec::new();
        let mut p = Vec::new();
        for (k, xy) in pos.iter_mut().enumerate() {
            xy.0 += rng.random_range(-6.0..6.0);
            xy.1 += rng.random_range(-6.0..6.0);
            if rng.random_bool(0.85) {
                g.push(tb(k as u64 + 1, xy.0, xy.1, 1));
            }
            if rng.random_bool(0.8) {
                let id = if rng.random_bool(0.15) { rng.random_range(1..=4) } else { k as u64 + 1 } + 100;
                if !p.iter().any(|b: &TrackBox| b.id == id) {
                    let (dx, dy) = (rng.random_range(-7.0..7.0), rng.random_range(-7.0..7.0));
                    p.push(tb(id, xy.0 + dx, xy.1 + dy, 1));
                }
            }
        }
        if rng.random_bool(0.2) && !p.iter().any(|b| b.id == 200) {
            p.push(tb(200, rng.random_range(0.0..120.0), rng.random_range(0.0..120.0), 1));
        }
        gt.push(g);
        pred.push(p);
    }
    (gt, pred)
}

fn close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => (a - b).abs() <= 1e-9,
        (None, None) => true,
        _ => false,
    }
}

fn compare_to_oracle(name: &str, gt: &[Vec<TrackBox>], pred: &[Vec<TrackBox>]) -> Result<(), String> {
    let alphas = default_alphas();
    let got = MetricsReport::from_counts(&evaluate(gt, pred, &alphas));
    let want = oracle::evaluate(gt, pred, &alphas);
    for (g, w) in got.per_alpha.iter().zip(&want.per_alpha) {
        let pairs = [
            ("HOTA", g.hota, w.hota),
            ("DetA", g.det_a, w.det_a),
            ("DetRe", g.det_re, w.det_re),
            ("AssA", g.ass_a, w.ass_a),
            ("OWTA", g.owta, w.owta),
            ("ClsA", g.cls_a, w.cls_a),
            ("TETA", g.teta, w.teta),
        ];
        for (metric, a, b) in pairs {
            ensure(close(a, b), || format!("{name}: {metric}@{:.2} {a:?} vs oracle {b:?}", g.alpha))?;
        }
    }
    let scalars = [
        ("HOTA", got.hota, want.hota),
        ("OWTA", got.owta, want.owta),
        ("TETA", got.teta, want.teta),
        ("MOTA", got.mota, want.mota),
        ("IDF1", got.idf1, want.idf1),
    ];
    for (metric, a, b) in scalars {
        ensure(close(a, b), || format!("{name}: {metric} {a:?} vs oracle {b:?}"))?;
    }
    ensure(got.idsw == want.idsw, || format!("{name}: IDSW {} vs oracle {}", got.idsw, want.idsw))
}

fn criterion_3() -> Check {
    let (gt, pred) = swap_fixture();
    compare_to_oracle("swap", &gt, &pred)?;
    let r = MetricsReport::from_counts(&evaluate(&gt, &pred, &default_alphas()));
    ensure(r.idsw == 2, || format!("swap fixture: IDSW {}", r.idsw))?;
    let (gt, pred) = fp_only_fixture();
    compare_to_oracle("fp-only", &gt, &pred)?;
    let (gt, pred) = class_fixture();
    compare_to_oracle("classes", &gt, &pred)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 0..60 {
        let (gt, pred) = random_fixture(&mut rng);
        compare_to_oracle(&format!("random #{k}"), &gt, &pred)?;
    }

    // 2 objects x 5 frames; one miss in frame 3, one stray box in frame 4
    let gt: Vec<Vec<TrackBox>> = (0..5).map(|t| vec![tb(1, t as f64, 0.0, 1), tb(2, t as f64, 50.0, 1)]).collect();
    let mut pred = gt.clone();
    pred[2].pop();
    pred[3].push(tb(9, 200.0, 200.0, 1));
    compare_to_oracle("mota hand case", &gt, &pred)?;
    let mota = MetricsReport::from_counts(&evaluate(&gt, &pred, &default_alphas())).mota;
    ensure(close(mota, Some(0.8)), || format!("MOTA hand case {mota:?}"))?;

    // one 10-frame track covered by one predicted id for its first half
    // and another for the second
    let gt: Vec<Vec<TrackBox>> = (0..10).map(|t| vec![tb(1, t as f64, 0.0, 1)]).collect();
    let pred: Vec<Vec<TrackBox>> = (0..10).map(|t| vec![tb(if t < 5 { 7 } else { 8 }, t as f64, 0.0, 1)]).collect();
    compare_to_oracle("idf1 hand case", &gt, &pred)?;
    let idf1 = MetricsReport::from_counts(&evaluate(&gt, &pred, &default_alphas())).idf1;
    ensure(close(idf1, Some(0.5)), || format!("IDF1 hand case {idf1:?}"))?;
    Ok("swap, fp-only, class, 60 random toys and both hand cases agree with enumeration".into())
}

// ---------------------------------------------------------------- 4

fn mot_bytes(frames: &[Vec<TrackBox>]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_mot_to(&mut buf, &frames_to_rows(&frames.to_vec())).expect("in-memory write");
    buf
}

fn criterion_4() -> Check {
    for seed in 0..20 {
        let b = generate(&ScenarioConfig {
            n_objects: 5,
            frames: 80,
            width: 2400.0,
            height: 1800.0,
            crossing_probability: 0.0,
            seed,
            ..ScenarioConfig::noiseless()
        })
        .map_err(|e| e.to_string())?;
        let tracker = OracleTracker {
            poses: &b.poses,
            noise: OracleNoiseConfig::default(),
            binding: Binding::ByPosition,
        };
        let r = track_sequence(&b.detections, Some(&tracker), &PipelineConfig::new(PipelineMode::Finenet))
            .map_err(|e| e.to_string())?;
        let m = MetricsReport::from_counts(&evaluate(&b.gt, &r.frames, &default_alphas()));
        for (name, v) in [("MOTA", m.mota), ("IDF1", m.idf1), ("HOTA", m.hota), ("OWTA", m.owta)] {
            ensure(v == Some(1.0), || format!("seed {seed}: {name} = {v:?}"))?;
        }
    }
    let noise = OracleNoiseConfig { sigma: 2.0, dropout: 0.1, ..OracleNoiseConfig::default() };
    for seed in 0..20 {
        let b = generate(&ScenarioConfig { seed, ..ScenarioConfig::default() }).map_err(|e| e.to_string())?;
        let tracker = OracleTracker { poses: &b.poses, noise, binding: Binding::ByPosition };
        let cfg = PipelineConfig { stride: 1, ..PipelineConfig::new(PipelineMode::Finenet) };
        let fine = track_sequence(&b.detections, Some(&tracker), &cfg).map_err(|e| e.to_string())?;
        let byte = track_sequence(&b.detections, None, &PipelineConfig::new(PipelineMode::CoarseByte))
            .map_err(|e| e.to_string())?;
        ensure(mot_bytes(&fine.frames) == mot_bytes(&byte.frames), || {
            format!("seed {seed}: stride-1 output differs from coarse-byte")
        })?;
    }
    Ok("20 clean sequences score exactly 1; stride 1 matches coarse-byte byte for byte on 20".into())
}

// ---------------------------------------------------------------- 5-7

/// The standard suite and every cell evaluated on it so far.
struct Suite {
    cfg: RunConfig,
    bundles: Vec<SequenceBundle>,
    cells: HashMap<(PipelineMode, usize, Option<usize>), CellResult>,
}

impl Suite {
    fn new() -> Result<Self, String> {
        let mut cfg = RunConfig::default();
        cfg.suite.seeds = 20;
        cfg.oracle.sigma = 2.0;
        cfg.oracle.dropout = 0.1;
        cfg.simulator.deformation_amplitude = 0.4;
        cfg.simulator.crossing_probability = 0.5;
        cfg.validate().map_err(|e| e.to_string())?;
        let bundles = bench::generate_suite(&cfg).map_err(|e| e.to_string())?;
        Ok(Self { cfg, bundles, cells: HashMap::new() })
    }

    fn cell(&mut self, mode: PipelineMode, decimation: usize, poi_count: Option<usize>) -> Result<&CellResult, String> {
        let key = (mode, decimation, poi_count);
        if !self.cells.contains_key(&key) {
            let cell = Cell { mode, decimation, poi_count };
            let r = bench::run_cell(&self.bundles, cell, &self.cfg).map_err(|e| e.to_string())?;
            self.cells.insert(key, r);
        }
        Ok(&self.cells[&key])
    }
}

fn pct(v: Option<f64>) -> f64 {
    100.0 * v.unwrap_or(f64::NAN)
}

fn criterion_5(suite: &mut Suite) -> Check {
    let fine = suite.cell(PipelineMode::Finenet, 1, Some(9))?.clone();
    let coarse = suite.cell(PipelineMode::CoarseIou, 1, None)?.clone();
    let (fm, fs) = fine.stat(|r| r.idf1).ok_or("finenet IDF1 undefined")?;
    let (cm, cs) = coarse.stat(|r| r.idf1).ok_or("coarse-iou IDF1 undefined")?;
    let (fi, ci) = (fine.total_idsw(), coarse.total_idsw());
    let detail = format!(
        "IDF1 finenet {:.2} ± {:.2} vs coarse-iou {:.2} ± {:.2} (pooled {:.2} vs {:.2}); IDSW {fi} vs {ci}",
        100.0 * fm,
        100.0 * fs,
        100.0 * cm,
        100.0 * cs,
        pct(fine.combined.idf1),
        pct(coarse.combined.idf1)
    );
    ensure(fm >= cm + 0.05 && fi < ci, || detail.clone())?;
    Ok(detail)
}

fn criterion_6(suite: &mut Suite) -> Check {
    let mut lines = Vec::new();
    let mut owta = HashMap::new();
    for (mode, k) in [(PipelineMode::Finenet, Some(9)), (PipelineMode::CoarseIou, None)] {
        let mut row = Vec::new();
        for f in [1, 2, 4, 8] {
            let v = pct(suite.cell(mode, f, k)?.combined.owta);
            owta.insert((mode, f), v);
            row.push(format!("{v:.1}"));
        }
        lines.push(format!("{} [{}]", mode.name(), row.join(", ")));
    }
    let fine_drop = owta[&(PipelineMode::Finenet, 1)] - owta[&(PipelineMode::Finenet, 8)];
    let coarse_drop = owta[&(PipelineMode::CoarseIou, 1)] - owta[&(PipelineMode::CoarseIou, 8)];
    let detail = format!(
        "OWTA at f=1,2,4,8: {}; decline {fine_drop:.1} vs {coarse_drop:.1} points",
        lines.join("; ")
    );
    ensure(fine_drop <= 0.7 * coarse_drop, || detail.clone())?;
    Ok(detail)
}

fn criterion_7(suite: &mut Suite) -> Check {
    let mut idf1 = HashMap::new();
    for k in [1, 4, 9, 16] {
        idf1.insert(k, pct(suite.cell(PipelineMode::Finenet, 1, Some(k))?.combined.idf1));
    }
    let (g49, g916) = (idf1[&9] - idf1[&4], idf1[&16] - idf1[&9]);
    let detail = format!(
        "IDF1 at K=1,4,9,16: {:.2}, {:.2}, {:.2}, {:.2}; gain 4->9 {g49:+.2}, 9->16 {g916:+.2}",
        idf1[&1], idf1[&4], idf1[&9], idf1[&16]
    );
    ensure(g916 < 0.5 * g49, || detail.clone())?;
    Ok(detail)
}

// ---------------------------------------------------------------- 8

fn pooled_attributes(base: &ScenarioConfig) -> Result<DynamicityReport, String> {
    let mut joined = Vec::new();
    for seed in 0..20 {
        let b = generate(&ScenarioConfig { seed, ..base.clone() }).map_err(|e| e.to_string())?;
        joined.extend(b.gt);
        joined.push(Vec::new());
    }
    Ok(dynamicity_report(&joined))
}

/// Share of pairs in bins overlapping `[lo, hi)`.
fn mass(stats: &finenet::metrics::AttributeStats, lo: f64, hi: f64) -> f64 {
    let h = &stats.histogram;
    h.edges()
        .iter()
        .zip(h.normalized())
        .filter(|((a, b), _)| *a < hi && *b > lo)
        .map(|(_, p)| p)
        .sum()
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

/// Each histogram's mass sits further right than the previous one's:
/// every cumulative share is no larger, and the first bin strictly smaller.
fn shifts_right(hists: &[&finenet::metrics::Histogram]) -> bool {
    let cdf = |h: &finenet::metrics::Histogram| {
        h.normalized()
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect::<Vec<f64>>()
    };
    hists.windows(2).all(|w| {
        let (a, b) = (cdf(w[0]), cdf(w[1]));
        a.iter().zip(&b).all(|(x, y)| *y <= x + 1e-12) && b[0] < a[0]
    })
}

fn criterion_8() -> Check {
    let base = ScenarioConfig::default();
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", ");

    let amplitudes = [0.0, 0.4, 0.8];
    let mut by_amplitude = Vec::new();
    for a in amplitudes {
        by_amplitude.push(pooled_attributes(&ScenarioConfig { deformation_amplitude: a, ..base.clone() })?);
    }
    let arc_centre: Vec<f64> = by_amplitude.iter().map(|r| mass(&r.arc, 0.8, 1.2)).collect();
    let arc_iou: Vec<f64> = by_amplitude.iter().map(|r| r.iou.mean.unwrap_or(f64::NAN)).collect();

    let speeds = [(2.0, 6.0), (8.0, 20.0), (20.0, 45.0)];
    let mut by_speed = Vec::new();
    for (lo, hi) in speeds {
        by_speed.push(pooled_attributes(&ScenarioConfig { speed_min: lo, speed_max: hi, ..base.clone() })?);
    }
    let om_first: Vec<f64> = by_speed.iter().map(|r| r.object_motion.histogram.normalized()[0]).collect();
    let om_mean: Vec<f64> = by_speed.iter().map(|r| r.object_motion.mean.unwrap_or(f64::NAN)).collect();
    let speed_iou: Vec<f64> = by_speed.iter().map(|r| r.iou.mean.unwrap_or(f64::NAN)).collect();
    // adjacent IOU moves left as motion grows: compare its mirror image
    let iou_left = |rs: &[DynamicityReport]| {
        let mirrored: Vec<finenet::metrics::Histogram> = rs
            .iter()
            .map(|r| {
                let mut h = r.iou.histogram.clone();
                h.counts.reverse();
                h
            })
            .collect();
        shifts_right(&mirrored.iter().collect::<Vec<_>>())
    };

    let detail = format!(
        "amplitude {amplitudes:?}: ARC share in [0.8,1.2) {}, mean IOU {}; speed {speeds:?}: OM share in [0,20) {}, mean OM {}, mean IOU {}",
        fmt(&arc_centre),
        fmt(&arc_iou),
        fmt(&om_first),
        fmt(&om_mean),
        fmt(&speed_iou)
    );
    let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
    let ok = strictly_increasing(&neg(&arc_centre))
        && strictly_increasing(&neg(&arc_iou))
        && shifts_right(&by_speed.iter().map(|r| &r.object_motion.histogram).collect::<Vec<_>>())
        && iou_left(&by_speed)
        && strictly_increasing(&om_mean)
        && strictly_increasing(&neg(&speed_iou));
    ensure(ok, || detail.clone())?;
    Ok(detail)
}

// ---------------------------------------------------------------- 9

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).expect("readable dir") {
            let p = e.expect("dir entry").path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let bytes = fs::read(&p).expect("readable file");
                out.push((p.strip_prefix(dir).expect("under root").to_path_buf(), bytes));
            }
        }
    }
    out.sort();
    out
}

fn run_all_commands(root: &Path, jobs: usize) -> Result<(), String> {
    let mut cfg = RunConfig::default();
    cfg.suite.seeds = 3;
    cfg.suite.decimation = vec![1, 4];
    cfg.suite.poi_counts = vec![4, 9];
    cfg.simulator.frames = 40;
    cfg.oracle.sigma = 2.0;
    cfg.oracle.dropout = 0.1;
    let e = |e: finenet_cli::CliError| e.to_string();
    let data = root.join("data");
    commands::simulate(&cfg, &data, jobs).map_err(e)?;
    for mode in PipelineMode::ALL {
        let out = root.join("track").join(mode.name());
        commands::track(&cfg, &data, mode, None, &out, jobs).map_err(e)?;
        commands::eval(&cfg, &data, &out, &root.join("eval").join(mode.name()), jobs).map_err(e)?;
    }
    commands::attrs(&cfg, &data, &root.join("attrs")).map_err(e)?;
    bench::bench(&cfg, &root.join("bench"), jobs).map_err(e)?;
    Ok(())
}

fn random_rows(rng: &mut ChaCha8Rng) -> Vec<MotRow> {
    (0..rng.random_range(0..40))
        .map(|_| MotRow {
            frame: rng.random_range(1..50),
            id: rng.random_range(-1..40),
            bb_left: rng.random_range(-1e4..1e4),
            bb_top: rng.random_range(-1e4..1e4),
            bb_width: rng.random_range(0.0..500.0),
            bb_height: rng.random_range(0.0..500.0),
            conf: rng.random(),
            class_id: rng.random_range(-1..5),
            visibility: rng.random(),
        })
        .collect()
}

fn random_poses(rng: &mut ChaCha8Rng) -> Vec<Vec<Pose>> {
    (0..rng.random_range(0..12))
        .map(|_| {
            let mut ids: Vec<u64> = (0..rng.random_range(0..6)).map(|_| rng.random_range(0..30)).collect();
            ids.sort_unstable();
            ids.dedup();
            ids.into_iter()
                .map(|id| Pose {
                    id,
                    cx: rng.random_range(-1e4..1e4),
                    cy: rng.random_range(-1e4..1e4),
                    w: rng.random_range(0.1..300.0),
                    h: rng.random_range(0.1..300.0),
                    visibility: rng.random(),
                })
                .collect()
        })
        .collect()
}

fn random_trajectories(rng: &mut ChaCha8Rng) -> Vec<PointTrajectory> {
    let mut keys: Vec<(u64, usize)> = (0..rng.random_range(0..8))
        .map(|_| (rng.random_range(0..10), rng.random_range(0..16)))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    let p = |rng: &mut ChaCha8Rng| Point::new(rng.random_range(-1e4..1e4), rng.random_range(-1e4..1e4));
    keys.into_iter()
        .map(|(track, poi)| {
            let mut samples = vec![PointSample::visible_at(p(rng))];
            for _ in 0..rng.random_range(0..10) {
                samples.push(if rng.random_bool(0.3) {
                    PointSample::HIDDEN
                } else {
                    PointSample { position: Some(p(rng)), visible: rng.random() }
                });
            }
            samples.push(PointSample { position: Some(p(rng)), visible: false });
            PointTrajectory {
                owner: NetOwner::Track(TrackId(track)),
                poi_index: poi,
                first_frame: rng.random_range(1..40),
                samples,
            }
        })
        .collect()
}

fn criterion_9() -> Check {
    let dirs: Vec<tempfile::TempDir> = (0..3).map(|_| tempfile::tempdir().expect("tempdir")).collect();
    run_all_commands(dirs[0].path(), 1)?;
    run_all_commands(dirs[1].path(), 1)?;
    run_all_commands(dirs[2].path(), 4)?;
    let reference = tree(dirs[0].path());
    for (k, d) in dirs.iter().enumerate().skip(1) {
        let other = tree(d.path());
        ensure(other.len() == reference.len(), || format!("run {k}: {} files vs {}", other.len(), reference.len()))?;
        for (a, b) in reference.iter().zip(&other) {
            ensure(a == b, || format!("run {k}: {} differs", a.0.display()))?;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..300 {
        let mut rows = random_rows(&mut rng);
        let mut buf = Vec::new();
        write_mot_to(&mut buf, &rows).map_err(|e| e.to_string())?;
        let back = read_mot_from(buf.as_slice()).map_err(|e| e.to_string())?;
        rows.sort_by_key(|r| (r.frame, r.id));
        ensure(back == rows, || "MOT round trip changed rows".into())?;

        let poses = random_poses(&mut rng);
        let mut buf = Vec::new();
        write_poses_to(&mut buf, &poses).map_err(|e| e.to_string())?;
        let back = read_poses_from(buf.as_slice(), poses.len()).map_err(|e| e.to_string())?;
        ensure(back == poses, || "pose round trip changed poses".into())?;

        let t = random_trajectories(&mut rng);
        let mut buf = Vec::new();
        write_point_tracks_to(&mut buf, &t).map_err(|e| e.to_string())?;
        let back = read_point_tracks_from(buf.as_slice()).map_err(|e| e.to_string())?;
        ensure(back == t, || "point-track round trip changed trajectories".into())?;
    }
    Ok(format!(
        "{} output files identical across 3 runs (jobs 1, 1, 4); 300 randomized MOT/pose/point round trips lossless",
        reference.len()
    ))
}

// ----------------------------------------------------------------

fn report(id: usize, title: &str, limit: Duration, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let elapsed = start.elapsed();
    let (ok, detail) = match result {
        Ok(d) if elapsed <= limit => (true, d),
        Ok(d) => (false, format!("{d}; over the {limit:?} budget")),
        Err(d) => (false, d),
    };
    println!(
        "criterion {id} {}  {title} [{:.2}s / {}s]: {detail}",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    ok
}

fn main() {
    let secs = Duration::from_secs;
    let mut ok = true;
    ok &= report(1, "fine score vs brute force", secs(5), criterion_1);
    ok &= report(2, "assignment vs factorial brute force", secs(5), criterion_2);
    ok &= report(3, "metrics vs enumeration oracle", secs(10), criterion_3);
    ok &= report(4, "perfect-input identity, stride-1 equivalence", secs(10), criterion_4);
    let mut suite = None;
    let setup = Instant::now();
    match Suite::new() {
        Ok(s) => suite = Some(s),
        Err(e) => println!("suite generation failed: {e}"),
    }
    let setup = setup.elapsed();
    let mut with_suite = |id, title, limit: Duration, f: fn(&mut Suite) -> Check| match suite.as_mut() {
        Some(s) => report(id, title, limit, || f(s)),
        None => report(id, title, limit, || Err("no suite".into())),
    };
    ok &= with_suite(5, "fine vs coarse association", secs(180) - setup, criterion_5);
    ok &= with_suite(6, "frame-rate stability", secs(300), criterion_6);
    ok &= with_suite(7, "POI-count plateau", secs(300), criterion_7);
    ok &= report(8, "dynamicity dial", secs(60), criterion_8);
    ok &= report(9, "determinism and formats", secs(120), criterion_9);
    if !ok {
        std::process::exit(1);
    }
}
