//! Exhaustive reference implementations of the tracking metrics for toy
//! sequences (a handful of ids per frame). Every matching is found by
//! enumerating all partial injective maps rather than by an assignment
//! solver, and association counts are tallied per true positive.

use std::collections::BTreeMap;

use finenet::geometry::iou;
use finenet::sequence::TrackBox;

const EPS: f64 = f64::EPSILON;

/// Best partial injective map rows -> cols under `score`, among pairs for
/// which `allowed` holds. Returns `(total, pairs)`; the first maximum found
/// wins.
pub fn best_matching(
    n: usize,
    m: usize,
    score: &dyn Fn(usize, usize) -> f64,
    allowed: &dyn Fn(usize, usize) -> bool,
) -> (f64, Vec<(usize, usize)>) {
    fn go(
        i: usize,
        n: usize,
        m: usize,
        used: &mut Vec<bool>,
        cur: &mut Vec<(usize, usize)>,
        total: f64,
        best: &mut (f64, Vec<(usize, usize)>),
        score: &dyn Fn(usize, usize) -> f64,
        allowed: &dyn Fn(usize, usize) -> bool,
    ) {
        if i == n {
            if total > best.0 {
                *best = (total, cur.clone());
            }
            return;
        }
        go(i + 1, n, m, used, cur, total, best, score, allowed);
        for j in 0..m {
            if used[j] || !allowed(i, j) {
                continue;
            }
            used[j] = true;
            cur.push((i, j));
            go(i + 1, n, m, used, cur, total + score(i, j), best, score, allowed);
            cur.pop();
            used[j] = false;
        }
    }
    let mut best = (0.0, Vec::new());
    go(0, n, m, &mut vec![false; m], &mut Vec::new(), 0.0, &mut best, score, allowed);
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleAlpha {
    pub hota: Option<f64>,
    pub det_a: Option<f64>,
    pub det_re: Option<f64>,
    pub ass_a: Option<f64>,
    pub owta: Option<f64>,
    pub cls_a: Option<f64>,
    pub teta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub per_alpha: Vec<OracleAlpha>,
    pub hota: Option<f64>,
    pub owta: Option<f64>,
    pub teta: Option<f64>,
    pub mota: Option<f64>,
    pub idf1: Option<f64>,
    pub idsw: u64,
}

fn frame(v: &[Vec<TrackBox>], t: usize) -> &[TrackBox] {
    v.get(t).map_or(&[], |f| f.as_slice())
}

fn frac(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

fn mean(v: &[Option<f64>]) -> Option<f64> {
    let v: Option<Vec<f64>> = v.iter().copied().collect();
    v.filter(|v| !v.is_empty()).map(|v| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn evaluate(gt: &[Vec<TrackBox>], pred: &[Vec<TrackBox>], alphas: &[f64]) -> OracleReport {
    let len = gt.len().max(pred.len());
    let mut gt_occ: BTreeMap<u64, f64> = BTreeMap::new();
    let mut pred_occ: BTreeMap<u64, f64> = BTreeMap::new();
    for t in 0..len {
        for g in frame(gt, t) {
            *gt_occ.entry(g.id).or_default() += 1.0;
        }
        for p in frame(pred, t) {
            *pred_occ.entry(p.id).or_default() += 1.0;
        }
    }
    let gt_dets: f64 = gt_occ.values().sum();
    let pred_dets: f64 = pred_occ.values().sum();

    // trajectory-level soft overlap
    let mut potential: BTreeMap<(u64, u64), f64> = BTreeMap::new();
    for t in 0..len {
        let (g, p) = (frame(gt, t), frame(pred, t));
        for a in g {
            for b in p {
                let s = iou(&a.bbox, &b.bbox);
                let row: f64 = p.iter().map(|q| iou(&a.bbox, &q.bbox)).sum();
                let col: f64 = g.iter().map(|q| iou(&q.bbox, &b.bbox)).sum();
                let den = row + col - s;
                if den > EPS {
                    *potential.entry((a.id, b.id)).or_default() += s / den;
                }
            }
        }
    }
    let alignment = |g: u64, p: u64| {
        let x = potential.get(&(g, p)).copied().unwrap_or(0.0);
        x / (gt_occ[&g] + pred_occ[&p] - x)
    };

    // one matching per frame, thresholded per alpha
    let mut chosen: Vec<Vec<(usize, usize)>> = Vec::new();
    for t in 0..len {
        let (g, p) = (frame(gt, t), frame(pred, t));
        let score = |i: usize, j: usize| alignment(g[i].id, p[j].id) * iou(&g[i].bbox, &p[j].bbox);
        chosen.push(best_matching(g.len(), p.len(), &score, &|_, _| true).1);
    }
    let mut per_alpha = Vec::new();
    for &alpha in alphas {
        // every true positive as (frame, gt id, pred id, classes agree)
        let mut tps: Vec<(usize, u64, u64, bool)> = Vec::new();
        for t in 0..len {
            let (g, p) = (frame(gt, t), frame(pred, t));
            for &(i, j) in &chosen[t] {
                if iou(&g[i].bbox, &p[j].bbox) >= alpha - EPS {
                    tps.push((t, g[i].id, p[j].id, g[i].class_id == p[j].class_id));
                }
            }
        }
        let tp = tps.len() as f64;
        let (fn_, fp) = (gt_dets - tp, pred_dets - tp);
        let mut ass = 0.0;
        for &(_, g, p, _) in &tps {
            let tpa = tps.iter().filter(|c| c.1 == g && c.2 == p).count() as f64;
            let fna = gt_occ[&g] - tpa;
            let fpa = pred_occ[&p] - tpa;
            ass += tpa / (tpa + fna + fpa);
        }
        let ass_a = if tps.is_empty() {
            (gt_dets + pred_dets > 0.0).then_some(0.0)
        } else {
            Some(ass / tp)
        };
        let det_a = frac(tp, tp + fn_ + fp);
        let det_re = frac(tp, tp + fn_);
        let tpc = tps.iter().filter(|c| c.3).count() as f64;
        let wrong = tp - tpc;
        let cls_a = frac(tpc, tpc + 2.0 * wrong);
        per_alpha.push(OracleAlpha {
            hota: det_a.zip(ass_a).map(|(d, a)| (d * a).sqrt()),
            owta: det_re.zip(ass_a).map(|(d, a)| (d * a).sqrt()),
            teta: match (det_a, ass_a, cls_a) {
                (Some(l), Some(a), Some(c)) => Some((l + a + c) / 3.0),
                _ => None,
            },
            det_a,
            det_re,
            ass_a,
            cls_a,
        });
    }

    // CLEAR: keep last frame's pairs when still above 0.5, then maximise IOU
    let mut previous: BTreeMap<u64, u64> = BTreeMap::new();
    let mut last: BTreeMap<u64, u64> = BTreeMap::new();
    let (mut tp, mut idsw) = (0.0, 0u64);
    for t in 0..len {
        let (g, p) = (frame(gt, t), frame(pred, t));
        if g.is_empty() || p.is_empty() {
            continue;
        }
        let ok = |i: usize, j: usize| iou(&g[i].bbox, &p[j].bbox) >= 0.5 - EPS;
        let score = |i: usize, j: usize| {
            let carried = previous.get(&g[i].id) == Some(&p[j].id);
            (if carried { 1000.0 } else { 0.0 }) + iou(&g[i].bbox, &p[j].bbox)
        };
        let (_, pairs) = best_matching(g.len(), p.len(), &score, &ok);
        previous.clear();
        for (i, j) in pairs {
            tp += 1.0;
            let (gid, pid) = (g[i].id, p[j].id);
            if last.get(&gid).is_some_and(|&q| q != pid) {
                idsw += 1;
            }
            last.insert(gid, pid);
            previous.insert(gid, pid);
        }
    }
    let mota = (gt_dets > 0.0).then(|| 1.0 - ((gt_dets - tp) + (pred_dets - tp) + idsw as f64) / gt_dets);

    // identity: best one-to-one map of whole trajectories
    let gids: Vec<u64> = gt_occ.keys().copied().collect();
    let pids: Vec<u64> = pred_occ.keys().copied().collect();
    let overlap = |a: usize, b: usize| {
        (0..len)
            .filter(|&t| {
                let g = frame(gt, t).iter().find(|x| x.id == gids[a]);
                let p = frame(pred, t).iter().find(|x| x.id == pids[b]);
                matches!((g, p), (Some(g), Some(p)) if iou(&g.bbox, &p.bbox) >= 0.5)
            })
            .count() as f64
    };
    let (idtp, _) = best_matching(gids.len(), pids.len(), &overlap, &|_, _| true);
    let idf1 = frac(2.0 * idtp, gt_dets + pred_dets);

    let col = |f: fn(&OracleAlpha) -> Option<f64>| mean(&per_alpha.iter().map(f).collect::<Vec<_>>());
    OracleReport {
        hota: col(|a| a.hota),
        owta: col(|a| a.owta),
        teta: col(|a| a.teta),
        per_alpha,
        mota,
        idf1,
        idsw,
    }
}
