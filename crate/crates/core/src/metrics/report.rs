use std::fmt::Write;

use serde::Serialize;

use super::{ratio, SequenceCounts};

/// Scores at one IOU threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaScores {
    pub alpha: f64,
    pub hota: Option<f64>,
    pub det_a: Option<f64>,
    pub ass_a: Option<f64>,
    pub owta: Option<f64>,
    pub det_re: Option<f64>,
    pub loc_a: Option<f64>,
    pub cls_a: Option<f64>,
    pub teta: Option<f64>,
    pub tp: u64,
    pub fn_: u64,
    pub fp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub per_alpha: Vec<AlphaScores>,
    pub hota: Option<f64>,
    pub det_a: Option<f64>,
    pub ass_a: Option<f64>,
    pub owta: Option<f64>,
    pub det_re: Option<f64>,
    pub loc_a: Option<f64>,
    pub cls_a: Option<f64>,
    pub teta: Option<f64>,
    pub mota: Option<f64>,
    pub idf1: Option<f64>,
    pub clear_tp: u64,
    pub clear_fp: u64,
    pub clear_fn: u64,
    pub idsw: u64,
    pub idtp: u64,
    pub idfp: u64,
    pub idfn: u64,
    pub gt_dets: u64,
    pub pred_dets: u64,
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Option<Vec<f64>> = values.collect();
    let v = v?;
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

impl MetricsReport {
    pub fn from_counts(c: &SequenceCounts) -> Self {
        let any_dets = c.gt_dets + c.pred_dets > 0;
        let per_alpha: Vec<AlphaScores> = c
            .alphas
            .iter()
            .map(|a| {
                let det_a = ratio(a.tp as f64, (a.tp + a.fn_ + a.fp) as f64);
                let det_re = ratio(a.tp as f64, (a.tp + a.fn_) as f64);
                let ass_a = if a.tp > 0 {
                    Some(a.ass_sum / a.tp as f64)
                } else {
                    any_dets.then_some(0.0)
                };
                let cls_a = ratio(a.tpc as f64, (a.tpc + 2 * a.class_errors) as f64);
                let hota = det_a.zip(ass_a).map(|(d, s)| (d * s).sqrt());
                let owta = det_re.zip(ass_a).map(|(d, s)| (d * s).sqrt());
                let teta = match (det_a, ass_a, cls_a) {
                    (Some(l), Some(s), Some(k)) => Some((l + s + k) / 3.0),
                    _ => None,
                };
                AlphaScores {
                    alpha: a.alpha,
                    hota,
                    det_a,
                    ass_a,
                    owta,
                    det_re,
                    loc_a: det_a,
                    cls_a,
                    teta,
                    tp: a.tp,
                    fn_: a.fn_,
                    fp: a.fp,
                }
            })
            .collect();
        let avg = |f: fn(&AlphaScores) -> Option<f64>| mean(per_alpha.iter().map(f));
        Self {
            hota: avg(|a| a.hota),
            det_a: avg(|a| a.det_a),
            ass_a: avg(|a| a.ass_a),
            owta: avg(|a| a.owta),
            det_re: avg(|a| a.det_re),
            loc_a: avg(|a| a.loc_a),
            cls_a: avg(|a| a.cls_a),
            teta: avg(|a| a.teta),
            mota: c.clear.mota(),
            idf1: c.identity.idf1(),
            clear_tp: c.clear.tp,
            clear_fp: c.clear.fp,
            clear_fn: c.clear.fn_,
            idsw: c.clear.idsw,
            idtp: c.identity.idtp,
            idfp: c.identity.idfp,
            idfn: c.identity.idfn,
            gt_dets: c.gt_dets,
            pred_dets: c.pred_dets,
            per_alpha,
        }
    }

    /// Scores at the threshold closest to `alpha`.
    pub fn at_alpha(&self, alpha: f64) -> Option<&AlphaScores> {
        self.per_alpha
            .iter()
            .min_by(|a, b| (a.alpha - alpha).abs().total_cmp(&(b.alpha - alpha).abs()))
    }

    /// Headline values as `(name, value)`, in table order.
    pub fn headline(&self) -> Vec<(&'static str, Option<f64>)> {
        let at50 = self.at_alpha(0.5);
        vec![
            ("HOTA", self.hota),
            ("DetA", self.det_a),
            ("AssA", self.ass_a),
            ("OWTA", self.owta),
            ("DetRe", self.det_re),
            ("OWTA@50", at50.and_then(|a| a.owta)),
            ("HOTA@50", at50.and_then(|a| a.hota)),
            ("MOTA", self.mota),
            ("IDF1", self.idf1),
            ("TETA", self.teta),
            ("LocA", self.loc_a),
            ("AssocA", self.ass_a),
            ("ClsA", self.cls_a),
        ]
    }

    pub fn counts(&self) -> Vec<(&'static str, u64)> {
        vec![
            ("TP", self.clear_tp),
            ("FP", self.clear_fp),
            ("FN", self.clear_fn),
            ("IDSW", self.idsw),
            ("IDTP", self.idtp),
            ("IDFP", self.idfp),
            ("IDFN", self.idfn),
            ("gtDet", self.gt_dets),
        ]
    }
}

/// One row of a summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub name: String,
    pub report: MetricsReport,
    pub note: Option<String>,
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x}"))
}

/// `sequence,metric,value`, one line per sequence and metric. Undefined
/// values are written as `NA`.
pub fn metrics_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("sequence,metric,value\n");
    for r in rows {
        for (name, v) in r.report.headline() {
            let _ = writeln!(out, "{},{name},{}", r.name, cell(v));
        }
        for (name, v) in r.report.counts() {
            let _ = writeln!(out, "{},{name},{v}", r.name);
        }
    }
    out
}

/// Markdown table with percentages to two decimals.
pub fn metrics_markdown(rows: &[SummaryRow]) -> String {
    let cols = ["HOTA", "DetA", "AssA", "OWTA", "DetRe", "MOTA", "IDF1", "TETA", "ClsA"];
    let mut out = format!("| sequence | {} | IDSW | note |\n", cols.join(" | "));
    let _ = writeln!(out, "|---|{}---|", "---:|".repeat(cols.len() + 1));
    for r in rows {
        let head = r.report.headline();
        let vals: Vec<String> = cols
            .iter()
            .map(|c| {
                let v = head.iter().find(|(n, _)| n == c).and_then(|(_, v)| *v);
                v.map_or_else(|| "NA".to_string(), |x| format!("{:.2}", 100.0 * x))
            })
            .collect();
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} |",
            r.name,
            vals.join(" | "),
            r.report.idsw,
            r.note.as_deref().unwrap_or("")
        );
    }
    out
}
