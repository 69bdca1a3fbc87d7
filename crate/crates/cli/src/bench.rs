//! The benchmark sweep: tracking modes x frame-rate decimation x POI count
//! over a seeded suite of simulated sequences.

use std::path::Path;
use std::time::Instant;

use finenet::io::RunConfig;
use finenet::metrics::{evaluate, MetricsReport, SequenceCounts};
use finenet::pipeline::PipelineMode;
use finenet::sampler::SamplerConfig;
use finenet::simulator::{decimate, generate};
use finenet::SequenceBundle;
use rayon::prelude::*;

use crate::commands::{scenario_for, track_bundle};
use crate::{echo_config, pool, svg, write_file, CliError, CliResult};

/// Nominal frame rate of undecimated sequences, for chart axes.
pub const BASE_FPS: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub mode: PipelineMode,
    pub decimation: usize,
    /// `None` for modes that do not sample POIs.
    pub poi_count: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub cell: Cell,
    pub per_seed: Vec<MetricsReport>,
    pub combined: MetricsReport,
    pub fallbacks: usize,
}

impl CellResult {
    /// Mean and population std over seeds; seeds where the value is
    /// undefined are skipped.
    pub fn stat(&self, f: impl Fn(&MetricsReport) -> Option<f64>) -> Option<(f64, f64)> {
        let v: Vec<f64> = self.per_seed.iter().filter_map(f).collect();
        if v.is_empty() {
            return None;
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Some((mean, var.sqrt()))
    }

    pub fn total_idsw(&self) -> u64 {
        self.per_seed.iter().map(|r| r.idsw).sum()
    }
}

pub fn generate_suite(cfg: &RunConfig) -> CliResult<Vec<SequenceBundle>> {
    (0..cfg.suite.seeds)
        .into_par_iter()
        .map(|k| generate(&scenario_for(cfg, k)).map_err(|e| CliError::Config(e.to_string())))
        .collect()
}

/// Track and evaluate every bundle for one cell.
pub fn run_cell(bundles: &[SequenceBundle], cell: Cell, cfg: &RunConfig) -> CliResult<CellResult> {
    let mut cfg = cfg.clone();
    if let Some(k) = cell.poi_count {
        let grid = SamplerConfig::with_count(k).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.sampler.rows = grid.rows;
        cfg.sampler.cols = grid.cols;
    }
    let runs: Vec<(SequenceCounts, usize)> = bundles
        .par_iter()
        .map(|b| {
            let b = decimate(b, cell.decimation).map_err(|e| CliError::Config(e.to_string()))?;
            let r = track_bundle(&b, &cfg, cell.mode, None)?;
            Ok((evaluate(&b.gt, &r.frames, &cfg.metrics.alphas), r.report.fallbacks.len()))
        })
        .collect::<CliResult<_>>()?;
    Ok(CellResult {
        cell,
        per_seed: runs.iter().map(|(c, _)| MetricsReport::from_counts(c)).collect(),
        combined: MetricsReport::from_counts(&SequenceCounts::combine(runs.iter().map(|r| &r.0))),
        fallbacks: runs.iter().map(|r| r.1).sum(),
    })
}

/// Cells of the sweep: finenet at every decimation and POI count, the
/// coarse modes at every decimation.
pub fn cells(cfg: &RunConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &mode in &cfg.suite.modes {
        for &decimation in &cfg.suite.decimation {
            if mode == PipelineMode::Finenet {
                for &k in &cfg.suite.poi_counts {
                    out.push(Cell {
                        mode,
                        decimation,
                        poi_count: Some(k),
                    });
                }
            } else {
                out.push(Cell {
                    mode,
                    decimation,
                    poi_count: None,
                });
            }
        }
    }
    out
}

type Metric = (&'static str, fn(&MetricsReport) -> Option<f64>);

const METRICS: [Metric; 8] = [
    ("HOTA", |r| r.hota),
    ("OWTA", |r| r.owta),
    ("DetRe", |r| r.det_re),
    ("AssA", |r| r.ass_a),
    ("MOTA", |r| r.mota),
    ("IDF1", |r| r.idf1),
    ("TETA", |r| r.teta),
    ("IDSW", |r| Some(r.idsw as f64)),
];

fn poi_label(c: &Cell) -> String {
    c.poi_count.map_or_else(|| "-".to_string(), |k| k.to_string())
}

pub fn bench_csv(results: &[CellResult]) -> String {
    let mut out = String::from("mode,decimation,fps,poi_count,metric,mean,std,combined\n");
    for r in results {
        let c = &r.cell;
        for (name, f) in METRICS {
            let (mean, std) = r
                .stat(f)
                .map_or(("NA".to_string(), "NA".to_string()), |(m, s)| (m.to_string(), s.to_string()));
            let combined = f(&r.combined).map_or("NA".to_string(), |v| v.to_string());
            out.push_str(&format!(
                "{},{},{},{},{name},{mean},{std},{combined}\n",
                c.mode,
                c.decimation,
                BASE_FPS / c.decimation as f64,
                poi_label(c)
            ));
        }
    }
    out
}

pub fn bench_markdown(results: &[CellResult]) -> String {
    let mut out = String::from(
        "| mode | decimation | POIs | HOTA | OWTA | DetRe | MOTA | IDF1 | IDSW | fallbacks |\n\
         |---|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n",
    );
    for r in results {
        let c = &r.cell;
        let pct = |f: fn(&MetricsReport) -> Option<f64>| {
            r.stat(f)
                .map_or("NA".to_string(), |(m, s)| format!("{:.2} ± {:.2}", 100.0 * m, 100.0 * s))
        };
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
            c.mode,
            c.decimation,
            poi_label(c),
            pct(|r| r.hota),
            pct(|r| r.owta),
            pct(|r| r.det_re),
            pct(|r| r.mota),
            pct(|r| r.idf1),
            r.total_idsw(),
            r.fallbacks
        ));
    }
    out
}

/// Run the sweep and write `bench.csv`, `bench.md`, `owta_fps.svg` and
/// `poi_count.svg`.
pub fn bench(cfg: &RunConfig, out: &Path, jobs: usize) -> CliResult<Vec<CellResult>> {
    let start = Instant::now();
    let results = pool(jobs)?.install(|| -> CliResult<Vec<CellResult>> {
        let bundles = generate_suite(cfg)?;
        cells(cfg).into_iter().map(|c| run_cell(&bundles, c, cfg)).collect()
    })?;
    write_file(&out.join("bench.csv"), bench_csv(&results))?;
    write_file(&out.join("bench.md"), bench_markdown(&results))?;
    write_file(&out.join("owta_fps.svg"), owta_chart(cfg, &results))?;
    write_file(&out.join("poi_count.svg"), poi_chart(cfg, &results))?;
    echo_config(out, cfg)?;
    eprintln!("bench: {} cells in {:.2?}", results.len(), start.elapsed());
    Ok(results)
}

fn default_k(cfg: &RunConfig) -> usize {
    cfg.sampler.poi_count()
}

fn owta_chart(cfg: &RunConfig, results: &[CellResult]) -> String {
    let k = default_k(cfg);
    let series: Vec<(String, Vec<(f64, f64)>)> = cfg
        .suite
        .modes
        .iter()
        .map(|&mode| {
            let mut pts: Vec<(f64, f64)> = results
                .iter()
                .filter(|r| r.cell.mode == mode && r.cell.poi_count.is_none_or(|p| p == k))
                .filter_map(|r| {
                    let fps = BASE_FPS / r.cell.decimation as f64;
                    r.stat(|m| m.owta).map(|(mean, _)| (fps, 100.0 * mean))
                })
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            (mode.name().to_string(), pts)
        })
        .collect();
    svg::line_chart("OWTA vs frame rate", "frames per second", "OWTA", &series)
}

fn poi_chart(cfg: &RunConfig, results: &[CellResult]) -> String {
    let series: Vec<(String, Vec<(f64, f64)>)> = cfg
        .suite
        .decimation
        .iter()
        .map(|&d| {
            let pts = results
                .iter()
                .filter(|r| r.cell.mode == PipelineMode::Finenet && r.cell.decimation == d)
                .filter_map(|r| {
                    let k = r.cell.poi_count? as f64;
                    r.stat(|m| m.idf1).map(|(mean, _)| (k, 100.0 * mean))
                })
                .collect();
            (format!("finenet, {:.2} fps", BASE_FPS / d as f64), pts)
        })
        .collect();
    svg::line_chart("IDF1 vs POI count", "POIs per Net", "IDF1", &series)
}
