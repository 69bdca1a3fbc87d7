use std::path::{Path, PathBuf};
use std::time::Instant;

use finenet::io::{self, RunConfig};
use finenet::metrics::{
    dynamicity_report, evaluate, metrics_csv, metrics_markdown, DynamicityReport, MetricsReport, SequenceCounts,
    SummaryRow,
};
use finenet::pipeline::{track_sequence, PipelineMode, RunReport, TrackingResult};
use finenet::points::{Binding, FileTracker, OracleNoiseConfig, OracleTracker, PointTracker};
use finenet::simulator::{generate, read_bundle, write_bundle, ScenarioConfig, GT_FILE};
use finenet::{mix_seed, SequenceBundle};
use rayon::prelude::*;
use serde::Serialize;

use crate::{echo_config, name_hash, pool, svg, write_file, CliError, CliResult};

/// Scenario config for the `k`-th sequence of the suite.
pub fn scenario_for(cfg: &RunConfig, k: usize) -> ScenarioConfig {
    ScenarioConfig {
        seed: cfg.suite.seed(k),
        ..cfg.simulator.clone()
    }
}

#[derive(Debug, Serialize)]
struct ManifestEntry {
    name: String,
    seed: u64,
    frames: usize,
    objects: usize,
    detections: usize,
}

#[derive(Debug, Serialize)]
struct Manifest {
    base_seed: u64,
    sequences: Vec<ManifestEntry>,
}

/// Generate `suite.seeds` sequences into `out/<name>/`, plus `manifest.json`.
pub fn simulate(cfg: &RunConfig, out: &Path, jobs: usize) -> CliResult<Vec<PathBuf>> {
    let start = Instant::now();
    let bundles: Vec<SequenceBundle> = pool(jobs)?.install(|| {
        (0..cfg.suite.seeds)
            .into_par_iter()
            .map(|k| generate(&scenario_for(cfg, k)).map_err(|e| CliError::Config(e.to_string())))
            .collect::<CliResult<_>>()
    })?;
    let mut dirs = Vec::new();
    let mut entries = Vec::new();
    for b in &bundles {
        let dir = out.join(&b.name);
        write_bundle(&dir, b)?;
        dirs.push(dir);
        entries.push(ManifestEntry {
            name: b.name.clone(),
            seed: b.seed,
            frames: b.num_frames(),
            objects: cfg.simulator.n_objects,
            detections: b.detections.iter().map(Vec::len).sum(),
        });
    }
    let manifest = Manifest {
        base_seed: cfg.suite.base_seed,
        sequences: entries,
    };
    write_file(&out.join("manifest.json"), to_json(&manifest)?)?;
    echo_config(out, cfg)?;
    eprintln!("simulate: {} sequences in {:.2?}", bundles.len(), start.elapsed());
    Ok(dirs)
}

fn to_json<T: Serialize>(v: &T) -> CliResult<String> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Internal(e.to_string()))
}

/// Sequence directories under `dir`: `dir` itself when it holds `marker`,
/// otherwise its sorted subdirectories that do.
pub fn discover(dir: &Path, marker: &str) -> CliResult<Vec<PathBuf>> {
    if dir.join(marker).is_file() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let read = std::fs::read_dir(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    let mut dirs: Vec<PathBuf> = read
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.join(marker).is_file())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no sequence found (expected {marker} in it or in a subdirectory)",
            dir.display()
        )));
    }
    Ok(dirs)
}

/// Oracle noise for one sequence: the configured noise with a seed derived
/// from the sequence name.
pub fn oracle_noise(cfg: &RunConfig, name: &str) -> OracleNoiseConfig {
    OracleNoiseConfig {
        seed: mix_seed(&[cfg.oracle.seed, name_hash(name)]),
        ..cfg.oracle
    }
}

/// Track one bundle. In finenet mode the point tracker is the file tracker
/// when `points` is given, otherwise the pose oracle.
pub fn track_bundle(
    bundle: &SequenceBundle,
    cfg: &RunConfig,
    mode: PipelineMode,
    points: Option<&Path>,
) -> CliResult<TrackingResult> {
    let pcfg = finenet::pipeline::PipelineConfig {
        mode,
        ..cfg.pipeline_config()
    };
    let needs_points = mode == PipelineMode::Finenet && pcfg.stride > 1;
    let file_tracker;
    let oracle;
    let tracker: Option<&dyn PointTracker> = if !needs_points {
        None
    } else if let Some(p) = points {
        file_tracker = FileTracker::from_path(p, cfg.pipeline.snap_radius)?;
        Some(&file_tracker)
    } else if bundle.poses.iter().any(|f| !f.is_empty()) {
        oracle = OracleTracker {
            poses: &bundle.poses,
            noise: oracle_noise(cfg, &bundle.name),
            binding: Binding::ByPosition,
        };
        Some(&oracle)
    } else {
        return Err(CliError::Data(format!(
            "sequence '{}': finenet mode needs point trajectories. Either keep poses.csv in the \
             sequence directory (oracle point tracker) or pass --points DIR with {}.csv in it",
            bundle.name, bundle.name
        )));
    };
    track_sequence(&bundle.detections, tracker, &pcfg).map_err(|e| CliError::Internal(e.to_string()))
}

#[derive(Debug, Serialize)]
struct SequenceRun {
    name: String,
    #[serde(flatten)]
    report: RunReport,
}

#[derive(Debug, Serialize)]
struct TrackReport {
    mode: String,
    sequences: Vec<SequenceRun>,
}

/// Track every sequence under `input`, writing `out/<name>.txt`.
pub fn track(
    cfg: &RunConfig,
    input: &Path,
    mode: PipelineMode,
    points_dir: Option<&Path>,
    out: &Path,
    jobs: usize,
) -> CliResult<()> {
    let start = Instant::now();
    let dirs = discover(input, finenet::simulator::DET_FILE)?;
    let results: Vec<(String, TrackingResult)> = pool(jobs)?.install(|| {
        dirs.par_iter()
            .map(|dir| {
                let bundle = read_bundle(dir)?;
                let points = points_dir.map(|p| p.join(format!("{}.csv", bundle.name)));
                let r = track_bundle(&bundle, cfg, mode, points.as_deref())?;
                Ok((bundle.name, r))
            })
            .collect::<CliResult<_>>()
    })?;
    std::fs::create_dir_all(out).map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
    let mut sequences = Vec::new();
    for (name, r) in results {
        let rows = io::frames_to_rows(&r.frames);
        io::write_mot(&out.join(format!("{name}.txt")), &rows)?;
        sequences.push(SequenceRun { name, report: r.report });
    }
    let fallbacks: usize = sequences.iter().map(|s| s.report.fallbacks.len()).sum();
    let report = TrackReport {
        mode: mode.name().to_string(),
        sequences,
    };
    write_file(&out.join("report.json"), to_json(&report)?)?;
    echo_config(out, cfg)?;
    eprintln!(
        "track: {} sequences ({mode}) in {:.2?}, {fallbacks} stride fallbacks",
        dirs.len(),
        start.elapsed()
    );
    Ok(())
}

/// Evaluate `results/<name>.txt` against every `gt/<name>/gt.txt`.
/// Sequences without results are scored as all misses and flagged.
pub fn eval(cfg: &RunConfig, gt_dir: &Path, results: &Path, out: &Path, jobs: usize) -> CliResult<Vec<SummaryRow>> {
    let start = Instant::now();
    let dirs = discover(gt_dir, GT_FILE)?;
    let alphas = cfg.metrics.alphas.clone();
    let scored: Vec<(String, SequenceCounts, Option<String>)> = pool(jobs)?.install(|| {
        dirs.par_iter()
            .map(|dir| {
                let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                let gt_rows = io::read_mot(&dir.join(GT_FILE))?;
                let res_path = results.join(format!("{name}.txt"));
                let (pred_rows, note) = if res_path.is_file() {
                    (io::read_mot(&res_path)?, None)
                } else {
                    (Vec::new(), Some("missing results".to_string()))
                };
                let n = gt_rows
                    .iter()
                    .chain(&pred_rows)
                    .map(|r| r.frame as usize)
                    .max()
                    .unwrap_or(0);
                let gt = io::rows_to_frames(&gt_rows, n);
                let pred = io::rows_to_frames(&pred_rows, n);
                Ok((name, evaluate(&gt, &pred, &alphas), note))
            })
            .collect::<CliResult<_>>()
    })?;
    let mut rows: Vec<SummaryRow> = scored
        .iter()
        .map(|(name, c, note)| SummaryRow {
            name: name.clone(),
            report: MetricsReport::from_counts(c),
            note: note.clone(),
        })
        .collect();
    if rows.len() > 1 {
        rows.push(SummaryRow {
            name: "COMBINED".to_string(),
            report: MetricsReport::from_counts(&SequenceCounts::combine(scored.iter().map(|s| &s.1))),
            note: None,
        });
    }
    write_file(&out.join("metrics.csv"), metrics_csv(&rows))?;
    write_file(&out.join("metrics.md"), metrics_markdown(&rows))?;
    echo_config(out, cfg)?;
    eprintln!("eval: {} sequences in {:.2?}", dirs.len(), start.elapsed());
    Ok(rows)
}

/// Dynamicity attributes over all ground truth under `gt_dir`.
pub fn attrs(cfg: &RunConfig, gt_dir: &Path, out: &Path) -> CliResult<DynamicityReport> {
    let dirs = discover(gt_dir, GT_FILE)?;
    // sequences are joined with an empty frame in between so no pair spans two
    let mut joined = Vec::new();
    for dir in &dirs {
        let rows = io::read_mot(&dir.join(GT_FILE))?;
        let n = rows.iter().map(|r| r.frame as usize).max().unwrap_or(0);
        joined.extend(io::rows_to_frames(&rows, n));
        joined.push(Vec::new());
    }
    let report = dynamicity_report(&joined);
    write_file(&out.join("attrs.csv"), attrs_csv(&report))?;
    write_file(&out.join("attrs.svg"), svg::histogram_panels("GT dynamicity", &report))?;
    echo_config(out, cfg)?;
    Ok(report)
}

pub fn attrs_csv(report: &DynamicityReport) -> String {
    let mut out = String::from("attribute,bin_lower,bin_upper,count,fraction\n");
    for (name, stats) in report.attributes() {
        let h = &stats.histogram;
        for (((lo, hi), count), frac) in h.edges().into_iter().zip(&h.counts).zip(h.normalized()) {
            let hi = if hi.is_finite() { format!("{hi:.1}") } else { "inf".to_string() };
            out.push_str(&format!("{name},{lo:.1},{hi},{count},{frac}\n"));
        }
    }
    out
}
