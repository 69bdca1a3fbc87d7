//! File formats: MOT CSV, pose CSV, point-trajectory CSV and the layered run
//! configuration.
//!
//! MOT boxes are converted to corner form here and nowhere else.

mod config;
mod mot;
mod points_csv;
mod pose;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{
    parse_override, read_config, ConfigError, MetricsSection, PipelineMode, PipelineSection, RunConfig, SuiteConfig,
};
pub use mot::{
    detections_to_rows, frames_to_rows, read_mot, read_mot_from, rows_to_detections, rows_to_frames,
    write_mot, write_mot_to, MotRow,
};
pub use points_csv::{read_point_tracks, read_point_tracks_from, write_point_tracks, write_point_tracks_to};
pub use pose::{read_poses, read_poses_from, write_poses, write_poses_to};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

impl IoError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        IoError::Parse {
            line,
            message: message.into(),
        }
    }
}

/// Split a CSV line into trimmed fields, requiring exactly `arity` of them.
pub(crate) fn split_fields(line: &str, lineno: usize, arity: usize) -> Result<Vec<&str>, IoError> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != arity {
        return Err(IoError::parse(
            lineno,
            format!("expected {arity} fields, found {}", fields.len()),
        ));
    }
    Ok(fields)
}

pub(crate) fn parse_field<T: std::str::FromStr>(
    field: &str,
    name: &str,
    lineno: usize,
) -> Result<T, IoError> {
    field
        .parse()
        .map_err(|_| IoError::parse(lineno, format!("field `{name}`: cannot parse {field:?}")))
}

pub(crate) fn parse_finite(field: &str, name: &str, lineno: usize) -> Result<f64, IoError> {
    let v: f64 = parse_field(field, name, lineno)?;
    if !v.is_finite() {
        return Err(IoError::parse(lineno, format!("field `{name}` is not finite")));
    }
    Ok(v)
}

pub(crate) fn is_header(line: &str, names: &[&str]) -> bool {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    fields == names
}
