use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{is_header, parse_field, parse_finite, split_fields, IoError};
use crate::geometry::Point;
use crate::points::{PointSample, PointTrajectory};
use crate::sampler::NetOwner;
use crate::sequence::TrackId;

const FIELDS: [&str; 6] = ["track_id", "poi_index", "frame", "x", "y", "visible"];

/// Parse `track_id,poi_index,frame,x,y,visible` rows. Each `(track, poi)`
/// becomes one trajectory spanning its first to last listed frame; frames
/// missing in between are hidden.
pub fn read_point_tracks_from<R: Read>(reader: R) -> Result<Vec<PointTrajectory>, IoError> {
    let mut grouped: BTreeMap<(u64, usize), BTreeMap<u32, PointSample>> = BTreeMap::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| IoError::parse(lineno, e.to_string()))?;
        if line.trim().is_empty() || (lineno == 1 && is_header(&line, &FIELDS)) {
            continue;
        }
        let f = split_fields(&line, lineno, 6)?;
        let track: u64 = parse_field(f[0], "track_id", lineno)?;
        let poi: usize = parse_field(f[1], "poi_index", lineno)?;
        let frame: u32 = parse_field(f[2], "frame", lineno)?;
        if frame < 1 {
            return Err(IoError::parse(lineno, "frame must be >= 1"));
        }
        let x = parse_finite(f[3], "x", lineno)?;
        let y = parse_finite(f[4], "y", lineno)?;
        let visible = match f[5] {
            "1" => true,
            "0" => false,
            other => {
                return Err(IoError::parse(lineno, format!("field `visible` must be 0 or 1, got {other:?}")))
            }
        };
        let sample = PointSample {
            position: Some(Point::new(x, y)),
            visible,
        };
        if grouped
            .entry((track, poi))
            .or_default()
            .insert(frame, sample)
            .is_some()
        {
            return Err(IoError::parse(
                lineno,
                format!("duplicate row for track {track}, poi {poi}, frame {frame}"),
            ));
        }
    }
    Ok(grouped
        .into_iter()
        .map(|((track, poi), by_frame)| {
            let first = *by_frame.keys().next().expect("non-empty group");
            let last = *by_frame.keys().next_back().expect("non-empty group");
            let samples = (first..=last)
                .map(|f| by_frame.get(&f).copied().unwrap_or(PointSample::HIDDEN))
                .collect();
            PointTrajectory {
                owner: NetOwner::Track(TrackId(track)),
                poi_index: poi,
                first_frame: first,
                samples,
            }
        })
        .collect())
}

pub fn read_point_tracks(path: &Path) -> Result<Vec<PointTrajectory>, IoError> {
    let file = fs::File::open(path).map_err(|e| IoError::io(path, e))?;
    read_point_tracks_from(file)
}

/// One row per sample that carries a position. Only track-owned
/// trajectories can be written.
pub fn write_point_tracks_to<W: Write>(mut out: W, trajectories: &[PointTrajectory]) -> Result<(), IoError> {
    let wrap = |e: std::io::Error| IoError::Invalid(e.to_string());
    writeln!(out, "{}", FIELDS.join(",")).map_err(wrap)?;
    let mut sorted: Vec<&PointTrajectory> = trajectories.iter().collect();
    sorted.sort_by_key(|t| (t.owner, t.poi_index));
    for t in sorted {
        let id = t.track_id().ok_or_else(|| {
            IoError::Invalid(format!("trajectory owned by {:?} has no track id", t.owner))
        })?;
        for (offset, s) in t.samples.iter().enumerate() {
            if let Some(p) = s.position {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    id,
                    t.poi_index,
                    t.first_frame + offset as u32,
                    p.x,
                    p.y,
                    u8::from(s.visible)
                )
                .map_err(wrap)?;
            }
        }
    }
    Ok(())
}

pub fn write_point_tracks(path: &Path, trajectories: &[PointTrajectory]) -> Result<(), IoError> {
    let mut buf = Vec::new();
    write_point_tracks_to(&mut buf, trajectories)?;
    fs::write(path, buf).map_err(|e| IoError::io(path, e))
}
