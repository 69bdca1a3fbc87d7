use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{is_header, parse_field, parse_finite, split_fields, IoError};
use crate::sequence::Pose;

const FIELDS: [&str; 7] = ["frame", "track_id", "cx", "cy", "w", "h", "visibility"];

/// Read `frame,track_id,cx,cy,w,h,visibility` rows into per-frame poses.
pub fn read_poses_from<R: Read>(reader: R, num_frames: usize) -> Result<Vec<Vec<Pose>>, IoError> {
    let mut frames: Vec<Vec<Pose>> = vec![Vec::new(); num_frames];
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| IoError::parse(lineno, e.to_string()))?;
        if line.trim().is_empty() || (lineno == 1 && is_header(&line, &FIELDS)) {
            continue;
        }
        let f = split_fields(&line, lineno, 7)?;
        let frame: u32 = parse_field(f[0], "frame", lineno)?;
        if frame < 1 {
            return Err(IoError::parse(lineno, "frame must be >= 1"));
        }
        let pose = Pose {
            id: parse_field(f[1], "track_id", lineno)?,
            cx: parse_finite(f[2], "cx", lineno)?,
            cy: parse_finite(f[3], "cy", lineno)?,
            w: parse_finite(f[4], "w", lineno)?,
            h: parse_finite(f[5], "h", lineno)?,
            visibility: parse_finite(f[6], "visibility", lineno)?,
        };
        if !(0.0..=1.0).contains(&pose.visibility) {
            return Err(IoError::parse(lineno, "visibility outside [0, 1]"));
        }
        let idx = frame as usize - 1;
        if frames.len() <= idx {
            frames.resize_with(idx + 1, Vec::new);
        }
        if frames[idx].iter().any(|p| p.id == pose.id) {
            return Err(IoError::parse(
                lineno,
                format!("duplicate pose for track {} in frame {frame}", pose.id),
            ));
        }
        frames[idx].push(pose);
    }
    Ok(frames)
}

pub fn read_poses(path: &Path, num_frames: usize) -> Result<Vec<Vec<Pose>>, IoError> {
    let file = fs::File::open(path).map_err(|e| IoError::io(path, e))?;
    read_poses_from(file, num_frames)
}

/// Writes a header row, then poses ordered by frame and id.
pub fn write_poses_to<W: Write>(mut out: W, poses: &[Vec<Pose>]) -> std::io::Result<()> {
    writeln!(out, "{}", FIELDS.join(","))?;
    for (i, frame) in poses.iter().enumerate() {
        let mut sorted: Vec<&Pose> = frame.iter().collect();
        sorted.sort_by_key(|p| p.id);
        for p in sorted {
            writeln!(out, "{},{},{},{},{},{},{}", i + 1, p.id, p.cx, p.cy, p.w, p.h, p.visibility)?;
        }
    }
    Ok(())
}

pub fn write_poses(path: &Path, poses: &[Vec<Pose>]) -> Result<(), IoError> {
    let mut buf = Vec::new();
    write_poses_to(&mut buf, poses).map_err(|e| IoError::io(path, e))?;
    fs::write(path, buf).map_err(|e| IoError::io(path, e))
}
