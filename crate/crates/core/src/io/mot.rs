use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{parse_field, parse_finite, split_fields, IoError};
use crate::geometry::BBox;
use crate::sequence::{Detection, FrameBoxes, TrackBox};

/// One line of a MOT file:
/// `frame,id,bb_left,bb_top,bb_width,bb_height,conf,class,visibility`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotRow {
    pub frame: u32,
    /// `-1` for raw detections.
    pub id: i64,
    pub bb_left: f64,
    pub bb_top: f64,
    pub bb_width: f64,
    pub bb_height: f64,
    pub conf: f64,
    pub class_id: i32,
    pub visibility: f64,
}

impl MotRow {
    pub fn bbox(&self) -> BBox {
        BBox::from_ltwh(self.bb_left, self.bb_top, self.bb_width, self.bb_height)
    }

    fn parse(line: &str, lineno: usize) -> Result<Self, IoError> {
        let f = split_fields(line, lineno, 9)?;
        let frame: u32 = parse_field(f[0], "frame", lineno)?;
        if frame < 1 {
            return Err(IoError::parse(lineno, "frame must be >= 1"));
        }
        let row = MotRow {
            frame,
            id: parse_field(f[1], "id", lineno)?,
            bb_left: parse_finite(f[2], "bb_left", lineno)?,
            bb_top: parse_finite(f[3], "bb_top", lineno)?,
            bb_width: parse_finite(f[4], "bb_width", lineno)?,
            bb_height: parse_finite(f[5], "bb_height", lineno)?,
            conf: parse_finite(f[6], "conf", lineno)?,
            class_id: parse_field(f[7], "class", lineno)?,
            visibility: parse_finite(f[8], "visibility", lineno)?,
        };
        if row.bb_width < 0.0 || row.bb_height < 0.0 {
            return Err(IoError::parse(lineno, "negative box size"));
        }
        Ok(row)
    }
}

pub fn read_mot_from<R: Read>(reader: R) -> Result<Vec<MotRow>, IoError> {
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| IoError::parse(lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(MotRow::parse(&line, lineno)?);
    }
    Ok(rows)
}

pub fn read_mot(path: &Path) -> Result<Vec<MotRow>, IoError> {
    let file = fs::File::open(path).map_err(|e| IoError::io(path, e))?;
    read_mot_from(file)
}

/// Writes rows sorted by `(frame, id)`; floats use the shortest
/// representation that parses back to the same value.
pub fn write_mot_to<W: Write>(mut out: W, rows: &[MotRow]) -> std::io::Result<()> {
    let mut sorted = rows.to_vec();
    sorted.sort_by_key(|r| (r.frame, r.id));
    for r in &sorted {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.frame, r.id, r.bb_left, r.bb_top, r.bb_width, r.bb_height, r.conf, r.class_id, r.visibility
        )?;
    }
    Ok(())
}

pub fn write_mot(path: &Path, rows: &[MotRow]) -> Result<(), IoError> {
    let mut buf = Vec::new();
    write_mot_to(&mut buf, rows).map_err(|e| IoError::io(path, e))?;
    fs::write(path, buf).map_err(|e| IoError::io(path, e))
}

fn frame_slot<T>(frames: &mut Vec<Vec<T>>, frame: u32) -> &mut Vec<T> {
    let idx = frame as usize - 1;
    if frames.len() <= idx {
        frames.resize_with(idx + 1, Vec::new);
    }
    &mut frames[idx]
}

/// Group identified rows per frame. `num_frames` pads the tail with empty
/// frames when the sequence is longer than its last annotated frame.
pub fn rows_to_frames(rows: &[MotRow], num_frames: usize) -> FrameBoxes {
    let mut frames: FrameBoxes = vec![Vec::new(); num_frames];
    for r in rows {
        frame_slot(&mut frames, r.frame).push(TrackBox {
            id: r.id as u64,
            bbox: r.bbox(),
            score: r.conf,
            class_id: r.class_id,
            visibility: r.visibility,
        });
    }
    frames
}

pub fn rows_to_detections(rows: &[MotRow], num_frames: usize) -> Vec<Vec<Detection>> {
    let mut frames: Vec<Vec<Detection>> = vec![Vec::new(); num_frames];
    for r in rows {
        frame_slot(&mut frames, r.frame).push(Detection::new(r.bbox(), r.conf, r.class_id));
    }
    frames
}

pub fn frames_to_rows(frames: &FrameBoxes) -> Vec<MotRow> {
    frames
        .iter()
        .enumerate()
        .flat_map(|(i, boxes)| {
            boxes.iter().map(move |b| MotRow {
                frame: i as u32 + 1,
                id: b.id as i64,
                bb_left: b.bbox.x1,
                bb_top: b.bbox.y1,
                bb_width: b.bbox.width(),
                bb_height: b.bbox.height(),
                conf: b.score,
                class_id: b.class_id,
                visibility: b.visibility,
            })
        })
        .collect()
}

pub fn detections_to_rows(frames: &[Vec<Detection>]) -> Vec<MotRow> {
    frames
        .iter()
        .enumerate()
        .flat_map(|(i, dets)| {
            dets.iter().map(move |d| MotRow {
                frame: i as u32 + 1,
                id: -1,
                bb_left: d.bbox.x1,
                bb_top: d.bbox.y1,
                bb_width: d.bbox.width(),
                bb_height: d.bbox.height(),
                conf: d.score,
                class_id: d.class_id,
                visibility: 1.0,
            })
        })
        .collect()
}
