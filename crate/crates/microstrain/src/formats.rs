//! On-disk formats for flow fields, feature matrices and evaluation results.

use std::fs;
use std::io::Write;
use std::path::Path;

use microstrain_core::eval::{ConfusionMatrix, EvalReport};
use microstrain_core::{FeatureVector, FlowField, Grid};

use crate::error::{io_err, Error, Result};

/// Flow file: `u32` width and height (little endian), then the `p` plane
/// and the `q` plane as row-major little-endian `f32`.
pub fn encode_flow(flow: &FlowField) -> Vec<u8> {
    let (w, h) = flow.dims();
    let mut out = Vec::with_capacity(8 + 8 * w * h);
    out.extend_from_slice(&(w as u32).to_le_bytes());
    out.extend_from_slice(&(h as u32).to_le_bytes());
    for plane in [flow.p(), flow.q()] {
        for v in plane.data() {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_flow(bytes: &[u8]) -> Result<FlowField> {
    let word = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
    if bytes.len() < 8 {
        return Err(Error::FlowFile("truncated header".into()));
    }
    let (w, h) = (word(0) as usize, word(1) as usize);
    if bytes.len() != 8 + 8 * w * h {
        return Err(Error::FlowFile(format!(
            "expected {} bytes for {w}x{h}, found {}",
            8 + 8 * w * h,
            bytes.len()
        )));
    }
    let plane = |k: usize| -> Result<Grid> {
        let data = (0..w * h).map(|i| f64::from(f32::from_bits(word(2 + k * w * h + i)))).collect();
        Ok(Grid::new(w, h, data)?)
    };
    Ok(FlowField::new(plane(0)?, plane(1)?)?)
}

pub fn write_flow(flow: &FlowField, path: &Path) -> Result<()> {
    fs::write(path, encode_flow(flow)).map_err(io_err(path))
}

pub fn read_flow(path: &Path) -> Result<FlowField> {
    decode_flow(&fs::read(path).map_err(io_err(path))?)
}

/// Feature matrix as CSV: `video_id,subject_id,label,f0,f1,...`. Values are
/// written in shortest round-trip form, so reading restores them exactly.
pub fn features_to_csv(rows: &[FeatureVector]) -> Result<Vec<u8>> {
    let dim = rows.first().map_or(0, FeatureVector::len);
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::FeatureFile("rows differ in length".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["video_id".to_string(), "subject_id".into(), "label".into()];
    header.extend((0..dim).map(|i| format!("f{i}")));
    w.write_record(&header)?;
    for r in rows {
        let mut row = vec![r.video_id.clone(), r.subject_id.clone(), r.label.clone()];
        row.extend(r.values.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::FeatureFile(e.to_string()))
}

pub fn features_from_csv(bytes: &[u8]) -> Result<Vec<FeatureVector>> {
    let mut reader = csv::Reader::from_reader(bytes);
    let headers = reader.headers()?.clone();
    if headers.len() < 3 || &headers[0] != "video_id" || &headers[1] != "subject_id" || &headers[2] != "label" {
        return Err(Error::FeatureFile("header must start with video_id,subject_id,label".into()));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let values = record
            .iter()
            .skip(3)
            .map(|s| s.parse::<f64>().map_err(|_| Error::FeatureFile(format!("bad value {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(FeatureVector::new(&record[0], &record[1], &record[2], values));
    }
    Ok(rows)
}

pub fn write_features(rows: &[FeatureVector], path: &Path) -> Result<()> {
    fs::write(path, features_to_csv(rows)?).map_err(io_err(path))
}

pub fn read_features(path: &Path) -> Result<Vec<FeatureVector>> {
    features_from_csv(&fs::read(path).map_err(io_err(path))?)
}

/// Rows are actual classes, columns predicted classes.
pub fn confusion_to_csv(cm: &ConfusionMatrix) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["actual\\predicted".to_string()];
    header.extend(cm.classes.iter().cloned());
    w.write_record(&header)?;
    for (class, counts) in cm.classes.iter().zip(&cm.counts) {
        let mut row = vec![class.clone()];
        row.extend(counts.iter().map(u64::to_string));
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::FeatureFile(e.to_string()))
}

pub fn predictions_to_csv(report: &EvalReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["fold", "held_out", "video_id", "subject_id", "actual", "predicted"])?;
    for p in &report.predictions {
        let held = report.folds.get(p.fold).map_or("", |f| f.held_out.as_str());
        w.write_record([&p.fold.to_string(), held, &p.video_id, &p.subject_id, &p.actual, &p.predicted])?;
    }
    w.into_inner().map_err(|e| Error::FeatureFile(e.to_string()))
}

pub fn report_to_json(report: &EvalReport) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(report)?;
    out.write_all(b"\n").expect("writing to a Vec cannot fail");
    Ok(out)
}

pub fn read_report(path: &Path) -> Result<EvalReport> {
    Ok(serde_json::from_slice(&fs::read(path).map_err(io_err(path))?)?)
}
