//! Dataset manifests: one record per video.
//!
//! Two encodings are accepted. A JSON file holds an array of records; any
//! other extension is read as CSV with the header
//! `video_id,subject_id,label,frame_dir[,onset,offset]`. Relative frame
//! directories resolve against the manifest's own directory.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub video_id: String,
    pub subject_id: String,
    pub label: String,
    pub frame_dir: PathBuf,
    /// First frame index to keep, counted in sorted file order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub onset: Option<usize>,
    /// Last frame index to keep, inclusive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<usize>,
}

impl ManifestRecord {
    pub fn new(
        video_id: impl Into<String>,
        subject_id: impl Into<String>,
        label: impl Into<String>,
        frame_dir: impl Into<PathBuf>,
    ) -> Self {
        Self {
            video_id: video_id.into(),
            subject_id: subject_id.into(),
            label: label.into(),
            frame_dir: frame_dir.into(),
            onset: None,
            offset: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetManifest {
    pub records: Vec<ManifestRecord>,
}

impl DatasetManifest {
    pub fn new(records: Vec<ManifestRecord>) -> Result<Self> {
        let manifest = Self { records };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Unique video ids, non-empty labels and ids, ordered onset/offset.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for r in &self.records {
            if r.video_id.is_empty() || r.subject_id.is_empty() {
                return Err(Error::Manifest("empty video_id or subject_id".into()));
            }
            if r.label.is_empty() {
                return Err(Error::Manifest(format!("video {} has an empty label", r.video_id)));
            }
            if !seen.insert(r.video_id.as_str()) {
                return Err(Error::Manifest(format!("duplicate video_id {}", r.video_id)));
            }
            if let (Some(on), Some(off)) = (r.onset, r.offset) {
                if off < on {
                    return Err(Error::Manifest(format!("video {}: offset before onset", r.video_id)));
                }
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut records: Vec<ManifestRecord> = if is_json(path) {
            serde_json::from_str(&text)?
        } else {
            parse_csv(&text)?
        };
        let base = path.parent().unwrap_or(Path::new(""));
        for r in &mut records {
            if r.frame_dir.is_relative() {
                r.frame_dir = base.join(&r.frame_dir);
            }
        }
        Self::new(records)
    }

    /// Writes the manifest in the encoding implied by the extension.
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = if is_json(path) {
            serde_json::to_string_pretty(&self.records)? + "\n"
        } else {
            self.to_csv()?
        };
        fs::write(path, text).map_err(io_err(path))
    }

    pub fn to_csv(&self) -> Result<String> {
        let with_range = self.records.iter().any(|r| r.onset.is_some() || r.offset.is_some());
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["video_id", "subject_id", "label", "frame_dir"];
        if with_range {
            header.extend(["onset", "offset"]);
        }
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![
                r.video_id.clone(),
                r.subject_id.clone(),
                r.label.clone(),
                r.frame_dir.to_string_lossy().into_owned(),
            ];
            if with_range {
                row.push(r.onset.map(|v| v.to_string()).unwrap_or_default());
                row.push(r.offset.map(|v| v.to_string()).unwrap_or_default());
            }
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Manifest(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn parse_csv(text: &str) -> Result<Vec<ManifestRecord>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let required = ["video_id", "subject_id", "label", "frame_dir"];
    let column = |name: &str| headers.iter().position(|h| h == name);
    let mut idx = [0; 4];
    for (slot, name) in idx.iter_mut().zip(required) {
        *slot = column(name).ok_or_else(|| Error::Manifest(format!("missing column {name}")))?;
    }
    let onset = column("onset");
    let offset = column("offset");
    let optional = |row: &csv::StringRecord, col: Option<usize>| -> Result<Option<usize>> {
        match col.and_then(|c| row.get(c)).filter(|s| !s.is_empty()) {
            None => Ok(None),
            Some(s) => s.parse().map(Some).map_err(|_| Error::Manifest(format!("bad frame index {s:?}"))),
        }
    };
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let field = |k: usize| row.get(idx[k]).unwrap_or("").to_string();
        records.push(ManifestRecord {
            video_id: field(0),
            subject_id: field(1),
            label: field(2),
            frame_dir: PathBuf::from(field(3)),
            onset: optional(&row, onset)?,
            offset: optional(&row, offset)?,
        });
    }
    Ok(records)
}
