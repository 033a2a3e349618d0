//! Reading frame directories into sequences.

use std::fs;
use std::path::{Path, PathBuf};

use microstrain_core::image::luma_from_rgb8;
use microstrain_core::{Frame, FrameSequence, Grid};

use crate::error::{io_err, Error, Result};
use crate::manifest::ManifestRecord;

const FRAME_EXTENSIONS: [&str; 6] = ["png", "pgm", "ppm", "pnm", "jpg", "jpeg"];

/// Image files of a directory in lexicographic order.
pub fn frame_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::MissingDirectory(dir.to_path_buf()));
    }
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        let known = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| FRAME_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        if known && path.is_file() {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

/// Decodes one image to luma in `[0, 1]`. Colour uses 0.299R + 0.587G + 0.114B.
pub fn load_frame(path: &Path) -> Result<Frame> {
    let decode = |source| Error::Decode {
        path: path.to_path_buf(),
        source,
    };
    let img = image::ImageReader::open(path)
        .map_err(io_err(path))?
        .with_guessed_format()
        .map_err(io_err(path))?
        .decode()
        .map_err(decode)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let grid = if img.color().has_color() {
        let rgb = img.to_rgb8();
        Grid::new(w, h, rgb.pixels().map(|p| luma_from_rgb8(p[0], p[1], p[2])).collect())?
    } else {
        let gray = img.to_luma8();
        Grid::new(w, h, gray.as_raw().iter().map(|&v| f64::from(v) / 255.0).collect())?
    };
    Ok(Frame::from_grid_clamped(grid)?)
}

/// Loads the record's frames, restricted to `[onset, offset]` when given.
pub fn load_sequence(record: &ManifestRecord) -> Result<FrameSequence> {
    let dir = &record.frame_dir;
    let mut paths = frame_paths(dir)?;
    let end = record.offset.map_or(paths.len(), |o| (o + 1).min(paths.len()));
    let start = record.onset.unwrap_or(0).min(end);
    paths = paths[start..end].to_vec();
    if paths.len() < 2 {
        return Err(Error::SequenceTooShort {
            dir: dir.clone(),
            frames: paths.len(),
        });
    }
    let mut frames = Vec::with_capacity(paths.len());
    for path in &paths {
        let frame = load_frame(path)?;
        if let Some(first) = frames.first().map(|f: &Frame| f.dims()) {
            if frame.dims() != first {
                return Err(Error::FrameDimensionMismatch {
                    path: path.clone(),
                    expected: first,
                    found: frame.dims(),
                });
            }
        }
        frames.push(frame);
    }
    Ok(FrameSequence::new(&*record.video_id, &*record.subject_id, &*record.label, frames)?)
}

/// Writes a grid as an 8-bit grayscale PNG, values clamped to `[0, 1]`.
pub fn save_gray_png(grid: &Grid, path: &Path) -> Result<()> {
    let pixels = grid.data().iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    let img = image::GrayImage::from_raw(grid.width() as u32, grid.height() as u32, pixels).expect("buffer matches dimensions");
    img.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_pgm(path: &Path, w: u32, h: u32, value: u8) {
        image::GrayImage::from_pixel(w, h, image::Luma([value]))
            .save_with_format(path, image::ImageFormat::Pnm)
            .unwrap();
    }

    fn record(dir: &Path) -> ManifestRecord {
        ManifestRecord::new("v", "s", "a", dir)
    }

    #[test]
    fn identical_pgm_frames() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..10 {
            write_pgm(&dir.path().join(format!("f{i:02}.pgm")), 64, 64, 51);
        }
        let seq = load_sequence(&record(dir.path())).unwrap();
        assert_eq!(seq.len(), 10);
        assert!(seq.frames().iter().all(|f| f == &seq.frames()[0]));
        assert!((seq.frames()[0].get(3, 3) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn onset_offset_slice() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..6u8 {
            write_pgm(&dir.path().join(format!("f{i}.pgm")), 8, 8, i * 10);
        }
        let mut r = record(dir.path());
        r.onset = Some(1);
        r.offset = Some(3);
        let seq = load_sequence(&r).unwrap();
        assert_eq!(seq.len(), 3);
        assert!((seq.frames()[0].get(0, 0) - 10.0 / 255.0).abs() < 1e-12);
    }

    #[test]
    fn colour_uses_luma_weights() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.png");
        image::RgbImage::from_pixel(4, 4, image::Rgb([255, 0, 0])).save(&path).unwrap();
        assert!((load_frame(&path).unwrap().get(0, 0) - 0.299).abs() < 1e-12);
    }

    #[test]
    fn distinct_errors() {
        let dir = tempfile::tempdir().unwrap();
        let missing = record(&dir.path().join("nope"));
        assert!(matches!(load_sequence(&missing), Err(Error::MissingDirectory(_))));

        write_pgm(&dir.path().join("a.pgm"), 64, 64, 0);
        assert!(matches!(
            load_sequence(&record(dir.path())),
            Err(Error::SequenceTooShort { frames: 1, .. })
        ));

        write_pgm(&dir.path().join("b.pgm"), 32, 32, 0);
        assert!(matches!(
            load_sequence(&record(dir.path())),
            Err(Error::FrameDimensionMismatch { .. })
        ));

        let bad = tempfile::tempdir().unwrap();
        write_pgm(&bad.path().join("a.pgm"), 8, 8, 0);
        fs::write(bad.path().join("b.png"), b"not an image").unwrap();
        assert!(matches!(load_sequence(&record(bad.path())), Err(Error::Decode { .. })));
    }
}
