//! Optical strain features (OSF).
//!
//! Strain maps of consecutive frame pairs are cleaned (vertical edges
//! suppressed, then magnitudes clipped per horizontal band), averaged over
//! time into a composite map, max-normalized, resized to 50×50 and flattened
//! row by row into a 2500-value vector.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::features::{FeatureConfig, FeatureVector};
use crate::image::{resize_bilinear, sobel_vertical, Frame, FrameSequence, Grid};
use crate::strain::{strain_sequence, StrainMap};

/// Side of the resized composite map.
pub const OSF_SIDE: usize = 50;
/// Length of an OSF vector.
pub const OSF_LEN: usize = OSF_SIDE * OSF_SIDE;

/// Clipping window of one band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipThresholds {
    pub t_lower: f64,
    pub t_upper: f64,
    pub rho_lower: f64,
    pub rho_upper: f64,
    pub eps_min: f64,
    pub eps_max: f64,
}

impl ClipThresholds {
    pub fn new(eps_min: f64, eps_max: f64, rho_lower: f64, rho_upper: f64) -> Self {
        let range = eps_max - eps_min;
        Self {
            t_lower: eps_min + rho_lower * range,
            t_upper: eps_max - rho_upper * range,
            rho_lower,
            rho_upper,
            eps_min,
            eps_max,
        }
    }

    #[inline]
    pub fn keeps(&self, value: f64) -> bool {
        value >= self.t_lower && value <= self.t_upper
    }
}

/// Row ranges of the three horizontal bands; the last band takes remainder rows.
pub fn band_rows(height: usize) -> [(usize, usize); 3] {
    let h = height / 3;
    [(0, h), (h, 2 * h), (2 * h, height)]
}

/// Linearly interpolated quantile of an ascending slice.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Zeroes strain wherever the vertical-Sobel response of `source` reaches the
/// `edge_quantile` quantile of its nonzero responses.
pub fn suppress_vertical_edges(strain: &StrainMap, source: &Grid, edge_quantile: f64) -> Result<StrainMap> {
    if !(edge_quantile > 0.0 && edge_quantile < 1.0) {
        return Err(Error::InvalidParameter("edge quantile must be in (0, 1)"));
    }
    strain.magnitude.ensure_same_dims(source)?;
    let response = sobel_vertical(source)?;
    let mut nonzero: Vec<f64> = response.data().iter().copied().filter(|v| *v > 0.0).collect();
    let mut out = strain.clone();
    if nonzero.is_empty() {
        return Ok(out);
    }
    nonzero.sort_by(f64::total_cmp);
    let threshold = quantile_sorted(&nonzero, edge_quantile);
    let (w, h) = response.dims();
    for y in 0..h {
        for x in 0..w {
            if response.get(x, y) >= threshold {
                out.clear(x, y);
            }
        }
    }
    Ok(out)
}

/// Clip thresholds of each band of a magnitude grid.
pub fn band_thresholds(magnitude: &Grid, rho_l: f64, rho_u: f64) -> [ClipThresholds; 3] {
    let w = magnitude.width();
    band_rows(magnitude.height()).map(|(y0, y1)| {
        let band = &magnitude.data()[y0 * w..y1 * w];
        let lo = band.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = band.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        ClipThresholds::new(lo, hi, rho_l, rho_u)
    })
}

/// Sets magnitudes outside their band's `[T_l, T_u]` to zero.
pub fn clip_by_region(strain: &StrainMap, rho_l: f64, rho_u: f64) -> Result<StrainMap> {
    if !(0.0..=1.0).contains(&rho_l) || !(0.0..=1.0).contains(&rho_u) {
        return Err(Error::InvalidParameter("clip fractions must be in [0, 1]"));
    }
    let (w, h) = strain.dims();
    if h < 3 {
        return Err(Error::InvalidDimensions { width: w, height: h });
    }
    let thresholds = band_thresholds(&strain.magnitude, rho_l, rho_u);
    let mut out = strain.clone();
    for ((y0, y1), th) in band_rows(h).into_iter().zip(thresholds) {
        for y in y0..y1 {
            for x in 0..w {
                if !th.keeps(strain.magnitude.get(x, y)) {
                    out.clear(x, y);
                }
            }
        }
    }
    Ok(out)
}

/// Elementwise mean of the maps' magnitudes.
pub fn temporal_mean(maps: &[StrainMap]) -> Result<Grid> {
    let first = maps.first().ok_or(Error::Empty("strain maps"))?;
    let (w, h) = first.dims();
    let mut acc = Grid::zeros(w, h);
    for m in maps {
        acc.ensure_same_dims(&m.magnitude)?;
        for (a, v) in acc.data_mut().iter_mut().zip(m.magnitude.data()) {
            *a += v;
        }
    }
    let n = maps.len() as f64;
    Ok(acc.map(|v| v / n))
}

/// Divides by the maximum; an all-zero grid stays all-zero.
pub fn max_normalize(grid: &Grid) -> Grid {
    let max = grid.max();
    if max > 0.0 {
        grid.map(|v| v / max)
    } else {
        grid.clone()
    }
}

/// Edge suppression followed by band clipping, pairing map `j` with `sources[j]`.
pub fn preprocess_maps(maps: &[StrainMap], sources: &[Frame], cfg: &FeatureConfig) -> Result<Vec<StrainMap>> {
    maps.iter()
        .zip(sources)
        .map(|(m, src)| {
            let m = suppress_vertical_edges(m, src, cfg.edge_quantile)?;
            clip_by_region(&m, cfg.rho_l, cfg.rho_u)
        })
        .collect()
}

/// Composite map of already pre-processed strain maps, flattened to 2500 values.
///
/// The composite is max-normalized, resized, and normalized again so the
/// interpolated grid still peaks at exactly 1.
pub fn osf_from_maps(maps: &[StrainMap]) -> Result<Vec<f64>> {
    let composite = max_normalize(&temporal_mean(maps)?);
    let resized = resize_bilinear(&composite, OSF_SIDE, OSF_SIDE)?;
    Ok(max_normalize(&resized).into_data())
}

/// Frames feeding the OSF path, smoothed when configured.
pub(crate) fn osf_frames(seq: &FrameSequence, cfg: &FeatureConfig) -> Result<Vec<Frame>> {
    if cfg.gaussian_osf {
        Ok(seq.smoothed(cfg.gaussian_size, cfg.gaussian_sigma)?.frames().to_vec())
    } else {
        Ok(seq.frames().to_vec())
    }
}

pub fn osf_vector(seq: &FrameSequence, cfg: &FeatureConfig) -> Result<FeatureVector> {
    cfg.validate()?;
    let frames = osf_frames(seq, cfg)?;
    let maps = strain_sequence(&frames, &cfg.flow)?;
    let cleaned = preprocess_maps(&maps, &frames, cfg)?;
    Ok(FeatureVector::for_sequence(seq, osf_from_maps(&cleaned)?))
}
