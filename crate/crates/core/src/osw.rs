//! Optical strain weighted (OSW) features.
//!
//! Strain magnitudes are mean-pooled per block and then over time into an
//! `N×N` weight matrix, which scales the XY-plane LBP-TOP histograms of the
//! matching blocks. XT and YT histograms pass through untouched.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::features::{FeatureConfig, FeatureVector};
use crate::image::{Frame, FrameSequence, Grid};
use crate::lbptop::{block_histograms, block_of, zero_noise_blocks, BlockHistogramSet, Plane};
use crate::osf::preprocess_maps;
use crate::strain::strain_sequence;

/// `N×N` row-major block values; entry `(b1, b2)` is block row `b1`, column `b2`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BlockGrid {
    n: usize,
    values: Vec<f64>,
}

impl BlockGrid {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || values.len() != n * n {
            return Err(Error::InvalidParameter("block grid must hold n*n values"));
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, b1: usize, b2: usize) -> f64 {
        self.values[b1 * self.n + b2]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Temporally pooled block strain: the OSW weights.
pub type WeightMatrix = BlockGrid;

/// Mean magnitude inside each block; remainder pixels belong to the last row/column.
pub fn spatial_pool(magnitude: &Grid, n: usize) -> Result<BlockGrid> {
    let (w, h) = magnitude.dims();
    if n == 0 || n > w || n > h {
        return Err(Error::InvalidParameter("block grid exceeds map dimensions"));
    }
    let mut sums = vec![0.0; n * n];
    let mut counts = vec![0usize; n * n];
    for y in 0..h {
        let b1 = block_of(y, h, n);
        for x in 0..w {
            let k = b1 * n + block_of(x, w, n);
            sums[k] += magnitude.get(x, y);
            counts[k] += 1;
        }
    }
    let values = sums.iter().zip(&counts).map(|(s, c)| s / *c as f64).collect();
    BlockGrid::new(n, values)
}

/// Entrywise mean of per-map block means.
pub fn temporal_pool(block_means: &[BlockGrid]) -> Result<WeightMatrix> {
    let first = block_means.first().ok_or(Error::Empty("block means"))?;
    let n = first.n;
    let mut acc = vec![0.0; n * n];
    for m in block_means {
        if m.n != n {
            return Err(Error::BlockGridMismatch { expected: n, found: m.n });
        }
        for (a, v) in acc.iter_mut().zip(&m.values) {
            *a += v;
        }
    }
    let len = block_means.len() as f64;
    BlockGrid::new(n, acc.into_iter().map(|v| v / len).collect())
}

/// Scales each block's XY histogram by its weight.
pub fn weight_xy_histograms(hists: &BlockHistogramSet, weights: &WeightMatrix) -> Result<BlockHistogramSet> {
    let n = hists.n_blocks();
    if weights.n != n {
        return Err(Error::BlockGridMismatch {
            expected: n,
            found: weights.n,
        });
    }
    let mut out = hists.clone();
    for b1 in 0..n {
        for b2 in 0..n {
            let w = weights.get(b1, b2);
            for v in out.hist_mut(b1, b2, Plane::Xy) {
                *v *= w;
            }
        }
    }
    Ok(out)
}

/// Frames feeding the OSW path, smoothed when configured.
fn osw_frames(seq: &FrameSequence, cfg: &FeatureConfig) -> Result<Vec<Frame>> {
    if cfg.gaussian_osw {
        Ok(seq.smoothed(cfg.gaussian_size, cfg.gaussian_sigma)?.frames().to_vec())
    } else {
        Ok(seq.frames().to_vec())
    }
}

/// Weight matrix of a sequence.
pub fn strain_weights(frames: &[Frame], cfg: &FeatureConfig) -> Result<WeightMatrix> {
    let mut maps = strain_sequence(frames, &cfg.flow)?;
    if cfg.osw_preprocess {
        maps = preprocess_maps(&maps, frames, cfg)?;
    }
    let pooled = maps
        .iter()
        .map(|m| spatial_pool(&m.magnitude, cfg.lbptop.n_blocks))
        .collect::<Result<Vec<_>>>()?;
    temporal_pool(&pooled)
}

pub fn osw_histograms(seq: &FrameSequence, cfg: &FeatureConfig) -> Result<BlockHistogramSet> {
    cfg.validate()?;
    let frames = osw_frames(seq, cfg)?;
    let hists = zero_noise_blocks(block_histograms(&frames, &cfg.lbptop)?, cfg.noise_blocks)?;
    let weights = strain_weights(&frames, cfg)?;
    weight_xy_histograms(&hists, &weights)
}

/// Flattened in `(b1, b2, plane, bin)` order.
pub fn osw_vector(seq: &FrameSequence, cfg: &FeatureConfig) -> Result<FeatureVector> {
    Ok(FeatureVector::for_sequence(seq, osw_histograms(seq, cfg)?.into_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lbptop::LbpTopParams;

    #[test]
    fn spatial_pool_examples() {
        let u = Grid::filled(13, 11, 0.3);
        for n in 1..=5 {
            assert!(spatial_pool(&u, n).unwrap().values().iter().all(|v| (v - 0.3).abs() < 1e-12));
        }
        let q = Grid::from_fn(10, 10, |x, y| if x < 5 && y < 5 { 1.0 } else { 0.0 });
        assert_eq!(spatial_pool(&q, 2).unwrap().values(), &[1.0, 0.0, 0.0, 0.0]);
        assert!(spatial_pool(&q, 11).is_err());
    }

    #[test]
    fn temporal_pool_examples() {
        let a = BlockGrid::new(2, vec![0.2, 0.1, 0.0, 0.5]).unwrap();
        assert_eq!(temporal_pool(core::slice::from_ref(&a)).unwrap(), a);
        let b = BlockGrid::new(2, vec![0.4, 0.1, 0.0, 0.5]).unwrap();
        assert!((temporal_pool(&[a.clone(), b]).unwrap().get(0, 0) - 0.3).abs() < 1e-15);
        assert!(temporal_pool(&[]).is_err());
        let c = BlockGrid::new(3, vec![0.0; 9]).unwrap();
        assert!(matches!(temporal_pool(&[a, c]), Err(Error::BlockGridMismatch { .. })));
    }

    #[test]
    fn weighting_branches() {
        let data: Vec<f64> = (0..2 * 2 * 3 * 4).map(|i| (i % 4) as f64 * 0.25).collect();
        let hists = BlockHistogramSet::from_vec(2, 4, data).unwrap();

        let ones = BlockGrid::new(2, vec![1.0; 4]).unwrap();
        assert_eq!(weight_xy_histograms(&hists, &ones).unwrap(), hists);

        let w = BlockGrid::new(2, vec![0.0, 1.0, 1.0, 1.0]).unwrap();
        let out = weight_xy_histograms(&hists, &w).unwrap();
        assert!(out.hist(0, 0, Plane::Xy).iter().all(|v| *v == 0.0));
        assert_eq!(out.hist(0, 0, Plane::Xt), hists.hist(0, 0, Plane::Xt));
        assert_eq!(out.hist(0, 0, Plane::Yt), hists.hist(0, 0, Plane::Yt));

        let wrong = BlockGrid::new(3, vec![1.0; 9]).unwrap();
        assert!(weight_xy_histograms(&hists, &wrong).is_err());
    }

    #[test]
    fn static_sequence_zeroes_xy() {
        let f = Frame::from_grid(Grid::from_fn(20, 20, |x, y| ((x * 5 + y * 3) % 7) as f64 / 7.0)).unwrap();
        let seq = FrameSequence::new("v", "s", "a", vec![f; 10]).unwrap();
        let cfg = FeatureConfig {
            lbptop: LbpTopParams {
                bins_per_plane: 16,
                ..LbpTopParams::default()
            },
            ..FeatureConfig::default()
        };
        let set = osw_histograms(&seq, &cfg).unwrap();
        assert_eq!(set.len(), 5 * 5 * 3 * 16);
        for b1 in 0..5 {
            for b2 in 0..5 {
                assert!(set.hist(b1, b2, Plane::Xy).iter().all(|v| *v == 0.0));
                // Temporal neighbours (bits 1 and 3) equal the centre in a
                // static volume, so only codes with both bits set occur.
                for plane in [Plane::Xt, Plane::Yt] {
                    let hist = set.hist(b1, b2, plane);
                    let mass: f64 = [10, 11, 14, 15].iter().map(|&c| hist[c]).sum();
                    assert!((mass - 1.0).abs() < 1e-12);
                }
            }
        }

        let flat = Frame::constant(20, 20, 0.6).unwrap();
        let seq = FrameSequence::new("v", "s", "a", vec![flat; 10]).unwrap();
        let set = osw_histograms(&seq, &cfg).unwrap();
        for b1 in 0..5 {
            for b2 in 0..5 {
                assert!(set.hist(b1, b2, Plane::Xy).iter().all(|v| *v == 0.0));
                assert_eq!(set.hist(b1, b2, Plane::Xt)[15], 1.0);
                assert_eq!(set.hist(b1, b2, Plane::Yt)[15], 1.0);
            }
        }
    }

    #[test]
    fn osw_lengths() {
        let f = Frame::from_grid(Grid::from_fn(24, 24, |x, y| ((x * 5 + y * 3) % 7) as f64 / 7.0)).unwrap();
        let seq = FrameSequence::new("v", "s", "a", vec![f; 10]).unwrap();
        assert_eq!(osw_vector(&seq, &FeatureConfig::default()).unwrap().len(), 1125);
        let mut cfg = FeatureConfig::default();
        cfg.lbptop.n_blocks = 8;
        cfg.lbptop.bins_per_plane = 16;
        assert_eq!(osw_vector(&seq, &cfg).unwrap().len(), 3072);
    }
}
