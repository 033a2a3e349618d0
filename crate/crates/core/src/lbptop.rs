//! Block-based LBP-TOP: local binary patterns sampled on the XY, XT and YT
//! planes of a video volume, histogrammed per spatial block.
//!
//! Blocks partition the full frame into an `N×N` grid. Block `(b1, b2)` is
//! (row, column), zero-based here; the last row and column absorb remainder
//! pixels. Only pixels at least one radius away from every volume border
//! contribute codes, on all three planes alike.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::image::{sample_bilinear, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Plane {
    Xy = 0,
    Xt = 1,
    Yt = 2,
}

impl Plane {
    pub const ALL: [Plane; 3] = [Plane::Xy, Plane::Xt, Plane::Yt];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Neighbour counts, radii, block grid and histogram width.
///
/// The default is `LBP-TOP(4,4,4,1,1,4)` on a 5×5 grid with 15 bins per plane.
/// In 15-bin mode the top code (all neighbours ≥ centre) is counted and then
/// dropped before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct LbpTopParams {
    pub p_xy: u32,
    pub p_xt: u32,
    pub p_yt: u32,
    pub r_x: usize,
    pub r_y: usize,
    pub r_t: usize,
    pub n_blocks: usize,
    pub bins_per_plane: usize,
}

impl Default for LbpTopParams {
    fn default() -> Self {
        Self {
            p_xy: 4,
            p_xt: 4,
            p_yt: 4,
            r_x: 1,
            r_y: 1,
            r_t: 4,
            n_blocks: 5,
            bins_per_plane: 15,
        }
    }
}

impl LbpTopParams {
    pub fn validate(&self) -> Result<()> {
        if self.r_x < 1 || self.r_y < 1 || self.r_t < 1 {
            return Err(Error::InvalidParameter("LBP radii must be >= 1"));
        }
        if self.n_blocks < 1 {
            return Err(Error::InvalidParameter("block grid must be >= 1"));
        }
        for p in [self.p_xy, self.p_xt, self.p_yt] {
            if !(4..=16).contains(&p) {
                return Err(Error::InvalidParameter("LBP neighbour count must be in 4..=16"));
            }
            let codes = 1usize << p;
            if self.bins_per_plane != codes && self.bins_per_plane != codes - 1 {
                return Err(Error::InvalidParameter("bins per plane must be 2^P or 2^P - 1"));
            }
        }
        Ok(())
    }

    pub fn neighbours(&self, plane: Plane) -> u32 {
        match plane {
            Plane::Xy => self.p_xy,
            Plane::Xt => self.p_xt,
            Plane::Yt => self.p_yt,
        }
    }

    /// Radii along the plane's (first, second) axes.
    fn radii(&self, plane: Plane) -> (usize, usize) {
        match plane {
            Plane::Xy => (self.r_x, self.r_y),
            Plane::Xt => (self.r_x, self.r_t),
            Plane::Yt => (self.r_y, self.r_t),
        }
    }

    /// Length of a flattened histogram set.
    pub fn descriptor_len(&self) -> usize {
        self.n_blocks * self.n_blocks * 3 * self.bins_per_plane
    }
}

/// Offsets `(da, db)` of the sampling ring, snapped to integers when within 1e-9.
fn ring_offsets(points: u32, ra: usize, rb: usize) -> Vec<(f64, f64)> {
    let snap = |v: f64| {
        let r = libm::round(v);
        if (v - r).abs() < 1e-9 {
            r
        } else {
            v
        }
    };
    (0..points)
        .map(|p| {
            let theta = 2.0 * PI * f64::from(p) / f64::from(points);
            (snap(ra as f64 * libm::cos(theta)), snap(-(rb as f64) * libm::sin(theta)))
        })
        .collect()
}

/// Intensity at real-valued in-plane coordinates `(a, b)` through the fixed
/// third coordinate of the centre pixel.
fn plane_sample<G: AsRef<Grid>>(volume: &[G], plane: Plane, x: usize, y: usize, t: usize, a: f64, b: f64) -> f64 {
    match plane {
        Plane::Xy => sample_bilinear(volume[t].as_ref(), a, b),
        Plane::Xt | Plane::Yt => {
            let t0 = libm::floor(b);
            let wt = b - t0;
            let t0 = t0 as usize;
            let at = |tt: usize| -> f64 {
                let g = volume[tt].as_ref();
                match plane {
                    Plane::Xt => sample_bilinear(g, a, y as f64),
                    _ => sample_bilinear(g, x as f64, a),
                }
            };
            if wt == 0.0 {
                at(t0)
            } else {
                (1.0 - wt) * at(t0) + wt * at(t0 + 1)
            }
        }
    }
}

fn volume_dims<G: AsRef<Grid>>(volume: &[G]) -> Result<(usize, usize, usize)> {
    let first = volume.first().ok_or(Error::Empty("volume"))?.as_ref();
    let dims = first.dims();
    for g in volume {
        if g.as_ref().dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found: g.as_ref().dims(),
            });
        }
    }
    Ok((dims.0, dims.1, volume.len()))
}

struct CodeSampler {
    rings: [Vec<(f64, f64)>; 3],
}

impl CodeSampler {
    fn new(params: &LbpTopParams) -> Self {
        let ring = |plane| {
            let (ra, rb) = params.radii(plane);
            ring_offsets(params.neighbours(plane), ra, rb)
        };
        Self {
            rings: [ring(Plane::Xy), ring(Plane::Xt), ring(Plane::Yt)],
        }
    }

    /// Caller guarantees the ring stays inside the volume.
    fn code<G: AsRef<Grid>>(&self, volume: &[G], x: usize, y: usize, t: usize, plane: Plane) -> u32 {
        let centre = volume[t].as_ref().get(x, y);
        let (ca, cb) = match plane {
            Plane::Xy => (x as f64, y as f64),
            Plane::Xt => (x as f64, t as f64),
            Plane::Yt => (y as f64, t as f64),
        };
        let mut code = 0u32;
        for (bit, (da, db)) in self.rings[plane.index()].iter().enumerate() {
            let g = plane_sample(volume, plane, x, y, t, ca + da, cb + db);
            if g - centre >= 0.0 {
                code |= 1 << bit;
            }
        }
        code
    }
}

/// LBP code of pixel `(x, y, t)` on one plane: bit `p` is set iff neighbour
/// `p` is at least as bright as the centre.
pub fn lbp_code<G: AsRef<Grid>>(volume: &[G], x: usize, y: usize, t: usize, plane: Plane, params: &LbpTopParams) -> Result<u32> {
    params.validate()?;
    let (w, h, depth) = volume_dims(volume)?;
    let inside = |c: usize, r: usize, len: usize| c >= r && c + r < len;
    let ok = x < w
        && y < h
        && t < depth
        && match plane {
            Plane::Xy => inside(x, params.r_x, w) && inside(y, params.r_y, h),
            Plane::Xt => inside(x, params.r_x, w) && inside(t, params.r_t, depth),
            Plane::Yt => inside(y, params.r_y, h) && inside(t, params.r_t, depth),
        };
    if !ok {
        return Err(Error::OutOfBorder { x, y, t });
    }
    Ok(CodeSampler::new(params).code(volume, x, y, t, plane))
}

/// Block index of a coordinate along an axis of length `len` split into `n` blocks.
#[inline]
pub fn block_of(coord: usize, len: usize, n: usize) -> usize {
    (coord / (len / n)).min(n - 1)
}

/// Per-block, per-plane histograms, flattened in `(b1, b2, plane, bin)` order.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BlockHistogramSet {
    n_blocks: usize,
    bins: usize,
    data: Vec<f64>,
}

impl BlockHistogramSet {
    pub fn zeros(n_blocks: usize, bins: usize) -> Self {
        Self {
            n_blocks,
            bins,
            data: vec![0.0; n_blocks * n_blocks * 3 * bins],
        }
    }

    pub fn from_vec(n_blocks: usize, bins: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_blocks * n_blocks * 3 * bins {
            return Err(Error::InvalidFeatures("histogram length does not match grid"));
        }
        Ok(Self { n_blocks, bins, data })
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    fn offset(&self, b1: usize, b2: usize, plane: Plane) -> usize {
        ((b1 * self.n_blocks + b2) * 3 + plane.index()) * self.bins
    }

    pub fn hist(&self, b1: usize, b2: usize, plane: Plane) -> &[f64] {
        let o = self.offset(b1, b2, plane);
        &self.data[o..o + self.bins]
    }

    pub fn hist_mut(&mut self, b1: usize, b2: usize, plane: Plane) -> &mut [f64] {
        let o = self.offset(b1, b2, plane);
        &mut self.data[o..o + self.bins]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Sum-normalized block LBP-TOP histograms of a volume.
pub fn block_histograms<G: AsRef<Grid>>(volume: &[G], params: &LbpTopParams) -> Result<BlockHistogramSet> {
    params.validate()?;
    let (w, h, depth) = volume_dims(volume)?;
    let n = params.n_blocks;
    if 2 * params.r_x >= w || 2 * params.r_y >= h || 2 * params.r_t >= depth || n > w || n > h {
        return Err(Error::VolumeTooSmall);
    }
    let (x_lo, x_hi) = (params.r_x, w - params.r_x);
    let (y_lo, y_hi) = (params.r_y, h - params.r_y);
    // Every block needs at least one valid centre pixel.
    let first_block_end = |len: usize| len / n;
    let last_block_start = |len: usize| (n - 1) * (len / n);
    if first_block_end(w) <= x_lo || first_block_end(h) <= y_lo || last_block_start(w) >= x_hi || last_block_start(h) >= y_hi {
        return Err(Error::VolumeTooSmall);
    }

    let codes = 1usize << params.p_xy.max(params.p_xt).max(params.p_yt);
    let mut counts = vec![0u64; n * n * 3 * codes];
    let sampler = CodeSampler::new(params);
    for t in params.r_t..depth - params.r_t {
        for y in y_lo..y_hi {
            let b1 = block_of(y, h, n);
            for x in x_lo..x_hi {
                let b2 = block_of(x, w, n);
                for plane in Plane::ALL {
                    let code = sampler.code(volume, x, y, t, plane) as usize;
                    counts[((b1 * n + b2) * 3 + plane.index()) * codes + code] += 1;
                }
            }
        }
    }

    let bins = params.bins_per_plane;
    let mut set = BlockHistogramSet::zeros(n, bins);
    for (cell, hist) in counts.chunks(codes).zip(set.data.chunks_mut(bins)) {
        let kept = &cell[..bins];
        let total: u64 = kept.iter().sum();
        if total > 0 {
            for (dst, &c) in hist.iter_mut().zip(kept) {
                *dst = c as f64 / total as f64;
            }
        }
    }
    Ok(set)
}

/// Zeroes the bottom-left and bottom-right blocks on all planes when `enabled`.
pub fn zero_noise_blocks(mut hists: BlockHistogramSet, enabled: bool) -> Result<BlockHistogramSet> {
    if !enabled {
        return Ok(hists);
    }
    let n = hists.n_blocks;
    if n < 2 {
        return Err(Error::InvalidParameter("noise blocks need a grid of at least 2x2"));
    }
    for b2 in [0, n - 1] {
        for plane in Plane::ALL {
            hists.hist_mut(n - 1, b2, plane).fill(0.0);
        }
    }
    Ok(hists)
}
