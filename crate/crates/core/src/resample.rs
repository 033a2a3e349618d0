//! Uniform linear temporal resampling of a frame sequence.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::{Frame, FrameSequence, Grid};

/// Resamples to exactly `target_len` frames.
///
/// Output frame `k` sits at source position `k·(F−1)/(target_len−1)` and is
/// the linear blend of the two neighbouring source frames, so the first and
/// last frames are copied exactly.
pub fn resample_temporal(seq: &FrameSequence, target_len: usize) -> Result<FrameSequence> {
    if target_len < 2 {
        return Err(Error::InvalidParameter("target length must be >= 2"));
    }
    let src = seq.frames();
    let last = src.len() - 1;
    let (w, h) = seq.dims();
    let frames = (0..target_len)
        .map(|k| {
            let pos = k as f64 * last as f64 / (target_len - 1) as f64;
            let i0 = (libm::floor(pos) as usize).min(last);
            let frac = pos - i0 as f64;
            if frac == 0.0 || i0 == last {
                return Ok(src[i0].clone());
            }
            let (a, b) = (&src[i0], &src[i0 + 1]);
            Frame::from_grid_clamped(Grid::from_fn(w, h, |x, y| (1.0 - frac) * a.get(x, y) + frac * b.get(x, y)))
        })
        .collect::<Result<Vec<_>>>()?;
    seq.with_frames(frames)
}
