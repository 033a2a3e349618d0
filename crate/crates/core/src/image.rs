//! Real-valued image grids and the small set of filters the pipeline needs.
//!
//! All convolutions replicate edge pixels at the borders.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use crate::error::{Error, Result};

/// Row-major grid of reals. Used for intensities, responses, strain and flow planes.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::InvalidDimensions { width, height });
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    /// Reads with edge replication for out-of-range coordinates.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.get(cx, cy)
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Grid {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn ensure_same_dims(&self, other: &Grid) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        Ok(())
    }
}

/// Grayscale frame: a grid of at least 3×3 with every intensity in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame(Grid);

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        Self::from_grid(Grid::new(width, height, data)?)
    }

    pub fn from_grid(grid: Grid) -> Result<Self> {
        if grid.width < 3 || grid.height < 3 {
            return Err(Error::InvalidDimensions {
                width: grid.width,
                height: grid.height,
            });
        }
        if grid.data.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::InvalidIntensity);
        }
        Ok(Self(grid))
    }

    /// Like [`Frame::from_grid`] but clamps values into `[0, 1]` first.
    /// Non-finite values are still rejected.
    pub fn from_grid_clamped(mut grid: Grid) -> Result<Self> {
        for v in grid.data.iter_mut() {
            if v.is_finite() {
                *v = v.clamp(0.0, 1.0);
            }
        }
        Self::from_grid(grid)
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::from_grid(Grid::filled(width, height, value))
    }

    /// Builds a frame from 8-bit gray levels, scaled by 1/255.
    pub fn from_gray8(width: usize, height: usize, pixels: &[u8]) -> Result<Self> {
        Self::new(width, height, pixels.iter().map(|&p| f64::from(p) / 255.0).collect())
    }

    pub fn as_grid(&self) -> &Grid {
        &self.0
    }

    pub fn into_grid(self) -> Grid {
        self.0
    }

    /// Gaussian-smoothed copy; stays a valid frame since the kernel is convex.
    pub fn smoothed(&self, size: usize, sigma: f64) -> Result<Frame> {
        Frame::from_grid_clamped(gaussian_filter(&self.0, size, sigma)?)
    }
}

impl AsRef<Grid> for Frame {
    fn as_ref(&self) -> &Grid {
        &self.0
    }
}

impl AsRef<Grid> for Grid {
    fn as_ref(&self) -> &Grid {
        self
    }
}

impl Deref for Frame {
    type Target = Grid;

    fn deref(&self) -> &Grid {
        &self.0
    }
}

/// Luma of an 8-bit RGB triple (ITU-R BT.601 weights), in `[0, 1]`.
pub fn luma_from_rgb8(r: u8, g: u8, b: u8) -> f64 {
    let y = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
    (y / 255.0).clamp(0.0, 1.0)
}

/// One video sample: equally sized frames plus identifying metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    video_id: String,
    subject_id: String,
    label: String,
    frames: Vec<Frame>,
    fps: Option<f64>,
}

impl FrameSequence {
    pub fn new(video_id: impl Into<String>, subject_id: impl Into<String>, label: impl Into<String>, frames: Vec<Frame>) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::SequenceTooShort {
                frames: frames.len(),
                required: 2,
            });
        }
        let dims = frames[0].dims();
        if let Some(bad) = frames.iter().find(|f| f.dims() != dims) {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found: bad.dims(),
            });
        }
        Ok(Self {
            video_id: video_id.into(),
            subject_id: subject_id.into(),
            label: label.into(),
            frames,
            fps: None,
        })
    }

    pub fn with_fps(mut self, fps: f64) -> Self {
        self.fps = Some(fps);
        self
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn fps(&self) -> Option<f64> {
        self.fps
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    /// Never true for a constructed sequence; provided for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    /// Same metadata, new frames.
    pub fn with_frames(&self, frames: Vec<Frame>) -> Result<Self> {
        let mut seq = Self::new(self.video_id.clone(), self.subject_id.clone(), self.label.clone(), frames)?;
        seq.fps = self.fps;
        Ok(seq)
    }

    /// Applies Gaussian smoothing to every frame.
    pub fn smoothed(&self, size: usize, sigma: f64) -> Result<Self> {
        let frames = self.frames.iter().map(|f| f.smoothed(size, sigma)).collect::<Result<Vec<_>>>()?;
        self.with_frames(frames)
    }
}

/// Normalized 1-D Gaussian kernel of odd length `size`.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Result<Vec<f64>> {
    if size == 0 || size.is_multiple_of(2) {
        return Err(Error::InvalidParameter("gaussian size must be odd"));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter("gaussian sigma must be positive"));
    }
    let radius = (size / 2) as f64;
    let mut kernel: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - radius;
            libm::exp(-(d * d) / (2.0 * sigma * sigma))
        })
        .collect();
    let total: f64 = kernel.iter().sum();
    for k in kernel.iter_mut() {
        *k /= total;
    }
    Ok(kernel)
}

/// Separable `size`×`size` Gaussian blur.
pub fn gaussian_filter(grid: &Grid, size: usize, sigma: f64) -> Result<Grid> {
    let kernel = gaussian_kernel(size, sigma)?;
    let r = (size / 2) as isize;
    let (w, h) = grid.dims();

    let horizontal = Grid::from_fn(w, h, |x, y| {
        kernel
            .iter()
            .enumerate()
            .map(|(i, k)| k * grid.get_clamped(x as isize + i as isize - r, y as isize))
            .sum()
    });
    Ok(Grid::from_fn(w, h, |x, y| {
        kernel
            .iter()
            .enumerate()
            .map(|(i, k)| k * horizontal.get_clamped(x as isize, y as isize + i as isize - r))
            .sum()
    }))
}

/// Vertical-edge Sobel mask: responds to intensity change along x.
const SOBEL_VERTICAL: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];

/// Absolute response of the 3×3 vertical-edge Sobel mask.
pub fn sobel_vertical(grid: &Grid) -> Result<Grid> {
    let (w, h) = grid.dims();
    if w < 3 || h < 3 {
        return Err(Error::InvalidDimensions { width: w, height: h });
    }
    Ok(Grid::from_fn(w, h, |x, y| {
        let mut acc = 0.0;
        for (j, row) in SOBEL_VERTICAL.iter().enumerate() {
            for (i, k) in row.iter().enumerate() {
                if *k != 0.0 {
                    acc += k * grid.get_clamped(x as isize + i as isize - 1, y as isize + j as isize - 1);
                }
            }
        }
        acc.abs()
    }))
}

/// Bilinear resize with pixel-center alignment. Same-size resize is the identity.
pub fn resize_bilinear(grid: &Grid, out_w: usize, out_h: usize) -> Result<Grid> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::InvalidDimensions {
            width: out_w,
            height: out_h,
        });
    }
    let (w, h) = grid.dims();
    let sx = w as f64 / out_w as f64;
    let sy = h as f64 / out_h as f64;
    Ok(Grid::from_fn(out_w, out_h, |x, y| {
        let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (w - 1) as f64);
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (h - 1) as f64);
        sample_bilinear(grid, fx, fy)
    }))
}

/// Bilinear sample at a real-valued position inside the grid.
#[inline]
pub fn sample_bilinear(grid: &Grid, fx: f64, fy: f64) -> f64 {
    let x0 = libm::floor(fx);
    let y0 = libm::floor(fy);
    let ax = fx - x0;
    let ay = fy - y0;
    let x0 = x0 as isize;
    let y0 = y0 as isize;
    let v00 = grid.get_clamped(x0, y0);
    if ax == 0.0 && ay == 0.0 {
        return v00;
    }
    let v10 = grid.get_clamped(x0 + 1, y0);
    let v01 = grid.get_clamped(x0, y0 + 1);
    let v11 = grid.get_clamped(x0 + 1, y0 + 1);
    let top = v00 + ax * (v10 - v00);
    let bottom = v01 + ax * (v11 - v01);
    top + ay * (bottom - top)
}
