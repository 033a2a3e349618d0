//! Dense differential optical flow.
//!
//! Every pixel solves the windowed least-squares system built from the
//! brightness-constancy constraint `Ix·p + Iy·q + It = 0`. Spatial gradients
//! are central differences of the mean of both frames, `It = f2 − f1`, and
//! the time step is one frame, so the returned velocities are also the
//! per-frame displacements.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::{Frame, Grid};

/// Estimator settings.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FlowParams {
    /// Odd side length of the aggregation window.
    pub window: usize,
    /// Pixels whose normal matrix has a smaller eigenvalue than this get zero flow.
    pub min_eigenvalue: f64,
    /// Pixels whose normal matrix condition number exceeds this get zero flow.
    pub max_condition: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            window: 5,
            min_eigenvalue: 1e-6,
            max_condition: 1e6,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window.is_multiple_of(2) {
            return Err(Error::InvalidParameter("flow window must be odd and >= 3"));
        }
        if !(self.min_eigenvalue >= 0.0) || !(self.max_condition >= 1.0) {
            return Err(Error::InvalidParameter("flow degeneracy thresholds"));
        }
        Ok(())
    }
}

/// Horizontal (`p`) and vertical (`q`) velocity per pixel, in pixels per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    p: Grid,
    q: Grid,
}

impl FlowField {
    pub fn new(p: Grid, q: Grid) -> Result<Self> {
        p.ensure_same_dims(&q)?;
        if p.data().iter().chain(q.data()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("flow values must be finite"));
        }
        Ok(Self { p, q })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            p: Grid::zeros(width, height),
            q: Grid::zeros(width, height),
        }
    }

    /// Samples an analytic field `(p, q) = f(x, y)` on the pixel grid.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(f64, f64) -> (f64, f64)) -> Self {
        let mut p = Grid::zeros(width, height);
        let mut q = Grid::zeros(width, height);
        for y in 0..height {
            for x in 0..width {
                let (pv, qv) = f(x as f64, y as f64);
                p.set(x, y, pv);
                q.set(x, y, qv);
            }
        }
        Self { p, q }
    }

    pub fn width(&self) -> usize {
        self.p.width()
    }

    pub fn height(&self) -> usize {
        self.p.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.p.dims()
    }

    pub fn p(&self) -> &Grid {
        &self.p
    }

    pub fn q(&self) -> &Grid {
        &self.q
    }

    pub fn scaled(&self, k: f64) -> FlowField {
        FlowField {
            p: self.p.map(|v| v * k),
            q: self.q.map(|v| v * k),
        }
    }

    /// Per-pixel flow magnitude `sqrt(p² + q²)`.
    pub fn magnitude(&self) -> Grid {
        let (w, h) = self.dims();
        Grid::from_fn(w, h, |x, y| libm::hypot(self.p.get(x, y), self.q.get(x, y)))
    }
}

/// Central difference along x with edge replication.
fn grad_x(g: &Grid, x: usize, y: usize) -> f64 {
    let (x, y) = (x as isize, y as isize);
    0.5 * (g.get_clamped(x + 1, y) - g.get_clamped(x - 1, y))
}

fn grad_y(g: &Grid, x: usize, y: usize) -> f64 {
    let (x, y) = (x as isize, y as isize);
    0.5 * (g.get_clamped(x, y + 1) - g.get_clamped(x, y - 1))
}

/// Summed-area table with a zero first row and column.
struct Integral {
    stride: usize,
    data: Vec<f64>,
}

impl Integral {
    fn new(g: &Grid) -> Self {
        let (w, h) = g.dims();
        let stride = w + 1;
        let mut data = alloc::vec![0.0; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0.0;
            for x in 0..w {
                row += g.get(x, y);
                data[(y + 1) * stride + x + 1] = data[y * stride + x + 1] + row;
            }
        }
        Self { stride, data }
    }

    /// Sum over the half-open rectangle `[x0, x1) × [y0, y1)`.
    fn rect(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        let s = self.stride;
        self.data[y1 * s + x1] - self.data[y0 * s + x1] - self.data[y1 * s + x0] + self.data[y0 * s + x0]
    }
}

/// Dense flow from `f1` to `f2`.
pub fn estimate_flow(f1: &Frame, f2: &Frame, params: &FlowParams) -> Result<FlowField> {
    params.validate()?;
    f1.ensure_same_dims(f2)?;
    let (w, h) = f1.dims();

    let mut ixx = Grid::zeros(w, h);
    let mut ixy = Grid::zeros(w, h);
    let mut iyy = Grid::zeros(w, h);
    let mut ixt = Grid::zeros(w, h);
    let mut iyt = Grid::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let gx = 0.5 * (grad_x(f1, x, y) + grad_x(f2, x, y));
            let gy = 0.5 * (grad_y(f1, x, y) + grad_y(f2, x, y));
            let gt = f2.get(x, y) - f1.get(x, y);
            ixx.set(x, y, gx * gx);
            ixy.set(x, y, gx * gy);
            iyy.set(x, y, gy * gy);
            ixt.set(x, y, gx * gt);
            iyt.set(x, y, gy * gt);
        }
    }
    let sums = [&ixx, &ixy, &iyy, &ixt, &iyt].map(Integral::new);

    let r = params.window / 2;
    let mut p = Grid::zeros(w, h);
    let mut q = Grid::zeros(w, h);
    for y in 0..h {
        let y0 = y.saturating_sub(r);
        let y1 = (y + r + 1).min(h);
        for x in 0..w {
            let x0 = x.saturating_sub(r);
            let x1 = (x + r + 1).min(w);
            let [a, b, d, bx, by] = [0, 1, 2, 3, 4].map(|k| sums[k].rect(x0, y0, x1, y1));
            if let Some((pv, qv)) = solve_normal(a, b, d, -bx, -by, params) {
                p.set(x, y, pv);
                q.set(x, y, qv);
            }
        }
    }
    Ok(FlowField { p, q })
}

/// Solves `[a b; b d]·v = (u1, u2)`, or `None` if the matrix is degenerate.
fn solve_normal(a: f64, b: f64, d: f64, u1: f64, u2: f64, params: &FlowParams) -> Option<(f64, f64)> {
    let half_trace = 0.5 * (a + d);
    let spread = libm::sqrt(0.25 * (a - d) * (a - d) + b * b);
    let lambda_min = half_trace - spread;
    let lambda_max = half_trace + spread;
    if !(lambda_min >= params.min_eigenvalue) || lambda_min <= 0.0 {
        return None;
    }
    if lambda_max / lambda_min > params.max_condition {
        return None;
    }
    let det = a * d - b * b;
    if !(det > 0.0) {
        return None;
    }
    let pv = (d * u1 - b * u2) / det;
    let qv = (a * u2 - b * u1) / det;
    (pv.is_finite() && qv.is_finite()).then_some((pv, qv))
}

/// Flow for every consecutive frame pair: `frames.len() − 1` fields.
pub fn flow_sequence(frames: &[Frame], params: &FlowParams) -> Result<Vec<FlowField>> {
    if frames.len() < 2 {
        return Err(Error::SequenceTooShort {
            frames: frames.len(),
            required: 2,
        });
    }
    frames.windows(2).map(|pair| estimate_flow(&pair[0], &pair[1], params)).collect()
}
