//! Strain tensor of a flow-derived displacement field.
//!
//! With a one-frame time step the displacement `(u, v)` equals the flow
//! `(p, q)`. Derivatives use central differences with unit spacing in the
//! interior and first-order one-sided differences on the border.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flow::{flow_sequence, FlowField, FlowParams};
use crate::image::{Frame, Grid};

/// Per-pixel strain components and magnitude.
///
/// `exy` and `eyx` are equal by construction; both are kept so the
/// magnitude is literally the four-term root sum of squares.
#[derive(Debug, Clone, PartialEq)]
pub struct StrainMap {
    pub exx: Grid,
    pub eyy: Grid,
    pub exy: Grid,
    pub eyx: Grid,
    pub magnitude: Grid,
}

impl StrainMap {
    pub fn zeros(width: usize, height: usize) -> Self {
        let z = Grid::zeros(width, height);
        Self {
            exx: z.clone(),
            eyy: z.clone(),
            exy: z.clone(),
            eyx: z.clone(),
            magnitude: z,
        }
    }

    pub fn width(&self) -> usize {
        self.magnitude.width()
    }

    pub fn height(&self) -> usize {
        self.magnitude.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.magnitude.dims()
    }

    /// Zeroes every component and the magnitude at one pixel.
    pub fn clear(&mut self, x: usize, y: usize) {
        for g in [&mut self.exx, &mut self.eyy, &mut self.exy, &mut self.eyx, &mut self.magnitude] {
            g.set(x, y, 0.0);
        }
    }
}

/// d/dx with unit spacing: central inside, one-sided at the two edge columns.
fn diff_x(g: &Grid, x: usize, y: usize) -> f64 {
    let w = g.width();
    if w == 1 {
        0.0
    } else if x == 0 {
        g.get(1, y) - g.get(0, y)
    } else if x == w - 1 {
        g.get(x, y) - g.get(x - 1, y)
    } else {
        0.5 * (g.get(x + 1, y) - g.get(x - 1, y))
    }
}

fn diff_y(g: &Grid, x: usize, y: usize) -> f64 {
    let h = g.height();
    if h == 1 {
        0.0
    } else if y == 0 {
        g.get(x, 1) - g.get(x, 0)
    } else if y == h - 1 {
        g.get(x, y) - g.get(x, y - 1)
    } else {
        0.5 * (g.get(x, y + 1) - g.get(x, y - 1))
    }
}

pub fn compute_strain(flow: &FlowField) -> StrainMap {
    let (w, h) = flow.dims();
    let mut map = StrainMap::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let du_dx = diff_x(flow.p(), x, y);
            let du_dy = diff_y(flow.p(), x, y);
            let dv_dx = diff_x(flow.q(), x, y);
            let dv_dy = diff_y(flow.q(), x, y);
            let shear = 0.5 * (du_dy + dv_dx);
            map.exx.set(x, y, du_dx);
            map.eyy.set(x, y, dv_dy);
            map.exy.set(x, y, shear);
            map.eyx.set(x, y, shear);
            let m = libm::sqrt(du_dx * du_dx + dv_dy * dv_dy + shear * shear + shear * shear);
            map.magnitude.set(x, y, m);
        }
    }
    map
}

/// One strain map per consecutive frame pair.
pub fn strain_sequence(frames: &[Frame], params: &FlowParams) -> Result<Vec<StrainMap>> {
    if frames.len() < 2 {
        return Err(Error::SequenceTooShort {
            frames: frames.len(),
            required: 2,
        });
    }
    Ok(flow_sequence(frames, params)?.iter().map(compute_strain).collect())
}
