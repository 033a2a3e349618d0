//! Brute-force reference implementations used only by tests.
//!
//! These deliberately avoid the library's code paths: volumes are plain
//! nested vectors, neighbours are located with direct trigonometry, and
//! blocks are assigned with explicit remainder handling.
#![allow(dead_code)]

use rand::Rng;

/// `vol[t][y][x]`
pub type Volume = Vec<Vec<Vec<f64>>>;

pub fn random_volume<R: Rng>(rng: &mut R, w: usize, h: usize, t: usize) -> Volume {
    (0..t)
        .map(|_| (0..h).map(|_| (0..w).map(|_| rng.random::<f64>()).collect()).collect())
        .collect()
}

/// Integer neighbour offsets on an axis-aligned ring; panics on non-integer points.
fn ring_point(p: u32, points: u32, ra: usize, rb: usize) -> (i64, i64) {
    let theta = 2.0 * std::f64::consts::PI * p as f64 / points as f64;
    let a = ra as f64 * theta.cos();
    let b = -(rb as f64) * theta.sin();
    let (ar, br) = (a.round(), b.round());
    assert!(
        (a - ar).abs() < 1e-9 && (b - br).abs() < 1e-9,
        "oracle supports integer samples only"
    );
    (ar as i64, br as i64)
}

/// Code of pixel (x, y, t); plane 0 = XY, 1 = XT, 2 = YT.
pub fn naive_code(vol: &Volume, x: usize, y: usize, t: usize, plane: usize, points: u32, radii: (usize, usize, usize)) -> u32 {
    let (rx, ry, rt) = radii;
    let centre = vol[t][y][x];
    let mut code = 0;
    for p in 0..points {
        let (xx, yy, tt) = match plane {
            0 => {
                let (a, b) = ring_point(p, points, rx, ry);
                (x as i64 + a, y as i64 + b, t as i64)
            }
            1 => {
                let (a, b) = ring_point(p, points, rx, rt);
                (x as i64 + a, y as i64, t as i64 + b)
            }
            _ => {
                let (a, b) = ring_point(p, points, ry, rt);
                (x as i64, y as i64 + a, t as i64 + b)
            }
        };
        let g = vol[tt as usize][yy as usize][xx as usize];
        if g >= centre {
            code += 1 << p;
        }
    }
    code
}

/// Block index with remainder pixels folded into the last block.
pub fn naive_block(coord: usize, len: usize, n: usize) -> usize {
    let size = len / n;
    let mut b = 0;
    while b + 1 < n && coord >= (b + 1) * size {
        b += 1;
    }
    b
}

/// Flattened (b1, b2, plane, bin) normalized histograms.
pub fn naive_block_histograms(vol: &Volume, points: u32, radii: (usize, usize, usize), n: usize, bins: usize) -> Vec<f64> {
    let (rx, ry, rt) = radii;
    let depth = vol.len();
    let h = vol[0].len();
    let w = vol[0][0].len();
    let codes = 1usize << points;
    let mut counts = vec![0u64; n * n * 3 * codes];
    for t in 0..depth {
        for y in 0..h {
            for x in 0..w {
                let inside = x >= rx && x + rx < w && y >= ry && y + ry < h && t >= rt && t + rt < depth;
                if !inside {
                    continue;
                }
                let b1 = naive_block(y, h, n);
                let b2 = naive_block(x, w, n);
                for plane in 0..3 {
                    let c = naive_code(vol, x, y, t, plane, points, radii) as usize;
                    counts[((b1 * n + b2) * 3 + plane) * codes + c] += 1;
                }
            }
        }
    }
    let mut out = Vec::with_capacity(n * n * 3 * bins);
    for cell in counts.chunks(codes) {
        let total: u64 = cell[..bins].iter().sum();
        for c in &cell[..bins] {
            out.push(if total == 0 { 0.0 } else { *c as f64 / total as f64 });
        }
    }
    out
}

/// Per-band `(T_l, T_u)` from a row-major magnitude array.
pub fn naive_band_thresholds(mag: &[f64], w: usize, h: usize, rho_l: f64, rho_u: f64) -> Vec<(usize, usize, f64, f64)> {
    let third = h / 3;
    let bands = [(0, third), (third, 2 * third), (2 * third, h)];
    bands
        .iter()
        .map(|&(y0, y1)| {
            let mut lo = f64::MAX;
            let mut hi = f64::MIN;
            for y in y0..y1 {
                for x in 0..w {
                    lo = lo.min(mag[y * w + x]);
                    hi = hi.max(mag[y * w + x]);
                }
            }
            (y0, y1, lo + rho_l * (hi - lo), hi - rho_u * (hi - lo))
        })
        .collect()
}

/// Mean of each block, remainder pixels to the last block.
pub fn naive_block_means(mag: &[f64], w: usize, h: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for b1 in 0..n {
        for b2 in 0..n {
            let mut sum = 0.0;
            let mut count = 0;
            for y in 0..h {
                for x in 0..w {
                    if naive_block(y, h, n) == b1 && naive_block(x, w, n) == b2 {
                        sum += mag[y * w + x];
                        count += 1;
                    }
                }
            }
            out[b1 * n + b2] = sum / count as f64;
        }
    }
    out
}

/// Quadratic polynomial `c0 + c1 x + c2 y + c3 x² + c4 xy + c5 y²` with its gradient.
#[derive(Debug, Clone, Copy)]
pub struct Quadratic(pub [f64; 6]);

impl Quadratic {
    pub fn random<R: Rng>(rng: &mut R, extent: f64, magnitude: f64) -> Self {
        // Scale each term so its size over [0, extent]² stays below magnitude / 6.
        let s = magnitude / 6.0;
        let mut c = [0.0; 6];
        for (i, ci) in c.iter_mut().enumerate() {
            let r: f64 = rng.random_range(-1.0..1.0);
            let degree = [0, 1, 1, 2, 2, 2][i];
            *ci = r * s / extent.powi(degree);
        }
        Quadratic(c)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let c = self.0;
        c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y
    }

    pub fn dx(&self, x: f64, y: f64) -> f64 {
        let c = self.0;
        c[1] + 2.0 * c[3] * x + c[4] * y
    }

    pub fn dy(&self, x: f64, y: f64) -> f64 {
        let c = self.0;
        c[2] + c[4] * x + 2.0 * c[5] * y
    }
}
