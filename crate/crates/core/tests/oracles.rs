//! Library results checked against independent brute-force references.

mod support;

use microstrain_core::flow::{FlowField, FlowParams};
use microstrain_core::image::{Frame, FrameSequence, Grid};
use microstrain_core::lbptop::{block_histograms, lbp_code, LbpTopParams, Plane};
use microstrain_core::osf::{clip_by_region, osf_vector, OSF_SIDE};
use microstrain_core::osw::{spatial_pool, temporal_pool, weight_xy_histograms, BlockGrid};
use microstrain_core::strain::{compute_strain, strain_sequence, StrainMap};
use microstrain_core::{BlockHistogramSet, FeatureConfig};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use support::*;

fn to_grids(vol: &Volume) -> Vec<Grid> {
    vol.iter()
        .map(|frame| {
            let h = frame.len();
            let w = frame[0].len();
            Grid::from_fn(w, h, |x, y| frame[y][x])
        })
        .collect()
}

fn params(n: usize, bins: usize) -> LbpTopParams {
    LbpTopParams {
        n_blocks: n,
        bins_per_plane: bins,
        ..LbpTopParams::default()
    }
}

/// Compact raised-cosine bump, zero beyond `radius`.
fn bump(x: f64, y: f64, cx: f64, cy: f64, radius: f64) -> f64 {
    let d = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
    if d >= radius {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * d / radius).cos())
    }
}

#[test]
fn strain_matches_analytic_derivatives() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..20 {
        let p = Quadratic::random(&mut rng, 63.0, 0.1);
        let q = Quadratic::random(&mut rng, 63.0, 0.1);
        let flow = FlowField::from_fn(64, 64, |x, y| (p.eval(x, y), q.eval(x, y)));
        let s = compute_strain(&flow);
        let mut worst: f64 = 0.0;
        for y in 1..63 {
            for x in 1..63 {
                let (xf, yf) = (x as f64, y as f64);
                let shear = 0.5 * (p.dy(xf, yf) + q.dx(xf, yf));
                worst = worst
                    .max((s.exx.get(x, y) - p.dx(xf, yf)).abs())
                    .max((s.eyy.get(x, y) - q.dy(xf, yf)).abs())
                    .max((s.exy.get(x, y) - shear).abs())
                    .max((s.eyx.get(x, y) - shear).abs());
            }
        }
        assert!(worst < 1e-6, "max abs error {worst}");
    }
}

#[test]
fn lbp_codes_match_brute_force() {
    let mut rng = StdRng::seed_from_u64(5);
    let p = LbpTopParams { r_t: 2, ..params(1, 16) };
    for _ in 0..20 {
        let vol = random_volume(&mut rng, 5, 5, 5);
        let grids = to_grids(&vol);
        // Every centre valid for a plane: only that plane's two axes are constrained.
        let inside = |c: usize, r: usize| c >= r && c + r < 5;
        for t in 0..5 {
            for y in 0..5 {
                for x in 0..5 {
                    let valid = [
                        inside(x, 1) && inside(y, 1),
                        inside(x, 1) && inside(t, 2),
                        inside(y, 1) && inside(t, 2),
                    ];
                    for (d, plane) in Plane::ALL.iter().enumerate() {
                        let got = lbp_code(&grids, x, y, t, *plane, &p);
                        if valid[d] {
                            assert_eq!(got.unwrap(), naive_code(&vol, x, y, t, d, 4, (1, 1, 2)));
                        } else {
                            assert!(got.is_err());
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn block_histograms_match_brute_force() {
    let mut rng = StdRng::seed_from_u64(6);
    for _ in 0..10 {
        let vol = random_volume(&mut rng, 20, 20, 10);
        let grids = to_grids(&vol);
        for n in [2, 5] {
            for bins in [15, 16] {
                let got = block_histograms(&grids, &params(n, bins)).unwrap();
                assert_eq!(got.as_slice(), naive_block_histograms(&vol, 4, (1, 1, 4), n, bins).as_slice());
            }
        }
    }
}

#[test]
fn histograms_ignore_monotone_remaps_and_offsets() {
    let mut rng = StdRng::seed_from_u64(8);
    for _ in 0..5 {
        let vol = random_volume(&mut rng, 17, 19, 10);
        let grids = to_grids(&vol);
        let base = block_histograms(&grids, &params(3, 16)).unwrap();
        let squared: Vec<Grid> = grids.iter().map(|g| g.map(|v| v * v * v)).collect();
        assert_eq!(block_histograms(&squared, &params(3, 16)).unwrap(), base);
        // 0.25 is a power of two, so the offset is exact and order-preserving.
        let shifted: Vec<Grid> = grids.iter().map(|g| g.map(|v| v + 0.25)).collect();
        assert_eq!(block_histograms(&shifted, &params(3, 16)).unwrap(), base);
    }
}

#[test]
fn clipping_matches_band_oracle() {
    let mut rng = StdRng::seed_from_u64(9);
    for _ in 0..50 {
        let (w, h) = (rng.random_range(3..30), rng.random_range(3..30));
        let mut s = StrainMap::zeros(w, h);
        let scale = [0.1, 1.0, 0.01][rng.random_range(0..3)];
        s.magnitude = Grid::from_fn(w, h, |_, _| rng.random::<f64>() * scale);
        let out = clip_by_region(&s, 0.05, 0.05).unwrap();
        for (y0, y1, tl, tu) in naive_band_thresholds(s.magnitude.data(), w, h, 0.05, 0.05) {
            for y in y0..y1 {
                for x in 0..w {
                    let v = s.magnitude.get(x, y);
                    let expected = if v >= tl && v <= tu { v } else { 0.0 };
                    assert_eq!(out.magnitude.get(x, y), expected);
                }
            }
        }
    }
}

#[test]
fn disjoint_band_ranges_clip_independently() {
    let (w, h) = (12, 9);
    let ranges = [0.1, 1.0, 0.01];
    let mut s = StrainMap::zeros(w, h);
    s.magnitude = Grid::from_fn(w, h, |x, y| ranges[y / 3] * (x + 12 * (y % 3)) as f64 / 35.0);
    let out = clip_by_region(&s, 0.05, 0.05).unwrap();
    for (y0, y1, tl, tu) in naive_band_thresholds(s.magnitude.data(), w, h, 0.05, 0.05) {
        assert!(tu <= ranges[y0 / 3] + 1e-15);
        for y in y0..y1 {
            for x in 0..w {
                let v = s.magnitude.get(x, y);
                assert_eq!(out.magnitude.get(x, y), if v >= tl && v <= tu { v } else { 0.0 });
            }
        }
    }
}

#[test]
fn spatial_pool_matches_oracle() {
    let mut rng = StdRng::seed_from_u64(12);
    for _ in 0..20 {
        let g = Grid::from_fn(17, 13, |_, _| rng.random());
        let got = spatial_pool(&g, 5).unwrap();
        let want = naive_block_means(g.data(), 17, 13, 5);
        for (a, b) in got.values().iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn temporal_pool_matches_sum_divide() {
    let mut rng = StdRng::seed_from_u64(13);
    let mats: Vec<BlockGrid> = (0..9)
        .map(|_| BlockGrid::new(4, (0..16).map(|_| rng.random()).collect()).unwrap())
        .collect();
    let got = temporal_pool(&mats).unwrap();
    for k in 0..16 {
        let mut sum = 0.0;
        for m in &mats {
            sum += m.values()[k];
        }
        assert!((got.values()[k] - sum / 9.0).abs() < 1e-12);
    }
}

#[test]
fn weighting_matches_direct_recompute() {
    let mut rng = StdRng::seed_from_u64(14);
    for _ in 0..20 {
        let n = rng.random_range(1..6);
        let hists = BlockHistogramSet::from_vec(n, 15, (0..n * n * 45).map(|_| rng.random()).collect()).unwrap();
        let w = BlockGrid::new(n, (0..n * n).map(|_| rng.random::<f64>() * 0.2).collect()).unwrap();
        let out = weight_xy_histograms(&hists, &w).unwrap();
        for b1 in 0..n {
            for b2 in 0..n {
                for c in 0..15 {
                    let i = ((b1 * n + b2) * 3) * 15 + c;
                    assert_eq!(out.as_slice()[i], hists.as_slice()[i] * w.values()[b1 * n + b2]);
                    for d in 1..3 {
                        let j = ((b1 * n + b2) * 3 + d) * 15 + c;
                        assert_eq!(out.as_slice()[j].to_bits(), hists.as_slice()[j].to_bits());
                    }
                }
            }
        }
    }
}

fn blob_sequence(w: usize, h: usize, cx: f64, cy: f64, dx: f64, frames: usize) -> FrameSequence {
    let fr = (0..frames)
        .map(|t| {
            let c = cx + dx * t as f64;
            Frame::from_grid(Grid::from_fn(w, h, |x, y| 0.2 + 0.6 * bump(x as f64, y as f64, c, cy, 7.0))).unwrap()
        })
        .collect();
    FrameSequence::new("blob", "s", "a", fr).unwrap()
}

#[test]
fn moving_blob_strain_stays_local() {
    let seq = blob_sequence(64, 64, 20.0, 30.0, 0.5, 10);
    let maps = strain_sequence(seq.frames(), &FlowParams::default()).unwrap();
    assert_eq!(maps.len(), 9);
    for (j, m) in maps.iter().enumerate() {
        // Flow is exactly zero wherever both frames and their window
        // neighbourhoods are flat: blob radius + gradient (1) + window (2) + strain stencil (1).
        let c = 20.0 + 0.5 * j as f64;
        let mut elevated = 0;
        for y in 0..64 {
            for x in 0..64 {
                let d = ((x as f64 - c - 0.25).powi(2) + (y as f64 - 30.0).powi(2)).sqrt();
                let v = m.magnitude.get(x, y);
                if d > 7.0 + 0.5 + 4.0 * 2f64.sqrt() {
                    assert!(v < 1e-3, "map {j} at ({x},{y}) = {v}");
                } else if v > 1e-3 {
                    elevated += 1;
                }
            }
        }
        assert!(elevated > 0, "map {j} has no elevated strain");
    }
}

#[test]
fn osf_mass_follows_motion_band() {
    let seq = blob_sequence(60, 60, 22.0, 9.0, 0.4, 10);
    let v = osf_vector(&seq, &FeatureConfig::default()).unwrap();
    assert_eq!(v.len(), 2500);
    let max = v.values.iter().cloned().fold(0.0, f64::max);
    assert_eq!(max, 1.0);
    let total: f64 = v.values.iter().sum();
    let top: f64 = v.values[..(OSF_SIDE / 3) * OSF_SIDE].iter().sum();
    assert!(top / total >= 0.6, "top-band share {}", top / total);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn separable_pooling_equals_volume_mean(seed in 0u64..10_000, n in 1usize..5) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (w, h, t) = (rng.random_range(5..20), rng.random_range(5..20), rng.random_range(1..6));
        let maps: Vec<Grid> = (0..t).map(|_| Grid::from_fn(w, h, |_, _| rng.random())).collect();
        let pooled: Vec<BlockGrid> = maps.iter().map(|m| spatial_pool(m, n).unwrap()).collect();
        let weights = temporal_pool(&pooled).unwrap();
        for b1 in 0..n {
            for b2 in 0..n {
                let (mut sum, mut count) = (0.0, 0.0);
                for m in &maps {
                    for y in 0..h {
                        for x in 0..w {
                            if naive_block(y, h, n) == b1 && naive_block(x, w, n) == b2 {
                                sum += m.get(x, y);
                                count += 1.0;
                            }
                        }
                    }
                }
                prop_assert!((weights.get(b1, b2) - sum / count).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn positive_strain_gives_positive_weights(seed in 0u64..10_000, k in 0.1f64..10.0) {
        let mut rng = StdRng::seed_from_u64(seed);
        let m = Grid::from_fn(15, 15, |_, _| 1e-3 + rng.random::<f64>());
        let w = spatial_pool(&m, 5).unwrap();
        prop_assert!(w.values().iter().all(|v| *v > 0.0));

        let hists = BlockHistogramSet::from_vec(5, 15, (0..5 * 5 * 45).map(|_| rng.random()).collect()).unwrap();
        let base = weight_xy_histograms(&hists, &w).unwrap();
        let scaled_w = spatial_pool(&m.map(|v| v * k), 5).unwrap();
        let scaled = weight_xy_histograms(&hists, &scaled_w).unwrap();
        for b1 in 0..5 {
            for b2 in 0..5 {
                let a = base.hist(b1, b2, Plane::Xy);
                let b = scaled.hist(b1, b2, Plane::Xy);
                for c in 0..15 {
                    prop_assert!((b[c] - k * a[c]).abs() <= 1e-12 * (1.0 + b[c].abs()));
                }
                let argmax = |h: &[f64]| (0..h.len()).fold(0, |best, i| if h[i] > h[best] { i } else { best });
                prop_assert_eq!(argmax(a), argmax(b));
            }
        }
    }
}
