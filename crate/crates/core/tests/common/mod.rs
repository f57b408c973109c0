//! Reference computations shared by the integration suites. Each one is
//! written directly from the definition, independent of the library's code path.
#![allow(dead_code)]

use std::f64::consts::PI;

use attwarp_core::{AttentionScoreMatrix, RawAttentionShape, RawAttentionTensor};
use image::{Rgb, RgbImage};
use rand::Rng;

/// Mean over the selected layers, heads and output tokens with explicit loops.
pub fn triple_loop_mean(raw: &RawAttentionTensor, layer_positions: &[usize]) -> Vec<f64> {
    let s = raw.shape();
    let tokens = s.grid_h * s.grid_w;
    let mut out = vec![0.0; tokens];
    for (t, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for &l in layer_positions {
            for m in 0..s.out_tokens {
                for h in 0..s.heads {
                    acc += raw.weight(l, h, m, t);
                }
            }
        }
        *slot = acc / (s.out_tokens * s.heads * layer_positions.len()) as f64;
    }
    out
}

pub fn random_raw(rng: &mut impl Rng, layers: usize, heads: usize, out_tokens: usize, gh: usize, gw: usize) -> RawAttentionTensor {
    let shape = RawAttentionShape {
        layers,
        heads,
        out_tokens,
        grid_h: gh,
        grid_w: gw,
        layer_ids: None,
    };
    let weights = (0..shape.rows() * shape.img_tokens()).map(|_| rng.gen::<f64>()).collect();
    RawAttentionTensor::new(&shape, weights).unwrap()
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

fn lanczos3(x: f64) -> f64 {
    if x.abs() < 3.0 {
        sinc(x) * sinc(x / 3.0)
    } else {
        0.0
    }
}

/// Direct 2-D Lanczos-3 upsampling: every output pixel sums the full input
/// with the product kernel, normalized by the in-bounds weight.
pub fn brute_force_lanczos(src: &[Vec<f64>], out_h: usize, out_w: usize) -> Vec<Vec<f64>> {
    let (h, w) = (src.len(), src[0].len());
    let (sy, sx) = (h as f64 / out_h as f64, w as f64 / out_w as f64);
    let mut out = vec![vec![0.0; out_w]; out_h];
    for (i, row) in out.iter_mut().enumerate() {
        let cy = (i as f64 + 0.5) * sy - 0.5;
        for (j, v) in row.iter_mut().enumerate() {
            let cx = (j as f64 + 0.5) * sx - 0.5;
            let (mut acc, mut norm) = (0.0, 0.0);
            for (r, src_row) in src.iter().enumerate() {
                for (c, s) in src_row.iter().enumerate() {
                    let k = lanczos3(r as f64 - cy) * lanczos3(c as f64 - cx);
                    acc += k * s;
                    norm += k;
                }
            }
            *v = acc / norm;
        }
    }
    out
}

/// The interpolated CDF at normalized position `u`, built straight from the
/// profile: knots at `k / n` carry the mass fraction of entries `< k`.
pub fn interpolated_cdf(profile: &[f64], u: f64) -> f64 {
    let n = profile.len();
    let total: f64 = profile.iter().sum();
    let pos = (u * n as f64).clamp(0.0, n as f64);
    let whole = (pos.floor() as usize).min(n - 1);
    let before: f64 = profile[..whole].iter().sum();
    (before + (pos - whole as f64) * profile[whole]) / total
}

/// Smallest `u` with `interpolated_cdf(u) >= target`, by bisection.
pub fn bisection_inverse(profile: &[f64], target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if interpolated_cdf(profile, mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Mass fraction of entries `a..b` from prefix sums.
pub fn mass_fraction(profile: &[f64], a: usize, b: usize) -> f64 {
    let mut prefix = vec![0.0];
    for v in profile {
        prefix.push(prefix.last().unwrap() + v);
    }
    (prefix[b] - prefix[a]) / prefix[profile.len()]
}

pub fn random_positive_profile(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(0.01..1.0)).collect()
}

pub fn random_positive_scores(rng: &mut impl Rng, h: usize, w: usize) -> AttentionScoreMatrix {
    let scores = (0..h * w).map(|_| rng.gen_range(0.05..1.0)).collect();
    AttentionScoreMatrix::new(h, w, scores).unwrap()
}

/// Smooth attention: a few Gaussian blobs over a floor.
pub fn random_blob_scores(rng: &mut impl Rng, h: usize, w: usize) -> AttentionScoreMatrix {
    let blobs: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.gen_range(0.0..h as f64),
                rng.gen_range(0.0..w as f64),
                rng.gen_range(2.0..10.0),
                rng.gen_range(0.5..3.0),
            )
        })
        .collect();
    AttentionScoreMatrix::from_fn(h, w, |i, j| {
        0.05 + blobs
            .iter()
            .map(|(cy, cx, s, a)| {
                let d2 = (i as f64 - cy).powi(2) + (j as f64 - cx).powi(2);
                a * (-d2 / (2.0 * s * s)).exp()
            })
            .sum::<f64>()
    })
    .unwrap()
}

pub fn random_image(rng: &mut impl Rng, w: u32, h: u32) -> RgbImage {
    RgbImage::from_fn(w, h, |_, _| Rgb([rng.gen(), rng.gen(), rng.gen()]))
}

/// Low-frequency RGB image: per channel, two sinusoids over the frame.
pub fn smooth_image(rng: &mut impl Rng, w: u32, h: u32) -> RgbImage {
    let params: Vec<[f64; 6]> = (0..3)
        .map(|_| {
            [
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.5..2.0),
                rng.gen_range(-2.0..-0.5),
                rng.gen_range(0.0..std::f64::consts::TAU),
            ]
        })
        .collect();
    RgbImage::from_fn(w, h, |x, y| {
        let (u, v) = (x as f64 / w as f64, y as f64 / h as f64);
        let ch = |p: &[f64; 6]| {
            let s = 128.0
                + 60.0 * (2.0 * PI * (p[0] * u + p[1] * v) + p[2]).sin()
                + 40.0 * (2.0 * PI * (p[3] * u + p[4] * v) + p[5]).cos();
            s.round().clamp(0.0, 255.0) as u8
        };
        Rgb([ch(&params[0]), ch(&params[1]), ch(&params[2])])
    })
}

pub fn mean_abs_error(a: &RgbImage, b: &RgbImage) -> f64 {
    let total: f64 = a
        .as_raw()
        .iter()
        .zip(b.as_raw())
        .map(|(x, y)| (f64::from(*x) - f64::from(*y)).abs())
        .sum();
    total / a.as_raw().len() as f64
}

pub fn max_abs_error(a: &RgbImage, b: &RgbImage) -> u8 {
    a.as_raw()
        .iter()
        .zip(b.as_raw())
        .map(|(x, y)| x.abs_diff(*y))
        .max()
        .unwrap_or(0)
}
