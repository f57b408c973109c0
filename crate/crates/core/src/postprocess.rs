//! Token-grid map to full-resolution score matrix: Lanczos-3 upsampling,
//! `k x k` box smoothing and an elementwise sharpness transform, in that order.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score::AttentionScoreMatrix;

pub const DEFAULT_SMOOTH_K: usize = 3;
const LANCZOS_LOBES: f64 = 3.0;

/// Elementwise monotone map applied to the upsampled, smoothed scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SharpnessTransform {
    Sqrt,
    #[default]
    Identity,
    Square,
    Cube,
}

impl SharpnessTransform {
    pub const ALL: [SharpnessTransform; 4] = [
        SharpnessTransform::Sqrt,
        SharpnessTransform::Identity,
        SharpnessTransform::Square,
        SharpnessTransform::Cube,
    ];

    pub fn apply(self, x: f64) -> f64 {
        match self {
            SharpnessTransform::Sqrt => x.sqrt(),
            SharpnessTransform::Identity => x,
            SharpnessTransform::Square => x * x,
            SharpnessTransform::Cube => x * x * x,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SharpnessTransform::Sqrt => "sqrt",
            SharpnessTransform::Identity => "identity",
            SharpnessTransform::Square => "square",
            SharpnessTransform::Cube => "cube",
        }
    }
}

impl fmt::Display for SharpnessTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SharpnessTransform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sqrt" => Ok(SharpnessTransform::Sqrt),
            "identity" | "linear" => Ok(SharpnessTransform::Identity),
            "square" => Ok(SharpnessTransform::Square),
            "cube" => Ok(SharpnessTransform::Cube),
            other => Err(Error::InvalidValue(format!("unknown transform '{other}'"))),
        }
    }
}

#[inline]
pub fn lanczos3(x: f64) -> f64 {
    let x = x.abs();
    if x < 1e-12 {
        1.0
    } else if x >= LANCZOS_LOBES {
        0.0
    } else {
        let px = PI * x;
        LANCZOS_LOBES * px.sin() * (px / LANCZOS_LOBES).sin() / (px * px)
    }
}

/// Per output sample: first contributing input index and normalized weights.
fn lanczos_weights(input: usize, output: usize) -> Vec<(usize, Vec<f64>)> {
    let scale = input as f64 / output as f64;
    // widen the kernel when shrinking so every input sample contributes
    let filter_scale = scale.max(1.0);
    let support = LANCZOS_LOBES * filter_scale;
    (0..output)
        .map(|o| {
            let center = (o as f64 + 0.5) * scale - 0.5;
            let lo = ((center - support).floor().max(0.0)) as usize;
            let hi = ((center + support).ceil() as usize).min(input - 1);
            let mut weights: Vec<f64> = (lo..=hi)
                .map(|i| lanczos3((i as f64 - center) / filter_scale))
                .collect();
            let sum: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= sum;
            }
            (lo, weights)
        })
        .collect()
}

/// Separable Lanczos-3 resampling of a row-major `h x w` field. Output may be
/// negative near sharp edges; callers clamp.
pub fn lanczos_resample(
    values: &[f64],
    height: usize,
    width: usize,
    out_h: usize,
    out_w: usize,
) -> Vec<f64> {
    if (height, width) == (out_h, out_w) {
        return values.to_vec();
    }
    let col_weights = lanczos_weights(width, out_w);
    let mut horizontal = vec![0.0; height * out_w];
    for r in 0..height {
        let src = &values[r * width..(r + 1) * width];
        for (c, (lo, ws)) in col_weights.iter().enumerate() {
            horizontal[r * out_w + c] = ws.iter().zip(&src[*lo..]).map(|(w, v)| w * v).sum();
        }
    }
    let row_weights = lanczos_weights(height, out_h);
    let mut out = vec![0.0; out_h * out_w];
    for (r, (lo, ws)) in row_weights.iter().enumerate() {
        for (k, w) in ws.iter().enumerate() {
            let src = &horizontal[(lo + k) * out_w..(lo + k + 1) * out_w];
            for (dst, v) in out[r * out_w..(r + 1) * out_w].iter_mut().zip(src) {
                *dst += w * v;
            }
        }
    }
    out
}

/// Stride-1 `k x k` mean filter; windows are truncated at the border and
/// averaged over the in-bounds entries only.
pub fn box_smooth(values: &[f64], height: usize, width: usize, k: usize) -> Result<Vec<f64>> {
    if k == 0 || k.is_multiple_of(2) {
        return Err(Error::InvalidKernel(k));
    }
    if k == 1 {
        return Ok(values.to_vec());
    }
    let r = k / 2;
    // summed-area table with a zero border row/column
    let sw = width + 1;
    let mut sat = vec![0.0; (height + 1) * sw];
    for i in 0..height {
        let mut row_sum = 0.0;
        for j in 0..width {
            row_sum += values[i * width + j];
            sat[(i + 1) * sw + j + 1] = sat[i * sw + j + 1] + row_sum;
        }
    }
    let mut out = vec![0.0; height * width];
    for i in 0..height {
        let (r0, r1) = (i.saturating_sub(r), (i + r + 1).min(height));
        for j in 0..width {
            let (c0, c1) = (j.saturating_sub(r), (j + r + 1).min(width));
            let sum = sat[r1 * sw + c1] - sat[r0 * sw + c1] - sat[r1 * sw + c0] + sat[r0 * sw + c0];
            out[i * width + j] = sum / ((r1 - r0) * (c1 - c0)) as f64;
        }
    }
    Ok(out)
}

/// Upsamples a token-grid map to `target_h x target_w`, smooths it, clamps
/// negative ringing to zero and applies `transform`. An all-zero result gets
/// the uniform mass floor.
pub fn postprocess(
    grid: &AttentionScoreMatrix,
    target_h: usize,
    target_w: usize,
    smooth_k: usize,
    transform: SharpnessTransform,
) -> Result<AttentionScoreMatrix> {
    if target_h == 0 || target_w == 0 {
        return Err(Error::InvalidValue(format!(
            "target dimensions must be positive, got {target_h}x{target_w}"
        )));
    }
    if target_h < grid.height() || target_w < grid.width() {
        return Err(Error::InvalidValue(format!(
            "target {target_h}x{target_w} is smaller than the {}x{} grid",
            grid.height(),
            grid.width()
        )));
    }
    if smooth_k == 0 || smooth_k.is_multiple_of(2) {
        return Err(Error::InvalidKernel(smooth_k));
    }
    let up = lanczos_resample(grid.scores(), grid.height(), grid.width(), target_h, target_w);
    let smoothed = box_smooth(&up, target_h, target_w, smooth_k)?;
    let clamped = AttentionScoreMatrix::from_clamped(target_h, target_w, smoothed)?;
    Ok(clamped.map(|v| transform.apply(v))?.with_mass_floor())
}

/// Resamples a full-resolution field to new dimensions (either direction),
/// clamping ringing at zero. No smoothing or transform.
pub fn resize_scores(
    map: &AttentionScoreMatrix,
    out_h: usize,
    out_w: usize,
) -> Result<AttentionScoreMatrix> {
    let values = lanczos_resample(map.scores(), map.height(), map.width(), out_h, out_w);
    AttentionScoreMatrix::from_clamped(out_h, out_w, values)
}
