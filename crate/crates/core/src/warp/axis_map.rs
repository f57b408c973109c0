//! Monotone piecewise-linear maps of one image axis onto itself.
//!
//! A map over an axis of `n` pixels is stored as knots `(input[k], output[k])`,
//! both running from 0 to `n`. Pixel `k` owns the unit cell `[k, k + 1]`, so
//! the map built from a CDF sends cell boundary `k` to `n * M(k - 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::warp::profile::AxisCdf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisMap {
    input: Vec<f64>,
    output: Vec<f64>,
}

/// Piecewise-linear interpolation through `(xs, ys)` with `xs` nondecreasing.
/// On a flat run of `xs` the leftmost knot wins.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let k = xs.partition_point(|v| *v < x);
    if k == 0 {
        return ys[0];
    }
    if k == xs.len() {
        return ys[ys.len() - 1];
    }
    if xs[k] == x {
        return ys[k];
    }
    let t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    ys[k - 1] + t * (ys[k] - ys[k - 1])
}

impl AxisMap {
    pub fn identity(len: usize) -> Self {
        let knots = vec![0.0, len as f64];
        Self {
            input: knots.clone(),
            output: knots,
        }
    }

    pub fn from_cdf(cdf: &AxisCdf) -> Self {
        let n = cdf.len();
        let scale = n as f64;
        let input = (0..=n).map(|k| k as f64).collect();
        let mut output: Vec<f64> = std::iter::once(0.0)
            .chain(cdf.values().iter().map(|m| scale * m))
            .collect();
        output[n] = scale;
        Self { input, output }
    }

    /// Validates knots: same length >= 2, both nondecreasing, input strictly
    /// increasing, and both spanning exactly `[0, len]`.
    pub fn from_knots(len: usize, input: Vec<f64>, output: Vec<f64>) -> Result<Self> {
        let n = len as f64;
        let ok = input.len() == output.len()
            && input.len() >= 2
            && input.windows(2).all(|w| w[1] > w[0])
            && output.windows(2).all(|w| w[1] >= w[0])
            && input[0] == 0.0
            && output[0] == 0.0
            && input[input.len() - 1] == n
            && output[output.len() - 1] == n;
        if !ok {
            return Err(Error::InvalidValue(format!(
                "axis map knots must be monotone and span [0, {len}]"
            )));
        }
        Ok(Self { input, output })
    }

    /// Rebuilds a map from output-to-input samples at integer output positions
    /// `0..len` (the `fx`/`fy` arrays of a serialized field).
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let len = samples.len();
        let n = len as f64;
        if len == 0
            || samples.iter().any(|s| !s.is_finite() || *s < 0.0 || *s > n)
            || samples.windows(2).any(|w| w[1] < w[0])
        {
            return Err(Error::InvalidValue(
                "sample map must be nondecreasing within [0, len]".into(),
            ));
        }
        let mut input = Vec::with_capacity(len + 1);
        let mut output = Vec::with_capacity(len + 1);
        for (j, &s) in samples.iter().enumerate() {
            // repeated sources collapse onto their first output position
            if input.last().is_none_or(|&last| s > last) {
                input.push(s);
                output.push(j as f64);
            }
        }
        if input[0] != 0.0 {
            input.insert(0, 0.0);
            output.insert(0, 0.0);
        }
        if *input.last().unwrap() < n {
            input.push(n);
            output.push(n);
        } else {
            *output.last_mut().unwrap() = n;
        }
        Self::from_knots(len, input, output)
    }

    /// Number of pixels along the axis.
    pub fn len(&self) -> usize {
        self.input[self.input.len() - 1] as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_knots(&self) -> &[f64] {
        &self.input
    }

    pub fn output_knots(&self) -> &[f64] {
        &self.output
    }

    /// Where input coordinate `x` lands in the output frame.
    pub fn to_output(&self, x: f64) -> f64 {
        interpolate(&self.input, &self.output, x)
    }

    /// Which input coordinate output coordinate `y` samples from.
    pub fn to_input(&self, y: f64) -> f64 {
        interpolate(&self.output, &self.input, y)
    }

    /// `next` applied after `self`: input frame of `self` to output frame of `next`.
    pub fn then(&self, next: &AxisMap) -> Result<AxisMap> {
        if self.len() != next.len() {
            return Err(Error::ShapeMismatch(format!(
                "cannot compose axis maps of length {} and {}",
                self.len(),
                next.len()
            )));
        }
        let mut knots: Vec<f64> = self
            .input
            .iter()
            .copied()
            .chain(next.input.iter().map(|&y| self.to_input(y)))
            .collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let n = self.len() as f64;
        *knots.first_mut().unwrap() = 0.0;
        *knots.last_mut().unwrap() = n;
        let mut output: Vec<f64> = knots
            .iter()
            .map(|&x| next.to_output(self.to_output(x)))
            .collect();
        // guard against rounding dips
        for k in 1..output.len() {
            if output[k] < output[k - 1] {
                output[k] = output[k - 1];
            }
        }
        output[0] = 0.0;
        *output.last_mut().unwrap() = n;
        Ok(AxisMap {
            input: knots,
            output,
        })
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.input
            .iter()
            .zip(&self.output)
            .all(|(a, b)| (a - b).abs() <= tol)
    }
}
