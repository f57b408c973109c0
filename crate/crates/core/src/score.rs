//! Nonnegative attention score fields.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-entry mass added to a field (or a marginal) whose mass would otherwise be zero.
pub const MASS_FLOOR: f64 = 1e-8;

/// A row-major `height x width` field of nonnegative, finite scores.
///
/// Used both for token-grid maps produced by aggregation and for the
/// full-resolution score matrix that drives the warp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionScoreMatrix {
    height: usize,
    width: usize,
    scores: Vec<f64>,
}

impl AttentionScoreMatrix {
    pub fn new(height: usize, width: usize, scores: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidValue(format!(
                "score matrix dimensions must be positive, got {height}x{width}"
            )));
        }
        if scores.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "{height}x{width} matrix needs {} scores, got {}",
                height * width,
                scores.len()
            )));
        }
        if let Some(bad) = scores.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidValue(format!(
                "scores must be finite and nonnegative, found {bad}"
            )));
        }
        Ok(Self {
            height,
            width,
            scores,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        Self::new(height, width, rows.concat())
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn from_fn(height: usize, width: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let scores = (0..height)
            .flat_map(|i| (0..width).map(move |j| (i, j)))
            .map(|(i, j)| f(i, j))
            .collect();
        Self::new(height, width, scores)
    }

    /// Builds from arbitrary reals: negatives (e.g. resampling ringing) clamp to zero.
    pub(crate) fn from_clamped(height: usize, width: usize, mut scores: Vec<f64>) -> Result<Self> {
        for v in &mut scores {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        Self::new(height, width, scores)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.scores[row * self.width + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.scores[row * self.width..(row + 1) * self.width]
    }

    pub fn total_mass(&self) -> f64 {
        self.scores.iter().sum()
    }

    /// Adds [`MASS_FLOOR`] to every entry when the field carries no mass at all.
    pub fn with_mass_floor(mut self) -> Self {
        if self.total_mass() <= 0.0 {
            for v in &mut self.scores {
                *v += MASS_FLOOR;
            }
        }
        self
    }

    /// Row-major index of the largest score; the first one wins ties.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (k, &v) in self.scores.iter().enumerate() {
            if v > self.scores[best] {
                best = k;
            }
        }
        (best / self.width, best % self.width)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.height,
            self.width,
            self.scores.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn into_scores(self) -> Vec<f64> {
        self.scores
    }
}
