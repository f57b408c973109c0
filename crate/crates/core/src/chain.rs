//! Iterated warping: re-extract attention on each warped image, warp again,
//! and stop once successive attention distributions agree (KL below a
//! threshold) or the iteration cap is reached.
//!
//! Successive attention maps live on differently warped frames. Before
//! comparing them, each map is pulled back to the original image frame through
//! the composed warp, moving the mass of every warped cell onto the original
//! cells that map into it.

use image::Pixel;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::score::AttentionScoreMatrix;
use crate::warp::{warp_image, Image, Sample, WarpField};

/// Additive smoothing applied to both sides of a KL comparison.
pub const KL_SMOOTHING: f64 = 1e-10;
pub const DEFAULT_KL_EPSILON: f64 = 0.2;
pub const DEFAULT_MAX_ITERATIONS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub kl_epsilon: f64,
    pub max_iterations: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            kl_epsilon: DEFAULT_KL_EPSILON,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kl_epsilon.is_finite() && self.kl_epsilon >= 0.0) {
            return Err(Error::InvalidValue(format!(
                "kl_epsilon must be a nonnegative number, got {}",
                self.kl_epsilon
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidValue("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// A score field normalized to unit mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionDistribution {
    height: usize,
    width: usize,
    probabilities: Vec<f64>,
}

impl AttentionDistribution {
    pub fn from_scores(scores: &AttentionScoreMatrix) -> Result<Self> {
        Self::normalize(scores.height(), scores.width(), scores.scores().to_vec())
    }

    fn normalize(height: usize, width: usize, mut values: Vec<f64>) -> Result<Self> {
        let total: f64 = values.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::ZeroMass);
        }
        for v in &mut values {
            *v /= total;
        }
        Ok(Self {
            height,
            width,
            probabilities: values,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Pulls a distribution observed on a warped frame back to the original
    /// frame of `field` (which maps original to warped coordinates). Original
    /// pixel `(i, j)` receives the mass the warped field holds over the image
    /// of its cell `[j, j+1] x [i, i+1]`.
    pub fn pull_back(scores: &AttentionScoreMatrix, field: &WarpField) -> Result<Self> {
        let (h, w) = scores.dims();
        if (h, w) != (field.height(), field.width()) {
            return Err(Error::DimensionMismatch {
                expected: (field.height(), field.width()),
                actual: (h, w),
            });
        }
        if field.is_identity(1e-9) {
            return Self::from_scores(scores);
        }
        let sw = w + 1;
        let mut sat = vec![0.0; (h + 1) * sw];
        for i in 0..h {
            let mut run = 0.0;
            for (j, v) in scores.row(i).iter().enumerate() {
                run += v;
                sat[(i + 1) * sw + j + 1] = sat[i * sw + j + 1] + run;
            }
        }
        // cumulative mass of [0, x] x [0, y], exact for a cellwise-constant density
        let integral = |x: f64, y: f64| {
            let x = x.clamp(0.0, w as f64);
            let y = y.clamp(0.0, h as f64);
            let (x0, y0) = ((x.floor() as usize).min(w - 1), (y.floor() as usize).min(h - 1));
            let (tx, ty) = (x - x0 as f64, y - y0 as f64);
            let s = |r: usize, c: usize| sat[r * sw + c];
            let top = s(y0, x0) + tx * (s(y0, x0 + 1) - s(y0, x0));
            let bottom = s(y0 + 1, x0) + tx * (s(y0 + 1, x0 + 1) - s(y0 + 1, x0));
            top + ty * (bottom - top)
        };
        let xs: Vec<f64> = (0..=w).map(|j| field.target_x(j as f64)).collect();
        let ys: Vec<f64> = (0..=h).map(|i| field.target_y(i as f64)).collect();
        let mut mass = Vec::with_capacity(h * w);
        for i in 0..h {
            for j in 0..w {
                let m = integral(xs[j + 1], ys[i + 1]) - integral(xs[j], ys[i + 1])
                    - integral(xs[j + 1], ys[i])
                    + integral(xs[j], ys[i]);
                mass.push(m.max(0.0));
            }
        }
        Self::normalize(h, w, mass)
    }
}

/// `KL(p || q)` after adding [`KL_SMOOTHING`] to every entry of both and renormalizing.
pub fn kl_divergence(p: &AttentionDistribution, q: &AttentionDistribution) -> Result<f64> {
    if p.dims() != q.dims() {
        return Err(Error::DimensionMismatch {
            expected: p.dims(),
            actual: q.dims(),
        });
    }
    let n = p.probabilities.len() as f64;
    let norm = 1.0 + n * KL_SMOOTHING;
    let kl: f64 = p
        .probabilities
        .iter()
        .zip(&q.probabilities)
        .map(|(a, b)| {
            let a = (a + KL_SMOOTHING) / norm;
            let b = (b + KL_SMOOTHING) / norm;
            a * (a / b).ln()
        })
        .sum();
    Ok(kl.max(0.0))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("attention provider failed: {0}")]
pub struct ProviderError(pub String);

/// Source of attention maps for the chain. `depth` is the number of warps
/// already applied to `image`.
pub trait AttentionProvider<P: Pixel> {
    fn attention(
        &mut self,
        image: &Image<P>,
        depth: usize,
    ) -> std::result::Result<AttentionScoreMatrix, ProviderError>;
}

impl<P, F> AttentionProvider<P> for F
where
    P: Pixel,
    F: FnMut(&Image<P>, usize) -> std::result::Result<AttentionScoreMatrix, ProviderError>,
{
    fn attention(
        &mut self,
        image: &Image<P>,
        depth: usize,
    ) -> std::result::Result<AttentionScoreMatrix, ProviderError> {
        self(image, depth)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    KlConverged,
    MaxIterations,
    ProviderExhausted,
}

#[derive(Debug, Clone)]
pub struct ChainStep {
    /// 1-based warp count after this step.
    pub depth: usize,
    /// Warp applied at this step, from the previous frame to this one.
    pub field: WarpField,
    /// Original frame to this step's frame.
    pub composed: WarpField,
    /// Attention on this step's image, pulled back to the original frame.
    /// `None` when the provider failed after the warp.
    pub distribution: Option<AttentionDistribution>,
    /// Divergence from the previous step's distribution.
    pub kl: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ChainTrace {
    pub initial: Option<AttentionDistribution>,
    pub steps: Vec<ChainStep>,
    pub stop_reason: StopReason,
    pub provider_error: Option<String>,
}

/// Serializable view of a trace: the numbers, without the dense fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainTraceSummary {
    pub stop_reason: StopReason,
    pub depth: usize,
    pub config: ChainConfig,
    pub steps: Vec<ChainStepSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStepSummary {
    pub depth: usize,
    pub kl: Option<f64>,
    /// Where the step's field was written, when it was.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_path: Option<String>,
}

impl ChainTrace {
    pub fn depth(&self) -> usize {
        self.steps.len()
    }

    pub fn kl_values(&self) -> Vec<f64> {
        self.steps.iter().filter_map(|s| s.kl).collect()
    }

    pub fn summary(&self, config: ChainConfig) -> ChainTraceSummary {
        ChainTraceSummary {
            stop_reason: self.stop_reason,
            depth: self.depth(),
            config,
            steps: self
                .steps
                .iter()
                .map(|s| ChainStepSummary {
                    depth: s.depth,
                    kl: s.kl,
                    field_path: None,
                })
                .collect(),
            provider_error: self.provider_error.clone(),
        }
    }
}

#[derive(Clone)]
pub struct ChainOutcome<P: Pixel> {
    /// The iteratively warped image.
    pub image: Image<P>,
    /// Single field equivalent to all applied steps.
    pub field: WarpField,
    pub trace: ChainTrace,
}

fn check_dims<P: Pixel>(image: &Image<P>, scores: &AttentionScoreMatrix) -> Result<()> {
    let expected = (image.height() as usize, image.width() as usize);
    if scores.dims() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: scores.dims(),
        });
    }
    Ok(())
}

/// Runs the chain on `image`. Always halts within `config.max_iterations`
/// warps. A provider failure ends the chain early with
/// [`StopReason::ProviderExhausted`] and the best result so far; a provider
/// map with the wrong dimensions is an error.
pub fn run_chain<P, A>(image: &Image<P>, provider: &mut A, config: ChainConfig) -> Result<ChainOutcome<P>>
where
    P: Pixel,
    P::Subpixel: Sample,
    A: AttentionProvider<P> + ?Sized,
{
    config.validate()?;
    let (h, w) = (image.height() as usize, image.width() as usize);
    let mut current = image.clone();
    let mut composed = WarpField::identity(h, w);
    let mut steps = Vec::new();

    let exhausted = |current, composed, initial, steps, err: ProviderError| ChainOutcome {
        image: current,
        field: composed,
        trace: ChainTrace {
            initial,
            steps,
            stop_reason: StopReason::ProviderExhausted,
            provider_error: Some(err.0),
        },
    };

    let mut scores = match provider.attention(&current, 0) {
        Ok(s) => s,
        Err(e) => return Ok(exhausted(current, composed, None, steps, e)),
    };
    check_dims(&current, &scores)?;
    let initial = AttentionDistribution::from_scores(&scores.clone().with_mass_floor())?;
    let mut previous = initial.clone();

    for depth in 1..=config.max_iterations {
        let field = WarpField::from_scores(&scores)?;
        current = warp_image(&current, &field)?;
        composed = composed.then(&field)?;
        let mut step = ChainStep {
            depth,
            field,
            composed: composed.clone(),
            distribution: None,
            kl: None,
        };

        scores = match provider.attention(&current, depth) {
            Ok(s) => s,
            Err(e) => {
                steps.push(step);
                return Ok(exhausted(current, composed, Some(initial), steps, e));
            }
        };
        check_dims(&current, &scores)?;
        let dist = AttentionDistribution::pull_back(&scores.clone().with_mass_floor(), &composed)?;
        let kl = kl_divergence(&dist, &previous)?;
        step.kl = Some(kl);
        step.distribution = Some(dist.clone());
        steps.push(step);
        previous = dist;

        let stop = if kl < config.kl_epsilon {
            Some(StopReason::KlConverged)
        } else if depth == config.max_iterations {
            Some(StopReason::MaxIterations)
        } else {
            None
        };
        if let Some(stop_reason) = stop {
            return Ok(ChainOutcome {
                image: current,
                field: composed,
                trace: ChainTrace {
                    initial: Some(initial),
                    steps,
                    stop_reason,
                    provider_error: None,
                },
            });
        }
    }
    unreachable!("loop returns by the final iteration")
}
