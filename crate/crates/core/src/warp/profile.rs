//! Axis marginals of a score matrix and their normalized cumulative sums.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score::AttentionScoreMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Along image columns (x); one entry per column.
    Horizontal,
    /// Along image rows (y); one entry per row.
    Vertical,
}

/// Unnormalized 1-D attention density along one axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisProfile {
    axis: Axis,
    values: Vec<f64>,
}

impl AxisProfile {
    pub fn new(axis: Axis, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidValue("empty axis profile".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidValue(format!(
                "profile entries must be finite and nonnegative, found {bad}"
            )));
        }
        Ok(Self { axis, values })
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Adds `floor` to every entry so no run of the profile is massless.
    pub fn with_floor(mut self, floor: f64) -> Self {
        for v in &mut self.values {
            *v += floor;
        }
        self
    }

    /// Rescaled to unit mass.
    pub fn normalized(&self) -> Result<Vec<f64>> {
        let total = self.total();
        if total <= 0.0 {
            return Err(Error::ZeroMass);
        }
        Ok(self.values.iter().map(|v| v / total).collect())
    }
}

/// Normalized prefix sums of a profile: entry `k` is the mass fraction of
/// entries `0..=k`, so the last entry is exactly 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisCdf {
    axis: Axis,
    cumulative: Vec<f64>,
}

impl AxisCdf {
    /// Accepts an already cumulative sequence (nondecreasing, in `[0, 1]`, ending at 1).
    pub fn from_cumulative(axis: Axis, cumulative: Vec<f64>) -> Result<Self> {
        let last = *cumulative
            .last()
            .ok_or_else(|| Error::InvalidValue("empty cdf".into()))?;
        if (last - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidValue(format!("cdf must end at 1, ends at {last}")));
        }
        if cumulative[0] < 0.0 || cumulative.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidValue("cdf must be nondecreasing from >= 0".into()));
        }
        let mut cumulative = cumulative;
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(Self { axis, cumulative })
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn values(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }
}

/// Column sums (horizontal profile, length W) and row sums (vertical profile, length H).
pub fn marginals(scores: &AttentionScoreMatrix) -> (AxisProfile, AxisProfile) {
    let (h, w) = scores.dims();
    let mut mx = vec![0.0; w];
    let mut my = vec![0.0; h];
    for (i, row_sum) in my.iter_mut().enumerate() {
        for (col, v) in mx.iter_mut().zip(scores.row(i)) {
            *col += v;
            *row_sum += v;
        }
    }
    (
        AxisProfile {
            axis: Axis::Horizontal,
            values: mx,
        },
        AxisProfile {
            axis: Axis::Vertical,
            values: my,
        },
    )
}

pub fn cdf(profile: &AxisProfile) -> Result<AxisCdf> {
    let total = profile.total();
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::ZeroMass);
    }
    let mut running = 0.0;
    let mut cumulative: Vec<f64> = profile
        .values
        .iter()
        .map(|v| {
            running += v;
            (running / total).min(1.0)
        })
        .collect();
    *cumulative.last_mut().unwrap() = 1.0;
    Ok(AxisCdf {
        axis: profile.axis,
        cumulative,
    })
}
