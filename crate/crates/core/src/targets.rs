//! Unit-mass axis marginals, the regression targets for a marginal predictor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score::AttentionScoreMatrix;
use crate::warp::marginals;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalTargets {
    pub m_x: Vec<f64>,
    pub m_y: Vec<f64>,
}

/// Column and row marginals of `scores`, each normalized to sum 1.
/// Zero-mass maps are rejected rather than floored.
pub fn marginal_targets(scores: &AttentionScoreMatrix) -> Result<MarginalTargets> {
    if scores.total_mass() <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let (mx, my) = marginals(scores);
    Ok(MarginalTargets {
        m_x: mx.normalized()?,
        m_y: my.normalized()?,
    })
}
