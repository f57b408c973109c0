use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score::{AttentionScoreMatrix, MASS_FLOOR};
use crate::warp::axis_map::AxisMap;
use crate::warp::profile::{cdf, marginals, Axis, AxisCdf};

/// A rectilinear warp: independent monotone maps for the x and y axes.
///
/// Output pixel `(i, j)` samples the input at `(source_y(i), source_x(j))`;
/// input coordinate `(y, x)` lands at `(target_y(y), target_x(x))`.
/// Coordinates are 0-based with pixel `k` at coordinate `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpField {
    width: usize,
    height: usize,
    x: AxisMap,
    y: AxisMap,
}

impl WarpField {
    pub fn identity(height: usize, width: usize) -> Self {
        Self {
            width,
            height,
            x: AxisMap::identity(width),
            y: AxisMap::identity(height),
        }
    }

    /// Inverse-CDF warp from the two axis CDFs.
    pub fn build(cdf_x: &AxisCdf, cdf_y: &AxisCdf) -> Result<Self> {
        if cdf_x.axis() != Axis::Horizontal || cdf_y.axis() != Axis::Vertical {
            return Err(Error::InvalidValue(
                "expected a horizontal and a vertical cdf".into(),
            ));
        }
        Ok(Self {
            width: cdf_x.len(),
            height: cdf_y.len(),
            x: AxisMap::from_cdf(cdf_x),
            y: AxisMap::from_cdf(cdf_y),
        })
    }

    /// Marginals of `scores`, floored by [`MASS_FLOOR`] per entry, turned into CDFs and inverted.
    pub fn from_scores(scores: &AttentionScoreMatrix) -> Result<Self> {
        let (mx, my) = marginals(scores);
        let cx = cdf(&mx.with_floor(MASS_FLOOR))?;
        let cy = cdf(&my.with_floor(MASS_FLOOR))?;
        Self::build(&cx, &cy)
    }

    pub fn from_axis_maps(x: AxisMap, y: AxisMap) -> Self {
        Self {
            width: x.len(),
            height: y.len(),
            x,
            y,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn x_map(&self) -> &AxisMap {
        &self.x
    }

    pub fn y_map(&self) -> &AxisMap {
        &self.y
    }

    pub fn source_x(&self, out_x: f64) -> f64 {
        self.x.to_input(out_x)
    }

    pub fn source_y(&self, out_y: f64) -> f64 {
        self.y.to_input(out_y)
    }

    pub fn target_x(&self, in_x: f64) -> f64 {
        self.x.to_output(in_x)
    }

    pub fn target_y(&self, in_y: f64) -> f64 {
        self.y.to_output(in_y)
    }

    /// Sampling positions of every output column, `fx(0..W)`.
    pub fn fx(&self) -> Vec<f64> {
        (0..self.width).map(|j| self.source_x(j as f64)).collect()
    }

    /// Sampling positions of every output row, `fy(0..H)`.
    pub fn fy(&self) -> Vec<f64> {
        (0..self.height).map(|i| self.source_y(i as f64)).collect()
    }

    /// `next` applied after `self`.
    pub fn then(&self, next: &WarpField) -> Result<WarpField> {
        if (self.height, self.width) != (next.height, next.width) {
            return Err(Error::DimensionMismatch {
                expected: (self.height, self.width),
                actual: (next.height, next.width),
            });
        }
        Ok(Self {
            width: self.width,
            height: self.height,
            x: self.x.then(&next.x)?,
            y: self.y.then(&next.y)?,
        })
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.x.is_identity(tol) && self.y.is_identity(tol)
    }

    pub fn to_json(&self) -> WarpFieldJson {
        WarpFieldJson {
            width: self.width,
            height: self.height,
            fx: self.fx(),
            fy: self.fy(),
            x_knots: Some(Knots {
                input: self.x.input_knots().to_vec(),
                output: self.x.output_knots().to_vec(),
            }),
            y_knots: Some(Knots {
                input: self.y.input_knots().to_vec(),
                output: self.y.output_knots().to_vec(),
            }),
        }
    }

    pub fn from_json(json: &WarpFieldJson) -> Result<Self> {
        if json.fx.len() != json.width || json.fy.len() != json.height {
            return Err(Error::ShapeMismatch(format!(
                "field declares {}x{} but has {} fx and {} fy samples",
                json.height,
                json.width,
                json.fx.len(),
                json.fy.len()
            )));
        }
        let axis = |len: usize, knots: &Option<Knots>, samples: &[f64]| match knots {
            Some(k) => AxisMap::from_knots(len, k.input.clone(), k.output.clone()),
            None => AxisMap::from_samples(samples),
        };
        Ok(Self::from_axis_maps(
            axis(json.width, &json.x_knots, &json.fx)?,
            axis(json.height, &json.y_knots, &json.fy)?,
        ))
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_json())?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&serde_json::from_str(&text)?)
    }
}

/// Knot lists of one axis map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knots {
    pub input: Vec<f64>,
    pub output: Vec<f64>,
}

/// Serialized warp field. `fx`/`fy` alone are enough to rebuild a field;
/// the knot lists, when present, make the rebuild exact between samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpFieldJson {
    pub width: usize,
    pub height: usize,
    pub fx: Vec<f64>,
    pub fy: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_knots: Option<Knots>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_knots: Option<Knots>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_scores_give_identity() {
        let a = AttentionScoreMatrix::filled(6, 9, 0.3).unwrap();
        let f = WarpField::from_scores(&a).unwrap();
        assert!(f.is_identity(1e-9));
        for (j, x) in f.fx().iter().enumerate() {
            assert!((x - j as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn sampling_stays_in_bounds_and_monotone() {
        let a = AttentionScoreMatrix::from_fn(7, 11, |i, j| ((i * 3 + j * 5) % 7) as f64).unwrap();
        let f = WarpField::from_scores(&a).unwrap();
        for s in [f.fx(), f.fy()] {
            assert!(s[0] >= 0.0);
            assert!(s.windows(2).all(|w| w[1] >= w[0]));
        }
        assert!(*f.fx().last().unwrap() < 11.0);
        assert!(*f.fy().last().unwrap() < 7.0);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let a = AttentionScoreMatrix::from_fn(5, 8, |i, j| (i + 2 * j) as f64 + 0.5).unwrap();
        let f = WarpField::from_scores(&a).unwrap();
        let text = f.to_json_string().unwrap();
        let back = WarpField::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn json_without_knots_uses_samples() {
        let json: WarpFieldJson = serde_json::from_str(
            r#"{"width":4,"height":2,"fx":[0,0.5,1,2],"fy":[0,1]}"#,
        )
        .unwrap();
        let f = WarpField::from_json(&json).unwrap();
        assert_eq!(f.fx(), vec![0.0, 0.5, 1.0, 2.0]);
        assert_eq!(f.fy(), vec![0.0, 1.0]);
        let bad: WarpFieldJson =
            serde_json::from_str(r#"{"width":3,"height":1,"fx":[0,1],"fy":[0]}"#).unwrap();
        assert!(WarpField::from_json(&bad).is_err());
    }

    #[test]
    fn build_checks_axes() {
        let c = AxisCdf::from_cumulative(Axis::Horizontal, vec![0.5, 1.0]).unwrap();
        assert!(WarpField::build(&c, &c).is_err());
    }
}
