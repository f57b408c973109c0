use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::warp::field::WarpField;

/// Axis-aligned box in image coordinates.
///
/// For warping, corners are continuous coordinates on `[0, W] x [0, H]`, so
/// `[0, 0, W, H]` is the whole image. For pixel membership (the localization
/// metrics) the bounds are inclusive: pixel `(row, col)` is inside when
/// `x_min <= col <= x_max` and `y_min <= row <= y_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl From<[f64; 4]> for BoundingBox {
    fn from(v: [f64; 4]) -> Self {
        BoundingBox {
            x_min: v[0],
            y_min: v[1],
            x_max: v[2],
            y_max: v[3],
        }
    }
}

impl From<BoundingBox> for [f64; 4] {
    fn from(b: BoundingBox) -> Self {
        [b.x_min, b.y_min, b.x_max, b.y_max]
    }
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let b = BoundingBox {
            x_min,
            y_min,
            x_max,
            y_max,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn full(height: usize, width: usize) -> Self {
        BoundingBox {
            x_min: 0.0,
            y_min: 0.0,
            x_max: width as f64,
            y_max: height as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.y_min, self.x_max, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_min > self.x_max || self.y_min > self.y_max {
            return Err(Error::InvalidValue(format!("malformed box {self:?}")));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn clamp(&self, height: usize, width: usize) -> Self {
        let (w, h) = (width as f64, height as f64);
        BoundingBox {
            x_min: self.x_min.clamp(0.0, w),
            y_min: self.y_min.clamp(0.0, h),
            x_max: self.x_max.clamp(0.0, w),
            y_max: self.y_max.clamp(0.0, h),
        }
    }

    pub fn contains_pixel(&self, row: usize, col: usize) -> bool {
        let (r, c) = (row as f64, col as f64);
        self.x_min <= c && c <= self.x_max && self.y_min <= r && r <= self.y_max
    }

    pub fn max_corner_distance(&self, other: &BoundingBox) -> f64 {
        [
            self.x_min - other.x_min,
            self.y_min - other.y_min,
            self.x_max - other.x_max,
            self.y_max - other.y_max,
        ]
        .iter()
        .fold(0.0, |m, d| m.max(d.abs()))
    }
}

/// Maps a box on the input image to where it lands on the warped image.
pub fn warp_box_forward(b: &BoundingBox, field: &WarpField) -> Result<BoundingBox> {
    b.validate()?;
    let b = b.clamp(field.height(), field.width());
    Ok(BoundingBox {
        x_min: field.target_x(b.x_min),
        y_min: field.target_y(b.y_min),
        x_max: field.target_x(b.x_max),
        y_max: field.target_y(b.y_max),
    }
    .clamp(field.height(), field.width()))
}

/// Maps a box on the warped image back to the original image.
pub fn warp_box_inverse(b: &BoundingBox, field: &WarpField) -> Result<BoundingBox> {
    b.validate()?;
    let b = b.clamp(field.height(), field.width());
    Ok(BoundingBox {
        x_min: field.source_x(b.x_min),
        y_min: field.source_y(b.y_min),
        x_max: field.source_x(b.x_max),
        y_max: field.source_y(b.y_max),
    }
    .clamp(field.height(), field.width()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score::AttentionScoreMatrix;

    #[test]
    fn identity_and_full_boxes_are_fixed() {
        let id = WarpField::identity(20, 30);
        let b = BoundingBox::new(3.0, 4.5, 10.0, 12.0).unwrap();
        assert_eq!(warp_box_forward(&b, &id).unwrap(), b);
        assert_eq!(warp_box_inverse(&b, &id).unwrap(), b);

        let a = AttentionScoreMatrix::from_fn(20, 30, |i, j| (i * j % 5) as f64).unwrap();
        let f = WarpField::from_scores(&a).unwrap();
        let full = BoundingBox::full(20, 30);
        assert_eq!(warp_box_forward(&full, &f).unwrap(), full);
        assert_eq!(warp_box_inverse(&full, &f).unwrap(), full);
    }

    #[test]
    fn forward_then_inverse_recovers_box() {
        let a = AttentionScoreMatrix::from_fn(32, 32, |i, j| 0.1 + ((i + j) % 4) as f64).unwrap();
        let f = WarpField::from_scores(&a).unwrap();
        let b = BoundingBox::new(10.0, 10.0, 20.0, 20.0).unwrap();
        let back = warp_box_inverse(&warp_box_forward(&b, &f).unwrap(), &f).unwrap();
        assert!(back.max_corner_distance(&b) <= 1.0);
    }

    #[test]
    fn degenerate_boxes_are_allowed() {
        let f = WarpField::identity(4, 4);
        let b = BoundingBox::new(2.0, 1.0, 2.0, 3.0).unwrap();
        assert_eq!(warp_box_forward(&b, &f).unwrap().area(), 0.0);
        assert!(BoundingBox::new(3.0, 0.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn inclusive_pixel_membership() {
        let b = BoundingBox::new(4.0, 4.0, 8.0, 8.0).unwrap();
        assert!(b.contains_pixel(4, 8));
        assert!(b.contains_pixel(8, 4));
        assert!(!b.contains_pixel(9, 5));
        assert!(!b.contains_pixel(0, 0));
    }

    #[test]
    fn serializes_as_array() {
        let b = BoundingBox::new(1.0, 2.0, 3.0, 4.0).unwrap();
        assert_eq!(serde_json::to_string(&b).unwrap(), "[1.0,2.0,3.0,4.0]");
    }
}
