//! Rectilinear warps driven by attention marginals.
//!
//! Column and row sums of the score matrix become two 1-D densities. Their
//! normalized CDFs, extended piecewise-linearly over pixel cells, map input
//! coordinates to output coordinates; the inverses tell each output pixel where
//! to sample. High-density intervals therefore take up more of the output.

mod axis_map;
mod bbox;
mod field;
mod profile;
mod sample;

pub use axis_map::AxisMap;
pub use bbox::{warp_box_forward, warp_box_inverse, BoundingBox};
pub use field::{Knots, WarpField, WarpFieldJson};
pub use profile::{cdf, marginals, Axis, AxisCdf, AxisProfile};
pub use sample::{warp_image, warp_with_scores, Image, Sample, WarpedImage};
