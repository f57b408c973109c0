//! Attention-guided rectilinear image warping.
//!
//! Given an image and a query-conditioned attention score matrix, the warp
//! enlarges high-attention rows and columns and shrinks the rest, keeping the
//! output on a regular grid at the input's size:
//!
//! 1. [`aggregation`] averages raw cross-attention into a token-grid map.
//! 2. [`postprocess`] upsamples (Lanczos-3), smooths and sharpens it into an
//!    [`AttentionScoreMatrix`] at image resolution.
//! 3. [`warp`] turns the matrix's column/row marginals into inverse-CDF axis
//!    maps and resamples the image bilinearly; boxes map both ways exactly.
//! 4. [`chain`] repeats the warp with fresh attention until the attention
//!    distribution settles.
//! 5. [`metrics`] scores attention maps against ground-truth boxes.
//!
//! ```
//! use attwarp_core::{AttentionScoreMatrix, WarpField};
//!
//! let scores = AttentionScoreMatrix::from_rows(&[
//!     vec![0.0, 1.0, 0.0, 0.0],
//!     vec![0.0, 1.0, 0.0, 0.0],
//! ]).unwrap();
//! let field = WarpField::from_scores(&scores).unwrap();
//! // almost every output column samples inside input column 1
//! assert!(field.fx()[1..].iter().all(|x| (1.0..2.0).contains(x)));
//! ```

pub mod aggregation;
pub mod atw;
pub mod chain;
pub mod error;
pub mod metrics;
pub mod postprocess;
pub mod score;
pub mod targets;
pub mod warp;

pub use aggregation::{aggregate, LayerPreset, RawAttentionShape, RawAttentionTensor};
pub use chain::{
    kl_divergence, run_chain, AttentionDistribution, AttentionProvider, ChainConfig, ChainOutcome,
    ChainTrace, ProviderError, StopReason,
};
pub use error::{Error, Result};
pub use metrics::{expansion_stats, pointing_game, proportion, MetricReport};
pub use postprocess::{postprocess, SharpnessTransform};
pub use score::{AttentionScoreMatrix, MASS_FLOOR};
pub use warp::{
    cdf, marginals, warp_box_forward, warp_box_inverse, warp_image, AxisCdf, AxisProfile,
    BoundingBox, WarpField, WarpedImage,
};
