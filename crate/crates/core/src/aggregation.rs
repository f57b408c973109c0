//! Collapsing raw cross-attention weights into a single token-grid map.
//!
//! A raw tensor holds, for every recorded decoder layer, `heads x out_tokens`
//! rows of weights over the `grid_h * grid_w` image tokens. Token `t` (0-based)
//! sits at grid cell `(t / grid_w, t % grid_w)`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score::AttentionScoreMatrix;

/// Named layer choices for common model families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerPreset {
    /// LLaVA-1.5 style models: layer 20 over a 24x24 patch grid.
    Llava,
    /// Qwen2.5-VL style models: layer 16.
    Qwen,
}

impl LayerPreset {
    pub fn layers(self) -> &'static [usize] {
        match self {
            LayerPreset::Llava => &[20],
            LayerPreset::Qwen => &[16],
        }
    }

    /// Token grid of the preset's vision encoder, when it is fixed.
    pub fn grid(self) -> Option<(usize, usize)> {
        match self {
            LayerPreset::Llava => Some((24, 24)),
            LayerPreset::Qwen => None,
        }
    }
}

/// Shape of a raw attention stack, as stored in the JSON sidecar next to its ATW1 file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawAttentionShape {
    pub layers: usize,
    pub heads: usize,
    pub out_tokens: usize,
    pub grid_h: usize,
    pub grid_w: usize,
    /// Model layer numbers of the recorded layers; defaults to `0..layers`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer_ids: Option<Vec<usize>>,
}

impl RawAttentionShape {
    pub fn img_tokens(&self) -> usize {
        self.grid_h * self.grid_w
    }

    /// Number of `img_tokens`-wide rows in the stack.
    pub fn rows(&self) -> usize {
        self.layers * self.heads * self.out_tokens
    }
}

/// Per-layer, per-head, per-output-token weights over image tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct RawAttentionTensor {
    layer_ids: Vec<usize>,
    heads: usize,
    out_tokens: usize,
    grid_h: usize,
    grid_w: usize,
    // [layer][head][out_token][img_token]
    weights: Vec<f64>,
}

impl RawAttentionTensor {
    pub fn new(shape: &RawAttentionShape, weights: Vec<f64>) -> Result<Self> {
        let layer_ids = shape
            .layer_ids
            .clone()
            .unwrap_or_else(|| (0..shape.layers).collect());
        if layer_ids.len() != shape.layers {
            return Err(Error::ShapeMismatch(format!(
                "{} layer ids for {} layers",
                layer_ids.len(),
                shape.layers
            )));
        }
        if layer_ids.iter().collect::<BTreeSet<_>>().len() != layer_ids.len() {
            return Err(Error::ShapeMismatch("duplicate layer ids".into()));
        }
        if shape.heads == 0 || shape.out_tokens == 0 || shape.img_tokens() == 0 {
            return Err(Error::ShapeMismatch(format!(
                "empty tensor dimensions: {shape:?}"
            )));
        }
        let expected = shape.rows() * shape.img_tokens();
        if weights.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "expected {expected} weights for {shape:?}, got {}",
                weights.len()
            )));
        }
        if let Some(bad) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidValue(format!(
                "attention weights must be finite and nonnegative, found {bad}"
            )));
        }
        Ok(Self {
            layer_ids,
            heads: shape.heads,
            out_tokens: shape.out_tokens,
            grid_h: shape.grid_h,
            grid_w: shape.grid_w,
            weights,
        })
    }

    /// Builds from nested per-layer records `(layer_id, [head][out_token][img_token])`.
    /// Every record must share the shape of the first.
    pub fn from_layer_records(
        grid_h: usize,
        grid_w: usize,
        records: Vec<(usize, Vec<Vec<Vec<f64>>>)>,
    ) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| Error::ShapeMismatch("no layer records".into()))?;
        let heads = first.1.len();
        let out_tokens = first.1.first().map_or(0, Vec::len);
        let img_tokens = grid_h * grid_w;
        let mut layer_ids = Vec::with_capacity(records.len());
        let mut weights = Vec::with_capacity(records.len() * heads * out_tokens * img_tokens);
        for (id, layer) in records {
            if layer.len() != heads {
                return Err(Error::ShapeMismatch(format!(
                    "layer {id} has {} heads, expected {heads}",
                    layer.len()
                )));
            }
            for head in layer {
                if head.len() != out_tokens {
                    return Err(Error::ShapeMismatch(format!(
                        "layer {id} has a head with {} output tokens, expected {out_tokens}",
                        head.len()
                    )));
                }
                for row in head {
                    if row.len() != img_tokens {
                        return Err(Error::ShapeMismatch(format!(
                            "layer {id} row has {} image tokens, expected {img_tokens}",
                            row.len()
                        )));
                    }
                    weights.extend(row);
                }
            }
            layer_ids.push(id);
        }
        let shape = RawAttentionShape {
            layers: layer_ids.len(),
            heads,
            out_tokens,
            grid_h,
            grid_w,
            layer_ids: Some(layer_ids),
        };
        Self::new(&shape, weights)
    }

    pub fn shape(&self) -> RawAttentionShape {
        RawAttentionShape {
            layers: self.layer_ids.len(),
            heads: self.heads,
            out_tokens: self.out_tokens,
            grid_h: self.grid_h,
            grid_w: self.grid_w,
            layer_ids: Some(self.layer_ids.clone()),
        }
    }

    pub fn layer_ids(&self) -> &[usize] {
        &self.layer_ids
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight from output token `out` to image token `token` in `head` of the
    /// layer stored at position `layer_pos`.
    pub fn weight(&self, layer_pos: usize, head: usize, out: usize, token: usize) -> f64 {
        let tokens = self.grid_h * self.grid_w;
        self.weights[((layer_pos * self.heads + head) * self.out_tokens + out) * tokens + token]
    }

    fn layer_slice(&self, layer_pos: usize) -> &[f64] {
        let len = self.heads * self.out_tokens * self.grid_h * self.grid_w;
        &self.weights[layer_pos * len..(layer_pos + 1) * len]
    }
}

/// Averages the selected layers, every head and every output token into a
/// `grid_h x grid_w` map. `layer_select` holds model layer ids; duplicates
/// count once.
pub fn aggregate(raw: &RawAttentionTensor, layer_select: &[usize]) -> Result<AttentionScoreMatrix> {
    let selected: BTreeSet<usize> = layer_select.iter().copied().collect();
    if selected.is_empty() {
        return Err(Error::EmptyLayerSelection);
    }
    let positions = selected
        .iter()
        .map(|id| {
            raw.layer_ids
                .iter()
                .position(|l| l == id)
                .ok_or(Error::LayerOutOfRange(*id))
        })
        .collect::<Result<Vec<_>>>()?;

    let tokens = raw.grid_h * raw.grid_w;
    let mut sums = vec![0.0; tokens];
    for pos in positions.iter().copied() {
        for row in raw.layer_slice(pos).chunks_exact(tokens) {
            for (acc, w) in sums.iter_mut().zip(row) {
                *acc += w;
            }
        }
    }
    let count = (positions.len() * raw.heads * raw.out_tokens) as f64;
    for v in &mut sums {
        *v /= count;
    }
    AttentionScoreMatrix::new(raw.grid_h, raw.grid_w, sums)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(layers: usize, heads: usize, out_tokens: usize, h: usize, w: usize) -> RawAttentionShape {
        RawAttentionShape {
            layers,
            heads,
            out_tokens,
            grid_h: h,
            grid_w: w,
            layer_ids: None,
        }
    }

    #[test]
    fn single_weight_row_reshapes_to_grid() {
        let raw = RawAttentionTensor::new(&shape(1, 1, 1, 2, 2), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let grid = aggregate(&raw, &[0]).unwrap();
        assert_eq!(grid, AttentionScoreMatrix::from_rows(&[vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap());
    }

    #[test]
    fn heads_are_averaged() {
        let raw = RawAttentionTensor::new(
            &shape(1, 2, 1, 2, 2),
            vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        )
        .unwrap();
        let grid = aggregate(&raw, &[0]).unwrap();
        assert_eq!(grid.scores(), &[0.5, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn llava_preset_selects_layer_twenty() {
        let (h, w) = LayerPreset::Llava.grid().unwrap();
        let layers = 32;
        let tokens = h * w;
        let mut weights = vec![0.0; layers * tokens];
        // only layer 20 attends to token 100
        weights[20 * tokens + 100] = 1.0;
        let raw = RawAttentionTensor::new(&shape(layers, 1, 1, h, w), weights).unwrap();
        let grid = aggregate(&raw, LayerPreset::Llava.layers()).unwrap();
        assert_eq!(grid.dims(), (24, 24));
        assert_eq!(grid.argmax(), (100 / 24, 100 % 24));
        assert_eq!(grid.total_mass(), 1.0);
    }

    #[test]
    fn selection_errors() {
        let raw = RawAttentionTensor::new(&shape(2, 1, 1, 1, 2), vec![0.0; 4]).unwrap();
        assert!(matches!(aggregate(&raw, &[]), Err(Error::EmptyLayerSelection)));
        assert!(matches!(aggregate(&raw, &[2]), Err(Error::LayerOutOfRange(2))));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(RawAttentionTensor::new(&shape(1, 1, 1, 2, 2), vec![0.0; 3]).is_err());
        assert!(RawAttentionTensor::new(&shape(1, 1, 1, 1, 2), vec![0.0, -1.0]).is_err());
        let ragged = vec![
            (0, vec![vec![vec![0.0; 4]]]),
            (1, vec![vec![vec![0.0; 4]], vec![vec![0.0; 4]]]),
        ];
        assert!(RawAttentionTensor::from_layer_records(2, 2, ragged).is_err());
    }

    #[test]
    fn duplicate_selection_counts_once() {
        let raw = RawAttentionTensor::new(&shape(2, 1, 1, 1, 2), vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let a = aggregate(&raw, &[0, 1]).unwrap();
        let b = aggregate(&raw, &[1, 0, 1]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.scores(), &[0.5, 0.5]);
    }
}
