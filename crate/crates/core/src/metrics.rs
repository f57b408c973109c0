//! Localization metrics for attention maps and expansion statistics for warps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score::AttentionScoreMatrix;
use crate::warp::{warp_box_forward, BoundingBox, WarpField};

/// Whether the largest score (first in row-major order on ties) falls inside
/// `bbox`, with inclusive pixel bounds.
pub fn pointing_game(scores: &AttentionScoreMatrix, bbox: &BoundingBox) -> bool {
    let (row, col) = scores.argmax();
    bbox.contains_pixel(row, col)
}

/// Same as [`pointing_game`] against the union of several boxes.
pub fn pointing_game_any(scores: &AttentionScoreMatrix, boxes: &[BoundingBox]) -> bool {
    let (row, col) = scores.argmax();
    boxes.iter().any(|b| b.contains_pixel(row, col))
}

/// Fraction of the total score mass on pixels inside `bbox`.
pub fn proportion(scores: &AttentionScoreMatrix, bbox: &BoundingBox) -> Result<f64> {
    proportion_union(scores, std::slice::from_ref(bbox))
}

/// Fraction of the total score mass on pixels inside any of `boxes`; pixels
/// covered by several boxes count once.
pub fn proportion_union(scores: &AttentionScoreMatrix, boxes: &[BoundingBox]) -> Result<f64> {
    let total = scores.total_mass();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let mut inside = 0.0;
    for i in 0..scores.height() {
        for (j, v) in scores.row(i).iter().enumerate() {
            if boxes.iter().any(|b| b.contains_pixel(i, j)) {
                inside += v;
            }
        }
    }
    Ok((inside / total).clamp(0.0, 1.0))
}

/// Per-box area ratios of a forward warp.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExpansionStats {
    /// `area(warped) / area(original)` for every box with positive area.
    pub ratios: Vec<f64>,
    /// Boxes skipped because their original area is zero.
    pub zero_area: usize,
}

impl ExpansionStats {
    pub fn merge(&mut self, other: ExpansionStats) {
        self.ratios.extend(other.ratios);
        self.zero_area += other.zero_area;
    }

    pub fn count(&self) -> usize {
        self.ratios.len()
    }

    pub fn expanded(&self) -> usize {
        self.ratios.iter().filter(|r| **r > 1.0).count()
    }

    /// Share of measured boxes whose area grew; 0 when nothing was measured.
    pub fn fraction_expanded(&self) -> f64 {
        if self.ratios.is_empty() {
            0.0
        } else {
            self.expanded() as f64 / self.ratios.len() as f64
        }
    }

    /// Mean of `ratio - 1`.
    pub fn mean_increase(&self) -> f64 {
        if self.ratios.is_empty() {
            0.0
        } else {
            self.ratios.iter().map(|r| r - 1.0).sum::<f64>() / self.ratios.len() as f64
        }
    }
}

pub fn expansion_ratio(bbox: &BoundingBox, field: &WarpField) -> Result<Option<f64>> {
    let area = bbox.clamp(field.height(), field.width()).area();
    if area <= 0.0 {
        return Ok(None);
    }
    Ok(Some(warp_box_forward(bbox, field)?.area() / area))
}

pub fn expansion_stats(boxes: &[BoundingBox], field: &WarpField) -> Result<ExpansionStats> {
    let mut stats = ExpansionStats::default();
    for b in boxes {
        match expansion_ratio(b, field)? {
            Some(r) => stats.ratios.push(r),
            None => stats.zero_area += 1,
        }
    }
    Ok(stats)
}

/// Metrics of one annotated sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMetrics {
    pub id: String,
    pub pointing_game_hit: bool,
    pub proportion: f64,
    pub expansion_ratios: Vec<f64>,
    pub zero_area_boxes: usize,
}

impl SampleMetrics {
    /// Scores one sample: pointing game and proportion against the union of
    /// `boxes`, expansion of each box under the warp built from `scores`.
    pub fn evaluate(id: impl Into<String>, scores: &AttentionScoreMatrix, boxes: &[BoundingBox]) -> Result<Self> {
        let field = WarpField::from_scores(scores)?;
        let expansion = expansion_stats(boxes, &field)?;
        Ok(Self {
            id: id.into(),
            pointing_game_hit: pointing_game_any(scores, boxes),
            proportion: proportion_union(scores, boxes)?,
            expansion_ratios: expansion.ratios,
            zero_area_boxes: expansion.zero_area,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub samples: usize,
    pub pointing_game_rate: f64,
    pub mean_proportion: f64,
    pub boxes_measured: usize,
    pub zero_area_boxes: usize,
    pub fraction_expanded: f64,
    pub mean_area_increase: f64,
}

/// Per-sample metrics plus unweighted corpus aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub samples: Vec<SampleMetrics>,
    pub summary: CorpusSummary,
    #[serde(default)]
    pub skipped_lines: usize,
}

impl MetricReport {
    pub fn from_samples(samples: Vec<SampleMetrics>) -> Self {
        let n = samples.len();
        let mut expansion = ExpansionStats::default();
        for s in &samples {
            expansion.merge(ExpansionStats {
                ratios: s.expansion_ratios.clone(),
                zero_area: s.zero_area_boxes,
            });
        }
        let mean = |f: &dyn Fn(&SampleMetrics) -> f64| {
            if n == 0 {
                0.0
            } else {
                samples.iter().map(f).sum::<f64>() / n as f64
            }
        };
        let summary = CorpusSummary {
            samples: n,
            pointing_game_rate: mean(&|s| if s.pointing_game_hit { 1.0 } else { 0.0 }),
            mean_proportion: mean(&|s| s.proportion),
            boxes_measured: expansion.count(),
            zero_area_boxes: expansion.zero_area,
            fraction_expanded: expansion.fraction_expanded(),
            mean_area_increase: expansion.mean_increase(),
        };
        Self {
            samples,
            summary,
            skipped_lines: 0,
        }
    }

    /// Plain-text summary table.
    pub fn to_table(&self) -> String {
        let s = &self.summary;
        let rows = [
            ("samples", s.samples.to_string()),
            ("skipped lines", self.skipped_lines.to_string()),
            ("pointing game", format!("{:.4}", s.pointing_game_rate)),
            ("proportion", format!("{:.4}", s.mean_proportion)),
            ("boxes measured", s.boxes_measured.to_string()),
            ("zero-area boxes", s.zero_area_boxes.to_string()),
            ("boxes expanded", format!("{:.2}%", 100.0 * s.fraction_expanded)),
            ("mean area increase", format!("{:+.2}%", 100.0 * s.mean_area_increase)),
        ];
        let mut out = String::from("metric               value\n");
        out.push_str("-------------------- ----------\n");
        for (k, v) in rows {
            out.push_str(&format!("{k:<20} {v}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_hot(n: usize, r: usize, c: usize) -> AttentionScoreMatrix {
        AttentionScoreMatrix::from_fn(n, n, |i, j| if (i, j) == (r, c) { 1.0 } else { 0.0 }).unwrap()
    }

    fn bx(a: f64, b: f64, c: f64, d: f64) -> BoundingBox {
        BoundingBox::new(a, b, c, d).unwrap()
    }

    #[test]
    fn pointing_game_cases() {
        assert!(pointing_game(&one_hot(10, 5, 5), &bx(4.0, 4.0, 8.0, 8.0)));
        assert!(!pointing_game(&one_hot(10, 0, 0), &bx(4.0, 4.0, 8.0, 8.0)));
        let mut v = vec![0.0; 100];
        v[11] = 3.0;
        v[99] = 3.0;
        let tied = AttentionScoreMatrix::new(10, 10, v).unwrap();
        assert!(pointing_game(&tied, &bx(0.0, 0.0, 2.0, 2.0)));
        assert!(!pointing_game(&tied, &bx(8.0, 8.0, 9.0, 9.0)));
    }

    #[test]
    fn proportion_cases() {
        let uniform = AttentionScoreMatrix::filled(8, 8, 2.0).unwrap();
        assert!((proportion(&uniform, &bx(0.0, 0.0, 3.0, 3.0)).unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(proportion(&one_hot(6, 2, 3), &bx(1.0, 1.0, 4.0, 4.0)).unwrap(), 1.0);
        let a = AttentionScoreMatrix::from_rows(&[vec![1.0, 3.0], vec![2.0, 2.0]]).unwrap();
        assert_eq!(proportion(&a, &bx(0.0, 0.0, 0.0, 1.0)).unwrap(), 0.375);
        let zero = AttentionScoreMatrix::filled(2, 2, 0.0).unwrap();
        assert!(proportion(&zero, &bx(0.0, 0.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn union_counts_overlap_once() {
        let uniform = AttentionScoreMatrix::filled(4, 4, 1.0).unwrap();
        let boxes = [bx(0.0, 0.0, 1.0, 1.0), bx(1.0, 1.0, 2.0, 2.0)];
        // 4 + 4 pixels sharing (1,1)
        assert!((proportion_union(&uniform, &boxes).unwrap() - 7.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn identity_field_expands_nothing() {
        let f = WarpField::identity(10, 10);
        let s = expansion_stats(&[bx(1.0, 1.0, 4.0, 5.0), bx(0.0, 0.0, 10.0, 10.0)], &f).unwrap();
        assert_eq!(s.fraction_expanded(), 0.0);
        assert_eq!(s.mean_increase(), 0.0);
    }

    #[test]
    fn peaked_attention_expands_its_box() {
        let n = 50;
        let a = one_hot(n, 25, 25);
        let f = WarpField::from_scores(&a).unwrap();
        let s = expansion_stats(&[bx(22.5, 22.5, 27.5, 27.5), BoundingBox::full(n, n)], &f).unwrap();
        assert!(s.ratios[0] > 1.0);
        assert_eq!(s.ratios[1], 1.0);
    }

    #[test]
    fn zero_area_boxes_are_counted_apart() {
        let f = WarpField::identity(10, 10);
        let s = expansion_stats(&[bx(2.0, 2.0, 2.0, 5.0), bx(1.0, 1.0, 3.0, 3.0)], &f).unwrap();
        assert_eq!(s.zero_area, 1);
        assert_eq!(s.count(), 1);
    }

    #[test]
    fn corpus_aggregation() {
        let samples = vec![
            SampleMetrics { id: "a".into(), pointing_game_hit: true, proportion: 0.5, expansion_ratios: vec![2.0], zero_area_boxes: 0 },
            SampleMetrics { id: "b".into(), pointing_game_hit: false, proportion: 0.25, expansion_ratios: vec![0.5, 1.5], zero_area_boxes: 1 },
        ];
        let r = MetricReport::from_samples(samples);
        assert_eq!(r.summary.pointing_game_rate, 0.5);
        assert_eq!(r.summary.mean_proportion, 0.375);
        assert!((r.summary.fraction_expanded - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.summary.mean_area_increase - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.summary.zero_area_boxes, 1);
        assert!(r.to_table().contains("pointing game"));
    }
}
