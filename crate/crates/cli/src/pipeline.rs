//! Image and attention-map preparation shared by the subcommands.

use std::io::Cursor;
use std::path::Path;

use anyhow::{bail, Context, Result};
use attwarp_core::postprocess::resize_scores;
use attwarp_core::{postprocess, AttentionScoreMatrix};
use image::imageops::{self, FilterType};
use image::{ImageFormat, RgbImage};
use serde::Serialize;

use crate::config::{MapSettings, ResizePolicy};

pub fn load_image(path: &Path) -> Result<RgbImage> {
    Ok(image::open(path)
        .with_context(|| format!("reading image {}", path.display()))?
        .to_rgb8())
}

pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)?;
    Ok(buf.into_inner())
}

/// Applies the resize policy. Images already at the target size are returned untouched.
pub fn resize_image(img: RgbImage, policy: ResizePolicy) -> RgbImage {
    let (h, w) = (img.height(), img.width());
    match policy {
        ResizePolicy::None => img,
        ResizePolicy::Stretch { width, height } => {
            if (width, height) == (w, h) {
                img
            } else {
                imageops::resize(&img, width, height, FilterType::Lanczos3)
            }
        }
        ResizePolicy::LongSidePad { side } => {
            if (side, side) == (w, h) {
                return img;
            }
            let (ch, cw, top, left) = ResizePolicy::pad_layout(side, h, w);
            let content = imageops::resize(&img, cw, ch, FilterType::Lanczos3);
            let mut canvas = RgbImage::new(side, side);
            imageops::replace(&mut canvas, &content, left.into(), top.into());
            canvas
        }
    }
}

/// Applies the resize policy to a full-resolution map; padding gets zero attention.
pub fn resize_map(map: &AttentionScoreMatrix, policy: ResizePolicy) -> Result<AttentionScoreMatrix> {
    let (h, w) = (map.height() as u32, map.width() as u32);
    Ok(match policy {
        ResizePolicy::None => map.clone(),
        ResizePolicy::Stretch { width, height } => {
            if (width, height) == (w, h) {
                map.clone()
            } else {
                resize_scores(map, height as usize, width as usize)?
            }
        }
        ResizePolicy::LongSidePad { side } => {
            if (side, side) == (w, h) {
                return Ok(map.clone());
            }
            let (ch, cw, top, left) = ResizePolicy::pad_layout(side, h, w);
            let content = resize_scores(map, ch as usize, cw as usize)?;
            let (top, left, cw) = (top as usize, left as usize, cw as usize);
            let side = side as usize;
            let mut values = vec![0.0; side * side];
            for r in 0..ch as usize {
                let dst = (top + r) * side + left;
                values[dst..dst + cw].copy_from_slice(content.row(r));
            }
            AttentionScoreMatrix::new(side, side, values)?
        }
    })
}

/// How a map was interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    /// Token grid, upsampled and smoothed to the working size.
    Grid,
    /// Already at image resolution.
    Full,
}

/// Turns a loaded map into a score matrix at the working size `work`.
///
/// Maps at the working size or at the original image size `original` are
/// full resolution; anything no larger than `max_grid` on both sides and
/// smaller than the working size is a token grid. Other sizes are rejected.
pub fn prepare_map(
    map: &AttentionScoreMatrix,
    original: (usize, usize),
    work: (usize, usize),
    settings: &MapSettings,
) -> Result<(AttentionScoreMatrix, MapKind)> {
    let dims = map.dims();
    let full = if dims == work {
        Some(map.clone())
    } else if dims == original {
        Some(resize_map(map, settings.resize)?)
    } else {
        None
    };
    if let Some(full) = full {
        let t = settings.transform;
        return Ok((full.map(|v| t.apply(v))?.with_mass_floor(), MapKind::Full));
    }
    let grid_like = dims.0 <= settings.max_grid
        && dims.1 <= settings.max_grid
        && dims.0 <= work.0
        && dims.1 <= work.1;
    if !grid_like {
        bail!(
            "attention map is {}x{}; expected the image size {}x{}, the working size {}x{} \
             or a token grid no larger than {}x{}",
            dims.0,
            dims.1,
            original.0,
            original.1,
            work.0,
            work.1,
            settings.max_grid,
            settings.max_grid
        );
    }
    let up = postprocess(map, work.0, work.1, settings.smooth_k, settings.transform)?;
    Ok((up, MapKind::Grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use attwarp_core::SharpnessTransform;
    use image::Rgb;

    fn settings() -> MapSettings {
        MapSettings::default()
    }

    #[test]
    fn grid_maps_are_upsampled() {
        let grid = AttentionScoreMatrix::filled(4, 4, 1.0).unwrap();
        let (m, kind) = prepare_map(&grid, (40, 30), (40, 30), &settings()).unwrap();
        assert_eq!(kind, MapKind::Grid);
        assert_eq!(m.dims(), (40, 30));
        assert!(m.scores().iter().all(|v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn full_maps_get_only_the_transform() {
        let map = AttentionScoreMatrix::from_fn(3, 70, |_, j| j as f64).unwrap();
        let s = MapSettings {
            transform: SharpnessTransform::Square,
            ..settings()
        };
        let (m, kind) = prepare_map(&map, (3, 70), (3, 70), &s).unwrap();
        assert_eq!(kind, MapKind::Full);
        assert_eq!(m.get(2, 5), 25.0);
    }

    #[test]
    fn original_size_maps_follow_the_resize() {
        let map = AttentionScoreMatrix::filled(100, 80, 2.0).unwrap();
        let s = MapSettings {
            resize: ResizePolicy::LongSidePad { side: 50 },
            ..settings()
        };
        let (m, kind) = prepare_map(&map, (100, 80), (50, 50), &s).unwrap();
        assert_eq!(kind, MapKind::Full);
        assert_eq!(m.dims(), (50, 50));
        // 40 content columns centered, zero padding on both sides
        assert_eq!(m.get(25, 0), 0.0);
        assert_eq!(m.get(25, 49), 0.0);
        assert!((m.get(25, 25) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn other_sizes_are_rejected() {
        let map = AttentionScoreMatrix::filled(90, 100, 1.0).unwrap();
        assert!(prepare_map(&map, (64, 64), (64, 64), &settings()).is_err());
        let tall = AttentionScoreMatrix::filled(80, 2, 1.0).unwrap();
        assert!(prepare_map(&tall, (64, 64), (64, 64), &settings()).is_err());
    }

    #[test]
    fn resize_leaves_matching_images_alone() {
        let img = RgbImage::from_fn(6, 4, |x, y| Rgb([x as u8, y as u8, 7]));
        assert_eq!(resize_image(img.clone(), ResizePolicy::Stretch { width: 6, height: 4 }), img);
        let padded = resize_image(img, ResizePolicy::LongSidePad { side: 12 });
        assert_eq!(padded.dimensions(), (12, 12));
        assert_eq!(padded.get_pixel(0, 0), &Rgb([0, 0, 0]));
    }
}
