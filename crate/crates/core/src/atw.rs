//! ATW1 attention rasters.
//!
//! Layout, all little-endian:
//!
//! | offset | size | field                               |
//! |--------|------|-------------------------------------|
//! | 0      | 4    | magic `ATW1`                        |
//! | 4      | 4    | `u32` height                        |
//! | 8      | 4    | `u32` width                         |
//! | 12     | 4    | `u32` dtype, `0` = 32-bit float     |
//! | 16     | 4·h·w| row-major `f32` values              |
//!
//! A raw attention stack is one ATW1 raster with `layers * heads * out_tokens`
//! rows (layer-major, then head, then output token) of `grid_h * grid_w`
//! columns, plus a JSON sidecar at `<file>.json` holding its
//! [`RawAttentionShape`].

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use image::DynamicImage;

use crate::aggregation::{RawAttentionShape, RawAttentionTensor};
use crate::error::{Error, Result};
use crate::score::AttentionScoreMatrix;

pub const MAGIC: &[u8; 4] = b"ATW1";
pub const HEADER_LEN: usize = 16;
pub const DTYPE_F32: u32 = 0;

/// Dense `f32` raster, the payload of an ATW1 file.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f32>,
}

impl Raster {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.values.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&DTYPE_F32.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format(format!("{} bytes is shorter than the header", bytes.len())));
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::Format("bad magic, expected ATW1".into()));
        }
        let word = |k: usize| u32::from_le_bytes(bytes[k..k + 4].try_into().unwrap());
        let (height, width, dtype) = (word(4) as usize, word(8) as usize, word(12));
        if dtype != DTYPE_F32 {
            return Err(Error::Format(format!("unsupported dtype tag {dtype}")));
        }
        let count = height
            .checked_mul(width)
            .ok_or_else(|| Error::Format("raster dimensions overflow".into()))?;
        let payload = &bytes[HEADER_LEN..];
        if payload.len() != 4 * count {
            return Err(Error::Format(format!(
                "{height}x{width} raster needs {} payload bytes, found {}",
                4 * count,
                payload.len()
            )));
        }
        let values = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::decode(&fs::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), &self.encode())
    }
}

impl From<&AttentionScoreMatrix> for Raster {
    fn from(m: &AttentionScoreMatrix) -> Self {
        Raster {
            height: m.height(),
            width: m.width(),
            values: m.scores().iter().map(|&v| v as f32).collect(),
        }
    }
}

impl TryFrom<Raster> for AttentionScoreMatrix {
    type Error = Error;

    fn try_from(r: Raster) -> Result<Self> {
        AttentionScoreMatrix::new(r.height, r.width, r.values.into_iter().map(f64::from).collect())
    }
}

/// Writes via a sibling temp file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidValue(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// Loads an attention map from ATW1, or from an 8/16-bit grayscale PNG
/// (values rescaled to `[0, 1]`). Anything that does not start with the ATW1
/// magic is tried as an image.
pub fn load_attention(path: impl AsRef<Path>) -> Result<AttentionScoreMatrix> {
    let bytes = fs::read(path.as_ref())?;
    if bytes.starts_with(MAGIC) {
        return Raster::decode(&bytes)?.try_into();
    }
    let img = image::load_from_memory(&bytes)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let values: Vec<f64> = match img {
        DynamicImage::ImageLuma8(g) => g.into_raw().into_iter().map(|v| f64::from(v) / 255.0).collect(),
        DynamicImage::ImageLuma16(g) => {
            g.into_raw().into_iter().map(|v| f64::from(v) / 65535.0).collect()
        }
        other => {
            return Err(Error::Format(format!(
                "attention PNG must be 8/16-bit grayscale, found {:?}",
                other.color()
            )))
        }
    };
    AttentionScoreMatrix::new(h, w, values)
}

pub fn save_attention(path: impl AsRef<Path>, scores: &AttentionScoreMatrix) -> Result<()> {
    Raster::from(scores).write(path)
}

pub fn sidecar_path(stack: &Path) -> PathBuf {
    let mut name = stack.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

pub fn load_raw_stack(path: impl AsRef<Path>) -> Result<RawAttentionTensor> {
    let path = path.as_ref();
    let shape: RawAttentionShape = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    let raster = Raster::read(path)?;
    if (raster.height, raster.width) != (shape.rows(), shape.img_tokens()) {
        return Err(Error::ShapeMismatch(format!(
            "stack raster is {}x{}, sidecar implies {}x{}",
            raster.height,
            raster.width,
            shape.rows(),
            shape.img_tokens()
        )));
    }
    RawAttentionTensor::new(&shape, raster.values.into_iter().map(f64::from).collect())
}

pub fn save_raw_stack(path: impl AsRef<Path>, raw: &RawAttentionTensor) -> Result<()> {
    let path = path.as_ref();
    let shape = raw.shape();
    Raster {
        height: shape.rows(),
        width: shape.img_tokens(),
        values: raw.weights().iter().map(|&v| v as f32).collect(),
    }
    .write(path)?;
    write_atomic(&sidecar_path(path), serde_json::to_string_pretty(&shape)?.as_bytes())
}
