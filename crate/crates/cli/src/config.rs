//! Job configuration: the JSON config file and the resolved settings.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use attwarp_core::postprocess::DEFAULT_SMOOTH_K;
use attwarp_core::{ChainConfig, SharpnessTransform};
use serde::{Deserialize, Serialize};

/// Largest side a map may have and still be treated as a token grid.
pub const DEFAULT_MAX_GRID: usize = 64;

/// How an input image (and its attention map) is brought to working size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ResizePolicy {
    #[default]
    None,
    /// Resize to exactly `width x height`, ignoring aspect ratio.
    Stretch { width: u32, height: u32 },
    /// Scale the long side to `side`, then pad to `side x side`, centered.
    LongSidePad { side: u32 },
}

impl ResizePolicy {
    /// For long-side+pad: the scaled content size and its offset in the canvas,
    /// as `(content_h, content_w, top, left)`.
    pub fn pad_layout(side: u32, h: u32, w: u32) -> (u32, u32, u32, u32) {
        let long = h.max(w) as f64;
        let ch = ((h as f64 * side as f64 / long).round() as u32).clamp(1, side);
        let cw = ((w as f64 * side as f64 / long).round() as u32).clamp(1, side);
        (ch, cw, (side - ch) / 2, (side - cw) / 2)
    }
}

impl fmt::Display for ResizePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResizePolicy::None => f.write_str("none"),
            ResizePolicy::Stretch { width, height } => write!(f, "stretch:{width}x{height}"),
            ResizePolicy::LongSidePad { side } => write!(f, "pad:{side}"),
        }
    }
}

fn positive(s: &str) -> Result<u32> {
    let v: u32 = s.trim().parse().with_context(|| format!("bad size '{s}'"))?;
    if v == 0 {
        bail!("sizes must be positive");
    }
    Ok(v)
}

/// Parses `WxH` pairs.
pub fn parse_dims(s: &str) -> Result<(u32, u32)> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .with_context(|| format!("expected WIDTHxHEIGHT, got '{s}'"))?;
    Ok((positive(w)?, positive(h)?))
}

impl FromStr for ResizePolicy {
    type Err = anyhow::Error;

    /// Accepts `none`, `stretch:WxH`, `WxH`, `N` (stretch to a square) and `pad:N`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("none") {
            return Ok(ResizePolicy::None);
        }
        if let Some(n) = s.strip_prefix("pad:") {
            return Ok(ResizePolicy::LongSidePad { side: positive(n)? });
        }
        let dims = s.strip_prefix("stretch:").unwrap_or(s);
        if !dims.contains(['x', 'X']) {
            let side = positive(dims)?;
            return Ok(ResizePolicy::Stretch { width: side, height: side });
        }
        let (width, height) = parse_dims(dims)?;
        Ok(ResizePolicy::Stretch { width, height })
    }
}

impl TryFrom<String> for ResizePolicy {
    type Error = anyhow::Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ResizePolicy> for String {
    fn from(p: ResizePolicy) -> String {
        p.to_string()
    }
}

/// Contents of a `--config` file. Every key mirrors a command-line flag;
/// flags win over the file. Relative paths are taken from the file's directory.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JobConfig {
    pub images: Vec<PathBuf>,
    pub attention: Vec<PathBuf>,
    pub maps: Vec<PathBuf>,
    pub transform: Option<SharpnessTransform>,
    pub smooth_k: Option<usize>,
    pub resize: Option<ResizePolicy>,
    pub max_grid: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub kl_epsilon: Option<f64>,
    pub max_iterations: Option<usize>,
    pub extractor: Option<PathBuf>,
    pub extractor_args: Vec<String>,
    pub model_preset: Option<String>,
    pub query: Option<String>,
    pub annotations: Option<PathBuf>,
    pub stack: Option<PathBuf>,
    pub layers: Option<Vec<usize>>,
    pub preset: Option<String>,
    pub out: Option<PathBuf>,
    pub postprocess: Option<String>,
}

impl JobConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: JobConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.images.iter_mut().for_each(fix);
        cfg.attention.iter_mut().for_each(fix);
        cfg.maps.iter_mut().for_each(fix);
        for p in [
            &mut cfg.out_dir,
            &mut cfg.extractor,
            &mut cfg.annotations,
            &mut cfg.stack,
            &mut cfg.out,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        Ok(cfg)
    }
}

/// Settings that decide how an attention map becomes a score matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapSettings {
    pub transform: SharpnessTransform,
    pub smooth_k: usize,
    pub resize: ResizePolicy,
    pub max_grid: usize,
}

impl Default for MapSettings {
    fn default() -> Self {
        Self {
            transform: SharpnessTransform::Identity,
            smooth_k: DEFAULT_SMOOTH_K,
            resize: ResizePolicy::None,
            max_grid: DEFAULT_MAX_GRID,
        }
    }
}

impl MapSettings {
    pub fn validate(&self) -> Result<()> {
        if self.smooth_k == 0 || self.smooth_k.is_multiple_of(2) {
            bail!("smooth_k must be a positive odd number, got {}", self.smooth_k);
        }
        Ok(())
    }
}

/// Resolved chain settings, recorded in provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainSettings {
    pub map: MapSettings,
    pub chain: ChainConfig,
    pub extractor: Option<PathBuf>,
    pub extractor_args: Vec<String>,
    pub model_preset: Option<String>,
    pub query: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resize_policies_parse() {
        assert_eq!("none".parse::<ResizePolicy>().unwrap(), ResizePolicy::None);
        assert_eq!(
            "512x384".parse::<ResizePolicy>().unwrap(),
            ResizePolicy::Stretch { width: 512, height: 384 }
        );
        assert_eq!(
            "stretch:512x512".parse::<ResizePolicy>().unwrap(),
            ResizePolicy::Stretch { width: 512, height: 512 }
        );
        assert_eq!("pad:512".parse::<ResizePolicy>().unwrap(), ResizePolicy::LongSidePad { side: 512 });
        assert_eq!(
            "512".parse::<ResizePolicy>().unwrap(),
            ResizePolicy::Stretch { width: 512, height: 512 }
        );
        assert!("pad:0".parse::<ResizePolicy>().is_err());
        assert!("0x5".parse::<ResizePolicy>().is_err());
        assert!("wide".parse::<ResizePolicy>().is_err());
        for p in ["none", "stretch:3x4", "pad:9"] {
            assert_eq!(p.parse::<ResizePolicy>().unwrap().to_string(), p);
        }
    }

    #[test]
    fn pad_layout_centers_content() {
        assert_eq!(ResizePolicy::pad_layout(512, 300, 600), (256, 512, 128, 0));
        assert_eq!(ResizePolicy::pad_layout(10, 10, 10), (10, 10, 0, 0));
        assert_eq!(ResizePolicy::pad_layout(8, 1, 1000), (1, 8, 3, 0));
    }

    #[test]
    fn config_paths_are_relative_to_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("job.json");
        std::fs::write(
            &path,
            r#"{"images": ["a.png", "/abs/b.png"], "transform": "sqrt", "resize": "pad:64", "out_dir": "out"}"#,
        )
        .unwrap();
        let cfg = JobConfig::load(&path).unwrap();
        assert_eq!(cfg.images[0], dir.path().join("a.png"));
        assert_eq!(cfg.images[1], PathBuf::from("/abs/b.png"));
        assert_eq!(cfg.out_dir, Some(dir.path().join("out")));
        assert_eq!(cfg.transform, Some(SharpnessTransform::Sqrt));
        assert_eq!(cfg.resize, Some(ResizePolicy::LongSidePad { side: 64 }));
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("job.json");
        std::fs::write(&path, r#"{"transfrom": "sqrt"}"#).unwrap();
        assert!(JobConfig::load(&path).is_err());
    }
}
