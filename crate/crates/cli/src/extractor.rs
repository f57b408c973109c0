//! Attention providers for the chain: precomputed per-depth maps, or an
//! external extractor program speaking the `extract` contract.

use std::path::PathBuf;
use std::process::{Command, Stdio};

use attwarp_core::atw::load_attention;
use attwarp_core::{AttentionProvider, AttentionScoreMatrix, ProviderError};
use image::{Rgb, RgbImage};
use log::{debug, info};
use tempfile::TempDir;

use crate::config::MapSettings;
use crate::pipeline::{encode_png, prepare_map};

/// Serves `maps[depth]`, routed through the map settings. Runs dry past the last map.
pub struct PrecomputedMaps {
    pub maps: Vec<AttentionScoreMatrix>,
    pub original: (usize, usize),
    pub settings: MapSettings,
}

impl AttentionProvider<Rgb<u8>> for PrecomputedMaps {
    fn attention(&mut self, image: &RgbImage, depth: usize) -> Result<AttentionScoreMatrix, ProviderError> {
        let map = self
            .maps
            .get(depth)
            .ok_or_else(|| ProviderError(format!("no precomputed map for depth {depth}")))?;
        let work = (image.height() as usize, image.width() as usize);
        prepare_map(map, self.original, work, &self.settings)
            .map(|(m, _)| m)
            .map_err(|e| ProviderError(format!("depth {depth} map: {e:#}")))
    }
}

/// Runs `<program> [args..] extract --model-preset P --image I --query Q --out O`
/// for every depth and reads the ATW1 file it leaves at `O`.
pub struct ExternalExtractor {
    pub program: PathBuf,
    pub args: Vec<String>,
    pub model_preset: String,
    pub query: String,
    pub original: (usize, usize),
    pub settings: MapSettings,
    scratch: TempDir,
}

impl ExternalExtractor {
    pub fn new(
        program: PathBuf,
        args: Vec<String>,
        model_preset: String,
        query: String,
        original: (usize, usize),
        settings: MapSettings,
    ) -> std::io::Result<Self> {
        Ok(Self {
            program,
            args,
            model_preset,
            query,
            original,
            settings,
            scratch: tempfile::Builder::new().prefix("attwarp-extract").tempdir()?,
        })
    }

    fn run(&self, image: &RgbImage, depth: usize) -> anyhow::Result<AttentionScoreMatrix> {
        let img_path = self.scratch.path().join(format!("depth{depth}.png"));
        let out_path = self.scratch.path().join(format!("depth{depth}.atw"));
        std::fs::write(&img_path, encode_png(image)?)?;
        let mut cmd = Command::new(&self.program);
        cmd.args(&self.args)
            .arg("extract")
            .arg("--model-preset")
            .arg(&self.model_preset)
            .arg("--image")
            .arg(&img_path)
            .arg("--query")
            .arg(&self.query)
            .arg("--out")
            .arg(&out_path)
            .stdin(Stdio::null());
        debug!("running {cmd:?}");
        let output = cmd.output()?;
        if !output.status.success() {
            anyhow::bail!(
                "extractor exited with {}: {}",
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            );
        }
        let map = load_attention(&out_path)?;
        let work = (image.height() as usize, image.width() as usize);
        let (map, kind) = prepare_map(&map, self.original, work, &self.settings)?;
        info!("depth {depth}: extractor map used as {kind:?}");
        Ok(map)
    }
}

impl AttentionProvider<Rgb<u8>> for ExternalExtractor {
    fn attention(&mut self, image: &RgbImage, depth: usize) -> Result<AttentionScoreMatrix, ProviderError> {
        self.run(image, depth)
            .map_err(|e| ProviderError(format!("depth {depth}: {e:#}")))
    }
}
