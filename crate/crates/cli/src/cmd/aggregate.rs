use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use attwarp_core::atw::{load_raw_stack, save_attention, sidecar_path};
use attwarp_core::postprocess::DEFAULT_SMOOTH_K;
use attwarp_core::{aggregate, postprocess, LayerPreset, SharpnessTransform};
use log::warn;
use serde::Serialize;

use super::pick;
use crate::args::AggregateArgs;
use crate::config::{parse_dims, JobConfig};
use crate::exit::Status;
use crate::output::{write_json, Provenance};

pub fn parse_preset(name: &str) -> Result<LayerPreset> {
    match name.to_ascii_lowercase().as_str() {
        "llava" => Ok(LayerPreset::Llava),
        "qwen" => Ok(LayerPreset::Qwen),
        other => bail!("unknown preset '{other}' (expected llava or qwen)"),
    }
}

#[derive(Debug, Serialize)]
struct AggregateSettings {
    layers: Vec<usize>,
    preset: Option<LayerPreset>,
    postprocess: Option<[u32; 2]>,
    transform: SharpnessTransform,
    smooth_k: usize,
}

pub fn run(args: AggregateArgs, cfg: &JobConfig) -> Result<Status> {
    let stack = args
        .stack
        .or_else(|| cfg.stack.clone())
        .context("no raw stack; pass --stack")?;
    let out: PathBuf = args.out.or_else(|| cfg.out.clone()).context("no output path; pass --out")?;
    let raw = load_raw_stack(&stack).with_context(|| format!("reading {}", stack.display()))?;

    let preset = args
        .preset
        .or_else(|| cfg.preset.clone())
        .map(|p| parse_preset(&p))
        .transpose()?;
    let layers = match (args.layers.or_else(|| cfg.layers.clone()), preset) {
        (Some(l), _) => l,
        (None, Some(p)) => p.layers().to_vec(),
        (None, None) => raw.layer_ids().to_vec(),
    };
    if let Some(grid) = preset.and_then(LayerPreset::grid) {
        let shape = raw.shape();
        if (shape.grid_h, shape.grid_w) != grid {
            warn!(
                "stack grid {}x{} differs from the preset's {}x{}",
                shape.grid_h, shape.grid_w, grid.0, grid.1
            );
        }
    }

    let post = args
        .postprocess
        .or_else(|| cfg.postprocess.clone())
        .map(|s| parse_dims(&s))
        .transpose()?;
    let settings = AggregateSettings {
        layers,
        preset,
        postprocess: post.map(|(w, h)| [w, h]),
        transform: pick(args.transform, cfg.transform, Default::default()),
        smooth_k: pick(args.smooth_k, cfg.smooth_k, DEFAULT_SMOOTH_K),
    };

    let mut map = aggregate(&raw, &settings.layers)?;
    if let Some((w, h)) = post {
        map = postprocess(&map, h as usize, w as usize, settings.smooth_k, settings.transform)?;
    }
    save_attention(&out, &map).with_context(|| format!("writing {}", out.display()))?;

    let mut prov_path = out.clone().into_os_string();
    prov_path.push(".provenance.json");
    let prov_path = PathBuf::from(prov_path);
    let provenance = Provenance::new("aggregate", &settings)?
        .input("stack", &stack)?
        .input("shape", &sidecar_path(&stack))?
        .output(&out);
    write_json(&prov_path, &provenance)?;
    println!("{} ({}x{})", out.display(), map.height(), map.width());
    Ok(Status::Success)
}
