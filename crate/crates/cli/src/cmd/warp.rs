use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use attwarp_core::atw::load_attention;
use attwarp_core::{warp_image, WarpField};
use serde::Serialize;
use serde_json::json;

use super::{batch_status, map_settings, out_dir, pick, pick_list, run_batch};
use crate::args::WarpArgs;
use crate::config::{JobConfig, MapSettings};
use crate::exit::Status;
use crate::output::{check_unique_stems, ensure_dir, stem, write_bytes, write_json, Provenance};
use crate::pipeline::{encode_png, load_image, prepare_map, resize_image};

struct Job {
    image: PathBuf,
    attention: PathBuf,
}

/// Paths of the artifacts written for one image.
#[derive(Debug, Serialize)]
pub struct WarpOutputs {
    pub warped: PathBuf,
    pub field: PathBuf,
    pub provenance: PathBuf,
}

pub fn artifact_paths(dir: &Path, image: &Path) -> WarpOutputs {
    let s = stem(image);
    WarpOutputs {
        warped: dir.join(format!("{s}.warped.png")),
        field: dir.join(format!("{s}.field.json")),
        provenance: dir.join(format!("{s}.provenance.json")),
    }
}

fn warp_one(job: &Job, dir: &Path, settings: &MapSettings) -> Result<WarpOutputs> {
    let img = load_image(&job.image)?;
    let original = (img.height() as usize, img.width() as usize);
    let img = resize_image(img, settings.resize);
    let work = (img.height() as usize, img.width() as usize);
    let map = load_attention(&job.attention)?;
    let (scores, kind) = prepare_map(&map, original, work, settings)?;
    let field = WarpField::from_scores(&scores)?;
    let warped = warp_image(&img, &field)?;

    let out = artifact_paths(dir, &job.image);
    write_bytes(&out.warped, &encode_png(&warped)?)?;
    write_json(&out.field, &field.to_json())?;
    let mut prov = Provenance::new("warp", settings)?
        .input("image", &job.image)?
        .input("attention", &job.attention)?
        .output(&out.warped)
        .output(&out.field);
    prov.details = json!({
        "attention_kind": kind,
        "attention_dims": [map.height(), map.width()],
        "image_dims": [original.0, original.1],
        "working_dims": [work.0, work.1],
    });
    write_json(&out.provenance, &prov)?;
    Ok(out)
}

pub fn run(args: WarpArgs, cfg: &JobConfig) -> Result<Status> {
    let settings = map_settings(&args.map, cfg)?;
    let images = pick_list(args.images, cfg.images.clone());
    let attention = pick_list(args.attention, cfg.attention.clone());
    if images.is_empty() {
        bail!("no input images; pass --image");
    }
    if images.len() != attention.len() {
        bail!(
            "{} images but {} attention maps; pass one --attention per --image",
            images.len(),
            attention.len()
        );
    }
    check_unique_stems(&images)?;
    let dir = out_dir(&args.output, cfg);
    ensure_dir(&dir)?;
    let jobs: Vec<Job> = images
        .into_iter()
        .zip(attention)
        .map(|(image, attention)| Job { image, attention })
        .collect();
    let threads = pick(args.output.jobs, cfg.jobs, 0);
    let results = run_batch(
        &jobs,
        threads,
        |j| j.image.display().to_string(),
        |j| warp_one(j, &dir, &settings),
    )?;
    for out in results.iter().flatten() {
        println!("{}", out.warped.display());
    }
    Ok(batch_status(&results))
}
