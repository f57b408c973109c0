use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use attwarp_core::atw::load_attention;
use attwarp_core::targets::{marginal_targets, MarginalTargets};
use serde::Serialize;

use super::{batch_status, out_dir, pick, pick_list, run_batch};
use crate::args::TargetArgs;
use crate::config::JobConfig;
use crate::exit::Status;
use crate::output::{check_unique_stems, ensure_dir, stem, write_json, Provenance};

#[derive(Serialize)]
struct TargetFile {
    #[serde(flatten)]
    targets: MarginalTargets,
    provenance: Provenance,
}

fn export_one(path: &Path, dir: &Path) -> Result<PathBuf> {
    let map = load_attention(path)?;
    let targets = marginal_targets(&map)?;
    let out = dir.join(format!("{}.targets.json", stem(path)));
    let provenance = Provenance::new("export-targets", &serde_json::json!({}))?
        .input("attention", path)?
        .output(&out);
    write_json(&out, &TargetFile { targets, provenance })?;
    Ok(out)
}

pub fn run(args: TargetArgs, cfg: &JobConfig) -> Result<Status> {
    let maps = pick_list(args.attention, cfg.attention.clone());
    if maps.is_empty() {
        bail!("no attention maps; pass --attention");
    }
    check_unique_stems(&maps)?;
    let dir = out_dir(&args.output, cfg);
    ensure_dir(&dir)?;
    let threads = pick(args.output.jobs, cfg.jobs, 0);
    let results = run_batch(&maps, threads, |p| p.display().to_string(), |p| export_one(p, &dir))?;
    for out in results.iter().flatten() {
        println!("{}", out.display());
    }
    Ok(batch_status(&results))
}
