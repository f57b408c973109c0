use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use attwarp_core::atw::load_attention;
use attwarp_core::metrics::SampleMetrics;
use attwarp_core::{BoundingBox, MetricReport};
use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{out_dir, pick};
use crate::args::MetricsArgs;
use crate::config::{JobConfig, MapSettings, DEFAULT_MAX_GRID};
use crate::exit::Status;
use crate::output::{ensure_dir, sha256_file, write_bytes, write_json, InputRecord, Provenance};
use crate::pipeline::prepare_map;
use attwarp_core::postprocess::DEFAULT_SMOOTH_K;

/// One annotation line. Box corners are image pixel coordinates.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotation {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub image_path: Option<PathBuf>,
    pub attention_path: PathBuf,
    pub boxes: Vec<BoundingBox>,
}

/// Report as written to disk: the core report plus where it came from.
#[derive(Debug, Serialize)]
struct ReportFile<'a> {
    #[serde(flatten)]
    report: &'a MetricReport,
    provenance: Provenance,
}

fn parse_line(line: &str) -> Result<Annotation> {
    let a: Annotation = serde_json::from_str(line)?;
    if a.boxes.is_empty() {
        bail!("no boxes");
    }
    for b in &a.boxes {
        b.validate()?;
    }
    Ok(a)
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_relative() {
        base.join(p)
    } else {
        p.to_path_buf()
    }
}

struct Evaluated {
    metrics: SampleMetrics,
    inputs: Vec<InputRecord>,
}

fn evaluate(a: &Annotation, line_no: usize, base: &Path, settings: &MapSettings) -> Result<Evaluated> {
    let attention = resolve(base, &a.attention_path);
    let map = load_attention(&attention)?;
    let mut inputs = vec![InputRecord::hash("attention", &attention)?];
    let dims = match &a.image_path {
        Some(p) => {
            let p = resolve(base, p);
            let (w, h) = image::image_dimensions(&p).with_context(|| format!("reading {}", p.display()))?;
            inputs.push(InputRecord::hash("image", &p)?);
            (h as usize, w as usize)
        }
        None => map.dims(),
    };
    let (scores, _) = prepare_map(&map, dims, dims, settings)?;
    let id = a
        .id
        .clone()
        .or_else(|| a.image_path.as_ref().map(|p| p.display().to_string()))
        .unwrap_or_else(|| format!("line {line_no}"));
    Ok(Evaluated {
        metrics: SampleMetrics::evaluate(id, &scores, &a.boxes)?,
        inputs,
    })
}

pub fn run(args: MetricsArgs, cfg: &JobConfig) -> Result<Status> {
    let annotations = args
        .annotations
        .or_else(|| cfg.annotations.clone())
        .context("no annotation file; pass --annotations")?;
    // metrics run in the image's own frame, so no resize
    let settings = MapSettings {
        transform: pick(args.transform, cfg.transform, Default::default()),
        smooth_k: pick(args.smooth_k, cfg.smooth_k, DEFAULT_SMOOTH_K),
        max_grid: pick(args.max_grid, cfg.max_grid, DEFAULT_MAX_GRID),
        ..MapSettings::default()
    };
    settings.validate()?;
    let text = std::fs::read_to_string(&annotations)
        .with_context(|| format!("reading {}", annotations.display()))?;
    let base = annotations.parent().unwrap_or(Path::new("")).to_path_buf();

    let mut skipped = 0;
    let mut parsed = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(line) {
            Ok(a) => parsed.push((i + 1, a)),
            Err(e) => {
                warn!("{}:{}: skipping malformed line: {e:#}", annotations.display(), i + 1);
                skipped += 1;
            }
        }
    }

    let threads = pick(args.output.jobs, cfg.jobs, 0);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    let results: Vec<(usize, Result<Evaluated>)> = pool.install(|| {
        parsed
            .par_iter()
            .map(|(n, a)| (*n, evaluate(a, *n, &base, &settings)))
            .collect()
    });

    let mut samples = Vec::new();
    let mut provenance = Provenance::new("metrics", &settings)?.input("annotations", &annotations)?;
    for (n, r) in results {
        match r {
            Ok(ev) => {
                samples.push(ev.metrics);
                provenance.inputs.extend(ev.inputs);
            }
            Err(e) => {
                warn!("{}:{n}: skipping sample: {e:#}", annotations.display());
                skipped += 1;
            }
        }
    }

    let evaluated = samples.len();
    let mut report = MetricReport::from_samples(samples);
    report.skipped_lines = skipped;
    if skipped > 0 {
        eprintln!("warning: skipped {skipped} annotation line(s)");
    }

    let dir = out_dir(&args.output, cfg);
    ensure_dir(&dir)?;
    let json_path = dir.join("metrics.json");
    let table_path = dir.join("metrics.txt");
    let table = report.to_table();
    provenance = provenance.output(&json_path).output(&table_path);
    provenance.details = serde_json::json!({ "annotations_sha256": sha256_file(&annotations)? });
    write_json(&json_path, &ReportFile { report: &report, provenance })?;
    write_bytes(&table_path, table.as_bytes())?;
    print!("{table}");

    Ok(if evaluated == 0 && skipped > 0 {
        Status::Failure
    } else {
        Status::Success
    })
}
