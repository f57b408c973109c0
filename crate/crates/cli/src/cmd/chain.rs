use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use attwarp_core::atw::load_attention;
use attwarp_core::chain::DEFAULT_KL_EPSILON;
use attwarp_core::chain::DEFAULT_MAX_ITERATIONS;
use attwarp_core::{run_chain, AttentionProvider, AttentionScoreMatrix, ChainConfig, StopReason};
use image::Rgb;
use serde_json::json;

use super::{map_settings, out_dir, pick, pick_list, run_batch};
use crate::args::ChainArgs;
use crate::config::{ChainSettings, JobConfig};
use crate::exit::Status;
use crate::extractor::{ExternalExtractor, PrecomputedMaps};
use crate::output::{check_unique_stems, ensure_dir, stem, write_bytes, write_json, Provenance};
use crate::pipeline::{encode_png, load_image, resize_image};

enum Source {
    Maps(Vec<(PathBuf, AttentionScoreMatrix)>),
    Extractor,
}

fn chain_one(image: &Path, source: &Source, settings: &ChainSettings, dir: &Path) -> Result<StopReason> {
    let img = load_image(image)?;
    let original = (img.height() as usize, img.width() as usize);
    let img = resize_image(img, settings.map.resize);

    let mut provider: Box<dyn AttentionProvider<Rgb<u8>>> = match source {
        Source::Maps(maps) => Box::new(PrecomputedMaps {
            maps: maps.iter().map(|(_, m)| m.clone()).collect(),
            original,
            settings: settings.map,
        }),
        Source::Extractor => Box::new(
            ExternalExtractor::new(
                settings.extractor.clone().expect("extractor mode"),
                settings.extractor_args.clone(),
                settings.model_preset.clone().unwrap_or_default(),
                settings.query.clone().unwrap_or_default(),
                original,
                settings.map,
            )
            .context("creating extractor scratch directory")?,
        ),
    };
    let outcome = run_chain(&img, provider.as_mut(), settings.chain)?;

    let s = stem(image);
    let warped = dir.join(format!("{s}.warped.png"));
    let field = dir.join(format!("{s}.field.json"));
    let trace = dir.join(format!("{s}.trace.json"));
    let provenance = dir.join(format!("{s}.provenance.json"));

    let mut prov = Provenance::new("chain", settings)?.input("image", image)?;
    if let Source::Maps(maps) = source {
        for (i, (p, _)) in maps.iter().enumerate() {
            prov = prov.input(&format!("map_depth_{i}"), p)?;
        }
    }
    let mut summary = outcome.trace.summary(settings.chain);
    for (step, s_out) in outcome.trace.steps.iter().zip(summary.steps.iter_mut()) {
        let p = dir.join(format!("{s}.step{}.field.json", step.depth));
        write_json(&p, &step.field.to_json())?;
        prov = prov.output(&p);
        s_out.field_path = p.file_name().map(|n| n.to_string_lossy().into_owned());
    }
    write_bytes(&warped, &encode_png(&outcome.image)?)?;
    write_json(&field, &outcome.field.to_json())?;
    write_json(&trace, &summary)?;
    prov = prov.output(&warped).output(&field).output(&trace);
    prov.details = json!({
        "stop_reason": outcome.trace.stop_reason,
        "depth": outcome.trace.depth(),
    });
    write_json(&provenance, &prov)?;

    if let Some(err) = &outcome.trace.provider_error {
        eprintln!("warning: {}: provider exhausted: {err}", image.display());
    }
    println!(
        "{}: depth {} ({:?})",
        warped.display(),
        outcome.trace.depth(),
        outcome.trace.stop_reason
    );
    Ok(outcome.trace.stop_reason)
}

pub fn run(args: ChainArgs, cfg: &JobConfig) -> Result<Status> {
    let map = map_settings(&args.map, cfg)?;
    let chain = ChainConfig {
        kl_epsilon: pick(args.kl_epsilon, cfg.kl_epsilon, DEFAULT_KL_EPSILON),
        max_iterations: pick(args.max_iterations, cfg.max_iterations, DEFAULT_MAX_ITERATIONS),
    };
    chain.validate()?;
    let images = pick_list(args.images, cfg.images.clone());
    let maps = pick_list(args.maps, cfg.maps.clone());
    let extractor = args.extractor.or_else(|| cfg.extractor.clone());
    if images.is_empty() {
        bail!("no input images; pass --image");
    }
    check_unique_stems(&images)?;

    let source = match (&extractor, maps.is_empty()) {
        (Some(_), false) => bail!("pass either --map or --extractor, not both"),
        (None, true) => bail!("no attention source; pass --map (per depth) or --extractor"),
        (None, false) => {
            if images.len() != 1 {
                bail!("precomputed maps describe one image; got {}", images.len());
            }
            let loaded = maps
                .into_iter()
                .map(|p| {
                    let m = load_attention(&p).with_context(|| format!("reading {}", p.display()))?;
                    Ok((p, m))
                })
                .collect::<Result<Vec<_>>>()?;
            Source::Maps(loaded)
        }
        (Some(_), true) => Source::Extractor,
    };

    let settings = ChainSettings {
        map,
        chain,
        extractor,
        extractor_args: pick_list(args.extractor_args, cfg.extractor_args.clone()),
        model_preset: args.model_preset.or_else(|| cfg.model_preset.clone()),
        query: args.query.or_else(|| cfg.query.clone()),
    };
    if matches!(source, Source::Extractor) && (settings.model_preset.is_none() || settings.query.is_none()) {
        bail!("extractor mode needs --model-preset and --query");
    }

    let dir = out_dir(&args.output, cfg);
    ensure_dir(&dir)?;
    let threads = pick(args.output.jobs, cfg.jobs, 0);
    let results = run_batch(
        &images,
        threads,
        |p| p.display().to_string(),
        |p| chain_one(p, &source, &settings, &dir),
    )?;
    let status = super::batch_status(&results);
    let exhausted = results
        .iter()
        .flatten()
        .any(|r| *r == StopReason::ProviderExhausted);
    Ok(if status == Status::Success && exhausted {
        Status::ProviderExhausted
    } else {
        status
    })
}
