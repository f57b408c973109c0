pub mod aggregate;
pub mod chain;
pub mod metrics;
pub mod targets;
pub mod warp;

use std::path::PathBuf;

use anyhow::{Context, Result};
use log::info;
use rayon::prelude::*;

use crate::args::{MapArgs, OutputArgs};
use crate::config::{JobConfig, MapSettings, DEFAULT_MAX_GRID};
use crate::exit::Status;
use attwarp_core::postprocess::DEFAULT_SMOOTH_K;

/// Flag, then config file, then default.
pub fn pick<T>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}

/// Repeated flags replace the config file's list wholesale.
pub fn pick_list<T>(flag: Vec<T>, config: Vec<T>) -> Vec<T> {
    if flag.is_empty() {
        config
    } else {
        flag
    }
}

pub fn map_settings(args: &MapArgs, cfg: &JobConfig) -> Result<MapSettings> {
    let s = MapSettings {
        transform: pick(args.transform, cfg.transform, Default::default()),
        smooth_k: pick(args.smooth_k, cfg.smooth_k, DEFAULT_SMOOTH_K),
        resize: pick(args.resize, cfg.resize, Default::default()),
        max_grid: pick(args.max_grid, cfg.max_grid, DEFAULT_MAX_GRID),
    };
    s.validate()?;
    Ok(s)
}

/// Output directory; `--out-dir` and `ATTWARP_OUT_DIR` both arrive through the flag.
pub fn out_dir(args: &OutputArgs, cfg: &JobConfig) -> PathBuf {
    args.out_dir
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Runs `work` over `items` on `jobs` threads (0 means one per core),
/// reporting each failure on stderr. Returns the per-item results in order.
pub fn run_batch<I, T, F>(items: &[I], jobs: usize, label: impl Fn(&I) -> String + Sync, work: F) -> Result<Vec<Option<T>>>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> Result<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("starting worker pool")?;
    let results: Vec<Result<T>> = pool.install(|| items.par_iter().map(&work).collect());
    Ok(results
        .into_iter()
        .zip(items)
        .map(|(r, item)| match r {
            Ok(v) => {
                info!("{}: done", label(item));
                Some(v)
            }
            Err(e) => {
                eprintln!("error: {}: {e:#}", label(item));
                None
            }
        })
        .collect())
}

pub fn batch_status<T>(results: &[Option<T>]) -> Status {
    let failed = results.iter().filter(|r| r.is_none()).count();
    Status::for_batch(results.len(), failed)
}
