//! Subcommand implementations and the helpers they share.

pub mod estimate;
pub mod evaluate;
pub mod report;
pub mod split;
pub mod train;
pub mod tune;

use std::fs;
use std::path::{Path, PathBuf};

use hyprec::curvature::{estimate_c, CurvatureOptions, DeltaEstimate};
use hyprec::recdata::{load_interactions, load_split, Format, InteractionMatrix, LoadOptions, SplitArtifact};
use serde::Serialize;

use crate::config::{CPolicy, RunConfig};
use crate::error::{CliError, CliResult};

/// Mixes a stream index into a seed (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn load_dataset(cfg: &RunConfig) -> CliResult<InteractionMatrix> {
    let path = cfg
        .data
        .as_deref()
        .ok_or_else(|| CliError::usage("no dataset given (set data=...)"))?;
    let format = match cfg.format {
        Some(f) => f,
        None => Format::from_path(path).ok_or_else(|| {
            CliError::usage(format!("cannot infer the format of {}; set format=...", path.display()))
        })?,
    };
    let opts = LoadOptions {
        min_user_items: cfg.min_user_items,
        min_rating: cfg.min_rating,
        ..LoadOptions::default()
    };
    let (m, stats) = load_interactions(path, format, &opts)?;
    eprintln!(
        "loaded {}: {} users, {} items, {} interactions ({} raw, {} below rating threshold, {} users dropped)",
        path.display(),
        m.n_users(),
        m.n_items(),
        m.nnz(),
        stats.raw_interactions,
        stats.dropped_by_rating,
        stats.dropped_users
    );
    Ok(m)
}

pub fn split_dir(cfg: &RunConfig) -> CliResult<&Path> {
    cfg.split_dir
        .as_deref()
        .ok_or_else(|| CliError::usage("no split directory given (set split_dir=...)"))
}

pub fn open_split(cfg: &RunConfig) -> CliResult<(SplitArtifact, serde_json::Value)> {
    let dir = split_dir(cfg)?;
    load_split(dir).map_err(|e| CliError::from(e).context(format!("split {}", dir.display())))
}

pub fn train_matrix(s: &SplitArtifact) -> &InteractionMatrix {
    match s {
        SplitArtifact::Weak(w) => &w.train,
        SplitArtifact::Strong(st) => &st.train,
    }
}

pub fn curvature_options(cfg: &RunConfig) -> CurvatureOptions {
    CurvatureOptions {
        rank: cfg.svd_rank,
        sample_size: cfg.delta_sample,
        trials: cfg.delta_trials,
        seed: cfg.seed,
        mode: cfg.delta_mode,
        embedding: cfg.embedding,
    }
}

/// The curvature to train with, plus the estimate when one was used.
pub fn resolve_curvature(cfg: &RunConfig, train: &InteractionMatrix) -> CliResult<(f64, Option<DeltaEstimate>)> {
    match cfg.c {
        CPolicy::Fixed(c) => Ok((c, None)),
        CPolicy::Estimate => {
            let est = match &cfg.curvature_file {
                Some(p) => read_estimate(p)?,
                None => estimate_c(train, &curvature_options(cfg))?,
            };
            let c = est
                .c
                .ok_or_else(|| CliError::numerical("curvature estimate has no c (δ = 0)"))?;
            eprintln!("estimated c = {c}");
            Ok((c, Some(est)))
        }
    }
}

pub fn read_estimate(path: &Path) -> CliResult<DeltaEstimate> {
    let text = fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::data(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

pub fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.out.join(name)
}
