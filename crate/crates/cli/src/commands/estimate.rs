use std::path::Path;

use hyprec::curvature::{estimate_c, DeltaEstimate};
use serde::Serialize;

use super::{curvature_options, load_dataset, open_split, train_matrix, write_json};
use crate::config::RunConfig;
use crate::error::CliResult;

#[derive(Serialize)]
struct Output<'a> {
    #[serde(flatten)]
    estimate: &'a DeltaEstimate,
    source: String,
    provenance: serde_json::Value,
}

/// Estimates `c` from the dataset (or a split's training matrix) and writes
/// the estimate as JSON.
pub fn run(cfg: &RunConfig, output: &Path) -> CliResult<DeltaEstimate> {
    let (matrix, source) = if cfg.data.is_some() {
        (load_dataset(cfg)?, cfg.get("data"))
    } else {
        let (split, _) = open_split(cfg)?;
        (train_matrix(&split).clone(), format!("{}/train.csr", cfg.get("split_dir")))
    };
    let est = estimate_c(&matrix, &curvature_options(cfg))?;
    write_json(
        output,
        &Output {
            estimate: &est,
            source,
            provenance: cfg.provenance(),
        },
    )?;
    println!(
        "delta_rel = {:.6}  delta_raw = {:.6}  c = {}  ({} mode, {} trials)",
        est.delta_rel,
        est.delta_raw,
        est.c.map_or("undefined".into(), |c| format!("{c:.6}")),
        cfg.get("delta_mode"),
        est.trials - est.skipped_trials
    );
    Ok(est)
}
