use std::path::PathBuf;

use hyprec::eval::Protocol;
use hyprec::recdata::{default_group_size, save_strong, save_weak, split_strong, split_weak, split_weak_with_validation};

use super::load_dataset;
use crate::config::RunConfig;
use crate::error::CliResult;

/// Builds the configured split and writes it to `split_dir` (or `out`).
pub fn run(cfg: &RunConfig) -> CliResult<PathBuf> {
    let m = load_dataset(cfg)?;
    let dir = cfg.split_dir.clone().unwrap_or_else(|| cfg.out.clone());
    let mut prov = cfg.provenance();
    match cfg.protocol {
        Protocol::Weak => {
            let s = if cfg.weak_validation {
                split_weak_with_validation(&m, cfg.n_negatives, cfg.seed)?
            } else {
                split_weak(&m, cfg.n_negatives, cfg.seed)?
            };
            prov["dropped_users"] = s.dropped_users.into();
            prov["shortfalls"] = s.shortfalls.into();
            save_weak(&dir, &s, &prov)?;
            println!(
                "weak split: {} test cases, {} validation cases, {} users dropped, {} negative shortfalls -> {}",
                s.test.len(),
                s.validation.len(),
                s.dropped_users,
                s.shortfalls,
                dir.display()
            );
        }
        Protocol::Strong => {
            let n_val = cfg.val_users.unwrap_or_else(|| default_group_size(m.n_users()));
            let n_test = cfg.test_users.unwrap_or_else(|| default_group_size(m.n_users()));
            let s = split_strong(&m, n_val, n_test, cfg.foldin_ratio, cfg.seed)?;
            save_strong(&dir, &s, m.user_ids(), &prov)?;
            println!(
                "strong split: {} train users, {} validation users, {} test users -> {}",
                s.train_users.len(),
                s.validation.len(),
                s.test.len(),
                dir.display()
            );
        }
    }
    Ok(dir)
}
