use std::path::Path;

use hyprec::eval::{evaluate_strong, evaluate_weak, EvalReport, Popularity, Protocol, Scorer, WeakCases};
use hyprec::models::load_checkpoint;
use hyprec::recdata::{Group, SplitArtifact};

use super::{open_split, out_path, train_matrix, write_file, write_json};
use crate::config::{protocol_name, RunConfig};
use crate::error::{CliError, CliResult};

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";

/// What is being evaluated.
pub enum Subject<'a> {
    Checkpoint(&'a Path),
    Popularity,
}

/// `evaluate`: scores a checkpoint (or the popularity baseline) on the
/// split's validation or test users and writes JSON and CSV reports.
pub fn run(cfg: &RunConfig, subject: Subject<'_>, group: Group) -> CliResult<EvalReport> {
    let (split, split_prov) = open_split(cfg)?;
    let n_items = train_matrix(&split).n_items();
    let (scorer, seed, trained): (Box<dyn Scorer>, Option<u64>, serde_json::Value) = match subject {
        Subject::Checkpoint(p) => {
            let ck = load_checkpoint(p).map_err(|e| CliError::from(e).context(p.display()))?;
            if ck.model.n_items() != n_items {
                return Err(CliError::data(format!(
                    "checkpoint scores {} items but the split has {n_items}",
                    ck.model.n_items()
                )));
            }
            (Box::new(ck.model), Some(ck.seed), ck.extra)
        }
        Subject::Popularity => (Box::new(Popularity::fit(train_matrix(&split))), None, serde_json::Value::Null),
    };
    let mut report = match &split {
        SplitArtifact::Weak(w) => {
            let which = match group {
                Group::Test => WeakCases::Test,
                Group::Val => WeakCases::Validation,
            };
            evaluate_weak(scorer.as_ref(), w, which, &cfg.cutoffs_for(Protocol::Weak))?
        }
        SplitArtifact::Strong(s) => evaluate_strong(scorer.as_ref(), s, group, &cfg.cutoffs_for(Protocol::Strong))?,
    };
    report.seed = seed;
    let mut prov = cfg.provenance();
    prov["training"] = trained;
    prov["split"] = split_prov;
    report.provenance = prov;
    write_json(&out_path(cfg, REPORT_JSON), &report)?;
    let csv = format!("{}\n{}\n", report.csv_header(), report.csv_row());
    write_file(&out_path(cfg, REPORT_CSV), csv.as_bytes())?;
    println!("{} protocol, {} group, {} users", protocol_name(report.protocol), report.group, report.n_users);
    println!("{}", report.table());
    Ok(report)
}
