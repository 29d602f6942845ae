//! Collects evaluation reports and tuning logs into summary tables.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hyprec::eval::EvalReport;

use super::evaluate::REPORT_JSON;
use super::tune::TRIALS_FILE;
use super::write_file;
use crate::error::{CliError, CliResult};

pub const SUMMARY_CSV: &str = "summary.csv";
pub const TRIALS_SUMMARY_CSV: &str = "trials_summary.csv";

/// Five-number summary of the final validation metric of one tuning run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialStats {
    pub source: String,
    pub ok: usize,
    pub failed: usize,
    /// min, lower quartile, median, upper quartile, max.
    pub quantiles: Option<[f64; 5]>,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn trial_stats(path: &Path) -> CliResult<TrialStats> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| CliError::data(format!("{}: no '{name}' column", path.display())))
    };
    let (status, value) = (col("status")?, col("final_val_ndcg")?);
    let (mut vals, mut ok, mut failed) = (Vec::new(), 0, 0);
    for line in lines.filter(|l| !l.is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.get(status) == Some(&"ok") {
            ok += 1;
            if let Some(v) = f.get(value).and_then(|v| v.parse::<f64>().ok()) {
                vals.push(v);
            }
        } else {
            failed += 1;
        }
    }
    vals.sort_by(f64::total_cmp);
    let quantiles = (!vals.is_empty()).then(|| [0.0, 0.25, 0.5, 0.75, 1.0].map(|q| quantile(&vals, q)));
    Ok(TrialStats {
        source: path.display().to_string(),
        ok,
        failed,
        quantiles,
    })
}

fn expand(inputs: &[PathBuf]) -> (Vec<PathBuf>, Vec<PathBuf>) {
    let (mut reports, mut trials) = (Vec::new(), Vec::new());
    for p in inputs {
        if p.is_dir() {
            for (name, list) in [(REPORT_JSON, &mut reports), (TRIALS_FILE, &mut trials)] {
                if p.join(name).is_file() {
                    list.push(p.join(name));
                }
            }
        } else if p.extension().is_some_and(|e| e == "csv") {
            trials.push(p.clone());
        } else {
            reports.push(p.clone());
        }
    }
    (reports, trials)
}

/// `report`: merges evaluation reports into one wide CSV (one column per
/// metric label across all inputs) and summarizes tuning logs.
pub fn run(inputs: &[PathBuf], out: &Path) -> CliResult<(Vec<EvalReport>, Vec<TrialStats>)> {
    let (report_paths, trial_paths) = expand(inputs);
    if report_paths.is_empty() && trial_paths.is_empty() {
        return Err(CliError::usage("no reports or trial logs given"));
    }
    let mut reports = Vec::new();
    for p in &report_paths {
        let text = std::fs::read_to_string(p).map_err(|e| CliError::data(format!("{}: {e}", p.display())))?;
        let r: EvalReport = serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", p.display())))?;
        reports.push(r);
    }
    if !reports.is_empty() {
        let mut labels: Vec<(usize, String, String)> = Vec::new();
        for m in reports.iter().flat_map(|r| &r.metrics) {
            let key = (m.cutoff, m.name.clone(), m.label());
            if !labels.contains(&key) {
                labels.push(key);
            }
        }
        labels.sort();
        let mut csv = String::from("source,model,protocol,group,n_users,seed,config_hash");
        for (_, _, l) in &labels {
            write!(csv, ",{l}").expect("string write");
        }
        csv.push('\n');
        for (r, p) in reports.iter().zip(&report_paths) {
            let row = r.csv_row();
            let fixed: Vec<&str> = row.splitn(6, ',').take(5).collect();
            write!(
                csv,
                "{},{},{}",
                p.display(),
                fixed.join(","),
                r.provenance["config_hash"].as_str().unwrap_or("")
            )
            .expect("string write");
            for (c, name, _) in &labels {
                write!(csv, ",{}", r.get(name, *c).map(|v| v.to_string()).unwrap_or_default()).expect("string write");
            }
            csv.push('\n');
            println!("{}", r.table());
        }
        write_file(&out.join(SUMMARY_CSV), csv.as_bytes())?;
    }
    let mut stats = Vec::new();
    if !trial_paths.is_empty() {
        let mut csv = String::from("source,ok,failed,min,q1,median,q3,max\n");
        for p in &trial_paths {
            let s = trial_stats(p)?;
            let q = s
                .quantiles
                .map(|q| q.map(|v| v.to_string()).join(","))
                .unwrap_or_else(|| ",,,,".into());
            writeln!(csv, "{},{},{},{q}", s.source, s.ok, s.failed).expect("string write");
            println!(
                "{}: {} ok, {} failed, median final val NDCG {}",
                s.source,
                s.ok,
                s.failed,
                s.quantiles.map_or("-".into(), |q| format!("{:.4}", q[2]))
            );
            stats.push(s);
        }
        write_file(&out.join(TRIALS_SUMMARY_CSV), csv.as_bytes())?;
    }
    Ok((reports, stats))
}

#[cfg(test)]
mod tests {
    use super::quantile;

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&v, 0.5), 2.5);
    }
}
