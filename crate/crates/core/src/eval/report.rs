use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Weak,
    Strong,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    /// `HR`, `NDCG` or `Recall`.
    pub name: String,
    pub cutoff: usize,
    pub value: f64,
}

impl Metric {
    pub fn label(&self) -> String {
        format!("{}@{}", self.name, self.cutoff)
    }
}

/// Averaged metrics of one evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: Protocol,
    /// `test` or `validation`.
    pub group: String,
    /// Sorted by cutoff, then name.
    pub metrics: Vec<Metric>,
    pub cutoffs: Vec<usize>,
    pub n_users: usize,
    pub seed: Option<u64>,
    pub model: String,
    pub wall_time_secs: f64,
    /// Caller-defined provenance (run configuration, hashes).
    #[serde(default)]
    pub provenance: serde_json::Value,
}

impl EvalReport {
    pub fn get(&self, name: &str, cutoff: usize) -> Option<f64> {
        self.metrics
            .iter()
            .find(|m| m.name == name && m.cutoff == cutoff)
            .map(|m| m.value)
    }

    /// Column names of [`Self::csv_row`].
    pub fn csv_header(&self) -> String {
        let mut h = String::from("model,protocol,group,n_users,seed");
        for m in &self.metrics {
            write!(h, ",{}", m.label()).expect("string write");
        }
        h
    }

    pub fn csv_row(&self) -> String {
        let seed = self.seed.map(|s| s.to_string()).unwrap_or_default();
        let protocol = match self.protocol {
            Protocol::Weak => "weak",
            Protocol::Strong => "strong",
        };
        let mut r = format!("{},{protocol},{},{},{seed}", self.model, self.group, self.n_users);
        for m in &self.metrics {
            write!(r, ",{}", m.value).expect("string write");
        }
        r
    }

    /// Plain-text table: one column per metric, four decimals.
    pub fn table(&self) -> String {
        let labels: Vec<String> = self.metrics.iter().map(Metric::label).collect();
        let width = labels.iter().map(|l| l.len()).max().unwrap_or(0).max(6);
        let name_w = self.model.len().max(5);
        let mut out = format!("{:name_w$}", "model");
        for l in &labels {
            write!(out, "  {l:>width$}").expect("string write");
        }
        write!(out, "\n{:name_w$}", self.model).expect("string write");
        for m in &self.metrics {
            write!(out, "  {:>width$.4}", m.value).expect("string write");
        }
        out.push('\n');
        out
    }
}
