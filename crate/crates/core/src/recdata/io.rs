use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::split::{EvalGroup, StrongSplit, WeakCase, WeakSplit};
use super::InteractionMatrix;
use crate::error::{Error, Result};

pub const TRAIN_FILE: &str = "train.csr";
pub const META_FILE: &str = "split.json";
pub const NEGATIVES_FILE: &str = "negatives.tsv";
pub const VAL_NEGATIVES_FILE: &str = "val_negatives.tsv";

/// `train.csr`: `n_rows, n_cols, nnz`, then the row pointers and column
/// indices, all as little-endian `u64`.
pub fn write_csr(path: &Path, m: &InteractionMatrix) -> Result<()> {
    let header = [m.n_users(), m.n_items(), m.nnz()];
    let mut buf = Vec::with_capacity(8 * (4 + m.n_users() + m.nnz()));
    for &x in header.iter().chain(m.indptr()).chain(m.indices()) {
        buf.extend_from_slice(&(x as u64).to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Reads `train.csr`; ids come from the caller.
pub fn read_csr(path: &Path, user_ids: Vec<String>, item_ids: Vec<String>) -> Result<InteractionMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = || Error::Data(format!("{}: truncated or malformed CSR file", path.display()));
    if bytes.len() % 8 != 0 || bytes.len() < 24 {
        return Err(bad());
    }
    let words: Vec<usize> = bytes
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")) as usize)
        .collect();
    let (rows, cols, nnz) = (words[0], words[1], words[2]);
    if words.len() != 3 + rows + 1 + nnz {
        return Err(bad());
    }
    let indptr = words[3..4 + rows].to_vec();
    let indices = words[4 + rows..].to_vec();
    InteractionMatrix::from_csr(rows, cols, indptr, indices, user_ids, item_ids)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CaseMeta {
    user: usize,
    item: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum SplitMeta {
    Weak {
        seed: u64,
        n_negatives: usize,
        user_ids: Vec<String>,
        item_ids: Vec<String>,
        test: Vec<CaseMeta>,
        validation: Vec<CaseMeta>,
        dropped_users: usize,
        shortfalls: usize,
        provenance: serde_json::Value,
    },
    Strong {
        seed: u64,
        foldin_ratio: f64,
        source_user_ids: Vec<String>,
        item_ids: Vec<String>,
        train_users: Vec<usize>,
        validation: EvalGroup,
        test: EvalGroup,
        provenance: serde_json::Value,
    },
}

/// A split read back from disk with the provenance block it was saved with.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitArtifact {
    Weak(WeakSplit),
    Strong(StrongSplit),
}

fn write_negatives(path: &Path, cases: &[WeakCase]) -> Result<()> {
    let mut out = Vec::new();
    for c in cases {
        write!(out, "{}", c.user).expect("in-memory write");
        for n in &c.negatives {
            write!(out, "\t{n}").expect("in-memory write");
        }
        out.push(b'\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn read_negatives(path: &Path, cases: &[CaseMeta]) -> Result<Vec<WeakCase>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let lines: Vec<&str> = text.lines().filter(|l| !l.is_empty()).collect();
    if lines.len() != cases.len() {
        return Err(Error::Data(format!(
            "{}: {} lines for {} cases",
            path.display(),
            lines.len(),
            cases.len()
        )));
    }
    lines
        .iter()
        .zip(cases)
        .enumerate()
        .map(|(ln, (line, meta))| {
            let err = |msg: &str| Error::Parse {
                path: path.to_path_buf(),
                line: ln + 1,
                msg: msg.to_string(),
            };
            let mut fields = line.split('\t').map(|f| f.parse::<usize>());
            let user = fields.next().ok_or_else(|| err("empty line"))?.map_err(|_| err("bad user"))?;
            if user != meta.user {
                return Err(err("user order disagrees with split.json"));
            }
            let negatives = fields
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| err("bad item index"))?;
            Ok(WeakCase {
                user,
                item: meta.item,
                negatives,
            })
        })
        .collect()
}

fn write_json(path: &Path, meta: &SplitMeta) -> Result<()> {
    let mut text = serde_json::to_string_pretty(meta)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn case_meta(cases: &[WeakCase]) -> Vec<CaseMeta> {
    cases
        .iter()
        .map(|c| CaseMeta {
            user: c.user,
            item: c.item,
        })
        .collect()
}

pub fn save_weak(dir: &Path, s: &WeakSplit, provenance: &serde_json::Value) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_csr(&dir.join(TRAIN_FILE), &s.train)?;
    write_negatives(&dir.join(NEGATIVES_FILE), &s.test)?;
    write_negatives(&dir.join(VAL_NEGATIVES_FILE), &s.validation)?;
    let meta = SplitMeta::Weak {
        seed: s.seed,
        n_negatives: s.n_negatives,
        user_ids: s.train.user_ids().to_vec(),
        item_ids: s.train.item_ids().to_vec(),
        test: case_meta(&s.test),
        validation: case_meta(&s.validation),
        dropped_users: s.dropped_users,
        shortfalls: s.shortfalls,
        provenance: provenance.clone(),
    };
    write_json(&dir.join(META_FILE), &meta)
}

pub fn save_strong(dir: &Path, s: &StrongSplit, source_user_ids: &[String], provenance: &serde_json::Value) -> Result<()> {
    if source_user_ids.len() != s.n_source_users {
        return Err(Error::InvalidArgument("source user id count mismatch".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_csr(&dir.join(TRAIN_FILE), &s.train)?;
    let meta = SplitMeta::Strong {
        seed: s.seed,
        foldin_ratio: s.foldin_ratio,
        source_user_ids: source_user_ids.to_vec(),
        item_ids: s.train.item_ids().to_vec(),
        train_users: s.train_users.clone(),
        validation: s.validation.clone(),
        test: s.test.clone(),
        provenance: provenance.clone(),
    };
    write_json(&dir.join(META_FILE), &meta)
}

/// Loads a split directory; returns the split and its provenance block.
pub fn load_split(dir: &Path) -> Result<(SplitArtifact, serde_json::Value)> {
    let meta_path = dir.join(META_FILE);
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: SplitMeta = serde_json::from_str(&text)?;
    match meta {
        SplitMeta::Weak {
            seed,
            n_negatives,
            user_ids,
            item_ids,
            test,
            validation,
            dropped_users,
            shortfalls,
            provenance,
        } => {
            let train = read_csr(&dir.join(TRAIN_FILE), user_ids, item_ids)?;
            let split = WeakSplit {
                test: read_negatives(&dir.join(NEGATIVES_FILE), &test)?,
                validation: read_negatives(&dir.join(VAL_NEGATIVES_FILE), &validation)?,
                train,
                n_negatives,
                seed,
                dropped_users,
                shortfalls,
            };
            split.check()?;
            Ok((SplitArtifact::Weak(split), provenance))
        }
        SplitMeta::Strong {
            seed,
            foldin_ratio,
            source_user_ids,
            item_ids,
            train_users,
            validation,
            test,
            provenance,
        } => {
            let ids = train_users
                .iter()
                .map(|&u| source_user_ids.get(u).cloned())
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::Data("train user index out of range".into()))?;
            let train = read_csr(&dir.join(TRAIN_FILE), ids, item_ids)?;
            let split = StrongSplit {
                train,
                train_users,
                validation,
                test,
                foldin_ratio,
                seed,
                n_source_users: source_user_ids.len(),
            };
            split.check()?;
            Ok((SplitArtifact::Strong(split), provenance))
        }
    }
}
