use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ae::{AeModel, BiasMode};
use super::hvae::HvaeModel;
use super::model::{Family, Model};
use super::puresvd::PureSvd;
use crate::error::{Error, Result};
use crate::geometry::Curvature;
use crate::graddiff::Tensor;
use crate::optim::{AdamConfig, OptimState, Optimizer};

pub const CHECKPOINT_FORMAT: &str = "hyprec-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerMeta {
    pub config: AdamConfig,
    /// Step count per parameter, in parameter order.
    pub steps: Vec<u64>,
}

/// JSON header preceding the tensor blobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub version: u32,
    pub architecture: Family,
    pub c: f64,
    pub eps_boundary: f64,
    pub n_items: usize,
    pub dims: usize,
    pub bias_mode: Option<BiasMode>,
    pub tangent_tanh: bool,
    pub seed: u64,
    /// Blob layout, in file order.
    pub tensors: Vec<TensorEntry>,
    pub optimizer: Option<OptimizerMeta>,
    /// Caller-defined provenance (run configuration, epoch, metrics).
    pub extra: serde_json::Value,
}

/// A model with optional optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub optimizer: Option<Optimizer>,
    pub seed: u64,
    pub extra: serde_json::Value,
}

fn model_tensors(model: &Model) -> Vec<(String, &Tensor)> {
    match model {
        Model::PureSvd(m) => vec![("v".to_string(), &m.v)],
        _ => model.params().iter().map(|p| (p.name.clone(), &p.values)).collect(),
    }
}

/// Writes `u64` header length, the JSON header, then every tensor as
/// little-endian `f64`. The file is written atomically via a rename.
pub fn save_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    let mut blobs: Vec<(String, &Tensor)> = model_tensors(&ck.model);
    if let Some(opt) = &ck.optimizer {
        let names: Vec<String> = blobs.iter().map(|b| b.0.clone()).collect();
        for (name, st) in names.iter().zip(&opt.states) {
            blobs.push((format!("m.{name}"), &st.m));
            blobs.push((format!("v.{name}"), &st.v));
        }
    }
    let (bias_mode, tangent_tanh) = match &ck.model {
        Model::Ae(m) => (m.hyperbolic, m.tangent_tanh),
        _ => (None, false),
    };
    let k = ck.model.curvature();
    let header = CheckpointHeader {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        architecture: ck.model.family(),
        c: k.c(),
        eps_boundary: k.eps_boundary(),
        n_items: ck.model.n_items(),
        dims: ck.model.dim(),
        bias_mode,
        tangent_tanh,
        seed: ck.seed,
        tensors: blobs
            .iter()
            .map(|(n, t)| TensorEntry {
                name: n.clone(),
                rows: t.rows(),
                cols: t.cols(),
            })
            .collect(),
        optimizer: ck.optimizer.as_ref().map(|o| OptimizerMeta {
            config: o.config,
            steps: o.states.iter().map(|s| s.t).collect(),
        }),
        extra: ck.extra.clone(),
    };
    let json = serde_json::to_vec(&header)?;
    let total: usize = blobs.iter().map(|b| b.1.len()).sum();
    let mut buf = Vec::with_capacity(8 + json.len() + 8 * total);
    buf.extend_from_slice(&(json.len() as u64).to_le_bytes());
    buf.extend_from_slice(&json);
    for (_, t) in &blobs {
        for x in t.data() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, buf).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Reads only the header.
pub fn read_checkpoint_header(path: &Path) -> Result<CheckpointHeader> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(split_header(path, &bytes)?.0)
}

fn split_header<'a>(path: &Path, bytes: &'a [u8]) -> Result<(CheckpointHeader, &'a [u8])> {
    let bad = |m: &str| Error::Data(format!("{}: {m}", path.display()));
    if bytes.len() < 8 {
        return Err(bad("truncated checkpoint"));
    }
    let n = u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes")) as usize;
    let json = bytes.get(8..8 + n).ok_or_else(|| bad("truncated header"))?;
    let header: CheckpointHeader = serde_json::from_slice(json)?;
    if header.format != CHECKPOINT_FORMAT || header.version != CHECKPOINT_VERSION {
        return Err(bad("not a checkpoint of a supported version"));
    }
    Ok((header, &bytes[8 + n..]))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (h, mut rest) = split_header(path, &bytes)?;
    let mut tensors = Vec::with_capacity(h.tensors.len());
    for e in &h.tensors {
        let n = e.rows * e.cols;
        if rest.len() < 8 * n {
            return Err(Error::Data(format!("{}: blob '{}' truncated", path.display(), e.name)));
        }
        let data = rest[..8 * n]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        rest = &rest[8 * n..];
        tensors.push(Tensor::from_vec(e.rows, e.cols, data)?);
    }
    if !rest.is_empty() {
        return Err(Error::Data(format!("{}: trailing bytes", path.display())));
    }
    let k = if h.architecture.is_hyperbolic() {
        Curvature::with_eps(h.c, h.eps_boundary)?
    } else {
        Curvature::euclidean()
    };
    let n_model = if h.architecture == Family::Puresvd { 1 } else { 4 };
    if tensors.len() < n_model {
        return Err(Error::Data(format!("{}: missing model tensors", path.display())));
    }
    let opt_tensors = tensors.split_off(n_model);
    let model = match h.architecture {
        Family::Puresvd => Model::PureSvd(PureSvd {
            v: tensors.pop().expect("one tensor"),
        }),
        Family::Hvae => Model::Hvae(HvaeModel::from_tensors(k, take4(tensors))?),
        f => {
            let mut m = AeModel::from_tensors(f.bias_mode(), k, take4(tensors))?;
            m.tangent_tanh = h.tangent_tanh;
            Model::Ae(m)
        }
    };
    let optimizer = match h.optimizer {
        None => None,
        Some(meta) => {
            if opt_tensors.len() != 2 * meta.steps.len() || meta.steps.len() != model.params().len() {
                return Err(Error::Data(format!("{}: optimizer state does not match model", path.display())));
            }
            let mut it = opt_tensors.into_iter();
            let states = meta
                .steps
                .iter()
                .map(|&t| OptimState {
                    m: it.next().expect("checked"),
                    v: it.next().expect("checked"),
                    t,
                })
                .collect();
            Some(Optimizer {
                config: meta.config,
                states,
            })
        }
    };
    Ok(Checkpoint {
        model,
        optimizer,
        seed: h.seed,
        extra: h.extra,
    })
}

fn take4(v: Vec<Tensor>) -> [Tensor; 4] {
    v.try_into().expect("four model tensors")
}
