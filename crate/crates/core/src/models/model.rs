use std::collections::HashMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ae::{AeModel, BiasMode};
use super::hvae::HvaeModel;
use super::params::ParamTensor;
use super::puresvd::PureSvd;
use crate::error::{Error, Result};
use crate::geometry::Curvature;
use crate::graddiff::{NodeId, Tape, Tensor};
use crate::optim::Optimizer;
use crate::recdata::target_batch;

/// Model families selectable from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Ae,
    HaeH,
    HaeM,
    Hvae,
    Puresvd,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::Ae, Family::HaeH, Family::HaeM, Family::Hvae, Family::Puresvd];

    pub fn name(self) -> &'static str {
        match self {
            Family::Ae => "ae",
            Family::HaeH => "hae-h",
            Family::HaeM => "hae-m",
            Family::Hvae => "hvae",
            Family::Puresvd => "puresvd",
        }
    }

    pub fn is_hyperbolic(self) -> bool {
        matches!(self, Family::HaeH | Family::HaeM | Family::Hvae)
    }

    pub fn is_trainable(self) -> bool {
        self != Family::Puresvd
    }

    pub fn bias_mode(self) -> Option<BiasMode> {
        match self {
            Family::HaeH => Some(BiasMode::Hyp),
            Family::HaeM => Some(BiasMode::Moebius),
            _ => None,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model family '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Ae(AeModel),
    Hvae(HvaeModel),
    PureSvd(PureSvd),
}

impl Model {
    /// Freshly initialized trainable model.
    pub fn init(family: Family, curvature: Curvature, n_items: usize, dim: usize, rng: &mut impl Rng) -> Result<Self> {
        match family {
            Family::Ae => Ok(Model::Ae(AeModel::new(None, Curvature::euclidean(), n_items, dim, rng)?)),
            Family::HaeH | Family::HaeM => Ok(Model::Ae(AeModel::new(family.bias_mode(), curvature, n_items, dim, rng)?)),
            Family::Hvae => Ok(Model::Hvae(HvaeModel::new(curvature, n_items, dim, rng)?)),
            Family::Puresvd => Err(Error::InvalidArgument("PureSVD is fitted, not initialized".into())),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Model::Ae(m) => match m.hyperbolic {
                None => Family::Ae,
                Some(BiasMode::Hyp) => Family::HaeH,
                Some(BiasMode::Moebius) => Family::HaeM,
            },
            Model::Hvae(_) => Family::Hvae,
            Model::PureSvd(_) => Family::Puresvd,
        }
    }

    pub fn curvature(&self) -> Curvature {
        match self {
            Model::Ae(m) => m.curvature,
            Model::Hvae(m) => m.curvature,
            Model::PureSvd(_) => Curvature::euclidean(),
        }
    }

    pub fn n_items(&self) -> usize {
        match self {
            Model::Ae(m) => m.n_items,
            Model::Hvae(m) => m.n_items,
            Model::PureSvd(m) => m.n_items(),
        }
    }

    /// Latent dimension, or the rank for PureSVD.
    pub fn dim(&self) -> usize {
        match self {
            Model::Ae(m) => m.dim,
            Model::Hvae(m) => m.dim,
            Model::PureSvd(m) => m.rank(),
        }
    }

    /// Trainable parameters; empty for PureSVD.
    pub fn params(&self) -> &[ParamTensor] {
        match self {
            Model::Ae(m) => m.params(),
            Model::Hvae(m) => m.params(),
            Model::PureSvd(_) => &[],
        }
    }

    pub fn params_mut(&mut self) -> &mut [ParamTensor] {
        match self {
            Model::Ae(m) => m.params_mut(),
            Model::Hvae(m) => m.params_mut(),
            Model::PureSvd(_) => &mut [],
        }
    }

    /// Item scores (`rows × items`) for a batch of input rows.
    pub fn score(&self, rows: &[&[usize]]) -> Result<Tensor> {
        match self {
            Model::Ae(m) => m.forward(rows),
            Model::Hvae(m) => m.forward(rows),
            Model::PureSvd(m) => m.score(rows),
        }
    }

    /// Builds the mean batch loss on `tape` with parameters registered as
    /// named inputs. `noise` (`rows × d`) is required by the H-VAE.
    pub fn loss_on_tape(&self, tape: &mut Tape, rows: &[&[usize]], noise: Option<&Tensor>, beta: f64) -> Result<NodeId> {
        let p: Vec<NodeId> = self.params().iter().map(|t| tape.param(&t.name, t.values.clone())).collect();
        let target = tape.constant(target_batch(rows, self.n_items()));
        let per_row = match self {
            Model::Ae(m) => {
                let l = m.logits_on_tape(tape, &p, m.input_batch(rows)?);
                tape.bce_with_logits(l, target)
            }
            Model::Hvae(m) => {
                let noise = noise.ok_or_else(|| Error::InvalidArgument("H-VAE loss needs noise".into()))?;
                if noise.shape() != (rows.len(), m.dim) {
                    return Err(Error::DimensionMismatch {
                        expected: rows.len() * m.dim,
                        got: noise.len(),
                    });
                }
                let nodes = m.nodes_on_tape(tape, &p, m.input_batch(rows)?, Some(noise));
                let bce = tape.bce_with_logits(nodes.logits, target);
                let kl = tape.scale(nodes.kl.expect("noise given"), beta / m.n_items as f64);
                tape.add(bce, kl)
            }
            Model::PureSvd(_) => return Err(Error::InvalidArgument("PureSVD has no training loss".into())),
        };
        Ok(tape.mean(per_row))
    }

    /// Loss value and named gradients for one batch.
    pub fn loss_and_grads(
        &self,
        rows: &[&[usize]],
        noise: Option<&Tensor>,
        beta: f64,
    ) -> Result<(f64, HashMap<String, Tensor>)> {
        let mut tape = Tape::new();
        let loss = self.loss_on_tape(&mut tape, rows, noise, beta)?;
        tape.check_finite()?;
        let value = tape.value(loss).item();
        Ok((value, tape.backward(loss)?.into_named()))
    }
}

/// Standard-normal noise block.
pub fn gaussian_noise(rng: &mut impl Rng, rows: usize, cols: usize) -> Tensor {
    let data = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
    Tensor::from_vec(rows, cols, data).expect("shape")
}

/// Per-epoch training knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochOptions {
    pub batch_size: usize,
    /// KL weight of the H-VAE objective.
    pub beta: f64,
}

impl Default for EpochOptions {
    fn default() -> Self {
        Self {
            batch_size: 256,
            beta: 1.0,
        }
    }
}

/// One pass over the nonempty `rows` in an order shuffled by `rng`.
/// Returns the user-weighted mean training loss.
pub fn train_epoch(
    model: &mut Model,
    opt: &mut Optimizer,
    rows: &[&[usize]],
    opts: &EpochOptions,
    rng: &mut impl Rng,
) -> Result<f64> {
    if opts.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be ≥ 1".into()));
    }
    let mut order: Vec<usize> = (0..rows.len()).filter(|&u| !rows[u].is_empty()).collect();
    if order.is_empty() {
        return Err(Error::Data("no nonempty training rows".into()));
    }
    order.shuffle(rng);
    let mut total = 0.0;
    for chunk in order.chunks(opts.batch_size) {
        let batch: Vec<&[usize]> = chunk.iter().map(|&u| rows[u]).collect();
        let noise = match model {
            Model::Hvae(m) => Some(gaussian_noise(rng, batch.len(), m.dim)),
            _ => None,
        };
        let (loss, grads) = model.loss_and_grads(&batch, noise.as_ref(), opts.beta)?;
        opt.step(model.params_mut(), &grads)?;
        total += loss * batch.len() as f64;
    }
    Ok(total / order.len() as f64)
}
