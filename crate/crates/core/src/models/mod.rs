//! Model families: the Euclidean and hyperbolic autoencoders, the Lorentz
//! H-VAE and PureSVD, plus losses, the training epoch and checkpoints.

mod ae;
mod checkpoint;
mod hvae;
mod loss;
mod model;
mod params;
mod puresvd;
mod wrapped;

pub use ae::{euclid_ae_forward, hae_forward, hyp_linear, AeModel, BiasMode, B_DEC, B_ENC, W_DEC, W_ENC};
pub use hvae::{hvae_forward, HvaeModel, HvaeNodes};
pub use loss::{loss_bce, loss_elbo};
pub use params::{ParamTensor, Space};
pub use wrapped::{wrapped_log_density, WrappedNormal};
pub use model::{gaussian_noise, train_epoch, EpochOptions, Family, Model};
pub use puresvd::{puresvd_scores, PureSvd};
pub use checkpoint::{
    load_checkpoint, read_checkpoint_header, save_checkpoint, Checkpoint, CheckpointHeader, OptimizerMeta, TensorEntry,
};
