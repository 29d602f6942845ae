//! Hyperbolic autoencoders for top-N recommendation on implicit feedback.
//!
//! The crate is organized bottom-up:
//!
//! - [`geometry`]: Poincaré ball and Lorentz model kernels.
//! - [`graddiff`]: a small reverse-mode gradient tape over whole arrays.
//! - [`optim`]: Adam and Riemannian Adam.
//! - [`models`]: Euclidean/hyperbolic autoencoders, the hyperbolic VAE and PureSVD.
//! - [`curvature`]: curvature estimation from δ-hyperbolicity of SVD embeddings.
//! - [`recdata`]: interaction loading and evaluation splits.
//! - [`eval`]: ranking metrics and the two evaluation protocols.

pub mod curvature;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod graddiff;
pub mod models;
pub mod optim;
pub mod recdata;

pub use error::{Error, ErrorKind, Result};
pub use geometry::{BallPoint, Curvature, HyperboloidPoint, TangentVector};
