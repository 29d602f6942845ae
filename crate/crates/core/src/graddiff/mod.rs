//! Reverse-mode differentiation over whole dense arrays.
//!
//! A [`Tape`] records each operation together with its forward value;
//! [`Tape::backward`] walks the records in reverse and accumulates
//! gradients additively over fan-out. The op set is closed: dense and sparse
//! matrix products, broadcasting elementwise arithmetic, a handful of scalar
//! functions (including the removable-singularity ratios used by the
//! hyperbolic kernels), row reductions, norm clipping and binary
//! cross-entropy.

mod check;
pub mod kernels;
mod tape;
mod tensor;

pub use check::{gradcheck, GradcheckReport, InputCheck};
pub use tape::{Gradients, NodeId, Tape, UnaryFn, LOGIT_CLAMP};
pub use tensor::{SparseRows, Tensor};

pub(crate) use tape::bce_term;
