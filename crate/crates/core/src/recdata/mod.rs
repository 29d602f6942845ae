//! Interaction data: loading, the sparse user × item matrix, and the two
//! evaluation splits with their on-disk artifacts.

mod io;
mod load;
mod matrix;
mod split;

pub use io::{
    load_split, read_csr, save_strong, save_weak, write_csr, SplitArtifact, META_FILE, NEGATIVES_FILE,
    TRAIN_FILE, VAL_NEGATIVES_FILE,
};
pub use load::{load_interactions, parse_interactions, Format, LoadOptions, LoadStats};
pub use matrix::{binary_batch, normalized_batch, target_batch, InteractionMatrix};
pub use split::{
    default_group_size, fold_in_size, split_strong, split_weak, split_weak_with_validation, EvalGroup, Group,
    StrongSplit, WeakCase, WeakSplit,
};
