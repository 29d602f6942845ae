//! Fixtures shared by the benchmarks.

use hyprec::graddiff::Tensor;
use hyprec::recdata::InteractionMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform entries in `[-scale, scale)`.
pub fn random_tensor(rows: usize, cols: usize, scale: f64, seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect();
    Tensor::from_vec(rows, cols, data).expect("shape")
}

/// Implicit-feedback matrix with Zipf-like item popularity and roughly
/// `per_user` interactions per row.
pub fn zipf_matrix(users: usize, items: usize, per_user: usize, seed: u64) -> InteractionMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..users)
        .map(|_| {
            let mut row: Vec<usize> = (0..per_user)
                .map(|_| {
                    let u: f64 = rng.random();
                    ((items as f64).powf(u) as usize - 1).min(items - 1)
                })
                .collect();
            row.sort_unstable();
            row.dedup();
            row
        })
        .collect();
    InteractionMatrix::from_rows(items, rows).expect("valid rows")
}

/// Borrowed row slices.
pub fn row_refs(rows: &[Vec<usize>]) -> Vec<&[usize]> {
    rows.iter().map(|r| r.as_slice()).collect()
}
