use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graddiff::{SparseRows, Tensor};

/// Sparse binary user × item matrix in compressed-row form.
///
/// Column indices are sorted and unique within each row. Optional
/// per-interaction timestamps run parallel to the column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    n_users: usize,
    n_items: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    timestamps: Option<Vec<i64>>,
    user_ids: Vec<String>,
    item_ids: Vec<String>,
}

impl InteractionMatrix {
    /// Builds a matrix from per-user item lists; duplicates are collapsed.
    pub fn from_rows(n_items: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().map(|i| (i, None)).collect())
            .collect();
        Self::build(n_items, rows, None, None, false)
    }

    /// Builds from `(item, timestamp)` lists; for duplicated items the
    /// latest timestamp is kept.
    pub fn from_timed_rows(n_items: usize, rows: Vec<Vec<(usize, i64)>>) -> Result<Self> {
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().map(|(i, t)| (i, Some(t))).collect())
            .collect();
        Self::build(n_items, rows, None, None, true)
    }

    pub(crate) fn build(
        n_items: usize,
        rows: Vec<Vec<(usize, Option<i64>)>>,
        user_ids: Option<Vec<String>>,
        item_ids: Option<Vec<String>>,
        timed: bool,
    ) -> Result<Self> {
        let n_users = rows.len();
        let mut indptr = Vec::with_capacity(n_users + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        let mut times = Vec::new();
        for mut row in rows {
            row.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
            row.dedup_by_key(|e| e.0);
            for (i, t) in row {
                if i >= n_items {
                    return Err(Error::Data(format!(
                        "item index {i} out of range for {n_items} items"
                    )));
                }
                indices.push(i);
                times.push(t.unwrap_or(0));
            }
            indptr.push(indices.len());
        }
        let user_ids =
            user_ids.unwrap_or_else(|| (0..n_users).map(|u| u.to_string()).collect());
        let item_ids =
            item_ids.unwrap_or_else(|| (0..n_items).map(|i| i.to_string()).collect());
        if user_ids.len() != n_users || item_ids.len() != n_items {
            return Err(Error::Data("id map sizes disagree with the matrix".into()));
        }
        Ok(Self {
            n_users,
            n_items,
            indptr,
            indices,
            timestamps: timed.then_some(times),
            user_ids,
            item_ids,
        })
    }

    /// Reassembles a matrix from raw CSR arrays, validating them.
    pub fn from_csr(
        n_users: usize,
        n_items: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        user_ids: Vec<String>,
        item_ids: Vec<String>,
    ) -> Result<Self> {
        if indptr.len() != n_users + 1
            || indptr[0] != 0
            || *indptr.last().unwrap() != indices.len()
            || indptr.windows(2).any(|w| w[0] > w[1])
        {
            return Err(Error::Data("invalid row pointer array".into()));
        }
        for u in 0..n_users {
            let row = &indices[indptr[u]..indptr[u + 1]];
            if row.windows(2).any(|w| w[0] >= w[1]) || row.iter().any(|&i| i >= n_items) {
                return Err(Error::Data(format!("row {u} is unsorted or out of range")));
            }
        }
        if user_ids.len() != n_users || item_ids.len() != n_items {
            return Err(Error::Data("id map sizes disagree with the matrix".into()));
        }
        Ok(Self {
            n_users,
            n_items,
            indptr,
            indices,
            timestamps: None,
            user_ids,
            item_ids,
        })
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn row(&self, u: usize) -> &[usize] {
        &self.indices[self.indptr[u]..self.indptr[u + 1]]
    }

    pub fn row_timestamps(&self, u: usize) -> Option<&[i64]> {
        self.timestamps
            .as_ref()
            .map(|t| &t[self.indptr[u]..self.indptr[u + 1]])
    }

    pub fn has_timestamps(&self) -> bool {
        self.timestamps.is_some()
    }

    pub fn contains(&self, u: usize, i: usize) -> bool {
        self.row(u).binary_search(&i).is_ok()
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn rows(&self) -> Vec<Vec<usize>> {
        (0..self.n_users).map(|u| self.row(u).to_vec()).collect()
    }

    /// Number of interactions per item.
    pub fn item_popularity(&self) -> Vec<usize> {
        let mut pop = vec![0; self.n_items];
        for &i in &self.indices {
            pop[i] += 1;
        }
        pop
    }

    /// Rows restricted to `users`, keeping the item space; ids follow.
    pub fn select_users(&self, users: &[usize]) -> InteractionMatrix {
        let rows: Vec<Vec<(usize, Option<i64>)>> = users
            .iter()
            .map(|&u| {
                let ts = self.row_timestamps(u);
                self.row(u)
                    .iter()
                    .enumerate()
                    .map(|(k, &i)| (i, ts.map(|t| t[k])))
                    .collect()
            })
            .collect();
        let ids = users.iter().map(|&u| self.user_ids[u].clone()).collect();
        Self::build(
            self.n_items,
            rows,
            Some(ids),
            Some(self.item_ids.clone()),
            self.has_timestamps(),
        )
        .expect("sub-selection of a valid matrix")
    }

    /// `A · M` for a dense `M` (n_items × k), with `A` binary.
    pub fn matmul_dense(&self, m: &Tensor) -> Tensor {
        let k = m.cols();
        let mut out = Tensor::zeros(self.n_users, k);
        for u in 0..self.n_users {
            let orow = out.row_mut(u);
            for &i in self.row(u) {
                for (o, x) in orow.iter_mut().zip(m.row(i)) {
                    *o += x;
                }
            }
        }
        out
    }

    /// `Aᵀ · M` for a dense `M` (n_users × k).
    pub fn transpose_matmul_dense(&self, m: &Tensor) -> Tensor {
        let k = m.cols();
        let mut out = Tensor::zeros(self.n_items, k);
        for u in 0..self.n_users {
            let mrow = m.row(u);
            for &i in self.row(u) {
                for (o, x) in out.row_mut(i).iter_mut().zip(mrow) {
                    *o += x;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Tensor {
        let mut t = Tensor::zeros(self.n_users, self.n_items);
        for u in 0..self.n_users {
            for &i in self.row(u) {
                t.set(u, i, 1.0);
            }
        }
        t
    }
}

/// Stacks item lists into an L2-row-normalized sparse batch, each row
/// multiplied by `scale`. Rows must be nonempty.
pub fn normalized_batch(rows: &[&[usize]], n_items: usize, scale: f64) -> Result<Arc<SparseRows>> {
    let mut indptr = Vec::with_capacity(rows.len() + 1);
    indptr.push(0);
    let mut indices = Vec::new();
    let mut values = Vec::new();
    for r in rows {
        if r.is_empty() {
            return Err(Error::InvalidArgument("empty input row".into()));
        }
        let v = scale / (r.len() as f64).sqrt();
        indices.extend_from_slice(r);
        values.extend(std::iter::repeat_n(v, r.len()));
        indptr.push(indices.len());
    }
    Ok(Arc::new(SparseRows {
        rows: rows.len(),
        cols: n_items,
        indptr,
        indices,
        values,
    }))
}

/// Stacks item lists into a sparse 0/1 batch.
pub fn binary_batch(rows: &[&[usize]], n_items: usize) -> Arc<SparseRows> {
    let mut indptr = vec![0];
    let mut indices = Vec::new();
    for r in rows {
        indices.extend_from_slice(r);
        indptr.push(indices.len());
    }
    let values = vec![1.0; indices.len()];
    Arc::new(SparseRows {
        rows: rows.len(),
        cols: n_items,
        indptr,
        indices,
        values,
    })
}

/// Dense 0/1 target batch.
pub fn target_batch(rows: &[&[usize]], n_items: usize) -> Tensor {
    let mut t = Tensor::zeros(rows.len(), n_items);
    for (u, r) in rows.iter().enumerate() {
        for &i in r.iter() {
            t.set(u, i, 1.0);
        }
    }
    t
}
