use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::InteractionMatrix;
use crate::error::{Error, Result};

/// One leave-one-out evaluation case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeakCase {
    pub user: usize,
    pub item: usize,
    pub negatives: Vec<usize>,
}

/// Leave-latest-out split with sampled negatives.
///
/// `train` is the fitting matrix with every held-out item removed. Test
/// cases are scored from the train row plus the user's validation item, so
/// the validation item is only withheld while tuning.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakSplit {
    pub train: InteractionMatrix,
    pub test: Vec<WeakCase>,
    pub validation: Vec<WeakCase>,
    pub n_negatives: usize,
    pub seed: u64,
    /// Users without a test case (fewer than two items).
    pub dropped_users: usize,
    /// Cases that received fewer than `n_negatives` negatives.
    pub shortfalls: usize,
}

impl WeakSplit {
    fn validation_item(&self, user: usize) -> Option<usize> {
        self.validation
            .binary_search_by_key(&user, |c| c.user)
            .ok()
            .map(|k| self.validation[k].item)
    }

    /// Scoring input of a test case.
    pub fn test_input(&self, user: usize) -> Vec<usize> {
        let mut row = self.train.row(user).to_vec();
        if let Some(v) = self.validation_item(user) {
            let pos = row.binary_search(&v).unwrap_err();
            row.insert(pos, v);
        }
        row
    }

    /// Scoring input of a validation case.
    pub fn validation_input(&self, user: usize) -> &[usize] {
        self.train.row(user)
    }

    /// Exhaustive leakage and disjointness checks.
    pub fn check(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Data(msg));
        for (cases, name) in [(&self.test, "test"), (&self.validation, "validation")] {
            if cases.windows(2).any(|w| w[0].user >= w[1].user) {
                return fail(format!("{name} cases not sorted by user"));
            }
            for c in cases.iter() {
                if c.user >= self.train.n_users() || c.item >= self.train.n_items() {
                    return fail(format!("{name} case out of range"));
                }
                let input = if name == "test" {
                    self.test_input(c.user)
                } else {
                    self.train.row(c.user).to_vec()
                };
                if input.binary_search(&c.item).is_ok() {
                    return fail(format!("{name} item of user {} leaks into its input", c.user));
                }
                let mut negs = c.negatives.clone();
                negs.sort_unstable();
                if negs.windows(2).any(|w| w[0] == w[1]) {
                    return fail(format!("duplicate negatives for user {}", c.user));
                }
                let held = [Some(c.item), self.validation_item(c.user), self.test_item(c.user)];
                if negs.iter().any(|&n| {
                    n >= self.train.n_items() || self.train.contains(c.user, n) || held.contains(&Some(n))
                }) {
                    return fail(format!("negative of user {} was interacted with", c.user));
                }
            }
        }
        Ok(())
    }

    fn test_item(&self, user: usize) -> Option<usize> {
        self.test
            .binary_search_by_key(&user, |c| c.user)
            .ok()
            .map(|k| self.test[k].item)
    }
}

/// Removes one item: the latest by timestamp (ties drawn uniformly), or a
/// uniform draw without timestamps.
fn pick_latest(items: &[usize], ts: Option<&[i64]>, rng: &mut impl Rng) -> usize {
    let cands: Vec<usize> = match ts {
        Some(ts) => {
            let max = *ts.iter().max().expect("nonempty row");
            (0..items.len()).filter(|&k| ts[k] == max).collect()
        }
        None => (0..items.len()).collect(),
    };
    cands[rng.random_range(0..cands.len())]
}

fn sample_negatives(row: &[usize], n_items: usize, n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let avail: Vec<usize> = (0..n_items).filter(|i| row.binary_search(i).is_err()).collect();
    let k = n.min(avail.len());
    index::sample(rng, avail.len(), k)
        .into_iter()
        .map(|j| avail[j])
        .collect()
}

/// Leave-latest-out split without a validation case.
pub fn split_weak(m: &InteractionMatrix, n_negatives: usize, seed: u64) -> Result<WeakSplit> {
    build_weak(m, n_negatives, seed, false)
}

/// Leave-latest-out split that additionally withholds the next-latest item
/// of users with at least three items as a validation case.
pub fn split_weak_with_validation(m: &InteractionMatrix, n_negatives: usize, seed: u64) -> Result<WeakSplit> {
    build_weak(m, n_negatives, seed, true)
}

fn build_weak(m: &InteractionMatrix, n_negatives: usize, seed: u64, with_validation: bool) -> Result<WeakSplit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<(usize, Option<i64>)>> = Vec::with_capacity(m.n_users());
    let (mut test, mut validation) = (Vec::new(), Vec::new());
    let (mut dropped, mut shortfalls) = (0, 0);
    for u in 0..m.n_users() {
        let full = m.row(u);
        let mut items = full.to_vec();
        let mut ts = m.row_timestamps(u).map(|t| t.to_vec());
        let mut held = Vec::new();
        let wanted = if with_validation { 2 } else { 1 };
        while held.len() < wanted && items.len() >= 2 {
            let k = pick_latest(&items, ts.as_deref(), &mut rng);
            held.push(items.remove(k));
            if let Some(t) = ts.as_mut() {
                t.remove(k);
            }
        }
        if held.is_empty() {
            dropped += 1;
        }
        for (slot, &item) in held.iter().enumerate() {
            let negatives = sample_negatives(full, m.n_items(), n_negatives, &mut rng);
            if negatives.len() < n_negatives {
                shortfalls += 1;
            }
            let case = WeakCase { user: u, item, negatives };
            if slot == 0 {
                test.push(case);
            } else {
                validation.push(case);
            }
        }
        rows.push(
            items
                .iter()
                .enumerate()
                .map(|(k, &i)| (i, ts.as_ref().map(|t| t[k])))
                .collect(),
        );
    }
    if test.is_empty() {
        return Err(Error::Data("no user has two or more items".into()));
    }
    let train = InteractionMatrix::build(
        m.n_items(),
        rows,
        Some(m.user_ids().to_vec()),
        Some(m.item_ids().to_vec()),
        m.has_timestamps(),
    )?;
    let split = WeakSplit {
        train,
        test,
        validation,
        n_negatives,
        seed,
        dropped_users: dropped,
        shortfalls,
    };
    split.check()?;
    Ok(split)
}

/// Evaluation users with their fold-in and held-out items. `users` holds
/// indices into the source matrix.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalGroup {
    pub users: Vec<usize>,
    pub fold_in: Vec<Vec<usize>>,
    pub held_out: Vec<Vec<usize>>,
}

impl EvalGroup {
    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Val,
    Test,
}

/// Held-out-user split with fold-in for the evaluation users.
#[derive(Debug, Clone, PartialEq)]
pub struct StrongSplit {
    /// Rows of the training users only.
    pub train: InteractionMatrix,
    /// Source indices of the rows of `train`.
    pub train_users: Vec<usize>,
    pub validation: EvalGroup,
    pub test: EvalGroup,
    pub foldin_ratio: f64,
    pub seed: u64,
    pub n_source_users: usize,
}

impl StrongSplit {
    pub fn group(&self, g: Group) -> &EvalGroup {
        match g {
            Group::Val => &self.validation,
            Group::Test => &self.test,
        }
    }

    pub fn check(&self) -> Result<()> {
        let mut seen = vec![false; self.n_source_users];
        let groups = [&self.train_users, &self.validation.users, &self.test.users];
        for &u in groups.into_iter().flatten() {
            if u >= seen.len() || std::mem::replace(&mut seen[u], true) {
                return Err(Error::Data(format!("user {u} appears in more than one group")));
            }
        }
        for g in [&self.validation, &self.test] {
            for (f, h) in g.fold_in.iter().zip(&g.held_out) {
                if h.is_empty() || f.is_empty() || f.iter().any(|i| h.binary_search(i).is_ok()) {
                    return Err(Error::Data("fold-in and held-out overlap or are empty".into()));
                }
            }
        }
        Ok(())
    }
}

/// 10% of users, at least 1, capped at 10000.
pub fn default_group_size(n_users: usize) -> usize {
    (n_users / 10).clamp(1, 10_000)
}

/// Fold-in size: `⌊ratio·n⌋` clamped to `1..=n-1`.
pub fn fold_in_size(n: usize, ratio: f64) -> usize {
    ((ratio * n as f64).floor() as usize).clamp(1, n - 1)
}

pub fn split_strong(
    m: &InteractionMatrix,
    n_val_users: usize,
    n_test_users: usize,
    foldin_ratio: f64,
    seed: u64,
) -> Result<StrongSplit> {
    let n = m.n_users();
    if n_val_users + n_test_users >= n {
        return Err(Error::InvalidArgument(format!(
            "{n_val_users} validation + {n_test_users} test users leave no training users out of {n}"
        )));
    }
    if !(foldin_ratio > 0.0 && foldin_ratio < 1.0) {
        return Err(Error::InvalidArgument("fold-in ratio must lie in (0, 1)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let eligible: Vec<usize> = order.iter().copied().filter(|&u| m.row(u).len() >= 2).collect();
    if eligible.len() < n_val_users + n_test_users {
        return Err(Error::Data(format!(
            "only {} users have two or more items",
            eligible.len()
        )));
    }
    let mut test_users = eligible[..n_test_users].to_vec();
    let mut val_users = eligible[n_test_users..n_test_users + n_val_users].to_vec();
    test_users.sort_unstable();
    val_users.sort_unstable();
    let mut held = vec![false; n];
    test_users.iter().chain(&val_users).for_each(|&u| held[u] = true);
    let train_users: Vec<usize> = (0..n).filter(|&u| !held[u]).collect();

    let mut make_group = |users: Vec<usize>| {
        let mut g = EvalGroup::default();
        for &u in &users {
            let mut items = m.row(u).to_vec();
            items.shuffle(&mut rng);
            let k = fold_in_size(items.len(), foldin_ratio);
            let mut f = items[..k].to_vec();
            let mut h = items[k..].to_vec();
            f.sort_unstable();
            h.sort_unstable();
            g.fold_in.push(f);
            g.held_out.push(h);
        }
        g.users = users;
        g
    };
    let validation = make_group(val_users);
    let test = make_group(test_users);
    let split = StrongSplit {
        train: m.select_users(&train_users),
        train_users,
        validation,
        test,
        foldin_ratio,
        seed,
        n_source_users: n,
    };
    split.check()?;
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latest_item_is_held_out() {
        let m = InteractionMatrix::from_timed_rows(6, vec![vec![(0, 1), (3, 2), (5, 3)], vec![(1, 1)]]).unwrap();
        let s = split_weak(&m, 2, 0).unwrap();
        assert_eq!(s.test.len(), 1);
        assert_eq!(s.test[0].item, 5);
        assert_eq!(s.train.row(0), &[0, 3]);
        assert_eq!(s.dropped_users, 1);
        assert!(s.test[0].negatives.iter().all(|n| [1, 2, 4].contains(n)));
    }

    #[test]
    fn negatives_exhaust_small_catalog() {
        let m = InteractionMatrix::from_rows(5, vec![vec![0, 1, 2]]).unwrap();
        let s = split_weak(&m, 100, 3).unwrap();
        assert_eq!(s.test[0].negatives.len(), 2);
        assert_eq!(s.shortfalls, 1);
        let m = InteractionMatrix::from_rows(4, vec![vec![0, 1, 2]]).unwrap();
        assert_eq!(split_weak(&m, 100, 3).unwrap().test[0].negatives, vec![3]);
    }

    #[test]
    fn validation_case_is_next_latest() {
        let m = InteractionMatrix::from_timed_rows(8, vec![vec![(0, 1), (3, 2), (5, 3), (7, 4)], vec![(1, 1), (2, 2)]])
            .unwrap();
        let s = split_weak_with_validation(&m, 3, 1).unwrap();
        assert_eq!((s.test[0].item, s.validation[0].item), (7, 5));
        assert_eq!(s.train.row(0), &[0, 3]);
        assert_eq!(s.test_input(0), vec![0, 3, 5]);
        assert_eq!(s.validation.len(), 1);
        assert_eq!(s.test_input(1), vec![1]);
        assert!(s.validation[0].negatives.iter().all(|&n| ![0, 3, 5, 7].contains(&n)));
    }

    #[test]
    fn strong_fold_in_sizes() {
        assert_eq!(fold_in_size(5, 0.8), 4);
        assert_eq!(fold_in_size(2, 0.8), 1);
        assert_eq!(fold_in_size(10, 0.05), 1);
        let rows = (0..20).map(|u| (0..(u % 6 + 1)).collect()).collect();
        let m = InteractionMatrix::from_rows(6, rows).unwrap();
        let s = split_strong(&m, 3, 4, 0.8, 7).unwrap();
        assert_eq!((s.validation.len(), s.test.len(), s.train.n_users()), (3, 4, 13));
        for g in [&s.validation, &s.test] {
            for (k, &u) in g.users.iter().enumerate() {
                let mut all = [g.fold_in[k].clone(), g.held_out[k].clone()].concat();
                all.sort_unstable();
                assert_eq!(all, m.row(u));
            }
        }
        assert!(split_strong(&m, 10, 10, 0.8, 7).is_err());
    }

    #[test]
    fn splits_are_deterministic() {
        let rows = (0..30).map(|u| (0..12).filter(|i| (i * 7 + u) % 3 != 0).collect()).collect();
        let m = InteractionMatrix::from_rows(12, rows).unwrap();
        assert_eq!(split_weak(&m, 4, 9).unwrap(), split_weak(&m, 4, 9).unwrap());
        assert_ne!(split_weak(&m, 4, 9).unwrap(), split_weak(&m, 4, 10).unwrap());
        assert_eq!(split_strong(&m, 3, 3, 0.8, 2).unwrap(), split_strong(&m, 3, 3, 0.8, 2).unwrap());
    }
}
