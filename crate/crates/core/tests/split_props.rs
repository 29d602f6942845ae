//! Split invariants, determinism and on-disk round trips.

use hyprec::recdata::{
    fold_in_size, load_split, save_strong, save_weak, split_strong, split_weak, split_weak_with_validation,
    Group, InteractionMatrix, SplitArtifact,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn matrix(seed: u64, users: usize, items: usize, timed: bool) -> InteractionMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<usize>> = (0..users)
        .map(|_| {
            let k = rng.random_range(1..=items.min(12));
            rand::seq::index::sample(&mut rng, items, k).into_vec()
        })
        .collect();
    if timed {
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().map(|i| (i, rng.random_range(0..5i64))).collect())
            .collect();
        InteractionMatrix::from_timed_rows(items, rows).unwrap()
    } else {
        InteractionMatrix::from_rows(items, rows).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn weak_split_never_leaks(seed in any::<u64>(), timed in any::<bool>(), items in 8usize..40) {
        let m = matrix(seed, 30, items, timed);
        let s = split_weak_with_validation(&m, 5, seed).unwrap();
        for case in s.test.iter().chain(&s.validation) {
            let full = m.row(case.user);
            prop_assert!(full.contains(&case.item));
            prop_assert!(!s.train.contains(case.user, case.item));
            prop_assert!(case.negatives.iter().all(|n| full.binary_search(n).is_err()));
            let mut sorted = case.negatives.clone();
            sorted.sort_unstable();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), case.negatives.len());
            if let (true, Some(ts)) = (timed, m.row_timestamps(case.user)) {
                // the test item is among the latest
                let pos = full.binary_search(&case.item).unwrap();
                if s.test.contains(case) {
                    prop_assert_eq!(ts[pos], *ts.iter().max().unwrap());
                }
            }
        }
        // held-out items plus training rows partition every full row
        for u in 0..m.n_users() {
            let mut rebuilt = s.train.row(u).to_vec();
            rebuilt.extend(s.test.iter().chain(&s.validation).filter(|c| c.user == u).map(|c| c.item));
            rebuilt.sort_unstable();
            prop_assert_eq!(rebuilt.as_slice(), m.row(u));
        }
        prop_assert_eq!(&s, &split_weak_with_validation(&m, 5, seed).unwrap());
    }

    #[test]
    fn strong_split_partitions_users_and_rows(seed in any::<u64>(), ratio in 0.1f64..0.9) {
        let m = matrix(seed, 60, 30, false);
        let s = split_strong(&m, 6, 6, ratio, seed).unwrap();
        s.check().unwrap();
        let mut all: Vec<usize> = s.train_users.iter().chain(&s.validation.users).chain(&s.test.users).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..60).collect::<Vec<_>>());
        for g in [Group::Val, Group::Test] {
            let g = s.group(g);
            prop_assert_eq!(g.len(), 6);
            for ((&u, f), h) in g.users.iter().zip(&g.fold_in).zip(&g.held_out) {
                let mut both = f.clone();
                both.extend(h);
                both.sort_unstable();
                prop_assert_eq!(both.as_slice(), m.row(u));
                prop_assert_eq!(f.len(), fold_in_size(m.row(u).len(), ratio));
            }
        }
        for (r, &u) in s.train_users.iter().enumerate() {
            prop_assert_eq!(s.train.row(r), m.row(u));
        }
        prop_assert_eq!(&s, &split_strong(&m, 6, 6, ratio, seed).unwrap());
    }

    #[test]
    fn splits_round_trip_through_disk(seed in any::<u64>()) {
        let m = matrix(seed, 50, 25, seed % 2 == 0);
        let prov = serde_json::json!({ "seed": seed });
        let dir = tempfile::tempdir().unwrap();
        let weak = split_weak_with_validation(&m, 10, seed).unwrap();
        save_weak(dir.path(), &weak, &prov).unwrap();
        let (back, p) = load_split(dir.path()).unwrap();
        prop_assert_eq!(p, prov.clone());
        let SplitArtifact::Weak(back) = back else { panic!("expected a weak split") };
        prop_assert_eq!(&back.test, &weak.test);
        prop_assert_eq!(&back.validation, &weak.validation);
        prop_assert_eq!(back.train.indptr(), weak.train.indptr());
        prop_assert_eq!(back.train.indices(), weak.train.indices());

        let dir = tempfile::tempdir().unwrap();
        let strong = split_strong(&m, 5, 5, 0.8, seed).unwrap();
        save_strong(dir.path(), &strong, m.user_ids(), &prov).unwrap();
        let (back, _) = load_split(dir.path()).unwrap();
        let SplitArtifact::Strong(back) = back else { panic!("expected a strong split") };
        prop_assert_eq!(&back.validation, &strong.validation);
        prop_assert_eq!(&back.test, &strong.test);
        prop_assert_eq!(&back.train_users, &strong.train_users);
        prop_assert_eq!(back.train.indices(), strong.train.indices());
    }
}

#[test]
fn same_seed_gives_byte_identical_files() {
    let m = matrix(3, 80, 40, true);
    let prov = serde_json::json!({});
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    save_weak(a.path(), &split_weak(&m, 20, 9).unwrap(), &prov).unwrap();
    save_weak(b.path(), &split_weak(&m, 20, 9).unwrap(), &prov).unwrap();
    for f in ["train.csr", "split.json", "negatives.tsv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn exhausted_catalog_records_shortfalls() {
    let m = InteractionMatrix::from_rows(5, vec![vec![0, 1, 2], vec![1, 3]]).unwrap();
    let s = split_weak(&m, 100, 1).unwrap();
    assert_eq!(s.shortfalls, 2);
    assert_eq!(s.test[0].negatives.len(), 2);
    assert_eq!(s.test[1].negatives.len(), 3);
}
