//! Synthetic interaction data with a two-level taste hierarchy.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Synth {
    pub users: usize,
    pub items: usize,
    pub genres: usize,
    pub subgenres: usize,
    pub items_per_user: (usize, usize),
    pub seed: u64,
}

impl Default for Synth {
    fn default() -> Self {
        Self {
            users: 300,
            items: 120,
            genres: 4,
            subgenres: 3,
            items_per_user: (6, 20),
            seed: 7,
        }
    }
}

impl Synth {
    /// `user::item::rating::timestamp` lines. Each user favours one
    /// subgenre, then its genre, then globally popular items; item
    /// popularity within a group is Zipf-like.
    pub fn dat(&self) -> String {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let groups = self.genres * self.subgenres;
        let group_of = |i: usize| i % groups;
        let weight = |i: usize| 1.0 / (1.0 + (i / groups) as f64);
        let mut out = String::new();
        for u in 0..self.users {
            let g = rng.random_range(0..groups);
            let n = rng.random_range(self.items_per_user.0..=self.items_per_user.1);
            let mut chosen = Vec::new();
            let mut tries = 0;
            while chosen.len() < n && tries < 100 * n {
                tries += 1;
                let i = rng.random_range(0..self.items);
                let affinity = if group_of(i) == g {
                    1.0
                } else if group_of(i) / self.subgenres == g / self.subgenres {
                    0.25
                } else {
                    0.03
                };
                if !chosen.contains(&i) && rng.random::<f64>() < affinity * weight(i) {
                    chosen.push(i);
                }
            }
            for (t, i) in chosen.iter().enumerate() {
                let rating = rng.random_range(1..=5);
                out.push_str(&format!("{}::{}::{rating}::{}\n", u + 1, i + 1, 1000 + t));
            }
        }
        out
    }

    pub fn write(&self, dir: &Path) -> PathBuf {
        let p = dir.join("ratings.dat");
        std::fs::write(&p, self.dat()).unwrap();
        p
    }
}

pub fn hyprec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyprec"))
        .args(args)
        .env_remove("HYPREC_SEED")
        .output()
        .expect("binary runs")
}

pub fn ok(args: &[&str]) -> Output {
    let o = hyprec(args);
    assert!(
        o.status.success(),
        "hyprec {args:?} failed ({:?}):\n{}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
    o
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
