#![allow(dead_code)]

use latentnn::obsdata::ObservationMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random matrix with each cell observed with probability `p`, values in [-5, 5).
pub fn random_matrix(m: usize, n: usize, p: f64, seed: u64) -> ObservationMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for u in 0..m {
        for i in 0..n {
            if rng.random::<f64>() < p {
                entries.push((u, i, rng.random_range(-5.0..5.0)));
            }
        }
    }
    ObservationMatrix::new(m, n, entries).unwrap()
}

/// Dense mask and values, for brute-force oracles.
pub fn dense(obs: &ObservationMatrix) -> Vec<Vec<Option<f64>>> {
    let mut out = vec![vec![None; obs.ncols()]; obs.nrows()];
    for (u, i, v) in obs.entries() {
        out[u][i] = Some(v);
    }
    out
}

/// Pairwise form of the sample variance: `sum_{a != b} (d_a - d_b)^2 / (2 N (N - 1))`.
pub fn u_statistic(d: &[f64]) -> f64 {
    let n = d.len() as f64;
    let mut total = 0.0;
    for a in d {
        for b in d {
            total += (a - b) * (a - b);
        }
    }
    total / (2.0 * n * (n - 1.0))
}

pub fn arb_matrix(max_m: usize, max_n: usize) -> impl Strategy<Value = ObservationMatrix> {
    (1..=max_m, 1..=max_n, 0.1f64..1.0, any::<u64>()).prop_map(|(m, n, p, seed)| random_matrix(m, n, p, seed))
}
