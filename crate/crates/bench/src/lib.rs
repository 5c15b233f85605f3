//! Workload generators shared by the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scatter_depth::{Dataset, EllipticalModel, SpdMatrix};

/// A seeded sample of size `n` from the Gaussian (`heavy = false`) or
/// independent-Cauchy model with identity scatter in dimension `k`.
pub fn sample(n: usize, k: usize, heavy: bool, seed: u64) -> Dataset {
    let model = if heavy {
        EllipticalModel::cauchy(SpdMatrix::identity(k))
    } else {
        EllipticalModel::gaussian(SpdMatrix::identity(k))
    };
    model
        .sample(n, &mut ChaCha8Rng::seed_from_u64(seed))
        .expect("valid model")
}

/// `diag(2, 1, …, 1)` with a 0.3 correlation between the first two coordinates.
pub fn probe_scatter(k: usize) -> SpdMatrix {
    let mut m = vec![0.0; k * k];
    for i in 0..k {
        m[i * k + i] = 1.0;
    }
    m[0] = 2.0;
    if k > 1 {
        m[1] = 0.3;
        m[k] = 0.3;
    }
    SpdMatrix::from_row_slice(k, &m).expect("positive definite")
}

/// Labelled windows of `rows` observations each.
pub fn windows(count: usize, rows: usize, seed: u64) -> Vec<(String, Dataset)> {
    (0..count)
        .map(|w| (format!("w{w:04}"), sample(rows, 2, false, seed + w as u64)))
        .collect()
}
