//! Minimum covariance determinant scatter (FastMCD with C-steps).

use nalgebra::{Cholesky, DVector, Dyn};
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::dataset::{median_in_place, Dataset};
use crate::error::{DepthError, Result};
use crate::rng::{stream_rng, Stream};
use crate::spd::SpdMatrix;

const MAX_CSTEPS: usize = 200;

/// Raw MCD fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McdFit {
    /// The `h` retained rows, ascending.
    pub subset_indices: Vec<usize>,
    /// Subset covariance times `consistency_factor`.
    pub raw_scatter: SpdMatrix,
    pub location: Vec<f64>,
    pub consistency_factor: f64,
    /// Determinant of the unscaled subset covariance.
    pub determinant: f64,
}

/// `⌊(n + k + 1) / 2⌋`.
pub fn default_h(n: usize, k: usize) -> usize {
    (n + k + 1) / 2
}

struct Candidate {
    subset: Vec<usize>,
    mean: Vec<f64>,
    cov: SpdMatrix,
    log_det: f64,
}

fn fit_subset(data: &Dataset, subset: &[usize]) -> Option<Candidate> {
    let sub = data.select(subset).ok()?;
    let cov = SpdMatrix::new(sub.covariance()).ok()?;
    Some(Candidate {
        log_det: cov.log_determinant(),
        subset: subset.to_vec(),
        mean: sub.mean(),
        cov,
    })
}

/// Squared Mahalanobis distances of all rows.
fn distances(data: &Dataset, mean: &[f64], cov: &SpdMatrix) -> Vec<f64> {
    let chol = Cholesky::<f64, Dyn>::new(cov.entries().clone()).expect("positive definite");
    data.rows()
        .map(|x| {
            let d = DVector::from_iterator(mean.len(), x.iter().zip(mean).map(|(a, b)| a - b));
            let z = chol
                .l()
                .solve_lower_triangular(&d)
                .expect("invertible factor");
            z.norm_squared()
        })
        .collect()
}

fn smallest(d: &[f64], h: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..d.len()).collect();
    idx.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    idx.truncate(h);
    idx.sort_unstable();
    idx
}

fn concentrate(data: &Dataset, mut cur: Candidate, h: usize) -> Candidate {
    for _ in 0..MAX_CSTEPS {
        let next_subset = smallest(&distances(data, &cur.mean, &cur.cov), h);
        if next_subset == cur.subset {
            break;
        }
        let Some(next) = fit_subset(data, &next_subset) else {
            break;
        };
        let improved = next.log_det < cur.log_det;
        let tiny = cur.log_det - next.log_det < 1e-12;
        if improved {
            cur = next;
        }
        if !improved || tiny {
            break;
        }
    }
    cur
}

fn start(data: &Dataset, h: usize, seed: u64, index: usize) -> Option<Candidate> {
    let n = data.n();
    let k = data.k();
    let mut rng = stream_rng(seed, Stream::Mcd, index as u64);
    let order = sample(&mut rng, n, n).into_vec();
    let mut size = (k + 1).min(n);
    let initial = loop {
        if let Some(c) = fit_subset(data, &order[..size]) {
            break c;
        }
        if size >= h {
            return None;
        }
        size += 1;
    };
    let first = smallest(&distances(data, &initial.mean, &initial.cov), h);
    let cur = fit_subset(data, &first)?;
    Some(concentrate(data, cur, h))
}

/// FastMCD: `n_starts` random `(k+1)`-subsets, each concentrated by C-steps;
/// the fit with the smallest determinant wins (ties: lowest start index).
pub fn fast_mcd(data: &Dataset, h: usize, n_starts: usize, seed: u64) -> Result<McdFit> {
    let (n, k) = (data.n(), data.k());
    let lo = default_h(n, k).max(k + 1);
    if h < lo || h > n {
        return Err(DepthError::InvalidArgument(format!(
            "MCD subset size {h} outside [{lo}, {n}]"
        )));
    }
    let best = if h == n {
        fit_subset(data, &(0..n).collect::<Vec<_>>())
    } else {
        (0..n_starts.max(1))
            .into_par_iter()
            .filter_map(|s| start(data, h, seed, s).map(|c| (s, c)))
            .min_by(|a, b| a.1.log_det.total_cmp(&b.1.log_det).then(a.0.cmp(&b.0)))
            .map(|(_, c)| c)
    }
    .ok_or_else(|| DepthError::Degenerate("every MCD subset covariance is singular".into()))?;

    let mut d = distances(data, &best.mean, &best.cov);
    let med = median_in_place(&mut d);
    let chi = ChiSquared::new(k as f64)
        .expect("positive dof")
        .inverse_cdf(0.5);
    let factor = med / chi;
    let raw = best
        .cov
        .scale(factor)
        .map_err(|_| DepthError::Degenerate("zero median distance".into()))?;
    Ok(McdFit {
        subset_indices: best.subset,
        raw_scatter: raw,
        location: best.mean,
        consistency_factor: factor,
        determinant: best.log_det.exp(),
    })
}

/// Sample covariance as an SPD matrix.
pub fn sample_covariance(data: &Dataset) -> Result<SpdMatrix> {
    SpdMatrix::new(data.covariance())
}
