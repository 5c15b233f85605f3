//! Empirical scatter and concentration halfspace depth.
//!
//! For a direction `u`, write `p_i = uᵀ(x_i − T)` and `s = √(uᵀΣu)`. The
//! per-direction objective is `min(#{|p_i| ≤ s}, #{|p_i| ≥ s}) / n`; both
//! inequalities are closed, so an observation exactly on the boundary counts
//! in both. The depth is the minimum over directions.
//!
//! [`DepthEngine`] fixes the data, the location and the direction set, so that
//! many matrices can be evaluated against the same directions. With the
//! projection cache enabled it keeps `|p_i|` sorted per direction and each
//! evaluation costs `O(N log n)` instead of `O(N n)`; both paths perform the
//! same floating-point comparisons and return identical counts.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::directions::{DirectionBudget, Directions};
use crate::error::{check_dim, DepthError, Result};
use crate::location::{dot, tukey_median, LocationSpec, LOCATION_MAX_DIRECTIONS};
use crate::optim::nelder_mead;
use crate::rng::{stream_rng, Stream};
use crate::spd::SpdMatrix;

/// Sorted-projection caches larger than this many entries are not built.
pub const CACHE_LIMIT: usize = 25_000_000;
const ANGLE_DEDUP: f64 = 1e-12;

/// Which of the two probabilities attained the minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// `P[|uᵀ(X−T)| ≤ √(uᵀΣu)]`
    Inner,
    /// `P[|uᵀ(X−T)| ≥ √(uᵀΣu)]`
    Outer,
}

/// A depth value with the direction that attained it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthEvaluation {
    pub value: f64,
    pub argmin_direction: Vec<f64>,
    pub binding_side: Side,
    pub n_directions_used: usize,
}

/// Result of maximizing depth along the ray `σ² V`, `σ² > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayProfile {
    /// Best count found (`level / n` is the profile maximum).
    pub level: usize,
    /// Representative maximizer.
    pub sigma2: f64,
    /// Range of maximizing `σ²` (equal ends when only a point is known).
    pub sigma2_lo: f64,
    pub sigma2_hi: f64,
    /// False when no positive scale reaches a nonzero depth.
    pub attained: bool,
}

#[derive(Debug, Clone)]
enum Probe {
    Sampled {
        dirs: Directions,
        /// `|p|` sorted ascending, one block of `n` per direction.
        cache: Option<Vec<f64>>,
    },
    Exact2D,
}

/// Data centred at a resolved location, plus a fixed direction set.
#[derive(Debug, Clone)]
pub struct DepthEngine {
    n: usize,
    k: usize,
    location: Vec<f64>,
    centered: Vec<f64>,
    probe: Probe,
}

impl DepthEngine {
    /// Resolves `location` on `data` and generates the directions of `budget`.
    pub fn new(data: &Dataset, location: &LocationSpec, budget: &DirectionBudget) -> Result<Self> {
        budget.validate(data.k())?;
        let theta = location.resolve(data, budget)?;
        Self::at(data, &theta, budget)
    }

    /// Engine at an explicit location `θ`.
    pub fn at(data: &Dataset, theta: &[f64], budget: &DirectionBudget) -> Result<Self> {
        budget.validate(data.k())?;
        let probe = if budget.is_exact() {
            Probe::Exact2D
        } else {
            Probe::Sampled {
                dirs: budget.generate(data.k())?,
                cache: None,
            }
        };
        Self::build(data, theta, probe)
    }

    /// Engine at `θ` with an explicit direction set.
    pub fn with_directions(data: &Dataset, theta: &[f64], dirs: Directions) -> Result<Self> {
        check_dim(data.k(), dirs.k())?;
        Self::build(data, theta, Probe::Sampled { dirs, cache: None })
    }

    fn build(data: &Dataset, theta: &[f64], probe: Probe) -> Result<Self> {
        check_dim(data.k(), theta.len())?;
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(DepthError::NonFinite("location".into()));
        }
        let centered = data
            .rows()
            .flat_map(|x| x.iter().zip(theta).map(|(a, b)| a - b))
            .collect();
        Ok(Self {
            n: data.n(),
            k: data.k(),
            location: theta.to_vec(),
            centered,
            probe,
        })
    }

    /// Builds the sorted-projection cache when it fits in [`CACHE_LIMIT`].
    pub fn cached(mut self) -> Self {
        let n = self.n;
        if let Probe::Sampled { dirs, cache } = &mut self.probe {
            if cache.is_none() && dirs.len().saturating_mul(n) <= CACHE_LIMIT {
                let centered = &self.centered;
                let k = self.k;
                let blocks: Vec<Vec<f64>> = (0..dirs.len())
                    .into_par_iter()
                    .map(|j| {
                        let u = dirs.get(j);
                        let mut col: Vec<f64> =
                            centered.chunks_exact(k).map(|y| dot(u, y).abs()).collect();
                        col.sort_by(f64::total_cmp);
                        col
                    })
                    .collect();
                *cache = Some(blocks.concat());
            }
        }
        self
    }

    pub fn is_cached(&self) -> bool {
        matches!(self.probe, Probe::Sampled { cache: Some(_), .. })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn location(&self) -> &[f64] {
        &self.location
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.probe, Probe::Exact2D)
    }

    /// Directions in use (`None` for the exact bivariate mode).
    pub fn directions(&self) -> Option<&Directions> {
        match &self.probe {
            Probe::Sampled { dirs, .. } => Some(dirs),
            Probe::Exact2D => None,
        }
    }

    fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.centered.chunks_exact(self.k)
    }

    /// `(inner, outer)` counts for direction `u` and threshold `s`.
    #[inline]
    fn counts_direct(&self, u: &[f64], s: f64) -> (usize, usize) {
        let mut inner = 0;
        let mut outer = 0;
        for y in self.rows() {
            let p = dot(u, y).abs();
            inner += (p <= s) as usize;
            outer += (p >= s) as usize;
        }
        (inner, outer)
    }

    #[inline]
    fn counts_cached(&self, sorted: &[f64], s: f64) -> (usize, usize) {
        let inner = sorted.partition_point(|&p| p <= s);
        let outer = self.n - sorted.partition_point(|&p| p < s);
        (inner, outer)
    }

    /// Per-direction `(inner, outer)` counts for direction index `j`.
    pub fn direction_counts(&self, j: usize, sigma: &SpdMatrix) -> (usize, usize) {
        match &self.probe {
            Probe::Sampled { dirs, cache } => {
                let u = dirs.get(j);
                let s = sigma.quad_form(u).sqrt();
                match cache {
                    Some(c) => self.counts_cached(&c[j * self.n..(j + 1) * self.n], s),
                    None => self.counts_direct(u, s),
                }
            }
            Probe::Exact2D => panic!("exact mode has no indexed directions"),
        }
    }

    /// Scatter depth of `Σ`.
    pub fn scatter_depth(&self, sigma: &SpdMatrix) -> Result<DepthEvaluation> {
        check_dim(self.k, sigma.dim())?;
        match &self.probe {
            Probe::Sampled { dirs, .. } => {
                let (count, j, side) = (0..dirs.len())
                    .into_par_iter()
                    .map(|j| {
                        let (inner, outer) = self.direction_counts(j, sigma);
                        if outer < inner {
                            (outer, j, Side::Outer)
                        } else {
                            (inner, j, Side::Inner)
                        }
                    })
                    .min_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)))
                    .expect("direction set is nonempty");
                Ok(DepthEvaluation {
                    value: count as f64 / self.n as f64,
                    argmin_direction: dirs.get(j).to_vec(),
                    binding_side: side,
                    n_directions_used: dirs.len(),
                })
            }
            Probe::Exact2D => Ok(self.exact_scatter_depth(sigma)),
        }
    }

    /// Minimum count only; the hot path of searches.
    pub fn scatter_count(&self, sigma: &SpdMatrix) -> usize {
        match &self.probe {
            Probe::Sampled { dirs, .. } => (0..dirs.len())
                .into_par_iter()
                .map(|j| {
                    let (i, o) = self.direction_counts(j, sigma);
                    i.min(o)
                })
                .min()
                .unwrap_or(self.n),
            Probe::Exact2D => {
                (self.exact_scatter_depth(sigma).value * self.n as f64).round() as usize
            }
        }
    }

    /// Critical angles in `[0, π)` where some observation lies on the
    /// boundary `|uᵀy| = √(uᵀΣu)`, from `uᵀ(yyᵀ − Σ)u = 0` written as
    /// `A + B cos 2φ + C sin 2φ = 0`.
    fn critical_angles(&self, sigma: &SpdMatrix) -> Vec<f64> {
        let mut angles = Vec::with_capacity(2 * self.n);
        for y in self.rows() {
            let m11 = y[0] * y[0] - sigma.get(0, 0);
            let m12 = y[0] * y[1] - sigma.get(0, 1);
            let m22 = y[1] * y[1] - sigma.get(1, 1);
            let a = 0.5 * (m11 + m22);
            let b = 0.5 * (m11 - m22);
            let c = m12;
            let r = b.hypot(c);
            if r == 0.0 || (a / r).abs() > 1.0 {
                continue;
            }
            let delta = c.atan2(b);
            let w = (-a / r).acos();
            for two_phi in [delta + w, delta - w] {
                angles.push((0.5 * two_phi).rem_euclid(PI));
            }
        }
        angles.sort_by(f64::total_cmp);
        angles.dedup_by(|a, b| (*a - *b).abs() <= ANGLE_DEDUP);
        angles
    }

    fn exact_scatter_depth(&self, sigma: &SpdMatrix) -> DepthEvaluation {
        let crit = self.critical_angles(sigma);
        let mut probes = Vec::with_capacity(2 * crit.len() + 1);
        for (i, &a) in crit.iter().enumerate() {
            probes.push(a);
            let next = if i + 1 < crit.len() {
                crit[i + 1]
            } else {
                crit[0] + PI
            };
            probes.push(0.5 * (a + next));
        }
        if probes.is_empty() {
            probes.push(0.0);
        }
        let (count, idx, side) = probes
            .par_iter()
            .enumerate()
            .map(|(i, &phi)| {
                let u = [phi.cos(), phi.sin()];
                let (inner, outer) = self.counts_direct(&u, sigma.quad_form(&u).sqrt());
                if outer < inner {
                    (outer, i, Side::Outer)
                } else {
                    (inner, i, Side::Inner)
                }
            })
            .min_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)))
            .expect("at least one probe");
        let phi = probes[idx];
        DepthEvaluation {
            value: count as f64 / self.n as f64,
            argmin_direction: vec![phi.cos(), phi.sin()],
            binding_side: side,
            n_directions_used: probes.len(),
        }
    }

    /// Maximizes the scatter depth of `σ² V` over `σ² > 0`.
    ///
    /// With a finite direction set the maximum is found exactly. Along the
    /// ray, direction `u` sees `t_i = |p_i| / √(uᵀVu)`: the inner count at
    /// scale `σ` is `#{t_i ≤ σ}` and the outer count `#{t_i ≥ σ}`. Level `ℓ` is
    /// reachable iff `max_u t_(ℓ) ≤ min_u t_(n−ℓ+1)` (order statistics per
    /// direction), which is monotone in `ℓ`. In the exact bivariate mode a
    /// geometric grid followed by golden-section refinement is used instead.
    pub fn ray_profile(&self, shape: &SpdMatrix) -> Result<RayProfile> {
        check_dim(self.k, shape.dim())?;
        match &self.probe {
            Probe::Sampled { dirs, cache } => {
                Ok(self.exact_ray_profile(dirs, cache.as_deref(), shape))
            }
            Probe::Exact2D => self.grid_ray_profile(shape),
        }
    }

    fn exact_ray_profile(
        &self,
        dirs: &Directions,
        cache: Option<&[f64]>,
        shape: &SpdMatrix,
    ) -> RayProfile {
        let n = self.n;
        let scales: Vec<f64> = dirs.iter().map(|u| shape.quad_form(u).sqrt()).collect();
        // lower[ℓ-1] = max_u t_(ℓ), upper[ℓ-1] = min_u t_(n-ℓ+1)
        let (lower, upper) = match cache {
            Some(c) => {
                let bound = |level: usize| -> (f64, f64) {
                    let mut lo = f64::NEG_INFINITY;
                    let mut hi = f64::INFINITY;
                    for (j, s) in scales.iter().enumerate() {
                        let col = &c[j * n..(j + 1) * n];
                        lo = lo.max(col[level - 1] / s);
                        hi = hi.min(col[n - level] / s);
                    }
                    (lo, hi)
                };
                let feasible = |level: usize| {
                    let (lo, hi) = bound(level);
                    lo <= hi && hi > 0.0
                };
                // binary search for the largest feasible level in [1, (n+1)/2]
                let (mut good, mut bad) = (0usize, (n + 1) / 2 + 1);
                while bad - good > 1 {
                    let mid = (good + bad) / 2;
                    if feasible(mid) {
                        good = mid;
                    } else {
                        bad = mid;
                    }
                }
                let mut lower = vec![f64::NEG_INFINITY; n];
                let mut upper = vec![f64::INFINITY; n];
                for level in [good, good + 1].into_iter().filter(|&l| l >= 1 && l <= n) {
                    let (lo, hi) = bound(level);
                    lower[level - 1] = lo;
                    upper[level - 1] = hi;
                }
                (lower, upper)
            }
            None => {
                let centered = &self.centered;
                let k = self.k;
                (0..dirs.len())
                    .into_par_iter()
                    .fold(
                        || (vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n]),
                        |(mut lo, mut hi), j| {
                            let u = dirs.get(j);
                            let s = scales[j];
                            let mut t: Vec<f64> =
                                centered.chunks_exact(k).map(|y| dot(u, y).abs()).collect();
                            t.sort_by(f64::total_cmp);
                            for l in 0..n {
                                lo[l] = lo[l].max(t[l] / s);
                                hi[l] = hi[l].min(t[n - 1 - l] / s);
                            }
                            (lo, hi)
                        },
                    )
                    .reduce(
                        || (vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n]),
                        |(mut a_lo, mut a_hi), (b_lo, b_hi)| {
                            for l in 0..n {
                                a_lo[l] = a_lo[l].max(b_lo[l]);
                                a_hi[l] = a_hi[l].min(b_hi[l]);
                            }
                            (a_lo, a_hi)
                        },
                    )
            }
        };
        let mut level = 0;
        for l in 1..=(n + 1) / 2 {
            if lower[l - 1] <= upper[l - 1] && upper[l - 1] > 0.0 {
                level = l;
            } else if lower[l - 1].is_finite() && upper[l - 1].is_finite() {
                break;
            }
        }
        if level == 0 {
            // depth vanishes for every scale; report the median radius
            let mid = (n - 1) / 2;
            let mut radii: Vec<f64> = (0..dirs.len())
                .map(|j| {
                    let mut t: Vec<f64> = self
                        .rows()
                        .map(|y| dot(dirs.get(j), y).abs() / scales[j])
                        .collect();
                    t.sort_by(f64::total_cmp);
                    t[mid]
                })
                .collect();
            radii.sort_by(f64::total_cmp);
            let r = radii[radii.len() / 2];
            let sigma2 = if r > 0.0 { r * r } else { 1.0 };
            return RayProfile {
                level: 0,
                sigma2,
                sigma2_lo: sigma2,
                sigma2_hi: sigma2,
                attained: false,
            };
        }
        let lo = lower[level - 1].max(0.0);
        let hi = upper[level - 1];
        let (lo2, hi2) = (lo * lo, hi * hi);
        RayProfile {
            level,
            sigma2: 0.5 * (lo2 + hi2),
            sigma2_lo: lo2,
            sigma2_hi: hi2,
            attained: true,
        }
    }

    fn grid_ray_profile(&self, shape: &SpdMatrix) -> Result<RayProfile> {
        let k = self.k;
        let mut second = DMatrix::zeros(k, k);
        for y in self.rows() {
            let v = nalgebra::DVector::from_column_slice(y);
            second += &v * v.transpose();
        }
        second /= self.n as f64;
        let det = second.determinant();
        let anchor = if det > 0.0 {
            (det / shape.determinant()).powf(1.0 / k as f64)
        } else {
            (second.trace() / shape.trace()).max(1.0)
        };
        let eval =
            |log_s2: f64| -> Result<usize> { Ok(self.scatter_count(&shape.scale(log_s2.exp())?)) };
        let lo = (anchor * 1e-6).ln();
        let hi = (anchor * 1e6).ln();
        let grid: Vec<f64> = (0..41).map(|i| lo + (hi - lo) * i as f64 / 40.0).collect();
        let mut values = Vec::with_capacity(41);
        for &g in &grid {
            values.push(eval(g)?);
        }
        let mut best_i = 0;
        for i in 1..41 {
            if values[i] > values[best_i] {
                best_i = i;
            }
        }
        let mut best = (values[best_i], grid[best_i]);
        let mut a = grid[best_i.saturating_sub(1)];
        let mut b = grid[(best_i + 1).min(40)];
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let mut fc = eval(c)?;
        let mut fd = eval(d)?;
        while b - a > (1.0 + 1e-6f64).ln() {
            for (f, x) in [(fc, c), (fd, d)] {
                if f > best.0 {
                    best = (f, x);
                }
            }
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = eval(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = eval(d)?;
            }
        }
        let s2 = best.1.exp();
        Ok(RayProfile {
            level: best.0,
            sigma2: s2,
            sigma2_lo: s2,
            sigma2_hi: s2,
            attained: best.0 > 0,
        })
    }
}

/// Empirical `T`-scatter halfspace depth of `Σ`.
pub fn scatter_depth(
    data: &Dataset,
    location: &LocationSpec,
    sigma: &SpdMatrix,
    dirs: &DirectionBudget,
) -> Result<DepthEvaluation> {
    check_dim(data.k(), sigma.dim())?;
    DepthEngine::new(data, location, dirs)?.scatter_depth(sigma)
}

/// Concentration depth of `Γ`: the scatter depth of `Γ⁻¹`.
pub fn concentration_depth(
    data: &Dataset,
    location: &LocationSpec,
    gamma: &SpdMatrix,
    dirs: &DirectionBudget,
) -> Result<DepthEvaluation> {
    scatter_depth(data, location, &gamma.inverse(), dirs)
}

/// Scatter depth maximized over the location.
///
/// Evaluates at most `theta_budget` locations: the Tukey median first, then
/// the coordinatewise median and sample points, then Nelder–Mead refinements
/// of the best few. The returned value is a lower bound of the supremum.
pub fn scatter_depth_sup_location(
    data: &Dataset,
    sigma: &SpdMatrix,
    dirs: &DirectionBudget,
    theta_budget: usize,
) -> Result<(DepthEvaluation, Vec<f64>)> {
    if theta_budget == 0 {
        return Err(DepthError::InvalidArgument(
            "location budget must be ≥ 1".into(),
        ));
    }
    check_dim(data.k(), sigma.dim())?;
    dirs.validate(data.k())?;
    let median = LocationSpec::TukeyMedian.resolve(data, dirs)?;
    let eval_at = |theta: &[f64]| -> Result<DepthEvaluation> {
        DepthEngine::at(data, theta, dirs)?.scatter_depth(sigma)
    };

    let mut best = (eval_at(&median)?, median.clone());
    let mut used = 1;
    if theta_budget == 1 {
        return Ok(best);
    }

    let mut scored: Vec<(f64, Vec<f64>)> = vec![(best.0.value, median)];
    let mut candidates = vec![data.coordinate_median()];
    let stride = data
        .n()
        .div_ceil(LOCATION_MAX_DIRECTIONS.min(theta_budget.max(1)));
    candidates.extend(
        (0..data.n())
            .step_by(stride.max(1))
            .map(|i| data.row(i).to_vec()),
    );
    let screening = (theta_budget / 2).max(1);
    for c in candidates {
        if used >= screening.min(theta_budget) {
            break;
        }
        let e = eval_at(&c)?;
        used += 1;
        if e.value > best.0.value {
            best = (e.clone(), c.clone());
        }
        scored.push((e.value, c));
    }

    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let cov = data.covariance();
    let step: Vec<f64> = (0..data.k())
        .map(|j| (cov[(j, j)].sqrt() * 0.1).max(1e-3))
        .collect();
    let starts: Vec<Vec<f64>> = scored.iter().take(5).map(|(_, c)| c.clone()).collect();
    let per_start = (theta_budget - used) / starts.len().max(1);
    if per_start > data.k() + 1 {
        for start in starts {
            let mut failure = None;
            nelder_mead(
                |theta| match eval_at(theta) {
                    Ok(e) => {
                        let v = e.value;
                        if v > best.0.value {
                            best = (e, theta.to_vec());
                        }
                        -v
                    }
                    Err(err) => {
                        failure = Some(err);
                        0.0
                    }
                },
                &start,
                &step,
                per_start,
            );
            if let Some(err) = failure {
                return Err(err);
            }
        }
    }
    Ok(best)
}

/// Scatter depth of `Σ` at location zero with respect to the pairwise
/// differences `x_i − x_j`, `i ≠ j`. When `pair_budget < n(n−1)` a seeded
/// uniform subsample of ordered pairs is used.
pub fn pairwise_difference_depth(
    data: &Dataset,
    sigma: &SpdMatrix,
    dirs: &DirectionBudget,
    pair_budget: usize,
) -> Result<DepthEvaluation> {
    let n = data.n();
    if n < 2 {
        return Err(DepthError::InvalidArgument(
            "pairwise differences need at least two observations".into(),
        ));
    }
    check_dim(data.k(), sigma.dim())?;
    let k = data.k();
    let total = n * (n - 1);
    let pair = |idx: usize| -> (usize, usize) {
        let i = idx / (n - 1);
        let r = idx % (n - 1);
        (i, if r >= i { r + 1 } else { r })
    };
    let indices: Vec<usize> = if pair_budget >= total {
        (0..total).collect()
    } else {
        let mut rng = stream_rng(dirs.seed, Stream::Pairs, 0);
        let mut s = sample(&mut rng, total, pair_budget.max(1)).into_vec();
        s.sort_unstable();
        s
    };
    let mut diffs = Vec::with_capacity(indices.len() * k);
    for idx in indices {
        let (i, j) = pair(idx);
        diffs.extend(data.row(i).iter().zip(data.row(j)).map(|(a, b)| a - b));
    }
    let diff_data = Dataset::new(k, diffs)?;
    DepthEngine::at(&diff_data, &vec![0.0; k], dirs)?.scatter_depth(sigma)
}

/// `Σ ∈ R(α)`, i.e. scatter depth at least `α`.
pub fn region_contains(
    data: &Dataset,
    location: &LocationSpec,
    sigma: &SpdMatrix,
    alpha: f64,
    dirs: &DirectionBudget,
) -> Result<bool> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(DepthError::InvalidArgument(format!(
            "alpha {alpha} outside [0, 1]"
        )));
    }
    Ok(scatter_depth(data, location, sigma, dirs)?.value >= alpha)
}

/// The Tukey median under the direction budget a depth engine would use.
pub fn default_location(data: &Dataset, dirs: &DirectionBudget) -> Result<Vec<f64>> {
    tukey_median(data, &dirs.capped(LOCATION_MAX_DIRECTIONS))
}
