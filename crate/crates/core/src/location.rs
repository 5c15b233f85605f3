//! Location functionals, location halfspace depth, and the univariate
//! median-squared-deviation interval.

use std::f64::consts::PI;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::directions::{DirectionBudget, Directions};
use crate::error::{check_dim, DepthError, Result};
use crate::optim::nelder_mead;
use crate::rng::{stream_rng, Stream};
use crate::spd::symmetric_eigen;

/// Directions used when a Tukey median is resolved inside another depth
/// computation.
pub const LOCATION_MAX_DIRECTIONS: usize = 1000;
/// Sample points tried as Tukey-median candidates.
const MAX_POINT_CANDIDATES: usize = 1000;
const REFINEMENT_STARTS: usize = 5;
const REFINEMENT_EVALS: usize = 150;
/// Cached projections above this many entries are not materialized.
const CACHE_LIMIT: usize = 20_000_000;
const HYPERPLANE_TOL: f64 = 1e-12;

/// The location functional `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LocationSpec {
    TukeyMedian,
    Fixed(Vec<f64>),
    CoordMedian,
}

impl Default for LocationSpec {
    fn default() -> Self {
        LocationSpec::TukeyMedian
    }
}

impl LocationSpec {
    pub fn fixed(theta: Vec<f64>) -> Result<Self> {
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(DepthError::NonFinite("fixed location".into()));
        }
        Ok(LocationSpec::Fixed(theta))
    }

    /// Evaluates `T` on `data`. The Tukey median uses at most
    /// [`LOCATION_MAX_DIRECTIONS`] directions of `dirs`.
    pub fn resolve(&self, data: &Dataset, dirs: &DirectionBudget) -> Result<Vec<f64>> {
        match self {
            LocationSpec::Fixed(theta) => {
                check_dim(data.k(), theta.len())?;
                if theta.iter().any(|v| !v.is_finite()) {
                    return Err(DepthError::NonFinite("fixed location".into()));
                }
                Ok(theta.clone())
            }
            LocationSpec::CoordMedian => Ok(data.coordinate_median()),
            LocationSpec::TukeyMedian => {
                let budget = if dirs.is_exact() && data.k() != 2 {
                    DirectionBudget::uniform(LOCATION_MAX_DIRECTIONS, dirs.seed)
                } else {
                    dirs.capped(LOCATION_MAX_DIRECTIONS)
                };
                tukey_median(data, &budget)
            }
        }
    }
}

impl std::str::FromStr for LocationSpec {
    type Err = DepthError;

    /// `tukey`, `coordmedian`, or `fixed:θ1,θ2,…`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tukey" | "tukey-median" => Ok(LocationSpec::TukeyMedian),
            "coordmedian" | "coord-median" => Ok(LocationSpec::CoordMedian),
            _ => {
                let rest = s
                    .strip_prefix("fixed:")
                    .ok_or_else(|| DepthError::Parse(format!("unknown location {s:?}")))?;
                let theta = rest
                    .split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<f64>()
                            .map_err(|e| DepthError::Parse(format!("{v:?}: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                LocationSpec::fixed(theta)
            }
        }
    }
}

#[inline]
pub(crate) fn dot(u: &[f64], x: &[f64]) -> f64 {
    u.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Repeated location-depth evaluation on one dataset and direction set.
pub struct LocationDepthEvaluator<'a> {
    data: &'a Dataset,
    mode: Mode,
}

enum Mode {
    Univariate(Vec<f64>),
    Sorted { dirs: Directions, sorted: Vec<f64> },
    Streaming(Directions),
    Exact2D,
}

impl<'a> LocationDepthEvaluator<'a> {
    pub fn new(data: &'a Dataset, budget: &DirectionBudget) -> Result<Self> {
        budget.validate(data.k())?;
        let n = data.n();
        let mode = if data.k() == 1 {
            let mut xs = data.values().to_vec();
            xs.sort_by(f64::total_cmp);
            Mode::Univariate(xs)
        } else if budget.is_exact() {
            Mode::Exact2D
        } else {
            let dirs = budget.generate(data.k())?;
            if dirs.len() * n <= CACHE_LIMIT {
                let mut sorted = Vec::with_capacity(dirs.len() * n);
                for u in dirs.iter() {
                    let start = sorted.len();
                    sorted.extend(data.rows().map(|x| dot(u, x)));
                    sorted[start..].sort_by(f64::total_cmp);
                }
                Mode::Sorted { dirs, sorted }
            } else {
                Mode::Streaming(dirs)
            }
        };
        Ok(Self { data, mode })
    }

    /// Number of observations in the least-populated closed halfspace
    /// `{x : uᵀx ≥ uᵀθ}` over the direction set.
    pub fn depth_count(&self, theta: &[f64]) -> usize {
        let n = self.data.n();
        match &self.mode {
            Mode::Univariate(xs) => {
                let t = theta[0];
                let below = xs.partition_point(|&x| x < t);
                let above_or_eq = n - below;
                let at_most = xs.partition_point(|&x| x <= t);
                above_or_eq.min(at_most)
            }
            Mode::Sorted { dirs, sorted } => dirs
                .iter()
                .enumerate()
                .map(|(j, u)| {
                    let t = dot(u, theta);
                    let col = &sorted[j * n..(j + 1) * n];
                    n - col.partition_point(|&p| p < t)
                })
                .min()
                .unwrap_or(n),
            Mode::Streaming(dirs) => dirs
                .iter()
                .map(|u| {
                    let t = dot(u, theta);
                    self.data.rows().filter(|x| dot(u, x) >= t).count()
                })
                .min()
                .unwrap_or(n),
            Mode::Exact2D => exact_location_count(self.data, theta),
        }
    }

    pub fn depth(&self, theta: &[f64]) -> f64 {
        self.depth_count(theta) as f64 / self.data.n() as f64
    }
}

/// Exact bivariate location depth count by an angular sweep.
///
/// The count of a closed half-plane only changes when its boundary crosses an
/// observation, and boundary positions never give a smaller count than the
/// adjacent open arcs, so arcs centred between consecutive events suffice.
fn exact_location_count(data: &Dataset, theta: &[f64]) -> usize {
    let mut at_center = 0;
    let mut angles = Vec::with_capacity(data.n());
    for x in data.rows() {
        let dx = x[0] - theta[0];
        let dy = x[1] - theta[1];
        if dx == 0.0 && dy == 0.0 {
            at_center += 1;
        } else {
            angles.push(dy.atan2(dx));
        }
    }
    if angles.is_empty() {
        return at_center;
    }
    angles.sort_by(f64::total_cmp);
    let wrap = |a: f64| {
        if a <= -PI {
            a + 2.0 * PI
        } else if a > PI {
            a - 2.0 * PI
        } else {
            a
        }
    };
    let mut events: Vec<f64> = angles.iter().flat_map(|&a| [a, wrap(a - PI)]).collect();
    events.sort_by(f64::total_cmp);
    events.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);

    let mut doubled = angles.clone();
    doubled.extend(angles.iter().map(|a| a + 2.0 * PI));
    doubled.extend(angles.iter().map(|a| a + 4.0 * PI));
    // points strictly inside the open arc (start, start + π)
    let open_arc = |start: f64| -> usize {
        let s = if start < -PI { start + 2.0 * PI } else { start };
        let lo = doubled.partition_point(|&a| a <= s);
        let hi = doubled.partition_point(|&a| a < s + PI);
        hi - lo
    };
    let m = events.len();
    let mut best = usize::MAX;
    for i in 0..m {
        let a = events[i];
        let b = if i + 1 < m {
            events[i + 1]
        } else {
            events[0] + 2.0 * PI
        };
        best = best.min(open_arc(0.5 * (a + b)));
    }
    best + at_center
}

/// Location halfspace depth `min_u #{i : uᵀ(x_i − θ) ≥ 0} / n`.
pub fn location_depth(data: &Dataset, theta: &[f64], dirs: &DirectionBudget) -> Result<f64> {
    check_dim(data.k(), theta.len())?;
    Ok(LocationDepthEvaluator::new(data, dirs)?.depth(theta))
}

/// Approximate Tukey median: barycenter of the best-depth candidates.
///
/// Candidates are sample points, the coordinatewise median and the mean,
/// refined by Nelder–Mead from the five deepest. The procedure is run on the
/// data and on its reflection and the two answers are averaged, which makes the
/// result exactly centro-equivariant. Univariate data get the exact midpoint of
/// the median interval.
pub fn tukey_median(data: &Dataset, dirs: &DirectionBudget) -> Result<Vec<f64>> {
    dirs.validate(data.k())?;
    if data.k() == 1 {
        let mut xs = data.values().to_vec();
        xs.sort_by(f64::total_cmp);
        let n = xs.len();
        let lo = xs[(n + 1) / 2 - 1];
        let hi = xs[n / 2];
        return Ok(vec![0.5 * (lo + hi)]);
    }
    let reflected = data.affine_map(
        &(-nalgebra::DMatrix::identity(data.k(), data.k())),
        &vec![0.0; data.k()],
    )?;
    let a = barycenter_of_deepest(data, dirs)?;
    let b = barycenter_of_deepest(&reflected, dirs)?;
    Ok(a.iter().zip(&b).map(|(x, y)| 0.5 * (x - y)).collect())
}

fn barycenter_of_deepest(data: &Dataset, dirs: &DirectionBudget) -> Result<Vec<f64>> {
    let eval = LocationDepthEvaluator::new(data, dirs)?;
    let k = data.k();
    let n = data.n();

    let stride = n.div_ceil(MAX_POINT_CANDIDATES);
    let mut candidates: Vec<Vec<f64>> = (0..n)
        .step_by(stride)
        .map(|i| data.row(i).to_vec())
        .collect();
    candidates.push(data.coordinate_median());
    candidates.push(data.mean());

    let mut evaluated: Vec<(usize, Vec<f64>)> = candidates
        .into_iter()
        .map(|c| (eval.depth_count(&c), c))
        .collect();

    let mut order: Vec<usize> = (0..evaluated.len()).collect();
    order.sort_by(|&i, &j| evaluated[j].0.cmp(&evaluated[i].0).then(i.cmp(&j)));

    let cov = data.covariance();
    let step: Vec<f64> = (0..k)
        .map(|j| {
            let s = cov[(j, j)].sqrt() * 0.1;
            if s > 0.0 {
                s
            } else {
                0.1
            }
        })
        .collect();
    let starts: Vec<Vec<f64>> = order
        .iter()
        .take(REFINEMENT_STARTS)
        .map(|&i| evaluated[i].1.clone())
        .collect();
    for start in starts {
        let mut trace = Vec::new();
        nelder_mead(
            |x| {
                let c = eval.depth_count(x);
                trace.push((c, x.to_vec()));
                -(c as f64)
            },
            &start,
            &step,
            REFINEMENT_EVALS,
        );
        evaluated.extend(trace);
    }

    let best = evaluated.iter().map(|(c, _)| *c).max().unwrap_or(0);
    let winners: Vec<&Vec<f64>> = evaluated
        .iter()
        .filter(|(c, _)| *c == best)
        .map(|(_, x)| x)
        .collect();
    let mut center = vec![0.0; k];
    for w in &winners {
        for (c, v) in center.iter_mut().zip(w.iter()) {
            *c += v;
        }
    }
    center.iter_mut().for_each(|c| *c /= winners.len() as f64);
    Ok(center)
}

/// Argmax interval of `Σ ↦ min(#{d_i ≤ Σ}, #{d_i ≥ Σ})` over squared
/// deviations `d_i = (x_i − center)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MsdInterval {
    pub lo: f64,
    pub hi: f64,
    /// Attained count; the maximal depth is `level / n`.
    pub level: usize,
    pub n: usize,
}

impl MsdInterval {
    /// The median squared deviation.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn depth(&self) -> f64 {
        self.level as f64 / self.n as f64
    }
}

pub fn msd_interval(x: &[f64], center: f64) -> Result<MsdInterval> {
    if x.is_empty() {
        return Err(DepthError::EmptyDataset);
    }
    let mut d: Vec<f64> = x.iter().map(|v| (v - center).powi(2)).collect();
    d.sort_by(f64::total_cmp);
    let n = d.len();
    // level ℓ is attainable iff d_(ℓ) ≤ d_(n-ℓ+1); feasibility is monotone in ℓ
    let mut level = 1;
    while level < n && d[level] <= d[n - level - 1] {
        level += 1;
    }
    Ok(MsdInterval {
        lo: d[level - 1],
        hi: d[n - level],
        level,
        n,
    })
}

/// `(s, α)`: the largest fraction of observations on a hyperplane through
/// `T`, and `α = min(s, 1 − s)`.
///
/// Hyperplanes through `T` and observations are enumerated exactly for
/// `k ≤ 2`; for `k ≥ 3`, through `T` and every `(k−1)`-subset when there are
/// few enough, otherwise through seeded random subsets, plus the sampled
/// directions of `dirs`.
pub fn estimate_alpha(
    data: &Dataset,
    location: &LocationSpec,
    dirs: &DirectionBudget,
) -> Result<(f64, f64)> {
    let theta = location.resolve(data, dirs)?;
    let k = data.k();
    let n = data.n();
    let centered: Vec<Vec<f64>> = data
        .rows()
        .map(|x| x.iter().zip(&theta).map(|(a, b)| a - b).collect())
        .collect();
    let norms: Vec<f64> = centered.iter().map(|y| dot(y, y).sqrt()).collect();
    let scale = norms.iter().copied().fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok((1.0, 0.0));
    }
    let tol = HYPERPLANE_TOL * scale;
    let at_center = norms.iter().filter(|&&r| r <= tol).count();
    let off: Vec<usize> = (0..n).filter(|&i| norms[i] > tol).collect();

    let on_plane = |u: &[f64]| centered.iter().filter(|y| dot(u, y).abs() <= tol).count();

    let mut best = at_center;
    match k {
        1 => {}
        2 => {
            for &i in &off {
                let y = &centered[i];
                let u = [-y[1] / norms[i], y[0] / norms[i]];
                best = best.max(on_plane(&u));
            }
        }
        _ => {
            let m = off.len();
            let total = binomial(m, k - 1);
            let mut normals: Vec<Vec<f64>> = Vec::new();
            let mut consider = |subset: &[usize]| {
                if let Some(u) = normal_through(subset.iter().map(|&i| centered[i].as_slice()), k) {
                    normals.push(u);
                }
            };
            if total <= 200_000 {
                for_each_subset(m, k - 1, |s| {
                    let idx: Vec<usize> = s.iter().map(|&j| off[j]).collect();
                    consider(&idx);
                });
            } else if m >= k - 1 {
                let mut rng = stream_rng(dirs.seed, Stream::Alpha, 0);
                for _ in 0..dirs.count.max(1000) {
                    let s = sample(&mut rng, m, k - 1);
                    let idx: Vec<usize> = s.iter().map(|j| off[j]).collect();
                    consider(&idx);
                }
            }
            for u in &normals {
                best = best.max(on_plane(u));
            }
            if !dirs.is_exact() {
                for u in dirs.generate(k)?.iter() {
                    best = best.max(on_plane(u));
                }
            }
        }
    }
    let s = best as f64 / n as f64;
    Ok((s, s.min(1.0 - s)))
}

fn binomial(n: usize, r: usize) -> usize {
    if r > n {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

fn for_each_subset(n: usize, r: usize, mut f: impl FnMut(&[usize])) {
    if r > n {
        return;
    }
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        f(&idx);
        let mut i = r;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - r {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Unit normal of the hyperplane through the origin spanned by `k−1`
/// vectors, or `None` when they are linearly dependent.
fn normal_through<'a>(vectors: impl Iterator<Item = &'a [f64]>, k: usize) -> Option<Vec<f64>> {
    let mut gram = nalgebra::DMatrix::zeros(k, k);
    for v in vectors {
        let c = nalgebra::DVector::from_column_slice(v);
        gram += &c * c.transpose();
    }
    let (vals, vecs) = symmetric_eigen(&gram);
    if vals[k - 2] <= 1e-12 * vals[0].max(f64::MIN_POSITIVE) {
        return None;
    }
    Some(vecs.column(k - 1).iter().copied().collect())
}
