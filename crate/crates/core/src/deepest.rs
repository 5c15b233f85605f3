//! Deepest scatter and shape search, and depth profiles along paths.
//!
//! Candidates are parametrized by a lower-triangular Cholesky factor with
//! log-diagonal. Each candidate is scored at its best scale (the exact ray
//! profile of the depth engine), so the scatter search and the shape search
//! share one objective: the best count reachable along the ray `σ²V`.

use nalgebra::{Cholesky, DMatrix, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::depth::DepthEngine;
use crate::directions::DirectionBudget;
use crate::error::{DepthError, Result};
use crate::location::LocationSpec;
use crate::mcd::{default_h, fast_mcd};
use crate::oracles::EllipticalModel;
use crate::rng::{derive_seed, stream_rng, Stream};
use crate::shape::{scale_and_shape, shape_depth_on, ScaleFunctional};
use crate::spd::{geodesic_distance, karcher_mean, KarcherOptions, PathKind, PathSpec, SpdMatrix};

/// Tuning of the pattern search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub n_starts: usize,
    pub seed: u64,
    pub initial_step: f64,
    pub min_step: f64,
    /// Evaluation cap per start.
    pub max_evaluations: usize,
    /// Directions used by the search (the budget's count is capped to this).
    pub max_directions: usize,
    pub mcd_starts: usize,
    /// Cap on stored near-maximizers.
    pub max_near: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            n_starts: 8,
            seed: 0,
            initial_step: 0.5,
            min_step: 1e-4,
            max_evaluations: 4000,
            max_directions: 2000,
            mcd_starts: 20,
            max_near: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeepestResult {
    /// Deepest scatter, or deepest shape with `S(argmax) = 1`.
    pub argmax: SpdMatrix,
    pub value: f64,
    /// For shapes, the maximizing scale of `argmax`.
    pub sigma2: Option<f64>,
    pub scale: Option<ScaleFunctional>,
    /// Search points within `1/n` of `value`.
    pub near_maximizers: Vec<SpdMatrix>,
    /// Karcher mean of `near_maximizers`.
    pub representative: SpdMatrix,
    pub representative_value: f64,
    pub n_directions: usize,
    pub evaluations: usize,
}

struct Trace {
    level: usize,
    factor: DMatrix<f64>,
    /// Scatter at its best scale and its level, for every evaluated point.
    seen: Vec<(usize, SpdMatrix)>,
    evaluations: usize,
}

fn factor_of(m: &SpdMatrix) -> DMatrix<f64> {
    Cholesky::<f64, Dyn>::new(m.entries().clone())
        .expect("positive definite")
        .unpack()
}

fn from_factor(l: &DMatrix<f64>) -> Option<SpdMatrix> {
    SpdMatrix::new(l * l.transpose()).ok()
}

/// Moves of the pattern: each log-diagonal entry, then each off-diagonal
/// entry relative to its diagonal scale.
fn moved(l: &DMatrix<f64>, coord: (usize, usize), delta: f64) -> DMatrix<f64> {
    let mut out = l.clone();
    let (i, j) = coord;
    if i == j {
        out[(i, i)] *= delta.exp();
    } else {
        out[(i, j)] += delta * (l[(i, i)] * l[(j, j)]).sqrt();
    }
    out
}

struct Objective<'a> {
    engine: &'a DepthEngine,
}

impl Objective<'_> {
    /// Best level along the ray of `sigma` and a scatter attaining it.
    fn eval(&self, sigma: &SpdMatrix) -> Option<(usize, SpdMatrix)> {
        let p = self.engine.ray_profile(sigma).ok()?;
        let best = sigma.scale(p.sigma2).ok()?;
        let count = self.engine.scatter_count(&best);
        if count >= p.level {
            return Some((count, best));
        }
        // plateau of zero width: fall back to its ends
        [p.sigma2_lo, p.sigma2_hi]
            .into_iter()
            .filter(|s| *s > 0.0)
            .filter_map(|s| sigma.scale(s).ok())
            .map(|m| (self.engine.scatter_count(&m), m))
            .chain(std::iter::once((count, best)))
            .max_by_key(|(c, _)| *c)
    }
}

fn pattern_search(obj: &Objective, start: &SpdMatrix, opts: &SearchOptions) -> Option<Trace> {
    let k = start.dim();
    let coords: Vec<(usize, usize)> = (0..k)
        .map(|i| (i, i))
        .chain((0..k).flat_map(|i| (0..i).map(move |j| (i, j))))
        .collect();
    let mut l = factor_of(start);
    let (mut level, first) = obj.eval(start)?;
    let mut seen = vec![(level, first)];
    let mut evaluations = 1;
    let mut step = opts.initial_step;
    while step >= opts.min_step && evaluations < opts.max_evaluations {
        let mut improved = false;
        for &c in &coords {
            for sign in [1.0, -1.0] {
                let cand = moved(&l, c, sign * step);
                let Some(m) = from_factor(&cand) else {
                    continue;
                };
                let Some((v, best)) = obj.eval(&m) else {
                    continue;
                };
                evaluations += 1;
                seen.push((v, best));
                if v > level {
                    level = v;
                    l = cand;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Some(Trace {
        level,
        factor: l,
        seen,
        evaluations,
    })
}

fn starting_points(data: &Dataset, opts: &SearchOptions) -> Vec<SpdMatrix> {
    let k = data.k();
    let mut base = Vec::new();
    let plug_in = SpdMatrix::new(data.covariance()).ok();
    if let Some(c) = &plug_in {
        base.push(c.clone());
    }
    let h = default_h(data.n(), k).max(k + 1);
    if h <= data.n() {
        if let Ok(fit) = fast_mcd(
            data,
            h,
            opts.mcd_starts,
            derive_seed(opts.seed, Stream::Mcd, 0),
        ) {
            base.push(fit.raw_scatter);
        }
    }
    base.push(SpdMatrix::identity(k));
    let center = plug_in.unwrap_or_else(|| SpdMatrix::identity(k));
    let l0 = factor_of(&center);
    let mut extra = 0u64;
    while base.len() < opts.n_starts.max(1) && extra < 1000 {
        let mut rng = stream_rng(opts.seed, Stream::Search, extra);
        extra += 1;
        let mut l = l0.clone();
        for i in 0..k {
            for j in 0..=i {
                let z: f64 = rng.sample(StandardNormal);
                l = moved(&l, (i, j), 0.3 * z);
            }
        }
        if let Some(m) = from_factor(&l) {
            base.push(m);
        }
    }
    base.truncate(opts.n_starts.max(1));
    base
}

/// Lexicographic order on entries, for deterministic tie-breaking.
fn entry_order(a: &SpdMatrix, b: &SpdMatrix) -> std::cmp::Ordering {
    a.entries()
        .iter()
        .zip(b.entries().iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

fn search_engine(
    data: &Dataset,
    location: &LocationSpec,
    dirs: &DirectionBudget,
    opts: &SearchOptions,
) -> Result<DepthEngine> {
    let first = data.row(0);
    if data.rows().all(|r| r == first) {
        return Err(DepthError::Degenerate("all observations are equal".into()));
    }
    let budget = if dirs.is_exact() {
        DirectionBudget::uniform(opts.max_directions, dirs.seed)
    } else {
        dirs.capped(opts.max_directions)
    };
    Ok(DepthEngine::new(data, location, &budget)?.cached())
}

struct Outcome {
    level: usize,
    best: SpdMatrix,
    near: Vec<(usize, SpdMatrix)>,
    evaluations: usize,
}

fn run_search(engine: &DepthEngine, data: &Dataset, opts: &SearchOptions) -> Result<Outcome> {
    let obj = Objective { engine };
    let starts = starting_points(data, opts);
    let traces: Vec<Trace> = starts
        .par_iter()
        .filter_map(|s| pattern_search(&obj, s, opts))
        .collect();
    if traces.is_empty() {
        return Err(DepthError::Degenerate("no start could be evaluated".into()));
    }
    let level = traces.iter().map(|t| t.level).max().expect("nonempty");
    let evaluations = traces.iter().map(|t| t.evaluations).sum();
    let mut winners: Vec<SpdMatrix> = traces
        .iter()
        .filter(|t| t.level == level)
        .filter_map(|t| {
            obj.eval(&from_factor(&t.factor)?)
                .filter(|(c, _)| *c == level)
                .map(|(_, m)| m)
        })
        .collect();
    if winners.is_empty() {
        // the incumbent's level was reached during its trajectory
        winners = traces
            .iter()
            .flat_map(|t| t.seen.iter())
            .filter(|(c, _)| *c == level)
            .map(|(_, m)| m.clone())
            .collect();
    }
    winners.sort_by(entry_order);
    let best = winners.swap_remove(0);
    let near: Vec<(usize, SpdMatrix)> = traces
        .into_iter()
        .flat_map(|t| t.seen.into_iter())
        .filter(|(c, _)| *c + 1 >= level)
        .take(opts.max_near.max(1))
        .collect();
    Ok(Outcome {
        level,
        best,
        near,
        evaluations,
    })
}

/// Karcher mean of `near`; if its score falls more than one level below
/// `level`, it is pulled along the geodesic toward `best` until it does not.
fn representative(
    near: &[SpdMatrix],
    best: &SpdMatrix,
    level: usize,
    score: impl Fn(&SpdMatrix) -> usize,
) -> Result<(SpdMatrix, usize)> {
    let w = vec![1.0 / near.len() as f64; near.len()];
    let mean = match karcher_mean(near, &w, KarcherOptions::default()) {
        Ok(m) => m,
        Err(DepthError::NoConvergence { last, .. }) => *last,
        Err(e) => return Err(e),
    };
    let s = score(&mean);
    if s + 1 >= level {
        return Ok((mean, s));
    }
    let path = PathSpec::new(best.clone(), mean, PathKind::Geodesic)?;
    let mut t = 0.5;
    while t > 1e-6 {
        let m = path.point(t)?;
        let s = score(&m);
        if s + 1 >= level {
            return Ok((m, s));
        }
        t *= 0.5;
    }
    Ok((best.clone(), score(best)))
}

/// Halfspace-deepest scatter matrix (a certified lower bound of the maximal depth).
pub fn deepest_scatter(
    data: &Dataset,
    location: &LocationSpec,
    dirs: &DirectionBudget,
    opts: &SearchOptions,
) -> Result<DeepestResult> {
    let engine = search_engine(data, location, dirs, opts)?;
    let out = run_search(&engine, data, opts)?;
    let n = engine.n() as f64;
    let near: Vec<SpdMatrix> = out.near.into_iter().map(|(_, m)| m).collect();
    let (rep, rep_level) =
        representative(&near, &out.best, out.level, |m| engine.scatter_count(m))?;
    Ok(DeepestResult {
        value: engine.scatter_count(&out.best) as f64 / n,
        argmax: out.best,
        sigma2: None,
        scale: None,
        near_maximizers: near,
        representative: rep,
        representative_value: rep_level as f64 / n,
        n_directions: engine.directions().map_or(0, |d| d.len()),
        evaluations: out.evaluations,
    })
}

/// Halfspace-deepest `S`-shape matrix.
pub fn deepest_shape(
    data: &Dataset,
    location: &LocationSpec,
    scale: ScaleFunctional,
    dirs: &DirectionBudget,
    opts: &SearchOptions,
) -> Result<DeepestResult> {
    let engine = search_engine(data, location, dirs, opts)?;
    let out = run_search(&engine, data, opts)?;
    let n = engine.n() as f64;
    let shape = |m: &SpdMatrix| scale_and_shape(m, scale).1.v;
    let level_of =
        |m: &SpdMatrix| shape_depth_on(&engine, m).map_or(0, |d| (d.value * n).round() as usize);
    let argmax = shape(&out.best);
    let best = shape_depth_on(&engine, &argmax)?;
    let near: Vec<SpdMatrix> = out.near.iter().map(|(_, m)| shape(m)).collect();
    let (rep, rep_level) = representative(&near, &argmax, out.level, level_of)?;
    Ok(DeepestResult {
        value: best.value,
        argmax,
        sigma2: Some(best.sigma2),
        scale: Some(scale),
        near_maximizers: near,
        representative: shape(&rep),
        representative_value: rep_level as f64 / n,
        n_directions: engine.directions().map_or(0, |d| d.len()),
        evaluations: out.evaluations,
    })
}

/// What is evaluated along a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileTarget {
    /// Scatter depth of `Σ_t`.
    Scatter,
    /// Concentration depth of `Σ_t` (scatter depth of `Σ_t⁻¹`).
    Concentration,
    /// Shape depth of `Σ_t` (scale-free).
    Shape,
}

/// Empirical engine or analytic model.
#[derive(Debug, Clone, Copy)]
pub enum DepthSource<'a> {
    Empirical(&'a DepthEngine),
    Model(&'a EllipticalModel),
}

impl DepthSource<'_> {
    fn eval(&self, target: ProfileTarget, m: &SpdMatrix) -> Result<f64> {
        match (self, target) {
            (DepthSource::Empirical(e), ProfileTarget::Scatter) => Ok(e.scatter_depth(m)?.value),
            (DepthSource::Empirical(e), ProfileTarget::Concentration) => {
                Ok(e.scatter_depth(&m.inverse())?.value)
            }
            (DepthSource::Empirical(e), ProfileTarget::Shape) => Ok(shape_depth_on(e, m)?.value),
            (DepthSource::Model(p), ProfileTarget::Scatter) => p.scatter_depth(m),
            (DepthSource::Model(p), ProfileTarget::Concentration) => p.scatter_depth(&m.inverse()),
            (DepthSource::Model(p), ProfileTarget::Shape) => p.shape_depth(m),
        }
    }
}

/// Depth along a path on a uniform grid, with the quasi-concavity verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathProfile {
    pub kind: PathKind,
    pub a: SpdMatrix,
    pub b: SpdMatrix,
    pub target: ProfileTarget,
    pub ts: Vec<f64>,
    pub values: Vec<f64>,
    pub quasi_concave: bool,
    /// First grid point below `min(values[0], values[m-1])`, and by how much.
    pub first_violation: Option<(f64, f64)>,
    /// Largest shortfall below the endpoint minimum (0 when quasi-concave).
    pub max_deficit: f64,
    /// Largest shortfall of a grid point below the smaller of the best values
    /// on either side of it; a dip inside any sub-arc shows up here even when
    /// the endpoints are lower.
    pub max_arc_deficit: f64,
}

impl PathProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,depth\n");
        for (t, v) in self.ts.iter().zip(&self.values) {
            out.push_str(&format!("{t},{v}\n"));
        }
        out
    }
}

pub const QUASI_CONCAVE_SLACK: f64 = 1e-12;

pub fn depth_along_path(
    source: DepthSource<'_>,
    path: &PathSpec,
    m: usize,
    target: ProfileTarget,
) -> Result<PathProfile> {
    if m < 3 {
        return Err(DepthError::InvalidArgument(
            "path grid needs at least 3 points".into(),
        ));
    }
    let ts: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
    let values = ts
        .iter()
        .map(|&t| source.eval(target, &path.point(t)?))
        .collect::<Result<Vec<f64>>>()?;
    let floor = values[0].min(values[m - 1]);
    let mut first_violation = None;
    let mut max_deficit: f64 = 0.0;
    for (t, v) in ts.iter().zip(&values) {
        let deficit = floor - v;
        if deficit > QUASI_CONCAVE_SLACK {
            first_violation.get_or_insert((*t, deficit));
            max_deficit = max_deficit.max(deficit);
        }
    }
    let max_arc_deficit = arc_deficit(&values);
    Ok(PathProfile {
        kind: path.kind(),
        a: path.a().clone(),
        b: path.b().clone(),
        target,
        ts,
        values,
        quasi_concave: first_violation.is_none(),
        first_violation,
        max_deficit,
        max_arc_deficit,
    })
}

/// `max_j min(max_{i≤j} f_i, max_{l≥j} f_l) − f_j`.
fn arc_deficit(values: &[f64]) -> f64 {
    let mut right = values.to_vec();
    for j in (0..values.len().saturating_sub(1)).rev() {
        right[j] = right[j].max(right[j + 1]);
    }
    let mut left = f64::NEG_INFINITY;
    let mut worst: f64 = 0.0;
    for (j, &v) in values.iter().enumerate() {
        left = left.max(v);
        worst = worst.max(left.min(right[j]) - v);
    }
    worst
}

/// Geodesic distance from the result to a reference, for reporting.
pub fn distance_to(result: &DeepestResult, reference: &SpdMatrix) -> Result<f64> {
    geodesic_distance(&result.argmax, reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth::scatter_depth;
    use crate::location::msd_interval;
    use crate::oracles::{gaussian_scatter_depth, msd_constant};
    use crate::spd::frobenius_distance;

    fn origin(k: usize) -> LocationSpec {
        LocationSpec::Fixed(vec![0.0; k])
    }

    fn quick() -> SearchOptions {
        SearchOptions {
            max_directions: 500,
            ..Default::default()
        }
    }

    #[test]
    fn univariate_deepest_is_msd_level() {
        let x = [-2.5, -1.0, -0.2, 0.3, 0.9, 1.7, 4.0, -3.1, 0.05];
        let d = Dataset::univariate(&x).unwrap();
        let r = deepest_scatter(&d, &origin(1), &DirectionBudget::uniform(4, 0), &quick()).unwrap();
        // brute force over Σ = squared deviations and midpoints
        let mut c: Vec<f64> = x.iter().map(|v| v * v).collect();
        c.sort_by(f64::total_cmp);
        let mids: Vec<f64> = c.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        c.extend(mids);
        let brute = c
            .iter()
            .map(|&s| {
                let i = x.iter().filter(|v| v.abs() <= s.sqrt()).count();
                let o = x.iter().filter(|v| v.abs() >= s.sqrt()).count();
                i.min(o)
            })
            .max()
            .unwrap();
        assert_eq!(r.value, brute as f64 / 9.0);
        let m = msd_interval(&x, 0.0).unwrap();
        let s = r.argmax.get(0, 0);
        assert!(m.lo <= s && s <= m.hi, "{s} not in [{}, {}]", m.lo, m.hi);
    }

    #[test]
    fn gaussian_deepest_scatter() {
        let model = EllipticalModel::gaussian(SpdMatrix::identity(2));
        let data = model
            .sample(2000, &mut stream_rng(1, Stream::Search, 0))
            .unwrap();
        let dirs = DirectionBudget::uniform(1000, 0);
        let r = deepest_scatter(&data, &LocationSpec::TukeyMedian, &dirs, &quick()).unwrap();
        assert!((0.46..=0.5).contains(&r.value), "{}", r.value);
        let f = frobenius_distance(&r.argmax, &SpdMatrix::identity(2)).unwrap();
        assert!(f <= 0.15, "frobenius {f}");
        // the result is reproducible and value matches a recomputation
        let again = deepest_scatter(&data, &LocationSpec::TukeyMedian, &dirs, &quick()).unwrap();
        assert_eq!(r, again);
        let recomputed = scatter_depth(
            &data,
            &LocationSpec::TukeyMedian,
            &r.argmax,
            &DirectionBudget::uniform(500, 0),
        )
        .unwrap();
        assert_eq!(recomputed.value, r.value);
        assert!(r.representative_value + 1.0 / 2000.0 >= r.value);
        assert!(r.near_maximizers.len() >= 1);
    }

    #[test]
    fn value_dominates_starts() {
        let model = EllipticalModel::cauchy(SpdMatrix::identity(2));
        let data = model
            .sample(300, &mut stream_rng(2, Stream::Search, 0))
            .unwrap();
        let dirs = DirectionBudget::uniform(300, 1);
        let opts = SearchOptions {
            max_directions: 300,
            ..Default::default()
        };
        let r = deepest_scatter(&data, &origin(2), &dirs, &opts).unwrap();
        for s in starting_points(&data, &opts) {
            let v = scatter_depth(&data, &origin(2), &s, &dirs).unwrap().value;
            assert!(r.value >= v);
        }
        let i = scatter_depth(
            &data,
            &origin(2),
            &SpdMatrix::scaled_identity(2, 2f64.sqrt()),
            &dirs,
        )
        .unwrap()
        .value;
        assert!(r.value >= i - 0.02);
    }

    #[test]
    fn monotone_along_rays_from_deepest() {
        let model = EllipticalModel::gaussian(SpdMatrix::identity(2));
        let data = model
            .sample(400, &mut stream_rng(3, Stream::Search, 0))
            .unwrap();
        let dirs = DirectionBudget::uniform(400, 2);
        let opts = SearchOptions {
            max_directions: 400,
            ..Default::default()
        };
        let r = deepest_scatter(&data, &origin(2), &dirs, &opts).unwrap();
        let eng = DepthEngine::new(&data, &origin(2), &dirs.capped(400)).unwrap();
        let tol = 1.0 / 400.0 + 1e-12;
        for b in [
            SpdMatrix::from_diagonal(&[5.0, 0.2]).unwrap(),
            SpdMatrix::from_row_slice(2, &[0.3, 0.1, 0.1, 4.0]).unwrap(),
        ] {
            let p = PathSpec::new(r.argmax.clone(), b, PathKind::Linear).unwrap();
            let vals: Vec<f64> = (0..=40)
                .map(|i| {
                    eng.scatter_depth(&p.point(i as f64 / 40.0).unwrap())
                        .unwrap()
                        .value
                })
                .collect();
            for w in vals.windows(2) {
                assert!(w[1] <= w[0] + tol, "{vals:?}");
            }
        }
    }

    #[test]
    fn deepest_shape_spherical() {
        let model =
            EllipticalModel::gaussian(SpdMatrix::from_row_slice(2, &[3.0, 1.0, 1.0, 1.0]).unwrap());
        let data = model
            .sample(1500, &mut stream_rng(4, Stream::Search, 0))
            .unwrap();
        let dirs = DirectionBudget::uniform(800, 0);
        let r = deepest_shape(
            &data,
            &LocationSpec::TukeyMedian,
            ScaleFunctional::Tr,
            &dirs,
            &quick(),
        )
        .unwrap();
        assert!((ScaleFunctional::Tr.value(&r.argmax) - 1.0).abs() < 1e-10);
        let truth = SpdMatrix::from_row_slice(2, &[1.5, 0.5, 0.5, 0.5]).unwrap();
        let dg = geodesic_distance(&r.argmax, &truth).unwrap();
        assert!(dg < 0.35, "{dg}");
        assert!((ScaleFunctional::Tr.value(&r.representative) - 1.0).abs() < 1e-10);
        assert!(r.sigma2.unwrap() > 0.0);
    }

    #[test]
    fn degenerate_data_is_rejected() {
        let d = Dataset::from_rows(&[[1.0, 2.0]; 5]).unwrap();
        assert!(matches!(
            deepest_scatter(
                &d,
                &LocationSpec::CoordMedian,
                &DirectionBudget::uniform(10, 0),
                &quick()
            ),
            Err(DepthError::Degenerate(_))
        ));
    }

    #[test]
    fn analytic_profiles() {
        let model = EllipticalModel::gaussian(SpdMatrix::identity(2));
        let far = SpdMatrix::from_diagonal(&[0.001, 20.0]).unwrap();
        for kind in [PathKind::Linear, PathKind::Geodesic, PathKind::Harmonic] {
            let p = PathSpec::new(SpdMatrix::identity(2), far.clone(), kind).unwrap();
            let prof =
                depth_along_path(DepthSource::Model(&model), &p, 101, ProfileTarget::Scatter)
                    .unwrap();
            assert!(prof.quasi_concave, "{kind:?}");
            assert_eq!(prof.ts.len(), 101);
            assert_eq!((prof.ts[0], prof.ts[100]), (0.0, 1.0));
            assert!((prof.values[0] - 0.5).abs() < 1e-12);
            let g = gaussian_scatter_depth(&SpdMatrix::identity(2), &far).unwrap();
            assert!((prof.values[100] - g).abs() < 1e-15);
        }
        let p = PathSpec::new(SpdMatrix::identity(2), far, PathKind::Linear).unwrap();
        assert!(
            depth_along_path(DepthSource::Model(&model), &p, 2, ProfileTarget::Scatter).is_err()
        );
    }

    #[test]
    fn violation_is_reported() {
        // a sample whose depth dips in the middle of a geodesic path
        let mut rows = Vec::new();
        let b = msd_constant();
        for i in 0..60 {
            let a = i as f64 * 0.37;
            rows.push([a.cos() / b, a.sin() / b]);
        }
        for i in 0..30 {
            let s = if i % 2 == 0 { 4.0 } else { -4.0 };
            rows.push([
                0.05 * ((i as f64) * 1.3).sin(),
                s + 0.05 * ((i as f64) * 0.7).cos(),
            ]);
        }
        let data = Dataset::from_rows(&rows).unwrap();
        let eng = DepthEngine::new(&data, &origin(2), &DirectionBudget::uniform(2000, 0)).unwrap();
        let p = PathSpec::new(
            SpdMatrix::identity(2),
            SpdMatrix::from_diagonal(&[0.001, 20.0]).unwrap(),
            PathKind::Geodesic,
        )
        .unwrap();
        let prof = depth_along_path(
            DepthSource::Empirical(&eng),
            &p,
            101,
            ProfileTarget::Scatter,
        )
        .unwrap();
        if let Some((t, d)) = prof.first_violation {
            assert!(!prof.quasi_concave && t > 0.0 && t < 1.0 && d > 0.0 && prof.max_deficit >= d);
        } else {
            assert!(prof.quasi_concave && prof.max_deficit == 0.0);
        }
        assert!(prof.max_arc_deficit >= prof.max_deficit);
        assert!(prof.to_csv().starts_with("t,depth\n0,"));
    }

    #[test]
    fn arc_deficit_sees_interior_dips() {
        // endpoints are the lowest values, but 2 sits between 5 and 4
        assert_eq!(arc_deficit(&[3.0, 5.0, 2.0, 4.0, 1.0]), 2.0);
        assert_eq!(arc_deficit(&[1.0, 2.0, 3.0, 2.0, 0.0]), 0.0);
        assert_eq!(arc_deficit(&[4.0, 1.0, 1.0, 3.0]), 2.0);
        assert_eq!(arc_deficit(&[1.0]), 0.0);
    }
}
