//! Closed-form depths for Gaussian, elliptical and independent-Cauchy models.
//!
//! Gaussian models are standardized so that `MSD[Z₁] = 1`, i.e. `Z = W / b`
//! with `W` standard normal and `b = Φ⁻¹(3/4)`. The independent-Cauchy model
//! with scatter `Σ0` is the law of `θ0 + Σ0^{1/2} Z` with i.i.d. standard
//! Cauchy marginals in `Z`; the median of `|Z₁|` is already 1.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Cauchy, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal, StudentsT};

use crate::dataset::Dataset;
use crate::error::{check_dim, DepthError, Result};
use crate::spd::SpdMatrix;

/// Largest dimension accepted by sign-vector enumeration.
pub const MAX_SIGN_DIM: usize = 20;

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

pub fn normal_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

/// `Φ⁻¹(p)`, polished by one Newton step.
pub fn normal_quantile(p: f64) -> f64 {
    let n = std_normal();
    let q = n.inverse_cdf(p);
    if !q.is_finite() {
        return q;
    }
    let d = n.pdf(q);
    if d > 0.0 {
        q - (n.cdf(q) - p) / d
    } else {
        q
    }
}

/// `b = Φ⁻¹(3/4)`, the MSD standardization constant.
pub fn msd_constant() -> f64 {
    normal_quantile(0.75)
}

/// Standard Cauchy cdf `Ψ(t) = 1/2 + arctan(t)/π`.
pub fn cauchy_cdf(t: f64) -> f64 {
    0.5 + t.atan() / PI
}

pub fn cauchy_quantile(p: f64) -> f64 {
    (PI * (p - 0.5)).tan()
}

/// Cdf `G` of `|Z₁|` for an elliptical generator standardized to `MSD = 1`.
#[derive(Clone)]
pub struct RadialCdf {
    name: String,
    cdf: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for RadialCdf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialCdf")
            .field("name", &self.name)
            .finish()
    }
}

impl RadialCdf {
    /// Wraps a caller-supplied cdf; `G(1)` should equal `1/2`.
    pub fn new(name: impl Into<String>, cdf: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            cdf: Arc::new(cdf),
        }
    }

    pub fn gaussian_msd() -> Self {
        let b = msd_constant();
        Self::new("gaussian", move |t| {
            if t <= 0.0 {
                0.0
            } else {
                2.0 * normal_cdf(b * t) - 1.0
            }
        })
    }

    /// Student `t_ν` rescaled so that the median of `|Z₁|` is 1.
    pub fn student_t_msd(nu: f64) -> Result<Self> {
        let t = StudentsT::new(0.0, 1.0, nu)
            .map_err(|e| DepthError::InvalidArgument(format!("student t: {e}")))?;
        let q = t.inverse_cdf(0.75);
        Ok(Self::new(format!("t{nu}"), move |x| {
            if x <= 0.0 {
                0.0
            } else {
                2.0 * t.cdf(q * x) - 1.0
            }
        }))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.cdf)(t)
    }

    /// Whether the median of `|Z₁|` is 1, i.e. `G(1) = 1/2` within `tol`.
    pub fn is_msd_standardized(&self, tol: f64) -> bool {
        (self.eval(1.0) - 0.5).abs() <= tol
    }
}

#[derive(Debug, Clone)]
pub enum ModelKind {
    GaussianMsd,
    IndependentCauchy,
    GenericElliptical(RadialCdf),
}

/// A reference distribution with location `θ0` and scatter `Σ0`.
#[derive(Debug, Clone)]
pub struct EllipticalModel {
    pub kind: ModelKind,
    pub location: Vec<f64>,
    pub scatter: SpdMatrix,
}

impl EllipticalModel {
    pub fn gaussian(scatter: SpdMatrix) -> Self {
        Self::centered(ModelKind::GaussianMsd, scatter)
    }

    pub fn cauchy(scatter: SpdMatrix) -> Self {
        Self::centered(ModelKind::IndependentCauchy, scatter)
    }

    pub fn elliptical(g: RadialCdf, scatter: SpdMatrix) -> Self {
        Self::centered(ModelKind::GenericElliptical(g), scatter)
    }

    fn centered(kind: ModelKind, scatter: SpdMatrix) -> Self {
        Self {
            kind,
            location: vec![0.0; scatter.dim()],
            scatter,
        }
    }

    pub fn with_location(mut self, location: Vec<f64>) -> Result<Self> {
        check_dim(self.scatter.dim(), location.len())?;
        self.location = location;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.scatter.dim()
    }

    /// Population scatter depth of `Σ`.
    pub fn scatter_depth(&self, sigma: &SpdMatrix) -> Result<f64> {
        match &self.kind {
            ModelKind::GaussianMsd => gaussian_scatter_depth(&self.scatter, sigma),
            ModelKind::IndependentCauchy => cauchy_scatter_depth(&self.standardize(sigma)?),
            ModelKind::GenericElliptical(g) => elliptical_scatter_depth(g, &self.scatter, sigma),
        }
    }

    /// Population shape depth of `V` (any normalization).
    pub fn shape_depth(&self, shape: &SpdMatrix) -> Result<f64> {
        match &self.kind {
            ModelKind::GaussianMsd => gaussian_shape_depth(&self.scatter, shape),
            ModelKind::IndependentCauchy => cauchy_shape_depth(&self.standardize(shape)?),
            ModelKind::GenericElliptical(_) => Err(DepthError::InvalidArgument(
                "shape depth oracle needs a Gaussian or Cauchy model".into(),
            )),
        }
    }

    /// `Σ0^{-1/2} Σ Σ0^{-1/2}`, the scatter seen by the standardized model.
    fn standardize(&self, sigma: &SpdMatrix) -> Result<SpdMatrix> {
        check_dim(self.dim(), sigma.dim())?;
        sigma.congruence(self.scatter.inv_sqrt().entries())
    }

    /// `n` draws `θ0 + Σ0^{1/2} Z`.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Dataset> {
        let k = self.dim();
        let root = self.scatter.sqrt();
        let b = msd_constant();
        let cauchy = Cauchy::new(0.0, 1.0).expect("standard cauchy");
        let mut obs = Vec::with_capacity(n * k);
        for _ in 0..n {
            let z: DVector<f64> = match &self.kind {
                ModelKind::GaussianMsd => {
                    DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal) / b)
                }
                ModelKind::IndependentCauchy => DVector::from_fn(k, |_, _| rng.sample(cauchy)),
                ModelKind::GenericElliptical(_) => {
                    return Err(DepthError::InvalidArgument(
                        "sampling a generic elliptical model is not supported".into(),
                    ))
                }
            };
            let x = root.entries() * z;
            obs.extend(x.iter().zip(&self.location).map(|(a, t)| a + t));
        }
        Dataset::new(k, obs)
    }
}

/// `Σ_ℓ = O_k Λ_ℓ O_kᵀ` for `Λ = diag(8, I), I, diag(1/8, I)`, where `O_k`
/// rotates the first two coordinates by 45°.
pub fn validation_scatters(k: usize) -> Result<[SpdMatrix; 3]> {
    if k < 2 {
        return Err(DepthError::InvalidArgument(
            "validation matrices need k ≥ 2".into(),
        ));
    }
    let mut o = DMatrix::identity(k, k);
    let r = 0.5f64.sqrt();
    o[(0, 0)] = r;
    o[(0, 1)] = r;
    o[(1, 0)] = -r;
    o[(1, 1)] = r;
    let with_first = |v: f64| {
        let mut d = vec![1.0; k];
        d[0] = v;
        SpdMatrix::from_diagonal(&d)?.congruence(&o)
    };
    Ok([
        with_first(8.0)?,
        SpdMatrix::identity(k),
        with_first(1.0 / 8.0)?,
    ])
}

/// `2 min(Φ(b √λ_k) − 1/2, 1 − Φ(b √λ_1))` on the spectrum of `Σ0⁻¹Σ`.
pub fn gaussian_scatter_depth(sigma0: &SpdMatrix, sigma: &SpdMatrix) -> Result<f64> {
    let lam = sigma0.relative_eigenvalues(sigma)?;
    let b = msd_constant();
    let inner = normal_cdf(b * lam[lam.len() - 1].sqrt()) - 0.5;
    let outer = 1.0 - normal_cdf(b * lam[0].sqrt());
    Ok(2.0 * inner.min(outer))
}

/// Gaussian depth regions in terms of the spectrum of `Σ0⁻¹Σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "region", rename_all = "lowercase")]
pub enum SpectralRegion {
    /// `α ≤ 0`: every scatter matrix.
    Full,
    /// `Σ ∈ R(α)` iff `Sp(Σ0⁻¹Σ) ⊆ [lo, hi]`.
    Interval { lo: f64, hi: f64 },
    /// `α > 1/2`: no scatter matrix.
    Empty,
}

impl SpectralRegion {
    pub fn contains_spectrum(&self, eigenvalues: &[f64]) -> bool {
        match *self {
            SpectralRegion::Full => true,
            SpectralRegion::Empty => false,
            SpectralRegion::Interval { lo, hi } => eigenvalues.iter().all(|&l| lo <= l && l <= hi),
        }
    }
}

/// `[(Φ⁻¹(1/2+α/2)/b)², (Φ⁻¹(1−α/2)/b)²]`.
pub fn gaussian_region_bounds(alpha: f64) -> Result<SpectralRegion> {
    if alpha.is_nan() {
        return Err(DepthError::NonFinite("alpha".into()));
    }
    if alpha <= 0.0 {
        return Ok(SpectralRegion::Full);
    }
    if alpha > 0.5 {
        return Ok(SpectralRegion::Empty);
    }
    let b = msd_constant();
    let lo = (normal_quantile(0.5 + 0.5 * alpha) / b).powi(2);
    let hi = (normal_quantile(1.0 - 0.5 * alpha) / b).powi(2);
    Ok(SpectralRegion::Interval { lo, hi })
}

/// Extremes of `vᵀΣv` over the unit L1 sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Extrema {
    /// `max diag(Σ)`, attained at `e_argmax`.
    pub max_val: f64,
    pub argmax: usize,
    /// `1 / max_s sᵀΣ⁻¹s`, attained at `v ∝ Σ⁻¹s` for `s = argmin_sign`.
    pub min_val: f64,
    pub argmin_sign: Vec<f64>,
    /// `max_s sᵀΣ⁻¹s` itself.
    pub max_sign_form: f64,
}

/// Maximum of `sᵀMs` over sign vectors with `s_k = +1`, by Gray-code walk.
fn max_sign_form(m: &DMatrix<f64>) -> Result<(f64, Vec<f64>)> {
    let k = m.nrows();
    if k > MAX_SIGN_DIM {
        return Err(DepthError::TooLarge {
            k,
            max: MAX_SIGN_DIM,
        });
    }
    let mut s = vec![1.0; k];
    let mut w: Vec<f64> = (0..k).map(|i| m.row(i).sum()).collect();
    let mut q: f64 = w.iter().sum();
    let mut best = (q, 0u64);
    let mut code = 0u64;
    for step in 1..(1u64 << (k - 1)) {
        let j = step.trailing_zeros() as usize;
        code ^= 1 << j;
        let sj = s[j];
        q += -4.0 * sj * w[j] + 4.0 * m[(j, j)];
        for (i, wi) in w.iter_mut().enumerate() {
            *wi -= 2.0 * sj * m[(i, j)];
        }
        s[j] = -sj;
        if q > best.0 {
            best = (q, code);
        }
    }
    let sign: Vec<f64> = (0..k)
        .map(|j| if best.1 >> j & 1 == 1 { -1.0 } else { 1.0 })
        .collect();
    let sv = DVector::from_column_slice(&sign);
    let exact = (sv.transpose() * m * &sv)[(0, 0)];
    Ok((exact, sign))
}

pub fn l1_sphere_extrema(sigma: &SpdMatrix) -> Result<L1Extrema> {
    let inv = sigma.inverse();
    let (q, sign) = max_sign_form(inv.entries())?;
    let argmax = (0..sigma.dim())
        .max_by(|&a, &b| sigma.get(a, a).total_cmp(&sigma.get(b, b)).then(b.cmp(&a)))
        .expect("nonempty");
    Ok(L1Extrema {
        max_val: sigma.get(argmax, argmax),
        argmax,
        min_val: 1.0 / q,
        argmin_sign: sign,
        max_sign_form: q,
    })
}

/// Depth of `Σ` under independent standard Cauchy marginals (location 0).
pub fn cauchy_scatter_depth(sigma: &SpdMatrix) -> Result<f64> {
    let e = l1_sphere_extrema(sigma)?;
    let inner = cauchy_cdf(e.min_val.sqrt()) - 0.5;
    let outer = 1.0 - cauchy_cdf(e.max_val.sqrt());
    Ok(2.0 * inner.min(outer))
}

/// `Σ ∈ R(α)` for the independent-Cauchy model.
pub fn cauchy_region_check(sigma: &SpdMatrix, alpha: f64) -> Result<bool> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(DepthError::InvalidArgument(format!(
            "alpha {alpha} outside (0, 1)"
        )));
    }
    let e = l1_sphere_extrema(sigma)?;
    let inner = cauchy_quantile(0.5 + 0.5 * alpha).powi(2);
    let outer = cauchy_quantile(1.0 - 0.5 * alpha).powi(2);
    Ok(e.min_val >= inner && e.max_val <= outer)
}

/// `inf_{z ∈ {λ_1, λ_k}} min(G(√z), 1 − G(√z))` on the spectrum of `Σ0⁻¹Σ`.
pub fn elliptical_scatter_depth(
    g: &RadialCdf,
    sigma0: &SpdMatrix,
    sigma: &SpdMatrix,
) -> Result<f64> {
    let lam = sigma0.relative_eigenvalues(sigma)?;
    let mut best = f64::INFINITY;
    for z in [lam[0], lam[lam.len() - 1]] {
        let v = g.eval(z.sqrt());
        if !(0.0..=1.0).contains(&v) {
            return Err(DepthError::InvalidArgument(format!(
                "radial cdf returned {v}"
            )));
        }
        best = best.min(v.min(1.0 - v));
    }
    Ok(best)
}

/// Gaussian shape depth `2Φ(c √λ_k) − 1`, with `c` balancing the two sides.
pub fn gaussian_shape_depth(v0: &SpdMatrix, v: &SpdMatrix) -> Result<f64> {
    let lam = v0.relative_eigenvalues(v)?;
    let (l1, lk) = (lam[0], lam[lam.len() - 1]);
    if l1 - lk <= 1e-12 * l1 {
        return Ok(0.5);
    }
    let (r1, rk) = (l1.sqrt(), lk.sqrt());
    let gap = |c: f64| normal_cdf(c * rk) - 0.5 - (1.0 - normal_cdf(c * r1));
    let (mut lo, mut hi) = (0.0, 10.0 * msd_constant() / rk);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    let c = 0.5 * (lo + hi);
    Ok(2.0 * normal_cdf(c * rk) - 1.0)
}

/// `(2/π) arctan((max_s sᵀV⁻¹s · max diag V)^{-1/4})`.
pub fn cauchy_shape_depth(v: &SpdMatrix) -> Result<f64> {
    let e = l1_sphere_extrema(v)?;
    Ok(2.0 / PI * (e.max_sign_form * e.max_val).powf(-0.25).atan())
}
