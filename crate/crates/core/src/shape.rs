//! Scale functionals, shape matrices and profile shape depth.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::depth::{DepthEngine, RayProfile};
use crate::directions::DirectionBudget;
use crate::error::{check_dim, DepthError, Result};
use crate::location::LocationSpec;
use crate::spd::SpdMatrix;

/// Normalizations `S` with `S(I) = 1` and `S(cΣ) = c S(Σ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleFunctional {
    /// `tr(Σ)/k`
    Tr,
    /// `det(Σ)^{1/k}`
    Det,
    /// `k / tr(Σ⁻¹)`
    TrStar,
    /// `Σ₁₁`
    S11,
}

impl ScaleFunctional {
    pub fn value(&self, sigma: &SpdMatrix) -> f64 {
        let k = sigma.dim() as f64;
        match self {
            ScaleFunctional::Tr => sigma.trace() / k,
            ScaleFunctional::Det => (sigma.log_determinant() / k).exp(),
            ScaleFunctional::TrStar => k / sigma.eigenvalues().iter().map(|l| 1.0 / l).sum::<f64>(),
            ScaleFunctional::S11 => sigma.get(0, 0),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScaleFunctional::Tr => "tr",
            ScaleFunctional::Det => "det",
            ScaleFunctional::TrStar => "trstar",
            ScaleFunctional::S11 => "s11",
        }
    }
}

impl std::str::FromStr for ScaleFunctional {
    type Err = DepthError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tr" => Ok(ScaleFunctional::Tr),
            "det" => Ok(ScaleFunctional::Det),
            "trstar" | "tr*" => Ok(ScaleFunctional::TrStar),
            "s11" => Ok(ScaleFunctional::S11),
            other => Err(DepthError::Parse(format!(
                "unknown scale functional {other:?}"
            ))),
        }
    }
}

/// A scatter matrix normalized to `S(V) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeMatrix {
    pub v: SpdMatrix,
    pub under: ScaleFunctional,
}

impl ShapeMatrix {
    /// `Σ / S(Σ)`.
    pub fn normalize(sigma: &SpdMatrix, under: ScaleFunctional) -> Self {
        scale_and_shape(sigma, under).1
    }

    /// Checks `S(v) = 1` to `1e-10`.
    pub fn new(v: SpdMatrix, under: ScaleFunctional) -> Result<Self> {
        let s = under.value(&v);
        if (s - 1.0).abs() > 1e-10 {
            return Err(DepthError::InvalidArgument(format!(
                "shape has {}-scale {s}, expected 1",
                under.name()
            )));
        }
        Ok(Self { v, under })
    }

    pub fn matrix(&self) -> &SpdMatrix {
        &self.v
    }

    pub fn dim(&self) -> usize {
        self.v.dim()
    }
}

/// `Σ = σ² V` with `σ² = S(Σ)` and `S(V) = 1`.
pub fn scale_and_shape(sigma: &SpdMatrix, under: ScaleFunctional) -> (f64, ShapeMatrix) {
    let s2 = under.value(sigma);
    let v = sigma.scale(1.0 / s2).expect("scale functional is positive");
    (s2, ShapeMatrix { v, under })
}

/// Profile shape depth: `sup_{σ²>0} HD(σ² V)` and its maximizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeDepth {
    pub value: f64,
    /// `σ²_V`, a maximizing scale.
    pub sigma2: f64,
    /// Maximizing scales found, `[lo, hi]` (a single point outside the exact mode).
    pub sigma2_range: (f64, f64),
    /// False when no positive scale gives nonzero depth; the value is then 0.
    pub attained: bool,
}

/// Shape depth of `V` on an engine; the value is recomputed at the returned scale.
pub fn shape_depth_on(engine: &DepthEngine, shape: &SpdMatrix) -> Result<ShapeDepth> {
    let RayProfile {
        level,
        sigma2,
        sigma2_lo,
        sigma2_hi,
        attained,
    } = engine.ray_profile(shape)?;
    let mut best = (engine.scatter_count(&shape.scale(sigma2)?), sigma2);
    if best.0 < level {
        // degenerate plateau: try its ends
        for s2 in [sigma2_lo, sigma2_hi] {
            if s2 > 0.0 {
                let c = engine.scatter_count(&shape.scale(s2)?);
                if c > best.0 {
                    best = (c, s2);
                }
            }
        }
    }
    Ok(ShapeDepth {
        value: best.0 as f64 / engine.n() as f64,
        sigma2: best.1,
        sigma2_range: (sigma2_lo, sigma2_hi),
        attained,
    })
}

/// `(S, T)`-shape halfspace depth of `V`.
pub fn shape_depth(
    data: &Dataset,
    location: &LocationSpec,
    shape: &ShapeMatrix,
    dirs: &DirectionBudget,
) -> Result<ShapeDepth> {
    check_dim(data.k(), shape.dim())?;
    shape_depth_on(&DepthEngine::new(data, location, dirs)?, &shape.v)
}

/// `V ∈ R^sh(α)`.
pub fn shape_region_contains(
    data: &Dataset,
    location: &LocationSpec,
    shape: &ShapeMatrix,
    alpha: f64,
    dirs: &DirectionBudget,
) -> Result<bool> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(DepthError::InvalidArgument(format!(
            "alpha {alpha} outside [0, 1]"
        )));
    }
    if alpha == 0.0 {
        return Ok(true);
    }
    Ok(shape_depth(data, location, shape, dirs)?.value >= alpha)
}
