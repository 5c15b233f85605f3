//! Direction sets over the unit sphere shared by every depth computation.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{DepthError, Result};
use crate::rng::{stream_rng, Stream};

/// Matches the Monte Carlo protocol used to validate the closed forms.
pub const DEFAULT_DIRECTIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DirectionScheme {
    /// Normalized standard Gaussian draws.
    UniformSphere,
    /// Gaussian draws, each followed by its antipode.
    Antipodal,
    /// All critical angles on the circle; exact infimum, `k = 2` only.
    Exact2D,
}

/// How the infimum over unit directions is approximated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionBudget {
    pub count: usize,
    pub seed: u64,
    pub scheme: DirectionScheme,
}

impl Default for DirectionBudget {
    fn default() -> Self {
        Self {
            count: DEFAULT_DIRECTIONS,
            seed: 0,
            scheme: DirectionScheme::UniformSphere,
        }
    }
}

impl DirectionBudget {
    pub fn new(count: usize, seed: u64, scheme: DirectionScheme) -> Result<Self> {
        if count == 0 {
            return Err(DepthError::InvalidArgument(
                "direction count must be ≥ 1".into(),
            ));
        }
        Ok(Self {
            count,
            seed,
            scheme,
        })
    }

    pub fn uniform(count: usize, seed: u64) -> Self {
        Self::new(count, seed, DirectionScheme::UniformSphere).expect("count must be ≥ 1")
    }

    pub fn exact_2d() -> Self {
        Self {
            count: 1,
            seed: 0,
            scheme: DirectionScheme::Exact2D,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.scheme == DirectionScheme::Exact2D
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if self.count == 0 {
            return Err(DepthError::InvalidArgument(
                "direction count must be ≥ 1".into(),
            ));
        }
        if self.is_exact() && k != 2 {
            return Err(DepthError::InvalidArgument(format!(
                "exact 2-D directions requested for dimension {k}"
            )));
        }
        Ok(())
    }

    /// Same scheme and seed with at most `cap` directions.
    pub fn capped(&self, cap: usize) -> Self {
        Self {
            count: self.count.min(cap).max(1),
            ..*self
        }
    }

    /// Materializes the direction set in dimension `k`.
    pub fn generate(&self, k: usize) -> Result<Directions> {
        self.validate(k)?;
        let mut rng = stream_rng(self.seed, Stream::Directions, k as u64);
        let mut draw = || -> Vec<f64> {
            loop {
                let g: Vec<f64> = (0..k)
                    .map(|_| rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    return g.into_iter().map(|v| v / norm).collect();
                }
            }
        };
        let mut data = Vec::with_capacity(self.count * k);
        match self.scheme {
            DirectionScheme::UniformSphere => {
                for _ in 0..self.count {
                    data.extend(draw());
                }
            }
            DirectionScheme::Antipodal => {
                while data.len() < self.count * k {
                    let u = draw();
                    data.extend(u.iter().copied());
                    if data.len() < self.count * k {
                        data.extend(u.iter().map(|v| -v));
                    }
                }
            }
            DirectionScheme::Exact2D => {
                return Err(DepthError::InvalidArgument(
                    "exact 2-D scheme has no finite direction set".into(),
                ))
            }
        }
        Ok(Directions { k, data })
    }
}

/// A finite set of unit directions, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Directions {
    k: usize,
    data: Vec<f64>,
}

impl Directions {
    /// Wraps explicit directions; each row is normalized.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let k = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| DepthError::InvalidArgument("empty direction set".into()))?;
        let mut data = Vec::with_capacity(rows.len() * k);
        for r in rows {
            let r = r.as_ref();
            crate::error::check_dim(k, r.len())?;
            let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(DepthError::InvalidArgument(
                    "zero or non-finite direction".into(),
                ));
            }
            data.extend(r.iter().map(|v| v / norm));
        }
        Ok(Self { k, data })
    }

    /// Unit directions at angles `φ`, in the plane.
    pub fn from_angles(angles: &[f64]) -> Self {
        let data = angles.iter().flat_map(|a| [a.cos(), a.sin()]).collect();
        Self { k: 2, data }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.k)
    }
}
