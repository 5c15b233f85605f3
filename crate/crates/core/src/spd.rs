//! Symmetric positive-definite matrices and the geometry used on them.
//!
//! Every [`SpdMatrix`] carries its eigendecomposition, sorted with eigenvalues
//! in decreasing order. Matrix functions are evaluated spectrally,
//! `f(A) = O diag(f(λ_1), …, f(λ_k)) Oᵀ`, which gives square roots, logarithms
//! and real powers for free.
//!
//! Three distances/paths are provided between scatter matrices:
//!
//! ```text
//! linear     Σ_t = (1-t) Σ_a + t Σ_b                       d_F = ‖Σ_b - Σ_a‖_F
//! geodesic   Σ_t = Σ_a^½ (Σ_a^-½ Σ_b Σ_a^-½)^t Σ_a^½       d_g = ‖log(Σ_a^-½ Σ_b Σ_a^-½)‖_F
//! harmonic   Σ_t = ((1-t) Σ_a⁻¹ + t Σ_b⁻¹)⁻¹
//! ```

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, DepthError, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const PD_RATIO: f64 = 1e-12;

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted in
/// decreasing order and each eigenvector's first nonzero entry positive.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let k = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = DVector::from_iterator(k, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(k, k);
    for (col, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).clone_owned();
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-14) {
            if *first < 0.0 {
                v.neg_mut();
            }
        }
        vectors.set_column(col, &v);
    }
    (values, vectors)
}

/// `O diag(values) Oᵀ`, symmetrized.
fn reconstruct(vectors: &DMatrix<f64>, values: &[f64]) -> DMatrix<f64> {
    let k = vectors.nrows();
    let mut out = DMatrix::zeros(k, k);
    for (c, &lambda) in values.iter().enumerate() {
        let v = vectors.column(c);
        for j in 0..k {
            let vj = lambda * v[j];
            for i in 0..k {
                out[(i, j)] += v[i] * vj;
            }
        }
    }
    symmetrize(&out)
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Applies `f` spectrally to a symmetric (not necessarily definite) matrix.
pub fn symmetric_function(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
    let (values, vectors) = symmetric_eigen(&symmetrize(m));
    let mapped: Vec<f64> = values.iter().map(|&l| f(l)).collect();
    if let Some(bad) = mapped.iter().find(|v| !v.is_finite()) {
        return Err(DepthError::NonFinite(format!(
            "matrix function produced {bad}"
        )));
    }
    Ok(reconstruct(&vectors, &mapped))
}

/// A `k × k` symmetric positive-definite matrix with cached spectrum.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct SpdMatrix {
    entries: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl fmt::Debug for SpdMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpdMatrix")
            .field("dim", &self.dim())
            .field("entries", &self.entries.as_slice())
            .finish()
    }
}

impl SpdMatrix {
    /// Validates symmetry and positive definiteness.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = entries.shape();
        if rows != cols || rows == 0 {
            return Err(DepthError::NotSquare { rows, cols });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(DepthError::NonFinite("matrix entries".into()));
        }
        let scale = entries.amax().max(f64::MIN_POSITIVE);
        let asym = (&entries - entries.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(DepthError::NotSymmetric { asymmetry: asym });
        }
        let entries = symmetrize(&entries);
        let (eigenvalues, eigenvectors) = symmetric_eigen(&entries);
        let max = eigenvalues[0];
        let min = eigenvalues[rows - 1];
        if !(min > 0.0 && min > PD_RATIO * max) {
            return Err(DepthError::NotPositiveDefinite { min, max });
        }
        Ok(Self {
            entries,
            eigenvalues,
            eigenvectors,
        })
    }

    /// Builds from a row-major slice of `k*k` values.
    pub fn from_row_slice(k: usize, values: &[f64]) -> Result<Self> {
        if values.len() != k * k {
            return Err(DepthError::DimensionMismatch {
                expected: k * k,
                found: values.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(k, k, values))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn identity(k: usize) -> Self {
        Self::scaled_identity(k, 1.0)
    }

    /// `c · I_k`; panics unless `c` is positive and finite.
    pub fn scaled_identity(k: usize, c: f64) -> Self {
        assert!(c > 0.0 && c.is_finite(), "scale must be positive");
        Self {
            entries: DMatrix::from_diagonal_element(k, k, c),
            eigenvalues: DVector::from_element(k, c),
            eigenvectors: DMatrix::identity(k, k),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Eigenvalues in decreasing order.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors as columns, matching [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    pub fn determinant(&self) -> f64 {
        self.eigenvalues.iter().product()
    }

    pub fn log_determinant(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.ln()).sum()
    }

    pub fn max_diagonal(&self) -> f64 {
        self.entries
            .diagonal()
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `uᵀ Σ u`, evaluated from the stored entries.
    #[inline]
    pub fn quad_form(&self, u: &[f64]) -> f64 {
        let k = self.dim();
        let mut acc = 0.0;
        for i in 0..k {
            let mut row = 0.0;
            for j in 0..k {
                row += self.entries[(i, j)] * u[j];
            }
            acc += u[i] * row;
        }
        acc
    }

    /// `f(Σ)` as a symmetric matrix.
    pub fn matrix_function(&self, f: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
        let mapped: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        if let Some(bad) = mapped.iter().find(|v| !v.is_finite()) {
            return Err(DepthError::NonFinite(format!(
                "matrix function produced {bad}"
            )));
        }
        Ok(reconstruct(&self.eigenvectors, &mapped))
    }

    /// `f(Σ)` for a positive `f`, reusing the eigenvectors.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Result<SpdMatrix> {
        let mapped: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        if mapped.iter().any(|v| !v.is_finite()) {
            return Err(DepthError::NonFinite("matrix function".into()));
        }
        SpdMatrix::new(reconstruct(&self.eigenvectors, &mapped))
    }

    pub fn inverse(&self) -> SpdMatrix {
        self.map_spectrum(|l| 1.0 / l)
            .expect("inverse of an SPD matrix is SPD")
    }

    pub fn sqrt(&self) -> SpdMatrix {
        self.map_spectrum(f64::sqrt)
            .expect("square root of SPD is SPD")
    }

    pub fn inv_sqrt(&self) -> SpdMatrix {
        self.map_spectrum(|l| 1.0 / l.sqrt())
            .expect("inverse square root of SPD is SPD")
    }

    pub fn powf(&self, t: f64) -> Result<SpdMatrix> {
        self.map_spectrum(|l| l.powf(t))
    }

    pub fn log(&self) -> DMatrix<f64> {
        self.matrix_function(f64::ln).expect("log of SPD is finite")
    }

    /// `exp(S)` of a symmetric matrix.
    pub fn exp_symmetric(s: &DMatrix<f64>) -> Result<SpdMatrix> {
        SpdMatrix::new(symmetric_function(s, f64::exp)?)
    }

    pub fn scale(&self, c: f64) -> Result<SpdMatrix> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(DepthError::InvalidArgument(format!(
                "scale factor must be positive, got {c}"
            )));
        }
        Ok(SpdMatrix {
            entries: &self.entries * c,
            eigenvalues: &self.eigenvalues * c,
            eigenvectors: self.eigenvectors.clone(),
        })
    }

    /// `M Σ Mᵀ`.
    pub fn congruence(&self, m: &DMatrix<f64>) -> Result<SpdMatrix> {
        check_dim(self.dim(), m.ncols())?;
        SpdMatrix::new(symmetrize(&(m * &self.entries * m.transpose())))
    }

    /// Eigenvalues of `self⁻¹ other`, via the symmetric pencil
    /// `self^{-1/2} other self^{-1/2}`, in decreasing order.
    pub fn relative_eigenvalues(&self, other: &SpdMatrix) -> Result<DVector<f64>> {
        check_dim(self.dim(), other.dim())?;
        let w = self.inv_sqrt();
        let m = symmetrize(&(w.entries() * other.entries() * w.entries()));
        Ok(symmetric_eigen(&m).0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("matrix serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Row-major CSV, one matrix row per line, no header.
    pub fn to_csv(&self) -> String {
        let k = self.dim();
        let mut out = String::new();
        for i in 0..k {
            let row: Vec<String> = (0..k)
                .map(|j| format!("{}", self.entries[(i, j)]))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(s: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(s.as_bytes());
        let mut values = Vec::new();
        let mut rows = 0;
        for record in reader.records() {
            let record = record?;
            for field in record.iter() {
                values.push(
                    field
                        .parse::<f64>()
                        .map_err(|e| DepthError::Parse(format!("{field:?}: {e}")))?,
                );
            }
            rows += 1;
        }
        Self::from_row_slice(rows, &values)
    }

    /// Reads JSON or CSV depending on the file extension (JSON by default).
    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Self::from_csv(&text),
            _ => Self::from_json(&text),
        }
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => self.to_csv(),
            _ => self.to_json(),
        };
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Wire format: `{"dim": k, "entries": [row-major k*k values]}`.
#[derive(Serialize, Deserialize)]
struct MatrixJson {
    dim: usize,
    entries: Vec<f64>,
}

impl TryFrom<MatrixJson> for SpdMatrix {
    type Error = DepthError;

    fn try_from(m: MatrixJson) -> Result<Self> {
        SpdMatrix::from_row_slice(m.dim, &m.entries)
    }
}

impl From<SpdMatrix> for MatrixJson {
    fn from(m: SpdMatrix) -> Self {
        let k = m.dim();
        let entries = (0..k)
            .flat_map(|i| (0..k).map(move |j| (i, j)))
            .map(|(i, j)| m.entries[(i, j)])
            .collect();
        MatrixJson { dim: k, entries }
    }
}

/// `‖b - a‖_F`.
pub fn frobenius_distance(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    Ok((b.entries() - a.entries()).norm())
}

/// Affine-invariant Riemannian distance `‖log(a^{-1/2} b a^{-1/2})‖_F`.
pub fn geodesic_distance(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    let rel = a.relative_eigenvalues(b)?;
    Ok(rel.iter().map(|l| l.ln().powi(2)).sum::<f64>().sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Linear,
    Geodesic,
    Harmonic,
}

impl std::str::FromStr for PathKind {
    type Err = DepthError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(PathKind::Linear),
            "geodesic" => Ok(PathKind::Geodesic),
            "harmonic" => Ok(PathKind::Harmonic),
            other => Err(DepthError::Parse(format!("unknown path kind {other:?}"))),
        }
    }
}

/// Endpoints plus interpolation rule.
#[derive(Debug, Clone)]
pub struct PathSpec {
    a: SpdMatrix,
    b: SpdMatrix,
    kind: PathKind,
    // Geodesic: (a^{1/2}, a^{-1/2} b a^{-1/2}); harmonic: (a⁻¹, b⁻¹).
    cache: PathCache,
}

#[derive(Debug, Clone)]
enum PathCache {
    Linear,
    Geodesic { root: SpdMatrix, inner: SpdMatrix },
    Harmonic { a_inv: SpdMatrix, b_inv: SpdMatrix },
}

impl PathSpec {
    pub fn new(a: SpdMatrix, b: SpdMatrix, kind: PathKind) -> Result<Self> {
        check_dim(a.dim(), b.dim())?;
        let cache = match kind {
            PathKind::Linear => PathCache::Linear,
            PathKind::Geodesic => {
                let w = a.inv_sqrt();
                let inner = SpdMatrix::new(symmetrize(&(w.entries() * b.entries() * w.entries())))?;
                PathCache::Geodesic {
                    root: a.sqrt(),
                    inner,
                }
            }
            PathKind::Harmonic => PathCache::Harmonic {
                a_inv: a.inverse(),
                b_inv: b.inverse(),
            },
        };
        Ok(Self { a, b, kind, cache })
    }

    pub fn a(&self) -> &SpdMatrix {
        &self.a
    }

    pub fn b(&self) -> &SpdMatrix {
        &self.b
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    /// The point at parameter `t ∈ [0, 1]`.
    pub fn point(&self, t: f64) -> Result<SpdMatrix> {
        if !(0.0..=1.0).contains(&t) {
            return Err(DepthError::InvalidArgument(format!(
                "path parameter {t} outside [0, 1]"
            )));
        }
        match &self.cache {
            PathCache::Linear => {
                SpdMatrix::new(self.a.entries() * (1.0 - t) + self.b.entries() * t)
            }
            PathCache::Geodesic { root, inner } => {
                let p = inner.powf(t)?;
                SpdMatrix::new(symmetrize(&(root.entries() * p.entries() * root.entries())))
            }
            PathCache::Harmonic { a_inv, b_inv } => {
                let conc = SpdMatrix::new(a_inv.entries() * (1.0 - t) + b_inv.entries() * t)?;
                Ok(conc.inverse())
            }
        }
    }
}

/// Free-function form of [`PathSpec::point`].
pub fn path_point(path: &PathSpec, t: f64) -> Result<SpdMatrix> {
    path.point(t)
}

/// Options for [`karcher_mean`].
#[derive(Debug, Clone, Copy)]
pub struct KarcherOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for KarcherOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-9,
        }
    }
}

/// Weighted Riemannian center of mass under the affine-invariant metric.
///
/// Fixed-point iteration `X ← X^½ exp(Σ w_i log(X^-½ M_i X^-½)) X^½` with unit
/// step, halved whenever the Fréchet objective would increase.
pub fn karcher_mean(
    matrices: &[SpdMatrix],
    weights: &[f64],
    opts: KarcherOptions,
) -> Result<SpdMatrix> {
    if matrices.is_empty() {
        return Err(DepthError::InvalidArgument("empty matrix list".into()));
    }
    if matrices.len() != weights.len() {
        return Err(DepthError::DimensionMismatch {
            expected: matrices.len(),
            found: weights.len(),
        });
    }
    if weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(DepthError::InvalidArgument(
            "weights must be nonnegative and sum to 1".into(),
        ));
    }
    let k = matrices[0].dim();
    for m in matrices {
        check_dim(k, m.dim())?;
    }
    if matrices.len() == 1 {
        return Ok(matrices[0].clone());
    }

    let objective = |x: &SpdMatrix| -> Result<f64> {
        let mut acc = 0.0;
        for (m, w) in matrices.iter().zip(weights) {
            acc += w * geodesic_distance(x, m)?.powi(2);
        }
        Ok(acc)
    };

    // Log-Euclidean mean as the starting point.
    let mut log_mean = DMatrix::zeros(k, k);
    for (m, w) in matrices.iter().zip(weights) {
        log_mean += m.log() * *w;
    }
    let mut x = SpdMatrix::exp_symmetric(&log_mean)?;
    let mut fx = objective(&x)?;
    let mut step = 1.0;

    for _ in 0..opts.max_iterations {
        let root = x.sqrt();
        let w = x.inv_sqrt();
        let mut tangent = DMatrix::zeros(k, k);
        for (m, wt) in matrices.iter().zip(weights) {
            let inner = symmetrize(&(w.entries() * m.entries() * w.entries()));
            tangent += symmetric_function(&inner, f64::ln)? * *wt;
        }
        if tangent.norm() < opts.tolerance {
            return Ok(x);
        }
        loop {
            let e = SpdMatrix::exp_symmetric(&(&tangent * step))?;
            let candidate =
                SpdMatrix::new(symmetrize(&(root.entries() * e.entries() * root.entries())))?;
            let fc = objective(&candidate)?;
            if fc <= fx || step < 1e-8 {
                x = candidate;
                fx = fc;
                break;
            }
            step *= 0.5;
        }
    }
    Err(DepthError::NoConvergence {
        iterations: opts.max_iterations,
        last: Box::new(x),
    })
}
