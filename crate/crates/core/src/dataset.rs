//! Observation matrices (the empirical measure) and CSV ingestion.

use std::io::Read;
use std::path::Path;

use chrono::{DateTime, FixedOffset};
use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, DepthError, Result};

/// `n × k` observations, stored row-major, with optional per-row tags.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    k: usize,
    obs: Vec<f64>,
    timestamps: Option<Vec<DateTime<FixedOffset>>>,
    windows: Option<Vec<String>>,
}

impl Dataset {
    /// Builds from row-major values; requires `n ≥ 1` and finite entries.
    pub fn new(k: usize, obs: Vec<f64>) -> Result<Self> {
        if k == 0 {
            return Err(DepthError::InvalidArgument(
                "dimension must be positive".into(),
            ));
        }
        if obs.is_empty() {
            return Err(DepthError::EmptyDataset);
        }
        if obs.len() % k != 0 {
            return Err(DepthError::InvalidArgument(format!(
                "{} values do not form rows of length {k}",
                obs.len()
            )));
        }
        if let Some(i) = obs.iter().position(|v| !v.is_finite()) {
            return Err(DepthError::NonFinite(format!(
                "observation row {} column {}",
                i / k,
                i % k
            )));
        }
        Ok(Self {
            n: obs.len() / k,
            k,
            obs,
            timestamps: None,
            windows: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let k = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or(DepthError::EmptyDataset)?;
        let mut obs = Vec::with_capacity(rows.len() * k);
        for r in rows {
            check_dim(k, r.as_ref().len())?;
            obs.extend_from_slice(r.as_ref());
        }
        Self::new(k, obs)
    }

    /// Univariate sample.
    pub fn univariate(values: &[f64]) -> Result<Self> {
        Self::new(1, values.to_vec())
    }

    pub fn with_timestamps(mut self, ts: Vec<DateTime<FixedOffset>>) -> Result<Self> {
        check_dim(self.n, ts.len())?;
        self.timestamps = Some(ts);
        Ok(self)
    }

    pub fn with_windows(mut self, labels: Vec<String>) -> Result<Self> {
        check_dim(self.n, labels.len())?;
        self.windows = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn values(&self) -> &[f64] {
        &self.obs
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.obs[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.obs.chunks_exact(self.k)
    }

    pub fn timestamps(&self) -> Option<&[DateTime<FixedOffset>]> {
        self.timestamps.as_deref()
    }

    pub fn windows(&self) -> Option<&[String]> {
        self.windows.as_deref()
    }

    /// Rows at `indices`, keeping tags.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut obs = Vec::with_capacity(indices.len() * self.k);
        for &i in indices {
            obs.extend_from_slice(self.row(i));
        }
        let mut out = Self::new(self.k, obs)?;
        out.timestamps = self
            .timestamps
            .as_ref()
            .map(|ts| indices.iter().map(|&i| ts[i]).collect());
        out.windows = self
            .windows
            .as_ref()
            .map(|w| indices.iter().map(|&i| w[i].clone()).collect());
        Ok(out)
    }

    /// `{A x_i + b}`.
    pub fn affine_map(&self, a: &DMatrix<f64>, b: &[f64]) -> Result<Self> {
        check_dim(self.k, a.ncols())?;
        check_dim(a.nrows(), b.len())?;
        let m = a.nrows();
        let mut obs = Vec::with_capacity(self.n * m);
        for x in self.rows() {
            for r in 0..m {
                let mut acc = b[r];
                for c in 0..self.k {
                    acc += a[(r, c)] * x[c];
                }
                obs.push(acc);
            }
        }
        Self::new(m, obs)
    }

    /// Concatenates datasets of equal dimension (tags dropped).
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a Dataset>) -> Result<Self> {
        let mut k = None;
        let mut obs = Vec::new();
        for p in parts {
            match k {
                None => k = Some(p.k),
                Some(k) => check_dim(k, p.k)?,
            }
            obs.extend_from_slice(&p.obs);
        }
        Self::new(k.ok_or(DepthError::EmptyDataset)?, obs)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.k];
        for x in self.rows() {
            for (mj, xj) in m.iter_mut().zip(x) {
                *mj += xj;
            }
        }
        m.iter_mut().for_each(|v| *v /= self.n as f64);
        m
    }

    /// Sample covariance with divisor `n - 1` (zero matrix when `n = 1`).
    pub fn covariance(&self) -> DMatrix<f64> {
        let mean = self.mean();
        let mut c = DMatrix::zeros(self.k, self.k);
        for x in self.rows() {
            let d = DVector::from_iterator(self.k, x.iter().zip(&mean).map(|(a, b)| a - b));
            c += &d * d.transpose();
        }
        if self.n > 1 {
            c /= (self.n - 1) as f64;
        }
        c
    }

    pub fn coordinate_median(&self) -> Vec<f64> {
        (0..self.k)
            .map(|j| {
                let mut col: Vec<f64> = self.rows().map(|x| x[j]).collect();
                median_in_place(&mut col)
            })
            .collect()
    }

    /// Reads the CSV layout: a header row, an optional leading `timestamp`
    /// column (RFC 3339), an optional `window` column, then numeric columns.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let ts_col = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case("timestamp"));
        let win_col = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case("window"));
        let numeric: Vec<usize> = (0..headers.len())
            .filter(|&c| Some(c) != ts_col && Some(c) != win_col)
            .collect();
        if numeric.is_empty() {
            return Err(DepthError::Parse("no numeric columns".into()));
        }
        let mut obs = Vec::new();
        let mut ts = Vec::new();
        let mut wins = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            for &c in &numeric {
                let field = rec.get(c).unwrap_or("");
                obs.push(field.parse::<f64>().map_err(|e| {
                    DepthError::Parse(format!("row {}, column {:?}: {e}", line + 1, &headers[c]))
                })?);
            }
            if let Some(c) = ts_col {
                let field = rec.get(c).unwrap_or("");
                ts.push(DateTime::parse_from_rfc3339(field).map_err(|e| {
                    DepthError::Parse(format!("row {}: timestamp {field:?}: {e}", line + 1))
                })?);
            }
            if let Some(c) = win_col {
                wins.push(rec.get(c).unwrap_or("").to_string());
            }
        }
        let mut d = Self::new(numeric.len(), obs)?;
        if ts_col.is_some() {
            d = d.with_timestamps(ts)?;
        }
        if win_col.is_some() {
            d = d.with_windows(wins)?;
        }
        Ok(d)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    /// Writes the same CSV layout (`x1..xk`, with `timestamp` when present).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mut header: Vec<String> = Vec::new();
        if self.timestamps.is_some() {
            header.push("timestamp".into());
        }
        if self.windows.is_some() {
            header.push("window".into());
        }
        header.extend((1..=self.k).map(|j| format!("x{j}")));
        out.push_str(&header.join(","));
        out.push('\n');
        for i in 0..self.n {
            let mut fields: Vec<String> = Vec::new();
            if let Some(ts) = &self.timestamps {
                fields.push(ts[i].to_rfc3339());
            }
            if let Some(w) = &self.windows {
                fields.push(w[i].clone());
            }
            fields.extend(self.row(i).iter().map(|v| format!("{v}")));
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

/// Median with midpoint convention for even sizes; sorts `values`.
pub fn median_in_place(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
