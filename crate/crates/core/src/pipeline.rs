//! Windowed dispersion-outlier detection.
//!
//! A global shape `V̂_full` (MCD on the pooled data, normalized by `S`) and its
//! depth-maximizing scale give the baseline `Σ̄_full = σ²_full V̂_full`. Each
//! window is then scored by six measures and flagged by the 1.5·IQR rule
//! below the first quartile.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::depth::DepthEngine;
use crate::directions::DirectionBudget;
use crate::error::{DepthError, Result};
use crate::location::LocationSpec;
use crate::mcd::{default_h, fast_mcd, McdFit};
use crate::rng::{derive_seed, label_seed, Stream};
use crate::shape::{shape_depth_on, ScaleFunctional, ShapeMatrix};
use crate::spd::{frobenius_distance, geodesic_distance, SpdMatrix};

/// Ordered labelled windows, each with at least `min_rows` observations.
#[derive(Debug, Clone)]
pub struct WindowedSeries {
    windows: Vec<(String, Dataset)>,
    dropped: Vec<(String, usize)>,
    min_rows: usize,
}

impl WindowedSeries {
    /// Keeps windows with at least `min_rows` rows; order is preserved.
    pub fn new(windows: Vec<(String, Dataset)>, min_rows: usize) -> Result<Self> {
        let k = windows
            .first()
            .map(|w| w.1.k())
            .ok_or(DepthError::EmptyDataset)?;
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        for (label, d) in windows {
            if d.k() != k {
                return Err(DepthError::DimensionMismatch {
                    expected: k,
                    found: d.k(),
                });
            }
            if d.n() >= min_rows {
                kept.push((label, d));
            } else {
                dropped.push((label, d.n()));
            }
        }
        Ok(Self {
            windows: kept,
            dropped,
            min_rows,
        })
    }

    /// Splits by the `window` column, or else by calendar day of the
    /// timestamp (in its own offset). Windows are ordered by label.
    pub fn from_dataset(data: &Dataset, min_rows: usize) -> Result<Self> {
        let labels: Vec<String> = match (data.windows(), data.timestamps()) {
            (Some(w), _) => w.to_vec(),
            (None, Some(ts)) => ts.iter().map(|t| t.date_naive().to_string()).collect(),
            (None, None) => {
                return Err(DepthError::InvalidArgument(
                    "detection input needs a timestamp or window column".into(),
                ))
            }
        };
        let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, l) in labels.into_iter().enumerate() {
            groups.entry(l).or_default().push(i);
        }
        let windows = groups
            .into_iter()
            .map(|(l, idx)| Ok((l, data.select(&idx)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(windows, min_rows)
    }

    pub fn windows(&self) -> &[(String, Dataset)] {
        &self.windows
    }

    /// Windows below the row threshold, with their sizes.
    pub fn dropped(&self) -> &[(String, usize)] {
        &self.dropped
    }

    pub fn min_rows(&self) -> usize {
        self.min_rows
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// All retained observations, in label order so that the pooled fit
    /// does not depend on how the windows were listed.
    pub fn pooled(&self) -> Result<Dataset> {
        let mut parts: Vec<&(String, Dataset)> = self.windows.iter().collect();
        parts.sort_by(|a, b| a.0.cmp(&b.0));
        Dataset::concat(parts.into_iter().map(|(_, d)| d))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectConfig {
    pub min_rows: usize,
    pub scale: ScaleFunctional,
    pub directions: DirectionBudget,
    pub location: LocationSpec,
    pub mcd_starts: usize,
    pub seed: u64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            min_rows: 70,
            scale: ScaleFunctional::Det,
            directions: DirectionBudget::default(),
            location: LocationSpec::TukeyMedian,
            mcd_starts: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalBaseline {
    /// `Σ̂_full`, the pooled MCD scatter.
    pub mcd_scatter: SpdMatrix,
    /// `V̂_full`.
    pub shape: ShapeMatrix,
    /// `σ²_full`.
    pub sigma2: f64,
    /// `Σ̄_full = σ²_full V̂_full`.
    pub scatter: SpdMatrix,
    pub scatter_depth: f64,
    pub shape_depth: f64,
}

fn mcd(data: &Dataset, starts: usize, seed: u64) -> Result<McdFit> {
    fast_mcd(
        data,
        default_h(data.n(), data.k()).max(data.k() + 1),
        starts,
        seed,
    )
}

/// Pooled baseline; both depths are computed on `full` with the same directions.
pub fn global_baseline(full: &Dataset, config: &DetectConfig) -> Result<GlobalBaseline> {
    let fit = mcd(
        full,
        config.mcd_starts,
        derive_seed(config.seed, Stream::Mcd, 0),
    )?;
    let shape = ShapeMatrix::normalize(&fit.raw_scatter, config.scale);
    let engine = DepthEngine::new(full, &config.location, &config.directions)?;
    let sd = shape_depth_on(&engine, &shape.v)?;
    let scatter = shape.v.scale(sd.sigma2)?;
    let scatter_depth = engine.scatter_depth(&scatter)?.value;
    Ok(GlobalBaseline {
        mcd_scatter: fit.raw_scatter,
        shape,
        sigma2: sd.sigma2,
        scatter,
        scatter_depth,
        shape_depth: sd.value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Flag {
    ScatterOutlier,
    ShapeOutlier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub label: String,
    pub n_rows: usize,
    /// (i) scatter depth of `Σ̄_full`.
    pub depth_sc: f64,
    /// (ii) shape depth of `V̂_full`.
    pub depth_sh: f64,
    /// (iii)–(vi) distances of the window MCD fit to the pooled fit.
    pub df_sc: f64,
    pub df_sh: f64,
    pub dg_sc: f64,
    pub dg_sh: f64,
    pub flags: Vec<Flag>,
}

impl WindowReport {
    pub fn has(&self, f: Flag) -> bool {
        self.flags.contains(&f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fences {
    pub q1: f64,
    pub q3: f64,
    pub lower: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub global: GlobalBaseline,
    pub windows: Vec<WindowReport>,
    pub scatter_fences: Fences,
    pub shape_fences: Fences,
    pub dropped: Vec<(String, usize)>,
}

impl DetectionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("label,depth_sc,depth_sh,dF_sc,dF_sh,dg_sc,dg_sh,flag_sc,flag_sh\n");
        for w in &self.windows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                w.label,
                w.depth_sc,
                w.depth_sh,
                w.df_sc,
                w.df_sh,
                w.dg_sc,
                w.dg_sh,
                w.has(Flag::ScatterOutlier) as u8,
                w.has(Flag::ShapeOutlier) as u8
            ));
        }
        out
    }

    pub fn flagged(&self, f: Flag) -> Vec<&str> {
        self.windows
            .iter()
            .filter(|w| w.has(f))
            .map(|w| w.label.as_str())
            .collect()
    }
}

/// Sample quantile with linear interpolation between order statistics (type 7).
pub fn quantile_type7(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

fn fences(values: &[f64]) -> Fences {
    let q1 = quantile_type7(values, 0.25);
    let q3 = quantile_type7(values, 0.75);
    Fences {
        q1,
        q3,
        lower: q1 - 1.5 * (q3 - q1),
    }
}

/// Per-window measures and IQR flags.
pub fn detect(series: &WindowedSeries, config: &DetectConfig) -> Result<DetectionReport> {
    if series.len() < 4 {
        return Err(DepthError::InvalidArgument(format!(
            "detection needs at least 4 windows with ≥ {} rows, got {}",
            series.min_rows(),
            series.len()
        )));
    }
    let global = global_baseline(&series.pooled()?, config)?;
    let global_shape = &global.shape.v;
    let full_shape = ShapeMatrix::normalize(&global.mcd_scatter, config.scale).v;
    let mut windows = series
        .windows()
        .par_iter()
        .map(|(label, d)| {
            let engine = DepthEngine::new(d, &config.location, &config.directions)?;
            let depth_sc = engine.scatter_depth(&global.scatter)?.value;
            let depth_sh = shape_depth_on(&engine, global_shape)?.value;
            let fit = mcd(d, config.mcd_starts, label_seed(config.seed, label))?;
            let local_shape = ShapeMatrix::normalize(&fit.raw_scatter, config.scale).v;
            Ok(WindowReport {
                label: label.clone(),
                n_rows: d.n(),
                depth_sc,
                depth_sh,
                df_sc: frobenius_distance(&fit.raw_scatter, &global.mcd_scatter)?,
                df_sh: frobenius_distance(&local_shape, &full_shape)?,
                dg_sc: geodesic_distance(&fit.raw_scatter, &global.mcd_scatter)?,
                dg_sh: geodesic_distance(&local_shape, &full_shape)?,
                flags: Vec::new(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let sc: Vec<f64> = windows.iter().map(|w| w.depth_sc).collect();
    let sh: Vec<f64> = windows.iter().map(|w| w.depth_sh).collect();
    let (scatter_fences, shape_fences) = (fences(&sc), fences(&sh));
    for w in &mut windows {
        if w.depth_sc < scatter_fences.lower {
            w.flags.push(Flag::ScatterOutlier);
        }
        if w.depth_sh < shape_fences.lower {
            w.flags.push(Flag::ShapeOutlier);
        }
    }
    Ok(DetectionReport {
        global,
        windows,
        scatter_fences,
        shape_fences,
        dropped: series.dropped().to_vec(),
    })
}
