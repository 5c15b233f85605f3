//! Halfspace depth for scatter, concentration and shape matrices.
//!
//! The crate evaluates how central a dispersion matrix is with respect to an
//! empirical sample (or an analytic reference model), searches the cone of
//! symmetric positive-definite matrices for the deepest one, profiles depth
//! along linear, geodesic and harmonic paths, and runs a windowed
//! scatter/shape outlier detector on multivariate series.

pub mod dataset;
pub mod deepest;
pub mod depth;
pub mod directions;
pub mod error;
pub mod location;
pub mod mcd;
pub mod optim;
pub mod oracles;
pub mod pipeline;
pub mod rng;
pub mod shape;
pub mod spd;

pub use dataset::Dataset;
pub use deepest::{
    deepest_scatter, deepest_shape, depth_along_path, DeepestResult, DepthSource, PathProfile,
    ProfileTarget, SearchOptions, QUASI_CONCAVE_SLACK,
};
pub use depth::{
    concentration_depth, default_location, pairwise_difference_depth, region_contains,
    scatter_depth, scatter_depth_sup_location, DepthEngine, DepthEvaluation, RayProfile, Side,
    CACHE_LIMIT,
};
pub use directions::{DirectionBudget, DirectionScheme, Directions};
pub use error::{DepthError, Result};
pub use location::{
    estimate_alpha, location_depth, msd_interval, tukey_median, LocationSpec, MsdInterval,
};
pub use mcd::{default_h, fast_mcd, sample_covariance, McdFit};
pub use oracles::{
    cauchy_region_check, cauchy_scatter_depth, cauchy_shape_depth, elliptical_scatter_depth,
    gaussian_region_bounds, gaussian_scatter_depth, gaussian_shape_depth, l1_sphere_extrema,
    normal_cdf, normal_quantile, validation_scatters, EllipticalModel, L1Extrema, ModelKind,
    RadialCdf, SpectralRegion,
};
pub use pipeline::{
    detect, global_baseline, DetectConfig, DetectionReport, Flag, GlobalBaseline, WindowReport,
    WindowedSeries,
};
pub use rng::{label_seed, stream_rng, Stream};
pub use shape::{
    scale_and_shape, shape_depth, shape_depth_on, shape_region_contains, ScaleFunctional,
    ShapeDepth, ShapeMatrix,
};
pub use spd::{
    frobenius_distance, geodesic_distance, karcher_mean, path_point, PathKind, PathSpec, SpdMatrix,
};
