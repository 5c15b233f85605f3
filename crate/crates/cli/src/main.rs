use std::error::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use scatter_depth::{
    deepest_scatter, deepest_shape, depth_along_path, detect, region_contains, scatter_depth,
    shape_depth, shape_region_contains, Dataset, DepthEngine, DepthSource, DetectConfig,
    DirectionBudget, EllipticalModel, LocationSpec, PathKind, PathSpec, ProfileTarget,
    ScaleFunctional, SearchOptions, ShapeMatrix, SpdMatrix, WindowedSeries,
};

type CliResult = Result<(), Box<dyn Error + Send + Sync>>;

/// Halfspace depth of scatter, concentration and shape matrices.
#[derive(Parser, Debug)]
#[command(name = "scatter-depth", version)]
struct Cli {
    /// Seed for every random choice (directions, MCD starts, search).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Number of random unit directions.
    #[arg(long, global = true, default_value_t = 10_000)]
    directions: usize,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the primary output here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Sample {
    /// CSV with numeric columns (optional `timestamp` / `window` columns).
    #[arg(long)]
    data: PathBuf,
    /// tukey, coordmedian or fixed:θ1,θ2,…
    #[arg(long, default_value = "tukey")]
    location: LocationSpec,
    /// Exact critical-angle enumeration (bivariate data only).
    #[arg(long)]
    exact2d: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Scatter (or concentration) depth of a matrix.
    Depth {
        #[command(flatten)]
        sample: Sample,
        #[arg(long)]
        sigma: PathBuf,
        /// Treat the matrix as a concentration matrix.
        #[arg(long)]
        concentration: bool,
    },
    /// Shape depth: best scatter depth along the ray σ²V.
    ShapeDepth {
        #[command(flatten)]
        sample: Sample,
        #[arg(long)]
        shape: PathBuf,
        #[arg(long, default_value = "det")]
        scale: ScaleFunctional,
    },
    /// Search for the deepest scatter or shape matrix.
    Deepest {
        #[command(flatten)]
        sample: Sample,
        /// Search shapes instead of scatters.
        #[arg(long)]
        shape: bool,
        #[arg(long, default_value = "det")]
        scale: ScaleFunctional,
        /// Pattern-search starting points.
        #[arg(long, default_value_t = 8)]
        starts: usize,
    },
    /// Depth along a linear, geodesic or harmonic path (CSV).
    Profile {
        #[command(flatten)]
        sample: Sample,
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value = "linear")]
        kind: PathKind,
        #[arg(long, default_value_t = 101)]
        grid: usize,
        #[arg(long, value_enum, default_value_t = Target::Scatter)]
        target: Target,
    },
    /// Whether a matrix lies in the depth region of level α.
    Region {
        #[command(flatten)]
        sample: Sample,
        #[arg(long)]
        sigma: PathBuf,
        #[arg(long)]
        alpha: f64,
        /// Use the shape region (scale-free).
        #[arg(long)]
        shape: bool,
        #[arg(long, default_value = "det")]
        scale: ScaleFunctional,
    },
    /// Windowed scatter/shape outlier detection.
    Detect {
        #[command(flatten)]
        sample: Sample,
        #[arg(long, default_value_t = 70)]
        min_rows: usize,
        #[arg(long, default_value = "det")]
        scale: ScaleFunctional,
        #[arg(long, default_value_t = 50)]
        mcd_starts: usize,
        /// Per-window CSV (default: next to --output, else not written).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Closed-form depth under a Gaussian or independent-Cauchy model.
    Oracle {
        #[arg(value_enum)]
        model: Model,
        #[arg(long)]
        sigma: PathBuf,
        /// Model scatter (default identity).
        #[arg(long)]
        sigma0: Option<PathBuf>,
        /// Shape depth instead of scatter depth.
        #[arg(long)]
        shape: bool,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Model {
    Gaussian,
    Cauchy,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Target {
    Scatter,
    Concentration,
    Shape,
}

impl From<Target> for ProfileTarget {
    fn from(t: Target) -> Self {
        match t {
            Target::Scatter => ProfileTarget::Scatter,
            Target::Concentration => ProfileTarget::Concentration,
            Target::Shape => ProfileTarget::Shape,
        }
    }
}

#[derive(Serialize)]
struct ShapeOutput {
    value: f64,
    sigma2: f64,
    sigma2_range: (f64, f64),
    attained: bool,
}

#[derive(Serialize)]
struct RegionOutput {
    alpha: f64,
    contains: bool,
}

fn budget(cli: &Cli, sample: &Sample) -> DirectionBudget {
    if sample.exact2d {
        DirectionBudget::exact_2d()
    } else {
        DirectionBudget::uniform(cli.directions, cli.seed)
    }
}

fn emit(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn json<T: Serialize>(value: &T) -> Result<String, Box<dyn Error + Send + Sync>> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn run(cli: &Cli) -> CliResult {
    let out = cli.output.as_deref();
    match &cli.command {
        Command::Depth {
            sample,
            sigma,
            concentration,
        } => {
            let data = Dataset::read_csv(&sample.data)?;
            let mut m = SpdMatrix::read_file(sigma)?;
            if *concentration {
                m = m.inverse();
            }
            let eval = scatter_depth(&data, &sample.location, &m, &budget(cli, sample))?;
            emit(out, &json(&eval)?)
        }
        Command::ShapeDepth {
            sample,
            shape,
            scale,
        } => {
            let data = Dataset::read_csv(&sample.data)?;
            let v = ShapeMatrix::normalize(&SpdMatrix::read_file(shape)?, *scale);
            let d = shape_depth(&data, &sample.location, &v, &budget(cli, sample))?;
            let report = ShapeOutput {
                value: d.value,
                sigma2: d.sigma2,
                sigma2_range: d.sigma2_range,
                attained: d.attained,
            };
            emit(out, &json(&report)?)
        }
        Command::Deepest {
            sample,
            shape,
            scale,
            starts,
        } => {
            let data = Dataset::read_csv(&sample.data)?;
            let opts = SearchOptions {
                n_starts: *starts,
                seed: cli.seed,
                ..SearchOptions::default()
            };
            let dirs = budget(cli, sample);
            let result = if *shape {
                deepest_shape(&data, &sample.location, *scale, &dirs, &opts)?
            } else {
                deepest_scatter(&data, &sample.location, &dirs, &opts)?
            };
            emit(out, &json(&result)?)
        }
        Command::Profile {
            sample,
            a,
            b,
            kind,
            grid,
            target,
        } => {
            let data = Dataset::read_csv(&sample.data)?;
            let path = PathSpec::new(SpdMatrix::read_file(a)?, SpdMatrix::read_file(b)?, *kind)?;
            let engine = DepthEngine::new(&data, &sample.location, &budget(cli, sample))?.cached();
            let profile = depth_along_path(DepthSource::Empirical(&engine), &path, *grid, (*target).into())?;
            emit(out, &profile.to_csv())
        }
        Command::Region {
            sample,
            sigma,
            alpha,
            shape,
            scale,
        } => {
            let data = Dataset::read_csv(&sample.data)?;
            let m = SpdMatrix::read_file(sigma)?;
            let dirs = budget(cli, sample);
            let contains = if *shape {
                let v = ShapeMatrix::normalize(&m, *scale);
                shape_region_contains(&data, &sample.location, &v, *alpha, &dirs)?
            } else {
                region_contains(&data, &sample.location, &m, *alpha, &dirs)?
            };
            emit(out, &json(&RegionOutput { alpha: *alpha, contains })?)
        }
        Command::Detect {
            sample,
            min_rows,
            scale,
            mcd_starts,
            csv,
        } => {
            let data = Dataset::read_csv(&sample.data)?;
            let series = WindowedSeries::from_dataset(&data, *min_rows)?;
            let config = DetectConfig {
                min_rows: *min_rows,
                scale: *scale,
                directions: budget(cli, sample),
                location: sample.location.clone(),
                mcd_starts: *mcd_starts,
                seed: cli.seed,
            };
            let report = detect(&series, &config)?;
            emit(out, &(report.to_json() + "\n"))?;
            let csv_path = csv.clone().or_else(|| out.map(|p| p.with_extension("csv")));
            if let Some(p) = csv_path {
                std::fs::write(p, report.to_csv())?;
            }
            Ok(())
        }
        Command::Oracle {
            model,
            sigma,
            sigma0,
            shape,
        } => {
            let m = SpdMatrix::read_file(sigma)?;
            let base = match sigma0 {
                Some(p) => SpdMatrix::read_file(p)?,
                None => SpdMatrix::identity(m.dim()),
            };
            let model = match model {
                Model::Gaussian => EllipticalModel::gaussian(base),
                Model::Cauchy => EllipticalModel::cauchy(base),
            };
            let value = if *shape {
                model.shape_depth(&m)?
            } else {
                model.scatter_depth(&m)?
            };
            emit(out, &format!("{value}\n"))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
