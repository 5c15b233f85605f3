//! End-to-end acceptance checks, one test per criterion.
//!
//! Run with `cargo test -p scatter-depth-cli --test acceptance -- --nocapture`
//! to see the verdict lines.

mod common;

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use scatter_depth::{
    cauchy_scatter_depth, cauchy_shape_depth, deepest_scatter, depth_along_path, detect,
    gaussian_scatter_depth, gaussian_shape_depth, geodesic_distance, l1_sphere_extrema,
    shape_depth_on, validation_scatters, Dataset, DepthEngine, DepthSource, DetectConfig,
    DirectionBudget, Directions, EllipticalModel, Flag, LocationSpec, PathKind, PathSpec,
    ProfileTarget, ScaleFunctional, SearchOptions, ShapeMatrix, SpdMatrix, WindowedSeries,
};

use common::{median, random_spd, rng, verdict};

const N_DIRECTIONS: usize = 10_000;

/// Median over replicates of the empirical depths of `Σ_A, Σ_B, Σ_C`.
fn validation_medians(model: &EllipticalModel, k: usize, n: usize, reps: u64, seed: u64) -> [f64; 3] {
    let targets = validation_scatters(k).unwrap();
    let mut values = [Vec::new(), Vec::new(), Vec::new()];
    for r in 0..reps {
        let data = model.sample(n, &mut rng(seed + r)).unwrap();
        let dirs = DirectionBudget::uniform(N_DIRECTIONS, seed + r);
        let engine = DepthEngine::new(&data, &LocationSpec::TukeyMedian, &dirs).unwrap();
        for (v, s) in values.iter_mut().zip(&targets) {
            v.push(engine.scatter_depth(s).unwrap().value);
        }
    }
    values.map(|v| median(&v))
}

#[test]
fn c01_gaussian_closed_form_vs_monte_carlo() {
    let mut worst: f64 = 0.0;
    let mut misses = Vec::new();
    for k in [2, 3, 4] {
        let model = EllipticalModel::gaussian(SpdMatrix::identity(k));
        let truth = validation_scatters(k)
            .unwrap()
            .map(|s| gaussian_scatter_depth(&SpdMatrix::identity(k), &s).unwrap());
        for (n, tol) in [(500, 0.06), (2000, 0.03)] {
            let med = validation_medians(&model, k, n, 100, 1000 * k as u64 + n as u64);
            for ((m, t), name) in med.iter().zip(&truth).zip(["A", "B", "C"]) {
                let err = (m - t).abs();
                worst = worst.max(err / tol);
                if err > tol {
                    misses.push(format!("k={k} n={n} Σ_{name}: median {m:.4} vs {t:.4}"));
                }
            }
        }
    }
    verdict(
        "1",
        misses.is_empty(),
        format!("worst |median − closed form| = {worst:.2} × tolerance; misses: {misses:?}"),
    );
}

#[test]
fn c02_cauchy_closed_form_vs_monte_carlo() {
    let mut worst: f64 = 0.0;
    for k in [2, 3, 4] {
        let model = EllipticalModel::cauchy(SpdMatrix::identity(k));
        let truth = validation_scatters(k)
            .unwrap()
            .map(|s| cauchy_scatter_depth(&s).unwrap());
        let med = validation_medians(&model, k, 2000, 100, 5000 + k as u64);
        for (m, t) in med.iter().zip(&truth) {
            worst = worst.max((m - t).abs());
        }
    }
    verdict("2", worst <= 0.04, format!("worst |median − closed form| = {worst:.4} (tol 0.04)"));
}

#[test]
fn c03_cauchy_deepest_scatter() {
    let target = 2.0 / PI * 2f64.powf(-0.25).atan();
    let root2 = SpdMatrix::scaled_identity(2, 2f64.sqrt());
    let best = cauchy_scatter_depth(&root2).unwrap();
    let mut r = rng(30);
    let mut dominated = 0;
    for _ in 0..1000 {
        let s = random_spd(2, 1.5, &mut r);
        if cauchy_scatter_depth(&s).unwrap() < best {
            dominated += 1;
        }
    }
    let data = EllipticalModel::cauchy(SpdMatrix::identity(2))
        .sample(5000, &mut rng(31))
        .unwrap();
    let res = deepest_scatter(
        &data,
        &LocationSpec::TukeyMedian,
        &DirectionBudget::uniform(N_DIRECTIONS, 31),
        &SearchOptions::default(),
    )
    .unwrap();
    let dg = geodesic_distance(&res.argmax, &root2).unwrap();
    let pass = (res.value - target).abs() <= 0.03 && dg < 0.35 && dominated == 1000 && (best - target).abs() < 1e-12;
    verdict(
        "3",
        pass,
        format!(
            "depth {:.4} vs {target:.4}, d_g(argmax, √2 I) = {dg:.3}, {dominated}/1000 strictly below √2 I",
            res.value
        ),
    );
}

/// Points of the unit L1 sphere: a simplex grid with `m` steps per edge on
/// each face, one face per sign pattern with `s_k = +1`.
fn l1_grid(k: usize, m: usize) -> Vec<Vec<f64>> {
    let mut faces = Vec::new();
    for signs in 0..(1u32 << (k - 1)) {
        let s: Vec<f64> = (0..k)
            .map(|j| if j < k - 1 && signs >> j & 1 == 1 { -1.0 } else { 1.0 })
            .collect();
        let mut push = |w: &[usize]| {
            faces.push(w.iter().zip(&s).map(|(&a, sj)| sj * a as f64 / m as f64).collect());
        };
        match k {
            2 => (0..=m).for_each(|a| push(&[a, m - a])),
            3 => {
                for a in 0..=m {
                    for b in 0..=m - a {
                        push(&[a, b, m - a - b]);
                    }
                }
            }
            _ => unreachable!(),
        }
    }
    faces
}

#[test]
fn c04_l1_sphere_lemma() {
    let mut r = rng(40);
    let mut worst = (0.0f64, 0.0f64);
    let mut pass = true;
    // 2 faces × 5001 points ≈ 10⁴; 4 faces × 25 425 points ≈ 10⁵
    for (k, m) in [(2, 5000), (3, 224)] {
        let grid = l1_grid(k, m);
        for _ in 0..200 {
            let s = random_spd(k, 1.5, &mut r);
            let e = l1_sphere_extrema(&s).unwrap();
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for v in &grid {
                let q = s.quad_form(v);
                lo = lo.min(q);
                hi = hi.max(q);
            }
            let (emax, emin) = ((e.max_val - hi).abs() / hi, (e.min_val - lo).abs() / lo);
            worst = (worst.0.max(emax), worst.1.max(emin));
            // the closed form is the true extremum: never beaten by the grid
            pass &= emax < 1e-4 && emin < 1e-3 && e.min_val <= lo * (1.0 + 1e-12);
        }
    }
    verdict(
        "4",
        pass,
        format!("max rel err {:.2e} (max), {:.2e} (min)", worst.0, worst.1),
    );
}

fn profile_violations(source: DepthSource<'_>, path: &PathSpec, slack: f64) -> bool {
    let p = depth_along_path(source, path, 101, ProfileTarget::Scatter).unwrap();
    p.max_arc_deficit > slack
}

#[test]
fn c05_quasi_concavity() {
    let mut r = rng(50);
    let mut linear = 0;
    for i in 0..500 {
        let k = 2 + i % 2;
        let n = 40 + i % 30;
        let data = EllipticalModel::cauchy(random_spd(k, 1.0, &mut r))
            .sample(n, &mut r)
            .unwrap();
        let engine =
            DepthEngine::new(&data, &LocationSpec::TukeyMedian, &DirectionBudget::uniform(200, i as u64)).unwrap();
        let path = PathSpec::new(random_spd(k, 2.0, &mut r), random_spd(k, 2.0, &mut r), PathKind::Linear).unwrap();
        // counts are multiples of 1/n; any shortfall is at least 1/n
        linear += profile_violations(DepthSource::Empirical(&engine), &path, 0.0) as usize;
    }

    let mut analytic = 0;
    for i in 0..500 {
        let k = 2 + i % 3;
        let a = random_spd(k, 2.0, &mut r);
        let b = random_spd(k, 2.0, &mut r);
        let models = [
            EllipticalModel::gaussian(random_spd(k, 1.0, &mut r)),
            EllipticalModel::cauchy(SpdMatrix::identity(k)),
        ];
        for model in &models {
            for kind in [PathKind::Geodesic, PathKind::Harmonic] {
                let path = PathSpec::new(a.clone(), b.clone(), kind).unwrap();
                analytic += profile_violations(DepthSource::Model(model), &path, 1e-10) as usize;
            }
        }
    }

    let n = 200;
    let mut witnessed = 0;
    let path = PathSpec::new(
        SpdMatrix::identity(2),
        SpdMatrix::from_diagonal(&[0.001, 20.0]).unwrap(),
        PathKind::Geodesic,
    )
    .unwrap();
    for rep in 0..100 {
        let data = mixture(n, &mut rng(5000 + rep));
        let engine = DepthEngine::new(&data, &LocationSpec::TukeyMedian, &DirectionBudget::exact_2d()).unwrap();
        let p = depth_along_path(DepthSource::Empirical(&engine), &path, 101, ProfileTarget::Scatter).unwrap();
        witnessed += (p.max_arc_deficit > 2.0 / n as f64 + 1e-12) as usize;
    }
    verdict(
        "5",
        linear == 0 && analytic == 0 && witnessed >= 30,
        format!(
            "(a) {linear} linear violations / 500, (b) {analytic} analytic violations / 2000 profiles, \
             (c) mixture violations > 2/n in {witnessed}/100"
        ),
    );
}

/// `½N(0,I) + ¼N((0,4), I/10) + ¼N((0,−4), I/10)`.
fn mixture(n: usize, r: &mut impl Rng) -> Dataset {
    let z = Normal::new(0.0, 1.0).unwrap();
    let small = 0.1f64.sqrt();
    let rows: Vec<[f64; 2]> = (0..n)
        .map(|_| {
            let u: f64 = r.random();
            let (c, s) = if u < 0.5 {
                (0.0, 1.0)
            } else if u < 0.75 {
                (4.0, small)
            } else {
                (-4.0, small)
            };
            [s * z.sample(r), c + s * z.sample(r)]
        })
        .collect();
    Dataset::from_rows(&rows).unwrap()
}

#[test]
fn c06_affine_invariance() {
    let mut r = rng(60);
    let mut mismatches = 0;
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let k = 2 + i % 3;
        let n = 60;
        let data = EllipticalModel::gaussian(random_spd(k, 1.0, &mut r))
            .sample(n, &mut r)
            .unwrap();
        let a = loop {
            let m: DMatrix<f64> = DMatrix::from_fn(k, k, |_, _| r.random_range(-2.0..2.0));
            if m.determinant().abs() > 0.2 {
                break m;
            }
        };
        let b: Vec<f64> = (0..k).map(|_| r.random_range(-5.0..5.0)).collect();
        let theta: Vec<f64> = (0..k).map(|_| r.random_range(-0.3..0.3)).collect();
        let sigma = random_spd(k, 1.0, &mut r);
        let mapped = data.affine_map(&a, &b).unwrap();
        let theta_y: Vec<f64> = (&a * nalgebra::DVector::from_column_slice(&theta))
            .iter()
            .zip(&b)
            .map(|(x, c)| x + c)
            .collect();
        let dirs = DirectionBudget::uniform(300, i as u64).generate(k).unwrap();
        let a_inv_t = a.clone().try_inverse().unwrap().transpose();
        let matched: Vec<Vec<f64>> = dirs
            .iter()
            .map(|u| (&a_inv_t * nalgebra::DVector::from_column_slice(u)).iter().copied().collect())
            .collect();
        let ex = DepthEngine::with_directions(&data, &theta, dirs.clone()).unwrap();
        let ey = DepthEngine::with_directions(&mapped, &theta_y, Directions::from_rows(&matched).unwrap()).unwrap();
        let sigma_y = sigma.congruence(&a).unwrap();
        let d_sc = (ex.scatter_depth(&sigma).unwrap().value - ey.scatter_depth(&sigma_y).unwrap().value).abs();
        let d_sh = (shape_depth_on(&ex, &sigma).unwrap().value - shape_depth_on(&ey, &sigma_y).unwrap().value).abs();
        worst = worst.max(d_sc).max(d_sh);
        mismatches += (d_sc > 1e-12 || d_sh > 1e-12) as usize;
    }
    verdict("6", mismatches == 0, format!("{mismatches}/200 tuples differ, worst gap {worst:.1e}"));
}

#[test]
fn c07_shape_closed_forms() {
    let mut r = rng(70);
    let mut exact = true;
    for k in 1..=6 {
        let v0 = random_spd(k, 1.0, &mut r);
        exact &= gaussian_shape_depth(&v0, &v0).unwrap() == 0.5;
        let closed = 2.0 / PI * (k as f64).powf(-0.25).atan();
        exact &= (cauchy_shape_depth(&SpdMatrix::identity(k)).unwrap() - closed).abs() < 1e-10;
    }
    let mut worst: f64 = 0.0;
    for i in 0..50u64 {
        let v = ShapeMatrix::normalize(&random_spd(2, 0.8, &mut r), ScaleFunctional::Det).v;
        let (model, truth) = if i % 2 == 0 {
            let m = EllipticalModel::gaussian(SpdMatrix::identity(2));
            let t = gaussian_shape_depth(&m.scatter, &v).unwrap();
            (m, t)
        } else {
            (EllipticalModel::cauchy(SpdMatrix::identity(2)), cauchy_shape_depth(&v).unwrap())
        };
        let data = model.sample(2000, &mut rng(7000 + i)).unwrap();
        let engine = DepthEngine::new(&data, &LocationSpec::TukeyMedian, &DirectionBudget::uniform(N_DIRECTIONS, i)).unwrap();
        worst = worst.max((shape_depth_on(&engine, &v).unwrap().value - truth).abs());
    }
    verdict(
        "7",
        exact && worst <= 0.04,
        format!("closed forms exact: {exact}, worst profile gap {worst:.4} over 50 shapes (tol 0.04)"),
    );
}

#[test]
fn c08_fisher_consistency() {
    let mut r = rng(80);
    let mut analytic_ok = true;
    for i in 0..1000 {
        let k = 2 + i % 4;
        let s0 = random_spd(k, 1.0, &mut r);
        let s = random_spd(k, 1.0, &mut r);
        let top = gaussian_scatter_depth(&s0, &s0).unwrap();
        analytic_ok &= (top - 0.5).abs() < 1e-12 && gaussian_scatter_depth(&s0, &s).unwrap() < top;
    }
    let truth = SpdMatrix::from_row_slice(2, &[2.0, 0.6, 0.6, 1.0]).unwrap();
    let model = EllipticalModel::gaussian(truth.clone());
    let mut close = 0;
    for rep in 0..100u64 {
        let data = model.sample(2000, &mut rng(8000 + rep)).unwrap();
        let opts = SearchOptions {
            seed: rep,
            ..SearchOptions::default()
        };
        let res = deepest_scatter(&data, &LocationSpec::TukeyMedian, &DirectionBudget::uniform(N_DIRECTIONS, rep), &opts).unwrap();
        close += (geodesic_distance(&res.argmax, &truth).unwrap() < 0.35) as usize;
    }
    verdict(
        "8",
        analytic_ok && close >= 90,
        format!("analytic unique max: {analytic_ok}, d_g < 0.35 in {close}/100 replicates"),
    );
}

fn rotation45() -> DMatrix<f64> {
    let c = 0.5f64.sqrt();
    DMatrix::from_row_slice(2, 2, &[c, -c, c, c])
}

#[test]
fn c09_pipeline_detection() {
    let base = SpdMatrix::from_diagonal(&[5f64.sqrt(), 1.0 / 5f64.sqrt()]).unwrap();
    let scale_out = [17usize, 48, 83];
    let shape_out = [9usize, 55, 71];
    let mut passing = 0;
    let mut lines = Vec::new();
    for seed in 0..20u64 {
        let mut r = rng(9000 + seed);
        let rot = base.congruence(&rotation45()).unwrap();
        let windows: Vec<(String, Dataset)> = (0..100)
            .map(|w| {
                let sigma = if scale_out.contains(&w) {
                    base.scale(8.0).unwrap()
                } else if shape_out.contains(&w) {
                    rot.clone()
                } else {
                    base.clone()
                };
                let d = EllipticalModel::gaussian(sigma).sample(80, &mut r).unwrap();
                (format!("day{w:03}"), d)
            })
            .collect();
        let config = DetectConfig {
            seed,
            ..DetectConfig::default()
        };
        let report = detect(&WindowedSeries::new(windows, config.min_rows).unwrap(), &config).unwrap();
        let w = &report.windows;
        let scale_hits = scale_out
            .iter()
            .filter(|&&i| w[i].has(Flag::ScatterOutlier) && !w[i].has(Flag::ShapeOutlier))
            .count();
        let shape_hits = shape_out.iter().filter(|&&i| w[i].has(Flag::ShapeOutlier)).count();
        let false_flags = (0..100)
            .filter(|i| !scale_out.contains(i) && !shape_out.contains(i) && !w[*i].flags.is_empty())
            .count();
        let ok = scale_hits >= 2 && shape_hits >= 2 && false_flags <= 3;
        passing += ok as usize;
        lines.push(format!("{scale_hits}/{shape_hits}/{false_flags}"));
    }
    verdict(
        "9",
        passing >= 16,
        format!("{passing}/20 seeds pass (scale hits/shape hits/false flags: {})", lines.join(" ")),
    );
}

fn write_inputs(dir: &Path) {
    let mut r = rng(100);
    let data = EllipticalModel::gaussian(SpdMatrix::from_row_slice(2, &[2.0, 0.5, 0.5, 1.0]).unwrap())
        .sample(120, &mut r)
        .unwrap();
    std::fs::write(dir.join("data.csv"), data.to_csv()).unwrap();
    let mut series = String::from("window,x,y\n");
    for w in 0..6 {
        let d = EllipticalModel::gaussian(SpdMatrix::identity(2)).sample(40, &mut r).unwrap();
        for row in d.rows() {
            series.push_str(&format!("w{w},{},{}\n", row[0], row[1]));
        }
    }
    std::fs::write(dir.join("series.csv"), series).unwrap();
    SpdMatrix::identity(2).write_file(dir.join("I.json")).unwrap();
    SpdMatrix::from_row_slice(2, &[3.0, 1.0, 1.0, 1.0])
        .unwrap()
        .write_file(dir.join("S.json"))
        .unwrap();
}

#[test]
fn c10_cli_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_inputs(dir);
    let p = |f: &str| dir.join(f).to_string_lossy().into_owned();
    let runs: Vec<(&str, Vec<String>)> = vec![
        ("depth", vec!["depth".into(), "--data".into(), p("data.csv"), "--sigma".into(), p("S.json")]),
        (
            "shape-depth",
            vec!["shape-depth".into(), "--data".into(), p("data.csv"), "--shape".into(), p("S.json"), "--scale".into(), "tr".into()],
        ),
        ("deepest", vec!["deepest".into(), "--data".into(), p("data.csv"), "--starts".into(), "3".into()]),
        (
            "profile",
            vec![
                "profile".into(), "--data".into(), p("data.csv"), "--a".into(), p("I.json"), "--b".into(), p("S.json"),
                "--kind".into(), "geodesic".into(), "--grid".into(), "21".into(),
            ],
        ),
        (
            "region",
            vec!["region".into(), "--data".into(), p("data.csv"), "--sigma".into(), p("S.json"), "--alpha".into(), "0.2".into()],
        ),
        (
            "detect",
            vec!["detect".into(), "--data".into(), p("series.csv"), "--min-rows".into(), "30".into(), "--mcd-starts".into(), "10".into()],
        ),
        ("oracle", vec!["oracle".into(), "cauchy".into(), "--sigma".into(), p("S.json")]),
    ];
    let bin = env!("CARGO_BIN_EXE_scatter-depth");
    let mut differing = Vec::new();
    for (name, args) in &runs {
        let mut outputs = Vec::new();
        for (attempt, threads) in [1, 8, 1, 8].iter().enumerate() {
            let out = dir.join(format!("{name}-{attempt}.out"));
            let status = Command::new(bin)
                .args(args)
                .args(["--seed", "11", "--directions", "1500", "--threads", &threads.to_string(), "--output"])
                .arg(&out)
                .status()
                .unwrap();
            assert!(status.success(), "{name} failed");
            let mut bytes = std::fs::read(&out).unwrap();
            if *name == "detect" {
                bytes.extend(std::fs::read(out.with_extension("csv")).unwrap());
            }
            outputs.push(bytes);
        }
        if outputs.iter().any(|o| o != &outputs[0]) {
            differing.push(*name);
        }
    }
    verdict(
        "10",
        differing.is_empty(),
        format!("{} subcommands × 4 runs (threads 1, 8); differing: {differing:?}", runs.len()),
    );
}
