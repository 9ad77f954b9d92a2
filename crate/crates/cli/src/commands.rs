//! Subcommands on a single space: sample, validate, strain, chart.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde_json::json;
use strainmap_core::chart::{distortion, Chart};
use strainmap_core::kplane::CurvatureBound;
use strainmap_core::mspace::{check_curvature_bound, FiniteMetricSpace, Model, SampleSpec};
use strainmap_core::strainer::{find_strainer, strain_quality, strained_set, SearchOptions, Strainer, DEFAULT_BUDGET};

use crate::config::{positive, RunFile};
use crate::exit::CliError;
use crate::output::{emit, to_json};

pub fn run_header(command: &str, params: serde_json::Value) -> serde_json::Value {
    json!({ "tool": "strainmap", "version": env!("CARGO_PKG_VERSION"), "command": command, "params": params })
}

pub fn load_space(path: &Path, tol: Option<f64>) -> Result<FiniteMetricSpace> {
    FiniteMetricSpace::load_with_tol(path, tol).with_context(|| format!("loading {}", path.display()))
}

/// Flag, file, then the space's own `k` header.
pub fn curvature(file: &RunFile, flag: Option<f64>, space: &FiniteMetricSpace) -> Result<CurvatureBound> {
    let k = file
        .pick(flag, "k_curv")?
        .or(space.curvature())
        .ok_or_else(|| CliError::Usage("missing --k (the space file has `k none`)".into()))?;
    Ok(CurvatureBound::new(k)?)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelKind {
    Sphere,
    Torus,
    Box,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Model space to sample.
    pub model: Option<ModelKind>,
    /// Sphere radius.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Torus side lengths.
    #[arg(long)]
    pub l1: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    /// Box side lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<f64>>,
    /// Number of points.
    #[arg(long = "n")]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output space file; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn sample(file: &RunFile, a: SampleArgs) -> Result<()> {
    let model = match a.model {
        Some(m) => m,
        None => match file.get::<String>("model")?.as_deref() {
            Some("sphere") => ModelKind::Sphere,
            Some("torus") => ModelKind::Torus,
            Some("box") => ModelKind::Box,
            Some(other) => return Err(CliError::Usage(format!("unknown model `{other}`")).into()),
            None => return Err(CliError::Usage("missing model (sphere, torus or box)".into()).into()),
        },
    };
    let model = match model {
        ModelKind::Sphere => Model::Sphere { radius: positive("radius", file.require(a.radius, "radius_len", "--radius")?)? },
        ModelKind::Torus => Model::FlatTorus {
            l1: positive("l1", file.require(a.l1, "l1_len", "--l1")?)?,
            l2: positive("l2", file.require(a.l2, "l2_len", "--l2")?)?,
        },
        ModelKind::Box => {
            let dims = match a.dims {
                Some(d) => d,
                None => file.get_list("dims_len")?.ok_or_else(|| CliError::Usage("missing --dims".into()))?,
            };
            for &d in &dims {
                positive("box side", d)?;
            }
            Model::EuclidBox { dims }
        }
    };
    let n = file.require(a.count, "N", "--n")?;
    if n < 2 {
        return Err(CliError::Usage(format!("--n must be at least 2, got {n}")).into());
    }
    let spec = SampleSpec { model, n, seed: file.require(a.seed, "seed", "--seed")? };
    let space = spec.sample()?;
    emit(a.out.as_deref(), &space.to_text())?;
    eprintln!("sampled {n} points");
    Ok(())
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub space: PathBuf,
    /// Metric tolerance; defaults to 1e-9 times the diameter.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Also sample quadruples against this curvature bound.
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// A quadruple defect below `-curv_tol` fails the curvature check.
    #[arg(long)]
    pub curv_tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn validate(file: &RunFile, a: ValidateArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.space).with_context(|| format!("reading {}", a.space.display()))?;
    let space = FiniteMetricSpace::parse_unvalidated(&text)?;
    let tol = match file.pick(a.tol, "tol")? {
        Some(t) if t >= 0.0 => t,
        Some(t) => return Err(CliError::Usage(format!("--tol must be non-negative, got {t}")).into()),
        None => space.default_tol(),
    };
    let report = space.validate(tol);
    let k = file.pick(a.k, "k_curv")?;
    let curv_tol = file.pick(a.curv_tol, "curv_tol")?.unwrap_or(1e-9);
    let curvature = match k {
        Some(k) if report.valid => {
            let trials = file.pick(a.trials, "trials")?.unwrap_or(10_000);
            let seed = file.require(a.seed, "seed", "--seed")?;
            Some(check_curvature_bound(&space, CurvatureBound::new(k)?, trials, seed)?)
        }
        _ => None,
    };
    let out = json!({
        "run": run_header("validate", json!({ "space": a.space, "tol": tol, "k": k, "curv_tol": curv_tol })),
        "validation": report,
        "curvature": curvature,
    });
    emit(a.out.as_deref(), &to_json(&out)?)?;
    if !report.valid {
        return Err(CliError::Regime(format!("invalid metric: {}", report.summary())).into());
    }
    if let Some(c) = &curvature {
        if c.min_defect < -curv_tol {
            return Err(CliError::Regime(format!(
                "quadruple defect {:e} at {:?} is below -{curv_tol:e} for k = {}",
                c.min_defect, c.argmin, c.k
            ))
            .into());
        }
    }
    eprintln!("valid: {}", report.summary());
    Ok(())
}

#[derive(Debug, Args)]
pub struct StrainArgs {
    #[arg(long)]
    pub space: PathBuf,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Curvature bound; defaults to the space file's `k`.
    #[arg(long)]
    pub k: Option<f64>,
    /// Strainer size.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long = "R")]
    pub r: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Angle evaluations per point.
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn strain(file: &RunFile, a: StrainArgs) -> Result<()> {
    let space = load_space(&a.space, file.pick(a.tol, "tol")?)?;
    let k = curvature(file, a.k, &space)?;
    let n: usize = file.require(a.n, "n_dim", "--n")?;
    if n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()).into());
    }
    let delta = positive("delta", file.require(a.delta, "delta_rad", "--delta")?)?;
    let r = positive("R", file.require(a.r, "R_len", "--R")?)?;
    let seed = file.require(a.seed, "seed", "--seed")?;
    let budget = file.pick(a.budget, "budget")?.unwrap_or(DEFAULT_BUDGET);
    let points = strained_set(&space, k, n, delta, r, seed, budget);
    let out = json!({
        "run": run_header("strain", json!({
            "space": a.space, "k": k.value(), "n": n, "delta": delta, "R": r, "seed": seed, "budget": budget,
        })),
        "space_size": space.len(),
        "count": points.len(),
        "points": points,
    });
    emit(a.out.as_deref(), &to_json(&out)?)?;
    eprintln!("{} of {} points strained", points.len(), space.len());
    Ok(())
}

#[derive(Debug, Args)]
pub struct ChartArgs {
    #[arg(long)]
    pub space: PathBuf,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub k: Option<f64>,
    /// Base point of the chart.
    #[arg(long)]
    pub base: usize,
    /// Strainer pairs `a:b,a:b`; searched for at the base if absent.
    #[arg(long)]
    pub pairs: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Domain radius around the base.
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_pairs(text: &str) -> Result<Vec<(usize, usize)>, CliError> {
    text.split(',')
        .map(|p| {
            let (a, b) = p.split_once(':').ok_or_else(|| CliError::Usage(format!("pair `{p}` is not `a:b`")))?;
            let id = |t: &str| t.trim().parse::<usize>().map_err(|e| CliError::Usage(format!("pair `{p}`: {e}")));
            Ok((id(a)?, id(b)?))
        })
        .collect()
}

pub fn chart(file: &RunFile, a: ChartArgs) -> Result<()> {
    let space = load_space(&a.space, file.pick(a.tol, "tol")?)?;
    let k = curvature(file, a.k, &space)?;
    if a.base >= space.len() {
        return Err(CliError::Usage(format!("--base {} is out of range for {} points", a.base, space.len())).into());
    }
    let radius = positive("radius", file.require(a.radius, "chart_radius_len", "--radius")?)?;
    let seed = file.require(a.seed, "seed", "--seed")?;
    let strainer = match &a.pairs {
        Some(p) => {
            let pairs = parse_pairs(p)?;
            if let Some(&(x, y)) = pairs.iter().find(|&&(x, y)| x >= space.len() || y >= space.len()) {
                return Err(CliError::Usage(format!("pair {x}:{y} is out of range")).into());
            }
            Strainer::new(a.base, pairs)
        }
        None => {
            let n = file.require(a.n, "n_dim", "--n")?;
            let delta = positive("delta", file.require(a.delta, "delta_rad", "--delta")?)?;
            find_strainer(&space, k, a.base, n, delta, None, seed, &SearchOptions::default())
                .ok_or_else(|| CliError::Regime(format!("no ({n}, {delta})-strainer found at point {}", a.base)))?
                .strainer
        }
    };
    let quality = strain_quality(&space, k, &strainer)?;
    let chart = Chart::build(&space, &strainer, radius)?;
    let dist = distortion(&space, &chart, seed)?;
    let out = json!({
        "run": run_header("chart", json!({
            "space": a.space, "k": k.value(), "base": a.base, "radius": radius, "seed": seed,
        })),
        "quality": quality,
        "domain_size": chart.domain.len(),
        "distortion": dist,
        "chart": chart,
    });
    emit(a.out.as_deref(), &to_json(&out)?)?;
    eprintln!("chart on {} points, delta_star {:e}, max distortion {:e}", chart.domain.len(), quality.delta_star, dist.max);
    Ok(())
}
