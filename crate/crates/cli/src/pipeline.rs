//! Two-space subcommands: glue, verify, and the planar center-of-mass run.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::Deserialize;
use serde_json::json;
use strainmap_core::chart::{distortion, Chart, WeightVector};
use strainmap_core::glue::{glue, nearest_point_map, GhMap, GlueConfig, GlueResult};
use strainmap_core::mspace::{sample_euclid_box, FiniteMetricSpace};
use strainmap_core::strainer::{Strainer, DEFAULT_BUDGET};
use strainmap_core::verify::{
    consistency_4_6_check, counterexample_1_3, distance_report, lemma_2_1_2_check, sample_claim_pairs,
};

use crate::commands::{curvature, load_space, run_header};
use crate::config::{parse_list, positive, RunFile};
use crate::exit::CliError;
use crate::output::{emit, num, to_json, write_atomic, Csv};

#[derive(Debug, Args)]
pub struct GlueArgs {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    /// `auto` for the nearest-point map on shared model coordinates, or a
    /// file with one `i j` line per source point.
    #[arg(long)]
    pub map: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long = "R")]
    pub r: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub budget: Option<usize>,
    /// Run even when the map distortion is not below δ²R.
    #[arg(long)]
    pub force: bool,
    /// GlueResult JSON; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-point CSV summary.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn read_map(path: &str, n1: usize, n2: usize) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading map {path}"))?;
    let mut table = vec![None; n1];
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: String| CliError::Usage(format!("map line {}: {msg}", line_no + 1));
        let mut it = line.split_whitespace();
        let (Some(i), Some(j), None) = (it.next(), it.next(), it.next()) else {
            return Err(bad("expected `i j`".into()).into());
        };
        let i: usize = i.parse().map_err(|e| bad(format!("{e}")))?;
        let j: usize = j.parse().map_err(|e| bad(format!("{e}")))?;
        if i >= n1 || j >= n2 {
            return Err(bad(format!("{i} -> {j} is out of range ({n1} source, {n2} target points)")).into());
        }
        if table[i].replace(j).is_some() {
            return Err(bad(format!("source point {i} is mapped twice")).into());
        }
    }
    table
        .into_iter()
        .enumerate()
        .map(|(i, t)| t.ok_or_else(|| CliError::Usage(format!("map has no line for source point {i}")).into()))
        .collect()
}

pub fn glue_cmd(file: &RunFile, a: GlueArgs) -> Result<()> {
    let tol = file.pick(a.tol, "tol")?;
    let s1 = load_space(&a.source, tol)?;
    let s2 = load_space(&a.target, tol)?;
    let k = curvature(file, a.k, &s1)?;
    let mut cfg = GlueConfig::new(
        positive("delta", file.require(a.delta, "delta_rad", "--delta")?)?,
        positive("R", file.require(a.r, "R_len", "--R")?)?,
        k.value(),
        file.require(a.n, "n_dim", "--n")?,
        file.require(a.seed, "seed", "--seed")?,
    );
    cfg.budget = file.pick(a.budget, "budget")?.unwrap_or(DEFAULT_BUDGET);
    cfg.force = a.force || file.get::<bool>("force")?.unwrap_or(false);
    cfg.check().map_err(|e| CliError::Usage(e.to_string()))?;
    let map = file.pick(a.map, "map")?.unwrap_or_else(|| "auto".into());
    let h = if map == "auto" {
        nearest_point_map(&s1, &s2)?
    } else {
        GhMap::new(&s1, &s2, read_map(&map, s1.len(), s2.len())?)?
    };
    if h.nu >= cfg.nu_limit() && !cfg.force {
        return Err(CliError::Regime(format!(
            "map distortion nu = {:e} (pair {:?}) is not below delta^2 R = {:e}; rerun with --force to measure anyway",
            h.nu,
            h.nu_pair,
            cfg.nu_limit()
        ))
        .into());
    }
    let res = glue(&s1, &s2, &h, &cfg)?;
    let out = json!({
        "run": run_header("glue", json!({ "source": a.source, "target": a.target, "map": map, "config": cfg })),
        "result": res,
    });
    emit(a.out.as_deref(), &to_json(&out)?)?;
    if let Some(path) = &a.csv {
        let mut csv = Csv::new(&["point", "h", "hbar", "sigma", "closeness", "sigma_too_small", "residual_flag"]);
        for p in &res.points {
            csv.row(&[
                p.point.to_string(),
                p.h.to_string(),
                p.hbar.to_string(),
                num(p.sigma),
                num(p.closeness),
                p.sigma_too_small.to_string(),
                p.residual_flag.to_string(),
            ]);
        }
        write_atomic(path, &csv.finish())?;
    }
    eprintln!(
        "glued {} points with {} centers ({} dropped); nu {:e} vs limit {:e}{}",
        res.points.len(),
        res.centers.len(),
        res.dropped.len(),
        res.nu,
        res.nu_limit,
        if res.in_regime { "" } else { " [OUT OF REGIME]" }
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// JSON written by `glue`.
    #[arg(long)]
    pub result: PathBuf,
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Distance band `lo,hi` for the distortion report; defaults to the
    /// whole source diameter.
    #[arg(long, value_delimiter = ',')]
    pub band: Option<Vec<f64>>,
    /// Number of near pairs traced through the recursion.
    #[arg(long)]
    pub claims: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Threshold for the distance defect.
    #[arg(long)]
    pub max_defect: Option<f64>,
    /// Threshold for both claim defects.
    #[arg(long)]
    pub max_claim: Option<f64>,
    /// Exit 3 when a quantity exceeds its threshold.
    #[arg(long)]
    pub strict: bool,
    /// Markdown summary; stdout if absent.
    #[arg(long)]
    pub md: Option<PathBuf>,
    /// Per-pair CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Full JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Deserialize)]
struct GlueFile {
    result: GlueResult,
}

pub fn verify_cmd(file: &RunFile, a: VerifyArgs) -> Result<()> {
    let tol = file.pick(a.tol, "tol")?;
    let s1 = load_space(&a.source, tol)?;
    let s2 = load_space(&a.target, tol)?;
    let text = std::fs::read_to_string(&a.result).with_context(|| format!("reading {}", a.result.display()))?;
    let res = serde_json::from_str::<GlueFile>(&text)
        .with_context(|| format!("parsing glue result {}", a.result.display()))?
        .result;
    if res.h_table.len() != s1.len() || res.h_table.iter().any(|&j| j >= s2.len()) {
        return Err(CliError::Usage("glue result does not match the given spaces".into()).into());
    }
    let band = match a.band {
        Some(b) => b,
        None => match (file.get::<f64>("band_lo_len")?, file.get::<f64>("band_hi_len")?) {
            (Some(lo), Some(hi)) => vec![lo, hi],
            (None, None) => vec![0.0, s1.diameter()],
            _ => return Err(CliError::Usage("give both band_lo_len and band_hi_len".into()).into()),
        },
    };
    let [lo, hi] = band[..] else {
        return Err(CliError::Usage(format!("--band takes two values, got {}", band.len())).into());
    };
    let claims_max = file.pick(a.claims, "claims")?.unwrap_or(100);
    let seed = file.require(a.seed, "seed", "--seed")?;
    let max_defect = file.pick(a.max_defect, "max_defect")?.unwrap_or(0.15);
    let max_claim = file.pick(a.max_claim, "max_claim")?.unwrap_or(0.15);

    let dist = distance_report(&s1, &s2, &res, [lo, hi]).map_err(|e| CliError::Usage(e.to_string()))?;
    let pairs = res.local_pairs(&s1, &s2)?;
    let sample = sample_claim_pairs(&s1, &s2, &res, &pairs, claims_max, seed);
    let k = strainmap_core::kplane::CurvatureBound::new(res.config.k)?;
    let consistency: Vec<Option<f64>> = sample
        .claims
        .iter()
        .map(|c| consistency_4_6_check(&s1, &s2, k, &res, &pairs, c.y, c.z).ok().map(|r| r.max_spread))
        .collect();
    let max_spread = consistency.iter().flatten().copied().fold(0.0, f64::max);

    let rows = [
        ("regime: nu", res.nu, res.nu_limit, res.in_regime),
        ("min Sigma", res.min_sigma, 1.0 / 3.0, res.sigma_violations == 0),
        ("max closeness", res.max_closeness, res.closeness_bound, res.closeness_ok()),
        ("max distance defect", dist.max_defect, max_defect, !dist.empty && dist.max_defect <= max_defect),
        ("max claim 1 defect", sample.max_claim1, max_claim, sample.max_claim1 <= max_claim),
        ("max claim 2 defect", sample.max_claim2, max_claim, sample.max_claim2 <= max_claim),
    ];
    let mut md = String::from("# Glued map report\n\n| quantity | value | threshold | ok |\n|---|---|---|---|\n");
    for (name, v, t, ok) in &rows {
        md.push_str(&format!("| {name} | {} | {} | {} |\n", num(*v), num(*t), if *ok { "yes" } else { "NO" }));
    }
    md.push_str(&format!(
        "\n- delta = {}, R = {}, k = {}, n = {}, seed = {}\n",
        num(res.config.delta),
        num(res.config.r),
        num(res.config.k),
        res.config.n,
        res.config.seed
    ));
    md.push_str(&format!(
        "- {} strained points, {} centers, {} dropped, multiplicity {}\n",
        res.points.len(),
        res.centers.len(),
        res.dropped.len(),
        res.multiplicity
    ));
    md.push_str(&format!(
        "- band [{}, {}]: {} pairs; near (< {}) max {}, far max {}\n",
        num(lo),
        num(hi),
        dist.pair_count,
        num(dist.split),
        num(dist.near.max_defect),
        num(dist.far.max_defect)
    ));
    md.push_str(&format!(
        "- claim pairs: {} of {} admissible; max consistency spread {}\n",
        sample.claims.len(),
        sample.admissible,
        num(max_spread)
    ));
    emit(a.md.as_deref(), &md)?;

    if let Some(path) = &a.csv {
        let mut csv = Csv::new(&["y", "z", "dist", "claim1_defect", "claim2_defect", "matches_hbar", "consistency_spread"]);
        for (c, s) in sample.claims.iter().zip(&consistency) {
            csv.row(&[
                c.y.to_string(),
                c.z.to_string(),
                num(c.dist),
                num(c.claim1_defect),
                num(c.claim2_defect),
                c.matches_hbar.to_string(),
                s.map(num).unwrap_or_default(),
            ]);
        }
        write_atomic(path, &csv.finish())?;
    }
    if let Some(path) = &a.out {
        let thresholds: Vec<_> =
            rows.iter().map(|(n, v, t, ok)| json!({ "quantity": n, "value": v, "threshold": t, "ok": ok })).collect();
        let out = json!({
            "run": run_header("verify", json!({
                "result": a.result, "source": a.source, "target": a.target, "band": [lo, hi], "claims": claims_max,
                "seed": seed, "max_defect": max_defect, "max_claim": max_claim,
            })),
            "thresholds": thresholds,
            "distance": dist,
            "claims": sample,
            "consistency": consistency,
        });
        write_atomic(path, &to_json(&out)?)?;
    }
    if a.strict {
        if let Some((name, v, t, _)) = rows.iter().find(|r| !r.3) {
            return Err(CliError::Regime(format!("{name} = {v:e} misses its threshold {t:e}")).into());
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Layout {
    /// Square grid with spacing 0.01; shifted families are exact translates.
    Grid,
    /// Uniform sample of the unit square.
    Random,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    #[arg(long, value_enum, default_value_t = Layout::Grid)]
    pub layout: Layout,
    /// Grid side in points.
    #[arg(long, default_value_t = 61)]
    pub grid: usize,
    /// Sample points for the random layout.
    #[arg(long = "n")]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Weights on the three points, comma separated.
    #[arg(long)]
    pub w1: Option<String>,
    #[arg(long)]
    pub w2: Option<String>,
    /// x-offset of the second family in the segment check.
    #[arg(long)]
    pub shift: Option<f64>,
    /// Weight-condition constant.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Markdown summary; stdout if absent.
    #[arg(long)]
    pub md: Option<PathBuf>,
}

fn weights(file: &RunFile, flag: Option<String>, key: &str, default: [f64; 3]) -> Result<WeightVector> {
    let w = match file.pick(flag, key)? {
        Some(t) => parse_list(&t).map_err(|e| CliError::Usage(format!("--{key}: {e}")))?,
        None => default.to_vec(),
    };
    if w.len() != 3 {
        return Err(CliError::Usage(format!("--{key} needs three weights, got {}", w.len())).into());
    }
    WeightVector::new(w).map_err(|e| CliError::Usage(format!("--{key}: {e}")).into())
}

const GRID_SPACING: f64 = 0.01;

/// Planar points plus four arms at distance 100 from the point nearest `center`.
fn with_arms(mut pts: Vec<Vec<f64>>, center: (f64, f64)) -> Result<(FiniteMetricSpace, Strainer)> {
    let n = pts.len();
    let base = nearest(&pts, center.0, center.1);
    let (bx, by) = (pts[base][0], pts[base][1]);
    let arm = 100.0;
    pts.extend([vec![bx + arm, by], vec![bx - arm, by], vec![bx, by + arm], vec![bx, by - arm]]);
    let space = FiniteMetricSpace::from_euclidean_points(vec![2.0 * arm + 2.0; 2], pts)?;
    Ok((space, Strainer::new(base, vec![(n, n + 1), (n + 2, n + 3)])))
}

fn nearest(pts: &[Vec<f64>], x: f64, y: f64) -> usize {
    let d = |p: &Vec<f64>| (p[0] - x).powi(2) + (p[1] - y).powi(2);
    (0..pts.len()).min_by(|&a, &b| d(&pts[a]).total_cmp(&d(&pts[b]))).expect("nonempty sample")
}

pub fn counterexample_cmd(file: &RunFile, a: CounterexampleArgs) -> Result<()> {
    let seed = file.require(a.seed, "seed", "--seed")?;
    let radius = positive("radius", file.pick(a.radius, "chart_radius_len")?.unwrap_or(0.5))?;
    let w1 = weights(file, a.w1, "w1", [0.5, 0.3, 0.2])?;
    let w2 = weights(file, a.w2, "w2", [0.3, 0.5, 0.2])?;
    let shift = file.pick(a.shift, "shift_len")?.unwrap_or(0.1);
    let kappa = positive("kappa", file.pick(a.kappa, "kappa")?.unwrap_or(0.01))?;

    let (pts, center, anchors) = match a.layout {
        Layout::Grid => {
            let m = a.grid;
            if m < 5 {
                return Err(CliError::Usage(format!("--grid must be at least 5, got {m}")).into());
            }
            let pts: Vec<Vec<f64>> =
                (0..m * m).map(|i| vec![(i / m) as f64 * GRID_SPACING, (i % m) as f64 * GRID_SPACING]).collect();
            let side = (m - 1) as f64 * GRID_SPACING;
            let at = |fx: f64, fy: f64| (fx * side, fy * side);
            (pts, at(0.5, 0.5), [at(1.0 / 3.0, 1.0 / 3.0), at(2.0 / 3.0, 1.0 / 3.0), at(1.0 / 3.0, 2.0 / 3.0)])
        }
        Layout::Random => {
            let n = file.pick(a.count, "N")?.unwrap_or(2000);
            if n < 10 {
                return Err(CliError::Usage(format!("--n must be at least 10, got {n}")).into());
            }
            let pts = sample_euclid_box(&[1.0, 1.0], n, seed)?.coords().expect("box samples keep coords").points.clone();
            (pts, (0.5, 0.5), [(0.3, 0.35), (0.7, 0.35), (0.5, 0.7)])
        }
    };
    let n = pts.len();
    let q: Vec<usize> = anchors.iter().map(|&(x, y)| nearest(&pts, x, y)).collect();
    let r: Vec<usize> = q.iter().map(|&i| nearest(&pts, pts[i][0] + shift, pts[i][1])).collect();
    let (space, strainer) = with_arms(pts, center)?;
    let chart = Chart::build(&space, &strainer, radius)?;
    for &p in q.iter().chain(&r) {
        if !chart.contains(p) {
            return Err(CliError::Usage(format!("point {p} is outside the chart; raise --radius")).into());
        }
    }
    let k = strainmap_core::kplane::CurvatureBound::new(0.0)?;
    let ce = counterexample_1_3(&space, &chart, &q, &w1, &w2)?;
    let lemma = lemma_2_1_2_check(&space, k, &chart, &q, &r, &w1, &w2, kappa)?;
    let dist = distortion(&space, &chart, seed)?;

    let out = json!({
        "run": run_header("counterexample", json!({
            "layout": format!("{:?}", a.layout).to_lowercase(), "points": n, "seed": seed, "radius": radius, "w1": w1, "w2": w2, "shift": shift, "kappa": kappa,
        })),
        "q": q,
        "r": r,
        "chart_distortion": dist,
        "counterexample": ce,
        "lemma": lemma,
    });
    if let Some(path) = &a.out {
        write_atomic(path, &to_json(&out)?)?;
    }
    let opt = |v: Option<f64>| v.map(num).unwrap_or_else(|| "n/a".into());
    let md = format!(
        "# Centers of mass under two weight vectors\n\n\
         | quantity | value |\n|---|---|\n\
         | verdict | {:?} |\n\
         | com distance | {} |\n\
         | predicted from images | {} |\n\
         | chart distortion | {} |\n\
         | weight condition | {} ({} vs {}) |\n\
         | segment ratio defect | {} |\n\
         | segment angle defect | {} |\n",
        ce.verdict,
        num(ce.com_distance),
        num(ce.predicted),
        num(dist.max),
        if lemma.hypotheses.weight_condition { "holds" } else { "violated" },
        num(lemma.hypotheses.weight_lhs),
        num(lemma.hypotheses.weight_rhs),
        opt(lemma.max_ratio_defect),
        opt(lemma.max_angle_defect),
    );
    emit(a.md.as_deref(), &md)?;
    Ok(())
}
