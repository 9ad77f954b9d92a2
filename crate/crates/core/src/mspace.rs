//! Finite metric spaces sampled from the model families, together with
//! validation, perturbation, the four-point curvature test and the text file
//! format.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kplane::{comparison_angle, CurvatureBound};

/// Relative validation tolerance; multiplied by the diameter.
pub const DEFAULT_REL_TOL: f64 = 1e-9;

/// Maximum number of offending triples kept in a [`ValidationReport`].
const MAX_OFFENDERS: usize = 16;

/// The model space a sample was drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Sphere { radius: f64 },
    FlatTorus { l1: f64, l2: f64 },
    EuclidBox { dims: Vec<f64> },
}

impl Model {
    /// Coordinate dimension of points in this model.
    pub fn coord_dim(&self) -> usize {
        match self {
            Model::Sphere { .. } => 3,
            Model::FlatTorus { .. } => 2,
            Model::EuclidBox { dims } => dims.len(),
        }
    }

    /// Intrinsic distance between two coordinate tuples.
    pub fn distance(&self, u: &[f64], v: &[f64]) -> f64 {
        match self {
            Model::Sphere { radius } => {
                let cross = [
                    u[1] * v[2] - u[2] * v[1],
                    u[2] * v[0] - u[0] * v[2],
                    u[0] * v[1] - u[1] * v[0],
                ];
                let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
                let c = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
                radius * c.atan2(dot)
            }
            Model::FlatTorus { l1, l2 } => {
                let dx = (u[0] - v[0]).abs();
                let dy = (u[1] - v[1]).abs();
                // min over the nine lattice shifts of the planar distance
                let mut best = f64::INFINITY;
                for sx in [-1.0, 0.0, 1.0] {
                    for sy in [-1.0, 0.0, 1.0] {
                        let ex = dx + sx * l1;
                        let ey = dy + sy * l2;
                        best = best.min((ex * ex + ey * ey).sqrt());
                    }
                }
                best
            }
            Model::EuclidBox { .. } => u
                .iter()
                .zip(v)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
        }
    }

    fn check(&self) -> Result<()> {
        let ok = match self {
            Model::Sphere { radius } => *radius > 0.0 && radius.is_finite(),
            Model::FlatTorus { l1, l2 } => *l1 > 0.0 && *l2 > 0.0 && l1.is_finite() && l2.is_finite(),
            Model::EuclidBox { dims } => !dims.is_empty() && dims.iter().all(|d| *d > 0.0 && d.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("model parameters must be positive: {self:?}")))
        }
    }
}

/// Sampler parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub model: Model,
    pub n: usize,
    pub seed: u64,
}

impl SampleSpec {
    pub fn sample(&self) -> Result<FiniteMetricSpace> {
        match &self.model {
            Model::Sphere { radius } => sample_sphere(*radius, self.n, self.seed),
            Model::FlatTorus { l1, l2 } => sample_flat_torus(*l1, *l2, self.n, self.seed),
            Model::EuclidBox { dims } => sample_euclid_box(dims, self.n, self.seed),
        }
    }
}

/// Per-point coordinates in the generating model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCoords {
    pub model: Model,
    pub points: Vec<Vec<f64>>,
}

/// A finite metric space on points `0..n`; point ids double as labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    n: usize,
    dist: Vec<f64>,
    curvature: Option<f64>,
    coords: Option<ModelCoords>,
}

impl FiniteMetricSpace {
    /// Build from a full row-major matrix and check every metric invariant.
    pub fn from_matrix(n: usize, dist: Vec<f64>) -> Result<Self> {
        let space = Self::from_matrix_unchecked(n, dist)?;
        let report = space.validate(space.default_tol());
        if report.valid {
            Ok(space)
        } else {
            Err(Error::Validation(report.summary()))
        }
    }

    /// Build from a full row-major matrix, checking only its shape.
    ///
    /// Used to inspect malformed matrices with [`FiniteMetricSpace::validate`].
    pub fn from_matrix_unchecked(n: usize, dist: Vec<f64>) -> Result<Self> {
        if dist.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: dist.len() });
        }
        Ok(Self { n, dist, curvature: None, coords: None })
    }

    /// Points on the sphere of the given radius; coordinates are rescaled to
    /// the unit sphere.
    pub fn from_sphere_points(radius: f64, points: Vec<[f64; 3]>) -> Result<Self> {
        let model = Model::Sphere { radius };
        model.check()?;
        let points = points
            .into_iter()
            .map(|p| {
                let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                vec![p[0] / norm, p[1] / norm, p[2] / norm]
            })
            .collect();
        let mut space = Self::from_model_points(model, points)?;
        space.curvature = Some(1.0 / (radius * radius));
        Ok(space)
    }

    pub fn from_torus_points(l1: f64, l2: f64, points: Vec<[f64; 2]>) -> Result<Self> {
        let model = Model::FlatTorus { l1, l2 };
        model.check()?;
        let points = points
            .into_iter()
            .map(|p| vec![p[0].rem_euclid(l1), p[1].rem_euclid(l2)])
            .collect();
        let mut space = Self::from_model_points(model, points)?;
        space.curvature = Some(0.0);
        Ok(space)
    }

    /// Euclidean points; `dims` records the box the points are meant to fill
    /// but points outside it are accepted.
    pub fn from_euclidean_points(dims: Vec<f64>, points: Vec<Vec<f64>>) -> Result<Self> {
        let model = Model::EuclidBox { dims };
        model.check()?;
        let mut space = Self::from_model_points(model, points)?;
        space.curvature = Some(0.0);
        Ok(space)
    }

    /// Distances computed from model coordinates. Rejects coincident points.
    pub fn from_model_points(model: Model, points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        let dim = model.coord_dim();
        if let Some(bad) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.len() });
        }
        let mut dist = vec![0.0; n * n];
        dist.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
            for (j, d) in row.iter_mut().enumerate() {
                if i != j {
                    *d = model.distance(&points[i], &points[j]);
                }
            }
        });
        for i in 0..n {
            for j in (i + 1)..n {
                let d = dist[i * n + j];
                if d <= 0.0 || !d.is_finite() {
                    return Err(Error::Validation(format!(
                        "points {i} and {j} are at distance {d}; off-diagonal distances must be positive"
                    )));
                }
            }
        }
        Ok(Self { n, dist, curvature: None, coords: Some(ModelCoords { model, points }) })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.dist
    }

    /// Curvature bound recorded with the space, if any.
    pub fn curvature(&self) -> Option<f64> {
        self.curvature
    }

    pub fn with_curvature(mut self, k: Option<f64>) -> Self {
        self.curvature = k;
        self
    }

    pub fn coords(&self) -> Option<&ModelCoords> {
        self.coords.as_ref()
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    pub fn default_tol(&self) -> f64 {
        DEFAULT_REL_TOL * self.diameter()
    }

    /// Ids of all points within `radius` of `center` (inclusive), ascending.
    pub fn ball(&self, center: usize, radius: f64) -> Vec<usize> {
        (0..self.n).filter(|&q| self.d(center, q) <= radius).collect()
    }

    /// Mean distance from a point to its nearest neighbour.
    pub fn mean_spacing(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let total: f64 = (0..self.n)
            .into_par_iter()
            .map(|i| {
                (0..self.n)
                    .filter(|&j| j != i)
                    .map(|j| self.d(i, j))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum();
        total / self.n as f64
    }

    /// Scan symmetry, diagonal, positivity and every triple.
    pub fn validate(&self, tol: f64) -> ValidationReport {
        let n = self.n;
        let mut worst_symmetry = 0.0f64;
        let mut worst_diagonal = 0.0f64;
        let mut nonpositive = 0usize;
        let mut nonfinite = 0usize;
        for i in 0..n {
            worst_diagonal = worst_diagonal.max(self.d(i, i).abs());
            for j in (i + 1)..n {
                let (a, b) = (self.d(i, j), self.d(j, i));
                if !a.is_finite() || !b.is_finite() {
                    nonfinite += 1;
                    continue;
                }
                worst_symmetry = worst_symmetry.max((a - b).abs());
                if a <= 0.0 || b <= 0.0 {
                    nonpositive += 1;
                }
            }
        }

        // Triangle defect d(x,z) − d(x,y) − d(y,z) over x < z and every y.
        let per_x: Vec<(f64, Vec<(usize, usize, usize, f64)>)> = (0..n)
            .into_par_iter()
            .map(|x| {
                let mut worst = 0.0f64;
                let mut offenders = Vec::new();
                let rx = self.row(x);
                for y in 0..n {
                    let ry = self.row(y);
                    let dxy = rx[y];
                    for z in (x + 1)..n {
                        let defect = rx[z] - dxy - ry[z];
                        if defect > worst {
                            worst = defect;
                        }
                        if defect > tol {
                            offenders.push((x, y, z, defect));
                            if offenders.len() > MAX_OFFENDERS {
                                sort_offenders(&mut offenders);
                                offenders.truncate(MAX_OFFENDERS);
                            }
                        }
                    }
                }
                (worst, offenders)
            })
            .collect();
        let mut worst_triangle = 0.0f64;
        let mut offending = Vec::new();
        for (w, offs) in per_x {
            worst_triangle = worst_triangle.max(w);
            offending.extend(offs);
        }
        sort_offenders(&mut offending);
        offending.truncate(MAX_OFFENDERS);

        let valid = worst_triangle <= tol
            && worst_symmetry <= tol
            && worst_diagonal <= tol
            && nonpositive == 0
            && nonfinite == 0;
        ValidationReport {
            n,
            tol,
            worst_triangle_defect: worst_triangle,
            worst_symmetry_defect: worst_symmetry,
            worst_diagonal,
            nonpositive_pairs: nonpositive,
            nonfinite_pairs: nonfinite,
            offending_triples: offending
                .into_iter()
                .map(|(x, y, z, defect)| OffendingTriple { x, y, z, defect })
                .collect(),
            valid,
        }
    }

    /// Write the text format. Distances are written with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.n * self.n * 25 + 64);
        let _ = writeln!(out, "N {}", self.n);
        match self.curvature {
            Some(k) => {
                let _ = writeln!(out, "k {}", fmt_f64(k));
            }
            None => out.push_str("k none\n"),
        }
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|&d| fmt_f64(d)).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        if let Some(c) = &self.coords {
            let header = match &c.model {
                Model::Sphere { radius } => format!("sphere {}", fmt_f64(*radius)),
                Model::FlatTorus { l1, l2 } => format!("torus {} {}", fmt_f64(*l1), fmt_f64(*l2)),
                Model::EuclidBox { dims } => {
                    let d: Vec<String> = dims.iter().map(|&v| fmt_f64(v)).collect();
                    format!("box {}", d.join(" "))
                }
            };
            let _ = writeln!(out, "# coords {header}");
            for p in &c.points {
                let row: Vec<String> = p.iter().map(|&v| fmt_f64(v)).collect();
                out.push_str(&row.join(" "));
                out.push('\n');
            }
        }
        out
    }

    /// Parse the text format and validate the matrix with the given tolerance
    /// (`None` uses `1e-9 · diameter`).
    pub fn from_text(text: &str, tol: Option<f64>) -> Result<Self> {
        let space = parse_text(text)?;
        let tol = tol.unwrap_or_else(|| space.default_tol());
        let report = space.validate(tol);
        if !report.valid {
            return Err(Error::Validation(report.summary()));
        }
        Ok(space)
    }

    /// Parse the text format without validating the matrix.
    pub fn parse_unvalidated(text: &str) -> Result<Self> {
        parse_text(text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?, None)
    }

    pub fn load_with_tol(path: impl AsRef<Path>, tol: Option<f64>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?, tol)
    }
}

fn sort_offenders(v: &mut [(usize, usize, usize, f64)]) {
    v.sort_by(|a, b| b.3.total_cmp(&a.3).then((a.0, a.1, a.2).cmp(&(b.0, b.1, b.2))));
}

/// Format with 17 significant digits; parses back to the same bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_text(text: &str) -> Result<FiniteMetricSpace> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let perr = |line: usize, msg: &str| Error::Parse { line, msg: msg.to_string() };

    let (ln, first) = lines.next().ok_or_else(|| perr(1, "empty file"))?;
    let n: usize = first
        .strip_prefix("N ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| perr(ln, "expected `N <integer>`"))?;

    let (ln, second) = lines.next().ok_or_else(|| perr(2, "missing `k` line"))?;
    let kstr = second
        .strip_prefix("k ")
        .map(str::trim)
        .ok_or_else(|| perr(ln, "expected `k <decimal or none>`"))?;
    let curvature = if kstr == "none" {
        None
    } else {
        Some(kstr.parse::<f64>().map_err(|_| perr(ln, "bad curvature value"))?)
    };

    let mut dist = Vec::with_capacity(n * n);
    for row in 0..n {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| perr(row + 3, &format!("truncated: expected {n} matrix rows, found {row}")))?;
        let before = dist.len();
        for tok in line.split_whitespace() {
            dist.push(tok.parse::<f64>().map_err(|_| perr(ln, &format!("bad number `{tok}`")))?);
        }
        if dist.len() - before != n {
            return Err(perr(ln, &format!("expected {n} entries, found {}", dist.len() - before)));
        }
    }

    let mut coords = None;
    let mut rest = lines.skip_while(|(_, l)| l.is_empty());
    if let Some((ln, header)) = rest.next() {
        let spec = header
            .strip_prefix("# coords")
            .ok_or_else(|| perr(ln, "unexpected content after matrix"))?;
        let toks: Vec<&str> = spec.split_whitespace().collect();
        let nums = |xs: &[&str]| -> Result<Vec<f64>> {
            xs.iter()
                .map(|t| t.parse::<f64>().map_err(|_| perr(ln, &format!("bad number `{t}`"))))
                .collect()
        };
        let model = match toks.first().copied() {
            Some("sphere") if toks.len() == 2 => Model::Sphere { radius: nums(&toks[1..])?[0] },
            Some("torus") if toks.len() == 3 => {
                let v = nums(&toks[1..])?;
                Model::FlatTorus { l1: v[0], l2: v[1] }
            }
            Some("box") if toks.len() >= 2 => Model::EuclidBox { dims: nums(&toks[1..])? },
            _ => return Err(perr(ln, "expected `# coords sphere <r>|torus <L1> <L2>|box <dims..>`")),
        };
        let dim = model.coord_dim();
        let mut points = Vec::with_capacity(n);
        for i in 0..n {
            let (ln, line) = rest
                .next()
                .ok_or_else(|| perr(ln + i + 1, "truncated coordinate block"))?;
            let p: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| perr(ln, &format!("bad number `{t}`"))))
                .collect::<Result<_>>()?;
            if p.len() != dim {
                return Err(perr(ln, &format!("expected {dim} coordinates, found {}", p.len())));
            }
            points.push(p);
        }
        if let Some((ln, l)) = rest.find(|(_, l)| !l.is_empty()) {
            return Err(perr(ln, &format!("unexpected trailing content `{l}`")));
        }
        coords = Some(ModelCoords { model, points });
    }

    Ok(FiniteMetricSpace { n, dist, curvature, coords })
}

/// Outcome of [`FiniteMetricSpace::validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n: usize,
    pub tol: f64,
    pub worst_triangle_defect: f64,
    pub worst_symmetry_defect: f64,
    pub worst_diagonal: f64,
    pub nonpositive_pairs: usize,
    pub nonfinite_pairs: usize,
    /// Largest triangle violations `d(x,z) > d(x,y) + d(y,z) + tol`.
    pub offending_triples: Vec<OffendingTriple>,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffendingTriple {
    pub x: usize,
    pub y: usize,
    pub z: usize,
    pub defect: f64,
}

impl ValidationReport {
    pub fn summary(&self) -> String {
        format!(
            "triangle defect {:e}, symmetry defect {:e}, diagonal {:e}, {} nonpositive and {} non-finite pairs (tol {:e})",
            self.worst_triangle_defect,
            self.worst_symmetry_defect,
            self.worst_diagonal,
            self.nonpositive_pairs,
            self.nonfinite_pairs,
            self.tol
        )
    }
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 points, got {n}")));
    }
    Ok(())
}

/// `n` points uniform on the 2-sphere of the given radius, with exact
/// great-circle distances.
pub fn sample_sphere(radius: f64, n: usize, seed: u64) -> Result<FiniteMetricSpace> {
    check_n(n)?;
    Model::Sphere { radius }.check()?;
    let mut rng = rng_for(seed);
    let points = (0..n)
        .map(|_| loop {
            let v: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
            if v.iter().map(|x| x * x).sum::<f64>() > 1e-12 {
                break v;
            }
        })
        .collect();
    FiniteMetricSpace::from_sphere_points(radius, points)
}

/// `n` points uniform on the flat torus `[0,L1) × [0,L2)`.
pub fn sample_flat_torus(l1: f64, l2: f64, n: usize, seed: u64) -> Result<FiniteMetricSpace> {
    check_n(n)?;
    Model::FlatTorus { l1, l2 }.check()?;
    let mut rng = rng_for(seed);
    let points = (0..n)
        .map(|_| [rng.random_range(0.0..l1), rng.random_range(0.0..l2)])
        .collect();
    FiniteMetricSpace::from_torus_points(l1, l2, points)
}

/// `n` points uniform in the box `Π [0, dims[i]]`.
pub fn sample_euclid_box(dims: &[f64], n: usize, seed: u64) -> Result<FiniteMetricSpace> {
    check_n(n)?;
    Model::EuclidBox { dims: dims.to_vec() }.check()?;
    let mut rng = rng_for(seed);
    let points = (0..n)
        .map(|_| dims.iter().map(|&d| rng.random_range(0.0..d)).collect())
        .collect();
    FiniteMetricSpace::from_euclidean_points(dims.to_vec(), points)
}

/// Multiply each distance by an independent factor in `[1−a, 1+a]` and repair
/// the triangle inequality by shortest-path closure.
///
/// Model coordinates are dropped since they no longer describe the metric.
pub fn perturb_metric(space: &FiniteMetricSpace, amplitude: f64, seed: u64) -> Result<FiniteMetricSpace> {
    if !(0.0..0.5).contains(&amplitude) {
        return Err(Error::InvalidInput(format!("amplitude must lie in [0, 0.5), got {amplitude}")));
    }
    if amplitude == 0.0 {
        return Ok(space.clone());
    }
    let n = space.n;
    let mut rng = rng_for(seed);
    let mut dist = space.dist.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let f = rng.random_range((1.0 - amplitude)..=(1.0 + amplitude));
            let d = space.d(i, j) * f;
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    metric_closure(n, &mut dist);
    Ok(FiniteMetricSpace { n, dist, curvature: space.curvature, coords: None })
}

/// All-pairs shortest paths over the complete weighted graph (Floyd–Warshall).
pub fn metric_closure(n: usize, dist: &mut [f64]) {
    for m in 0..n {
        let row_m: Vec<f64> = dist[m * n..(m + 1) * n].to_vec();
        dist.par_chunks_mut(n).for_each(|row| {
            let dim = row[m];
            for (j, d) in row.iter_mut().enumerate() {
                let via = dim + row_m[j];
                if via < *d {
                    *d = via;
                }
            }
        });
    }
}

/// `2π − (∠̃bac + ∠̃bad + ∠̃cad)`; nonnegative iff the quadruple satisfies the
/// curvature condition at hinge `a`.
pub fn quadruple_defect(
    space: &FiniteMetricSpace,
    k: CurvatureBound,
    a: usize,
    b: usize,
    c: usize,
    d: usize,
) -> Result<f64> {
    let angle = |x: usize, y: usize| comparison_angle(k, space.d(x, a), space.d(a, y), space.d(x, y));
    Ok(2.0 * PI - (angle(b, c)? + angle(b, d)? + angle(c, d)?))
}

/// Result of [`check_curvature_bound`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureCheck {
    pub k: f64,
    pub min_defect: f64,
    /// `(a, b, c, d)` with hinge `a`; `None` if no quadruple could be evaluated.
    pub argmin: Option<[usize; 4]>,
    pub evaluated: usize,
    /// Quadruples whose comparison triangles do not exist (perimeter bound).
    pub skipped: usize,
    pub exhaustive: bool,
}

/// Minimum quadruple defect over `trials` random quadruples, or over every
/// (hinge, triple) when that is no more than `trials`.
pub fn check_curvature_bound(space: &FiniteMetricSpace, k: CurvatureBound, trials: usize, seed: u64) -> Result<CurvatureCheck> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    let n = space.n;
    if n < 4 {
        return Err(Error::InvalidInput(format!("need at least 4 points, got {n}")));
    }
    let nf = n as f64;
    let total = nf * (nf - 1.0) * (nf - 2.0) * (nf - 3.0) / 24.0 * 4.0;
    let exhaustive = total <= trials as f64;

    let quads: Vec<[usize; 4]> = if exhaustive {
        let mut v = Vec::new();
        for w in 0..n {
            for x in (w + 1)..n {
                for y in (x + 1)..n {
                    for z in (y + 1)..n {
                        let s = [w, x, y, z];
                        for h in 0..4 {
                            let mut q = [s[h]; 4];
                            let mut t = 1;
                            for (i, &p) in s.iter().enumerate() {
                                if i != h {
                                    q[t] = p;
                                    t += 1;
                                }
                            }
                            v.push(q);
                        }
                    }
                }
            }
        }
        v
    } else {
        let mut rng = rng_for(seed);
        (0..trials)
            .map(|_| {
                let idx = index::sample(&mut rng, n, 4);
                [idx.index(0), idx.index(1), idx.index(2), idx.index(3)]
            })
            .collect()
    };

    let results: Vec<Option<f64>> = quads
        .par_iter()
        .map(|q| quadruple_defect(space, k, q[0], q[1], q[2], q[3]).ok())
        .collect();

    let mut best: Option<(f64, [usize; 4])> = None;
    let mut skipped = 0;
    for (q, r) in quads.iter().zip(&results) {
        match r {
            Some(d) => {
                if best.is_none_or(|(b, _)| *d < b) {
                    best = Some((*d, *q));
                }
            }
            None => skipped += 1,
        }
    }
    Ok(CurvatureCheck {
        k: k.value(),
        min_defect: best.map_or(f64::INFINITY, |b| b.0),
        argmin: best.map(|b| b.1),
        evaluated: quads.len() - skipped,
        skipped,
        exhaustive,
    })
}
