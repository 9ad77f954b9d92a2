//! Gluing local almost isometries into one map by iterated centers of mass.
//!
//! A GH-approximation `h` between two samples is replaced, on the strained
//! set of the source, by `h̄`: each cover center `x_j` carries a chart `f_j`
//! on the source and the transported chart `g_j` on the target, giving a
//! local map `h_j = g_j⁻¹ ∘ f_j`. The local maps are blended one center at a
//! time with the weights `φ_j`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{Chart, Preimage};
use crate::error::{Error, Result};
use crate::kplane::CurvatureBound;
use crate::mspace::FiniteMetricSpace;
use crate::strainer::{
    nested_candidates, strain_quality, strained_set, FoundStrainer, Strainer, DEFAULT_BUDGET,
};

/// A point map between two finite spaces with its measured distortion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhMap {
    /// `table[x]` is the image of source point `x`.
    pub table: Vec<usize>,
    pub nu: f64,
    pub covering_defect: f64,
    /// Source pair attaining `nu`.
    pub nu_pair: (usize, usize),
}

/// Distortion and covering defect of a table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhDistortion {
    pub nu: f64,
    pub covering_defect: f64,
    pub nu_pair: (usize, usize),
}

impl GhMap {
    /// Measure `table` exhaustively and wrap it.
    pub fn new(source: &FiniteMetricSpace, target: &FiniteMetricSpace, table: Vec<usize>) -> Result<Self> {
        let g = gh_distortion(source, target, &table)?;
        Ok(Self { table, nu: g.nu, covering_defect: g.covering_defect, nu_pair: g.nu_pair })
    }

    pub fn identity(space: &FiniteMetricSpace) -> Self {
        Self { table: (0..space.len()).collect(), nu: 0.0, covering_defect: 0.0, nu_pair: (0, 0) }
    }

    pub fn apply(&self, x: usize) -> usize {
        self.table[x]
    }

    /// Re-measure from the table.
    pub fn distortion(&self, source: &FiniteMetricSpace, target: &FiniteMetricSpace) -> Result<GhDistortion> {
        gh_distortion(source, target, &self.table)
    }
}

/// `ν = max |d₂(hx, hy) − d₁(x, y)|` and `max_t d₂(t, h(source))`, both exact.
pub fn gh_distortion(source: &FiniteMetricSpace, target: &FiniteMetricSpace, table: &[usize]) -> Result<GhDistortion> {
    if table.len() != source.len() {
        return Err(Error::DimensionMismatch { expected: source.len(), found: table.len() });
    }
    if let Some(&bad) = table.iter().find(|&&t| t >= target.len()) {
        return Err(Error::InvalidInput(format!("map sends a point to {bad}, outside the target")));
    }
    let n = source.len();
    let (nu, nu_pair) = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut best = (0.0f64, (x, x));
            for y in x + 1..n {
                let e = (target.d(table[x], table[y]) - source.d(x, y)).abs();
                if e > best.0 {
                    best = (e, (x, y));
                }
            }
            best
        })
        .reduce(|| (0.0, (0, 0)), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    let mut image = table.to_vec();
    image.sort_unstable();
    image.dedup();
    let covering_defect = (0..target.len())
        .into_par_iter()
        .map(|t| image.iter().map(|&s| target.d(t, s)).fold(f64::INFINITY, f64::min))
        .reduce(|| 0.0, f64::max);
    Ok(GhDistortion { nu, covering_defect, nu_pair })
}

/// Send each source point to the target sample nearest in the shared model
/// space, smallest id on ties.
pub fn nearest_point_map(source: &FiniteMetricSpace, target: &FiniteMetricSpace) -> Result<GhMap> {
    let (Some(cs), Some(ct)) = (source.coords(), target.coords()) else {
        return Err(Error::IncompatibleModels);
    };
    if cs.model != ct.model {
        return Err(Error::IncompatibleModels);
    }
    let model = &cs.model;
    let table: Vec<usize> = cs
        .points
        .par_iter()
        .map(|u| {
            let mut best = (0, f64::INFINITY);
            for (t, v) in ct.points.iter().enumerate() {
                let d = model.distance(u, v);
                if d < best.1 {
                    best = (t, d);
                }
            }
            best.0
        })
        .collect();
    GhMap::new(source, target, table)
}

/// `φ(x) = max(0, 1 − 2|x x_j| / (δR))`, given `|x x_j|`.
pub fn weight(dist: f64, delta: f64, r: f64) -> f64 {
    (1.0 - 2.0 * dist / (delta * r)).max(0.0)
}

/// Greedy `δR/3`-net inside `strained`: repeatedly take the smallest
/// uncovered id. Every strained point ends strictly within `δR/3` of a center.
pub fn select_cover(space: &FiniteMetricSpace, strained: &[usize], delta: f64, r: f64) -> Vec<usize> {
    greedy_cover(space, strained, delta * r / 3.0, |_| true)
}

fn greedy_cover(space: &FiniteMetricSpace, strained: &[usize], radius: f64, usable: impl Fn(usize) -> bool) -> Vec<usize> {
    let mut pts = strained.to_vec();
    pts.sort_unstable();
    pts.dedup();
    let mut covered = vec![false; pts.len()];
    let mut centers = Vec::new();
    for i in 0..pts.len() {
        if covered[i] || !usable(pts[i]) {
            continue;
        }
        let c = pts[i];
        centers.push(c);
        for (flag, &q) in covered.iter_mut().zip(&pts) {
            if space.d(c, q) < radius {
                *flag = true;
            }
        }
    }
    centers
}

/// Largest number of `radius`-balls around `centers` that share a sample point.
pub fn cover_multiplicity(space: &FiniteMetricSpace, centers: &[usize], radius: f64) -> usize {
    (0..space.len())
        .into_par_iter()
        .map(|q| centers.iter().filter(|&&c| space.d(c, q) < radius).count())
        .max()
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlueConfig {
    pub delta: f64,
    pub r: f64,
    /// Curvature bound used for strainer quality on both spaces.
    pub k: f64,
    /// Strainer size, the dimension.
    pub n: usize,
    pub seed: u64,
    /// Angle evaluations per strainer search.
    pub budget: usize,
    /// `U_j = B(x_j, factor·δR)`.
    pub chart_radius_factor: f64,
    /// Step residuals above `factor · target spacing` flag the point.
    pub residual_factor: f64,
    /// Closeness is compared to `factor · √n · ν`.
    pub closeness_factor: f64,
    /// Slack on the transported quality limit `2δ`.
    pub transport_tol: f64,
    /// Run even when `ν ≥ δ²R`.
    pub force: bool,
}

impl GlueConfig {
    pub fn new(delta: f64, r: f64, k: f64, n: usize, seed: u64) -> Self {
        Self {
            delta,
            r,
            k,
            n,
            seed,
            budget: DEFAULT_BUDGET,
            chart_radius_factor: 0.8,
            residual_factor: 3.0,
            closeness_factor: 3.0,
            transport_tol: 1e-9,
            force: false,
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidInput(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::InvalidInput(format!("R must be positive, got {}", self.r)));
        }
        if self.n == 0 {
            return Err(Error::InvalidInput("strainer size n must be at least 1".into()));
        }
        CurvatureBound::new(self.k)?;
        Ok(())
    }

    /// `δ²R`, the largest admissible `ν`.
    pub fn nu_limit(&self) -> f64 {
        self.delta * self.delta * self.r
    }

    pub fn u_radius(&self) -> f64 {
        self.chart_radius_factor * self.delta * self.r
    }
}

/// What is kept about a cover center; enough to rebuild its local pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterRecord {
    pub center: usize,
    pub target_center: usize,
    pub long: FoundStrainer,
    pub short: FoundStrainer,
    pub long_transport_quality: f64,
    pub short_transport_quality: f64,
    pub f_radius: f64,
    pub u_radius: f64,
    pub g_radius: f64,
    pub u_size: usize,
    pub g_domain_size: usize,
    pub max_h_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedCenter {
    pub center: usize,
    pub reason: String,
}

/// Charts `f_j`, `g_j` and the local map `h_j` on `U_j`.
#[derive(Debug, Clone)]
pub struct LocalPair {
    pub record: CenterRecord,
    pub f: Chart,
    pub g: Chart,
    /// `U_j`, ascending ids.
    pub u: Vec<usize>,
    /// `h[i] = h_j(u[i])`.
    pub h: Vec<Preimage>,
}

impl LocalPair {
    pub fn center(&self) -> usize {
        self.record.center
    }

    pub fn in_u(&self, q: usize) -> bool {
        self.u.binary_search(&q).is_ok()
    }

    pub fn h_at(&self, q: usize) -> Option<usize> {
        self.u.binary_search(&q).ok().map(|i| self.h[i].point)
    }

    /// Rebuild from a stored record.
    pub fn rebuild(space1: &FiniteMetricSpace, space2: &FiniteMetricSpace, table: &[usize], record: &CenterRecord) -> Result<Self> {
        assemble(space1, space2, table, record.clone())
    }
}

fn assemble(space1: &FiniteMetricSpace, space2: &FiniteMetricSpace, table: &[usize], mut record: CenterRecord) -> Result<LocalPair> {
    let x = record.center;
    let f = Chart::build_at(space1, x, &record.short.strainer, record.f_radius)?;
    let g = Chart::build(space2, &record.short.strainer.transport(table), record.g_radius)?;
    let u: Vec<usize> = f.domain.iter().copied().filter(|&q| space1.d(x, q) <= record.u_radius).collect();
    let h = u
        .iter()
        .map(|&q| g.inverse(f.coords(q)?))
        .collect::<Result<Vec<_>>>()?;
    record.u_size = u.len();
    record.g_domain_size = g.domain.len();
    record.max_h_residual = h.iter().map(|p| p.residual).fold(0.0, f64::max);
    Ok(LocalPair { record, f, g, u, h })
}

/// Find nested strainers at `x`, transport them through `h`, and build the
/// chart pair. Candidates are tried best-first until one survives transport.
pub fn build_local_pair(
    space1: &FiniteMetricSpace,
    space2: &FiniteMetricSpace,
    h: &GhMap,
    x: usize,
    config: &GlueConfig,
) -> Result<LocalPair> {
    config.check()?;
    let k = CurvatureBound::new(config.k)?;
    let (delta, r) = (config.delta, config.r);
    let limit = 2.0 * delta + config.transport_tol;
    let candidates = nested_candidates(space1, k, x, config.n, delta, r, config.seed, config.budget);
    if candidates.is_empty() {
        return Err(Error::StrainerNotFound(x));
    }
    let transported_quality = |s: &Strainer| {
        strain_quality(space2, k, &s.transport(&h.table)).map(|q| q.delta_star).unwrap_or(f64::INFINITY)
    };
    let mut best_fail = f64::INFINITY;
    for nested in candidates {
        let lq = transported_quality(&nested.long.strainer);
        let sq = transported_quality(&nested.short.strainer);
        let worst = lq.max(sq);
        if worst >= limit {
            best_fail = best_fail.min(worst);
            continue;
        }
        let record = CenterRecord {
            center: x,
            target_center: h.apply(x),
            long: nested.long,
            short: nested.short,
            long_transport_quality: lq,
            short_transport_quality: sq,
            f_radius: delta * r,
            u_radius: config.u_radius(),
            g_radius: delta * r + h.nu,
            u_size: 0,
            g_domain_size: 0,
            max_h_residual: 0.0,
        };
        return assemble(space1, space2, &h.table, record);
    }
    Err(Error::TransportQualityFail { center: x, delta_star: best_fail, limit })
}

/// One applied step of the recursion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlueStep {
    /// Index into the cover.
    pub j: usize,
    pub phi: f64,
    pub sigma: f64,
    pub point: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointDiagnostics {
    pub point: usize,
    pub h: usize,
    pub hbar: usize,
    pub sigma: f64,
    /// `|h̄(z) h(z)|`
    pub closeness: f64,
    pub steps: Vec<GlueStep>,
    pub sigma_too_small: bool,
    pub residual_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlueResult {
    pub config: GlueConfig,
    pub h_table: Vec<usize>,
    pub nu: f64,
    pub covering_defect: f64,
    pub nu_limit: f64,
    pub in_regime: bool,
    pub strained: Vec<usize>,
    pub centers: Vec<CenterRecord>,
    pub dropped: Vec<DroppedCenter>,
    /// Multiplicity of the `δR`-balls around the centers.
    pub multiplicity: usize,
    pub target_spacing: f64,
    pub points: Vec<PointDiagnostics>,
    pub min_sigma: f64,
    pub max_closeness: f64,
    pub closeness_bound: f64,
    pub sigma_violations: usize,
    pub residual_flags: usize,
}

impl GlueResult {
    /// `h̄(z)` for a strained point.
    pub fn hbar(&self, z: usize) -> Option<usize> {
        self.points.binary_search_by_key(&z, |p| p.point).ok().map(|i| self.points[i].hbar)
    }

    pub fn diagnostics(&self, z: usize) -> Option<&PointDiagnostics> {
        self.points.binary_search_by_key(&z, |p| p.point).ok().map(|i| &self.points[i])
    }

    pub fn local_pairs(&self, space1: &FiniteMetricSpace, space2: &FiniteMetricSpace) -> Result<Vec<LocalPair>> {
        self.centers.iter().map(|c| LocalPair::rebuild(space1, space2, &self.h_table, c)).collect()
    }

    pub fn closeness_ok(&self) -> bool {
        self.max_closeness <= self.closeness_bound
    }
}

/// Glue on the strained set computed from the source.
pub fn glue(space1: &FiniteMetricSpace, space2: &FiniteMetricSpace, h: &GhMap, config: &GlueConfig) -> Result<GlueResult> {
    config.check()?;
    let k = CurvatureBound::new(config.k)?;
    let strained: Vec<usize> = strained_set(space1, k, config.n, config.delta, config.r, config.seed, config.budget)
        .into_iter()
        .map(|s| s.point)
        .collect();
    glue_on(space1, space2, h, &strained, config)
}

/// Glue on a given strained set.
pub fn glue_on(
    space1: &FiniteMetricSpace,
    space2: &FiniteMetricSpace,
    h: &GhMap,
    strained: &[usize],
    config: &GlueConfig,
) -> Result<GlueResult> {
    config.check()?;
    if strained.is_empty() {
        return Err(Error::InvalidInput("strained set is empty".into()));
    }
    if h.table.len() != space1.len() {
        return Err(Error::DimensionMismatch { expected: space1.len(), found: h.table.len() });
    }
    if !config.force && h.nu >= config.nu_limit() {
        return Err(Error::InvalidInput(format!(
            "map distortion {} is not below delta^2 R = {}",
            h.nu,
            config.nu_limit()
        )));
    }
    let mut strained = strained.to_vec();
    strained.sort_unstable();
    strained.dedup();

    // Greedy cover with failed centers excluded. Local pairs are built in
    // parallel for each tentative cover; rerunning the greedy pass with the
    // failures excluded yields exactly the sequential result.
    let net = config.delta * config.r / 3.0;
    let mut built: BTreeMap<usize, std::result::Result<LocalPair, String>> = BTreeMap::new();
    let centers = loop {
        let cover = greedy_cover(space1, &strained, net, |c| !matches!(built.get(&c), Some(Err(_))));
        let fresh: Vec<usize> = cover.iter().copied().filter(|c| !built.contains_key(c)).collect();
        if fresh.is_empty() {
            break cover;
        }
        let results: Vec<_> = fresh
            .par_iter()
            .map(|&x| build_local_pair(space1, space2, h, x, config).map_err(|e| e.to_string()))
            .collect();
        built.extend(fresh.into_iter().zip(results));
    };
    let dropped: Vec<DroppedCenter> = built
        .iter()
        .filter_map(|(&c, r)| r.as_ref().err().map(|e| DroppedCenter { center: c, reason: e.clone() }))
        .collect();
    let pairs: Vec<LocalPair> = centers
        .iter()
        .map(|c| match built.remove(c) {
            Some(Ok(p)) => p,
            _ => unreachable!("cover only uses built centers"),
        })
        .collect();

    let target_spacing = space2.mean_spacing();
    let residual_cap = config.residual_factor * target_spacing;
    let points: Vec<PointDiagnostics> = strained
        .par_iter()
        .map(|&z| glue_point(space1, space2, h, &pairs, z, config, residual_cap))
        .collect::<Result<_>>()?;

    let closeness_bound = config.closeness_factor * (config.n as f64).sqrt() * h.nu;
    Ok(GlueResult {
        config: config.clone(),
        h_table: h.table.clone(),
        nu: h.nu,
        covering_defect: h.covering_defect,
        nu_limit: config.nu_limit(),
        in_regime: h.nu < config.nu_limit(),
        multiplicity: cover_multiplicity(space1, &centers, config.delta * config.r),
        strained,
        centers: pairs.into_iter().map(|p| p.record).collect(),
        dropped,
        target_spacing,
        min_sigma: points.iter().map(|p| p.sigma).fold(f64::INFINITY, f64::min),
        max_closeness: points.iter().map(|p| p.closeness).fold(0.0, f64::max),
        closeness_bound,
        sigma_violations: points.iter().filter(|p| p.sigma_too_small).count(),
        residual_flags: points.iter().filter(|p| p.residual_flag).count(),
        points,
    })
}

/// Run the recursion `z_0 = h(z)`, `z_j = g_j⁻¹((Σ_{j−1}/Σ_j) g_j(z_{j−1}) + (φ_j/Σ_j) g_j(h_j(z)))`
/// for `z ∈ U_j`, carrying `z_{j−1}` otherwise or while `Σ_j = 0`.
fn glue_point(
    space1: &FiniteMetricSpace,
    space2: &FiniteMetricSpace,
    h: &GhMap,
    pairs: &[LocalPair],
    z: usize,
    config: &GlueConfig,
    residual_cap: f64,
) -> Result<PointDiagnostics> {
    let hz = h.apply(z);
    let mut cur = hz;
    let mut sigma = 0.0;
    let mut steps = Vec::new();
    for (j, pair) in pairs.iter().enumerate() {
        let Some(hj) = pair.h_at(z) else { continue };
        let phi = weight(space1.d(z, pair.center()), config.delta, config.r);
        let next = sigma + phi;
        if next == 0.0 {
            continue;
        }
        let prev = pair.g.eval(space2, cur);
        let local = pair.g.coords(hj)?;
        let v: Vec<f64> = prev.iter().zip(local).map(|(p, l)| (sigma / next) * p + (phi / next) * l).collect();
        let pre = pair.g.inverse(&v)?;
        cur = pre.point;
        sigma = next;
        steps.push(GlueStep { j, phi, sigma, point: cur, residual: pre.residual });
    }
    Ok(PointDiagnostics {
        point: z,
        h: hz,
        hbar: cur,
        sigma,
        closeness: space2.d(cur, hz),
        sigma_too_small: sigma <= 1.0 / 3.0,
        residual_flag: steps.iter().any(|s| s.residual > residual_cap),
        steps,
    })
}
