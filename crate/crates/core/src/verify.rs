//! Numeric checks on a glued map: distance preservation, the two sequence
//! claims behind it, the center-of-mass counterexample, and the hypothesis
//! and conclusion quantities of the segment-comparison lemma.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{center_of_mass, norm, weighted_image, Chart, Preimage, WeightVector};
use crate::error::{Error, Result};
use crate::glue::{weight, GlueResult, LocalPair};
use crate::kplane::{comparison_angle, CurvatureBound};
use crate::mspace::FiniteMetricSpace;

/// Defect statistics over a set of pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairStats {
    pub pair_count: usize,
    pub max_defect: f64,
    pub mean_defect: f64,
    pub worst_pair: Option<(usize, usize)>,
}

impl PairStats {
    fn from_defects(items: &[(f64, (usize, usize))]) -> Self {
        let mut worst: Option<(f64, (usize, usize))> = None;
        let mut total = 0.0;
        for &(d, p) in items {
            total += d;
            if worst.is_none_or(|w| d > w.0) {
                worst = Some((d, p));
            }
        }
        Self {
            pair_count: items.len(),
            max_defect: worst.map_or(0.0, |w| w.0),
            mean_defect: if items.is_empty() { 0.0 } else { total / items.len() as f64 },
            worst_pair: worst.map(|w| w.1),
        }
    }
}

/// `|1 − |h̄y h̄z| / |yz||` over strained pairs with `|yz|` in a band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub band: [f64; 2],
    pub pair_count: usize,
    pub max_defect: f64,
    pub mean_defect: f64,
    pub worst_pair: Option<(usize, usize)>,
    /// No pair fell in the band.
    pub empty: bool,
    /// `Rδ^{3/2}`: pairs at least this far apart are controlled by closeness alone.
    pub split: f64,
    pub far: PairStats,
    pub near: PairStats,
}

pub fn distance_report(
    space1: &FiniteMetricSpace,
    space2: &FiniteMetricSpace,
    result: &GlueResult,
    band: [f64; 2],
) -> Result<DistortionReport> {
    if !(band[0] >= 0.0 && band[0] <= band[1]) {
        return Err(Error::InvalidInput(format!("invalid band [{}, {}]", band[0], band[1])));
    }
    let pts = &result.points;
    let items: Vec<(f64, f64, (usize, usize))> = (0..pts.len())
        .into_par_iter()
        .flat_map_iter(|a| {
            (a + 1..pts.len()).filter_map(move |b| {
                let (y, z) = (pts[a].point, pts[b].point);
                let d1 = space1.d(y, z);
                if d1 <= 0.0 || d1 < band[0] || d1 > band[1] {
                    return None;
                }
                let d2 = space2.d(pts[a].hbar, pts[b].hbar);
                Some(((1.0 - d2 / d1).abs(), d1, (y, z)))
            })
        })
        .collect();
    let split = result.config.r * result.config.delta.powf(1.5);
    let all: Vec<_> = items.iter().map(|&(d, _, p)| (d, p)).collect();
    let far: Vec<_> = items.iter().filter(|t| t.1 >= split).map(|&(d, _, p)| (d, p)).collect();
    let near: Vec<_> = items.iter().filter(|t| t.1 < split).map(|&(d, _, p)| (d, p)).collect();
    let total = PairStats::from_defects(&all);
    Ok(DistortionReport {
        band,
        pair_count: total.pair_count,
        max_defect: total.max_defect,
        mean_defect: total.mean_defect,
        worst_pair: total.worst_pair,
        empty: total.pair_count == 0,
        split,
        far: PairStats::from_defects(&far),
        near: PairStats::from_defects(&near),
    })
}

/// Per-center trace of the two sequence pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimStep {
    /// Index into the cover.
    pub j: usize,
    pub y: usize,
    pub z: usize,
    pub ybar: usize,
    pub zbar: usize,
    /// `|(g_j(z_j) − g_j(y_j)) − (g_j(z̄_j) − g_j(ȳ_j))|`
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimReport {
    pub y: usize,
    pub z: usize,
    pub dist: f64,
    pub steps: Vec<ClaimStep>,
    /// `||ȳ z̄| − |yz|| / |yz|`
    pub claim1_defect: f64,
    /// `||y_N z_N| − |ȳ z̄|| / |yz|`
    pub claim2_defect: f64,
    /// The restricted recursion reproduces the glued values.
    pub matches_hbar: bool,
}

/// Centers whose weight is positive at `y` or `z`, ascending.
pub fn active_centers(space1: &FiniteMetricSpace, result: &GlueResult, y: usize, z: usize) -> Vec<usize> {
    let (delta, r) = (result.config.delta, result.config.r);
    result
        .centers
        .iter()
        .enumerate()
        .filter(|(_, c)| weight(space1.d(y, c.center), delta, r) + weight(space1.d(z, c.center), delta, r) > 0.0)
        .map(|(j, _)| j)
        .collect()
}

/// Rerun the recursion for `y`, `z` over the centers weighing either, next
/// to the one-shot centers of mass `ȳ_j`, `z̄_j` of `{h_l(·)}_{l ≤ j}`.
pub fn claim_sequences(
    space1: &FiniteMetricSpace,
    space2: &FiniteMetricSpace,
    result: &GlueResult,
    pairs: &[LocalPair],
    y: usize,
    z: usize,
) -> Result<ClaimReport> {
    let dist = space1.d(y, z);
    if !(dist > 0.0) {
        return Err(Error::InvalidInput(format!("points {y} and {z} coincide")));
    }
    if result.diagnostics(y).is_none() || result.diagnostics(z).is_none() {
        return Err(Error::InvalidInput(format!("points {y} and {z} must both be strained")));
    }
    let active = active_centers(space1, result, y, z);
    if active.is_empty() {
        return Err(Error::InvalidInput(format!("no center carries weight at {y} or {z}")));
    }
    for &j in &active {
        for p in [y, z] {
            if !pairs[j].in_u(p) {
                return Err(Error::NotInChart { point: p, chart: j });
            }
        }
    }
    let (delta, r) = (result.config.delta, result.config.r);
    let table = &result.h_table;

    struct Track {
        cur: usize,
        sigma: f64,
        hl: Vec<(f64, usize)>,
        bar: usize,
    }
    let mut ty = Track { cur: table[y], sigma: 0.0, hl: Vec::new(), bar: table[y] };
    let mut tz = Track { cur: table[z], sigma: 0.0, hl: Vec::new(), bar: table[z] };
    let mut steps = Vec::new();
    for &j in &active {
        let pair = &pairs[j];
        let g = &pair.g;
        for (t, p) in [(&mut ty, y), (&mut tz, z)] {
            let phi = weight(space1.d(p, pair.center()), delta, r);
            let hj = pair.h_at(p).expect("checked membership");
            t.hl.push((phi, hj));
            let next = t.sigma + phi;
            if next == 0.0 {
                continue;
            }
            let prev = g.eval(space2, t.cur);
            let local = g.coords(hj)?;
            let v: Vec<f64> = prev.iter().zip(local).map(|(a, b)| (t.sigma / next) * a + (phi / next) * b).collect();
            t.cur = g.inverse(&v)?.point;
            t.sigma = next;
            let mut acc = vec![0.0; g.dim()];
            for &(w, q) in &t.hl {
                for (a, c) in acc.iter_mut().zip(g.eval(space2, q)) {
                    *a += (w / next) * c;
                }
            }
            t.bar = g.inverse(&acc)?.point;
        }
        let diff = |a: usize, b: usize| -> Vec<f64> {
            g.eval(space2, b).iter().zip(g.eval(space2, a)).map(|(x, y)| x - y).collect()
        };
        let d_act = diff(ty.cur, tz.cur);
        let d_bar = diff(ty.bar, tz.bar);
        let alpha: Vec<f64> = d_act.iter().zip(&d_bar).map(|(a, b)| a - b).collect();
        steps.push(ClaimStep { j, y: ty.cur, z: tz.cur, ybar: ty.bar, zbar: tz.bar, alpha: norm(&alpha) });
    }
    let bar_dist = space2.d(ty.bar, tz.bar);
    let act_dist = space2.d(ty.cur, tz.cur);
    Ok(ClaimReport {
        y,
        z,
        dist,
        claim1_defect: (bar_dist - dist).abs() / dist,
        claim2_defect: (act_dist - bar_dist).abs() / dist,
        matches_hbar: result.hbar(y) == Some(ty.cur) && result.hbar(z) == Some(tz.cur),
        steps,
    })
}

/// Claim reports on a seeded sample of admissible pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimSample {
    /// Strained pairs closer than `Rδ^{3/2}` whose active charts all
    /// contain both points.
    pub admissible: usize,
    pub claims: Vec<ClaimReport>,
    pub max_claim1: f64,
    pub max_claim2: f64,
}

/// Up to `max` admissible pairs, drawn without replacement and kept in
/// lexicographic order.
pub fn sample_claim_pairs(
    space1: &FiniteMetricSpace,
    space2: &FiniteMetricSpace,
    result: &GlueResult,
    pairs: &[LocalPair],
    max: usize,
    seed: u64,
) -> ClaimSample {
    let split = result.config.r * result.config.delta.powf(1.5);
    let pts = &result.points;
    let admissible: Vec<ClaimReport> = (0..pts.len())
        .into_par_iter()
        .flat_map_iter(|a| {
            let y = pts[a].point;
            pts[a + 1..].iter().filter_map(move |pb| {
                if space1.d(y, pb.point) >= split {
                    return None;
                }
                claim_sequences(space1, space2, result, pairs, y, pb.point).ok()
            })
        })
        .collect();
    let take = admissible.len().min(max);
    let mut pick = index::sample(&mut ChaCha8Rng::seed_from_u64(seed), admissible.len(), take).into_vec();
    pick.sort_unstable();
    let claims: Vec<ClaimReport> = pick.into_iter().map(|i| admissible[i].clone()).collect();
    ClaimSample {
        admissible: admissible.len(),
        max_claim1: claims.iter().map(|c| c.claim1_defect).fold(0.0, f64::max),
        max_claim2: claims.iter().map(|c| c.claim2_defect).fold(0.0, f64::max),
        claims,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// The centers of mass coincide; nothing to report.
    NoCounterexample,
    /// Positive center distance against zero segment lengths: the ratio
    /// bound `|Q_{W¹} R_{W²}| ≤ C max |q_j r_j|` fails.
    RatioConclusionFails,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub com1: Preimage,
    pub com2: Preimage,
    pub com_distance: f64,
    /// Always 0: the second family is the first.
    pub min_qr: f64,
    /// `|Σ (w²_j − w¹_j) f(q_j)|`
    pub predicted: f64,
    pub verdict: Verdict,
}

/// Centers of mass of one family under two weight vectors.
pub fn counterexample_1_3(
    space: &FiniteMetricSpace,
    chart: &Chart,
    q: &[usize],
    w1: &WeightVector,
    w2: &WeightVector,
) -> Result<CounterexampleReport> {
    if q.len() < 2 {
        return Err(Error::InvalidInput("need at least two points".into()));
    }
    let com1 = center_of_mass(chart, q, w1)?;
    let com2 = center_of_mass(chart, q, w2)?;
    let v1 = weighted_image(chart, q, w1)?;
    let v2 = weighted_image(chart, q, w2)?;
    let predicted = norm(&v1.iter().zip(&v2).map(|(a, b)| b - a).collect::<Vec<_>>());
    let com_distance = space.d(com1.point, com2.point);
    Ok(CounterexampleReport {
        com1,
        com2,
        com_distance,
        min_qr: 0.0,
        predicted,
        verdict: if com_distance > 0.0 { Verdict::RatioConclusionFails } else { Verdict::NoCounterexample },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaHypotheses {
    /// `max_j |q_j r_j| / min_j |q_j r_j|`; `None` if a segment has zero length.
    pub length_ratio: Option<f64>,
    /// Per arm, `max_j ∠̃a q_j r_j − min_j ∠̃a q_j r_j` over nonzero segments.
    pub angle_spread: Vec<Option<f64>>,
    /// `‖W¹ − W²‖₁ · max_{j,j'} |r_j r_j'|`
    pub weight_lhs: f64,
    /// `κ · min_j |q_j r_j|`
    pub weight_rhs: f64,
    pub weight_condition: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub hypotheses: LemmaHypotheses,
    pub com_q: Preimage,
    pub com_r: Preimage,
    pub com_distance: f64,
    /// `|1 − |q_j r_j| / |Q R||` per j; `None` when `Q = R`.
    pub ratio_defects: Vec<Option<f64>>,
    /// `|∠̃a_i q_j r_j − ∠̃a_i Q R|` indexed `[i][j]`; `None` when a vertex
    /// degenerates (zero segment, or an arm at the vertex).
    pub angle_defects: Vec<Vec<Option<f64>>>,
    pub max_ratio_defect: Option<f64>,
    pub max_angle_defect: Option<f64>,
}

/// Segments `q_j r_j` against the segment between the centers of mass
/// `Q_{W¹}` and `R_{W²}`; `kappa` fills the weight-condition slot.
#[allow(clippy::too_many_arguments)]
pub fn lemma_2_1_2_check(
    space: &FiniteMetricSpace,
    k: CurvatureBound,
    chart: &Chart,
    q: &[usize],
    r: &[usize],
    w1: &WeightVector,
    w2: &WeightVector,
    kappa: f64,
) -> Result<LemmaReport> {
    let l = q.len();
    if l == 0 || r.len() != l || w1.len() != l || w2.len() != l {
        return Err(Error::DimensionMismatch { expected: l, found: r.len().min(w1.len()).min(w2.len()) });
    }
    let lens: Vec<f64> = q.iter().zip(r).map(|(&a, &b)| space.d(a, b)).collect();
    let min_len = lens.iter().copied().fold(f64::INFINITY, f64::min);
    let max_len = lens.iter().copied().fold(0.0, f64::max);
    let arms = chart.strainer.a_arms();
    // `None` at a degenerate vertex: a zero segment or the arm itself.
    let angle = |a: usize, x: usize, y: usize| -> Result<Option<f64>> {
        if x == y || a == x {
            return Ok(None);
        }
        comparison_angle(k, space.d(a, x), space.d(x, y), space.d(a, y)).map(Some)
    };

    let mut angle_spread = Vec::with_capacity(arms.len());
    for &a in &arms {
        let mut ts = Vec::with_capacity(l);
        for (&x, &y) in q.iter().zip(r) {
            ts.extend(angle(a, x, y)?);
        }
        let hi = ts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = ts.iter().copied().fold(f64::INFINITY, f64::min);
        angle_spread.push((!ts.is_empty()).then_some(hi - lo));
    }
    let r_diam = r
        .iter()
        .flat_map(|&a| r.iter().map(move |&b| (a, b)))
        .map(|(a, b)| space.d(a, b))
        .fold(0.0, f64::max);
    let weight_lhs = w1.dist_l1(w2) * r_diam;
    let weight_rhs = kappa * min_len;

    let com_q = center_of_mass(chart, q, w1)?;
    let com_r = center_of_mass(chart, r, w2)?;
    let com_distance = space.d(com_q.point, com_r.point);
    let ratio_defects: Vec<Option<f64>> =
        lens.iter().map(|&x| (com_distance > 0.0).then(|| (1.0 - x / com_distance).abs())).collect();
    let mut angle_defects = Vec::with_capacity(arms.len());
    for &a in &arms {
        let reference = angle(a, com_q.point, com_r.point)?;
        let mut row = Vec::with_capacity(l);
        for (&x, &y) in q.iter().zip(r) {
            row.push(match (reference, angle(a, x, y)?) {
                (Some(t), Some(u)) => Some((u - t).abs()),
                _ => None,
            });
        }
        angle_defects.push(row);
    }
    let fold_max = |it: &mut dyn Iterator<Item = f64>| it.fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
    let max_ratio_defect = fold_max(&mut ratio_defects.iter().flatten().copied());
    let max_angle_defect = fold_max(&mut angle_defects.iter().flatten().flatten().copied());
    Ok(LemmaReport {
        hypotheses: LemmaHypotheses {
            length_ratio: (min_len > 0.0).then(|| max_len / min_len),
            angle_spread,
            weight_lhs,
            weight_rhs,
            weight_condition: weight_lhs < weight_rhs,
        },
        com_q,
        com_r,
        com_distance,
        ratio_defects,
        angle_defects,
        max_ratio_defect,
        max_angle_defect,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSpread {
    /// Center index whose arm is used.
    pub j: usize,
    pub arm: usize,
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub arms: Vec<ArmSpread>,
    pub max_spread: f64,
    /// Local maps sending `y` and `z` to the same point.
    pub skipped: usize,
}

/// Spread over the active local maps `h_l` of `∠̃ h(a_i^j) h_l(y) h_l(z)`,
/// for every arm of every active center.
pub fn consistency_4_6_check(
    space1: &FiniteMetricSpace,
    space2: &FiniteMetricSpace,
    k: CurvatureBound,
    result: &GlueResult,
    pairs: &[LocalPair],
    y: usize,
    z: usize,
) -> Result<ConsistencyReport> {
    let active = active_centers(space1, result, y, z);
    let mut images = Vec::new();
    let mut skipped = 0;
    for &l in &active {
        let (Some(hy), Some(hz)) = (pairs[l].h_at(y), pairs[l].h_at(z)) else {
            return Err(Error::NotInChart { point: if pairs[l].in_u(y) { z } else { y }, chart: l });
        };
        if hy == hz {
            skipped += 1;
        } else {
            images.push((hy, hz));
        }
    }
    let mut arms = Vec::new();
    for &j in &active {
        for a in pairs[j].record.short.strainer.a_arms() {
            let ha = result.h_table[a];
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &(hy, hz) in &images {
                if ha == hy {
                    return Err(Error::DegenerateVertex);
                }
                let t = comparison_angle(k, space2.d(ha, hy), space2.d(hy, hz), space2.d(ha, hz))?;
                lo = lo.min(t);
                hi = hi.max(t);
            }
            arms.push(ArmSpread { j, arm: a, spread: if images.is_empty() { 0.0 } else { hi - lo } });
        }
    }
    Ok(ConsistencyReport { max_spread: arms.iter().map(|a| a.spread).fold(0.0, f64::max), arms, skipped })
}
