//! Strainers: pairs of points around a base that behave like an approximate
//! orthonormal frame, measured through comparison angles.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kplane::{comparison_angle, CurvatureBound};
use crate::mspace::FiniteMetricSpace;

/// Default number of comparison-angle evaluations a search may spend per point.
pub const DEFAULT_BUDGET: usize = 20_000;

/// Arm-length quantiles tried as successive lower cut-offs, longest first.
const LENGTH_TIERS: [f64; 4] = [0.9, 0.75, 0.5, 0.0];

/// `n` pairs `(a_i, b_i)` at a base point.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Strainer {
    pub base: usize,
    pub pairs: Vec<(usize, usize)>,
}

impl Strainer {
    pub fn new(base: usize, pairs: Vec<(usize, usize)>) -> Self {
        Self { base, pairs }
    }

    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    /// Every arm endpoint, `a_1, b_1, a_2, b_2, …`.
    pub fn arms(&self) -> impl Iterator<Item = usize> + '_ {
        self.pairs.iter().flat_map(|&(a, b)| [a, b])
    }

    /// The `a_i`, which define chart coordinates.
    pub fn a_arms(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn min_arm(&self, space: &FiniteMetricSpace) -> f64 {
        self.arms().map(|x| space.d(self.base, x)).fold(f64::INFINITY, f64::min)
    }

    pub fn max_arm(&self, space: &FiniteMetricSpace) -> f64 {
        self.arms().map(|x| space.d(self.base, x)).fold(0.0, f64::max)
    }

    /// Same pairs mapped through a point table, based at `table[base]`.
    pub fn transport(&self, table: &[usize]) -> Strainer {
        Strainer {
            base: table[self.base],
            pairs: self.pairs.iter().map(|&(a, b)| (table[a], table[b])).collect(),
        }
    }

    fn check(&self, space: &FiniteMetricSpace) -> Result<()> {
        let n = space.len();
        if self.pairs.is_empty() || self.n() >= n.max(1) {
            return Err(Error::InvalidInput(format!("strainer needs 1 <= n <= N-1 pairs, got {}", self.n())));
        }
        if self.base >= n || self.arms().any(|x| x >= n) {
            return Err(Error::InvalidInput("strainer refers to a point outside the space".into()));
        }
        if self.arms().any(|x| x == self.base) {
            return Err(Error::InvalidInput("strainer arms must differ from the base".into()));
        }
        Ok(())
    }
}

/// Which strainer inequality a quality value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Constraint {
    /// `π − ∠̃ a_i p b_i`
    Opposite { i: usize },
    /// `π/2 − ∠̃ a_i p a_j`
    ArmsAA { i: usize, j: usize },
    /// `π/2 − ∠̃ a_i p b_j`
    ArmsAB { i: usize, j: usize },
    /// `π/2 − ∠̃ b_i p b_j`
    ArmsBB { i: usize, j: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrainQuality {
    /// Smallest δ for which every strainer inequality holds (strictly for any
    /// larger δ), clamped at 0.
    pub delta_star: f64,
    pub worst_constraint: Constraint,
}

impl StrainQuality {
    /// True iff the strainer is an `(n, δ)`-strainer.
    pub fn admits(&self, delta: f64) -> bool {
        delta > self.delta_star
    }
}

fn angle_at(space: &FiniteMetricSpace, k: CurvatureBound, p: usize, x: usize, y: usize) -> Result<f64> {
    comparison_angle(k, space.d(x, p), space.d(p, y), space.d(x, y))
}

/// Measure how far the strainer is from an exact frame.
pub fn strain_quality(space: &FiniteMetricSpace, k: CurvatureBound, s: &Strainer) -> Result<StrainQuality> {
    s.check(space)?;
    let p = s.base;
    let mut worst = (f64::NEG_INFINITY, Constraint::Opposite { i: 0 });
    let mut consider = |v: f64, c: Constraint| {
        if v > worst.0 {
            worst = (v, c);
        }
    };
    for (i, &(a, b)) in s.pairs.iter().enumerate() {
        consider(PI - angle_at(space, k, p, a, b)?, Constraint::Opposite { i });
    }
    for (i, &(ai, bi)) in s.pairs.iter().enumerate() {
        for (j, &(aj, bj)) in s.pairs.iter().enumerate() {
            if i == j {
                continue;
            }
            if i < j {
                consider(FRAC_PI_2 - angle_at(space, k, p, ai, aj)?, Constraint::ArmsAA { i, j });
                consider(FRAC_PI_2 - angle_at(space, k, p, bi, bj)?, Constraint::ArmsBB { i, j });
            }
            consider(FRAC_PI_2 - angle_at(space, k, p, ai, bj)?, Constraint::ArmsAB { i, j });
        }
    }
    Ok(StrainQuality { delta_star: worst.0.max(0.0), worst_constraint: worst.1 })
}

/// `δ · min_i min(|a_i p|, |b_i p|)`; the strainer is R-long at level δ iff
/// this exceeds `R`.
pub fn rlong_radius(space: &FiniteMetricSpace, s: &Strainer, delta: f64) -> f64 {
    delta * s.min_arm(space)
}

/// Knobs for the strainer search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Comparison-angle evaluations allowed per base point.
    pub budget: usize,
    /// Arms must be strictly longer than this.
    pub min_arm: f64,
    /// Arms must be strictly shorter than this.
    pub max_arm: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { budget: DEFAULT_BUDGET, min_arm: 0.0, max_arm: f64::INFINITY }
    }
}

/// A verified search result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoundStrainer {
    pub strainer: Strainer,
    pub delta_star: f64,
    pub rlong_radius: f64,
}

fn point_rng(seed: u64, point: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(point as u64);
    rng
}

struct Greedy<'a> {
    space: &'a FiniteMetricSpace,
    k: CurvatureBound,
    p: usize,
    delta: f64,
    spent: usize,
    budget: usize,
}

impl Greedy<'_> {
    fn angle(&mut self, x: usize, y: usize) -> Option<f64> {
        self.spent += 1;
        angle_at(self.space, self.k, self.p, x, y).ok()
    }

    fn exhausted(&self) -> bool {
        self.spent >= self.budget
    }

    /// One greedy pass from a fixed first arm; each later arm minimises the
    /// running worst inequality, ties going to the smaller id.
    fn run(&mut self, cands: &[usize], first: usize, n: usize) -> Option<Strainer> {
        // running[c] = max over chosen arms x of (π/2 − ∠̃ x p c)
        let mut running = vec![f64::NEG_INFINITY; cands.len()];
        let mut used = vec![false; cands.len()];
        let mut pairs = Vec::with_capacity(n);
        let mut a_idx = cands.iter().position(|&c| c == first)?;

        for i in 0..n {
            if i > 0 {
                let (idx, cost) = best_index(&running, &used)?;
                if cost >= self.delta {
                    return None;
                }
                a_idx = idx;
            }
            used[a_idx] = true;
            let a = cands[a_idx];
            let mut opposite = vec![f64::INFINITY; cands.len()];
            for (ci, &c) in cands.iter().enumerate() {
                if used[ci] {
                    continue;
                }
                if self.exhausted() {
                    return None;
                }
                match self.angle(a, c) {
                    Some(th) => {
                        opposite[ci] = running[ci].max(PI - th);
                        running[ci] = running[ci].max(FRAC_PI_2 - th);
                    }
                    None => {
                        running[ci] = f64::INFINITY;
                    }
                }
            }
            let (b_idx, cost) = best_index(&opposite, &used)?;
            if cost >= self.delta {
                return None;
            }
            used[b_idx] = true;
            let b = cands[b_idx];
            for (ci, &c) in cands.iter().enumerate() {
                if used[ci] {
                    continue;
                }
                if self.exhausted() {
                    return None;
                }
                match self.angle(b, c) {
                    Some(th) => running[ci] = running[ci].max(FRAC_PI_2 - th),
                    None => running[ci] = f64::INFINITY,
                }
            }
            pairs.push((a, b));
        }
        Some(Strainer::new(self.p, pairs))
    }
}

fn best_index(costs: &[f64], used: &[bool]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, (&c, &u)) in costs.iter().zip(used).enumerate() {
        if !u && c.is_finite() && best.is_none_or(|(_, b)| c < b) {
            best = Some((i, c));
        }
    }
    best
}

fn order_found(a: &FoundStrainer, b: &FoundStrainer) -> Ordering {
    b.rlong_radius
        .total_cmp(&a.rlong_radius)
        .then(a.delta_star.total_cmp(&b.delta_star))
}

/// Every distinct strainer found by the budgeted greedy search, best first
/// (largest R-long radius, then smallest `delta_star`).
///
/// Restarts run over arm-length tiers (longest arms first, the first arm
/// being the longest candidate of the tier) and then from seeded random
/// first arms until the budget runs out. Each result is re-verified.
#[allow(clippy::too_many_arguments)]
pub fn strainer_candidates(
    space: &FiniteMetricSpace,
    k: CurvatureBound,
    p: usize,
    n: usize,
    delta: f64,
    pool: Option<&[usize]>,
    seed: u64,
    opts: &SearchOptions,
) -> Vec<FoundStrainer> {
    if n == 0 || delta <= 0.0 || p >= space.len() {
        return Vec::new();
    }
    let mut cands: Vec<usize> = match pool {
        Some(ids) => ids.to_vec(),
        None => (0..space.len()).collect(),
    };
    cands.sort_unstable();
    cands.dedup();
    cands.retain(|&c| {
        let d = space.d(p, c);
        c != p && c < space.len() && d > opts.min_arm && d < opts.max_arm
    });
    if cands.len() < 2 * n {
        return Vec::new();
    }

    let mut lengths: Vec<f64> = cands.iter().map(|&c| space.d(p, c)).collect();
    lengths.sort_by(f64::total_cmp);
    let mut greedy = Greedy { space, k, p, delta, spent: 0, budget: opts.budget };
    let mut found: Vec<FoundStrainer> = Vec::new();
    let record = |s: Strainer, found: &mut Vec<FoundStrainer>| {
        if found.iter().any(|f| f.strainer == s) {
            return;
        }
        if let Ok(q) = strain_quality(space, k, &s) {
            if q.admits(delta) {
                let r = rlong_radius(space, &s, delta);
                found.push(FoundStrainer { strainer: s, delta_star: q.delta_star, rlong_radius: r });
            }
        }
    };

    let mut last_cut = f64::NAN;
    for q in LENGTH_TIERS {
        let cut = lengths[((lengths.len() - 1) as f64 * q).floor() as usize];
        if cut == last_cut {
            continue;
        }
        last_cut = cut;
        let tier: Vec<usize> = cands.iter().copied().filter(|&c| space.d(p, c) >= cut).collect();
        if tier.len() < 2 * n {
            continue;
        }
        let first = *tier
            .iter()
            .max_by(|&&x, &&y| space.d(p, x).total_cmp(&space.d(p, y)).then(y.cmp(&x)))
            .expect("tier is nonempty");
        if let Some(s) = greedy.run(&tier, first, n) {
            record(s, &mut found);
        }
        if greedy.exhausted() {
            break;
        }
    }

    let mut rng = point_rng(seed, p);
    let max_random = 4 * cands.len();
    let mut tries = 0;
    while !greedy.exhausted() && tries < max_random {
        tries += 1;
        let first = cands[rng.random_range(0..cands.len())];
        if let Some(s) = greedy.run(&cands, first, n) {
            record(s, &mut found);
        }
    }

    found.sort_by(order_found);
    found
}

/// The best strainer at `p` with `delta_star < delta`, if the search finds one.
#[allow(clippy::too_many_arguments)]
pub fn find_strainer(
    space: &FiniteMetricSpace,
    k: CurvatureBound,
    p: usize,
    n: usize,
    delta: f64,
    pool: Option<&[usize]>,
    seed: u64,
    opts: &SearchOptions,
) -> Option<FoundStrainer> {
    strainer_candidates(space, k, p, n, delta, pool, seed, opts).into_iter().next()
}

/// An R-long strainer together with a δR-long strainer whose arms are short
/// relative to it: `max short arm / min long arm < δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedStrainers {
    pub long: FoundStrainer,
    pub short: FoundStrainer,
}

impl NestedStrainers {
    /// Re-run all three conditions from scratch.
    pub fn verify(&self, space: &FiniteMetricSpace, k: CurvatureBound, delta: f64, r: f64) -> bool {
        let ok_quality = |s: &Strainer| strain_quality(space, k, s).is_ok_and(|q| q.admits(delta));
        ok_quality(&self.long.strainer)
            && ok_quality(&self.short.strainer)
            && rlong_radius(space, &self.long.strainer, delta) > r
            && rlong_radius(space, &self.short.strainer, delta) > delta * r
            && self.short.strainer.max_arm(space) / self.long.strainer.min_arm(space) < delta
    }
}

/// All nested pairs the search finds, best long strainer first.
#[allow(clippy::too_many_arguments)]
pub fn nested_candidates(
    space: &FiniteMetricSpace,
    k: CurvatureBound,
    p: usize,
    n: usize,
    delta: f64,
    r: f64,
    seed: u64,
    budget: usize,
) -> Vec<NestedStrainers> {
    if r <= 0.0 || delta <= 0.0 {
        return Vec::new();
    }
    let long_opts = SearchOptions { budget, min_arm: r / delta, max_arm: f64::INFINITY };
    let mut out = Vec::new();
    for long in strainer_candidates(space, k, p, n, delta, None, seed, &long_opts) {
        let short_opts = SearchOptions {
            budget,
            min_arm: r,
            max_arm: delta * long.strainer.min_arm(space),
        };
        for short in strainer_candidates(space, k, p, n, delta, None, seed, &short_opts) {
            let pair = NestedStrainers { long: long.clone(), short };
            if pair.verify(space, k, delta, r) {
                out.push(pair);
            }
        }
    }
    out
}

/// The first verified nested pair, if any.
pub fn nested_strainers(
    space: &FiniteMetricSpace,
    k: CurvatureBound,
    p: usize,
    n: usize,
    delta: f64,
    r: f64,
    seed: u64,
) -> Option<NestedStrainers> {
    nested_candidates(space, k, p, n, delta, r, seed, DEFAULT_BUDGET).into_iter().next()
}

/// A point of the strained set with its witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrainedPoint {
    pub point: usize,
    pub witness: FoundStrainer,
}

/// Points carrying a verified R-long `(n, δ)`-strainer.
///
/// The witness search does not depend on `R`; a point is kept iff its best
/// witness is R-long. Larger `R` therefore always yields a subset.
pub fn strained_set(
    space: &FiniteMetricSpace,
    k: CurvatureBound,
    n: usize,
    delta: f64,
    r: f64,
    seed: u64,
    budget: usize,
) -> Vec<StrainedPoint> {
    let opts = SearchOptions { budget, ..SearchOptions::default() };
    (0..space.len())
        .into_par_iter()
        .filter_map(|p| {
            let witness = find_strainer(space, k, p, n, delta, None, seed, &opts)?;
            (witness.rlong_radius > r).then_some(StrainedPoint { point: p, witness })
        })
        .collect()
}
