//! Strainer coordinate charts `q ↦ (|a_1 q|, …, |a_n q|)` on a ball around the
//! strainer base, with a discrete inverse, distortion measurement, centers of
//! mass and the vector-level predicates used to compare segments.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kplane::{comparison_angle, CurvatureBound};
use crate::mspace::FiniteMetricSpace;
use crate::strainer::Strainer;

/// Above this many domain pairs, [`distortion`] scans a seeded subsample.
pub const MAX_DISTORTION_PAIRS: usize = 1_000_000;

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A strainer chart restricted to the sample points in a ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub base: usize,
    pub strainer: Strainer,
    pub radius: f64,
    /// Domain point ids, ascending.
    pub domain: Vec<usize>,
    /// `image[i]` is `f(domain[i])`.
    pub image: Vec<Vec<f64>>,
}

impl Chart {
    /// Build on every sample point within `radius` of the strainer base.
    pub fn build(space: &FiniteMetricSpace, strainer: &Strainer, radius: f64) -> Result<Self> {
        Self::build_at(space, strainer.base, strainer, radius)
    }

    /// As [`Chart::build`] but centred at `base`, which need not be the
    /// strainer's own base.
    pub fn build_at(space: &FiniteMetricSpace, base: usize, strainer: &Strainer, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidInput(format!("chart radius must be positive, got {radius}")));
        }
        if base >= space.len() || strainer.arms().any(|x| x >= space.len()) {
            return Err(Error::InvalidInput("chart refers to a point outside the space".into()));
        }
        let domain = space.ball(base, radius);
        if domain.is_empty() {
            return Err(Error::EmptyDomain);
        }
        let arms = strainer.a_arms();
        let image = domain
            .iter()
            .map(|&q| arms.iter().map(|&a| space.d(a, q)).collect())
            .collect();
        Ok(Self { base, strainer: strainer.clone(), radius, domain, image })
    }

    pub fn dim(&self) -> usize {
        self.strainer.n()
    }

    pub fn contains(&self, q: usize) -> bool {
        self.domain.binary_search(&q).is_ok()
    }

    /// Stored coordinates of a domain point.
    pub fn coords(&self, q: usize) -> Result<&[f64]> {
        self.domain
            .binary_search(&q)
            .map(|i| self.image[i].as_slice())
            .map_err(|_| Error::OutOfDomain(q))
    }

    /// Coordinates of any point of the space, in or out of the domain.
    pub fn eval(&self, space: &FiniteMetricSpace, q: usize) -> Vec<f64> {
        self.strainer.pairs.iter().map(|&(a, _)| space.d(a, q)).collect()
    }

    /// Domain point whose image is nearest to `v`, smallest id on ties.
    pub fn inverse(&self, v: &[f64]) -> Result<Preimage> {
        if self.domain.is_empty() {
            return Err(Error::EmptyDomain);
        }
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, img) in self.image.iter().enumerate() {
            let d2: f64 = img.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 < best.1 {
                best = (i, d2);
            }
        }
        Ok(Preimage { point: self.domain[best.0], residual: best.1.sqrt() })
    }
}

/// Result of a discrete inverse: the chosen point and `‖f(q*) − v‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Preimage {
    pub point: usize,
    pub residual: f64,
}

/// Residuals above this many sample spacings mean the target left the image.
pub const RESIDUAL_ACCEPT_FACTOR: f64 = 3.0;

impl Preimage {
    /// Stands in for convexity of the chart image: the target must lie
    /// within a few sample spacings of a sampled image point.
    pub fn accepted(&self, spacing: f64) -> bool {
        self.residual <= RESIDUAL_ACCEPT_FACTOR * spacing
    }
}

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidInput("weight vector is empty".into()));
        }
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidInput(format!("weights must be finite and nonnegative: {w:?}")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidInput(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self(w))
    }

    /// Normalise nonnegative weights with a positive sum.
    pub fn normalized(w: Vec<f64>) -> Result<Self> {
        let sum: f64 = w.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::InvalidInput("weights have no positive mass".into()));
        }
        Self::new(w.into_iter().map(|x| x / sum).collect())
    }

    /// The `j`-th standard basis vector of length `len`.
    pub fn basis(len: usize, j: usize) -> Self {
        let mut w = vec![0.0; len];
        w[j] = 1.0;
        Self(w)
    }

    pub fn uniform(len: usize) -> Self {
        Self(vec![1.0 / len as f64; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dist_l1(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }

    pub fn dist_linf(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Max and mean of `| |f(x)f(y)| / |xy| − 1 |` over domain pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartDistortion {
    pub max: f64,
    pub mean: f64,
    pub worst_pair: (usize, usize),
    pub pair_count: usize,
    pub subsampled: bool,
}

pub fn distortion(space: &FiniteMetricSpace, chart: &Chart, seed: u64) -> Result<ChartDistortion> {
    let m = chart.domain.len();
    if m < 2 {
        return Err(Error::EmptyDomain);
    }
    let total = m * (m - 1) / 2;
    let pairs: Vec<(usize, usize)> = if total <= MAX_DISTORTION_PAIRS {
        (0..m).flat_map(|i| ((i + 1)..m).map(move |j| (i, j))).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        index::sample(&mut rng, total, MAX_DISTORTION_PAIRS)
            .into_iter()
            .map(|t| unrank_pair(t, m))
            .collect()
    };
    let defects: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let img: f64 = chart.image[i]
                .iter()
                .zip(&chart.image[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            (img / space.d(chart.domain[i], chart.domain[j]) - 1.0).abs()
        })
        .collect();
    let mut worst = (0usize, f64::NEG_INFINITY);
    for (t, &d) in defects.iter().enumerate() {
        if d > worst.1 {
            worst = (t, d);
        }
    }
    let (i, j) = pairs[worst.0];
    Ok(ChartDistortion {
        max: worst.1,
        mean: defects.iter().sum::<f64>() / defects.len() as f64,
        worst_pair: (chart.domain[i], chart.domain[j]),
        pair_count: pairs.len(),
        subsampled: total > MAX_DISTORTION_PAIRS,
    })
}

/// Map a linear index to the `t`-th pair `(i, j)`, `i < j`, in row order.
fn unrank_pair(mut t: usize, m: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = m - 1 - i;
        if t < row {
            return (i, i + 1 + t);
        }
        t -= row;
        i += 1;
    }
}

/// `f⁻¹(Σ w_j f(q_j))`, with the inverse residual.
pub fn center_of_mass(chart: &Chart, q: &[usize], w: &WeightVector) -> Result<Preimage> {
    if q.len() != w.len() {
        return Err(Error::DimensionMismatch { expected: q.len(), found: w.len() });
    }
    let target = weighted_image(chart, q, w)?;
    chart.inverse(&target)
}

/// `Σ w_j f(q_j)` in chart coordinates.
pub fn weighted_image(chart: &Chart, q: &[usize], w: &WeightVector) -> Result<Vec<f64>> {
    if q.len() != w.len() {
        return Err(Error::DimensionMismatch { expected: q.len(), found: w.len() });
    }
    let mut acc = vec![0.0; chart.dim()];
    for (&qj, &wj) in q.iter().zip(w.as_slice()) {
        for (a, c) in acc.iter_mut().zip(chart.coords(qj)?) {
            *a += wj * c;
        }
    }
    Ok(acc)
}

/// Residual of the vector identity
/// `R_{W²} − Q_{W¹} = Σ w¹_j (r_j − q_j) + Σ (w²_j − w¹_j)(r_j − r_{j0})`,
/// evaluated on Euclidean data.
pub fn mass_vector_residual(
    qv: &[Vec<f64>],
    rv: &[Vec<f64>],
    w1: &WeightVector,
    w2: &WeightVector,
    j0: usize,
) -> Result<Vec<f64>> {
    let l = qv.len();
    if rv.len() != l || w1.len() != l || w2.len() != l {
        return Err(Error::DimensionMismatch { expected: l, found: rv.len().min(w1.len()).min(w2.len()) });
    }
    if j0 >= l {
        return Err(Error::InvalidInput(format!("j0 = {j0} out of range for {l} points")));
    }
    let n = qv[0].len();
    if let Some(bad) = qv.iter().chain(rv).find(|v| v.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: bad.len() });
    }
    let (w1, w2) = (w1.as_slice(), w2.as_slice());
    let mut out = vec![0.0; n];
    for (d, o) in out.iter_mut().enumerate() {
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for j in 0..l {
            lhs += w2[j] * rv[j][d] - w1[j] * qv[j][d];
            rhs += w1[j] * (rv[j][d] - qv[j][d]) + (w2[j] - w1[j]) * (rv[j][d] - rv[j0][d]);
        }
        *o = lhs - rhs;
    }
    Ok(out)
}

/// Angle between two difference vectors and the defect of their length ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentComparison {
    pub angle: f64,
    /// `|1 − ‖u‖/‖v‖|`
    pub ratio_defect: f64,
}

pub fn almost_equal_defect(u_start: &[f64], u_end: &[f64], v_start: &[f64], v_end: &[f64]) -> Result<SegmentComparison> {
    let n = u_start.len();
    for s in [u_end, v_start, v_end] {
        if s.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: s.len() });
        }
    }
    let u: Vec<f64> = u_end.iter().zip(u_start).map(|(a, b)| a - b).collect();
    let v: Vec<f64> = v_end.iter().zip(v_start).map(|(a, b)| a - b).collect();
    let nu = norm(&u);
    let nv = norm(&v);
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(SegmentComparison { angle: vector_angle(&u, &v), ratio_defect: (1.0 - nu / nv).abs() })
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Angle in `[0, π]` between two nonzero vectors, accurate near 0 and π.
pub(crate) fn vector_angle(u: &[f64], v: &[f64]) -> f64 {
    let nu = norm(u);
    let nv = norm(v);
    let a: Vec<f64> = u.iter().map(|x| x / nu).collect();
    let b: Vec<f64> = v.iter().map(|x| x / nv).collect();
    let diff: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let sum: f64 = a.iter().zip(&b).map(|(x, y)| (x + y) * (x + y)).sum::<f64>().sqrt();
    2.0 * diff.atan2(sum)
}

/// `max over refs of |∠̃(ref, x1, y1) − ∠̃(ref, x2, y2)|`, angles taken at `x1`, `x2`.
pub fn angle_consistency_defect(
    space: &FiniteMetricSpace,
    k: CurvatureBound,
    refs: &[usize],
    x1: usize,
    y1: usize,
    x2: usize,
    y2: usize,
) -> Result<f64> {
    if x1 == y1 || x2 == y2 {
        return Err(Error::DegenerateVertex);
    }
    let mut worst = 0.0f64;
    for &a in refs {
        let t1 = comparison_angle(k, space.d(a, x1), space.d(x1, y1), space.d(a, y1))?;
        let t2 = comparison_angle(k, space.d(a, x2), space.d(x2, y2), space.d(a, y2))?;
        worst = worst.max((t1 - t2).abs());
    }
    Ok(worst)
}

/// Angle between the chart images of two segments.
pub fn image_angle(chart: &Chart, x1: usize, y1: usize, x2: usize, y2: usize) -> Result<f64> {
    Ok(almost_equal_defect(chart.coords(x1)?, chart.coords(y1)?, chart.coords(x2)?, chart.coords(y2)?)?.angle)
}
