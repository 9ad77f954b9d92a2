//! Trigonometry on the model plane of constant curvature `k`.
//!
//! Angles are computed from side lengths with the half-angle form of the
//! spherical, Euclidean and hyperbolic laws of cosines. [`embed_triangle`]
//! lays the same triangle out in a concrete model (plane, sphere in R³, or
//! the hyperboloid in Minkowski space) and is kept as an independent route
//! for checking [`comparison_angle`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack allowed on the triangle inequality, scaled by the perimeter.
pub const SIDE_TOL: f64 = 1e-9;

/// How far a cosine may leave `[-1, 1]` before it is treated as invalid input
/// rather than rounding.
pub const COS_CLAMP_TOL: f64 = 1e-8;

/// Relative slack on the perimeter bound `2π/√k` for `k > 0`.
pub const PERIMETER_TOL: f64 = 1e-12;

/// Lower curvature bound `k`, in units of 1/length².
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct CurvatureBound(f64);

impl CurvatureBound {
    pub fn new(k: f64) -> Result<Self> {
        if k.is_finite() {
            Ok(Self(k))
        } else {
            Err(Error::InvalidInput(format!("curvature bound must be finite, got {k}")))
        }
    }

    pub const fn flat() -> Self {
        Self(0.0)
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// Perimeter bound `2π/√k` for `k > 0`, infinite otherwise.
    pub fn max_perimeter(self) -> f64 {
        if self.0 > 0.0 {
            2.0 * PI / self.0.sqrt()
        } else {
            f64::INFINITY
        }
    }
}

impl From<CurvatureBound> for f64 {
    fn from(k: CurvatureBound) -> f64 {
        k.0
    }
}

/// Side lengths of a triangle `p q r`, named by the pair of vertices they join.
///
/// The comparison angle is always taken at `q`, opposite the side `pr`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleSides {
    pub pq: f64,
    pub qr: f64,
    pub pr: f64,
}

impl TriangleSides {
    pub const fn new(pq: f64, qr: f64, pr: f64) -> Self {
        Self { pq, qr, pr }
    }

    pub fn perimeter(&self) -> f64 {
        self.pq + self.qr + self.pr
    }
}

/// True iff the sides are realised by a triangle on the `k`-plane.
pub fn triangle_exists(k: CurvatureBound, s: TriangleSides) -> bool {
    let TriangleSides { pq, qr, pr } = s;
    if !(pq >= 0.0 && qr >= 0.0 && pr >= 0.0) || !s.perimeter().is_finite() {
        return false;
    }
    let slack = SIDE_TOL * s.perimeter();
    if pq > qr + pr + slack || qr > pq + pr + slack || pr > pq + qr + slack {
        return false;
    }
    let bound = k.max_perimeter();
    !(bound.is_finite() && s.perimeter() > bound * (1.0 + PERIMETER_TOL))
}

/// The angle at `q̃` of the comparison triangle with sides `|pq|`, `|qr|`, `|pr|`.
///
/// Result lies in `[0, π]`.
pub fn comparison_angle(k: CurvatureBound, pq: f64, qr: f64, pr: f64) -> Result<f64> {
    let sides = TriangleSides::new(pq, qr, pr);
    if !triangle_exists(k, sides) {
        return Err(Error::NoTriangle { k: k.value(), pq, qr, pr });
    }
    if pq == 0.0 || qr == 0.0 {
        return Err(Error::DegenerateVertex);
    }

    // sin²(θ/2) written as a product, which stays accurate for thin triangles.
    let kv = k.value();
    let half_sin_sq = if kv == 0.0 {
        (pr + pq - qr) * (pr - pq + qr) / (4.0 * pq * qr)
    } else if kv > 0.0 {
        let s = kv.sqrt();
        let den = (s * pq).sin() * (s * qr).sin();
        if den.abs() < f64::EPSILON {
            return Err(Error::DegenerateVertex);
        }
        (0.5 * s * (pr + pq - qr)).sin() * (0.5 * s * (pr - pq + qr)).sin() / den
    } else {
        let s = (-kv).sqrt();
        let den = (s * pq).sinh() * (s * qr).sinh();
        (0.5 * s * (pr + pq - qr)).sinh() * (0.5 * s * (pr - pq + qr)).sinh() / den
    };

    let cos = 1.0 - 2.0 * half_sin_sq;
    if !cos.is_finite() || cos.abs() > 1.0 + COS_CLAMP_TOL {
        return Err(Error::NoTriangle { k: kv, pq, qr, pr });
    }
    Ok(2.0 * half_sin_sq.clamp(0.0, 1.0).sqrt().asin())
}

/// A point of the concrete model of the `k`-plane.
///
/// `k = 0`: the plane `z = 0`. `k > 0`: the sphere of radius `1/√k` centred at
/// the origin of R³. `k < 0`: the upper sheet of `t² − x² − y² = 1/|k|` with
/// coordinates `(x, y, t)`.
pub type ModelPoint = [f64; 3];

/// Lay the triangle out in the model of the `k`-plane.
///
/// Returns `[q, p, r]`: `q` sits at the model base point (the origin for
/// `k = 0`, `(0, 0, 1/√|k|)` otherwise), `p` lies along the first axis, and
/// `r` has nonnegative second coordinate.
pub fn embed_triangle(k: CurvatureBound, s: TriangleSides) -> Result<[ModelPoint; 3]> {
    if !triangle_exists(k, s) {
        return Err(Error::NoTriangle { k: k.value(), pq: s.pq, qr: s.qr, pr: s.pr });
    }
    let TriangleSides { pq, qr, pr } = s;
    let kv = k.value();

    if kv == 0.0 {
        let (x, y) = if pq == 0.0 {
            (qr, 0.0)
        } else {
            let x = (pq * pq + qr * qr - pr * pr) / (2.0 * pq);
            (x, (qr * qr - x * x).max(0.0).sqrt())
        };
        return Ok([[0.0, 0.0, 0.0], [pq, 0.0, 0.0], [x, y, 0.0]]);
    }

    let rho = 1.0 / kv.abs().sqrt();
    let (b, a, c) = (pq / rho, qr / rho, pr / rho);
    if kv > 0.0 {
        let q = [0.0, 0.0, rho];
        let p = [rho * b.sin(), 0.0, rho * b.cos()];
        let rz = rho * a.cos();
        let rx = if b.sin().abs() < f64::EPSILON {
            rho * a.sin()
        } else {
            (rho * c.cos() - b.cos() * rz) / b.sin()
        };
        let ry = ((rho * a.sin()).powi(2) - rx * rx).max(0.0).sqrt();
        Ok([q, p, [rx, ry, rz]])
    } else {
        let q = [0.0, 0.0, rho];
        let p = [rho * b.sinh(), 0.0, rho * b.cosh()];
        let rt = rho * a.cosh();
        let rx = if b == 0.0 {
            rho * a.sinh()
        } else {
            (b.cosh() * rt - rho * c.cosh()) / b.sinh()
        };
        let ry = ((rho * a.sinh()).powi(2) - rx * rx).max(0.0).sqrt();
        Ok([q, p, [rx, ry, rt]])
    }
}

/// Intrinsic distance between two points of the model of the `k`-plane.
pub fn model_distance(k: CurvatureBound, u: &ModelPoint, v: &ModelPoint) -> f64 {
    let kv = k.value();
    let d = [u[0] - v[0], u[1] - v[1], u[2] - v[2]];
    if kv == 0.0 {
        (d[0] * d[0] + d[1] * d[1]).sqrt()
    } else if kv > 0.0 {
        let rho = 1.0 / kv.sqrt();
        let cross = [
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        ];
        let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
        let cross_norm = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
        rho * cross_norm.atan2(dot)
    } else {
        let rho = 1.0 / (-kv).sqrt();
        let chord_sq = (d[0] * d[0] + d[1] * d[1] - d[2] * d[2]).max(0.0);
        2.0 * rho * (chord_sq.sqrt() / (2.0 * rho)).asinh()
    }
}

/// Angle at the base vertex between the model geodesics towards `p` and `r`.
///
/// At the base point every model's tangent plane is spanned by the first two
/// coordinate axes, so the angle is read off the projected directions.
pub fn angle_at_base(p: &ModelPoint, r: &ModelPoint) -> f64 {
    let cross = p[0] * r[1] - p[1] * r[0];
    let dot = p[0] * r[0] + p[1] * r[1];
    cross.abs().atan2(dot)
}
