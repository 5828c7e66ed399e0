//! Points, p-norms, and convex sets with projection oracles.
//!
//! Everything downstream measures distances through [`NormSpec`] and reaches
//! closed convex sets only through [`ConvexSet::project`] and
//! [`ConvexSet::membership`]. Projections are metric projections in the
//! Euclidean norm; non-Euclidean scenarios must pair them with mappings that
//! are nonexpansive in the bound norm by construction.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Tolerance for membership / idempotence of projections.
pub const PROJECTION_TOL: f64 = 1e-12;
/// Sweep cap for the Dykstra intersection routine.
pub const DYKSTRA_MAX_SWEEPS: usize = 10_000;

/// A point of R^d. Coordinates are always finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::OutOfRange("point dimension must be >= 1".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinitePoint);
        }
        Ok(Self { coords })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            coords: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    /// `self + t * other`, dimensions must already agree.
    pub fn axpy(&self, t: f64, other: &Point) -> Point {
        debug_assert_eq!(self.dim(), other.dim());
        Point {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + t * b)
                .collect(),
        }
    }

    pub fn add(&self, other: &Point) -> Point {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Point) -> Point {
        self.axpy(-1.0, other)
    }

    pub fn scale(&self, t: f64) -> Point {
        Point {
            coords: self.coords.iter().map(|a| a * t).collect(),
        }
    }

    pub fn dot(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Convex combination `t * a + (1 - t) * b`.
    pub fn mix(t: f64, a: &Point, b: &Point) -> Point {
        debug_assert_eq!(a.dim(), b.dim());
        Point {
            coords: a
                .coords
                .iter()
                .zip(&b.coords)
                .map(|(x, y)| t * x + (1.0 - t) * y)
                .collect(),
        }
    }

    pub fn norm2(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.coords)
    }

    pub fn from_dvector(v: &DVector<f64>) -> Result<Point> {
        Point::new(v.iter().copied().collect())
    }
}

/// The p in a p-norm: a real >= 1 or infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormSpec {
    P(f64),
    Infinity,
}

impl NormSpec {
    pub const EUCLIDEAN: NormSpec = NormSpec::P(2.0);

    pub fn new(p: f64) -> Result<Self> {
        if !p.is_finite() || p < 1.0 {
            return Err(Error::OutOfRange(format!("norm exponent p = {p} must be >= 1")));
        }
        Ok(NormSpec::P(p))
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self, NormSpec::P(p) if *p == 2.0)
    }

    pub fn norm(&self, x: &Point) -> f64 {
        match self {
            NormSpec::Infinity => x.coords().iter().fold(0.0, |m, c| m.max(c.abs())),
            NormSpec::P(p) if *p == 1.0 => x.coords().iter().map(|c| c.abs()).sum(),
            NormSpec::P(p) if *p == 2.0 => x.norm2(),
            NormSpec::P(p) => x
                .coords()
                .iter()
                .map(|c| c.abs().powf(*p))
                .sum::<f64>()
                .powf(1.0 / p),
        }
    }

    pub fn distance(&self, x: &Point, y: &Point) -> f64 {
        self.norm(&x.sub(y))
    }
}

impl std::fmt::Display for NormSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormSpec::P(p) => write!(f, "{p}"),
            NormSpec::Infinity => write!(f, "inf"),
        }
    }
}

/// Exact diameter or a certified statement of unboundedness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Diameter {
    Finite(f64),
    Unbounded,
}

impl Diameter {
    pub fn finite(self) -> Option<f64> {
        match self {
            Diameter::Finite(d) => Some(d),
            Diameter::Unbounded => None,
        }
    }
}

/// Closed convex subsets of R^d as projection oracles.
#[derive(Debug, Clone)]
pub enum ConvexSet {
    /// Axis-aligned box `{x : lo <= x <= hi}`.
    Box { lo: Point, hi: Point },
    /// Euclidean ball `{x : |x - center|_2 <= radius}`.
    Ball { center: Point, radius: f64 },
    /// `{x : <a, x> <= b}` with a != 0.
    Halfspace { a: Point, b: f64 },
    /// `{x : Ax = b}`.
    Affine { a: DMatrix<f64>, b: DVector<f64> },
    /// Intersection of the listed sets; projected via Dykstra's algorithm.
    Intersection(Vec<ConvexSet>),
}

impl ConvexSet {
    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let lo = Point::new(lo)?;
        let hi = Point::new(hi)?;
        if lo.dim() != hi.dim() {
            return Err(Error::DimensionMismatch {
                expected: lo.dim(),
                got: hi.dim(),
            });
        }
        if lo
            .coords()
            .iter()
            .zip(hi.coords())
            .any(|(l, h)| l > h)
        {
            return Err(Error::EmptySet("box with lo > hi".into()));
        }
        Ok(ConvexSet::Box { lo, hi })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::EmptySet(format!("ball with radius {radius}")));
        }
        Ok(ConvexSet::Ball {
            center: Point::new(center)?,
            radius,
        })
    }

    pub fn halfspace(a: Vec<f64>, b: f64) -> Result<Self> {
        let a = Point::new(a)?;
        if a.norm2() == 0.0 {
            return Err(Error::OutOfRange("halfspace normal must be nonzero".into()));
        }
        if !b.is_finite() {
            return Err(Error::OutOfRange("halfspace offset must be finite".into()));
        }
        Ok(ConvexSet::Halfspace { a, b })
    }

    pub fn affine(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: b.len(),
            });
        }
        let set = ConvexSet::Affine { a, b };
        // An inconsistent system means the set is empty; probe with one projection.
        let dim = set.dim();
        let p = set.project(&Point::zeros(dim))?;
        if !set.membership(&p, 1e-8) {
            return Err(Error::EmptySet("inconsistent affine system".into()));
        }
        Ok(set)
    }

    pub fn intersection(parts: Vec<ConvexSet>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::EmptySet("empty intersection list".into()));
        }
        let dim = parts[0].dim();
        for p in &parts[1..] {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.dim(),
                });
            }
        }
        Ok(ConvexSet::Intersection(parts))
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Box { lo, .. } => lo.dim(),
            ConvexSet::Ball { center, .. } => center.dim(),
            ConvexSet::Halfspace { a, .. } => a.dim(),
            ConvexSet::Affine { a, .. } => a.ncols(),
            ConvexSet::Intersection(parts) => parts[0].dim(),
        }
    }

    /// Euclidean metric projection onto the set.
    pub fn project(&self, x: &Point) -> Result<Point> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        match self {
            ConvexSet::Box { lo, hi } => Ok(Point::new(
                x.coords()
                    .iter()
                    .zip(lo.coords().iter().zip(hi.coords()))
                    .map(|(c, (l, h))| c.max(*l).min(*h))
                    .collect(),
            )?),
            ConvexSet::Ball { center, radius } => {
                let d = x.sub(center);
                let dist = d.norm2();
                if dist <= *radius {
                    Ok(x.clone())
                } else {
                    Ok(center.add(&d.scale(radius / dist)))
                }
            }
            ConvexSet::Halfspace { a, b } => {
                let excess = a.dot(x) - b;
                if excess <= 0.0 {
                    Ok(x.clone())
                } else {
                    Ok(x.axpy(-excess / a.dot(a), a))
                }
            }
            ConvexSet::Affine { a, b } => {
                // x - A^T (A A^T)^+ (A x - b), via SVD for rank deficiency.
                let xv = x.to_dvector();
                let residual = a * &xv - b;
                let gram = a * a.transpose();
                let svd = gram.svd(true, true);
                let y = svd
                    .solve(&residual, 1e-13)
                    .map_err(|_| Error::SingularSystem)?;
                let proj = xv - a.transpose() * y;
                Point::from_dvector(&proj)
            }
            ConvexSet::Intersection(parts) => self.project_dykstra(x, parts),
        }
    }

    /// Dykstra's alternating projection with per-set correction terms.
    fn project_dykstra(&self, x: &Point, parts: &[ConvexSet]) -> Result<Point> {
        let dim = x.dim();
        let mut z = x.clone();
        let mut corrections = vec![Point::zeros(dim); parts.len()];
        for _ in 0..DYKSTRA_MAX_SWEEPS {
            let before = z.clone();
            for (set, corr) in parts.iter().zip(corrections.iter_mut()) {
                let shifted = z.add(corr);
                let projected = set.project(&shifted)?;
                *corr = shifted.sub(&projected);
                z = projected;
            }
            if before.sub(&z).norm2() < PROJECTION_TOL {
                return Ok(z);
            }
        }
        Err(Error::NonConvergence {
            sweeps: DYKSTRA_MAX_SWEEPS,
            tol: PROJECTION_TOL,
        })
    }

    /// Membership up to `tol` (distance-based for the simple kinds).
    pub fn membership(&self, x: &Point, tol: f64) -> bool {
        if x.dim() != self.dim() {
            return false;
        }
        match self {
            ConvexSet::Box { lo, hi } => x
                .coords()
                .iter()
                .zip(lo.coords().iter().zip(hi.coords()))
                .all(|(c, (l, h))| *c >= l - tol && *c <= h + tol),
            ConvexSet::Ball { center, radius } => x.sub(center).norm2() <= radius + tol,
            ConvexSet::Halfspace { a, b } => a.dot(x) - b <= tol * a.norm2().max(1.0),
            ConvexSet::Affine { a, b } => {
                let r = a * x.to_dvector() - b;
                r.amax() <= tol * 10.0
            }
            ConvexSet::Intersection(parts) => parts.iter().all(|s| s.membership(x, tol)),
        }
    }

    /// Diameter under `norm`: exact for box/ball, `Unbounded` for
    /// halfspace/affine, a conservative upper bound for intersections.
    pub fn diameter(&self, norm: &NormSpec) -> Diameter {
        match self {
            ConvexSet::Box { lo, hi } => Diameter::Finite(norm.norm(&hi.sub(lo))),
            ConvexSet::Ball { radius, center } => {
                let d = center.dim() as f64;
                // sup of the p-norm over the Euclidean unit ball.
                let factor = match norm {
                    NormSpec::Infinity => 1.0,
                    NormSpec::P(p) if *p >= 2.0 => 1.0,
                    NormSpec::P(p) => d.powf(1.0 / p - 0.5),
                };
                Diameter::Finite(2.0 * radius * factor)
            }
            ConvexSet::Halfspace { .. } | ConvexSet::Affine { .. } => Diameter::Unbounded,
            ConvexSet::Intersection(parts) => {
                let mut best = f64::INFINITY;
                for p in parts {
                    if let Diameter::Finite(d) = p.diameter(norm) {
                        best = best.min(d);
                    }
                }
                if best.is_finite() {
                    Diameter::Finite(best)
                } else {
                    Diameter::Unbounded
                }
            }
        }
    }
}

/// The p-norm of `x`.
pub fn norm(spec: &NormSpec, x: &Point) -> f64 {
    spec.norm(x)
}
