//! Evaluation oracles: nonexpansive mappings T, contractions Phi, monotone
//! operators A with their resolvents, and the vector fields g driving the
//! hybrid scheme.
//!
//! Built-in kinds are gated at construction: matrices validate their induced
//! norm (power iteration for p = 2, exact column/row sums for p = 1 and
//! infinity), monotone operators validate positive semidefiniteness, and
//! every mapping passes a seeded empirical nonexpansiveness spot check.
//! Finite sampling cannot certify a Lipschitz constant, but it catches
//! misdeclared inputs before they corrupt a long run.

use crate::error::{Error, Result};
use crate::geometry::{ConvexSet, NormSpec, Point};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seed for the deterministic construction-time self checks.
const GATE_SEED: u64 = 0x5eed_cafe;
const GATE_PAIRS: u64 = 200;
const GATE_SLACK: f64 = 1e-9;

/// Scalar 1-Lipschitz functions for coordinatewise mappings.
#[derive(Debug, Clone)]
pub enum ScalarMap {
    Identity,
    Clamp { lo: f64, hi: f64 },
    Abs,
    Tanh,
    Sin,
    /// `a*x + b` with `|a| <= 1`.
    Affine { a: f64, b: f64 },
}

impl ScalarMap {
    fn eval(&self, x: f64) -> f64 {
        match self {
            ScalarMap::Identity => x,
            ScalarMap::Clamp { lo, hi } => x.max(*lo).min(*hi),
            ScalarMap::Abs => x.abs(),
            ScalarMap::Tanh => x.tanh(),
            ScalarMap::Sin => x.sin(),
            ScalarMap::Affine { a, b } => a * x + b,
        }
    }

    fn lipschitz_ok(&self) -> bool {
        match self {
            ScalarMap::Clamp { lo, hi } => lo <= hi,
            ScalarMap::Affine { a, .. } => a.abs() <= 1.0 + 1e-12,
            _ => true,
        }
    }
}

#[derive(Debug, Clone)]
pub enum MappingKind {
    Identity,
    Constant(Point),
    Projection(ConvexSet),
    Matrix(DMatrix<f64>),
    Resolvent {
        op: Box<MonotoneOp>,
        lambda: f64,
        /// Precomputed `(I + lambda M)^{-1}` for the linear PSD kind.
        linear_inverse: Option<DMatrix<f64>>,
    },
    Coordinatewise(Vec<ScalarMap>),
    Composition(Vec<Mapping>),
    ConvexCombination {
        weights: Vec<f64>,
        parts: Vec<Mapping>,
    },
}

/// A nonexpansive mapping under a declared norm.
#[derive(Debug, Clone)]
pub struct Mapping {
    kind: MappingKind,
    norm: NormSpec,
    dim: usize,
}

impl Mapping {
    pub fn identity(dim: usize, norm: NormSpec) -> Self {
        Mapping {
            kind: MappingKind::Identity,
            norm,
            dim,
        }
    }

    pub fn constant(value: Point, norm: NormSpec) -> Self {
        let dim = value.dim();
        Mapping {
            kind: MappingKind::Constant(value),
            norm,
            dim,
        }
    }

    /// Metric projection onto `set`. Only nonexpansive in the Euclidean norm,
    /// so the declared norm must be p = 2.
    pub fn projection(set: ConvexSet) -> Result<Self> {
        let dim = set.dim();
        Ok(Mapping {
            kind: MappingKind::Projection(set),
            norm: NormSpec::EUCLIDEAN,
            dim,
        })
    }

    pub fn matrix(m: DMatrix<f64>, norm: NormSpec) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let induced = induced_norm(&m, &norm)?;
        if induced > 1.0 + GATE_SLACK {
            return Err(Error::NotNonexpansive(induced));
        }
        let dim = m.nrows();
        let mapping = Mapping {
            kind: MappingKind::Matrix(m),
            norm,
            dim,
        };
        mapping.self_check()?;
        Ok(mapping)
    }

    pub fn coordinatewise(maps: Vec<ScalarMap>, norm: NormSpec) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::OutOfRange("coordinatewise mapping needs >= 1 entry".into()));
        }
        if let Some(bad) = maps.iter().find(|m| !m.lipschitz_ok()) {
            return Err(Error::Unsupported(format!(
                "scalar map {bad:?} is not 1-Lipschitz"
            )));
        }
        let dim = maps.len();
        let mapping = Mapping {
            kind: MappingKind::Coordinatewise(maps),
            norm,
            dim,
        };
        mapping.self_check()?;
        Ok(mapping)
    }

    pub fn composition(parts: Vec<Mapping>) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::OutOfRange("composition needs >= 1 part".into()))?;
        let dim = first.dim;
        let norm = first.norm;
        for p in &parts {
            if p.dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.dim,
                });
            }
        }
        Ok(Mapping {
            kind: MappingKind::Composition(parts),
            norm,
            dim,
        })
    }

    pub fn convex_combination(weights: Vec<f64>, parts: Vec<Mapping>) -> Result<Self> {
        if weights.len() != parts.len() || parts.is_empty() {
            return Err(Error::OutOfRange("weights and parts must align".into()));
        }
        if weights.iter().any(|w| *w < 0.0) {
            return Err(Error::OutOfRange("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::OutOfRange(format!("weights sum to {total}, expected 1")));
        }
        let dim = parts[0].dim;
        let norm = parts[0].norm;
        for p in &parts {
            if p.dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.dim,
                });
            }
        }
        Ok(Mapping {
            kind: MappingKind::ConvexCombination { weights, parts },
            norm,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn declared_norm(&self) -> &NormSpec {
        &self.norm
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        match &self.kind {
            MappingKind::Identity => Ok(x.clone()),
            MappingKind::Constant(c) => Ok(c.clone()),
            MappingKind::Projection(set) => set.project(x),
            MappingKind::Matrix(m) => Point::from_dvector(&(m * x.to_dvector())),
            MappingKind::Resolvent {
                op,
                lambda,
                linear_inverse,
            } => apply_resolvent(op, *lambda, linear_inverse.as_ref(), x),
            MappingKind::Coordinatewise(maps) => Point::new(
                maps.iter()
                    .zip(x.coords())
                    .map(|(m, c)| m.eval(*c))
                    .collect(),
            ),
            MappingKind::Composition(parts) => {
                let mut y = x.clone();
                for p in parts {
                    y = p.apply(&y)?;
                }
                Ok(y)
            }
            MappingKind::ConvexCombination { weights, parts } => {
                let mut acc = Point::zeros(self.dim);
                for (w, p) in weights.iter().zip(parts) {
                    acc = acc.axpy(*w, &p.apply(x)?);
                }
                Ok(acc)
            }
        }
    }

    /// Seeded random-pair nonexpansiveness spot check.
    fn self_check(&self) -> Result<()> {
        let region = Region::cube(Point::zeros(self.dim), 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(GATE_SEED);
        let est = estimate_lipschitz(
            |p| self.apply(p),
            &region,
            &self.norm,
            GATE_PAIRS,
            &mut rng,
        )?;
        if est > 1.0 + GATE_SLACK {
            return Err(Error::NotNonexpansive(est));
        }
        Ok(())
    }
}

/// `|x - m(x)|` under `spec`: the asymptotic-regularity quantity.
pub fn fixed_point_residual(m: &Mapping, x: &Point, spec: &NormSpec) -> Result<f64> {
    let y = m.apply(x)?;
    Ok(spec.distance(x, &y))
}

/// Induced matrix norm for p in {1, 2, infinity}.
pub fn induced_norm(m: &DMatrix<f64>, norm: &NormSpec) -> Result<f64> {
    match norm {
        NormSpec::P(p) if *p == 1.0 => Ok((0..m.ncols())
            .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)),
        NormSpec::Infinity => Ok((0..m.nrows())
            .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)),
        NormSpec::P(p) if *p == 2.0 => Ok(spectral_norm(m)),
        NormSpec::P(p) => Err(Error::Unsupported(format!(
            "induced norm validation only for p in {{1, 2, inf}}, got {p}"
        ))),
    }
}

/// Largest singular value by power iteration on M^T M, tolerance 1e-10.
fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    let gram = m.transpose() * m;
    let n = gram.nrows();
    let mut v = nalgebra::DVector::from_fn(n, |i, _| 1.0 + 0.01 * (i as f64 + 1.0));
    v /= v.norm();
    let mut lambda = 0.0_f64;
    for _ in 0..100_000 {
        let w = &gram * &v;
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / nw;
        if (next - lambda).abs() <= 1e-10 * next.abs().max(1.0) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.max(0.0).sqrt()
}

/// A rho-contraction under a declared norm.
#[derive(Debug, Clone)]
pub struct Contraction {
    kind: ContractionKind,
    rho: f64,
    norm: NormSpec,
    dim: usize,
}

#[derive(Debug, Clone)]
pub enum ContractionKind {
    Constant(Point),
    /// `scale * x + offset`
    Affine { scale: f64, offset: Point },
    /// `M x + offset`
    MatrixAffine { m: DMatrix<f64>, offset: Point },
}

impl Contraction {
    pub fn constant(value: Point, norm: NormSpec) -> Self {
        let dim = value.dim();
        Contraction {
            kind: ContractionKind::Constant(value),
            rho: 0.0,
            norm,
            dim,
        }
    }

    pub fn affine(scale: f64, offset: Point, norm: NormSpec) -> Result<Self> {
        let rho = scale.abs();
        if rho >= 1.0 {
            return Err(Error::NotContraction { got: rho, rho: 1.0 });
        }
        let dim = offset.dim();
        Ok(Contraction {
            kind: ContractionKind::Affine { scale, offset },
            rho,
            norm,
            dim,
        })
    }

    pub fn matrix_affine(m: DMatrix<f64>, offset: Point, norm: NormSpec) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() != offset.dim() {
            return Err(Error::DimensionMismatch {
                expected: offset.dim(),
                got: m.nrows(),
            });
        }
        let rho = induced_norm(&m, &norm)?;
        if rho >= 1.0 {
            return Err(Error::NotContraction { got: rho, rho: 1.0 });
        }
        let dim = offset.dim();
        Ok(Contraction {
            kind: ContractionKind::MatrixAffine { m, offset },
            rho,
            norm,
            dim,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn declared_norm(&self) -> &NormSpec {
        &self.norm
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        match &self.kind {
            ContractionKind::Constant(c) => Ok(c.clone()),
            ContractionKind::Affine { scale, offset } => Ok(offset.axpy(*scale, x)),
            ContractionKind::MatrixAffine { m, offset } => {
                let y = m * x.to_dvector();
                Ok(offset.add(&Point::from_dvector(&y)?))
            }
        }
    }

    /// The unique fixed point of an affine contraction, when computable in
    /// closed form.
    pub fn fixed_point(&self) -> Result<Point> {
        match &self.kind {
            ContractionKind::Constant(c) => Ok(c.clone()),
            ContractionKind::Affine { scale, offset } => Ok(offset.scale(1.0 / (1.0 - scale))),
            ContractionKind::MatrixAffine { m, offset } => {
                let n = m.nrows();
                let sys = DMatrix::identity(n, n) - m;
                let inv = sys.try_inverse().ok_or(Error::SingularSystem)?;
                Point::from_dvector(&(inv * offset.to_dvector()))
            }
        }
    }
}

/// Scalar convex pieces with closed-form proximal maps.
#[derive(Debug, Clone)]
pub enum ScalarConvex {
    /// `weight * |z|`; prox is soft thresholding.
    Abs { weight: f64 },
    /// `weight * z^2`; prox is `x / (1 + 2 lambda weight)`.
    Square { weight: f64 },
    /// Indicator of `[lo, hi]`; prox is the clamp.
    Indicator { lo: f64, hi: f64 },
}

impl ScalarConvex {
    fn prox(&self, x: f64, lambda: f64) -> f64 {
        match self {
            ScalarConvex::Abs { weight } => {
                let t = lambda * weight;
                if x > t {
                    x - t
                } else if x < -t {
                    x + t
                } else {
                    0.0
                }
            }
            ScalarConvex::Square { weight } => x / (1.0 + 2.0 * lambda * weight),
            ScalarConvex::Indicator { lo, hi } => x.max(*lo).min(*hi),
        }
    }
}

/// Set-valued monotone operators, exposed only through their resolvents.
#[derive(Debug, Clone)]
pub enum MonotoneOp {
    LinearPsd(DMatrix<f64>),
    SubgradientSeparable(Vec<ScalarConvex>),
    NormalCone(ConvexSet),
}

impl MonotoneOp {
    pub fn linear_psd(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let sym = (&m + m.transpose()) * 0.5;
        let eig = sym.symmetric_eigenvalues();
        if eig.iter().any(|l| *l < -1e-9) {
            return Err(Error::NotMonotone);
        }
        Ok(MonotoneOp::LinearPsd(m))
    }

    pub fn subgradient(pieces: Vec<ScalarConvex>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::OutOfRange("subgradient operator needs >= 1 piece".into()));
        }
        for p in &pieces {
            match p {
                ScalarConvex::Abs { weight } | ScalarConvex::Square { weight } => {
                    if *weight < 0.0 {
                        return Err(Error::NotMonotone);
                    }
                }
                ScalarConvex::Indicator { lo, hi } => {
                    if lo > hi {
                        return Err(Error::EmptySet("indicator with lo > hi".into()));
                    }
                }
            }
        }
        Ok(MonotoneOp::SubgradientSeparable(pieces))
    }

    pub fn normal_cone(set: ConvexSet) -> Self {
        MonotoneOp::NormalCone(set)
    }

    pub fn dim(&self) -> usize {
        match self {
            MonotoneOp::LinearPsd(m) => m.nrows(),
            MonotoneOp::SubgradientSeparable(p) => p.len(),
            MonotoneOp::NormalCone(c) => c.dim(),
        }
    }

    /// The resolvent `J_lambda = (I + lambda A)^{-1}` as a nonexpansive
    /// mapping (Euclidean norm).
    pub fn resolvent(&self, lambda: f64) -> Result<Mapping> {
        if !(lambda > 0.0) {
            return Err(Error::OutOfRange(format!("lambda = {lambda} must be > 0")));
        }
        let dim = self.dim();
        let linear_inverse = match self {
            MonotoneOp::LinearPsd(m) => {
                let sys = DMatrix::identity(dim, dim) + m * lambda;
                Some(sys.try_inverse().ok_or(Error::SingularSystem)?)
            }
            _ => None,
        };
        Ok(Mapping {
            kind: MappingKind::Resolvent {
                op: Box::new(self.clone()),
                lambda,
                linear_inverse,
            },
            norm: NormSpec::EUCLIDEAN,
            dim,
        })
    }

    /// For the linear PSD kind: the orthogonal projector onto the zero set
    /// `null(M)` (columns of V with vanishing singular value).
    pub fn zero_set_projector(&self) -> Option<DMatrix<f64>> {
        match self {
            MonotoneOp::LinearPsd(m) => {
                let svd = m.clone().svd(true, true);
                let v_t = svd.v_t.as_ref()?;
                let n = m.ncols();
                let mut proj = DMatrix::zeros(n, n);
                for (i, sigma) in svd.singular_values.iter().enumerate() {
                    if *sigma < 1e-10 {
                        let row = v_t.row(i);
                        let col = row.transpose();
                        proj += &col * row;
                    }
                }
                Some(proj)
            }
            _ => None,
        }
    }
}

fn apply_resolvent(
    op: &MonotoneOp,
    lambda: f64,
    linear_inverse: Option<&DMatrix<f64>>,
    x: &Point,
) -> Result<Point> {
    match op {
        MonotoneOp::LinearPsd(_) => {
            let inv = linear_inverse.ok_or(Error::SingularSystem)?;
            Point::from_dvector(&(inv * x.to_dvector()))
        }
        MonotoneOp::SubgradientSeparable(pieces) => Point::new(
            pieces
                .iter()
                .zip(x.coords())
                .map(|(p, c)| p.prox(*c, lambda))
                .collect(),
        ),
        MonotoneOp::NormalCone(set) => set.project(x),
    }
}

/// A linear-plus-offset operator `A(x) = M x - b`, used as the Lipschitz
/// strongly monotone operator of the variational-inequality solver.
#[derive(Debug, Clone)]
pub struct AffineOperator {
    m: DMatrix<f64>,
    b: Point,
}

impl AffineOperator {
    pub fn new(m: DMatrix<f64>, b: Point) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: b.dim(),
                got: m.nrows(),
            });
        }
        Ok(AffineOperator { m, b })
    }

    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        let y = &self.m * x.to_dvector();
        Point::from_dvector(&y).map(|p| p.sub(&self.b))
    }

    /// Exact Lipschitz constant (largest singular value of M).
    pub fn lipschitz(&self) -> f64 {
        spectral_norm(&self.m)
    }

    /// Exact strong-monotonicity constant (smallest eigenvalue of the
    /// symmetric part of M), clamped at zero.
    pub fn strong_monotonicity(&self) -> f64 {
        let sym = (&self.m + self.m.transpose()) * 0.5;
        sym.symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |m, l| m.min(*l))
            .max(0.0)
    }
}

/// The vector field g of the hybrid steepest descent scheme.
#[derive(Debug, Clone)]
pub enum Drive {
    Zero { dim: usize },
    /// `g(x) = scale * x`
    Linear { scale: f64, dim: usize },
    /// `g = I - Phi`
    IdentityMinus(Contraction),
    /// `g = A`
    Operator(AffineOperator),
    /// `g = A - gamma * Phi`
    OperatorMinusContraction {
        op: AffineOperator,
        gamma: f64,
        phi: Contraction,
    },
}

impl Drive {
    pub fn dim(&self) -> usize {
        match self {
            Drive::Zero { dim } | Drive::Linear { dim, .. } => *dim,
            Drive::IdentityMinus(c) => c.dim(),
            Drive::Operator(a) => a.dim(),
            Drive::OperatorMinusContraction { op, .. } => op.dim(),
        }
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        match self {
            Drive::Zero { dim } => {
                if x.dim() != *dim {
                    return Err(Error::DimensionMismatch {
                        expected: *dim,
                        got: x.dim(),
                    });
                }
                Ok(Point::zeros(*dim))
            }
            Drive::Linear { scale, dim } => {
                if x.dim() != *dim {
                    return Err(Error::DimensionMismatch {
                        expected: *dim,
                        got: x.dim(),
                    });
                }
                Ok(x.scale(*scale))
            }
            Drive::IdentityMinus(phi) => Ok(x.sub(&phi.apply(x)?)),
            Drive::Operator(a) => a.apply(x),
            Drive::OperatorMinusContraction { op, gamma, phi } => {
                Ok(op.apply(x)?.axpy(-*gamma, &phi.apply(x)?))
            }
        }
    }
}

/// A sampling region for empirical checks.
#[derive(Debug, Clone)]
pub enum Region {
    Cube { center: Point, half_width: f64 },
    Ball { center: Point, radius: f64 },
    Annulus { center: Point, inner: f64, outer: f64 },
    /// Projects cube samples onto a convex set (samples feasible points).
    SetSurface { set: ConvexSet, spread: f64 },
}

impl Region {
    pub fn cube(center: Point, half_width: f64) -> Self {
        Region::Cube { center, half_width }
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Cube { center, .. }
            | Region::Ball { center, .. }
            | Region::Annulus { center, .. } => center.dim(),
            Region::SetSurface { set, .. } => set.dim(),
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Result<Point> {
        match self {
            Region::Cube { center, half_width } => Ok(Point::new(
                center
                    .coords()
                    .iter()
                    .map(|c| c + rng.gen_range(-half_width..=*half_width))
                    .collect(),
            )?),
            Region::Ball { center, radius } => {
                let dir = random_direction(center.dim(), rng)?;
                let r = radius * rng.gen_range(0.0_f64..=1.0).powf(1.0 / center.dim() as f64);
                Ok(center.axpy(r, &dir))
            }
            Region::Annulus {
                center,
                inner,
                outer,
            } => {
                let dir = random_direction(center.dim(), rng)?;
                let r = rng.gen_range(*inner..=*outer);
                Ok(center.axpy(r, &dir))
            }
            Region::SetSurface { set, spread } => {
                let raw = Point::new(
                    (0..set.dim())
                        .map(|_| rng.gen_range(-spread..=*spread))
                        .collect(),
                )?;
                set.project(&raw)
            }
        }
    }
}

fn random_direction(dim: usize, rng: &mut impl Rng) -> Result<Point> {
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| {
                // Box-Muller
                let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                let u2: f64 = rng.gen_range(0.0..1.0);
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect();
        let p = Point::new(v)?;
        let n = p.norm2();
        if n > 1e-12 {
            return Ok(p.scale(1.0 / n));
        }
    }
}

/// Max over sampled pairs of `|f(x) - f(y)| / |x - y|` under `norm` — an
/// empirical lower bound on the true Lipschitz constant.
pub fn estimate_lipschitz<F>(
    f: F,
    region: &Region,
    norm: &NormSpec,
    trials: u64,
    rng: &mut impl Rng,
) -> Result<f64>
where
    F: Fn(&Point) -> Result<Point>,
{
    if trials == 0 {
        return Err(Error::OutOfRange("trials must be >= 1".into()));
    }
    let mut best = 0.0_f64;
    for _ in 0..trials {
        let x = region.sample(rng)?;
        let y = region.sample(rng)?;
        let denom = norm.distance(&x, &y);
        if denom < 1e-12 {
            continue;
        }
        let fx = f(&x)?;
        let fy = f(&y)?;
        best = best.max(norm.distance(&fx, &fy) / denom);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexSet;

    fn pt(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn apply_examples() {
        let id = Mapping::identity(2, NormSpec::EUCLIDEAN);
        assert_eq!(id.apply(&pt(&[1.0, 2.0])).unwrap(), pt(&[1.0, 2.0]));

        let ball = ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let proj = Mapping::projection(ball).unwrap();
        assert_eq!(proj.apply(&pt(&[0.0, 2.0])).unwrap(), pt(&[0.0, 1.0]));

        // 90 degree rotation is an isometry
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let m = Mapping::matrix(rot, NormSpec::EUCLIDEAN).unwrap();
        let y = m.apply(&pt(&[1.0, 0.0])).unwrap();
        assert!((y.coords()[0] - 0.0).abs() < 1e-12);
        assert!((y.coords()[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let id = Mapping::identity(2, NormSpec::EUCLIDEAN);
        assert!(matches!(
            id.apply(&pt(&[1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn expansive_matrix_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            Mapping::matrix(m, NormSpec::EUCLIDEAN),
            Err(Error::NotNonexpansive(_))
        ));
    }

    #[test]
    fn induced_norm_row_col_sums() {
        let m = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.25, 0.25]);
        assert!((induced_norm(&m, &NormSpec::Infinity).unwrap() - 1.0).abs() < 1e-12);
        assert!((induced_norm(&m, &NormSpec::P(1.0)).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn resolvent_examples() {
        // linear_psd(diag(1,0)), lambda=1 applied to (2,3) -> (1,3)
        let op = MonotoneOp::linear_psd(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]))
            .unwrap();
        let j = op.resolvent(1.0).unwrap();
        let y = j.apply(&pt(&[2.0, 3.0])).unwrap();
        assert!((y.coords()[0] - 1.0).abs() < 1e-12);
        assert!((y.coords()[1] - 3.0).abs() < 1e-12);

        // normal cone resolvent is projection, lambda-independent
        let set = ConvexSet::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let nc = MonotoneOp::normal_cone(set);
        let j7 = nc.resolvent(7.0).unwrap();
        assert_eq!(j7.apply(&pt(&[2.0, -1.0])).unwrap(), pt(&[1.0, 0.0]));

        // J_lambda -> I as lambda -> 0
        let op = MonotoneOp::linear_psd(DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]))
            .unwrap();
        let j = op.resolvent(1e-12).unwrap();
        let x = pt(&[0.7, -0.4]);
        assert!(j.apply(&x).unwrap().sub(&x).norm2() < 1e-9);
    }

    #[test]
    fn resolvent_firmly_nonexpansive() {
        let ops = [
            MonotoneOp::linear_psd(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap(),
            MonotoneOp::subgradient(vec![
                ScalarConvex::Abs { weight: 0.5 },
                ScalarConvex::Square { weight: 1.0 },
            ])
            .unwrap(),
            MonotoneOp::normal_cone(ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap()),
        ];
        let mut rng = rng();
        let region = Region::cube(Point::zeros(2), 3.0);
        for op in &ops {
            let j = op.resolvent(0.7).unwrap();
            for _ in 0..1000 {
                let x = region.sample(&mut rng).unwrap();
                let y = region.sample(&mut rng).unwrap();
                let jx = j.apply(&x).unwrap();
                let jy = j.apply(&y).unwrap();
                let d = jx.sub(&jy);
                assert!(d.dot(&d) <= x.sub(&y).dot(&d) + 1e-9);
            }
        }
    }

    #[test]
    fn resolvent_fixed_points_are_zeros() {
        // M = diag(1, 0): null space is span(e2)
        let op = MonotoneOp::linear_psd(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]))
            .unwrap();
        let proj = op.zero_set_projector().unwrap();
        for lambda in [0.1, 1.0, 100.0] {
            let j = op.resolvent(lambda).unwrap();
            let z = Point::from_dvector(&(&proj * pt(&[3.0, 5.0]).to_dvector())).unwrap();
            assert!(j.apply(&z).unwrap().sub(&z).norm2() <= 1e-9);
        }
    }

    #[test]
    fn estimate_lipschitz_examples() {
        let mut r = rng();
        let region = Region::cube(Point::zeros(2), 1.0);
        let id = Mapping::identity(2, NormSpec::EUCLIDEAN);
        let est = estimate_lipschitz(|p| id.apply(p), &region, &NormSpec::EUCLIDEAN, 100, &mut r)
            .unwrap();
        assert!((est - 1.0).abs() < 1e-9);

        let est = estimate_lipschitz(
            |p| Ok(p.scale(0.5)),
            &region,
            &NormSpec::EUCLIDEAN,
            1000,
            &mut r,
        )
        .unwrap();
        assert!((est - 0.5).abs() < 1e-9);

        let ball = Mapping::projection(ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap()).unwrap();
        let annulus = Region::Annulus {
            center: Point::zeros(2),
            inner: 0.5,
            outer: 2.0,
        };
        let est = estimate_lipschitz(|p| ball.apply(p), &annulus, &NormSpec::EUCLIDEAN, 1000, &mut r)
            .unwrap();
        assert!(est <= 1.0 + 1e-9);
    }

    #[test]
    fn fixed_point_residual_examples() {
        let id = Mapping::identity(2, NormSpec::EUCLIDEAN);
        assert_eq!(
            fixed_point_residual(&id, &pt(&[1.0, 2.0]), &NormSpec::EUCLIDEAN).unwrap(),
            0.0
        );
        let proj = Mapping::projection(ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap()).unwrap();
        assert!(
            (fixed_point_residual(&proj, &pt(&[0.0, 2.0]), &NormSpec::EUCLIDEAN).unwrap() - 1.0)
                .abs()
                < 1e-12
        );
        let c = Mapping::constant(pt(&[1.0, 1.0]), NormSpec::EUCLIDEAN);
        let r = fixed_point_residual(&c, &pt(&[0.0, 0.0]), &NormSpec::EUCLIDEAN).unwrap();
        assert!((r - 2.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn composition_and_combination_nonexpansive() {
        let mut r = rng();
        let region = Region::cube(Point::zeros(2), 2.0);
        let proj = Mapping::projection(ConvexSet::ball(vec![0.5, 0.0], 1.0).unwrap()).unwrap();
        let rot = Mapping::matrix(
            DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]),
            NormSpec::EUCLIDEAN,
        )
        .unwrap();
        let comp = Mapping::composition(vec![proj.clone(), rot.clone()]).unwrap();
        let combo = Mapping::convex_combination(vec![0.3, 0.7], vec![proj, rot]).unwrap();
        for m in [comp, combo] {
            let est =
                estimate_lipschitz(|p| m.apply(p), &region, &NormSpec::EUCLIDEAN, 1000, &mut r)
                    .unwrap();
            assert!(est <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn monotonicity_spot_check() {
        let op = MonotoneOp::linear_psd(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]))
            .unwrap();
        let MonotoneOp::LinearPsd(m) = &op else {
            unreachable!()
        };
        let mut r = rng();
        let region = Region::cube(Point::zeros(2), 3.0);
        for _ in 0..1000 {
            let x = region.sample(&mut r).unwrap();
            let y = region.sample(&mut r).unwrap();
            let ax = Point::from_dvector(&(m * x.to_dvector())).unwrap();
            let ay = Point::from_dvector(&(m * y.to_dvector())).unwrap();
            assert!(ax.sub(&ay).dot(&x.sub(&y)) >= -1e-9);
        }
        // non-PSD rejected
        assert!(MonotoneOp::linear_psd(DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]))
            .is_err());
    }

    #[test]
    fn affine_operator_constants() {
        // A(x) = x - 2 on R^1: L = eta = 1
        let a = AffineOperator::new(DMatrix::identity(1, 1), pt(&[2.0])).unwrap();
        assert!((a.lipschitz() - 1.0).abs() < 1e-9);
        assert!((a.strong_monotonicity() - 1.0).abs() < 1e-9);
        let y = a.apply(&pt(&[3.0])).unwrap();
        assert!((y.coords()[0] - 1.0).abs() < 1e-12);
    }
}
