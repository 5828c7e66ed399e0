//! Application solvers: variational inequalities over fixed-point sets via
//! hybrid steepest descent, and zeros of monotone operators via resolvent
//! curves.

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::moduli::StepSchedule;
use crate::operators::{AffineOperator, Contraction, Drive, Mapping, MonotoneOp, Region};
use crate::schemes::{hybrid_iterate, Trace};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GATE_SEED: u64 = 0x5eed_0b5e;
const GATE_PAIRS: u64 = 200;
const GATE_SLACK: f64 = 1e-9;

/// `R = L + gamma rho` and `delta = eta - gamma rho`: the Lipschitz and
/// strong-monotonicity constants of the drive `B = A - gamma Phi`.
pub fn vip_constants(l: f64, eta: f64, rho: f64, gamma: f64) -> Result<(f64, f64)> {
    if !(eta > 0.0) {
        return Err(Error::OutOfRange(format!("eta = {eta} must be > 0")));
    }
    if l < eta {
        return Err(Error::OutOfRange(format!(
            "L = {l} must be >= eta = {eta} (Cauchy-Schwarz)"
        )));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::OutOfRange(format!("rho = {rho} must lie in [0, 1)")));
    }
    if !(gamma > 0.0) {
        return Err(Error::OutOfRange(format!("gamma = {gamma} must be > 0")));
    }
    if rho > 0.0 {
        let limit = eta / rho;
        if gamma >= limit {
            return Err(Error::GammaTooLarge { gamma, limit });
        }
    }
    Ok((l + gamma * rho, eta - gamma * rho))
}

/// Contraction factor `c = sqrt(1 - mu(2 delta - mu R^2))` of
/// `I - mu(A - gamma Phi)`; requires `0 < mu < 2 delta / R^2`. A tiny
/// negative radicand from rounding clamps to 0.
pub fn vip_contraction_factor(r: f64, delta: f64, mu: f64) -> Result<f64> {
    let limit = 2.0 * delta / (r * r);
    if !(mu > 0.0 && mu < limit) {
        return Err(Error::MuOutOfRange { mu, limit });
    }
    let radicand = (1.0 - mu * (2.0 * delta - mu * r * r)).max(0.0);
    Ok(radicand.sqrt())
}

/// A variational inequality `find q in F = Fix(T): <(A - gamma Phi)q, x - q> >= 0`
/// with `A` Lipschitz and strongly monotone. Construction gates the
/// constant calculus and spot-checks the declared `L` and `eta` on random
/// pairs.
#[derive(Debug, Clone)]
pub struct VipProblem {
    pub a: AffineOperator,
    pub l: f64,
    pub eta: f64,
    pub phi: Contraction,
    pub gamma: f64,
    pub mu: f64,
    pub t: Mapping,
}

impl VipProblem {
    pub fn new(
        a: AffineOperator,
        l: f64,
        eta: f64,
        phi: Contraction,
        gamma: f64,
        mu: f64,
        t: Mapping,
    ) -> Result<Self> {
        let dim = a.dim();
        if phi.dim() != dim || t.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: phi.dim().max(t.dim()),
            });
        }
        let rho = phi.rho();
        let (r, delta) = vip_constants(l, eta, rho, gamma)?;
        // gates mu against the problem's own constants
        vip_contraction_factor(r, delta, mu)?;
        // empirical spot check of the declared L and eta
        let mut rng = ChaCha8Rng::seed_from_u64(GATE_SEED);
        let region = Region::cube(Point::zeros(dim), 4.0);
        for _ in 0..GATE_PAIRS {
            let x = region.sample(&mut rng)?;
            let y = region.sample(&mut rng)?;
            let dx = x.sub(&y);
            let da = a.apply(&x)?.sub(&a.apply(&y)?);
            let nn = dx.norm2();
            if nn < 1e-12 {
                continue;
            }
            if da.dot(&dx) < eta * nn * nn - GATE_SLACK {
                return Err(Error::NotMonotone);
            }
            if da.norm2() > l * nn + GATE_SLACK {
                return Err(Error::OutOfRange(format!(
                    "operator exceeds its declared Lipschitz constant L = {l}"
                )));
            }
        }
        Ok(Self {
            a,
            l,
            eta,
            phi,
            gamma,
            mu,
            t,
        })
    }

    pub fn constants(&self) -> (f64, f64) {
        vip_constants(self.l, self.eta, self.phi.rho(), self.gamma).expect("gated at construction")
    }

    pub fn drive(&self) -> Drive {
        Drive::OperatorMinusContraction {
            op: self.a.clone(),
            gamma: self.gamma,
            phi: self.phi.clone(),
        }
    }
}

/// Run the hybrid steepest descent `x_{n+1} = T x_n - alpha_n (A - gamma Phi)(T x_n)`
/// and return the trace plus the final iterate.
///
/// The recursion itself never multiplies by `mu`; `mu` enters the theory
/// only through the induced schedule `alpha_n / mu` and the contraction
/// bound `mu < 2 delta / R^2`. When the declared `mu` is below the largest
/// step (as with harmonic `alpha_0 = 1`), the engine gate runs with the
/// smallest equivalence constant covering the schedule, provided it still
/// satisfies the contraction bound.
pub fn vip_solve(
    p: &VipProblem,
    s: &StepSchedule,
    x0: &Point,
    steps: u64,
    stride: u64,
) -> Result<(Trace, Point)> {
    let mut alpha_head = 0.0_f64;
    let mut alpha_tail = 0.0_f64;
    for n in 0..steps {
        let a = s.eval_alpha(n)?;
        if n == 0 {
            alpha_head = a;
        } else {
            alpha_tail = alpha_tail.max(a);
        }
    }
    let mu_eff = p.mu.max(alpha_head).max(alpha_tail * (1.0 + 1e-9));
    let (r, delta) = p.constants();
    let limit = 2.0 * delta / (r * r);
    if !(mu_eff < limit) {
        return Err(Error::MuOutOfRange { mu: mu_eff, limit });
    }
    let trace = hybrid_iterate(&p.t, &p.drive(), mu_eff, s, x0, steps, stride)?;
    let q_hat = trace.final_point().clone();
    Ok((trace, q_hat))
}

/// Zero-finding problem for a monotone operator: follow `J_lambda(x)` as
/// `lambda` grows; the limit is the projection of the anchor onto the zero
/// set `Z = A^{-1}(0)`.
#[derive(Debug, Clone)]
pub struct ZeroProblem {
    pub a: MonotoneOp,
    pub x: Point,
    /// Projection matrix onto `Z`, when available in closed form.
    pub zero_set_oracle: Option<DMatrix<f64>>,
}

impl ZeroProblem {
    pub fn new(a: MonotoneOp, x: Point) -> Result<Self> {
        if a.dim() != x.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                got: x.dim(),
            });
        }
        let zero_set_oracle = a.zero_set_projector();
        if let Some(proj) = &zero_set_oracle {
            // points of Z must be fixed by every resolvent
            let mut rng = ChaCha8Rng::seed_from_u64(GATE_SEED);
            let region = Region::cube(Point::zeros(a.dim()), 2.0);
            for lambda in [1.0, 10.0] {
                let j = a.resolvent(lambda)?;
                for _ in 0..8 {
                    let raw = region.sample(&mut rng)?;
                    let z = Point::from_dvector(&(proj * raw.to_dvector()))?;
                    if j.apply(&z)?.sub(&z).norm2() > 1e-9 {
                        return Err(Error::Validation(
                            "zero-set oracle range is not fixed by the resolvent".into(),
                        ));
                    }
                }
            }
        }
        Ok(Self {
            a,
            x,
            zero_set_oracle,
        })
    }

    /// `P_Z x` when the oracle is available.
    pub fn projected_anchor(&self) -> Option<Point> {
        self.zero_set_oracle
            .as_ref()
            .map(|p| Point::from_dvector(&(p * self.x.to_dvector())).expect("finite"))
    }
}

#[derive(Debug, Clone)]
pub struct ResolventCurve {
    pub lambdas: Vec<f64>,
    pub points: Vec<Point>,
    /// `|J_lambda x - P_Z x|` per lambda, when the oracle is present.
    pub distances: Option<Vec<f64>>,
}

/// Evaluate `J_lambda(x)` along an ascending list of positive `lambda`s.
pub fn resolvent_curve(z: &ZeroProblem, lambdas: &[f64]) -> Result<ResolventCurve> {
    if lambdas.is_empty() {
        return Err(Error::OutOfRange("lambda list must be nonempty".into()));
    }
    for w in lambdas.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::OutOfRange(format!(
                "lambdas must be ascending, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    if !(lambdas[0] > 0.0) {
        return Err(Error::OutOfRange(format!(
            "lambdas must be positive, got {}",
            lambdas[0]
        )));
    }
    let mut points = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        points.push(z.a.resolvent(lambda)?.apply(&z.x)?);
    }
    let distances = z.projected_anchor().map(|pz| {
        points
            .iter()
            .map(|p| p.sub(&pz).norm2())
            .collect::<Vec<_>>()
    });
    Ok(ResolventCurve {
        lambdas: lambdas.to_vec(),
        points,
        distances,
    })
}

/// Which variational inequality the limit point is supposed to satisfy.
/// The viscosity theorems state `<(Phi - I)q, x - q> <= 0`; the hybrid
/// steepest descent theorem states `<g(q), x - q> >= 0`. One orientation
/// per scheme avoids sign confusion.
#[derive(Debug, Clone)]
pub enum ViOrientation {
    /// Test vector `v = Phi(q) - q`.
    Viscosity { phi: Contraction },
    /// Test vector `v = -g(q)`.
    Hybrid { g: Drive },
}

/// Sampled violation of the variational inequality at `q`:
/// `max(0, max_x <v, x - q>)` over feasible samples; 0 means the VI holds
/// on every sampled point.
pub fn check_vi_residual(
    q: &Point,
    orientation: &ViOrientation,
    feasible: &Region,
    samples: u64,
    rng: &mut impl Rng,
) -> Result<f64> {
    let v = match orientation {
        ViOrientation::Viscosity { phi } => phi.apply(q)?.sub(q),
        ViOrientation::Hybrid { g } => g.apply(q)?.scale(-1.0),
    };
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let x = feasible.sample(rng)?;
        worst = worst.max(v.dot(&x.sub(q)));
    }
    Ok(worst)
}
