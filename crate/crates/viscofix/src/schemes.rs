//! Iteration engines: explicit viscosity, implicit curve, hybrid steepest
//! descent, and the Mann/Halpern baselines, all producing instrumented
//! traces.
//!
//! A [`Trace`] keeps every iterate (optionally thinned by a stride for very
//! long runs) together with dense residual columns `|x_{n+1} - x_n|` and
//! `|x_n - T x_n|`; certificate verification reads residuals at arbitrary
//! indices, so those are never thinned.

use crate::error::{Error, Result};
use crate::geometry::{NormSpec, Point};
use crate::moduli::StepSchedule;
use crate::operators::{Contraction, Drive, Mapping};
use serde_json::json;

/// Iteration history with per-step residuals.
#[derive(Debug, Clone)]
pub struct Trace {
    points: Vec<Point>,
    stride: u64,
    steps: u64,
    /// `|x_{n+1} - x_n|` for `n = 0..N`.
    pub step_residuals: Vec<f64>,
    /// `|x_n - T x_n|` for `n = 0..=N`.
    pub fix_residuals: Vec<f64>,
    /// `alpha_n` actually used, `n = 0..N`.
    pub alphas: Vec<f64>,
    pub norm: NormSpec,
    pub meta: TraceMeta,
}

#[derive(Debug, Clone)]
pub struct TraceMeta {
    pub scheme: String,
    pub params: serde_json::Value,
}

impl Trace {
    /// Number of iteration steps N (the trace holds N+1 logical points).
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn stride(&self) -> u64 {
        self.stride
    }

    /// The stored iterate at index `n`, if it survived thinning.
    pub fn point_at(&self, n: u64) -> Option<&Point> {
        if n > self.steps {
            return None;
        }
        if n == self.steps {
            return self.points.last();
        }
        if n % self.stride != 0 {
            return None;
        }
        self.points.get((n / self.stride) as usize)
    }

    pub fn final_point(&self) -> &Point {
        self.points.last().expect("trace is never empty")
    }

    /// Stored (index, point) pairs in order.
    pub fn stored_points(&self) -> impl Iterator<Item = (u64, &Point)> {
        let stride = self.stride;
        let steps = self.steps;
        let last = self.points.len().saturating_sub(1);
        self.points.iter().enumerate().map(move |(i, p)| {
            let n = if i == last { steps } else { i as u64 * stride };
            (n, p)
        })
    }
}

struct TraceBuilder {
    points: Vec<Point>,
    stride: u64,
    step_residuals: Vec<f64>,
    fix_residuals: Vec<f64>,
    alphas: Vec<f64>,
    norm: NormSpec,
    next_index: u64,
}

impl TraceBuilder {
    fn new(x0: &Point, norm: NormSpec, stride: u64) -> Self {
        Self {
            points: vec![x0.clone()],
            stride: stride.max(1),
            step_residuals: Vec::new(),
            fix_residuals: Vec::new(),
            alphas: Vec::new(),
            norm,
            next_index: 1,
        }
    }

    fn push_step(&mut self, alpha: f64, x: &Point, tx: &Point, x_next: &Point) -> Result<()> {
        if !x_next.is_finite() {
            return Err(Error::NonFiniteIterate(self.next_index));
        }
        self.alphas.push(alpha);
        self.fix_residuals.push(self.norm.distance(x, tx));
        self.step_residuals.push(self.norm.distance(x_next, x));
        if self.next_index % self.stride == 0 {
            self.points.push(x_next.clone());
        }
        self.next_index += 1;
        Ok(())
    }

    fn finish(mut self, x_final: &Point, tx_final: &Point, scheme: &str, params: serde_json::Value) -> Trace {
        self.fix_residuals.push(self.norm.distance(x_final, tx_final));
        let steps = self.next_index - 1;
        if steps % self.stride != 0 {
            self.points.push(x_final.clone());
        }
        Trace {
            points: self.points,
            stride: self.stride,
            steps,
            step_residuals: self.step_residuals,
            fix_residuals: self.fix_residuals,
            alphas: self.alphas,
            norm: self.norm,
            meta: TraceMeta {
                scheme: scheme.into(),
                params,
            },
        }
    }
}

fn check_dims(t: &Mapping, x0: &Point) -> Result<()> {
    if t.dim() != x0.dim() {
        return Err(Error::DimensionMismatch {
            expected: t.dim(),
            got: x0.dim(),
        });
    }
    Ok(())
}

/// Explicit viscosity scheme `x_{n+1} = T(alpha_n Phi(x_n) + (1-alpha_n) x_n)`.
pub fn explicit_iterate(
    t: &Mapping,
    phi: &Contraction,
    s: &StepSchedule,
    x0: &Point,
    steps: u64,
    stride: u64,
) -> Result<Trace> {
    check_dims(t, x0)?;
    if phi.dim() != x0.dim() {
        return Err(Error::DimensionMismatch {
            expected: phi.dim(),
            got: x0.dim(),
        });
    }
    if steps == 0 {
        return Err(Error::OutOfRange("step count must be >= 1".into()));
    }
    let norm = *t.declared_norm();
    let mut builder = TraceBuilder::new(x0, norm, stride);
    let mut x = x0.clone();
    for n in 0..steps {
        let alpha = s.eval_alpha(n)?;
        let tx = t.apply(&x)?;
        let mix = Point::mix(alpha, &phi.apply(&x)?, &x);
        let x_next = t.apply(&mix)?;
        builder.push_step(alpha, &x, &tx, &x_next)?;
        x = x_next;
    }
    let tx = t.apply(&x)?;
    Ok(builder.finish(
        &x,
        &tx,
        "explicit",
        json!({ "schedule": s.id(), "rho": phi.rho() }),
    ))
}

/// Query for a point of the implicit curve `x_t = T(t Phi(x_t) + (1-t) x_t)`.
#[derive(Debug, Clone, Copy)]
pub struct ImplicitQuery {
    pub t: f64,
    pub tolerance: f64,
    pub max_inner: u64,
}

impl ImplicitQuery {
    /// `t` lives in `(0, 1)`; the boundary `t = 1` is additionally accepted
    /// because the inner map `T(t Phi + (1-t) I)` is still a contraction
    /// there (factor `rho`), and the resolvent identity `x_{1/lambda} =
    /// J_lambda` is exercised down to `lambda = 1`.
    pub fn new(t: f64, tolerance: f64, max_inner: u64) -> Result<Self> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::OutOfRange(format!("t = {t} must lie in (0, 1]")));
        }
        if !(tolerance > 0.0) {
            return Err(Error::OutOfRange("tolerance must be > 0".into()));
        }
        Ok(Self {
            t,
            tolerance,
            max_inner,
        })
    }
}

/// Result of one implicit solve: the point, the inner iterations spent, and
/// the certified a-priori distance to the exact curve point.
#[derive(Debug, Clone)]
pub struct ImplicitSolution {
    pub point: Point,
    pub inner_iterations: u64,
    pub error_bound: f64,
}

/// Solve for `x_t` by successive substitution on the contraction
/// `T_t = T(t Phi + (1-t) I)` with factor `c = 1 - t(1 - rho)`. The stop
/// index comes from the a-priori Banach estimate, so the returned bound is a
/// certified distance to the exact fixed point.
pub fn implicit_solve(
    t_map: &Mapping,
    phi: &Contraction,
    query: &ImplicitQuery,
    x_init: &Point,
) -> Result<ImplicitSolution> {
    check_dims(t_map, x_init)?;
    let t = query.t;
    let c = 1.0 - t * (1.0 - phi.rho());
    let step = |z: &Point| -> Result<Point> {
        let mix = Point::mix(t, &phi.apply(z)?, z);
        t_map.apply(&mix)
    };
    let norm = *t_map.declared_norm();
    let z0 = x_init.clone();
    let z1 = step(&z0)?;
    let d01 = norm.distance(&z1, &z0);
    if d01 == 0.0 {
        // degenerate start: z0 is already the exact fixed point
        return Ok(ImplicitSolution {
            point: z0,
            inner_iterations: 0,
            error_bound: 0.0,
        });
    }
    // smallest k with c^k d01 / (1-c) <= tolerance
    let ratio = query.tolerance * (1.0 - c) / d01;
    let k_needed = if ratio >= c {
        1
    } else {
        (ratio.ln() / c.ln()).ceil() as u64
    };
    if k_needed > query.max_inner {
        return Err(Error::InnerBudgetExceeded(query.max_inner as usize));
    }
    let mut z = z1;
    for k in 1..k_needed {
        z = step(&z)?;
        if !z.is_finite() {
            return Err(Error::NonFiniteIterate(k));
        }
    }
    let error_bound = c.powi(k_needed as i32) * d01 / (1.0 - c);
    Ok(ImplicitSolution {
        point: z,
        inner_iterations: k_needed,
        error_bound,
    })
}

/// Evaluate the implicit curve at each `t` in `ts`, warm-starting each solve
/// from the previous solution in descending-`t` order. The returned points
/// align with the input order.
pub fn implicit_curve(
    t_map: &Mapping,
    phi: &Contraction,
    ts: &[f64],
    tolerance: f64,
    max_inner: u64,
    x_init: &Point,
) -> Result<Vec<Point>> {
    if ts.is_empty() {
        return Err(Error::OutOfRange("ts must be nonempty".into()));
    }
    let mut order: Vec<usize> = (0..ts.len()).collect();
    order.sort_by(|&i, &j| ts[j].partial_cmp(&ts[i]).unwrap_or(std::cmp::Ordering::Equal));
    let mut results: Vec<Option<Point>> = vec![None; ts.len()];
    let mut start = x_init.clone();
    for &i in &order {
        let query = ImplicitQuery::new(ts[i], tolerance, max_inner)?;
        let sol = implicit_solve(t_map, phi, &query, &start)?;
        start = sol.point.clone();
        results[i] = Some(sol.point);
    }
    Ok(results.into_iter().map(|p| p.expect("filled")).collect())
}

/// Hybrid steepest descent `x_{n+1} = T x_n - alpha_n g(T x_n)`.
///
/// The induced schedule `alpha_n / mu` must stay in `(0, 1)` (the boundary
/// value 1 is tolerated at `n = 0` only, mirroring the harmonic alpha_0
/// relaxation).
pub fn hybrid_iterate(
    t: &Mapping,
    g: &Drive,
    mu: f64,
    s: &StepSchedule,
    x0: &Point,
    steps: u64,
    stride: u64,
) -> Result<Trace> {
    check_dims(t, x0)?;
    if g.dim() != x0.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: x0.dim(),
        });
    }
    if !(mu > 0.0) {
        return Err(Error::MuOutOfRange {
            mu,
            limit: f64::INFINITY,
        });
    }
    for n in 0..steps {
        let ap = s.eval_alpha(n)? / mu;
        let ok = (ap > 0.0 && ap < 1.0) || (n == 0 && ap == 1.0);
        if !ok {
            return Err(Error::ScheduleOutOfRange {
                index: n,
                value: ap,
            });
        }
    }
    let norm = *t.declared_norm();
    let mut builder = TraceBuilder::new(x0, norm, stride);
    let mut x = x0.clone();
    for n in 0..steps {
        let alpha = s.eval_alpha(n)?;
        let tx = t.apply(&x)?;
        let x_next = tx.axpy(-alpha, &g.apply(&tx)?);
        builder.push_step(alpha, &x, &tx, &x_next)?;
        x = x_next;
    }
    let tx = t.apply(&x)?;
    Ok(builder.finish(
        &x,
        &tx,
        "hybrid",
        json!({ "schedule": s.id(), "mu": mu, "induced_schedule": "alpha_n / mu" }),
    ))
}

/// Mann iteration `x_{n+1} = (1 - t_n) x_n + t_n T x_n`.
pub fn mann_iterate(
    t: &Mapping,
    t_schedule: &StepSchedule,
    x0: &Point,
    steps: u64,
    stride: u64,
) -> Result<Trace> {
    check_dims(t, x0)?;
    let norm = *t.declared_norm();
    let mut builder = TraceBuilder::new(x0, norm, stride);
    let mut x = x0.clone();
    for n in 0..steps {
        let tn = t_schedule.eval_alpha(n)?;
        let tx = t.apply(&x)?;
        let x_next = Point::mix(tn, &tx, &x);
        builder.push_step(tn, &x, &tx, &x_next)?;
        x = x_next;
    }
    let tx = t.apply(&x)?;
    Ok(builder.finish(&x, &tx, "mann", json!({ "schedule": t_schedule.id() })))
}

/// Halpern iteration `x_{n+1} = alpha_n u + (1 - alpha_n) T x_n`.
pub fn halpern_iterate(
    t: &Mapping,
    u: &Point,
    s: &StepSchedule,
    x0: &Point,
    steps: u64,
    stride: u64,
) -> Result<Trace> {
    check_dims(t, x0)?;
    if u.dim() != x0.dim() {
        return Err(Error::DimensionMismatch {
            expected: x0.dim(),
            got: u.dim(),
        });
    }
    let norm = *t.declared_norm();
    let mut builder = TraceBuilder::new(x0, norm, stride);
    let mut x = x0.clone();
    for n in 0..steps {
        let alpha = s.eval_alpha(n)?;
        let tx = t.apply(&x)?;
        let x_next = Point::mix(alpha, u, &tx);
        builder.push_step(alpha, &x, &tx, &x_next)?;
        x = x_next;
    }
    let tx = t.apply(&x)?;
    Ok(builder.finish(&x, &tx, "halpern", json!({ "schedule": s.id() })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexSet;
    use crate::operators::MonotoneOp;
    use nalgebra::DMatrix;

    fn pt(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    fn interval01() -> Mapping {
        Mapping::projection(ConvexSet::boxed(vec![0.0], vec![1.0]).unwrap()).unwrap()
    }

    #[test]
    fn explicit_hand_recursion() {
        // T = identity, Phi = 0 (rho = 0), harmonic: x_{n+1} = (1 - 1/(n+1)) x_n.
        // From x_0 = 1 the oracle recursion gives (1, 0, 0, 0) since alpha_0 = 1.
        let t = Mapping::identity(1, NormSpec::EUCLIDEAN);
        let phi = Contraction::constant(pt(&[0.0]), NormSpec::EUCLIDEAN);
        let s = StepSchedule::harmonic();
        let trace = explicit_iterate(&t, &phi, &s, &pt(&[1.0]), 3, 1).unwrap();
        let expected = [1.0, 0.0, 0.0, 0.0];
        for (n, e) in expected.iter().enumerate() {
            assert!(
                (trace.point_at(n as u64).unwrap().coords()[0] - e).abs() < 1e-15,
                "x_{n}"
            );
        }
    }

    #[test]
    fn explicit_stays_in_set_and_converges_to_q() {
        // T = P_[0,1], Phi(x) = x/2 + 0.5 (rho = 1/2); q solves q = Phi(q) => q = 1.
        let t = interval01();
        let phi = Contraction::affine(0.5, pt(&[0.5]), NormSpec::EUCLIDEAN).unwrap();
        let s = StepSchedule::harmonic();
        let trace = explicit_iterate(&t, &phi, &s, &pt(&[0.0]), 5000, 1).unwrap();
        for (n, p) in trace.stored_points() {
            if n >= 1 {
                let c = p.coords()[0];
                assert!((0.0..=1.0).contains(&c), "x_{n} = {c} left [0,1]");
            }
        }
        assert!((trace.final_point().coords()[0] - 1.0).abs() < 1e-2);
    }

    #[test]
    fn explicit_boundedness_bound() {
        // |x_n - p| <= max{|x0 - p|, |Phi(p) - p| / (1 - rho)} for p in Fix(T)
        let t = interval01();
        let phi = Contraction::affine(0.25, pt(&[0.5]), NormSpec::EUCLIDEAN).unwrap();
        let s = StepSchedule::harmonic();
        let x0 = pt(&[0.9]);
        let p = pt(&[0.2]); // any point of [0,1] is fixed under the projection
        let trace = explicit_iterate(&t, &phi, &s, &x0, 500, 1).unwrap();
        let phi_p = phi.apply(&p).unwrap();
        let bound = (x0.sub(&p).norm2()).max(phi_p.sub(&p).norm2() / (1.0 - phi.rho()));
        for (n, x) in trace.stored_points() {
            assert!(
                x.sub(&p).norm2() <= bound + 1e-9,
                "bound violated at n = {n}"
            );
        }
    }

    #[test]
    fn trace_step_fix_inequality() {
        // |x_n - Tx_n| <= |x_{n+1} - x_n| + alpha_n |Phi(x_n) - x_n|
        let t = interval01();
        let phi = Contraction::affine(0.5, pt(&[0.5]), NormSpec::EUCLIDEAN).unwrap();
        let s = StepSchedule::harmonic();
        let trace = explicit_iterate(&t, &phi, &s, &pt(&[0.0]), 300, 1).unwrap();
        for n in 0..trace.steps() as usize {
            let x = trace.point_at(n as u64).unwrap();
            let drift = phi.apply(x).unwrap().sub(x).norm2();
            assert!(
                trace.fix_residuals[n]
                    <= trace.step_residuals[n] + trace.alphas[n] * drift + 1e-9
            );
        }
    }

    #[test]
    fn implicit_identity_curve_is_phi_fixed_point() {
        let t = Mapping::identity(1, NormSpec::EUCLIDEAN);
        let phi = Contraction::affine(0.5, pt(&[0.0]), NormSpec::EUCLIDEAN).unwrap();
        for tv in [0.9, 0.5, 0.05] {
            let q = ImplicitQuery::new(tv, 1e-12, 1_000_000).unwrap();
            let sol = implicit_solve(&t, &phi, &q, &pt(&[3.0])).unwrap();
            assert!(sol.point.coords()[0].abs() <= 1e-11 + sol.error_bound);
            assert!(sol.error_bound <= 1e-12);
        }
    }

    #[test]
    fn implicit_projection_example() {
        // T = P_[0,1], Phi(x) = x/2 + 0.5, t = 0.5 -> x_t = 1
        let t = interval01();
        let phi = Contraction::affine(0.5, pt(&[0.5]), NormSpec::EUCLIDEAN).unwrap();
        let q = ImplicitQuery::new(0.5, 1e-10, 1_000_000).unwrap();
        let sol = implicit_solve(&t, &phi, &q, &pt(&[0.3])).unwrap();
        assert!((sol.point.coords()[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn implicit_matches_resolvent_oracle() {
        // T = (I+A)^{-1}, Phi = const u: x_t = J_{1/t} u, checked against the
        // direct linear-solve oracle.
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]);
        let op = MonotoneOp::linear_psd(a).unwrap();
        let t_map = op.resolvent(1.0).unwrap();
        let u = pt(&[2.0, 5.0]);
        let phi = Contraction::constant(u.clone(), NormSpec::EUCLIDEAN);
        for tv in [0.5, 0.1, 0.01] {
            let q = ImplicitQuery::new(tv, 1e-11, 10_000_000).unwrap();
            let sol = implicit_solve(&t_map, &phi, &q, &pt(&[0.0, 0.0])).unwrap();
            let oracle = op.resolvent(1.0 / tv).unwrap().apply(&u).unwrap();
            assert!(
                sol.point.sub(&oracle).norm2() <= 1e-10 + sol.error_bound,
                "t = {tv}"
            );
        }
    }

    #[test]
    fn implicit_inner_contraction_rate() {
        // successive-substitution residuals contract by <= 1 - t(1 - rho)
        let t = interval01();
        let phi = Contraction::affine(0.5, pt(&[0.5]), NormSpec::EUCLIDEAN).unwrap();
        let tv = 0.3;
        let c = 1.0 - tv * (1.0 - phi.rho());
        let step = |z: &Point| {
            let mix = Point::mix(tv, &phi.apply(z).unwrap(), z);
            t.apply(&mix).unwrap()
        };
        let mut z = pt(&[0.1]);
        let mut prev_res = f64::INFINITY;
        for _ in 0..50 {
            let zn = step(&z);
            let res = zn.sub(&z).norm2();
            if prev_res.is_finite() && prev_res > 1e-14 {
                assert!(res <= c * prev_res + 1e-9);
            }
            prev_res = res;
            z = zn;
        }
    }

    #[test]
    fn implicit_curve_warm_start_descending() {
        let t = interval01();
        let phi = Contraction::affine(0.5, pt(&[0.5]), NormSpec::EUCLIDEAN).unwrap();
        let ts = [0.5, 0.1, 0.01];
        let pts = implicit_curve(&t, &phi, &ts, 1e-9, 10_000_000, &pt(&[0.2])).unwrap();
        for p in &pts {
            assert!((p.coords()[0] - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn hybrid_schedule_gate() {
        // T = identity, g(x) = x, mu = 0.5, harmonic: alpha_0 / mu = 2 -> error
        let t = Mapping::identity(1, NormSpec::EUCLIDEAN);
        let g = Drive::Linear { scale: 1.0, dim: 1 };
        let s = StepSchedule::harmonic();
        let err = hybrid_iterate(&t, &g, 0.5, &s, &pt(&[1.0]), 3, 1);
        assert!(matches!(
            err,
            Err(Error::ScheduleOutOfRange { index: 0, .. })
        ));
    }

    #[test]
    fn hybrid_zero_drive_is_picard() {
        let t = interval01();
        let g = Drive::Zero { dim: 1 };
        let s = StepSchedule::power(0.5, 1.0).unwrap();
        let trace = hybrid_iterate(&t, &g, 1.0, &s, &pt(&[2.0]), 5, 1).unwrap();
        // x_1 = T x_0 = 1, then constant
        for n in 1..=5 {
            assert_eq!(trace.point_at(n).unwrap().coords()[0], 1.0);
        }
    }

    #[test]
    fn hybrid_matches_explicit_through_z_n() {
        // z_n = T x_n follows the explicit recursion with Phi = I - mu g,
        // mu = 1. Checked to 1e-10 over 1000 steps.
        let t = interval01();
        let phi = Contraction::affine(0.5, pt(&[0.25]), NormSpec::EUCLIDEAN).unwrap();
        let g = Drive::IdentityMinus(phi.clone());
        let s = StepSchedule::power(0.5, 1.0).unwrap();
        let x0 = pt(&[0.8]);
        let hyb = hybrid_iterate(&t, &g, 1.0, &s, &x0, 1000, 1).unwrap();
        let z0 = t.apply(&x0).unwrap();
        let exp = explicit_iterate(&t, &phi, &s, &z0, 1000, 1).unwrap();
        let mut max_gap = 0.0_f64;
        for n in 0..=1000u64 {
            let zx = t.apply(hyb.point_at(n).unwrap()).unwrap();
            let gap = zx.sub(exp.point_at(n).unwrap()).norm2();
            max_gap = max_gap.max(gap);
        }
        assert!(max_gap <= 1e-10, "max gap {max_gap}");
    }

    #[test]
    fn mann_halpern_baselines() {
        let t = Mapping::identity(1, NormSpec::EUCLIDEAN);
        let half = StepSchedule::custom(
            crate::moduli::AlphaSource::Constant { value: 0.5 },
            crate::moduli::ConvergenceModulus::Constant { value: 0 },
            None,
            None,
        )
        .unwrap();
        let trace = mann_iterate(&t, &half, &pt(&[0.7]), 10, 1).unwrap();
        for n in 0..=10 {
            assert!((trace.point_at(n).unwrap().coords()[0] - 0.7).abs() < 1e-14);
        }
        let s = StepSchedule::harmonic();
        let trace = halpern_iterate(&t, &pt(&[0.7]), &s, &pt(&[0.7]), 10, 1).unwrap();
        for n in 0..=10 {
            assert!((trace.point_at(n).unwrap().coords()[0] - 0.7).abs() < 1e-14);
        }
        // Halpern hand step: T = P_[0,1], u = 0.5, x0 = 2, alpha_0 = 1 -> x_1 = 0.5
        let t = interval01();
        let trace = halpern_iterate(&t, &pt(&[0.5]), &s, &pt(&[2.0]), 2, 1).unwrap();
        assert_eq!(trace.point_at(1).unwrap().coords()[0], 0.5);
    }

    #[test]
    fn stride_thinning_keeps_dense_residuals() {
        let t = interval01();
        let phi = Contraction::affine(0.5, pt(&[0.5]), NormSpec::EUCLIDEAN).unwrap();
        let s = StepSchedule::harmonic();
        let trace = explicit_iterate(&t, &phi, &s, &pt(&[0.0]), 103, 10).unwrap();
        assert_eq!(trace.step_residuals.len(), 103);
        assert_eq!(trace.fix_residuals.len(), 104);
        assert!(trace.point_at(50).unwrap().is_finite());
        assert!(trace.point_at(51).is_none());
        assert!(trace.point_at(103).is_some());
    }
}
