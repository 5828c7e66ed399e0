//! Certified iteration-count bounds.
//!
//! Given a contraction constant `rho`, bounds `M >= |Phi(x0) - x0|` and
//! `D >= |x_n - x_m|`, and a schedule with moduli `phi`, `beta`, `theta`,
//! the rate
//!
//! `Psi = max{ 1 + theta(ceil(1/(1-rho)) (beta(eps/4P) + 2 + ceil ln(4D/eps))),
//!             1 + phi(eps/2P) }`
//!
//! with `P = (1+rho)D + M` guarantees `|x_n - T x_n| < eps` for all
//! `n >= Psi`. For bounded domains with diameter `d_C` the same formula
//! applies with `D = d_C`, `P = (2+rho) d_C`, and (for decreasing schedules)
//! `beta := phi`. For the harmonic schedule the closed-form envelope
//! `Theta = exp((4/(1-rho))(16 d_C / eps + 2))` is carried in log form.
//!
//! All integer arithmetic is arbitrary precision: `theta` for the harmonic
//! family is `4^n - 1` and its compositions exceed machine width quickly.

use crate::error::{Error, Result};
use crate::geometry::{ConvexSet, Diameter, Point};
use crate::moduli::{ceil_guarded, StepSchedule};
use crate::operators::Contraction;
use crate::schemes::Trace;
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::json;

/// Ceiling of `ln x` with an upward guard: float values within 1e-12 of an
/// integer are snapped to it before the ceiling, and the result is bumped
/// until `e^k >= x` up to the same tolerance. A certificate must never be
/// undersized by rounding, so any ambiguity resolves upward.
pub fn ceil_ln(x: f64) -> Result<i64> {
    if !x.is_finite() || !(x > 0.0) {
        return Err(Error::OutOfRange(format!(
            "ceil_ln needs a positive finite argument, got {x}"
        )));
    }
    let l = x.ln();
    let r = l.round();
    let mut k = if (l - r).abs() <= 1e-12 {
        r as i64
    } else {
        l.ceil() as i64
    };
    while ((k as f64).exp()) < x * (1.0 - 2e-12) {
        k += 1;
    }
    Ok(k)
}

/// The data a rate certificate is computed from.
#[derive(Debug, Clone)]
pub struct RateInputs {
    pub rho: f64,
    /// Bound on `|Phi(x0) - x0|`.
    pub m: f64,
    /// Bound on `|x_n - x_m|` over all indices.
    pub d: f64,
    /// Diameter of the domain, when bounded.
    pub d_c: Option<f64>,
    pub epsilon: f64,
    pub schedule: StepSchedule,
    /// Derived: `(1+rho)D + M`, or `(2+rho)d_C` on the bounded route.
    pub p: f64,
}

impl RateInputs {
    fn validate(rho: f64, m: f64, d: f64, epsilon: f64) -> Result<()> {
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::OutOfRange(format!("rho = {rho} must lie in [0, 1)")));
        }
        if !(m >= 0.0) {
            return Err(Error::OutOfRange(format!("M = {m} must be >= 0")));
        }
        if !(d > 0.0) {
            return Err(Error::OutOfRange(format!("D = {d} must be > 0")));
        }
        check_epsilon(epsilon)?;
        Ok(())
    }

    /// Inputs for the general theorem: `P = (1+rho)D + M`.
    pub fn general(rho: f64, m: f64, d: f64, epsilon: f64, schedule: StepSchedule) -> Result<Self> {
        Self::validate(rho, m, d, epsilon)?;
        Ok(Self {
            rho,
            m,
            d,
            d_c: None,
            epsilon,
            schedule,
            p: (1.0 + rho) * d + m,
        })
    }

    /// Inputs for the bounded-domain corollaries: `D = d_C`, `M = d_C`,
    /// `P = (2+rho)d_C`.
    pub fn bounded(rho: f64, d_c: f64, epsilon: f64, schedule: StepSchedule) -> Result<Self> {
        Self::validate(rho, d_c, d_c, epsilon)?;
        Ok(Self {
            rho,
            m: d_c,
            d: d_c,
            d_c: Some(d_c),
            epsilon,
            schedule,
            p: (2.0 + rho) * d_c,
        })
    }

    /// Recompute `P` from the stored fields; must match `p` exactly.
    pub fn recomputed_p(&self) -> f64 {
        match self.d_c {
            Some(d_c) => (2.0 + self.rho) * d_c,
            None => (1.0 + self.rho) * self.d + self.m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertKind {
    QuantLiuH,
    PsiGeneral,
    PsiDecreasing,
    ThetaHarmonic,
}

/// Certificate value: exact integer, or a log-form real with an optional
/// integer ceiling when it fits machine-representable magnitudes.
#[derive(Debug, Clone)]
pub enum CertValue {
    Int(BigUint),
    LogForm {
        ln_value: f64,
        int_ceiling: Option<BigUint>,
    },
}

impl CertValue {
    /// Natural log of the value (approximate for large integers).
    pub fn ln(&self) -> f64 {
        match self {
            CertValue::Int(v) => ln_biguint(v),
            CertValue::LogForm { ln_value, .. } => *ln_value,
        }
    }

    /// The value as a `u64` iteration index, when it fits.
    pub fn as_index(&self) -> Option<u64> {
        match self {
            CertValue::Int(v) => v.to_u64(),
            CertValue::LogForm { int_ceiling, .. } => int_ceiling.as_ref().and_then(|v| v.to_u64()),
        }
    }
}

/// Approximate natural log of a big integer (exact for values up to 2^53).
pub fn ln_biguint(v: &BigUint) -> f64 {
    if v.bits() <= 53 {
        let x = v.to_u64().expect("fits") as f64;
        if x <= 0.0 {
            f64::NEG_INFINITY
        } else {
            x.ln()
        }
    } else {
        let shift = v.bits() - 53;
        let top = (v >> shift).to_u64().expect("53 bits fit") as f64;
        top.ln() + shift as f64 * std::f64::consts::LN_2
    }
}

#[derive(Debug, Clone)]
pub struct RateCertificate {
    pub kind: CertKind,
    pub value: CertValue,
    pub inputs: RateInputs,
    pub verification: Option<VerdictReport>,
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 2.0) {
        return Err(Error::EpsilonOutOfRange(eps));
    }
    Ok(())
}

/// Quantitative Liu lemma bound
/// `h = delta(gamma(eps/2) + 1 + ceil ln(2D/eps))`, where `gamma` is a
/// Cauchy modulus of the error series and `delta` a rate of divergence of
/// the step series: then `a_n < eps` for all `n >= h`.
pub fn quant_liu_bound(
    gamma: impl Fn(f64) -> Result<u64>,
    delta: impl Fn(u64) -> Result<BigUint>,
    d: f64,
    epsilon: f64,
) -> Result<BigUint> {
    check_epsilon(epsilon)?;
    if !(d > 0.0) {
        return Err(Error::OutOfRange(format!("D = {d} must be > 0")));
    }
    let g = gamma(epsilon / 2.0)?;
    let log_term = ceil_ln(2.0 * d / epsilon)?;
    let arg = (g as i128 + 1 + log_term as i128).max(0);
    let arg = u64::try_from(arg).map_err(|_| Error::ModulusOverflow)?;
    delta(arg)
}

fn psi_core(
    schedule: &StepSchedule,
    rho: f64,
    d: f64,
    p: f64,
    epsilon: f64,
    beta_from_phi: bool,
) -> Result<BigUint> {
    check_epsilon(epsilon)?;
    let beta = if beta_from_phi {
        schedule.rate_of_convergence(epsilon / (4.0 * p))?
    } else {
        schedule
            .cauchy_modulus_delta_sum(epsilon / (4.0 * p))
            .map_err(|e| match e {
                Error::NotConvergent => Error::MissingModulus("beta"),
                other => other,
            })?
    };
    let log_term = ceil_ln(4.0 * d / epsilon)?;
    let multiplier = ceil_guarded(1.0 / (1.0 - rho));
    if !multiplier.is_finite() || multiplier >= 1.8e19 {
        return Err(Error::ModulusOverflow);
    }
    let multiplier = multiplier.max(1.0) as u128;
    let inner = (beta as i128 + 2 + log_term as i128).max(0) as u128;
    let theta_arg = multiplier
        .checked_mul(inner)
        .and_then(|v| u64::try_from(v).ok())
        .ok_or(Error::ModulusOverflow)?;
    let theta_arm = schedule
        .divergence_modulus_big(theta_arg)
        .map_err(|e| match e {
            Error::NotDivergent => Error::MissingModulus("theta"),
            other => other,
        })?
        + 1u8;
    let phi_arm = BigUint::from(schedule.rate_of_convergence(epsilon / (2.0 * p))? + 1);
    Ok(theta_arm.max(phi_arm))
}

/// Rate of asymptotic regularity for the explicit scheme under the general
/// theorem (`P = (1+rho)D + M`).
pub fn psi_general(inputs: &RateInputs) -> Result<RateCertificate> {
    let value = psi_core(
        &inputs.schedule,
        inputs.rho,
        inputs.d,
        inputs.p,
        inputs.epsilon,
        false,
    )?;
    Ok(RateCertificate {
        kind: CertKind::PsiGeneral,
        value: CertValue::Int(value),
        inputs: inputs.clone(),
        verification: None,
    })
}

/// Decreasing-schedule corollary on a bounded domain: `beta := phi` and
/// `P = (2+rho)d_C`. The schedule is checked to be nonincreasing on a
/// prefix; the first offending index is the error witness.
pub fn psi_decreasing(
    schedule: &StepSchedule,
    rho: f64,
    d_c: f64,
    epsilon: f64,
) -> Result<RateCertificate> {
    if let Err(index) = schedule.decreasing_prefix(10_000) {
        return Err(Error::NotDecreasing { index });
    }
    let inputs = RateInputs::bounded(rho, d_c, epsilon, schedule.clone())?;
    let value = psi_core(schedule, rho, inputs.d, inputs.p, epsilon, true)?;
    Ok(RateCertificate {
        kind: CertKind::PsiDecreasing,
        value: CertValue::Int(value),
        inputs,
        verification: None,
    })
}

/// Closed-form envelope for the harmonic schedule on a bounded domain:
/// `Theta = exp((4/(1-rho))(16 d_C/eps + 2))`, carried in natural-log form.
/// The integer ceiling is attached when `ln Theta <= ln(2^62)`.
pub fn theta_harmonic(rho: f64, d_c: f64, epsilon: f64) -> Result<RateCertificate> {
    check_epsilon(epsilon)?;
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::OutOfRange(format!("rho = {rho} must lie in [0, 1)")));
    }
    if !(d_c > 0.0) {
        return Err(Error::OutOfRange(format!("d_C = {d_c} must be > 0")));
    }
    let ln_value = (4.0 / (1.0 - rho)) * (16.0 * d_c / epsilon + 2.0);
    let int_ceiling = if ln_value <= 62.0 * std::f64::consts::LN_2 {
        // upward-guarded ceiling of e^{ln_value}
        let x = ln_value.exp() * (1.0 + 1e-12);
        Some(BigUint::from(x.ceil() as u128))
    } else {
        None
    };
    let inputs = RateInputs::bounded(rho, d_c, epsilon, StepSchedule::harmonic())?;
    Ok(RateCertificate {
        kind: CertKind::ThetaHarmonic,
        value: CertValue::LogForm {
            ln_value,
            int_ceiling,
        },
        inputs,
        verification: None,
    })
}

/// Bounds derived from scenario data.
#[derive(Debug, Clone, Copy)]
pub struct DerivedBounds {
    pub m: f64,
    pub d: f64,
    /// Present when `D` came from a bounded domain diameter.
    pub d_c: Option<f64>,
}

/// Derive `M = |Phi(x0) - x0|` and a diameter bound `D`: the domain
/// diameter when it is finite, else `2 max{|x0 - p|, |Phi(p) - p|/(1-rho)}`
/// through a known fixed point `p` (triangle inequality through the
/// invariant ball of the iteration).
pub fn derive_bounds(
    set: Option<&ConvexSet>,
    phi: &Contraction,
    x0: &Point,
    known_fixed_point: Option<&Point>,
) -> Result<DerivedBounds> {
    let norm = *phi.declared_norm();
    let m = norm.distance(&phi.apply(x0)?, x0);
    if let Some(set) = set {
        if let Diameter::Finite(d_c) = set.diameter(&norm) {
            return Ok(DerivedBounds {
                m,
                d: d_c,
                d_c: Some(d_c),
            });
        }
    }
    if let Some(p) = known_fixed_point {
        let radius = norm
            .distance(x0, p)
            .max(norm.distance(&phi.apply(p)?, p) / (1.0 - phi.rho()));
        return Ok(DerivedBounds {
            m,
            d: 2.0 * radius,
            d_c: None,
        });
    }
    Err(Error::Underdetermined)
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail { witness: u64, residual: f64 },
    UnverifiableAtBudget,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictReport {
    #[serde(flatten)]
    pub verdict: Verdict,
    pub epsilon: f64,
    /// Indices whose residual was checked against epsilon.
    pub checked_indices: Vec<u64>,
    /// First observed index with `fix_residual < epsilon`, if any.
    pub empirical_crossing: Option<u64>,
}

const VERIFY_SLACK: f64 = 1e-9;

/// Check a certificate's conclusion `|x_n - T x_n| < eps` against a trace.
///
/// If the certified index fits the budget, the residual is checked at that
/// index and at 100 log-spaced indices up to the trace end. Otherwise the
/// verdict is `unverifiable_at_budget` and only the empirical crossing index
/// is reported.
pub fn verify_certificate(
    trace: &Trace,
    cert: &RateCertificate,
    budget: u64,
) -> Result<VerdictReport> {
    let epsilon = cert.inputs.epsilon;
    let n_end = trace.steps();
    let empirical_crossing = trace
        .fix_residuals
        .iter()
        .position(|&r| r < epsilon)
        .map(|i| i as u64);
    let bound_index = match cert.value.as_index() {
        Some(v) if v <= budget => v,
        _ => {
            if n_end < budget {
                return Err(Error::TraceTooShort {
                    len: n_end as usize + 1,
                    needed: budget,
                });
            }
            return Ok(VerdictReport {
                verdict: Verdict::UnverifiableAtBudget,
                epsilon,
                checked_indices: Vec::new(),
                empirical_crossing,
            });
        }
    };
    if n_end < bound_index {
        return Err(Error::TraceTooShort {
            len: n_end as usize + 1,
            needed: bound_index,
        });
    }
    let mut indices = vec![bound_index];
    if n_end > bound_index {
        // 100 log-spaced offsets over (bound_index, n_end]
        let span = (n_end - bound_index) as f64;
        for k in 1..=100u32 {
            let frac = k as f64 / 100.0;
            let off = span.powf(frac).round().max(1.0) as u64;
            indices.push(bound_index + off.min(n_end - bound_index));
        }
    }
    indices.sort_unstable();
    indices.dedup();
    for &n in &indices {
        let r = trace.fix_residuals[n as usize];
        if !(r < epsilon + VERIFY_SLACK) {
            return Ok(VerdictReport {
                verdict: Verdict::Fail {
                    witness: n,
                    residual: r,
                },
                epsilon,
                checked_indices: indices.clone(),
                empirical_crossing,
            });
        }
    }
    Ok(VerdictReport {
        verdict: Verdict::Pass,
        epsilon,
        checked_indices: indices,
        empirical_crossing,
    })
}

impl RateCertificate {
    /// Recompute the certificate value from its stored inputs. Used to
    /// assert exact-arithmetic reproducibility.
    pub fn recompute(&self) -> Result<CertValue> {
        match self.kind {
            CertKind::PsiGeneral => Ok(psi_general(&self.inputs)?.value),
            CertKind::PsiDecreasing => Ok(psi_decreasing(
                &self.inputs.schedule,
                self.inputs.rho,
                self.inputs.d_c.ok_or(Error::Underdetermined)?,
                self.inputs.epsilon,
            )?
            .value),
            CertKind::ThetaHarmonic => Ok(theta_harmonic(
                self.inputs.rho,
                self.inputs.d_c.ok_or(Error::Underdetermined)?,
                self.inputs.epsilon,
            )?
            .value),
            CertKind::QuantLiuH => {
                let s = self.inputs.schedule.clone();
                let t = self.inputs.schedule.clone();
                quant_liu_bound(
                    |e| s.cauchy_modulus_delta_sum(e),
                    |n| t.divergence_modulus_big(n),
                    self.inputs.d,
                    self.inputs.epsilon,
                )
                .map(CertValue::Int)
            }
        }
    }

    /// Issue a quantitative-Liu certificate from schedule moduli.
    pub fn quant_liu(inputs: &RateInputs) -> Result<Self> {
        let value = quant_liu_bound(
            |e| inputs.schedule.cauchy_modulus_delta_sum(e),
            |n| inputs.schedule.divergence_modulus_big(n),
            inputs.d,
            inputs.epsilon,
        )?;
        Ok(Self {
            kind: CertKind::QuantLiuH,
            value: CertValue::Int(value),
            inputs: inputs.clone(),
            verification: None,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut record = json!({
            "kind": serde_json::to_value(self.kind).expect("kind serializes"),
            "inputs": {
                "rho": self.inputs.rho,
                "M": self.inputs.m,
                "D": self.inputs.d,
                "dC": self.inputs.d_c,
                "epsilon": self.inputs.epsilon,
                "schedule_id": self.inputs.schedule.id(),
            },
        });
        match &self.value {
            CertValue::Int(v) => {
                record["value_decimal"] = json!(v.to_str_radix(10));
            }
            CertValue::LogForm {
                ln_value,
                int_ceiling,
            } => {
                record["ln_value"] = json!(ln_value);
                if let Some(c) = int_ceiling {
                    record["value_decimal"] = json!(c.to_str_radix(10));
                }
            }
        }
        if let Some(v) = &self.verification {
            record["verdict"] = serde_json::to_value(v).expect("verdict serializes");
        }
        record
    }
}
