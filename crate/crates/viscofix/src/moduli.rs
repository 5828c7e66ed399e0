//! Step-size schedules and their quantitative moduli.
//!
//! A [`StepSchedule`] bundles the sequence `{alpha_n}` with three moduli:
//! a rate of convergence `phi` (`alpha_n < eps` for all `n >= phi(eps)`),
//! a Cauchy modulus `beta` of the series `sum |alpha_{n+1} - alpha_n|`, and
//! a rate of divergence `theta` of `sum alpha_n` (partial sum up to
//! `theta(n)` is at least `n`). Built-in families carry closed-form moduli;
//! custom schedules must supply all three explicitly, since finite samples
//! can never certify a universally quantified modulus.

use crate::error::{Error, Result};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

/// Ceiling with a snap-to-integer guard against float dust just above an
/// exact integer (e.g. 1/0.1 evaluating to 10.000000000000002).
pub(crate) fn ceil_guarded(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

fn ceil_to_u64(x: f64) -> Result<u64> {
    let c = ceil_guarded(x);
    if !c.is_finite() || c >= 1.8e19 {
        return Err(Error::ModulusOverflow);
    }
    Ok(if c <= 0.0 { 0 } else { c as u64 })
}

/// Serializable description of an `eps -> index` modulus.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConvergenceModulus {
    Constant { value: u64 },
    /// `ceil((scale / eps)^power)`
    CeilRecip { scale: f64, power: f64 },
}

impl ConvergenceModulus {
    pub fn eval(&self, eps: f64) -> Result<u64> {
        if !(eps > 0.0) {
            return Err(Error::OutOfRange(format!("epsilon = {eps} must be > 0")));
        }
        match self {
            ConvergenceModulus::Constant { value } => Ok(*value),
            ConvergenceModulus::CeilRecip { scale, power } => {
                ceil_to_u64((scale / eps).powf(*power))
            }
        }
    }
}

/// Serializable description of an `n -> index` rate of divergence.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum DivergenceModulus {
    /// `scale * n`
    Linear { scale: u64 },
    /// `4^ceil(per_unit * n) - 1`
    FourPow { per_unit: f64 },
    /// Integral lower bound for `alpha_n = c/(n+1)^a`, `a < 1`.
    PowerIntegral { c: f64, a: f64 },
}

impl DivergenceModulus {
    pub fn eval_big(&self, n: u64) -> Result<BigUint> {
        match self {
            DivergenceModulus::Linear { scale } => Ok(BigUint::from(*scale) * BigUint::from(n)),
            DivergenceModulus::FourPow { per_unit } => {
                let exp = ceil_guarded(per_unit * n as f64);
                if !(exp >= 0.0) || exp > 1e8 {
                    return Err(Error::ModulusOverflow);
                }
                let exp = exp as u64;
                // 4^exp - 1 == (1 << 2*exp) - 1
                let pow: BigUint = BigUint::from(1u8) << (2 * exp as usize);
                Ok(pow - 1u8)
            }
            DivergenceModulus::PowerIntegral { c, a } => {
                // sum_{i<=K} c/(i+1)^a >= c((K+2)^{1-a}-1)/(1-a); solve for K.
                let target = (n as f64) * (1.0 - a) / c + 1.0;
                let k = ceil_guarded(target.powf(1.0 / (1.0 - a))) - 2.0;
                if !k.is_finite() || k >= 1.8e19 {
                    return Err(Error::ModulusOverflow);
                }
                Ok(BigUint::from(if k <= 0.0 { 0u64 } else { k as u64 }))
            }
        }
    }

    pub fn eval(&self, n: u64) -> Result<u64> {
        self.eval_big(n)?.to_u64().ok_or(Error::ModulusOverflow)
    }
}

/// Where the alpha values of a custom schedule come from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlphaSource {
    Harmonic,
    Power { c: f64, a: f64 },
    Constant { value: f64 },
    Table { values: Vec<f64> },
}

#[derive(Debug, Clone)]
pub enum Family {
    /// `alpha_n = 1/(n+1)`
    Harmonic,
    /// `alpha_n = c/(n+1)^a`, `0 < a <= 1`, `0 < c <= 1`
    Power { c: f64, a: f64 },
    /// `alpha_n = r^{n+1}`, convergent sum: carries no rate of divergence
    Geometric { r: f64 },
    /// User-specified alphas with all three moduli given explicitly.
    Custom {
        alphas: AlphaSource,
        phi: ConvergenceModulus,
        beta: Option<ConvergenceModulus>,
        theta: Option<DivergenceModulus>,
    },
}

/// A step-size sequence together with its three moduli.
#[derive(Debug, Clone)]
pub struct StepSchedule {
    family: Family,
}

impl StepSchedule {
    pub fn harmonic() -> Self {
        Self {
            family: Family::Harmonic,
        }
    }

    pub fn power(c: f64, a: f64) -> Result<Self> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::OutOfRange(format!("power family needs 0 < c <= 1, got {c}")));
        }
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::OutOfRange(format!("power family needs 0 < a <= 1, got {a}")));
        }
        let s = Self {
            family: Family::Power { c, a },
        };
        // The integral-bound theta must hold on the standard grid before the
        // family is usable.
        if a < 1.0 {
            let report = s.validate_moduli(1_000_000, &[1.0, 0.5, 0.1]);
            if !report.all_pass() {
                return Err(Error::OutOfRange(
                    "power family failed its divergence-modulus validation".into(),
                ));
            }
        }
        Ok(s)
    }

    pub fn geometric(r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::OutOfRange(format!("geometric family needs 0 < r < 1, got {r}")));
        }
        Ok(Self {
            family: Family::Geometric { r },
        })
    }

    pub fn custom(
        alphas: AlphaSource,
        phi: ConvergenceModulus,
        beta: Option<ConvergenceModulus>,
        theta: Option<DivergenceModulus>,
    ) -> Result<Self> {
        if let AlphaSource::Table { values } = &alphas {
            if values.is_empty() {
                return Err(Error::OutOfRange("alpha table must be nonempty".into()));
            }
        }
        Ok(Self {
            family: Family::Custom {
                alphas,
                phi,
                beta,
                theta,
            },
        })
    }

    pub fn id(&self) -> String {
        match &self.family {
            Family::Harmonic => "harmonic".into(),
            Family::Power { c, a } => format!("power(c={c},a={a})"),
            Family::Geometric { r } => format!("geometric(r={r})"),
            Family::Custom { .. } => "custom".into(),
        }
    }

    /// `alpha_n`. The open-interval requirement is relaxed to `(0, 1]` at
    /// `n = 0` (harmonic starts at exactly 1); anything else outside `(0, 1)`
    /// is an error.
    pub fn eval_alpha(&self, n: u64) -> Result<f64> {
        let a = match &self.family {
            Family::Harmonic => 1.0 / (n as f64 + 1.0),
            Family::Power { c, a } => c / (n as f64 + 1.0).powf(*a),
            Family::Geometric { r } => r.powi(n as i32 + 1),
            Family::Custom { alphas, .. } => eval_alpha_source(alphas, n)?,
        };
        if a > 0.0 && a < 1.0 {
            Ok(a)
        } else if a == 1.0 && n == 0 {
            // alpha_0 = 1 is tolerated with a recorded warning: the rate
            // theorems consume only the moduli and boundedness.
            Ok(a)
        } else {
            Err(Error::OutOfRange(format!("alpha_{n} = {a} leaves (0, 1)")))
        }
    }

    /// True when `alpha_0 = 1`, which [`Self::eval_alpha`] tolerates.
    pub fn starts_at_one(&self) -> bool {
        matches!(self.eval_alpha(0), Ok(a) if a == 1.0)
    }

    /// Rate of convergence: an index `N` with `alpha_n < eps` for all `n >= N`.
    /// Built-in families use the conservative closed form (the paper's form
    /// plus one where the strict inequality would sit on the boundary).
    pub fn rate_of_convergence(&self, eps: f64) -> Result<u64> {
        if !(eps > 0.0) {
            return Err(Error::OutOfRange(format!("epsilon = {eps} must be > 0")));
        }
        match &self.family {
            Family::Harmonic => ceil_to_u64(1.0 / eps),
            Family::Power { c, a } => ceil_to_u64((c / eps).powf(1.0 / a)),
            Family::Geometric { r } => {
                if eps >= *r {
                    Ok(0)
                } else {
                    ceil_to_u64(eps.ln() / r.ln())
                }
            }
            Family::Custom { phi, .. } => phi.eval(eps),
        }
    }

    /// Cauchy modulus of the partial sums of `|alpha_{n+1} - alpha_n|`:
    /// an index `N` with `|s_{N+n} - s_N| < eps` for all `n`. Decreasing
    /// families reuse the rate of convergence (the sum telescopes).
    pub fn cauchy_modulus_delta_sum(&self, eps: f64) -> Result<u64> {
        if !(eps > 0.0) {
            return Err(Error::OutOfRange(format!("epsilon = {eps} must be > 0")));
        }
        match &self.family {
            Family::Harmonic | Family::Power { .. } | Family::Geometric { .. } => {
                self.rate_of_convergence(eps)
            }
            Family::Custom { beta, .. } => match beta {
                Some(b) => b.eval(eps),
                None => Err(Error::NotConvergent),
            },
        }
    }

    /// Rate of divergence in arbitrary precision: an index `K` with
    /// `sum_{i=0}^{K} alpha_i >= n`.
    pub fn divergence_modulus_big(&self, n: u64) -> Result<BigUint> {
        match &self.family {
            Family::Harmonic => DivergenceModulus::FourPow { per_unit: 1.0 }.eval_big(n),
            Family::Power { c, a } => {
                if *a == 1.0 {
                    DivergenceModulus::FourPow { per_unit: 1.0 / c }.eval_big(n)
                } else {
                    DivergenceModulus::PowerIntegral { c: *c, a: *a }.eval_big(n)
                }
            }
            Family::Geometric { .. } => Err(Error::NotDivergent),
            Family::Custom { theta, .. } => match theta {
                Some(t) => t.eval_big(n),
                None => Err(Error::NotDivergent),
            },
        }
    }

    /// Machine-width rate of divergence; errors if the value exceeds `u64`.
    pub fn divergence_modulus(&self, n: u64) -> Result<u64> {
        self.divergence_modulus_big(n)?
            .to_u64()
            .ok_or(Error::ModulusOverflow)
    }

    /// True when the sampled prefix of length `len` is nonincreasing; the
    /// first offending index otherwise.
    pub fn decreasing_prefix(&self, len: u64) -> std::result::Result<(), u64> {
        let mut prev = match self.eval_alpha(0) {
            Ok(a) => a,
            Err(_) => return Err(0),
        };
        for n in 1..len {
            let a = match self.eval_alpha(n) {
                Ok(a) => a,
                Err(_) => return Err(n),
            };
            if a > prev {
                return Err(n - 1);
            }
            prev = a;
        }
        Ok(())
    }

    /// Numerically confirm the three modulus definitions by direct scan on a
    /// validation budget. Violations are report content, not errors.
    pub fn validate_moduli(&self, budget: u64, eps_grid: &[f64]) -> ValidationReport {
        let mut entries = Vec::new();

        // alpha range on a sampled prefix.
        let prefix = budget.min(10_000);
        let mut range_status = ValidationStatus::Pass;
        for n in 0..prefix {
            match self.eval_alpha(n) {
                Ok(a) if a == 1.0 && n == 0 => {
                    range_status =
                        ValidationStatus::Warning("alpha_0 = 1 sits on the boundary of (0, 1)".into());
                }
                Ok(_) => {}
                Err(e) => {
                    range_status = ValidationStatus::Violation {
                        witness: format!("alpha_{n}: {e}"),
                    };
                    break;
                }
            }
        }
        entries.push(ValidationEntry {
            check: "alpha range (0,1)".into(),
            status: range_status,
        });

        for &eps in eps_grid {
            entries.push(self.check_phi(eps, budget));
            entries.push(self.check_beta(eps, budget));
        }
        for n in 0..=8u64 {
            entries.push(self.check_theta(n, budget));
        }

        ValidationReport {
            family: self.id(),
            entries,
        }
    }

    fn check_phi(&self, eps: f64, budget: u64) -> ValidationEntry {
        let check = format!("phi({eps})");
        let phi = match self.rate_of_convergence(eps) {
            Ok(v) => v,
            Err(e) => {
                return ValidationEntry {
                    check,
                    status: ValidationStatus::Skipped(e.to_string()),
                }
            }
        };
        if phi > budget {
            return ValidationEntry {
                check,
                status: ValidationStatus::Skipped(format!("modulus {phi} exceeds budget {budget}")),
            };
        }
        let end = budget.min(phi.saturating_add(10_000));
        for n in phi..=end {
            match self.eval_alpha(n) {
                Ok(a) if a < eps => {}
                Ok(a) => {
                    return ValidationEntry {
                        check,
                        status: ValidationStatus::Violation {
                            witness: format!("alpha_{n} = {a} >= {eps}"),
                        },
                    }
                }
                Err(e) => {
                    return ValidationEntry {
                        check,
                        status: ValidationStatus::Skipped(e.to_string()),
                    }
                }
            }
        }
        ValidationEntry {
            check,
            status: ValidationStatus::Pass,
        }
    }

    fn check_beta(&self, eps: f64, budget: u64) -> ValidationEntry {
        let check = format!("beta({eps})");
        let beta = match self.cauchy_modulus_delta_sum(eps) {
            Ok(v) => v,
            Err(e) => {
                return ValidationEntry {
                    check,
                    status: ValidationStatus::Skipped(e.to_string()),
                }
            }
        };
        if beta > budget {
            return ValidationEntry {
                check,
                status: ValidationStatus::Skipped(format!("modulus {beta} exceeds budget {budget}")),
            };
        }
        // Scan |s_{beta+n} - s_beta| directly over the budget window.
        let end = budget.min(beta.saturating_add(100_000));
        let mut tail = 0.0_f64;
        let mut prev = match self.eval_alpha(beta) {
            Ok(a) => a,
            Err(e) => {
                return ValidationEntry {
                    check,
                    status: ValidationStatus::Skipped(e.to_string()),
                }
            }
        };
        for n in beta + 1..=end {
            let a = match self.eval_alpha(n) {
                Ok(a) => a,
                Err(e) => {
                    return ValidationEntry {
                        check,
                        status: ValidationStatus::Skipped(e.to_string()),
                    }
                }
            };
            tail += (a - prev).abs();
            prev = a;
            if tail >= eps {
                return ValidationEntry {
                    check,
                    status: ValidationStatus::Violation {
                        witness: format!("partial-sum tail reaches {tail} >= {eps} at n = {n}"),
                    },
                };
            }
        }
        ValidationEntry {
            check,
            status: ValidationStatus::Pass,
        }
    }

    fn check_theta(&self, n: u64, budget: u64) -> ValidationEntry {
        let check = format!("theta({n})");
        let theta = match self.divergence_modulus(n) {
            Ok(v) => v,
            Err(Error::NotDivergent) => {
                return ValidationEntry {
                    check,
                    status: ValidationStatus::Skipped("family sum converges".into()),
                }
            }
            Err(e) => {
                return ValidationEntry {
                    check,
                    status: ValidationStatus::Skipped(e.to_string()),
                }
            }
        };
        if theta > budget.min(1_000_000) {
            return ValidationEntry {
                check,
                status: ValidationStatus::Skipped(format!("modulus {theta} exceeds budget")),
            };
        }
        let mut sum = 0.0_f64;
        for i in 0..=theta {
            match self.eval_alpha(i) {
                Ok(a) => sum += a,
                Err(e) => {
                    return ValidationEntry {
                        check,
                        status: ValidationStatus::Skipped(e.to_string()),
                    }
                }
            }
        }
        if sum >= n as f64 {
            ValidationEntry {
                check,
                status: ValidationStatus::Pass,
            }
        } else {
            ValidationEntry {
                check,
                status: ValidationStatus::Violation {
                    witness: format!("sum over 0..={theta} is {sum} < {n}"),
                },
            }
        }
    }
}

fn eval_alpha_source(src: &AlphaSource, n: u64) -> Result<f64> {
    match src {
        AlphaSource::Harmonic => Ok(1.0 / (n as f64 + 1.0)),
        AlphaSource::Power { c, a } => Ok(c / (n as f64 + 1.0).powf(*a)),
        AlphaSource::Constant { value } => Ok(*value),
        AlphaSource::Table { values } => values
            .get(n as usize)
            .copied()
            .ok_or_else(|| Error::OutOfRange(format!("alpha table has no entry for n = {n}"))),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub family: String,
    pub entries: Vec<ValidationEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationEntry {
    pub check: String,
    pub status: ValidationStatus,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidationStatus {
    Pass,
    Warning(String),
    Violation { witness: String },
    Skipped(String),
}

impl ValidationReport {
    /// True when no entry is a violation (warnings and skips are tolerated).
    pub fn all_pass(&self) -> bool {
        !self
            .entries
            .iter()
            .any(|e| matches!(e.status, ValidationStatus::Violation { .. }))
    }
}
