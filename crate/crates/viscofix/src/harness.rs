//! Scenario configuration, execution, and reporting.
//!
//! Scenarios are TOML documents with a strict schema: unknown fields are
//! rejected so a typo in a constant can never silently corrupt a
//! certificate. A run produces a trace CSV (`n, alpha_n, step_residual,
//! fix_residual, x_0 .. x_{d-1}`, floats at 17 significant digits) and a
//! JSON report; two runs of the same document are byte-identical except for
//! the wall-time field.

use crate::applications::{
    check_vi_residual, resolvent_curve, vip_solve, ViOrientation, VipProblem, ZeroProblem,
};
use crate::certificates::{
    derive_bounds, psi_general, theta_harmonic, verify_certificate, RateCertificate, RateInputs,
    Verdict,
};
use crate::error::{Error, Result};
use crate::geometry::{ConvexSet, NormSpec, Point};
use crate::moduli::{AlphaSource, ConvergenceModulus, DivergenceModulus, StepSchedule};
use crate::operators::{AffineOperator, Contraction, Drive, Mapping, MonotoneOp, Region};
use crate::schemes::{
    explicit_iterate, halpern_iterate, hybrid_iterate, implicit_curve, mann_iterate, Trace,
};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::io::Write;
use std::path::{Path, PathBuf};

// ---------------------------------------------------------------------------
// Scenario schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub name: String,
    pub space: SpaceSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub set: Option<SetSpec>,
    pub mapping: MappingSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contraction: Option<ContractionSpec>,
    pub schedule: ScheduleSpec,
    pub scheme: SchemeSpec,
    pub run: RunSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub dimension: usize,
    pub norm: NormField,
}

/// `norm = 2.0` or `norm = "inf"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NormField {
    P(f64),
    Name(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Halfspace { normal: Vec<f64>, offset: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MappingSpec {
    Identity,
    Constant {
        value: Vec<f64>,
    },
    /// Metric projection onto the `[set]` section.
    Projection,
    Matrix {
        rows: Vec<Vec<f64>>,
    },
    Resolvent {
        operator: OperatorSpec,
        lambda: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    LinearPsd { rows: Vec<Vec<f64>> },
    /// Normal cone of the `[set]` section.
    NormalCone,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractionSpec {
    pub kind: String,
    /// Declared contraction constant; certificates consume this value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Harmonic,
    Power {
        c: f64,
        a: f64,
    },
    Geometric {
        r: f64,
    },
    Custom {
        alphas: AlphaSource,
        phi: ConvergenceModulus,
        #[serde(skip_serializing_if = "Option::is_none")]
        beta: Option<ConvergenceModulus>,
        #[serde(skip_serializing_if = "Option::is_none")]
        theta: Option<DivergenceModulus>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SchemeSpec {
    Explicit,
    Mann,
    Halpern {
        u: Vec<f64>,
    },
    Implicit {
        ts: Vec<f64>,
        tolerance: f64,
        max_inner: u64,
    },
    Hybrid {
        mu: f64,
        drive: DriveSpec,
    },
    Vip {
        rows: Vec<Vec<f64>>,
        offset: Vec<f64>,
        l: f64,
        eta: f64,
        gamma: f64,
        mu: f64,
    },
    ResolventCurve {
        operator: OperatorSpec,
        lambdas: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DriveSpec {
    Zero,
    Linear { scale: f64 },
    /// `g = I - Phi` from the `[contraction]` section.
    IdentityMinus,
    Operator { rows: Vec<Vec<f64>>, offset: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub x0: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_point: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<Vec<f64>>,
}

/// A comparison document: one shared setup, several schemes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareDoc {
    pub name: String,
    pub space: SpaceSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub set: Option<SetSpec>,
    pub mapping: MappingSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contraction: Option<ContractionSpec>,
    pub schedule: ScheduleSpec,
    pub run: RunSpec,
    pub schemes: Vec<SchemeSpec>,
}

// ---------------------------------------------------------------------------
// Parsing and builders
// ---------------------------------------------------------------------------

pub fn parse_scenario_str(text: &str) -> Result<ScenarioDoc> {
    toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn parse_scenario_file(path: &Path) -> Result<ScenarioDoc> {
    parse_scenario_str(&std::fs::read_to_string(path)?)
}

pub fn parse_compare_str(text: &str) -> Result<CompareDoc> {
    toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn parse_compare_file(path: &Path) -> Result<CompareDoc> {
    parse_compare_str(&std::fs::read_to_string(path)?)
}

fn build_norm(space: &SpaceSpec) -> Result<NormSpec> {
    match &space.norm {
        NormField::P(p) => NormSpec::new(*p),
        NormField::Name(s) if s == "inf" => Ok(NormSpec::Infinity),
        NormField::Name(s) => Err(Error::Validation(format!("unknown norm name {s:?}"))),
    }
}

fn build_set(spec: &SetSpec, dim: usize) -> Result<ConvexSet> {
    let set = match spec {
        SetSpec::Box { lower, upper } => ConvexSet::boxed(lower.clone(), upper.clone())?,
        SetSpec::Ball { center, radius } => ConvexSet::ball(center.clone(), *radius)?,
        SetSpec::Halfspace { normal, offset } => ConvexSet::halfspace(normal.clone(), *offset)?,
    };
    if set.dim() != dim {
        return Err(Error::Validation(format!(
            "set dimension {} does not match the space dimension {dim}",
            set.dim()
        )));
    }
    Ok(set)
}

fn rows_to_matrix(rows: &[Vec<f64>], dim: usize) -> Result<DMatrix<f64>> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Validation(format!(
            "matrix must be {dim}x{dim} to match the space dimension"
        )));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(dim, dim, &flat))
}

fn build_operator(spec: &OperatorSpec, set: Option<&ConvexSet>, dim: usize) -> Result<MonotoneOp> {
    match spec {
        OperatorSpec::LinearPsd { rows } => MonotoneOp::linear_psd(rows_to_matrix(rows, dim)?),
        OperatorSpec::NormalCone => {
            let set = set.ok_or_else(|| {
                Error::Validation("normal_cone operator requires a [set] section".into())
            })?;
            Ok(MonotoneOp::normal_cone(set.clone()))
        }
    }
}

fn build_mapping(doc: &ScenarioDoc, set: Option<&ConvexSet>, norm: &NormSpec) -> Result<Mapping> {
    let dim = doc.space.dimension;
    match &doc.mapping {
        MappingSpec::Identity => Ok(Mapping::identity(dim, *norm)),
        MappingSpec::Constant { value } => {
            Ok(Mapping::constant(Point::new(value.clone())?, *norm))
        }
        MappingSpec::Projection => {
            let set = set.ok_or_else(|| {
                Error::Validation("projection mapping requires a [set] section".into())
            })?;
            if !norm.is_euclidean() {
                return Err(Error::Validation(
                    "projection mappings are Euclidean-only; set norm = 2.0".into(),
                ));
            }
            Mapping::projection(set.clone())
        }
        MappingSpec::Matrix { rows } => Mapping::matrix(rows_to_matrix(rows, dim)?, *norm),
        MappingSpec::Resolvent { operator, lambda } => {
            if !norm.is_euclidean() {
                return Err(Error::Validation(
                    "resolvent mappings are Euclidean-only; set norm = 2.0".into(),
                ));
            }
            build_operator(operator, set, dim)?.resolvent(*lambda)
        }
    }
}

/// Build the contraction and return it with its declared constant (the
/// value certificates consume; must dominate the constructed map's own
/// constant).
fn build_contraction(
    spec: Option<&ContractionSpec>,
    norm: &NormSpec,
    dim: usize,
) -> Result<(Contraction, f64)> {
    let spec = spec.ok_or_else(|| {
        Error::Validation("a [contraction] section is required for this scheme".into())
    })?;
    let rho = spec
        .rho
        .ok_or_else(|| Error::Validation("contraction constant required".into()))?;
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::Validation(format!(
            "contraction constant rho = {rho} must lie in [0, 1)"
        )));
    }
    let need = |field: Option<&Vec<f64>>, name: &str| -> Result<Point> {
        Point::new(
            field
                .ok_or_else(|| {
                    Error::Validation(format!("contraction kind {:?} needs {name}", spec.kind))
                })?
                .clone(),
        )
    };
    let phi = match spec.kind.as_str() {
        "constant" => Contraction::constant(need(spec.value.as_ref(), "value")?, *norm),
        "affine" => {
            let scale = spec.scale.ok_or_else(|| {
                Error::Validation("contraction kind \"affine\" needs scale".into())
            })?;
            Contraction::affine(scale, need(spec.offset.as_ref(), "offset")?, *norm)?
        }
        "matrix_affine" => {
            let rows = spec.rows.as_ref().ok_or_else(|| {
                Error::Validation("contraction kind \"matrix_affine\" needs rows".into())
            })?;
            Contraction::matrix_affine(
                rows_to_matrix(rows, dim)?,
                need(spec.offset.as_ref(), "offset")?,
                *norm,
            )?
        }
        other => {
            return Err(Error::Validation(format!(
                "unknown contraction kind {other:?}"
            )))
        }
    };
    if phi.dim() != dim {
        return Err(Error::Validation(format!(
            "contraction dimension {} does not match the space dimension {dim}",
            phi.dim()
        )));
    }
    if phi.rho() > rho + 1e-12 {
        return Err(Error::Validation(format!(
            "declared rho = {rho} is below the map's actual constant {}",
            phi.rho()
        )));
    }
    Ok((phi, rho))
}

fn build_schedule(spec: &ScheduleSpec) -> Result<StepSchedule> {
    match spec {
        ScheduleSpec::Harmonic => Ok(StepSchedule::harmonic()),
        ScheduleSpec::Power { c, a } => StepSchedule::power(*c, *a),
        ScheduleSpec::Geometric { r } => StepSchedule::geometric(*r),
        ScheduleSpec::Custom {
            alphas,
            phi,
            beta,
            theta,
        } => StepSchedule::custom(alphas.clone(), phi.clone(), beta.clone(), theta.clone()),
    }
}

fn epsilons_of(run: &RunSpec) -> Result<Vec<f64>> {
    let eps = run.epsilons.clone().unwrap_or_default();
    for &e in &eps {
        if !(e > 0.0 && e < 2.0) {
            return Err(Error::Validation(format!(
                "epsilon must lie in (0,2), got {e}"
            )));
        }
    }
    Ok(eps)
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub budget: u64,
    pub seed: u64,
    pub stride: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            out_dir: None,
            budget: 1_000_000,
            seed: 0,
            stride: 1,
        }
    }
}

/// Everything a run produces: the report JSON and, for trace-based
/// schemes, the trace itself.
#[derive(Debug)]
pub struct RunOutcome {
    pub report: serde_json::Value,
    pub trace: Option<Trace>,
    /// True when any certificate verdict is an outright failure.
    pub any_certificate_failed: bool,
}

struct BuiltScenario {
    norm: NormSpec,
    set: Option<ConvexSet>,
    mapping: Mapping,
    schedule: StepSchedule,
    x0: Point,
    epsilons: Vec<f64>,
}

fn build_common(doc: &ScenarioDoc) -> Result<BuiltScenario> {
    let norm = build_norm(&doc.space)?;
    let dim = doc.space.dimension;
    let set = doc
        .set
        .as_ref()
        .map(|s| build_set(s, dim))
        .transpose()?;
    let mapping = build_mapping(doc, set.as_ref(), &norm)?;
    let schedule = build_schedule(&doc.schedule)?;
    let x0 = Point::new(doc.run.x0.clone())?;
    if x0.dim() != dim {
        return Err(Error::Validation(format!(
            "x0 has dimension {}, space has {dim}",
            x0.dim()
        )));
    }
    let epsilons = epsilons_of(&doc.run)?;
    Ok(BuiltScenario {
        norm,
        set,
        mapping,
        schedule,
        x0,
        epsilons,
    })
}

fn steps_of(run: &RunSpec) -> Result<u64> {
    run.steps
        .ok_or_else(|| Error::Validation("run.steps is required for this scheme".into()))
}

fn empirical_crossings(trace: &Trace, epsilons: &[f64]) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for &eps in epsilons {
        let idx = trace.fix_residuals.iter().position(|&r| r < eps);
        map.insert(format!("{eps}"), json!(idx));
    }
    serde_json::Value::Object(map)
}

fn run_trace_scheme(
    doc: &ScenarioDoc,
    built: &BuiltScenario,
    opts: &RunOptions,
    steps: u64,
) -> Result<(Trace, Option<ViOrientation>, serde_json::Value)> {
    let dim = doc.space.dimension;
    match &doc.scheme {
        SchemeSpec::Explicit => {
            let (phi, rho) = build_contraction(doc.contraction.as_ref(), &built.norm, dim)?;
            let trace = explicit_iterate(
                &built.mapping,
                &phi,
                &built.schedule,
                &built.x0,
                steps,
                opts.stride,
            )?;
            Ok((
                trace,
                Some(ViOrientation::Viscosity { phi }),
                json!({ "declared_rho": rho }),
            ))
        }
        SchemeSpec::Mann => {
            let trace = mann_iterate(
                &built.mapping,
                &built.schedule,
                &built.x0,
                steps,
                opts.stride,
            )?;
            Ok((trace, None, json!({})))
        }
        SchemeSpec::Halpern { u } => {
            let trace = halpern_iterate(
                &built.mapping,
                &Point::new(u.clone())?,
                &built.schedule,
                &built.x0,
                steps,
                opts.stride,
            )?;
            Ok((trace, None, json!({})))
        }
        SchemeSpec::Hybrid { mu, drive } => {
            let g = match drive {
                DriveSpec::Zero => Drive::Zero { dim },
                DriveSpec::Linear { scale } => Drive::Linear { scale: *scale, dim },
                DriveSpec::IdentityMinus => {
                    let (phi, _) = build_contraction(doc.contraction.as_ref(), &built.norm, dim)?;
                    Drive::IdentityMinus(phi)
                }
                DriveSpec::Operator { rows, offset } => Drive::Operator(AffineOperator::new(
                    rows_to_matrix(rows, dim)?,
                    Point::new(offset.clone())?,
                )?),
            };
            let trace = hybrid_iterate(
                &built.mapping,
                &g,
                *mu,
                &built.schedule,
                &built.x0,
                steps,
                opts.stride,
            )?;
            Ok((trace, Some(ViOrientation::Hybrid { g }), json!({"mu": mu})))
        }
        SchemeSpec::Vip {
            rows,
            offset,
            l,
            eta,
            gamma,
            mu,
        } => {
            let (phi, _) = build_contraction(doc.contraction.as_ref(), &built.norm, dim)?;
            let a = AffineOperator::new(rows_to_matrix(rows, dim)?, Point::new(offset.clone())?)?;
            let problem = VipProblem::new(
                a,
                *l,
                *eta,
                phi,
                *gamma,
                *mu,
                built.mapping.clone(),
            )?;
            let orientation = ViOrientation::Hybrid { g: problem.drive() };
            let (trace, q_hat) = vip_solve(&problem, &built.schedule, &built.x0, steps, opts.stride)?;
            Ok((
                trace,
                Some(orientation),
                json!({ "q_hat": q_hat.coords(), "mu": mu }),
            ))
        }
        SchemeSpec::Implicit { .. } | SchemeSpec::ResolventCurve { .. } => unreachable!(
            "curve schemes are dispatched before run_trace_scheme"
        ),
    }
}

/// Issue and verify certificates for an explicit-scheme run. Returns the
/// JSON entries and whether any verdict failed outright.
fn certificates_for(
    doc: &ScenarioDoc,
    built: &BuiltScenario,
    trace: &Trace,
    budget: u64,
) -> Result<(Vec<serde_json::Value>, bool)> {
    let dim = doc.space.dimension;
    let (phi, declared_rho) = build_contraction(doc.contraction.as_ref(), &built.norm, dim)?;
    let known_p = doc
        .oracle
        .as_ref()
        .and_then(|o| o.fixed_point.clone())
        .map(Point::new)
        .transpose()?;
    let bounds = match derive_bounds(built.set.as_ref(), &phi, &built.x0, known_p.as_ref()) {
        Ok(b) => b,
        Err(Error::Underdetermined) => {
            let entries = built
                .epsilons
                .iter()
                .map(|&eps| json!({ "epsilon": eps, "verdict": "underdetermined" }))
                .collect();
            return Ok((entries, false));
        }
        Err(e) => return Err(e),
    };
    let mut entries = Vec::new();
    let mut any_failed = false;
    for &eps in &built.epsilons {
        let inputs = match bounds.d_c {
            Some(d_c) => RateInputs::bounded(declared_rho, d_c, eps, built.schedule.clone())?,
            None => RateInputs::general(
                declared_rho,
                bounds.m,
                bounds.d,
                eps,
                built.schedule.clone(),
            )?,
        };
        let mut certs: Vec<RateCertificate> = vec![psi_general(&inputs)?];
        if let (Some(d_c), "harmonic") = (bounds.d_c, built.schedule.id().as_str()) {
            certs.push(theta_harmonic(declared_rho, d_c, eps)?);
        }
        for mut cert in certs {
            // the trace itself caps how far verification can look
            let report = verify_certificate(trace, &cert, budget.min(trace.steps()))?;
            if matches!(report.verdict, Verdict::Fail { .. }) {
                any_failed = true;
            }
            cert.verification = Some(report);
            entries.push(cert.to_json());
        }
    }
    Ok((entries, any_failed))
}

pub fn run_scenario(doc: &ScenarioDoc, opts: &RunOptions) -> Result<RunOutcome> {
    let start = std::time::Instant::now();
    let built = build_common(doc)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = serde_json::Map::new();
    report.insert("name".into(), json!(doc.name));
    report.insert(
        "library_version".into(),
        json!(env!("CARGO_PKG_VERSION")),
    );
    report.insert("seed".into(), json!(opts.seed));
    report.insert(
        "scenario".into(),
        serde_json::to_value(doc).map_err(|e| Error::Parse(e.to_string()))?,
    );

    // curve-based schemes produce point lists, not traces
    match &doc.scheme {
        SchemeSpec::Implicit {
            ts,
            tolerance,
            max_inner,
        } => {
            let (phi, _) = build_contraction(doc.contraction.as_ref(), &built.norm, doc.space.dimension)?;
            let points = implicit_curve(
                &built.mapping,
                &phi,
                ts,
                *tolerance,
                *max_inner,
                &built.x0,
            )?;
            let coords: Vec<&[f64]> = points.iter().map(|p| p.coords()).collect();
            report.insert("scheme".into(), json!("implicit"));
            report.insert("ts".into(), json!(ts));
            report.insert("curve".into(), json!(coords));
            if let Some(limit) = doc.oracle.as_ref().and_then(|o| o.limit.as_ref()) {
                let lp = Point::new(limit.clone())?;
                let d: Vec<f64> = points.iter().map(|p| built.norm.distance(p, &lp)).collect();
                report.insert("distance_to_limit".into(), json!(d));
            }
            report.insert("wall_time_ms".into(), json!(start.elapsed().as_millis() as u64));
            return Ok(RunOutcome {
                report: serde_json::Value::Object(report),
                trace: None,
                any_certificate_failed: false,
            });
        }
        SchemeSpec::ResolventCurve { operator, lambdas } => {
            let op = build_operator(operator, built.set.as_ref(), doc.space.dimension)?;
            let problem = ZeroProblem::new(op, built.x0.clone())?;
            let curve = resolvent_curve(&problem, lambdas)?;
            let coords: Vec<&[f64]> = curve.points.iter().map(|p| p.coords()).collect();
            report.insert("scheme".into(), json!("resolvent_curve"));
            report.insert("lambdas".into(), json!(curve.lambdas));
            report.insert("curve".into(), json!(coords));
            if let Some(d) = &curve.distances {
                report.insert("distance_to_zero_set".into(), json!(d));
            }
            report.insert("wall_time_ms".into(), json!(start.elapsed().as_millis() as u64));
            return Ok(RunOutcome {
                report: serde_json::Value::Object(report),
                trace: None,
                any_certificate_failed: false,
            });
        }
        _ => {}
    }

    let steps = steps_of(&doc.run)?;
    let (trace, orientation, scheme_extra) = run_trace_scheme(doc, &built, opts, steps)?;
    report.insert("scheme".into(), json!(trace.meta.scheme));
    report.insert("scheme_detail".into(), scheme_extra);
    report.insert("steps".into(), json!(trace.steps()));
    report.insert("stride".into(), json!(trace.stride()));
    report.insert("final_point".into(), json!(trace.final_point().coords()));
    report.insert(
        "final_step_residual".into(),
        json!(trace.step_residuals.last()),
    );
    report.insert(
        "final_fix_residual".into(),
        json!(trace.fix_residuals.last()),
    );
    report.insert(
        "empirical_crossings".into(),
        empirical_crossings(&trace, &built.epsilons),
    );

    // VI residual over the feasible set, when one is declared
    if let (Some(set), Some(orientation)) = (&built.set, &orientation) {
        let spread = 2.0 * (1.0 + trace.final_point().norm2());
        let region = Region::SetSurface {
            set: set.clone(),
            spread,
        };
        let residual =
            check_vi_residual(trace.final_point(), orientation, &region, 1000, &mut rng)?;
        report.insert("vi_residual".into(), json!(residual));
    }

    let mut any_certificate_failed = false;
    if matches!(doc.scheme, SchemeSpec::Explicit) && !built.epsilons.is_empty() {
        let (entries, failed) = certificates_for(doc, &built, &trace, opts.budget)?;
        any_certificate_failed = failed;
        report.insert("certificates".into(), json!(entries));
    }

    report.insert("wall_time_ms".into(), json!(start.elapsed().as_millis() as u64));
    let report = serde_json::Value::Object(report);

    if let Some(dir) = &opts.out_dir {
        std::fs::create_dir_all(dir)?;
        write_trace_csv(&dir.join(format!("{}_trace.csv", doc.name)), &trace)?;
        write_json(&dir.join(format!("{}_report.json", doc.name)), &report)?;
    }

    Ok(RunOutcome {
        report,
        trace: Some(trace),
        any_certificate_failed,
    })
}

pub fn run_scenario_file(path: &Path, opts: &RunOptions) -> Result<RunOutcome> {
    run_scenario(&parse_scenario_file(path)?, opts)
}

/// Certificate-centric entry point: runs the scenario for exactly `budget`
/// steps and verifies every requested certificate against the trace.
pub fn certify_scenario(doc: &ScenarioDoc, opts: &RunOptions) -> Result<RunOutcome> {
    if !matches!(doc.scheme, SchemeSpec::Explicit) {
        return Err(Error::Validation(
            "certificates apply to the explicit scheme".into(),
        ));
    }
    let mut doc = doc.clone();
    doc.run.steps = Some(opts.budget);
    let mut opts = opts.clone();
    if opts.stride == 1 && opts.budget > 100_000 {
        // keep memory bounded on long certification runs; residuals stay dense
        opts.stride = opts.budget / 10_000;
    }
    run_scenario(&doc, &opts)
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

pub fn compare_schemes(doc: &CompareDoc, opts: &RunOptions) -> Result<serde_json::Value> {
    if doc.schemes.is_empty() {
        return Err(Error::Validation("schemes list must be nonempty".into()));
    }
    let steps = steps_of(&doc.run)?;
    // checkpoints: 0 plus log-spaced indices up to the step count
    let mut checkpoints = vec![0u64];
    let mut k = 1u64;
    while k < steps {
        checkpoints.push(k);
        k = (k * 2).max(k + 1);
    }
    checkpoints.push(steps);
    checkpoints.dedup();

    let epsilons = epsilons_of(&doc.run)?;
    let mut rows = Vec::new();
    let mut crossings = serde_json::Map::new();
    for scheme in &doc.schemes {
        let scenario = ScenarioDoc {
            name: doc.name.clone(),
            space: doc.space.clone(),
            set: doc.set.clone(),
            mapping: doc.mapping.clone(),
            contraction: doc.contraction.clone(),
            schedule: doc.schedule.clone(),
            scheme: scheme.clone(),
            run: doc.run.clone(),
            oracle: None,
        };
        let built = build_common(&scenario)?;
        let (trace, _, _) = run_trace_scheme(&scenario, &built, opts, steps)?;
        let label = trace.meta.scheme.clone();
        for &n in &checkpoints {
            rows.push(json!({
                "scheme": label,
                "n": n,
                "fix_residual": trace.fix_residuals[n as usize],
            }));
        }
        crossings.insert(label, empirical_crossings(&trace, &epsilons));
    }

    let table = json!({
        "name": doc.name,
        "checkpoints": checkpoints,
        "rows": rows,
        "empirical_crossings": crossings,
    });

    if let Some(dir) = &opts.out_dir {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join(format!("{}_compare.json", doc.name)), &table)?;
        let mut csv = String::from("scheme,n,fix_residual\n");
        for row in table["rows"].as_array().expect("rows array") {
            csv.push_str(&format!(
                "{},{},{}\n",
                row["scheme"].as_str().expect("scheme"),
                row["n"],
                fmt_float(row["fix_residual"].as_f64().expect("residual"))
            ));
        }
        std::fs::write(dir.join(format!("{}_compare.csv", doc.name)), csv)?;
    }
    Ok(table)
}

// ---------------------------------------------------------------------------
// Artifacts
// ---------------------------------------------------------------------------

/// 17-significant-digit float formatting (lossless f64 round-trip).
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write the trace CSV: one row per stored point, schema
/// `n, alpha_n, step_residual, fix_residual, x_0 .. x_{d-1}`. The final
/// row's alpha and step residual are blank (no step leaves the last point).
pub fn write_trace_csv(path: &Path, trace: &Trace) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    let dim = trace.final_point().dim();
    let mut header = String::from("n,alpha_n,step_residual,fix_residual");
    for i in 0..dim {
        header.push_str(&format!(",x_{i}"));
    }
    writeln!(f, "{header}")?;
    for (n, p) in trace.stored_points() {
        let idx = n as usize;
        let (alpha, step) = if n < trace.steps() {
            (
                fmt_float(trace.alphas[idx]),
                fmt_float(trace.step_residuals[idx]),
            )
        } else {
            (String::new(), String::new())
        };
        let mut row = format!(
            "{n},{alpha},{step},{}",
            fmt_float(trace.fix_residuals[idx])
        );
        for c in p.coords() {
            row.push(',');
            row.push_str(&fmt_float(*c));
        }
        writeln!(f, "{row}")?;
    }
    f.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
