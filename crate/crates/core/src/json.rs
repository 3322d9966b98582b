//! JSON records for analysis, solver and verification results.
//!
//! Keys keep insertion order; every float is written with 17 significant
//! digits and non-finite floats become `null`.

use std::io;

use nalgebra::DVector;
use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::{json, Map, Value};

use crate::complex_map::counterexample::CounterexampleReport;
use crate::complex_map::omega::{InwardReport, OmegaSpec};
use crate::network::{MassActionSystem, ReactionNetwork};
use crate::ode::Trajectory;
use crate::steady::SteadyStateResult;

struct Digits17;

impl Formatter for Digits17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

/// Renders `value` on one line.
pub fn emit(value: &Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Digits17);
    value.serialize(&mut ser).expect("writing to a Vec cannot fail");
    String::from_utf8(out).expect("serde_json writes UTF-8")
}

pub fn float(v: f64) -> Value {
    Value::from(v)
}

pub fn vector(v: &DVector<f64>) -> Value {
    Value::Array(v.iter().map(|&x| float(x)).collect())
}

pub fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| float(x)).collect())
}

/// Human-readable form of complex `c`, e.g. `A + 2 B` or `0`.
pub fn complex_label(net: &ReactionNetwork, c: usize) -> String {
    let terms: Vec<String> = net
        .y()
        .column(c)
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(i, &v)| if v == 1.0 { net.species()[i].clone() } else { format!("{v} {}", net.species()[i]) })
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

pub fn analyze(sys: &MassActionSystem) -> Value {
    let net = sys.network();
    let linkage: Vec<Value> = net
        .linkage()
        .iter()
        .map(|r| Value::Array(r.clone().map(|c| Value::from(complex_label(net, c))).collect()))
        .collect();
    json!({
        "n": net.n(),
        "m": net.m(),
        "ell": net.ell(),
        "weakly_reversible": net.is_weakly_reversible(),
        "deficiency": net.deficiency(),
        "stoich_rank": net.stoichiometric_rank(),
        "linkage": linkage,
        "species": net.species(),
    })
}

pub fn steady_state(r: &SteadyStateResult) -> Value {
    let mut obj = Map::new();
    obj.insert("x".into(), vector(&r.x));
    obj.insert("z".into(), vector(&r.z));
    obj.insert("residual_species".into(), float(r.residual_species));
    obj.insert("residual_complex".into(), float(r.residual_complex));
    obj.insert("iterations".into(), Value::from(r.iterations));
    obj.insert("class_point".into(), vector(&r.class_point));
    obj.insert("method".into(), Value::from(r.method.to_string()));
    obj.insert("class_error".into(), float(r.class_error));
    Value::Object(obj)
}

pub fn trajectory(traj: &Trajectory, class_error: f64) -> Value {
    let mut obj = Map::new();
    obj.insert("t".into(), float(*traj.times.last().unwrap_or(&0.0)));
    obj.insert("x".into(), vector(traj.final_state()));
    obj.insert("steps".into(), Value::from(traj.times.len() - 1));
    obj.insert("residual".into(), float(traj.final_residual));
    obj.insert("converged".into(), Value::from(traj.converged));
    obj.insert("class_error".into(), float(class_error));
    Value::Object(obj)
}

/// `{"check", "samples", "violations", "thresholds"}` followed by `extra`.
pub fn verify(check: &str, samples: usize, violations: usize, thresholds: Value, extra: Map<String, Value>) -> Value {
    let mut obj = Map::new();
    obj.insert("check".into(), Value::from(check));
    obj.insert("samples".into(), Value::from(samples));
    obj.insert("violations".into(), Value::from(violations));
    obj.insert("thresholds".into(), thresholds);
    obj.extend(extra);
    Value::Object(obj)
}

pub fn omega_thresholds(spec: &OmegaSpec) -> Value {
    let ell = spec.radii().len() - 1;
    let per_class: Vec<Value> = spec
        .thresholds()
        .iter()
        .map(|level| Value::Array(level.iter().map(|r| r.map_or(Value::Null, float)).collect()))
        .collect();
    json!({
        "radii": floats(spec.radii()),
        "epsilons": Value::Array(spec.epsilons().iter().map(|e| e.map_or(Value::Null, float)).collect()),
        "level_thresholds": floats(spec.level_thresholds()),
        "class_thresholds": per_class,
        "caps": floats(&(1..=ell).map(|s| spec.cap(s)).collect::<Vec<_>>()),
    })
}

pub fn inward_extra(report: &InwardReport) -> Map<String, Value> {
    let strata: Vec<Value> = report
        .strata
        .iter()
        .map(|s| {
            json!({
                "set": s.set.iter().map(|i| i + 1).collect::<Vec<_>>(),
                "samples": s.samples,
                "violations": s.violations,
                "worst_margin": float(s.worst_margin),
            })
        })
        .collect();
    let mut obj = Map::new();
    obj.insert("worst_margin".into(), float(report.worst_margin));
    obj.insert("unresolved".into(), Value::from(report.unresolved));
    obj.insert("strata".into(), Value::Array(strata));
    obj
}

pub fn counterexample(report: &CounterexampleReport) -> Value {
    let points: Vec<Value> = report
        .points
        .iter()
        .map(|p| {
            json!({
                "alpha": float(p.alpha),
                "beta": float(p.beta),
                "pairing": float(p.pairing),
                "closed_form": float(p.closed_form),
                "terms": floats(&p.terms),
            })
        })
        .collect();
    let mut extra = Map::new();
    extra.insert("positive".into(), Value::from(report.all_positive()));
    extra.insert("points".into(), Value::Array(points));
    extra.extend(inward_extra(&report.ball));
    verify(
        "counterexample",
        report.ball.samples,
        report.ball.violations,
        json!({ "ball_radius": float(report.ball_radius) }),
        extra,
    )
}
