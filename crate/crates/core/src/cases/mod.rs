//! Bundled example plants with expected results.
//!
//! Each case is a plant document carrying an `[expected]` section. A record
//! there names the pipeline that produces a number (`run=`), what to read
//! (`var=` or `metric=`), the expected `value`, an absolute `tol` and the
//! `oracle` the value came from.

pub mod equilibrium;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::composite::{optimize_multiperiod, solve_cascade, CascadeSchedule};
use crate::document::Document;
use crate::error::{Error, Result};
use crate::hen::{hen_solve, solve_any, HenOptions};
use crate::instantiation::{
    count_nonlinearities, instantiate, per_period, AbstractionLevel, AbstractionPlan,
    EquationSystem, Mode, Paradigm, Scenario,
};
use crate::solvers::SolveOptions;
use crate::topology::lexer::{at_line, lex, syntax, Record};
use crate::topology::{NodeKind, Topology};

pub const CASES: [(&str, &str); 4] = [
    (
        "prototypical",
        include_str!("../../cases/prototypical.plant"),
    ),
    ("hen_train", include_str!("../../cases/hen_train.plant")),
    (
        "heated_recycle",
        include_str!("../../cases/heated_recycle.plant"),
    ),
    ("h2_atr_wgs", include_str!("../../cases/h2_atr_wgs.plant")),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Oracle {
    HandSolve,
    GridSearch,
    EpsNtuDirect,
    LpVertexEnumeration,
    OneShotNewton,
}

impl Oracle {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "hand-solve" => Self::HandSolve,
            "grid-search" => Self::GridSearch,
            "eps-ntu-direct" => Self::EpsNtuDirect,
            "lp-vertex-enumeration" => Self::LpVertexEnumeration,
            "one-shot-newton" => Self::OneShotNewton,
            _ => return None,
        })
    }
}

impl fmt::Display for Oracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::HandSolve => "hand-solve",
            Self::GridSearch => "grid-search",
            Self::EpsNtuDirect => "eps-ntu-direct",
            Self::LpVertexEnumeration => "lp-vertex-enumeration",
            Self::OneShotNewton => "one-shot-newton",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Run {
    Simulate,
    Count,
    Hen,
    Cascade,
    Optimize,
    Fit,
}

impl Run {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "simulate" => Self::Simulate,
            "count" => Self::Count,
            "hen" => Self::Hen,
            "cascade" => Self::Cascade,
            "optimize" => Self::Optimize,
            "fit" => Self::Fit,
            _ => return None,
        })
    }
}

impl fmt::Display for Run {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Simulate => "simulate",
            Self::Count => "count",
            Self::Hen => "hen",
            Self::Cascade => "cascade",
            Self::Optimize => "optimize",
            Self::Fit => "fit",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Quantity {
    Var(String),
    Metric(String),
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Var(v) => f.write_str(v),
            Self::Metric(m) => f.write_str(m),
        }
    }
}

/// Everything that selects one pipeline execution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSpec {
    pub run: Run,
    pub level: AbstractionLevel,
    pub paradigm: Paradigm,
    /// Source flow multipliers, `(node, factor)`.
    pub scale: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expected {
    pub spec: RunSpec,
    pub quantity: Quantity,
    pub value: f64,
    pub tol: f64,
    pub oracle: Oracle,
    pub line: usize,
}

fn expected_entry(r: &Record) -> Result<Expected> {
    let ctx = at_line(r.line);
    r.only(&[
        "run", "level", "paradigm", "scale", "var", "metric", "value", "tol", "oracle",
    ])
    .map_err(&ctx)?;
    let run_pair = r.require("run").map_err(&ctx)?;
    let run = Run::parse(&run_pair.value).ok_or_else(|| ctx(run_pair.error("unknown run")))?;
    let level = r.str("level").unwrap_or("mass").parse().map_err(&ctx)?;
    let paradigm = r.str("paradigm").unwrap_or("flows").parse().map_err(&ctx)?;
    let scale = match r.get("scale") {
        Some(p) => p.named().map_err(&ctx)?,
        None => Vec::new(),
    };
    let quantity = match (r.str("var"), r.str("metric")) {
        (Some(v), None) => Quantity::Var(v.to_string()),
        (None, Some(m)) => Quantity::Metric(m.to_string()),
        _ => return Err(syntax(r.line, 1, "give exactly one of var or metric")),
    };
    let oracle_pair = r.require("oracle").map_err(&ctx)?;
    let oracle = Oracle::parse(&oracle_pair.value)
        .ok_or_else(|| ctx(oracle_pair.error("unknown oracle")))?;
    Ok(Expected {
        spec: RunSpec {
            run,
            level,
            paradigm,
            scale,
        },
        quantity,
        value: r
            .f64("value")
            .map_err(&ctx)?
            .ok_or_else(|| syntax(r.line, 1, "missing value"))?,
        tol: r.f64("tol").map_err(&ctx)?.unwrap_or(1e-9),
        oracle,
        line: r.line,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseBundle {
    pub name: String,
    pub document: Document,
    pub expected: Vec<Expected>,
}

impl CaseBundle {
    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let document = Document::parse(text)?;
        let expected = match lex(text)?.into_iter().find(|s| s.name == "expected") {
            Some(sec) => sec
                .records
                .iter()
                .map(expected_entry)
                .collect::<Result<_>>()?,
            None => Vec::new(),
        };
        let b = Self {
            name: name.to_string(),
            document,
            expected,
        };
        b.check()?;
        Ok(b)
    }

    /// Expected entries must point at nodes and streams that exist.
    fn check(&self) -> Result<()> {
        let t = &self.document.topology;
        for e in &self.expected {
            for (node, _) in &e.spec.scale {
                if !matches!(t.node(node).map(|n| &n.kind), Some(NodeKind::Source { .. })) {
                    return Err(Error::Plan(format!(
                        "line {}: `{node}` is not a source",
                        e.line
                    )));
                }
            }
            if let Quantity::Var(v) = &e.quantity {
                let inner = v
                    .split_once('[')
                    .and_then(|(_, rest)| rest.split_once(']'))
                    .map(|(inner, _)| inner.split('.').next().unwrap_or(inner));
                match inner {
                    Some(id) if t.stream(id).is_some() || t.node(id).is_some() => {}
                    _ => {
                        return Err(Error::Plan(format!(
                            "line {}: `{v}` names no stream or node",
                            e.line
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    pub fn scenario(&self) -> Scenario {
        self.document.scenario_or_default()
    }
}

pub fn names() -> Vec<&'static str> {
    CASES.iter().map(|(n, _)| *n).collect()
}

pub fn load(name: &str) -> Result<CaseBundle> {
    let (_, text) = CASES
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::UnknownCase(name.to_string()))?;
    CaseBundle::parse(name, text)
}

/// The case topology with source flows scaled.
pub fn scaled(t: &Topology, scale: &[(String, f64)]) -> Topology {
    let mut t = t.clone();
    for (id, f) in scale {
        if let Some(n) = t.nodes.iter_mut().find(|n| &n.id == id) {
            if let NodeKind::Source { flow: Some(v), .. } = &mut n.kind {
                *v *= f;
            }
        }
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntryOutcome {
    pub run: Run,
    pub level: AbstractionLevel,
    pub quantity: String,
    pub expected: f64,
    pub got: Option<f64>,
    pub tol: f64,
    pub oracle: Oracle,
    pub pass: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseOutcome {
    pub case: String,
    pub entries: Vec<EntryOutcome>,
    pub passed: bool,
}

/// Values produced by one pipeline run, keyed by variable name or metric.
type Readings = BTreeMap<Quantity, f64>;

fn read_system(sys: &EquationSystem, x: &[f64], out: &mut Readings) {
    for (v, &val) in sys.vars.iter().zip(x) {
        out.insert(Quantity::Var(v.name.clone()), val);
    }
}

fn metric(out: &mut Readings, name: &str, v: f64) {
    out.insert(Quantity::Metric(name.to_string()), v);
}

fn execute(bundle: &CaseBundle, spec: &RunSpec, opts: &SolveOptions) -> Result<Readings> {
    let t = scaled(&bundle.document.topology, &spec.scale);
    let plan = AbstractionPlan::uniform(spec.level, spec.paradigm);
    let sc = bundle.scenario();
    let simulate = Scenario {
        periods: 1,
        elec_price: vec![per_period(&sc.elec_price, 0)],
        steam_price: vec![per_period(&sc.steam_price, 0)],
        mode: Mode::Simulate,
        ..sc
    };
    let mut out = Readings::new();
    match spec.run {
        Run::Simulate => {
            let sys = instantiate(&t, &plan, &simulate)?;
            let rep = solve_any(&sys, opts)?;
            if !rep.status.is_success() {
                return Err(Error::Solver(format!("simulation ended {}", rep.status)));
            }
            read_system(&sys, &rep.x, &mut out);
            metric(&mut out, "residual", rep.residual);
            metric(&mut out, "iterations", rep.iterations as f64);
            metric(&mut out, "objective", rep.objective);
        }
        Run::Count => {
            let c = count_nonlinearities(&instantiate(&t, &plan, &simulate)?);
            metric(&mut out, "bilinear", c.bilinear as f64);
            metric(&mut out, "general", c.general as f64);
            metric(&mut out, "rows", c.rows as f64);
            metric(&mut out, "linear_rows", c.linear_rows as f64);
        }
        Run::Hen => {
            let hen = hen_solve(
                &t,
                &simulate,
                &HenOptions {
                    solve: opts.clone(),
                    ..HenOptions::default()
                },
            )?;
            read_system(&hen.system, &hen.report.x, &mut out);
            metric(&mut out, "iterations", hen.iterations as f64);
            for x in &hen.exchangers {
                metric(&mut out, &format!("Q[{}]@{}", x.node, x.period), x.q);
            }
        }
        Run::Cascade => {
            let schedule = bundle
                .document
                .schedule
                .clone()
                .unwrap_or_else(CascadeSchedule::standard);
            let rep = solve_cascade(&t, &simulate, &schedule, opts)?;
            if let Some(f) = &rep.failure {
                return Err(Error::Solver(f.clone()));
            }
            let last = rep.last().expect("completed stages");
            read_system(&last.system, &last.report.x, &mut out);
            metric(&mut out, "iterations", rep.total_iterations() as f64);
            metric(&mut out, "max_dh", last.max_dh.unwrap_or(0.0));
        }
        Run::Optimize => {
            let rep = optimize_multiperiod(&t, &bundle.scenario(), &plan, opts)?;
            if let Some(f) = &rep.failure {
                return Err(Error::Solver(f.clone()));
            }
            let last = rep.last().expect("completed stages");
            read_system(&last.system, &last.report.x, &mut out);
            metric(&mut out, "objective", last.report.objective);
        }
        Run::Fit => {
            let f = equilibrium::fit_reactors()?;
            metric(&mut out, "atr_h2_max_rel_error", f.atr_h2.max_rel_error);
            metric(&mut out, "wgs_h2_max_rel_error", f.wgs_h2.max_rel_error);
        }
    }
    Ok(out)
}

/// Runs every pipeline the case declares and compares with its expected
/// values.
pub fn run_bundle(bundle: &CaseBundle, opts: &SolveOptions) -> CaseOutcome {
    let mut cache: Vec<(RunSpec, std::result::Result<Readings, String>)> = Vec::new();
    let mut entries = Vec::new();
    for e in &bundle.expected {
        let k = match cache.iter().position(|(s, _)| s == &e.spec) {
            Some(k) => k,
            None => {
                cache.push((
                    e.spec.clone(),
                    execute(bundle, &e.spec, opts).map_err(|e| e.to_string()),
                ));
                cache.len() - 1
            }
        };
        let (got, error) = match &cache[k].1 {
            Ok(r) => match r.get(&e.quantity) {
                Some(&v) => (Some(v), None),
                None => (None, Some(format!("run produced no `{}`", e.quantity))),
            },
            Err(msg) => (None, Some(msg.clone())),
        };
        let pass = got.is_some_and(|g| (g - e.value).abs() <= e.tol);
        entries.push(EntryOutcome {
            run: e.spec.run,
            level: e.spec.level,
            quantity: e.quantity.to_string(),
            expected: e.value,
            got,
            tol: e.tol,
            oracle: e.oracle,
            pass,
            error,
        });
    }
    CaseOutcome {
        case: bundle.name.clone(),
        passed: !entries.is_empty() && entries.iter().all(|e| e.pass),
        entries,
    }
}

pub fn run_case(name: &str) -> Result<CaseOutcome> {
    Ok(run_bundle(&load(name)?, &SolveOptions::from_env()))
}
