use std::collections::HashMap;
use std::time::Instant;

use serde::Serialize;

use super::schedule::{CascadeSchedule, Refresh, Stage, StageSolver};
use crate::error::{Error, Result};
use crate::hen::{hen_solve, HenOptions};
use crate::instantiation::{instantiate_with, names, EmitOptions, EquationSystem, Scenario};
use crate::properties::{refresh_local, refresh_reference, StreamPropertyRecord};
use crate::solvers::{
    newton_solve, simplex_lp, slp_optimize, solve_linear, SolveOptions, SolveReport,
};
use crate::topology::Topology;

/// Outer-loop tolerance on reference-enthalpy drift (kJ/kg).
pub const RIGOROUS_TOL: f64 = 1e-6;
pub const RIGOROUS_MAX_PASSES: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub stage: usize,
    pub solver: StageSolver,
    pub refresh: Refresh,
    pub report: SolveReport,
    /// Solver iterations summed over outer passes.
    pub iterations: usize,
    pub outer_passes: usize,
    /// Variables initialized from the previous stage.
    pub inherited: Vec<String>,
    /// Largest reference-enthalpy change in the last rigorous pass.
    pub max_dh: Option<f64>,
    #[serde(skip)]
    pub system: EquationSystem,
}

impl StageReport {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.system.find(name).map(|i| self.report.x[i])
    }

    /// Solution keyed by variable name.
    pub fn values(&self) -> HashMap<String, f64> {
        named(&self.system, &self.report.x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CascadeReport {
    pub stages: Vec<StageReport>,
    pub objective_trace: Vec<f64>,
    /// Objective of the last completed stage split by period.
    pub objective_by_period: Vec<f64>,
    pub failed_stage: Option<usize>,
    pub failure: Option<String>,
    pub properties: Vec<StreamPropertyRecord>,
    /// Seconds; kept out of structured output so it stays reproducible.
    #[serde(skip)]
    pub wall_time: f64,
}

impl CascadeReport {
    pub fn last(&self) -> Option<&StageReport> {
        self.stages.last()
    }

    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }

    pub fn total_iterations(&self) -> usize {
        self.stages.iter().map(|s| s.iterations).sum()
    }
}

fn named(sys: &EquationSystem, x: &[f64]) -> HashMap<String, f64> {
    sys.vars
        .iter()
        .zip(x)
        .map(|(v, &x)| (v.name.clone(), x))
        .collect()
}

/// Initial point for `sys`: inherited values where names match, otherwise
/// the emitted defaults. Fixed variables keep their value.
pub fn warm_start(sys: &EquationSystem, from: &HashMap<String, f64>) -> (Vec<f64>, Vec<String>) {
    let mut x = sys.initial_point();
    let mut used = Vec::new();
    for (i, v) in sys.vars.iter().enumerate() {
        if v.is_fixed() {
            continue;
        }
        if let Some(&val) = from.get(&v.name) {
            x[i] = val;
            used.push(v.name.clone());
        }
    }
    (x, used)
}

pub(crate) fn run_solver(
    sys: &EquationSystem,
    solver: StageSolver,
    x0: Option<&[f64]>,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let mut rep = match solver {
        StageSolver::Linear => solve_linear(sys)?,
        StageSolver::Newton => newton_solve(sys, x0, opts)?,
        StageSolver::Simplex => simplex_lp(sys)?,
        StageSolver::Slp => slp_optimize(sys, x0, opts)?,
    };
    rep.warm_start_used = x0.is_some();
    Ok(rep)
}

/// Re-anchors every record that has a temperature in `values`; returns the
/// largest change in reference enthalpy.
fn refresh_all(
    props: &mut [StreamPropertyRecord],
    values: &HashMap<String, f64>,
    rigorous: bool,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for rec in props.iter_mut() {
        let Some(&t) = values.get(&names::temperature(&rec.stream, 0)) else {
            continue;
        };
        let new = if rigorous {
            refresh_reference(rec, t)?
        } else {
            refresh_local(rec, t)?
        };
        worst = worst.max((new.h0 - rec.h0).abs());
        *rec = new;
    }
    Ok(worst)
}

struct Outcome {
    report: SolveReport,
    system: EquationSystem,
    iterations: usize,
    passes: usize,
    inherited: Vec<String>,
    max_dh: Option<f64>,
}

fn run_stage(
    t: &Topology,
    sc: &Scenario,
    stage: &Stage,
    props: &mut Vec<StreamPropertyRecord>,
    carried: &mut HashMap<String, f64>,
    opts: &SolveOptions,
) -> Result<Outcome> {
    if stage.include_hen {
        let mut th = t.clone();
        th.properties = props.clone();
        let hen = hen_solve(
            &th,
            sc,
            &HenOptions {
                solve: opts.clone(),
                ..HenOptions::default()
            },
        )?;
        carried.extend(named(&hen.system, &hen.report.x));
        *props = hen.properties;
    }
    let build = |props: &[StreamPropertyRecord]| {
        instantiate_with(t, props, &stage.plan, sc, EmitOptions::default())
    };

    if stage.refresh != Refresh::Rigorous {
        let sys = build(props)?;
        let (x0, inherited) = warm_start(&sys, carried);
        let start = (!inherited.is_empty()).then_some(x0.as_slice());
        let report = run_solver(&sys, stage.solver, start, opts)?;
        if !report.status.is_success() {
            return Err(Error::Solver(format!("stage ended {}", report.status)));
        }
        let values = named(&sys, &report.x);
        if stage.refresh == Refresh::Local {
            refresh_all(props, &values, false)?;
        }
        carried.extend(values);
        return Ok(Outcome {
            iterations: report.iterations,
            report,
            system: sys,
            passes: 1,
            inherited,
            max_dh: None,
        });
    }

    let mut iterations = 0;
    let mut first_inherited = None;
    let mut last: Option<(SolveReport, EquationSystem)> = None;
    for pass in 1..=RIGOROUS_MAX_PASSES {
        let dh = refresh_all(props, carried, true)?;
        if let (Some((report, system)), true) = (&last, dh <= RIGOROUS_TOL) {
            return Ok(Outcome {
                report: report.clone(),
                system: system.clone(),
                iterations,
                passes: pass - 1,
                inherited: first_inherited.unwrap_or_default(),
                max_dh: Some(dh),
            });
        }
        let sys = build(props)?;
        let (x0, inherited) = warm_start(&sys, carried);
        let start = (!inherited.is_empty()).then_some(x0.as_slice());
        let report = run_solver(&sys, stage.solver, start, opts)?;
        if !report.status.is_success() {
            return Err(Error::Solver(format!(
                "rigorous pass {pass} ended {}",
                report.status
            )));
        }
        iterations += report.iterations;
        first_inherited.get_or_insert(inherited);
        carried.extend(named(&sys, &report.x));
        last = Some((report, sys));
    }
    Err(Error::Solver(format!(
        "rigorous refresh did not settle within {RIGOROUS_MAX_PASSES} passes"
    )))
}

/// Runs the stages in order, each warm-started by name from everything
/// solved before it.
pub fn solve_cascade(
    t: &Topology,
    sc: &Scenario,
    schedule: &CascadeSchedule,
    opts: &SolveOptions,
) -> Result<CascadeReport> {
    sc.check()?;
    opts.check()?;
    schedule.check(t, sc.periods)?;
    let clock = Instant::now();
    let mut props = t.properties.clone();
    let mut carried = HashMap::new();
    let mut out = CascadeReport {
        stages: Vec::new(),
        objective_trace: Vec::new(),
        objective_by_period: Vec::new(),
        failed_stage: None,
        failure: None,
        properties: Vec::new(),
        wall_time: 0.0,
    };
    for (k, stage) in schedule.stages.iter().enumerate() {
        match run_stage(t, sc, stage, &mut props, &mut carried, opts) {
            Ok(o) => {
                out.objective_trace.push(o.report.objective);
                out.stages.push(StageReport {
                    stage: k,
                    solver: stage.solver,
                    refresh: stage.refresh,
                    report: o.report,
                    iterations: o.iterations,
                    outer_passes: o.passes,
                    inherited: o.inherited,
                    max_dh: o.max_dh,
                    system: o.system,
                });
            }
            Err(e) => {
                out.failed_stage = Some(k);
                out.failure = Some(e.to_string());
                break;
            }
        }
    }
    if let Some(s) = out.stages.last() {
        out.objective_by_period = s.system.objective_by_period(&s.report.x);
    }
    out.properties = props;
    out.wall_time = clock.elapsed().as_secs_f64();
    Ok(out)
}
