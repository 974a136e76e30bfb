use std::collections::HashMap;
use std::time::Instant;

use serde::Serialize;

use super::cascade::{warm_start, CascadeReport, StageReport};
use super::schedule::{Refresh, StageSolver};
use crate::error::{Error, Result};
use crate::instantiation::{
    count_nonlinearities, instantiate, AbstractionLevel, AbstractionPlan, EquationSystem, Mode,
    Scenario, VarRole,
};
use crate::solvers::{simplex_lp, slp_optimize, SolveOptions, SolveReport};
use crate::topology::Topology;

fn stage(
    k: usize,
    solver: StageSolver,
    report: SolveReport,
    system: EquationSystem,
    inherited: Vec<String>,
) -> StageReport {
    StageReport {
        stage: k,
        solver,
        refresh: Refresh::None,
        iterations: report.iterations,
        report,
        outer_passes: 1,
        inherited,
        max_dh: None,
        system,
    }
}

/// The plan with every local-enthalpy level lowered to fixed enthalpies.
fn fixed_h(plan: &AbstractionPlan) -> AbstractionPlan {
    let lower = |l: AbstractionLevel| l.min(AbstractionLevel::MassEnergyFixedH);
    let mut p = plan.clone();
    p.level = lower(p.level);
    for o in &mut p.overrides {
        o.level = o.level.map(lower);
    }
    p
}

/// Builds one system over the whole horizon and optimizes it: simplex when
/// it has no nonlinear terms, otherwise SLP started from the fixed-enthalpy
/// LP.
pub fn optimize_multiperiod(
    t: &Topology,
    sc: &Scenario,
    plan: &AbstractionPlan,
    opts: &SolveOptions,
) -> Result<CascadeReport> {
    opts.check()?;
    let clock = Instant::now();
    let mut sc = sc.clone();
    sc.mode = Mode::Optimize;
    let sys = instantiate(t, plan, &sc)?;
    let counts = count_nonlinearities(&sys);
    let mut stages = Vec::new();
    if counts.bilinear == 0 && counts.general == 0 {
        let rep = simplex_lp(&sys)?;
        stages.push(stage(0, StageSolver::Simplex, rep, sys, Vec::new()));
    } else {
        let lp_sys = instantiate(t, &fixed_h(plan), &sc)?;
        let lp = simplex_lp(&lp_sys)?;
        if lp.status != crate::solvers::Status::Optimal {
            return Err(Error::Stage {
                stage: 0,
                source: Box::new(Error::Solver(format!(
                    "fixed-enthalpy LP ended {}",
                    lp.status
                ))),
            });
        }
        let values: HashMap<String, f64> = lp_sys
            .vars
            .iter()
            .zip(&lp.x)
            .map(|(v, &x)| (v.name.clone(), x))
            .collect();
        let (x0, inherited) = warm_start(&sys, &values);
        let rep = slp_optimize(&sys, Some(&x0), opts)?;
        stages.push(stage(0, StageSolver::Simplex, lp, lp_sys, Vec::new()));
        stages.push(stage(1, StageSolver::Slp, rep, sys, inherited));
    }
    let last = stages.last().expect("one stage");
    let (failed_stage, failure) = if last.report.status.is_success() {
        (None, None)
    } else {
        (
            Some(last.stage),
            Some(format!("optimization ended {}", last.report.status)),
        )
    };
    Ok(CascadeReport {
        objective_trace: stages.iter().map(|s| s.report.objective).collect(),
        objective_by_period: last.system.objective_by_period(&last.report.x),
        stages,
        failed_stage,
        failure,
        properties: t.properties.clone(),
        wall_time: clock.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub level: AbstractionLevel,
    pub objective: f64,
    /// This plan's material solution priced under the finest plan.
    pub full_cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    /// `obj(coarsest) <= obj(finest) <= full_cost(coarsest)`.
    pub ordering_holds: bool,
}

/// Optimizes under each plan and prices every material solution under the
/// finest one.
pub fn compare_optima(
    t: &Topology,
    sc: &Scenario,
    plans: &[AbstractionPlan],
    opts: &SolveOptions,
) -> Result<ComparisonTable> {
    if plans.is_empty() {
        return Err(Error::Plan("nothing to compare".into()));
    }
    if plans.iter().any(|p| p.paradigm != plans[0].paradigm) {
        return Err(Error::Plan("compared plans must share a paradigm".into()));
    }
    let mut sc = sc.clone();
    sc.mode = Mode::Optimize;
    let finest = plans.iter().max_by_key(|p| p.level).expect("nonempty");
    let fine_sys = instantiate(t, finest, &sc)?;
    let mut rows = Vec::new();
    for plan in plans {
        let rep = optimize_multiperiod(t, &sc, plan, opts)?;
        if let Some(msg) = &rep.failure {
            return Err(Error::Solver(format!("{} plan: {msg}", plan.level)));
        }
        let last = rep.last().expect("one stage");
        let mut priced = fine_sys.clone();
        for i in 0..priced.n_vars() {
            if matches!(priced.vars[i].role, VarRole::Temperature | VarRole::Duty) {
                continue;
            }
            if let Some(v) = last.value(&priced.vars[i].name) {
                priced.fix(i, v);
            }
        }
        let full = if count_nonlinearities(&priced).bilinear == 0
            && count_nonlinearities(&priced).general == 0
        {
            simplex_lp(&priced)?
        } else {
            slp_optimize(&priced, None, opts)?
        };
        rows.push(ComparisonRow {
            level: plan.level,
            objective: last.report.objective,
            full_cost: full.status.is_success().then_some(full.objective),
        });
    }
    let first = &rows[0];
    let fine = rows
        .iter()
        .find(|r| r.level == finest.level)
        .expect("finest row");
    let ordering_holds = match first.full_cost {
        Some(fc) => first.objective <= fine.objective && fine.objective <= fc,
        None => false,
    };
    Ok(ComparisonTable {
        rows,
        ordering_holds,
    })
}
