use std::collections::HashMap;

use serde::Serialize;

use super::compute_phi;
use crate::error::{Error, Result};
use crate::instantiation::{
    instantiate, instantiate_with, names, AbstractionLevel, AbstractionPlan, EmitOptions,
    EquationSystem, Paradigm, RowTag, Scenario, VarRole,
};
use crate::properties::{refresh_local, refresh_reference, StreamPropertyRecord};
use crate::solvers::{newton_solve, solve_linear, SolveOptions, SolveReport};
use crate::topology::{NodeKind, Topology};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HenOptions {
    /// Outer-loop tolerance on the largest temperature change (K).
    pub tol_t: f64,
    pub max_iter: usize,
    /// Relaxation on temperature updates, `0 < omega <= 1`.
    pub omega: f64,
    pub solve: SolveOptions,
}

impl Default for HenOptions {
    fn default() -> Self {
        Self {
            tol_t: 1e-6,
            max_iter: 100,
            omega: 1.0,
            solve: SolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExchangerState {
    pub node: String,
    pub period: usize,
    pub phi: f64,
    pub q: f64,
    pub th_in: f64,
    pub th_out: f64,
    pub tc_in: f64,
    pub tc_out: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HenIteration {
    pub iteration: usize,
    pub max_dt: f64,
    /// (exchanger, period, duty)
    pub duties: Vec<(String, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HenReport {
    pub report: SolveReport,
    pub exchangers: Vec<ExchangerState>,
    pub log: Vec<HenIteration>,
    pub iterations: usize,
    pub converged: bool,
    /// Properties refreshed at the final temperatures.
    #[serde(skip)]
    pub properties: Vec<StreamPropertyRecord>,
    #[serde(skip)]
    pub system: EquationSystem,
}

/// Solves a system directly when it is effectively linear, else by Newton.
pub fn solve_any(sys: &EquationSystem, opts: &SolveOptions) -> Result<SolveReport> {
    if sys.is_effectively_linear() {
        solve_linear(sys)
    } else {
        newton_solve(sys, None, opts)
    }
}

fn is_material(role: VarRole) -> bool {
    !matches!(role, VarRole::Temperature | VarRole::Duty)
}

/// Exchanger-network iteration: flows from the mass balances, duties from
/// the duty ratio at the current inlet temperatures, a linear temperature
/// solve, then a property refresh, until temperatures settle.
pub fn hen_solve(t: &Topology, scenario: &Scenario, opts: &HenOptions) -> Result<HenReport> {
    if !(opts.omega > 0.0 && opts.omega <= 1.0) {
        return Err(Error::Solver(format!(
            "relaxation must lie in (0, 1], got {}",
            opts.omega
        )));
    }
    let exchangers: Vec<_> = t
        .nodes
        .iter()
        .filter_map(|n| match &n.kind {
            NodeKind::HeatExchanger(p) => Some((n, p)),
            _ => None,
        })
        .collect();
    if exchangers.is_empty() {
        return Err(Error::Solver("topology has no heat exchanger".into()));
    }
    let base: HashMap<&str, &StreamPropertyRecord> = t
        .properties
        .iter()
        .map(|p| (p.stream.as_str(), p))
        .collect();
    let base_cp = |s: &str| {
        base.get(s)
            .map(|r| r.cp)
            .ok_or_else(|| Error::MissingProperty(s.to_string()))
    };

    // (1) flows
    let mass_plan = AbstractionPlan::uniform(AbstractionLevel::MassOnly, Paradigm::ComponentFlows);
    let mass_sys = instantiate(t, &mass_plan, scenario)?;
    let mass = solve_any(&mass_sys, &opts.solve)?;
    if !mass.status.is_success() {
        return Err(Error::Solver(format!(
            "mass balance solve ended {}",
            mass.status
        )));
    }
    let flows: HashMap<&str, f64> = mass_sys
        .vars
        .iter()
        .zip(&mass.x)
        .filter(|(v, _)| is_material(v.role))
        .map(|(v, x)| (v.name.as_str(), *x))
        .collect();

    let plan =
        AbstractionPlan::uniform(AbstractionLevel::MassEnergyLocalH, Paradigm::ComponentFlows);
    let mut props = t.properties.clone();
    let mut temps: HashMap<String, f64> = HashMap::new();
    let mut log = Vec::new();
    let mut growing = 0;
    let mut converged = false;
    let mut last = None;

    for iteration in 1..=opts.max_iter {
        let mut sys = instantiate_with(t, &props, &plan, scenario, EmitOptions::default())?;
        for i in 0..sys.n_vars() {
            if is_material(sys.vars[i].role) {
                if let Some(&v) = flows.get(sys.vars[i].name.as_str()) {
                    sys.fix(i, v);
                }
            }
        }
        let temp_of = |sys: &EquationSystem,
                       temps: &HashMap<String, f64>,
                       s: &str,
                       p: usize|
         -> Result<f64> {
            let name = names::temperature(s, p);
            let i = sys
                .find(&name)
                .ok_or_else(|| Error::Solver(format!("stream `{s}` has no temperature")))?;
            Ok(temps.get(&name).copied().unwrap_or(sys.vars[i].init))
        };

        // (2)-(3) duties from the duty ratio
        let mut states = Vec::new();
        let mut duties = Vec::new();
        for p in 0..scenario.periods {
            for (n, params) in &exchangers {
                let (hi, ci) = (&n.inlets[0], &n.inlets[1]);
                let fh = flows[names::total(hi, p).as_str()];
                let fc = flows[names::total(ci, p).as_str()];
                let phi = compute_phi(params, fh, fc, base_cp(hi)?, base_cp(ci)?)?;
                let th = temp_of(&sys, &temps, hi, p)?;
                let tc = temp_of(&sys, &temps, ci, p)?;
                let q = phi * params.q_base * (th - tc);
                let qi = sys
                    .find(&names::exchanger_duty(&n.id, p))
                    .expect("local-enthalpy exchangers carry a duty variable");
                sys.fix(qi, q);
                duties.push((n.id.clone(), p, q));
                states.push(ExchangerState {
                    node: n.id.clone(),
                    period: p,
                    phi,
                    q,
                    th_in: th,
                    th_out: 0.0,
                    tc_in: tc,
                    tc_out: 0.0,
                });
            }
        }

        // (4) linear temperature solve
        sys.retain_rows(|r| r.tag != RowTag::ExchangerDuty);
        let touched = sys.rows_with_free_vars();
        sys.retain_indexed(|i, _| touched[i]);
        let rep = solve_linear(&sys)?;
        if !rep.status.is_success() {
            return Err(Error::Solver(format!(
                "temperature solve ended {}",
                rep.status
            )));
        }

        let mut max_dt: f64 = 0.0;
        let mut x = rep.x.clone();
        for (i, v) in sys.vars.iter().enumerate() {
            if v.role != VarRole::Temperature || v.is_fixed() {
                continue;
            }
            let old = temps.get(&v.name).copied().unwrap_or(v.init);
            max_dt = max_dt.max((x[i] - old).abs());
            x[i] = old + opts.omega * (x[i] - old);
            temps.insert(v.name.clone(), x[i]);
        }

        // (5) refresh references at the new temperatures
        for rec in props.iter_mut() {
            if let Some(&tn) = temps.get(&names::temperature(&rec.stream, 0)) {
                *rec = if rec.correlation.is_some() {
                    refresh_reference(rec, tn)?
                } else {
                    refresh_local(rec, tn)?
                };
            }
        }

        for st in states.iter_mut() {
            let n = t.node(&st.node).expect("exchanger exists");
            st.th_out = x[sys
                .find(&names::temperature(&n.outlets[0], st.period))
                .expect("hot outlet")];
            st.tc_out = x[sys
                .find(&names::temperature(&n.outlets[1], st.period))
                .expect("cold outlet")];
        }

        if let Some(prev) = log.last().map(|l: &HenIteration| l.max_dt) {
            growing = if max_dt > prev { growing + 1 } else { 0 };
        }
        log.push(HenIteration {
            iteration,
            max_dt,
            duties,
        });
        let mut report = rep;
        report.x = x;
        last = Some((report, states, sys));
        if max_dt <= opts.tol_t {
            converged = true;
            break;
        }
        if growing >= 3 {
            return Err(Error::Divergence(iteration));
        }
    }

    let (report, states, system) = last.expect("at least one iteration runs");
    for st in &states {
        let tol = 1e-9;
        if st.th_out > st.th_in + tol
            || st.tc_in > st.tc_out + tol
            || st.tc_in > st.th_out + tol
            || st.tc_out > st.th_in + tol
        {
            return Err(Error::TemperatureCross(format!(
                "{} (period {}): hot {:.6} -> {:.6} K, cold {:.6} -> {:.6} K",
                st.node, st.period, st.th_in, st.th_out, st.tc_in, st.tc_out
            )));
        }
    }
    Ok(HenReport {
        iterations: log.len(),
        report,
        exchangers: states,
        log,
        converged,
        properties: props,
        system,
    })
}
