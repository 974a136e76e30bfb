//! Equation generation from a topology, an abstraction plan and a scenario.

mod emit;
pub mod names;
pub mod plan;
pub mod scenario;
pub mod system;

use std::collections::BTreeMap;

use serde::Serialize;

pub use emit::EmitOptions;
pub use plan::{AbstractionLevel, AbstractionPlan, NodeMode, Override, Paradigm};
pub use scenario::{per_period, Mode, Scenario};
pub use system::{
    Bilinear, EquationSystem, General, GeneralKind, ObjectiveTerm, Row, RowTag, VarRole, Variable,
};

use crate::error::{Error, Result};
use crate::properties::StreamPropertyRecord;
use crate::topology::{validate, NodeKind, Topology};

/// Builds the full multi-period system using the topology's own property records.
pub fn instantiate(
    t: &Topology,
    plan: &AbstractionPlan,
    scenario: &Scenario,
) -> Result<EquationSystem> {
    instantiate_with(t, &t.properties, plan, scenario, EmitOptions::default())
}

/// Like [`instantiate`] with an explicit property set, e.g. one refreshed
/// around a new operating point.
pub fn instantiate_with(
    t: &Topology,
    props: &[StreamPropertyRecord],
    plan: &AbstractionPlan,
    scenario: &Scenario,
    opts: EmitOptions,
) -> Result<EquationSystem> {
    let diags = validate(t);
    if !diags.is_empty() {
        return Err(Error::Invalid(diags));
    }
    scenario.check()?;
    plan.check(t, scenario.periods)?;
    let mut b = emit::Builder::new(t, props, plan, scenario, opts);
    for p in 0..scenario.periods {
        for n in &t.nodes {
            b.emit_node(n, p)?;
        }
    }
    Ok(b.sys)
}

fn emit_single(
    t: &Topology,
    node: &str,
    plan: &AbstractionPlan,
    expect: &str,
) -> Result<EquationSystem> {
    let n = t
        .node(node)
        .ok_or_else(|| Error::Plan(format!("unknown node `{node}`")))?;
    if n.kind.name() != expect {
        return Err(Error::node(
            node,
            format!("expected a {expect}, found {}", n.kind.name()),
        ));
    }
    emit_node(t, node, plan)
}

/// Emits the rows of a single node (period 0) in the context of its
/// topology; neighbours only influence which stream variables appear.
pub fn emit_node(t: &Topology, node: &str, plan: &AbstractionPlan) -> Result<EquationSystem> {
    let n = t
        .node(node)
        .ok_or_else(|| Error::Plan(format!("unknown node `{node}`")))?;
    let diags: Vec<_> = validate(t)
        .into_iter()
        .filter(|d| d.subject == node)
        .collect();
    if !diags.is_empty() {
        return Err(Error::Invalid(diags));
    }
    let sc = Scenario::single();
    let mut b = emit::Builder::new(t, &t.properties, plan, &sc, EmitOptions::default());
    b.emit_node(n, 0)?;
    Ok(b.sys)
}

pub fn emit_mixer(t: &Topology, node: &str, paradigm: Paradigm) -> Result<EquationSystem> {
    let plan = AbstractionPlan::uniform(AbstractionLevel::MassOnly, paradigm);
    emit_single(t, node, &plan, "Mixer")
}

pub fn emit_splitter(t: &Topology, node: &str, paradigm: Paradigm) -> Result<EquationSystem> {
    let plan = AbstractionPlan::uniform(AbstractionLevel::MassOnly, paradigm);
    emit_single(t, node, &plan, "Splitter")
}

pub fn emit_separator(t: &Topology, node: &str, paradigm: Paradigm) -> Result<EquationSystem> {
    let plan = AbstractionPlan::uniform(AbstractionLevel::MassOnly, paradigm);
    emit_single(t, node, &plan, "ComponentSeparator")
}

pub fn emit_reactor(t: &Topology, node: &str, paradigm: Paradigm) -> Result<EquationSystem> {
    let plan = AbstractionPlan::uniform(AbstractionLevel::MassOnly, paradigm);
    emit_single(t, node, &plan, "LinearReactor")
}

/// Mass and energy rows of one node at the given level (flows paradigm).
pub fn emit_energy_balance(
    t: &Topology,
    node: &str,
    level: AbstractionLevel,
) -> Result<EquationSystem> {
    if !level.has_energy() {
        return Err(Error::Plan(
            "energy balance requested at the mass-only level".into(),
        ));
    }
    let plan = AbstractionPlan::uniform(level, Paradigm::ComponentFlows);
    let kind = t
        .node(node)
        .map(|n| n.kind.name())
        .ok_or_else(|| Error::Plan(format!("unknown node `{node}`")))?;
    emit_single(t, node, &plan, kind)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct NodeCount {
    pub rows: usize,
    pub linear_rows: usize,
    pub bilinear: usize,
    pub general: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TermCount {
    pub rows: usize,
    pub linear_rows: usize,
    pub bilinear: usize,
    pub general: usize,
    pub variables: usize,
    pub per_node: BTreeMap<String, NodeCount>,
}

pub fn count_nonlinearities(sys: &EquationSystem) -> TermCount {
    let mut nonlinear = vec![false; sys.rows.len()];
    let mut tc = TermCount {
        rows: sys.rows.len(),
        bilinear: sys.bilinear.len(),
        general: sys.general.len(),
        variables: sys.vars.len(),
        ..Default::default()
    };
    for r in &sys.rows {
        tc.per_node.entry(r.node.clone()).or_default().rows += 1;
    }
    for b in &sys.bilinear {
        nonlinear[b.row] = true;
        tc.per_node
            .entry(sys.rows[b.row].node.clone())
            .or_default()
            .bilinear += 1;
    }
    for g in &sys.general {
        nonlinear[g.row] = true;
        tc.per_node.entry(g.node.clone()).or_default().general += 1;
    }
    for (r, nl) in sys.rows.iter().zip(&nonlinear) {
        if !nl {
            tc.linear_rows += 1;
            tc.per_node.entry(r.node.clone()).or_default().linear_rows += 1;
        }
    }
    tc
}

/// Component mass flows of stream `s` in period `p`, whichever variables
/// the paradigm produced.
pub fn stream_flows(
    t: &Topology,
    sys: &EquationSystem,
    x: &[f64],
    s: &str,
    p: usize,
) -> Option<Vec<f64>> {
    let direct: Option<Vec<f64>> = t
        .components
        .iter()
        .map(|c| sys.find(&names::flow(s, &c.id, p)).map(|i| x[i]))
        .collect();
    if direct.is_some() {
        return direct;
    }
    let tot = x[sys.find(&names::total(s, p))?];
    t.components
        .iter()
        .map(|c| sys.find(&names::fraction(s, &c.id, p)).map(|i| tot * x[i]))
        .collect()
}

/// Total mass flow of stream `s` in period `p`.
pub fn stream_total(
    t: &Topology,
    sys: &EquationSystem,
    x: &[f64],
    s: &str,
    p: usize,
) -> Option<f64> {
    match sys.find(&names::total(s, p)) {
        Some(i) => Some(x[i]),
        None => stream_flows(t, sys, x, s, p).map(|f| f.iter().sum()),
    }
}

/// Largest relative node-wise mass imbalance, skipping inventories and
/// data-driven models (whose outlets need not match inlets).
pub fn mass_imbalance(t: &Topology, sys: &EquationSystem, x: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for p in 0..sys.periods {
        for n in &t.nodes {
            if matches!(
                n.kind,
                NodeKind::Inventory { .. }
                    | NodeKind::DataDrivenLinear(_)
                    | NodeKind::Source { .. }
                    | NodeKind::Sink { .. }
            ) {
                continue;
            }
            let sum = |ss: &[String]| -> f64 {
                ss.iter()
                    .map(|s| stream_total(t, sys, x, s, p).unwrap_or(0.0))
                    .sum()
            };
            let fin = sum(&n.inlets);
            let fout = sum(&n.outlets);
            let scale = fin.abs().max(1e-300);
            worst = worst.max((fin - fout).abs() / scale);
        }
    }
    worst
}

/// Largest `|sum_j x_j - 1|` over streams that carry fractions.
pub fn fraction_sum_error(t: &Topology, sys: &EquationSystem, x: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for p in 0..sys.periods {
        for s in &t.streams {
            let xs: Option<Vec<f64>> = t
                .components
                .iter()
                .map(|c| sys.find(&names::fraction(&s.id, &c.id, p)).map(|i| x[i]))
                .collect();
            if let Some(xs) = xs {
                worst = worst.max((xs.iter().sum::<f64>() - 1.0).abs());
            }
        }
    }
    worst
}
