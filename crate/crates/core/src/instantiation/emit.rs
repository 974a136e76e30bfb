use std::collections::{HashMap, HashSet};

use super::names;
use super::plan::{AbstractionLevel, AbstractionPlan, NodeMode, Paradigm};
use super::scenario::{per_period, Mode, Scenario};
use super::system::{EquationSystem, GeneralKind, RowTag, VarRole};
use crate::error::{Error, Result};
use crate::properties::StreamPropertyRecord;
use crate::topology::{
    DataDrivenModel, Endpoint, NodeDef, NodeKind, PhaseChange, Topology, Utility,
};

const INF: f64 = f64::INFINITY;
const T_LO: f64 = 1.0;
const T_HI: f64 = 1.0e4;

/// How a stream's temperature enters the model in one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum TempStatus {
    Fixed(f64),
    Free,
}

/// Switches that change how rows are emitted without changing the plan.
#[derive(Debug, Clone, Copy, Default)]
pub struct EmitOptions {
    /// Energy rows at the local-enthalpy level use the cubic correlation
    /// `F * H_rig(T)` directly instead of the linear update.
    pub rigorous: bool,
}

pub(crate) struct Builder<'a> {
    t: &'a Topology,
    props: HashMap<&'a str, &'a StreamPropertyRecord>,
    plan: &'a AbstractionPlan,
    sc: &'a Scenario,
    opts: EmitOptions,
    pub sys: EquationSystem,
    converted: HashSet<(String, usize)>,
    boundary_done: HashSet<(String, usize)>,
}

impl<'a> Builder<'a> {
    pub fn new(
        t: &'a Topology,
        props: &'a [StreamPropertyRecord],
        plan: &'a AbstractionPlan,
        sc: &'a Scenario,
        opts: EmitOptions,
    ) -> Self {
        Self {
            t,
            props: props.iter().map(|p| (p.stream.as_str(), p)).collect(),
            plan,
            sc,
            opts,
            sys: EquationSystem::new(sc.periods),
            converted: HashSet::new(),
            boundary_done: HashSet::new(),
        }
    }

    fn nc(&self) -> usize {
        self.t.nc()
    }

    fn comp(&self, j: usize) -> &'a str {
        &self.t.components[j].id
    }

    fn mode(&self, node: &str, p: usize) -> NodeMode {
        self.plan.resolve(node, p)
    }

    fn producer(&self, s: &str) -> Option<&'a NodeDef> {
        match &self.t.stream(s)?.source {
            Endpoint::Node(n) => self.t.node(n),
            Endpoint::Boundary => None,
        }
    }

    fn consumer(&self, s: &str) -> Option<&'a NodeDef> {
        match &self.t.stream(s)?.sink {
            Endpoint::Node(n) => self.t.node(n),
            Endpoint::Boundary => None,
        }
    }

    fn prop(&self, s: &str) -> Result<&'a StreamPropertyRecord> {
        self.props
            .get(s)
            .copied()
            .ok_or_else(|| Error::MissingProperty(s.to_string()))
    }

    // ---- stream representation -------------------------------------------------

    fn reads_fractions(&self, n: &NodeDef, p: usize) -> bool {
        self.mode(&n.id, p).paradigm == Paradigm::FractionsBased
            && !matches!(n.kind, NodeKind::Sink { .. })
    }

    fn needs_x(&self, s: &str, p: usize) -> bool {
        self.plan.report_fractions || self.consumer(s).is_some_and(|c| self.reads_fractions(c, p))
    }

    fn has_flows(&self, s: &str, p: usize) -> bool {
        match self.producer(s) {
            None => self
                .consumer(s)
                .is_some_and(|c| self.mode(&c.id, p).paradigm == Paradigm::ComponentFlows),
            Some(n) => {
                self.mode(&n.id, p).paradigm == Paradigm::ComponentFlows
                    || matches!(
                        n.kind,
                        NodeKind::Mixer | NodeKind::ComponentSeparator { .. }
                    )
            }
        }
    }

    fn total(&mut self, s: &str, p: usize) -> usize {
        self.sys
            .var(names::total(s, p), VarRole::TotalFlow, 0.0, INF, p)
    }

    fn flow_vars(&mut self, s: &str, p: usize) -> Vec<usize> {
        (0..self.nc())
            .map(|j| {
                let name = names::flow(s, self.comp(j), p);
                self.sys.var(name, VarRole::ComponentFlow, 0.0, INF, p)
            })
            .collect()
    }

    fn x_vars(&mut self, s: &str, p: usize) -> Vec<usize> {
        let nc = self.nc();
        (0..nc)
            .map(|j| {
                let name = names::fraction(s, self.comp(j), p);
                let i = self.sys.var(name, VarRole::Fraction, 0.0, 1.0, p);
                if !self.sys.vars[i].is_fixed() {
                    self.sys.set_init(i, 1.0 / nc as f64);
                }
                i
            })
            .collect()
    }

    /// Component flows of an inlet, adding `F_j = F x_j` conversion rows
    /// when the producer only carries fractions.
    fn inlet_flows(&mut self, node: &str, s: &str, p: usize) -> Vec<usize> {
        let f = self.flow_vars(s, p);
        if self.producer(s).is_none() && self.boundary_done.insert((s.to_string(), p)) {
            let tot = self.total(s, p);
            let mut terms = vec![(tot, 1.0)];
            terms.extend(f.iter().map(|&v| (v, -1.0)));
            self.sys.add_row(node, RowTag::Mass, p, terms, 0.0);
        }
        if !self.has_flows(s, p) && self.converted.insert((s.to_string(), p)) {
            let tot = self.total(s, p);
            let x = self.x_vars(s, p);
            for j in 0..self.nc() {
                let r = self
                    .sys
                    .add_row(node, RowTag::Fraction, p, vec![(f[j], -1.0)], 0.0);
                self.sys.add_bilinear(r, tot, x[j], 1.0, x[j]);
            }
        }
        f
    }

    /// Fractions of an inlet read by a fractions-based node.
    fn inlet_x(&mut self, node: &str, s: &str, p: usize) -> Vec<usize> {
        let x = self.x_vars(s, p);
        if self.producer(s).is_none() && self.boundary_done.insert((s.to_string(), p)) {
            let terms = x.iter().map(|&v| (v, 1.0)).collect();
            self.sys.add_row(node, RowTag::Fraction, p, terms, 1.0);
        }
        x
    }

    /// `F = sum_j F_j` for a flows-based outlet, plus fraction rows when a
    /// consumer or the plan asks for fractions.
    fn close_outlet(&mut self, node: &str, s: &str, p: usize, sum_row: bool) {
        let f = self.flow_vars(s, p);
        let tot = self.total(s, p);
        if sum_row {
            let mut terms = vec![(tot, 1.0)];
            terms.extend(f.iter().map(|&v| (v, -1.0)));
            self.sys.add_row(node, RowTag::Mass, p, terms, 0.0);
        }
        if self.needs_x(s, p) {
            self.fraction_rows(node, s, p);
        }
    }

    /// `F x_j - F_j = 0`, one bilinear term per component.
    fn fraction_rows(&mut self, node: &str, s: &str, p: usize) {
        let f = self.flow_vars(s, p);
        let tot = self.total(s, p);
        let x = self.x_vars(s, p);
        for j in 0..self.nc() {
            let r = self
                .sys
                .add_row(node, RowTag::Fraction, p, vec![(f[j], -1.0)], 0.0);
            self.sys.add_bilinear(r, tot, x[j], 1.0, x[j]);
        }
    }

    // ---- temperatures ----------------------------------------------------------

    fn has_energy_rows(n: &NodeDef) -> bool {
        !matches!(
            n.kind,
            NodeKind::Source { .. } | NodeKind::Sink { .. } | NodeKind::Inventory { .. }
        )
    }

    fn variable_reactor_t(n: &NodeDef) -> bool {
        matches!(&n.kind, NodeKind::LinearReactor(r) if r.t_fixed.is_none())
    }

    pub(crate) fn temp_status(&self, s: &str, p: usize) -> Result<Option<TempStatus>> {
        let local = |n: &NodeDef| self.mode(&n.id, p).level == AbstractionLevel::MassEnergyLocalH;
        let prod = self.producer(s);
        let cons = self.consumer(s);
        let needed = prod
            .is_some_and(|n| local(n) && Self::has_energy_rows(n) || Self::variable_reactor_t(n))
            || cons.is_some_and(|n| local(n) && Self::has_energy_rows(n));
        if !needed {
            return Ok(None);
        }
        let t0 = || self.prop(s).map(|r| r.t0);
        let Some(n) = prod else {
            return Ok(Some(TempStatus::Fixed(t0()?)));
        };
        if let NodeKind::LinearReactor(r) = &n.kind {
            return Ok(Some(match r.t_fixed {
                Some(t) => TempStatus::Fixed(t),
                None => TempStatus::Free,
            }));
        }
        if let NodeKind::Source { temperature, .. } = &n.kind {
            return Ok(Some(TempStatus::Fixed(match temperature {
                Some(t) => *t,
                None => t0()?,
            })));
        }
        if !local(n) {
            return Ok(Some(TempStatus::Fixed(t0()?)));
        }
        Ok(Some(match &n.kind {
            NodeKind::Mixer | NodeKind::Splitter { .. } | NodeKind::HeatExchanger(_) => {
                TempStatus::Free
            }
            NodeKind::HeaterCooler { duty: Some(_), .. } => TempStatus::Free,
            NodeKind::HeaterCooler { t_out, .. } => TempStatus::Fixed(match t_out {
                Some(t) => *t,
                None => t0()?,
            }),
            NodeKind::ComponentSeparator {
                t_out: Some(tt), ..
            } => {
                let k = n.outlets.iter().position(|o| o == s).unwrap_or(0);
                TempStatus::Fixed(tt[k])
            }
            _ => TempStatus::Fixed(t0()?),
        }))
    }

    fn temp_var(&mut self, s: &str, p: usize) -> Result<Option<(usize, TempStatus)>> {
        let Some(st) = self.temp_status(s, p)? else {
            return Ok(None);
        };
        let name = names::temperature(s, p);
        let i = match st {
            TempStatus::Fixed(v) => self.sys.var(name, VarRole::Temperature, v, v, p),
            TempStatus::Free => {
                let i = self.sys.var(name, VarRole::Temperature, T_LO, T_HI, p);
                let init = match self.producer(s).map(|n| &n.kind) {
                    Some(NodeKind::LinearReactor(r)) => {
                        let base = self
                            .props
                            .get(s)
                            .map(|r| r.t0)
                            .unwrap_or(0.5 * (r.t_min + r.t_max));
                        self.sys.set_bounds(i, r.t_min, r.t_max);
                        base.clamp(r.t_min, r.t_max)
                    }
                    _ => self.prop(s)?.t0,
                };
                self.sys.set_init(i, init);
                i
            }
        };
        Ok(Some((i, st)))
    }

    // ---- node emission ---------------------------------------------------------

    pub fn emit_node(&mut self, n: &'a NodeDef, p: usize) -> Result<()> {
        let mode = self.mode(&n.id, p);
        let flows = mode.paradigm == Paradigm::ComponentFlows;
        let unsupported = |kind: &str| Error::UnsupportedCombination {
            node: n.id.clone(),
            kind: kind.to_string(),
            paradigm: mode.paradigm.to_string(),
        };
        match &n.kind {
            NodeKind::Mixer => {
                if flows {
                    self.mixer_flows(n, p)
                } else {
                    self.mixer_fractions(n, p)
                }
            }
            NodeKind::Splitter { fractions } => {
                let fixed = fractions.as_deref();
                if flows {
                    self.splitter_flows(n, fixed, p)
                } else {
                    self.splitter_fractions(n, fixed, p)
                }
            }
            NodeKind::ComponentSeparator { alpha, .. } => {
                if flows {
                    self.separator_flows(n, alpha, p)
                } else {
                    self.separator_fractions(n, alpha, p)
                }
            }
            NodeKind::LinearReactor(_) if !flows => return Err(unsupported("LinearReactor")),
            NodeKind::LinearReactor(r) => match (&n.hybrid, mode.hybrid) {
                (Some(m), true) => self.data_driven(n, m, p),
                _ => self.reactor(n, r, p)?,
            },
            NodeKind::HeatExchanger(_) => {
                self.pass_through(n, 0, flows, p);
                self.pass_through(n, 1, flows, p);
            }
            NodeKind::HeaterCooler { .. } => self.pass_through(n, 0, flows, p),
            NodeKind::Source { .. } => self.source(n, flows, p),
            NodeKind::Sink { .. } => self.sink(n, p),
            NodeKind::Inventory { .. } if !flows => return Err(unsupported("Inventory")),
            NodeKind::Inventory { .. } => self.inventory(n, p),
            NodeKind::DataDrivenLinear(_) if !flows => return Err(unsupported("DataDrivenLinear")),
            NodeKind::DataDrivenLinear(m) => self.data_driven(n, m, p),
        }
        if mode.level.has_energy() && Self::has_energy_rows(n) {
            self.energy(n, mode.level, p)?;
        } else if Self::variable_reactor_t(n) {
            // reactor temperature still appears in the yield row
            self.temp_var(&n.outlets[0], p)?;
        }
        Ok(())
    }

    fn mixer_flows(&mut self, n: &NodeDef, p: usize) {
        let out = &n.outlets[0];
        let inlets: Vec<Vec<usize>> = n
            .inlets
            .iter()
            .map(|s| self.inlet_flows(&n.id, s, p))
            .collect();
        let fo = self.flow_vars(out, p);
        for j in 0..self.nc() {
            let mut terms = vec![(fo[j], 1.0)];
            terms.extend(inlets.iter().map(|f| (f[j], -1.0)));
            self.sys.add_row(&n.id, RowTag::Composition, p, terms, 0.0);
        }
        self.close_outlet(&n.id, out, p, true);
    }

    fn mixer_fractions(&mut self, n: &NodeDef, p: usize) {
        let out = &n.outlets[0];
        let nc = self.nc();
        let mut local = Vec::new();
        for s in &n.inlets {
            let tot = self.total(s, p);
            let x = self.inlet_x(&n.id, s, p);
            let mut fl = Vec::with_capacity(nc);
            for j in 0..nc {
                let v = self.sys.var(
                    names::local(&n.id, s, self.comp(j), p),
                    VarRole::Local,
                    0.0,
                    INF,
                    p,
                );
                let r = self
                    .sys
                    .add_row(&n.id, RowTag::Fraction, p, vec![(v, -1.0)], 0.0);
                self.sys.add_bilinear(r, tot, x[j], 1.0, x[j]);
                fl.push(v);
            }
            local.push(fl);
        }
        let fo = self.flow_vars(out, p);
        for j in 0..nc {
            let mut terms: Vec<(usize, f64)> = local.iter().map(|f| (f[j], 1.0)).collect();
            terms.push((fo[j], -1.0));
            self.sys.add_row(&n.id, RowTag::Composition, p, terms, 0.0);
        }
        let tot = self.total(out, p);
        let mut terms: Vec<(usize, f64)> = fo.iter().map(|&v| (v, 1.0)).collect();
        terms.push((tot, -1.0));
        self.sys.add_row(&n.id, RowTag::Mass, p, terms, 0.0);
        self.fraction_rows(&n.id, out, p);
    }

    fn split_vars(&mut self, n: &NodeDef, p: usize) -> Vec<usize> {
        let a: Vec<usize> = n
            .outlets
            .iter()
            .map(|o| {
                let i = self.sys.var(
                    names::split(&n.id, o, p),
                    VarRole::SplitFraction,
                    0.0,
                    1.0,
                    p,
                );
                self.sys.set_init(i, 1.0 / n.outlets.len() as f64);
                i
            })
            .collect();
        self.sys.add_row(
            &n.id,
            RowTag::Split,
            p,
            a.iter().map(|&v| (v, 1.0)).collect(),
            1.0,
        );
        a
    }

    fn splitter_flows(&mut self, n: &NodeDef, fixed: Option<&[f64]>, p: usize) {
        let fin = self.inlet_flows(&n.id, &n.inlets[0], p);
        let nc = self.nc();
        if n.outlets.len() == 1 {
            let fo = self.flow_vars(&n.outlets[0], p);
            for j in 0..nc {
                self.sys.add_row(
                    &n.id,
                    RowTag::Composition,
                    p,
                    vec![(fo[j], 1.0), (fin[j], -1.0)],
                    0.0,
                );
            }
            self.close_outlet(&n.id, &n.outlets[0], p, true);
            return;
        }
        let alpha = match fixed {
            Some(_) => None,
            None => Some(self.split_vars(n, p)),
        };
        let tin = self.total(&n.inlets[0], p);
        for (k, out) in n.outlets.iter().enumerate() {
            let fo = self.flow_vars(out, p);
            // start outlets at their share of the inlet
            let share = fixed.map_or(1.0 / n.outlets.len() as f64, |f| f[k]);
            let tout = self.total(out, p);
            self.sys.set_init(tout, share * self.sys.vars[tin].init);
            for j in 0..nc {
                self.sys.set_init(fo[j], share * self.sys.vars[fin[j]].init);
                match (&alpha, fixed) {
                    (Some(a), _) => {
                        let r = self
                            .sys
                            .add_row(&n.id, RowTag::Split, p, vec![(fo[j], 1.0)], 0.0);
                        self.sys.add_bilinear(r, a[k], fin[j], -1.0, a[k]);
                    }
                    (None, Some(f)) => {
                        self.sys.add_row(
                            &n.id,
                            RowTag::Split,
                            p,
                            vec![(fo[j], 1.0), (fin[j], -f[k])],
                            0.0,
                        );
                    }
                    (None, None) => unreachable!(),
                }
            }
            self.close_outlet(&n.id, out, p, true);
        }
    }

    fn splitter_fractions(&mut self, n: &NodeDef, fixed: Option<&[f64]>, p: usize) {
        let s_in = &n.inlets[0];
        let fin = self.total(s_in, p);
        let xin = self.inlet_x(&n.id, s_in, p);
        let nout = n.outlets.len();
        let totals: Vec<usize> = n.outlets.iter().map(|o| self.total(o, p)).collect();
        for out in &n.outlets {
            let xo = self.x_vars(out, p);
            for j in 0..self.nc() {
                self.sys.add_row(
                    &n.id,
                    RowTag::Composition,
                    p,
                    vec![(xo[j], 1.0), (xin[j], -1.0)],
                    0.0,
                );
            }
        }
        if nout == 1 {
            self.sys.add_row(
                &n.id,
                RowTag::Mass,
                p,
                vec![(totals[0], 1.0), (fin, -1.0)],
                0.0,
            );
            return;
        }
        match fixed {
            Some(f) => {
                let mut terms = vec![(fin, 1.0)];
                terms.extend(totals.iter().map(|&v| (v, -1.0)));
                self.sys.add_row(&n.id, RowTag::Mass, p, terms, 0.0);
                for k in 0..nout - 1 {
                    self.sys.add_row(
                        &n.id,
                        RowTag::Split,
                        p,
                        vec![(totals[k], 1.0), (fin, -f[k])],
                        0.0,
                    );
                }
            }
            None => {
                let a = self.split_vars(n, p);
                for k in 0..nout {
                    let r = self
                        .sys
                        .add_row(&n.id, RowTag::Split, p, vec![(totals[k], 1.0)], 0.0);
                    self.sys.add_bilinear(r, fin, a[k], -1.0, a[k]);
                }
            }
        }
    }

    fn separator_flows(&mut self, n: &NodeDef, alpha: &[Vec<f64>], p: usize) {
        let fin = self.inlet_flows(&n.id, &n.inlets[0], p);
        for (k, out) in n.outlets.iter().enumerate() {
            let fo = self.flow_vars(out, p);
            for j in 0..self.nc() {
                self.sys.add_row(
                    &n.id,
                    RowTag::Split,
                    p,
                    vec![(fo[j], 1.0), (fin[j], -alpha[k][j])],
                    0.0,
                );
            }
            self.close_outlet(&n.id, out, p, true);
        }
    }

    fn separator_fractions(&mut self, n: &NodeDef, alpha: &[Vec<f64>], p: usize) {
        let s_in = &n.inlets[0];
        let tin = self.total(s_in, p);
        let xin = self.inlet_x(&n.id, s_in, p);
        let nc = self.nc();
        let local: Vec<usize> = (0..nc)
            .map(|j| {
                let v = self.sys.var(
                    names::local(&n.id, s_in, self.comp(j), p),
                    VarRole::Local,
                    0.0,
                    INF,
                    p,
                );
                let r = self
                    .sys
                    .add_row(&n.id, RowTag::Fraction, p, vec![(v, -1.0)], 0.0);
                self.sys.add_bilinear(r, tin, xin[j], 1.0, xin[j]);
                v
            })
            .collect();
        for (k, out) in n.outlets.iter().enumerate() {
            let fo = self.flow_vars(out, p);
            for j in 0..nc {
                self.sys.add_row(
                    &n.id,
                    RowTag::Split,
                    p,
                    vec![(local[j], alpha[k][j]), (fo[j], -1.0)],
                    0.0,
                );
            }
            let tot = self.total(out, p);
            let mut terms: Vec<(usize, f64)> = fo.iter().map(|&v| (v, 1.0)).collect();
            terms.push((tot, -1.0));
            self.sys.add_row(&n.id, RowTag::Mass, p, terms, 0.0);
            self.fraction_rows(&n.id, out, p);
        }
    }

    fn reactor(&mut self, n: &NodeDef, r: &crate::topology::ReactorParams, p: usize) -> Result<()> {
        let (s_in, s_out) = (&n.inlets[0], &n.outlets[0]);
        let fin = self.inlet_flows(&n.id, s_in, p);
        let tin = self.total(s_in, p);
        let fo = self.flow_vars(s_out, p);
        let tout = self.total(s_out, p);

        let mut terms: Vec<(usize, f64)> = fin.iter().zip(&r.a).map(|(&v, &a)| (v, a)).collect();
        terms.push((fo[r.key], r.a_y));
        match r.t_fixed {
            Some(t) => {
                terms.push((tin, r.a_t * t));
                self.sys.add_row(&n.id, RowTag::Reactor, p, terms, 0.0);
            }
            None => {
                let row = self.sys.add_row(&n.id, RowTag::Reactor, p, terms, 0.0);
                let (tv, _) = self
                    .temp_var(s_out, p)?
                    .expect("variable reactor temperature always has a variable");
                if r.a_t != 0.0 {
                    self.sys.add_bilinear(row, tin, tv, r.a_t, tv);
                }
            }
        }
        self.sys
            .add_row(&n.id, RowTag::Mass, p, vec![(tout, 1.0), (tin, -1.0)], 0.0);
        for row in &r.rows {
            let mut terms: Vec<(usize, f64)> = Vec::new();
            for j in 0..self.nc() {
                if row.inlet[j] != 0.0 {
                    terms.push((fin[j], row.inlet[j]));
                }
                if row.outlet[j] != 0.0 {
                    terms.push((fo[j], row.outlet[j]));
                }
            }
            self.sys.add_row(&n.id, RowTag::Reactor, p, terms, 0.0);
        }
        self.close_outlet(&n.id, s_out, p, true);
        Ok(())
    }

    fn data_driven(&mut self, n: &NodeDef, m: &DataDrivenModel, p: usize) {
        let fin = self.inlet_flows(&n.id, &n.inlets[0], p);
        let s_out = &n.outlets[0];
        let fo = self.flow_vars(s_out, p);
        let nc = self.nc();
        let u: Vec<usize> = (0..m.inputs())
            .map(|i| {
                let (lo, hi) = match self.sc.mode {
                    Mode::Simulate => (m.u[i], m.u[i]),
                    Mode::Optimize => (m.u_min[i], m.u_max[i]),
                };
                let v = self
                    .sys
                    .var(names::input(&n.id, i, p), VarRole::Input, lo, hi, p);
                self.sys.set_init(v, m.u[i].clamp(lo, hi));
                v
            })
            .collect();
        for j in 0..nc {
            let mut terms = vec![(fo[j], 1.0)];
            for (i, &v) in fin.iter().enumerate() {
                if m.gain[j][i] != 0.0 {
                    terms.push((v, -m.gain[j][i]));
                }
            }
            for (i, &v) in u.iter().enumerate() {
                if m.gain[j][nc + i] != 0.0 {
                    terms.push((v, -m.gain[j][nc + i]));
                }
            }
            self.sys
                .add_row(&n.id, RowTag::DataDriven, p, terms, m.bias[j]);
        }
        self.close_outlet(&n.id, s_out, p, true);
    }

    fn pass_through(&mut self, n: &NodeDef, side: usize, flows: bool, p: usize) {
        let (s_in, s_out) = (&n.inlets[side], &n.outlets[side]);
        if flows {
            let fin = self.inlet_flows(&n.id, s_in, p);
            let fo = self.flow_vars(s_out, p);
            for j in 0..self.nc() {
                self.sys.add_row(
                    &n.id,
                    RowTag::Composition,
                    p,
                    vec![(fo[j], 1.0), (fin[j], -1.0)],
                    0.0,
                );
            }
            self.close_outlet(&n.id, s_out, p, true);
        } else {
            let tin = self.total(s_in, p);
            let xin = self.inlet_x(&n.id, s_in, p);
            let tout = self.total(s_out, p);
            let xo = self.x_vars(s_out, p);
            self.sys
                .add_row(&n.id, RowTag::Mass, p, vec![(tout, 1.0), (tin, -1.0)], 0.0);
            for j in 0..self.nc() {
                self.sys.add_row(
                    &n.id,
                    RowTag::Composition,
                    p,
                    vec![(xo[j], 1.0), (xin[j], -1.0)],
                    0.0,
                );
            }
        }
    }

    fn source(&mut self, n: &NodeDef, flows: bool, p: usize) {
        let NodeKind::Source {
            composition,
            flow,
            f_min,
            f_max,
            price,
            ..
        } = &n.kind
        else {
            unreachable!()
        };
        let s = &n.outlets[0];
        let tot = self.total(s, p);
        let (lo, hi) = match (self.sc.mode, flow) {
            (Mode::Simulate, Some(f)) => (*f, *f),
            (Mode::Simulate, None) => (*f_min, f_max.unwrap_or(INF)),
            (Mode::Optimize, Some(f)) if f_max.is_none() => (*f, *f),
            (Mode::Optimize, _) => (*f_min, f_max.unwrap_or(INF)),
        };
        self.sys.set_bounds(tot, lo, hi);
        if let Some(f) = flow {
            self.sys.set_init(tot, f.clamp(lo, hi));
        }
        self.sys
            .add_objective(tot, self.sc.dt * per_period(price, p), p);
        if flows {
            let f = self.flow_vars(s, p);
            for j in 0..self.nc() {
                self.sys.add_row(
                    &n.id,
                    RowTag::Composition,
                    p,
                    vec![(f[j], 1.0), (tot, -composition[j])],
                    0.0,
                );
            }
            if self.needs_x(s, p) {
                self.fraction_rows(&n.id, s, p);
            }
        } else {
            let x = self.x_vars(s, p);
            for j in 0..self.nc() {
                self.sys.fix(x[j], composition[j]);
            }
        }
    }

    fn sink(&mut self, n: &NodeDef, p: usize) {
        let NodeKind::Sink {
            price,
            f_min,
            f_max,
            demand,
        } = &n.kind
        else {
            unreachable!()
        };
        let tot = self.total(&n.inlets[0], p);
        if self.sc.mode == Mode::Optimize {
            match demand {
                Some(d) => {
                    let v = per_period(d, p);
                    self.sys.fix(tot, v);
                }
                None => {
                    let v = &self.sys.vars[tot];
                    let (lo, hi) = (v.lo.max(*f_min), v.hi.min(f_max.unwrap_or(INF)));
                    self.sys.set_bounds(tot, lo, hi);
                }
            }
        }
        self.sys
            .add_objective(tot, -self.sc.dt * per_period(price, p), p);
    }

    fn inventory(&mut self, n: &NodeDef, p: usize) {
        let NodeKind::Inventory {
            capacity,
            initial,
            final_min,
        } = &n.kind
        else {
            unreachable!()
        };
        if self.sc.mode == Mode::Simulate {
            self.pass_through(n, 0, true, p);
            return;
        }
        let (s_in, s_out) = (&n.inlets[0], &n.outlets[0]);
        let fin = self.inlet_flows(&n.id, s_in, p);
        let fo = self.flow_vars(s_out, p);
        let nc = self.nc();
        let dt = self.sc.dt;
        let hold: Vec<usize> = (0..nc)
            .map(|j| {
                let v = self.sys.var(
                    names::holdup(&n.id, self.comp(j), p),
                    VarRole::Inventory,
                    0.0,
                    INF,
                    p,
                );
                self.sys.set_init(v, initial[j]);
                v
            })
            .collect();
        for j in 0..nc {
            let mut terms = vec![(hold[j], 1.0), (fin[j], -dt), (fo[j], dt)];
            let rhs = if p == 0 {
                initial[j]
            } else {
                let prev = self.sys.var(
                    names::holdup(&n.id, self.comp(j), p - 1),
                    VarRole::Inventory,
                    0.0,
                    INF,
                    p - 1,
                );
                terms.push((prev, -1.0));
                0.0
            };
            self.sys.add_row(&n.id, RowTag::Inventory, p, terms, rhs);
        }
        let total = self.sys.var(
            names::holdup_total(&n.id, p),
            VarRole::Inventory,
            0.0,
            *capacity,
            p,
        );
        self.sys.set_init(total, initial.iter().sum());
        if p + 1 == self.sc.periods {
            if let Some(f) = final_min {
                self.sys.set_bounds(total, *f, *capacity);
            }
        }
        let mut terms = vec![(total, 1.0)];
        terms.extend(hold.iter().map(|&v| (v, -1.0)));
        self.sys.add_row(&n.id, RowTag::Inventory, p, terms, 0.0);
        self.close_outlet(&n.id, s_out, p, true);
    }

    // ---- energy ----------------------------------------------------------------

    /// Adds `sign * F * H` for stream `s` into `row`.
    fn enthalpy_flow(
        &mut self,
        row: usize,
        node: &str,
        s: &str,
        sign: f64,
        level: AbstractionLevel,
        p: usize,
    ) -> Result<()> {
        let rec = self.prop(s)?;
        let f = self.total(s, p);
        if level == AbstractionLevel::MassEnergyFixedH {
            self.sys.rows[row].terms.push((f, sign * rec.h0));
            return Ok(());
        }
        let (tv, st) = self
            .temp_var(s, p)?
            .expect("streams of local-enthalpy nodes carry temperatures");
        if self.opts.rigorous {
            let c = rec
                .correlation
                .as_ref()
                .ok_or_else(|| Error::MissingCorrelation(s.to_string()))?;
            match st {
                TempStatus::Fixed(t) => self.sys.rows[row].terms.push((f, sign * c.value(t))),
                TempStatus::Free => self.sys.add_general(
                    row,
                    node,
                    sign,
                    GeneralKind::EnthalpyFlow {
                        flow: f,
                        temp: tv,
                        coeffs: c.coeffs,
                    },
                ),
            }
            return Ok(());
        }
        match st {
            TempStatus::Fixed(t) => self.sys.rows[row]
                .terms
                .push((f, sign * (rec.h0 + rec.cp * (t - rec.t0)))),
            TempStatus::Free => {
                self.sys.rows[row]
                    .terms
                    .push((f, sign * (rec.h0 - rec.cp * rec.t0)));
                self.sys.add_bilinear(row, f, tv, sign * rec.cp, tv);
            }
        }
        Ok(())
    }

    fn duty_var(&mut self, n: &NodeDef, level: AbstractionLevel, p: usize) -> usize {
        let local = level == AbstractionLevel::MassEnergyLocalH;
        let (lo, hi) = match &n.kind {
            NodeKind::Mixer if local => (0.0, 0.0),
            NodeKind::LinearReactor(r) if local && r.t_fixed.is_none() => (r.duty, r.duty),
            NodeKind::HeaterCooler {
                duty, q_min, q_max, ..
            } => match (local, duty) {
                (true, Some(d)) => (*d, *d),
                _ => (q_min.unwrap_or(-INF), q_max.unwrap_or(INF)),
            },
            _ => (-INF, INF),
        };
        let q = self
            .sys
            .var(names::duty(&n.id, p), VarRole::Duty, lo, hi, p);
        if lo != hi {
            self.sys.set_init(q, 0.0f64.clamp(lo, hi));
        }
        let price = match n.utility {
            Utility::None => 0.0,
            Utility::Electric => self.sc.elec(p),
            Utility::Steam => self.sc.steam(p),
        };
        self.sys.add_objective(q, self.sc.dt * price, p);
        q
    }

    fn energy(&mut self, n: &'a NodeDef, level: AbstractionLevel, p: usize) -> Result<()> {
        let local = level == AbstractionLevel::MassEnergyLocalH;
        if let (NodeKind::HeatExchanger(params), true) = (&n.kind, local) {
            return self.exchanger_local(n, params, p);
        }
        let q = self.duty_var(n, level, p);
        let row = self
            .sys
            .add_row(&n.id, RowTag::Energy, p, vec![(q, 1.0)], 0.0);
        for s in &n.inlets {
            self.enthalpy_flow(row, &n.id, s, 1.0, level, p)?;
        }
        for s in &n.outlets {
            self.enthalpy_flow(row, &n.id, s, -1.0, level, p)?;
        }
        match &n.kind {
            NodeKind::LinearReactor(r) if r.q_rct != 0.0 => {
                let f = self.total(&n.inlets[0], p);
                self.sys.rows[row].terms.push((f, r.q_rct));
            }
            NodeKind::HeaterCooler { phase_change, .. } if *phase_change != PhaseChange::None => {
                let s = &n.outlets[0];
                let rec = self.prop(s)?;
                let hvap = rec.hvap.ok_or_else(|| Error::MissingHvap(s.clone()))?;
                let f = self.total(s, p);
                let sign = if *phase_change == PhaseChange::Vaporize {
                    -1.0
                } else {
                    1.0
                };
                self.sys.rows[row].terms.push((f, sign * hvap));
            }
            NodeKind::Splitter { .. } if local => {
                let (tin, _) = self.temp_var(&n.inlets[0], p)?.expect("inlet temperature");
                for s in &n.outlets {
                    let (tv, st) = self.temp_var(s, p)?.expect("outlet temperature");
                    if st == TempStatus::Free {
                        self.sys.add_row(
                            &n.id,
                            RowTag::Temperature,
                            p,
                            vec![(tv, 1.0), (tin, -1.0)],
                            0.0,
                        );
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Hot side, cold side and duty rows of an exchanger with variable
    /// outlet temperatures.
    fn exchanger_local(
        &mut self,
        n: &NodeDef,
        params: &crate::topology::ExchangerParams,
        p: usize,
    ) -> Result<()> {
        let lvl = AbstractionLevel::MassEnergyLocalH;
        let q = self
            .sys
            .var(names::exchanger_duty(&n.id, p), VarRole::Duty, 0.0, INF, p);
        self.sys.set_init(q, params.q_base);
        let hot = self
            .sys
            .add_row(&n.id, RowTag::Energy, p, vec![(q, -1.0)], 0.0);
        self.enthalpy_flow(hot, &n.id, &n.inlets[0], 1.0, lvl, p)?;
        self.enthalpy_flow(hot, &n.id, &n.outlets[0], -1.0, lvl, p)?;
        let cold = self
            .sys
            .add_row(&n.id, RowTag::Energy, p, vec![(q, 1.0)], 0.0);
        self.enthalpy_flow(cold, &n.id, &n.inlets[1], 1.0, lvl, p)?;
        self.enthalpy_flow(cold, &n.id, &n.outlets[1], -1.0, lvl, p)?;

        let (th, _) = self
            .temp_var(&n.inlets[0], p)?
            .expect("hot inlet temperature");
        let (tc, _) = self
            .temp_var(&n.inlets[1], p)?
            .expect("cold inlet temperature");
        let fh = self.total(&n.inlets[0], p);
        let fc = self.total(&n.inlets[1], p);
        let cp_hot = self.prop(&n.inlets[0])?.cp;
        let cp_cold = self.prop(&n.inlets[1])?.cp;
        let row = self
            .sys
            .add_row(&n.id, RowTag::ExchangerDuty, p, vec![(q, 1.0)], 0.0);
        self.sys.add_general(
            row,
            &n.id,
            -1.0,
            GeneralKind::ExchangerDuty {
                params: params.clone(),
                hot_flow: fh,
                cold_flow: fc,
                hot_in_t: th,
                cold_in_t: tc,
                cp_hot,
                cp_cold,
            },
        );
        Ok(())
    }
}
