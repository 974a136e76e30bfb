use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::hen::{duty_factor, Dual};
use crate::topology::ExchangerParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarRole {
    ComponentFlow,
    TotalFlow,
    Fraction,
    Temperature,
    Duty,
    SplitFraction,
    Inventory,
    Input,
    /// Node-local intermediate (e.g. inlet component flows of a
    /// fractions-based mixer).
    Local,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub role: VarRole,
    pub lo: f64,
    pub hi: f64,
    pub period: usize,
    /// Value used when no better start is known.
    pub init: f64,
}

impl Variable {
    pub fn is_fixed(&self) -> bool {
        self.lo == self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowTag {
    Mass,
    Composition,
    Fraction,
    Split,
    Reactor,
    Energy,
    Temperature,
    ExchangerDuty,
    Inventory,
    DataDriven,
}

/// `sum(coef * x) + bilinear + general = rhs`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
    pub node: String,
    pub tag: RowTag,
    pub period: usize,
}

/// `coef * x[a] * x[b]` contributing to `row`. `frozen` names the factor the
/// emitter considers intensive (ratio, fraction or temperature).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bilinear {
    pub row: usize,
    pub a: usize,
    pub b: usize,
    pub coef: f64,
    pub frozen: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GeneralKind {
    /// `Q_base * Phi(F_hot, F_cold) * (T_hot_in - T_cold_in)` with the duty
    /// ratio from counter-current effectiveness-NTU.
    ExchangerDuty {
        params: ExchangerParams,
        hot_flow: usize,
        cold_flow: usize,
        hot_in_t: usize,
        cold_in_t: usize,
        cp_hot: f64,
        cp_cold: f64,
    },
    /// `F * H(T)` with the cubic correlation `coeffs`.
    EnthalpyFlow {
        flow: usize,
        temp: usize,
        coeffs: [f64; 4],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct General {
    pub row: usize,
    pub node: String,
    pub coef: f64,
    pub kind: GeneralKind,
}

impl General {
    fn eval(&self, x: &[f64]) -> f64 {
        self.coef * self.value_and_grad(x, None)
    }

    /// Value of the expression; when `grad` is given, accumulates
    /// `coef * d/dx` into it as (variable, derivative) pairs.
    fn value_and_grad(&self, x: &[f64], grad: Option<&mut Vec<(usize, f64)>>) -> f64 {
        match &self.kind {
            GeneralKind::ExchangerDuty {
                params,
                hot_flow,
                cold_flow,
                hot_in_t,
                cold_in_t,
                cp_hot,
                cp_cold,
            } => {
                let dt = x[*hot_in_t] - x[*cold_in_t];
                let fh = Dual::var(x[*hot_flow]);
                let fc = Dual::constant(x[*cold_flow]);
                let by_h = duty_factor(params, fh, fc, *cp_hot, *cp_cold);
                let fh = Dual::constant(x[*hot_flow]);
                let fc = Dual::var(x[*cold_flow]);
                let by_c = duty_factor(params, fh, fc, *cp_hot, *cp_cold);
                let phi_q = by_h.v * params.q_base;
                if let Some(g) = grad {
                    g.push((*hot_flow, self.coef * by_h.d * params.q_base * dt));
                    g.push((*cold_flow, self.coef * by_c.d * params.q_base * dt));
                    g.push((*hot_in_t, self.coef * phi_q));
                    g.push((*cold_in_t, -self.coef * phi_q));
                }
                phi_q * dt
            }
            GeneralKind::EnthalpyFlow { flow, temp, coeffs } => {
                let t = x[*temp];
                let [c0, c1, c2, c3] = *coeffs;
                let h = c0 + t * (c1 + t * (c2 + t * c3));
                let dh = c1 + t * (2.0 * c2 + 3.0 * c3 * t);
                if let Some(g) = grad {
                    g.push((*flow, self.coef * h));
                    g.push((*temp, self.coef * x[*flow] * dh));
                }
                x[*flow] * h
            }
        }
    }

    pub fn vars(&self) -> Vec<usize> {
        match &self.kind {
            GeneralKind::ExchangerDuty {
                hot_flow,
                cold_flow,
                hot_in_t,
                cold_in_t,
                ..
            } => vec![*hot_flow, *cold_flow, *hot_in_t, *cold_in_t],
            GeneralKind::EnthalpyFlow { flow, temp, .. } => vec![*flow, *temp],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveTerm {
    pub var: usize,
    pub coef: f64,
    pub period: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EquationSystem {
    pub vars: Vec<Variable>,
    pub rows: Vec<Row>,
    pub bilinear: Vec<Bilinear>,
    pub general: Vec<General>,
    pub objective: Vec<ObjectiveTerm>,
    pub periods: usize,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl EquationSystem {
    pub fn new(periods: usize) -> Self {
        Self {
            periods,
            ..Default::default()
        }
    }

    /// Returns the variable named `name`, creating it with the given role
    /// and bounds when absent.
    pub fn var(&mut self, name: String, role: VarRole, lo: f64, hi: f64, period: usize) -> usize {
        if let Some(&i) = self.index.get(&name) {
            return i;
        }
        let init = if lo == hi || (lo.is_finite() && lo > 0.0) {
            lo
        } else if hi.is_finite() && hi < 1.0 {
            hi
        } else {
            1.0
        };
        let i = self.vars.len();
        self.index.insert(name.clone(), i);
        self.vars.push(Variable {
            name,
            role,
            lo,
            hi,
            period,
            init,
        });
        i
    }

    pub fn set_bounds(&mut self, i: usize, lo: f64, hi: f64) {
        let v = &mut self.vars[i];
        v.lo = lo;
        v.hi = hi;
        v.init = if lo == hi { lo } else { v.init.clamp(lo, hi) };
    }

    pub fn fix(&mut self, i: usize, value: f64) {
        self.set_bounds(i, value, value);
    }

    pub fn set_init(&mut self, i: usize, value: f64) {
        self.vars[i].init = value;
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn rebuild_index(&mut self) {
        self.index = self
            .vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.clone(), i))
            .collect();
    }

    pub fn add_row(
        &mut self,
        node: &str,
        tag: RowTag,
        period: usize,
        terms: Vec<(usize, f64)>,
        rhs: f64,
    ) -> usize {
        self.rows.push(Row {
            terms,
            rhs,
            node: node.to_string(),
            tag,
            period,
        });
        self.rows.len() - 1
    }

    pub fn add_bilinear(&mut self, row: usize, a: usize, b: usize, coef: f64, frozen: usize) {
        debug_assert!(frozen == a || frozen == b);
        self.bilinear.push(Bilinear {
            row,
            a,
            b,
            coef,
            frozen,
        });
    }

    pub fn add_general(&mut self, row: usize, node: &str, coef: f64, kind: GeneralKind) {
        self.general.push(General {
            row,
            node: node.to_string(),
            coef,
            kind,
        });
    }

    pub fn add_objective(&mut self, var: usize, coef: f64, period: usize) {
        if coef != 0.0 {
            self.objective.push(ObjectiveTerm { var, coef, period });
        }
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn initial_point(&self) -> Vec<f64> {
        self.vars.iter().map(|v| v.init).collect()
    }

    /// Dense objective coefficients.
    pub fn cost(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.vars.len()];
        for t in &self.objective {
            c[t.var] += t.coef;
        }
        c
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|t| t.coef * x[t.var]).sum()
    }

    pub fn objective_by_period(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.periods.max(1)];
        for t in &self.objective {
            out[t.period] += t.coef * x[t.var];
        }
        out
    }

    /// Row residuals `lhs - rhs`.
    pub fn residuals(&self, x: &[f64]) -> Vec<f64> {
        let mut r: Vec<f64> = self
            .rows
            .iter()
            .map(|row| row.terms.iter().map(|(i, c)| c * x[*i]).sum::<f64>() - row.rhs)
            .collect();
        for b in &self.bilinear {
            r[b.row] += b.coef * x[b.a] * x[b.b];
        }
        for g in &self.general {
            r[g.row] += g.eval(x);
        }
        r
    }

    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        self.residuals(x).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Sparse Jacobian as (row, var, value) triplets; duplicates add.
    pub fn jacobian_triplets(&self, x: &[f64]) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            for (i, c) in &row.terms {
                out.push((r, *i, *c));
            }
        }
        for b in &self.bilinear {
            out.push((b.row, b.a, b.coef * x[b.b]));
            out.push((b.row, b.b, b.coef * x[b.a]));
        }
        let mut g = Vec::new();
        for gen in &self.general {
            g.clear();
            gen.value_and_grad(x, Some(&mut g));
            out.extend(g.iter().map(|(i, d)| (gen.row, *i, *d)));
        }
        out
    }

    /// Dense Jacobian, rows x vars.
    pub fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut j = vec![vec![0.0; self.vars.len()]; self.rows.len()];
        for (r, i, v) in self.jacobian_triplets(x) {
            j[r][i] += v;
        }
        j
    }

    /// True when every bilinear term has at least one fixed factor and
    /// there are no general terms.
    pub fn is_effectively_linear(&self) -> bool {
        self.general.is_empty()
            && self
                .bilinear
                .iter()
                .all(|b| self.vars[b.a].is_fixed() || self.vars[b.b].is_fixed())
    }

    /// Rows that touch at least one free variable.
    pub fn rows_with_free_vars(&self) -> Vec<bool> {
        let free = |i: usize| !self.vars[i].is_fixed();
        let mut touched: Vec<bool> = self
            .rows
            .iter()
            .map(|r| r.terms.iter().any(|(i, c)| *c != 0.0 && free(*i)))
            .collect();
        for b in &self.bilinear {
            if free(b.a) || free(b.b) {
                touched[b.row] = true;
            }
        }
        for g in &self.general {
            if g.vars().into_iter().any(free) {
                touched[g.row] = true;
            }
        }
        touched
    }

    pub fn free_vars(&self) -> Vec<usize> {
        (0..self.vars.len())
            .filter(|&i| !self.vars[i].is_fixed())
            .collect()
    }

    /// Largest bound violation of `x`.
    pub fn bound_violation(&self, x: &[f64]) -> f64 {
        self.vars
            .iter()
            .zip(x)
            .map(|(v, &xi)| (v.lo - xi).max(xi - v.hi).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Keeps only rows satisfying `keep`, remapping term row indices.
    pub fn retain_rows(&mut self, keep: impl Fn(&Row) -> bool) {
        self.retain_indexed(|_, r| keep(r));
    }

    /// Like [`Self::retain_rows`] with the row index passed along.
    pub fn retain_indexed(&mut self, keep: impl Fn(usize, &Row) -> bool) {
        let mut map = vec![usize::MAX; self.rows.len()];
        let mut rows = Vec::new();
        for (i, r) in self.rows.drain(..).enumerate() {
            if keep(i, &r) {
                map[i] = rows.len();
                rows.push(r);
            }
        }
        self.rows = rows;
        self.bilinear.retain(|b| map[b.row] != usize::MAX);
        for b in &mut self.bilinear {
            b.row = map[b.row];
        }
        self.general.retain(|g| map[g.row] != usize::MAX);
        for g in &mut self.general {
            g.row = map[g.row];
        }
    }
}
