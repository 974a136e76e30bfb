use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::instantiation::EquationSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Converged,
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl Status {
    pub fn is_success(self) -> bool {
        matches!(self, Status::Converged | Status::Optimal)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::Converged => "converged",
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::IterationLimit => "iteration-limit",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: f64,
    /// `None` picks the solver's own default (50 Newton, 200 SLP).
    pub max_iter: Option<usize>,
    pub slp_step_bound: f64,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: None,
            slp_step_bound: 0.2,
            seed: 0,
        }
    }
}

impl SolveOptions {
    /// Defaults, with the tolerance taken from `MASSFLOW_TOL` when set.
    pub fn from_env() -> Self {
        Self::from_tol_var(std::env::var("MASSFLOW_TOL").ok().as_deref())
    }

    /// Defaults, with the tolerance read from `var` when it parses as a
    /// positive number.
    pub fn from_tol_var(var: Option<&str>) -> Self {
        let mut o = Self::default();
        if let Some(t) = var.and_then(|v| v.trim().parse::<f64>().ok()) {
            if t > 0.0 {
                o.tol = t;
            }
        }
        o
    }

    /// Flag beats environment beats default.
    pub fn resolve(flag: Option<f64>, env: Option<&str>) -> Self {
        let o = Self::from_tol_var(env);
        match flag {
            Some(t) => o.with_tol(t),
            None => o,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, n: usize) -> Self {
        self.max_iter = Some(n);
        self
    }

    pub fn check(&self) -> crate::Result<()> {
        if !(self.tol > 0.0) {
            return Err(crate::Error::Solver(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == Some(0) {
            return Err(crate::Error::Solver("max_iter must be at least 1".into()));
        }
        if !(self.slp_step_bound > 0.0 && self.slp_step_bound <= 1.0) {
            return Err(crate::Error::Solver(format!(
                "slp_step_bound must lie in (0, 1], got {}",
                self.slp_step_bound
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StreamState {
    pub period: usize,
    pub stream: String,
    pub total: Option<f64>,
    pub flows: Vec<(String, f64)>,
    pub fractions: Vec<(String, f64)>,
    pub temperature: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DutyState {
    pub period: usize,
    pub node: String,
    pub duty: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StreamTable {
    pub streams: Vec<StreamState>,
    pub duties: Vec<DutyState>,
}

impl StreamTable {
    /// Groups solution values by stream and period using variable names.
    pub fn from_solution(sys: &EquationSystem, x: &[f64]) -> Self {
        let mut streams: BTreeMap<(usize, String), StreamState> = BTreeMap::new();
        let mut duties = Vec::new();
        for (v, &val) in sys.vars.iter().zip(x) {
            let Some((kind, inner, period)) = split_name(&v.name) else {
                continue;
            };
            fn entry<'m>(
                streams: &'m mut BTreeMap<(usize, String), StreamState>,
                period: usize,
                s: &str,
            ) -> &'m mut StreamState {
                streams
                    .entry((period, s.to_string()))
                    .or_insert_with(|| StreamState {
                        period,
                        stream: s.to_string(),
                        ..Default::default()
                    })
            }
            match kind {
                "F" => match inner.rsplit_once('.') {
                    Some((s, c)) => entry(&mut streams, period, s)
                        .flows
                        .push((c.to_string(), val)),
                    None => entry(&mut streams, period, inner).total = Some(val),
                },
                "x" => {
                    if let Some((s, c)) = inner.rsplit_once('.') {
                        entry(&mut streams, period, s)
                            .fractions
                            .push((c.to_string(), val));
                    }
                }
                "T" => entry(&mut streams, period, inner).temperature = Some(val),
                "Q" | "Qx" => duties.push(DutyState {
                    period,
                    node: inner.to_string(),
                    duty: val,
                }),
                _ => {}
            }
        }
        let mut streams: Vec<StreamState> = streams.into_values().collect();
        for s in &mut streams {
            if s.flows.is_empty() && !s.fractions.is_empty() {
                if let Some(t) = s.total {
                    s.flows = s
                        .fractions
                        .iter()
                        .map(|(c, x)| (c.clone(), t * x))
                        .collect();
                }
            }
            if s.total.is_none() && !s.flows.is_empty() {
                s.total = Some(s.flows.iter().map(|(_, f)| f).sum());
            }
        }
        Self { streams, duties }
    }

    pub fn stream(&self, id: &str, period: usize) -> Option<&StreamState> {
        self.streams
            .iter()
            .find(|s| s.stream == id && s.period == period)
    }
}

/// `kind[inner]@period`
fn split_name(name: &str) -> Option<(&str, &str, usize)> {
    let (head, period) = name.rsplit_once('@')?;
    let open = head.find('[')?;
    let inner = head[open + 1..].strip_suffix(']')?;
    Some((&head[..open], inner, period.parse().ok()?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: Status,
    pub iterations: usize,
    pub residual: f64,
    pub objective: f64,
    pub x: Vec<f64>,
    pub table: StreamTable,
    pub warm_start_used: bool,
    /// Row multipliers at an LP optimum (cost = duals . rows at optimality).
    pub duals: Option<Vec<f64>>,
}

impl SolveReport {
    pub(crate) fn new(
        sys: &EquationSystem,
        status: Status,
        iterations: usize,
        x: Vec<f64>,
    ) -> Self {
        Self {
            status,
            iterations,
            residual: sys.residual_norm(&x),
            objective: sys.objective_value(&x),
            table: StreamTable::from_solution(sys, &x),
            x,
            warm_start_used: false,
            duals: None,
        }
    }

    pub fn value(&self, sys: &EquationSystem, name: &str) -> Option<f64> {
        sys.find(name).map(|i| self.x[i])
    }
}
