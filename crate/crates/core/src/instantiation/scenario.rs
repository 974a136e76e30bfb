use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::lexer::{at_line, Section};

/// Whether degrees of freedom are pinned by specifications (square
/// simulation) or released to their bounds (optimization).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Mode {
    #[default]
    Simulate,
    Optimize,
}

/// Time horizon and piecewise-constant utility prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub periods: usize,
    /// Period length (h).
    pub dt: f64,
    /// Electricity price per period (currency per kW h).
    pub elec_price: Vec<f64>,
    /// Steam price per period (currency per kW h).
    pub steam_price: Vec<f64>,
    pub mode: Mode,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            periods: 1,
            dt: 1.0,
            elec_price: vec![0.0],
            steam_price: vec![0.0],
            mode: Mode::Simulate,
        }
    }
}

/// Value for period `p` from a per-period list; a single entry broadcasts.
pub fn per_period(v: &[f64], p: usize) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        _ => v[p.min(v.len() - 1)],
    }
}

impl Scenario {
    pub fn single() -> Self {
        Self::default()
    }

    pub fn optimize(mut self) -> Self {
        self.mode = Mode::Optimize;
        self
    }

    pub fn with_periods(mut self, periods: usize) -> Self {
        self.periods = periods;
        self
    }

    pub fn elec(&self, p: usize) -> f64 {
        per_period(&self.elec_price, p)
    }

    pub fn steam(&self, p: usize) -> f64 {
        per_period(&self.steam_price, p)
    }

    pub fn check(&self) -> Result<()> {
        if self.periods == 0 {
            return Err(Error::Scenario(
                "horizon must contain at least one period".into(),
            ));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Scenario("period length must be positive".into()));
        }
        for (name, v) in [
            ("elec_price", &self.elec_price),
            ("steam_price", &self.steam_price),
        ] {
            if v.len() > 1 && v.len() != self.periods {
                return Err(Error::Scenario(format!(
                    "{name} has {} entries for {} periods",
                    v.len(),
                    self.periods
                )));
            }
        }
        Ok(())
    }

    pub fn from_section(sec: &Section) -> Result<Self> {
        let mut s = Scenario::default();
        for r in &sec.records {
            let ctx = at_line(r.line);
            r.only(&["periods", "dt", "elec_price", "steam_price", "mode"])
                .map_err(&ctx)?;
            if let Some(p) = r.get("periods") {
                s.periods = p
                    .value
                    .parse()
                    .map_err(|_| ctx(p.error("invalid period count")))?;
            }
            if let Some(v) = r.f64("dt").map_err(&ctx)? {
                s.dt = v;
            }
            if let Some(v) = r.list("elec_price").map_err(&ctx)? {
                s.elec_price = v;
            }
            if let Some(v) = r.list("steam_price").map_err(&ctx)? {
                s.steam_price = v;
            }
            if let Some(m) = r.get("mode") {
                s.mode = match m.value.as_str() {
                    "simulate" => Mode::Simulate,
                    "optimize" => Mode::Optimize,
                    _ => return Err(ctx(m.error("mode must be simulate or optimize"))),
                };
            }
        }
        Ok(s)
    }
}
