use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::lexer::{at_line, Section};
use crate::topology::Topology;

/// Stream representation used by a node's mass-balance rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Paradigm {
    FractionsBased,
    #[default]
    ComponentFlows,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
pub enum AbstractionLevel {
    #[default]
    MassOnly,
    MassEnergyFixedH,
    MassEnergyLocalH,
}

impl AbstractionLevel {
    pub fn has_energy(self) -> bool {
        self != AbstractionLevel::MassOnly
    }
}

impl FromStr for Paradigm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flows" => Ok(Paradigm::ComponentFlows),
            "fractions" => Ok(Paradigm::FractionsBased),
            other => Err(Error::Plan(format!("unknown paradigm `{other}`"))),
        }
    }
}

impl fmt::Display for Paradigm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Paradigm::ComponentFlows => "flows",
            Paradigm::FractionsBased => "fractions",
        })
    }
}

impl FromStr for AbstractionLevel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mass" => Ok(AbstractionLevel::MassOnly),
            "energy-fixed" => Ok(AbstractionLevel::MassEnergyFixedH),
            "energy-local" => Ok(AbstractionLevel::MassEnergyLocalH),
            other => Err(Error::Plan(format!("unknown level `{other}`"))),
        }
    }
}

impl fmt::Display for AbstractionLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AbstractionLevel::MassOnly => "mass",
            AbstractionLevel::MassEnergyFixedH => "energy-fixed",
            AbstractionLevel::MassEnergyLocalH => "energy-local",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Override {
    pub node: String,
    /// `None` applies to every period.
    pub period: Option<usize>,
    pub level: Option<AbstractionLevel>,
    pub paradigm: Option<Paradigm>,
    /// Use the node's alternate data-driven model in this period.
    pub hybrid: bool,
}

/// Resolved treatment of one node in one period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeMode {
    pub level: AbstractionLevel,
    pub paradigm: Paradigm,
    pub hybrid: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AbstractionPlan {
    pub level: AbstractionLevel,
    pub paradigm: Paradigm,
    pub overrides: Vec<Override>,
    /// Emit fractions for every stream regardless of downstream demand.
    pub report_fractions: bool,
}

impl AbstractionPlan {
    pub fn uniform(level: AbstractionLevel, paradigm: Paradigm) -> Self {
        Self {
            level,
            paradigm,
            ..Default::default()
        }
    }

    pub fn with_override(
        mut self,
        node: &str,
        period: Option<usize>,
        level: Option<AbstractionLevel>,
        paradigm: Option<Paradigm>,
    ) -> Self {
        self.overrides.push(Override {
            node: node.to_string(),
            period,
            level,
            paradigm,
            hybrid: false,
        });
        self
    }

    pub fn with_hybrid(mut self, node: &str, period: usize) -> Self {
        self.overrides.push(Override {
            node: node.to_string(),
            period: Some(period),
            level: None,
            paradigm: None,
            hybrid: true,
        });
        self
    }

    /// Later overrides win over earlier ones.
    pub fn resolve(&self, node: &str, period: usize) -> NodeMode {
        let mut m = NodeMode {
            level: self.level,
            paradigm: self.paradigm,
            hybrid: false,
        };
        for o in &self.overrides {
            if o.node == node && o.period.is_none_or(|p| p == period) {
                if let Some(l) = o.level {
                    m.level = l;
                }
                if let Some(p) = o.paradigm {
                    m.paradigm = p;
                }
                m.hybrid |= o.hybrid;
            }
        }
        m
    }

    pub fn check(&self, t: &Topology, horizon: usize) -> Result<()> {
        for o in &self.overrides {
            if t.node(&o.node).is_none() {
                return Err(Error::Plan(format!(
                    "override references unknown node `{}`",
                    o.node
                )));
            }
            if let Some(p) = o.period {
                if p >= horizon {
                    return Err(Error::Plan(format!(
                        "override for `{}` references period {p} beyond horizon {horizon}",
                        o.node
                    )));
                }
            }
        }
        Ok(())
    }

    /// Reads a `[plan]` section: a record without `node` sets defaults,
    /// records with `node` add overrides.
    pub fn from_section(sec: &Section) -> Result<Self> {
        let mut plan = AbstractionPlan::default();
        for r in &sec.records {
            let ctx = at_line(r.line);
            r.only(&["node", "period", "level", "paradigm", "hybrid", "fractions"])
                .map_err(&ctx)?;
            let level = r.str("level").map(str::parse).transpose().map_err(&ctx)?;
            let paradigm = r
                .str("paradigm")
                .map(str::parse)
                .transpose()
                .map_err(&ctx)?;
            match r.str("node") {
                None => {
                    if let Some(l) = level {
                        plan.level = l;
                    }
                    if let Some(p) = paradigm {
                        plan.paradigm = p;
                    }
                    plan.report_fractions = r.flag("fractions").map_err(&ctx)?;
                }
                Some(node) => {
                    let period = match r.get("period") {
                        None => None,
                        Some(p) if p.value == "*" => None,
                        Some(p) => Some(
                            p.value
                                .parse::<usize>()
                                .map_err(|_| ctx(p.error("invalid period")))?,
                        ),
                    };
                    plan.overrides.push(Override {
                        node: node.to_string(),
                        period,
                        level,
                        paradigm,
                        hybrid: r.flag("hybrid").map_err(&ctx)?,
                    });
                }
            }
        }
        Ok(plan)
    }
}
