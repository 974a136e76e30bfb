use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instantiation::{AbstractionLevel, AbstractionPlan, Paradigm};
use crate::topology::lexer::{at_line, Section};
use crate::topology::Topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StageSolver {
    Linear,
    Newton,
    Simplex,
    Slp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Refresh {
    #[default]
    None,
    Local,
    Rigorous,
}

impl FromStr for StageSolver {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "newton" => Ok(Self::Newton),
            "simplex" => Ok(Self::Simplex),
            "slp" => Ok(Self::Slp),
            other => Err(Error::Plan(format!("unknown solver `{other}`"))),
        }
    }
}

impl fmt::Display for StageSolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Linear => "linear",
            Self::Newton => "newton",
            Self::Simplex => "simplex",
            Self::Slp => "slp",
        })
    }
}

impl FromStr for Refresh {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "local" => Ok(Self::Local),
            "rigorous" => Ok(Self::Rigorous),
            other => Err(Error::Plan(format!("unknown refresh `{other}`"))),
        }
    }
}

impl fmt::Display for Refresh {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Local => "local",
            Self::Rigorous => "rigorous",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub plan: AbstractionPlan,
    pub solver: StageSolver,
    pub include_hen: bool,
    pub refresh: Refresh,
}

impl Stage {
    pub fn new(level: AbstractionLevel, solver: StageSolver) -> Self {
        Self {
            plan: AbstractionPlan::uniform(level, Paradigm::ComponentFlows),
            solver,
            include_hen: false,
            refresh: Refresh::None,
        }
    }

    pub fn with_refresh(mut self, r: Refresh) -> Self {
        self.refresh = r;
        self
    }

    pub fn with_hen(mut self) -> Self {
        self.include_hen = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeSchedule {
    pub stages: Vec<Stage>,
}

impl CascadeSchedule {
    pub fn new(stages: Vec<Stage>) -> Self {
        Self { stages }
    }

    /// The usual coarse-to-fine chain: fixed enthalpies, then local
    /// enthalpies, then the rigorous outer loop.
    pub fn standard() -> Self {
        Self::new(vec![
            Stage::new(AbstractionLevel::MassEnergyFixedH, StageSolver::Linear),
            Stage::new(AbstractionLevel::MassEnergyLocalH, StageSolver::Newton)
                .with_refresh(Refresh::Local),
            Stage::new(AbstractionLevel::MassEnergyLocalH, StageSolver::Newton)
                .with_refresh(Refresh::Rigorous),
        ])
    }

    pub fn check(&self, t: &Topology, horizon: usize) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::Plan("schedule has no stages".into()));
        }
        for (k, s) in self.stages.iter().enumerate() {
            s.plan.check(t, horizon)?;
            if s.refresh == Refresh::Rigorous {
                if let Some(p) = t.properties.iter().find(|p| p.correlation.is_none()) {
                    return Err(Error::Plan(format!(
                        "stage {k} refreshes rigorously but stream `{}` has no correlation",
                        p.stream
                    )));
                }
            }
        }
        Ok(())
    }

    /// One record per stage: `level=.. paradigm=.. solver=.. hen=true refresh=..`.
    pub fn from_section(sec: &Section) -> Result<Self> {
        let mut stages = Vec::new();
        for r in &sec.records {
            let ctx = at_line(r.line);
            r.only(&["level", "paradigm", "solver", "hen", "refresh"])
                .map_err(&ctx)?;
            let level: AbstractionLevel = r.str("level").unwrap_or("mass").parse().map_err(&ctx)?;
            let paradigm: Paradigm = r.str("paradigm").unwrap_or("flows").parse().map_err(&ctx)?;
            let solver = match r.str("solver") {
                Some(s) => s.parse().map_err(&ctx)?,
                None if level == AbstractionLevel::MassEnergyLocalH => StageSolver::Newton,
                None => StageSolver::Linear,
            };
            stages.push(Stage {
                plan: AbstractionPlan::uniform(level, paradigm),
                solver,
                include_hen: r.flag("hen").map_err(&ctx)?,
                refresh: r.str("refresh").unwrap_or("none").parse().map_err(&ctx)?,
            });
        }
        Ok(Self { stages })
    }
}
