//! A plant document: topology sections plus optional `[plan]`,
//! `[scenario]` and `[schedule]` sections.

use crate::composite::CascadeSchedule;
use crate::error::Result;
use crate::instantiation::{AbstractionPlan, Scenario};
use crate::topology::lexer::lex;
use crate::topology::{topology_from_sections, Topology};

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub topology: Topology,
    pub plan: Option<AbstractionPlan>,
    pub scenario: Option<Scenario>,
    pub schedule: Option<CascadeSchedule>,
}

impl Document {
    pub fn parse(text: &str) -> Result<Self> {
        let sections = lex(text)?;
        let topology = topology_from_sections(&sections)?;
        let find = |name: &str| sections.iter().find(|s| s.name == name);
        Ok(Self {
            topology,
            plan: find("plan")
                .map(AbstractionPlan::from_section)
                .transpose()?,
            scenario: find("scenario").map(Scenario::from_section).transpose()?,
            schedule: find("schedule")
                .map(CascadeSchedule::from_section)
                .transpose()?,
        })
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| crate::Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn plan_or_default(&self) -> AbstractionPlan {
        self.plan.clone().unwrap_or_default()
    }

    pub fn scenario_or_default(&self) -> Scenario {
        self.scenario.clone().unwrap_or_default()
    }
}

/// Reads just the `[plan]` section of a separate plan document.
pub fn parse_plan(text: &str) -> Result<AbstractionPlan> {
    let sections = lex(text)?;
    match sections.iter().find(|s| s.name == "plan") {
        Some(s) => AbstractionPlan::from_section(s),
        None => Ok(AbstractionPlan::default()),
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let sections = lex(text)?;
    match sections.iter().find(|s| s.name == "scenario") {
        Some(s) => Scenario::from_section(s),
        None => Ok(Scenario::default()),
    }
}

pub fn parse_schedule(text: &str) -> Result<CascadeSchedule> {
    let sections = lex(text)?;
    match sections.iter().find(|s| s.name == "schedule") {
        Some(s) => CascadeSchedule::from_section(s),
        None => Err(crate::Error::Plan(
            "document has no [schedule] section".into(),
        )),
    }
}
