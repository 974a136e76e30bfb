//! The single plant representation from which every model is instantiated.

mod build;
pub mod lexer;
mod serialize;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::properties::StreamPropertyRecord;

pub use build::{parse_topology, topology_from_sections};
pub use serialize::serialize;
pub use validate::validate;

/// Name used for stream ends that leave the plant without a Source/Sink node.
pub const BOUNDARY: &str = "BOUNDARY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub id: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Endpoint {
    Boundary,
    Node(String),
}

impl Endpoint {
    pub fn node(&self) -> Option<&str> {
        match self {
            Endpoint::Boundary => None,
            Endpoint::Node(n) => Some(n),
        }
    }

    fn parse(s: &str) -> Self {
        if s == BOUNDARY {
            Endpoint::Boundary
        } else {
            Endpoint::Node(s.to_string())
        }
    }

    fn as_str(&self) -> &str {
        self.node().unwrap_or(BOUNDARY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamDef {
    pub id: String,
    pub source: Endpoint,
    pub sink: Endpoint,
    /// Reserved for sequential-modular tearing; the simultaneous solvers ignore it.
    pub tear: bool,
}

/// Which priced utility a node's duty draws on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Utility {
    #[default]
    None,
    Electric,
    Steam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PhaseChange {
    #[default]
    None,
    Vaporize,
    Condense,
}

/// One user-supplied linear row tying reactor outlet components:
/// `sum_j inlet[j] F_in,j + sum_j outlet[j] F_out,j = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactorRow {
    pub inlet: Vec<f64>,
    pub outlet: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactorParams {
    /// Index of the key product component.
    pub key: usize,
    /// Feed-composition coefficients, one per component.
    pub a: Vec<f64>,
    pub a_y: f64,
    pub a_t: f64,
    /// Fixed reactor temperature (K); `None` makes it a variable.
    pub t_fixed: Option<f64>,
    pub t_min: f64,
    pub t_max: f64,
    /// Heat of reaction released per unit feed mass (kJ/kg).
    pub q_rct: f64,
    /// Fixed duty used when the temperature is free (kW).
    pub duty: f64,
    pub rows: Vec<ReactorRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExchangerParams {
    pub q_base: f64,
    pub th_base: f64,
    pub tc_base: f64,
    pub fh_base: f64,
    pub fc_base: f64,
    pub ua: f64,
}

/// Outlet component flows as an affine map of inlet component flows and
/// node inputs: `F_out = G [F_in; u] + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataDrivenModel {
    pub gain: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    /// Nominal input values, used when inputs are not optimized.
    pub u: Vec<f64>,
    pub u_min: Vec<f64>,
    pub u_max: Vec<f64>,
}

impl DataDrivenModel {
    pub fn inputs(&self) -> usize {
        self.u.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NodeKind {
    Mixer,
    Splitter {
        fractions: Option<Vec<f64>>,
    },
    ComponentSeparator {
        /// `alpha[k][j]`: share of component `j` routed to outlet `k`.
        alpha: Vec<Vec<f64>>,
        /// Outlet temperatures when energy is modeled; defaults to each
        /// outlet's reference temperature.
        t_out: Option<Vec<f64>>,
    },
    LinearReactor(ReactorParams),
    HeatExchanger(ExchangerParams),
    HeaterCooler {
        duty: Option<f64>,
        q_min: Option<f64>,
        q_max: Option<f64>,
        t_out: Option<f64>,
        phase_change: PhaseChange,
    },
    Source {
        composition: Vec<f64>,
        flow: Option<f64>,
        f_min: f64,
        f_max: Option<f64>,
        price: Vec<f64>,
        temperature: Option<f64>,
    },
    Sink {
        price: Vec<f64>,
        f_min: f64,
        f_max: Option<f64>,
        demand: Option<Vec<f64>>,
    },
    Inventory {
        capacity: f64,
        initial: Vec<f64>,
        final_min: Option<f64>,
    },
    DataDrivenLinear(DataDrivenModel),
}

impl NodeKind {
    pub fn name(&self) -> &'static str {
        match self {
            NodeKind::Mixer => "Mixer",
            NodeKind::Splitter { .. } => "Splitter",
            NodeKind::ComponentSeparator { .. } => "ComponentSeparator",
            NodeKind::LinearReactor(_) => "LinearReactor",
            NodeKind::HeatExchanger(_) => "HeatExchanger",
            NodeKind::HeaterCooler { .. } => "HeaterCooler",
            NodeKind::Source { .. } => "Source",
            NodeKind::Sink { .. } => "Sink",
            NodeKind::Inventory { .. } => "Inventory",
            NodeKind::DataDrivenLinear(_) => "DataDrivenLinear",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDef {
    pub id: String,
    pub kind: NodeKind,
    pub inlets: Vec<String>,
    pub outlets: Vec<String>,
    pub utility: Utility,
    /// Alternate data-driven model, active in periods the plan marks hybrid.
    pub hybrid: Option<DataDrivenModel>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Topology {
    pub components: Vec<Component>,
    pub nodes: Vec<NodeDef>,
    pub streams: Vec<StreamDef>,
    pub properties: Vec<StreamPropertyRecord>,
}

impl Topology {
    pub fn component_index(&self, id: &str) -> Option<usize> {
        self.components.iter().position(|c| c.id == id)
    }

    pub fn node(&self, id: &str) -> Option<&NodeDef> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn stream(&self, id: &str) -> Option<&StreamDef> {
        self.streams.iter().find(|s| s.id == id)
    }

    pub fn stream_index(&self, id: &str) -> Option<usize> {
        self.streams.iter().position(|s| s.id == id)
    }

    pub fn property(&self, stream: &str) -> Option<&StreamPropertyRecord> {
        self.properties.iter().find(|p| p.stream == stream)
    }

    /// Node producing the stream, if any.
    pub fn producer(&self, stream: &str) -> Option<&NodeDef> {
        self.nodes
            .iter()
            .find(|n| n.outlets.iter().any(|s| s == stream))
    }

    /// Node consuming the stream, if any.
    pub fn consumer(&self, stream: &str) -> Option<&NodeDef> {
        self.nodes
            .iter()
            .find(|n| n.inlets.iter().any(|s| s == stream))
    }

    pub fn nc(&self) -> usize {
        self.components.len()
    }
}

/// A validation finding tied to a node or stream id and a rule name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub rule: String,
    pub subject: String,
    pub message: String,
    pub line: Option<usize>,
}

impl Diagnostic {
    pub fn new(rule: &str, subject: &str, message: impl Into<String>) -> Self {
        Self {
            rule: rule.to_string(),
            subject: subject.to_string(),
            message: message.into(),
            line: None,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        write!(f, "[{}] {}: {}", self.rule, self.subject, self.message)
    }
}
