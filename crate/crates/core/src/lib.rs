//! Plant models instantiated at several abstraction levels from one topology.

pub mod cases;
pub mod cli;
pub mod composite;
pub mod document;
pub mod error;
pub mod hen;
pub mod instantiation;
pub mod numfmt;
pub mod properties;
pub mod solvers;
pub mod topology;

pub use error::{Error, Result};
