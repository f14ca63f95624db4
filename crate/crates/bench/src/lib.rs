//! Shared fixtures for the criterion benches.

use std::sync::Arc;

use parest::harness::{lookup, ExperimentConfig};
use parest::{FeSpace, NodalField, SpatialOperators};

/// Operators of a uniform mesh on the unit interval.
pub fn operators(elements: usize, degree: usize) -> Arc<SpatialOperators> {
    let space = FeSpace::uniform(0.0, 1.0, elements, degree).expect("valid mesh");
    SpatialOperators::new(&space).expect("operators assemble")
}

pub fn sine(ops: &SpatialOperators) -> NodalField {
    NodalField::interpolate(ops.space(), |x| (std::f64::consts::PI * x).sin())
}

/// First row of a registered table.
pub fn table_row(name: &str) -> ExperimentConfig {
    let t = lookup(name).expect("registered table");
    t.row_config(&t.values[0]).expect("valid row")
}
