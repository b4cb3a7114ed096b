//! Retrodictive quantum optics: state engineering with linear multiports and
//! photodetection, and canonical phase measurement with a conditional
//! beam-splitter or multiport reference.
//!
//! The modules build on each other in order: [`fock`] states, the
//! [`pmcalc`] preparation/measurement calculus, [`multiport`] devices,
//! [`engineer`] state design, [`phase`] distributions, and the
//! [`experiments`] that tie them to detectors and simulated data.
//! [`analysis`] turns recorded probability tables into estimates and
//! [`presets`] names the standard scenarios.

pub mod analysis;
pub mod engineer;
pub mod error;
pub mod experiments;
pub mod fock;
pub mod multiport;
pub mod phase;
pub mod pmcalc;
pub mod presets;

#[doc(hidden)]
pub mod cli;

pub use error::{Error, Result};
