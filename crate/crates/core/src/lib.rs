//! Simulation of thermal-light edge-enhancement ghost imaging of phase objects.
//!
//! A single pseudothermal speckle field illuminates two arms: a test arm
//! carrying a phase object and a reference arm carrying an OAM phase filter.
//! Intensity correlations between the two single-mode detectors reveal the
//! object's local OAM content, so stepping the object across the filter
//! produces an edge-enhanced image. The [`bell`] module combines rim
//! correlations of a disk object into a CHSH quantity.

pub mod bell;
pub mod config;
pub mod correlator;
pub mod error;
pub mod masks;
pub mod output;
pub mod run;
pub mod scan;
pub mod speckle;

pub use error::{Error, Result};
