//! Linearized Gaussian model of a mechanical oscillator and a Λ-type atomic
//! ensemble coupled through an optical cavity under electromagnetically
//! induced transparency.

pub mod analytics;
pub mod config;
pub mod error;
pub mod experiments;
pub mod linsys;
pub mod metrics;
pub mod model;
pub mod response;
pub mod solver;

pub use error::{Error, Result};
