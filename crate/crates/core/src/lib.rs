//! Continuation and bifurcation analysis of a Duffing oscillator with a
//! nonlinear tuned vibration absorber.

pub mod continuation;
pub mod error;
pub mod hbm;
pub mod model;
pub mod regions;
pub mod timedomain;
pub mod tracking;

pub use error::{Error, Result};
