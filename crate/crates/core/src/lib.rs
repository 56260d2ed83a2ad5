//! Simulation and analysis toolkit for organic-microcavity quantum batteries.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod commands;
pub mod config;
pub mod device;
pub mod dynamics;
pub mod electrical;
pub mod error;
pub mod fit;
pub mod integrator;
pub mod io;
pub mod observables;
pub mod oracle;
pub mod polariton;
pub mod units;
pub mod validate;

pub use error::{Error, Result};
