//! Queueing model of airport surface departures and the average-cost
//! control of pushback releases.

pub mod calibration;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod evaluator;
pub mod markov;
pub mod optimizer;
pub mod policies;
pub mod rng;
pub mod topology;

pub use error::{Error, Result};
