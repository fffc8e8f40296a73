//! Wet/dry spell, chain and inter-arrival time modelling of daily rainfall
//! with the Hurwitz-Lerch-Zeta family of discrete distributions.

pub mod cli;
pub mod diagnostics;
pub mod distributions;
pub mod error;
pub mod extraction;
pub mod gof;
pub mod inference;
pub mod methods;
pub mod rng;
pub mod sample;

pub use error::{Error, Result};
pub use sample::{Period, SpellSample, Variable};
