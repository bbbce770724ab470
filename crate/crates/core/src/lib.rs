pub mod calibration;
pub mod cli;
pub mod config;
pub mod env;
pub mod error;
pub mod eval;
pub mod hand;
pub mod learning;
pub mod plot;
pub mod seed;
pub mod selftest;
pub mod tactile;

pub use error::{Error, Result};
