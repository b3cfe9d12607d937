pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod gibbs;
pub mod models;
pub mod optimizer;
pub mod rng;
pub mod shared;
pub mod storage;
pub mod synth;

pub use error::{Error, Result};
