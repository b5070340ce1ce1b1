//! Command-line and HTTP front ends for the `mirstat` engine.

pub mod cli;
pub mod http;
