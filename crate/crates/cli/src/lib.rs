//! Command-line and HTTP front ends over `aev-core`.

pub mod api;
pub mod cli;
pub mod inputs;
pub mod manifest;
pub mod reports;
