//! Configuration-driven front end for `fracfield`: simulations, sweeps,
//! reports and the verification suites.
//!
//! Exit statuses: 0 completed, 1 failure (including a failed suite),
//! 2 configuration or argument error, 3 blow-up, 4 seam violation.

pub mod commands;
pub mod config;
pub mod experiment;
pub mod sweep;
pub mod verify;
