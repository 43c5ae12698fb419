//! Dynamic message-passing (DMP) marginals for a generalized SIR spreading
//! model and forward-backward optimal allocation of spontaneous-activation
//! and vaccination budgets.
//!
//! The crate is organized bottom-up:
//!
//! * [`network`]: weighted directed spreading networks, loaders, generators.
//! * [`dmp`]: the discrete-time forward message-passing solver.
//! * [`sim`]: Monte-Carlo simulation and the exact joint-distribution oracle.
//! * [`optim`]: adjoint backward sweeps, the budget multiplier solve and the
//!   forward-backward iteration.
//! * [`heuristics`]: topological baselines (HDA, k-shell, CI) and the
//!   high-risk score.
//! * [`mitigation`]: closed-loop vaccination policies on sampled epidemics.
//! * [`continuous`]: continuous-time SI variant with Euler-Lagrange adjoints.
//! * [`io`]: problem/report schemas, run manifests and dataset helpers.

pub mod benchmark;
pub mod cli;
pub mod continuous;
pub mod dmp;
pub mod error;
pub mod heuristics;
pub mod io;
pub mod mitigation;
pub mod network;
pub mod optim;
pub mod sim;

pub use error::{Error, Result};
pub use network::{InitialCondition, SpreadingNetwork};
