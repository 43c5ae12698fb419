//! Discrete-time forward message passing for the generalized SIR model.
//!
//! Per directed edge `k -> i` the solver tracks `theta` (no activation passed
//! yet), `phi` (k infected and not yet passed activation) and the cavity
//! marginals of `k` with `i` held susceptible. Node marginals follow from the
//! full product of incoming `theta`. The recursion is exact on trees.

mod controls;
mod export;
mod target;
mod trajectory;

pub use controls::ControlSchedule;
pub use export::{write_edge_csv, write_node_csv};
pub use target::{objective_value, Sense, TargetSpec};
pub use trajectory::{run_forward, DmpTrajectory, EPS_NUM};
