//! Continuous-time SI variant of the message-passing equations with
//! piecewise-constant spontaneous-activation rates, its adjoint system and
//! a softmax control update.
//!
//! State per edge `e = i -> j` is `theta_e`, per node the marginal `P_S^i`:
//!
//! ```text
//! d theta_e / dt = alpha_e (P_S^i / theta_{j->i} - theta_e)
//! d P_S^i / dt   = -nu_i P_S^i + P_S^i sum_{k -> i} (d theta_{k->i} / dt) / theta_{k->i}
//! ```
//!
//! which keeps `P_S^i = P_S^i(0) exp(-int nu_i) prod_k theta_{k->i}`. When
//! `j -> i` is absent the cavity quotient is `P_S^i` itself. Target times of
//! a [`crate::dmp::TargetSpec`] are read in the same time unit as the
//! horizon and must fall on the grid.

mod adjoint;
mod control;
mod forward;
mod optimize;

pub use adjoint::{backward_continuous, ContinuousAdjoint};
pub use control::{ContinuousControl, Scheme};
pub use forward::{integrate_forward, objective_continuous, ContinuousTrajectory};
pub use optimize::{
    optimize_continuous, update_controls_continuous, ContinuousConfig, ContinuousProblem, ContinuousReport,
};
