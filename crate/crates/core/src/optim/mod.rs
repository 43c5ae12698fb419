//! Forward-backward optimal allocation of activation and vaccination budgets.

mod adjoint;
mod budget;
mod iterate;
mod landscape;

pub use adjoint::{
    backward_sweep, backward_sweep_targeting, backward_sweep_vaccination, AdjointTrajectory,
};
pub use budget::{barrier_root, solve_budget_multiplier, BUDGET_TOL};
pub use iterate::{
    forward_backward_iterate, run_epsilon, EpsilonRun, InitScheme, Mode, OptimizationReport,
    OptimizerConfig, ProblemSpec, FEASIBILITY_TOL,
};
pub use landscape::{objective_landscape, Landscape, LandscapePoint};
