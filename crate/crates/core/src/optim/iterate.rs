use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adjoint::{check_alpha, sweep};
use super::budget::solve_budget_multiplier;
use crate::dmp::{objective_value, run_forward, ControlSchedule, TargetSpec};
use crate::error::{Error, Result};
use crate::network::{InitialCondition, SpreadingNetwork};

/// Budget residual a schedule may carry and still count as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-8;
/// Entries this close to a bound (relative to the bound width) are pushed
/// onto it when the best iterate is refined.
const SNAP_FRACTION: f64 = 1e-2;
/// Barrier weight used to draw random interior starting schedules.
const RESTART_SPREAD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Spontaneous activation `nu` at every step.
    Targeting,
    /// Spontaneous activation `nu` at `t = 0` only.
    Seeding,
    /// Vaccination `mu` at every step.
    Vaccination,
}

impl Mode {
    fn uses_mu(self) -> bool {
        self == Mode::Vaccination
    }
}

/// A complete optimization instance.
#[derive(Debug, Clone)]
pub struct ProblemSpec<'a> {
    pub network: &'a SpreadingNetwork,
    pub initial: InitialCondition,
    pub horizon: usize,
    pub mode: Mode,
    pub target: TargetSpec,
    /// Budget per step (`horizon` entries). Seeding reads only the first.
    pub budget: Vec<f64>,
    /// Controllable set, per-entry bounds, and the fixed values of the
    /// quantity that is not optimized.
    pub base: ControlSchedule,
}

impl<'a> ProblemSpec<'a> {
    /// Problem with every node controllable, bounds `[0, 1]` and zero fixed controls.
    pub fn new(
        network: &'a SpreadingNetwork,
        initial: InitialCondition,
        horizon: usize,
        mode: Mode,
        target: TargetSpec,
        budget: Vec<f64>,
    ) -> Self {
        let base = ControlSchedule::zeros(network.node_count(), horizon);
        Self {
            network,
            initial,
            horizon,
            mode,
            target,
            budget,
            base,
        }
    }

    /// Steps whose controls are optimized.
    pub fn controlled_steps(&self) -> std::ops::Range<usize> {
        match self.mode {
            Mode::Seeding => 0..self.horizon.min(1),
            _ => 0..self.horizon,
        }
    }

    fn bounds(&self, i: usize, t: usize) -> (f64, f64) {
        if self.mode.uses_mu() {
            self.base.mu_bounds(i, t)
        } else {
            self.base.nu_bounds(i, t)
        }
    }

    fn value(&self, c: &ControlSchedule, i: usize, t: usize) -> f64 {
        if self.mode.uses_mu() {
            c.mu(i, t)
        } else {
            c.nu(i, t)
        }
    }

    fn set(&self, c: &mut ControlSchedule, i: usize, t: usize, v: f64) {
        if self.mode.uses_mu() {
            c.set_mu(i, t, v)
        } else {
            c.set_nu(i, t, v)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.network.node_count();
        self.initial.check_size(n)?;
        check_alpha(self.network)?;
        if self.base.node_count() != n || self.base.horizon() < self.horizon {
            return Err(Error::Invalid(format!(
                "base schedule must cover {n} nodes and {} steps",
                self.horizon
            )));
        }
        self.base.validate()?;
        self.target.check(n, self.horizon)?;
        if self.horizon == 0 {
            return Err(Error::Invalid("horizon must be at least 1".into()));
        }
        let needed = self.controlled_steps().end;
        if self.budget.len() < needed {
            return Err(Error::Invalid(format!(
                "budget has {} entries, {needed} steps are controlled",
                self.budget.len()
            )));
        }
        let w = self.base.controllable_nodes();
        if w.is_empty() {
            return Err(Error::Invalid("no controllable nodes".into()));
        }
        for t in self.controlled_steps() {
            let lower: f64 = w.iter().map(|&i| self.bounds(i, t).0).sum();
            let upper: f64 = w.iter().map(|&i| self.bounds(i, t).1).sum();
            let b = self.budget[t];
            if !(b >= lower - FEASIBILITY_TOL && b <= upper + FEASIBILITY_TOL) {
                return Err(Error::InfeasibleBudget {
                    budget: b,
                    lower,
                    upper,
                });
            }
        }
        Ok(())
    }

    /// `sum_W control(t) - B(t)` for every controlled step.
    pub fn residuals(&self, c: &ControlSchedule) -> Vec<f64> {
        let w = self.base.controllable_nodes();
        self.controlled_steps()
            .map(|t| w.iter().map(|&i| self.value(c, i, t)).sum::<f64>() - self.budget[t])
            .collect()
    }

    /// Budget met to [`FEASIBILITY_TOL`] and every entry within its bounds.
    pub fn is_feasible(&self, c: &ControlSchedule) -> bool {
        let w = self.base.controllable_nodes();
        self.residuals(c).iter().all(|r| r.abs() <= FEASIBILITY_TOL)
            && self.controlled_steps().all(|t| {
                w.iter().all(|&i| {
                    let (lo, hi) = self.bounds(i, t);
                    let v = self.value(c, i, t);
                    v >= lo && v <= hi
                })
            })
    }

    /// Expected number of infected targets under `c`.
    pub fn evaluate(&self, c: &ControlSchedule) -> Result<f64> {
        let traj = run_forward(self.network, &self.initial, c, self.horizon)?;
        objective_value(&traj, &self.target)
    }

    /// Budget split evenly over the controllable set at every controlled step.
    pub fn uniform_controls(&self) -> ControlSchedule {
        let mut c = self.base.clone();
        let w = self.base.controllable_nodes();
        for t in self.controlled_steps() {
            let v = self.budget[t] / w.len() as f64;
            for &i in &w {
                self.set(&mut c, i, t, v);
            }
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitScheme {
    Uniform,
    Schedule(ControlSchedule),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub epsilon_grid: Vec<f64>,
    pub max_iters: usize,
    /// Early stop when the max-norm control change falls below this.
    pub tol: f64,
    pub init: InitScheme,
    /// Random feasible starting schedules tried in addition to `init`.
    pub restarts: usize,
    /// Seed of the restart draws.
    pub seed: u64,
    /// Run the barrier weights and starts concurrently.
    pub parallel: bool,
    /// Wall-clock cap for the whole call; exceeding it is an error.
    pub time_limit: Option<Duration>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            epsilon_grid: vec![1e-2, 1e-3, 5e-4, 1e-4],
            max_iters: 200,
            tol: 1e-9,
            init: InitScheme::Uniform,
            restarts: 0,
            seed: 0,
            parallel: true,
            time_limit: None,
        }
    }
}

/// Outcome of one barrier weight.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonRun {
    pub epsilon: f64,
    /// 0 for the configured initial schedule, `k` for the k-th random restart.
    pub start: usize,
    /// Objective of the forward pass at each iteration (starting schedule first).
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub best: Option<(f64, ControlSchedule)>,
    /// Largest budget residual over all iterates after the first update.
    pub max_residual_after_update: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationReport {
    pub schedule: ControlSchedule,
    pub objective: f64,
    pub epsilon: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
    /// `sum_W control(t) - B(t)` of the returned schedule per controlled step.
    pub residuals: Vec<f64>,
    pub runs: Vec<EpsilonRun>,
    pub wall_time_s: f64,
}

/// One forward-backward run at a fixed barrier weight from the configured
/// initial schedule.
pub fn run_epsilon(problem: &ProblemSpec<'_>, eps: f64, config: &OptimizerConfig) -> Result<EpsilonRun> {
    let deadline = config.time_limit.map(|d| (Instant::now() + d, d));
    run_from(problem, eps, 0, initial_schedule(problem, config, 0)?, config, deadline)
}

fn initial_schedule(problem: &ProblemSpec<'_>, config: &OptimizerConfig, start: usize) -> Result<ControlSchedule> {
    if start > 0 {
        return random_start(problem, config.seed, start);
    }
    Ok(match &config.init {
        InitScheme::Uniform => problem.uniform_controls(),
        InitScheme::Schedule(c) => c.resized(problem.horizon),
    })
}

/// Feasible interior schedule from the budget solve with random sensitivities.
fn random_start(problem: &ProblemSpec<'_>, seed: u64, start: usize) -> Result<ControlSchedule> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(start as u64);
    let w = problem.base.controllable_nodes();
    let mut c = problem.base.clone();
    for t in problem.controlled_steps() {
        let psi: Vec<f64> = w.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let bounds: Vec<(f64, f64)> = w.iter().map(|&i| problem.bounds(i, t)).collect();
        let (_, xs) = solve_budget_multiplier(&psi, problem.budget[t], &bounds, RESTART_SPREAD)?;
        for (&i, &x) in w.iter().zip(&xs) {
            problem.set(&mut c, i, t, x);
        }
    }
    Ok(c)
}

/// Moves entries that sit next to a bound onto it and spreads the freed
/// budget over the interior entries in proportion to their room. Steps
/// where that is impossible are left unchanged.
fn snap_to_bounds(problem: &ProblemSpec<'_>, c: &ControlSchedule) -> ControlSchedule {
    let w = problem.base.controllable_nodes();
    let mut out = c.clone();
    for t in problem.controlled_steps() {
        let mut xs: Vec<f64> = w.iter().map(|&i| problem.value(c, i, t)).collect();
        let bounds: Vec<(f64, f64)> = w.iter().map(|&i| problem.bounds(i, t)).collect();
        let mut interior = Vec::new();
        for (k, x) in xs.iter_mut().enumerate() {
            let (lo, hi) = bounds[k];
            let near = SNAP_FRACTION * (hi - lo);
            if *x - lo <= near {
                *x = lo;
            } else if hi - *x <= near {
                *x = hi;
            } else {
                interior.push(k);
            }
        }
        let r = problem.budget[t] - xs.iter().sum::<f64>();
        let room: Vec<f64> = interior
            .iter()
            .map(|&k| if r > 0.0 { bounds[k].1 - xs[k] } else { xs[k] - bounds[k].0 })
            .collect();
        let total: f64 = room.iter().sum();
        if r.abs() > FEASIBILITY_TOL / 2.0 {
            if total < r.abs() {
                continue;
            }
            for (&k, &m) in interior.iter().zip(&room) {
                xs[k] += r * m / total;
            }
        }
        for (&i, &x) in w.iter().zip(&xs) {
            problem.set(&mut out, i, t, x);
        }
    }
    out
}

fn run_from(
    problem: &ProblemSpec<'_>,
    eps: f64,
    start: usize,
    mut controls: ControlSchedule,
    config: &OptimizerConfig,
    deadline: Option<(Instant, Duration)>,
) -> Result<EpsilonRun> {
    if !(eps > 0.0) {
        return Err(Error::Invalid(format!("barrier weight must be positive, got {eps}")));
    }
    let w = problem.base.controllable_nodes();
    let steps = problem.controlled_steps();
    let bounds: Vec<Vec<(f64, f64)>> = (0..problem.horizon)
        .map(|t| w.iter().map(|&i| problem.bounds(i, t)).collect())
        .collect();

    let mut run = EpsilonRun {
        epsilon: eps,
        start,
        trace: Vec::new(),
        iterations: 0,
        converged: false,
        best: None,
        max_residual_after_update: 0.0,
    };

    let consider = |run: &mut EpsilonRun, controls: &ControlSchedule, value: f64| {
        if !problem.is_feasible(controls) {
            return;
        }
        let better = match &run.best {
            None => true,
            Some((b, _)) => problem.target.improves(value, *b),
        };
        if better {
            run.best = Some((value, controls.clone()));
        }
    };

    for it in 0..config.max_iters {
        if let Some((at, d)) = deadline {
            if Instant::now() > at {
                return Err(Error::Timeout(d.as_secs_f64()));
            }
        }
        let traj = run_forward(problem.network, &problem.initial, &controls, problem.horizon)?;
        let value = objective_value(&traj, &problem.target)?;
        if !value.is_finite() {
            return Err(Error::NonFinite {
                iteration: it,
                what: "objective".into(),
            });
        }
        run.trace.push(value);
        consider(&mut run, &controls, value);

        let mut next = controls.clone();
        let mode = problem.mode;
        let mut update = |t: usize, gnu: &[f64], gmu: &[f64], c: &mut ControlSchedule| -> Result<Option<f64>> {
            if !steps.contains(&t) {
                return Ok(None);
            }
            let g = if mode.uses_mu() { gmu } else { gnu };
            let psi: Vec<f64> = w.iter().map(|&i| g[i]).collect();
            if psi.iter().any(|p| !p.is_finite()) {
                return Err(Error::NonFinite {
                    iteration: it,
                    what: format!("sensitivity at t = {t}"),
                });
            }
            let (lambda, xs) = solve_budget_multiplier(&psi, problem.budget[t], &bounds[t], eps)?;
            for (&i, &x) in w.iter().zip(&xs) {
                problem.set(c, i, t, x);
            }
            Ok(Some(lambda))
        };
        sweep(problem.network, &traj, &mut next, &problem.target, Some(&mut update))?;
        run.iterations = it + 1;

        let res = problem.residuals(&next);
        run.max_residual_after_update = res
            .iter()
            .fold(run.max_residual_after_update, |a, r| a.max(r.abs()));

        let change = steps
            .clone()
            .flat_map(|t| w.iter().map(move |&i| (i, t)))
            .map(|(i, t)| (problem.value(&next, i, t) - problem.value(&controls, i, t)).abs())
            .fold(0.0, f64::max);
        controls = next;
        if change < config.tol {
            run.converged = true;
            break;
        }
    }

    let value = problem.evaluate(&controls)?;
    run.trace.push(value);
    consider(&mut run, &controls, value);
    if let Some((_, best)) = &run.best {
        let snapped = snap_to_bounds(problem, best);
        let value = problem.evaluate(&snapped)?;
        consider(&mut run, &snapped, value);
    }
    Ok(run)
}

/// Alternates forward passes and backward sweeps with budget-constrained
/// control updates, over every starting schedule and barrier weight of the
/// grid, and returns the best feasible schedule by true forward objective.
/// Ties go to the earlier start, then the earlier grid entry.
pub fn forward_backward_iterate(problem: &ProblemSpec<'_>, config: &OptimizerConfig) -> Result<OptimizationReport> {
    let start = Instant::now();
    problem.validate()?;
    if config.epsilon_grid.is_empty() {
        return Err(Error::Invalid("empty barrier weight grid".into()));
    }
    let starts: Vec<ControlSchedule> = (0..=config.restarts)
        .map(|k| initial_schedule(problem, config, k))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, f64)> = (0..starts.len())
        .flat_map(|k| config.epsilon_grid.iter().map(move |&e| (k, e)))
        .collect();
    let deadline = config.time_limit.map(|d| (start + d, d));
    let job = |&(k, eps): &(usize, f64)| run_from(problem, eps, k, starts[k].clone(), config, deadline);
    let runs: Vec<EpsilonRun> = if config.parallel {
        jobs.par_iter().map(job).collect::<Result<_>>()?
    } else {
        jobs.iter().map(job).collect::<Result<_>>()?
    };

    let mut chosen: Option<usize> = None;
    for (k, r) in runs.iter().enumerate() {
        let Some((v, _)) = &r.best else { continue };
        let better = match chosen {
            None => true,
            Some(c) => problem.target.improves(*v, runs[c].best.as_ref().unwrap().0),
        };
        if better {
            chosen = Some(k);
        }
    }
    let k = chosen.ok_or_else(|| {
        Error::Invalid("no feasible schedule found for any barrier weight".into())
    })?;
    let (objective, schedule) = runs[k].best.clone().unwrap();
    Ok(OptimizationReport {
        residuals: problem.residuals(&schedule),
        schedule,
        objective,
        epsilon: runs[k].epsilon,
        iterations: runs[k].iterations,
        converged: runs[k].converged,
        objective_trace: runs[k].trace.clone(),
        runs,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
