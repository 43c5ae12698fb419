use serde::Serialize;

use super::adjoint::{backward_continuous, ContinuousAdjoint};
use super::control::{ContinuousControl, Scheme};
use super::forward::{grid_steps, integrate_forward, objective_continuous};
use crate::dmp::TargetSpec;
use crate::error::{Error, Result};
use crate::network::{InitialCondition, SpreadingNetwork};

/// Rescales `control` on every cell to `nu_i proportional to max(g_i, 0)`
/// over the controllable set, where `g` is the adjoint gradient. The sum of
/// rates on each cell equals the budget exactly.
pub fn update_controls_continuous(control: &ContinuousControl, adjoint: &ContinuousAdjoint) -> Result<ContinuousControl> {
    let w = control.controllable_nodes();
    if w.is_empty() {
        return Err(Error::Invalid("no controllable nodes".into()));
    }
    if adjoint.steps() < control.steps() {
        return Err(Error::Invalid(format!(
            "adjoint covers {} cells, control has {}",
            adjoint.steps(),
            control.steps()
        )));
    }
    let mut next = control.clone();
    for k in 0..control.steps() {
        let b = control.budget()[k];
        let g = adjoint.gradient_at(k);
        let weights: Vec<f64> = w.iter().map(|&i| g[i].max(0.0)).collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            if b > 0.0 {
                log::warn!("all update weights vanish on cell {k}; spreading the budget uniformly");
            }
            for &i in &w {
                next.set_nu(i, k, b / w.len() as f64);
            }
            continue;
        }
        for (&i, &x) in w.iter().zip(&weights) {
            next.set_nu(i, k, x / total * b);
        }
    }
    Ok(next)
}

/// Continuous-time targeting problem.
#[derive(Debug, Clone)]
pub struct ContinuousProblem {
    pub network: SpreadingNetwork,
    pub initial: InitialCondition,
    pub horizon: f64,
    pub dt: f64,
    pub target: TargetSpec,
    pub controllable: Vec<bool>,
    /// Budget `B_nu` per grid cell.
    pub budget: Vec<f64>,
}

impl ContinuousProblem {
    pub fn steps(&self) -> Result<usize> {
        grid_steps(self.horizon, self.dt)
    }

    fn validate(&self) -> Result<()> {
        let steps = self.steps()?;
        if self.budget.len() != steps {
            return Err(Error::Invalid(format!(
                "budget has {} cells, horizon {} with dt {} needs {steps}",
                self.budget.len(),
                self.horizon,
                self.dt
            )));
        }
        self.initial.check_size(self.network.node_count())?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousConfig {
    pub max_iters: usize,
    /// Stop once the largest rate change of an update drops below this.
    pub tol: f64,
    pub scheme: Scheme,
}

impl Default for ContinuousConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol: 1e-6,
            scheme: Scheme::Rk4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContinuousReport {
    /// Best control seen.
    pub control: ContinuousControl,
    /// Its objective `sum P_I(t_i)`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
}

#[derive(Serialize)]
struct TraceRow {
    iteration: usize,
    objective: f64,
}

impl ContinuousReport {
    pub fn trace_json(&self) -> Result<String> {
        let rows: Vec<TraceRow> = self
            .objective_trace
            .iter()
            .enumerate()
            .map(|(iteration, &objective)| TraceRow { iteration, objective })
            .collect();
        Ok(serde_json::to_string(&rows)?)
    }
}

/// Forward, backward and update sweeps from the uniform split, keeping the
/// best objective under the target's sense.
pub fn optimize_continuous(problem: &ContinuousProblem, config: &ContinuousConfig) -> Result<ContinuousReport> {
    problem.validate()?;
    let net = &problem.network;
    let mut control = ContinuousControl::uniform(
        net.node_count(),
        problem.dt,
        problem.controllable.clone(),
        problem.budget.clone(),
    )?;
    let mut best: Option<(f64, ContinuousControl)> = None;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iters {
        iterations += 1;
        let traj = integrate_forward(net, &problem.initial, &control, problem.horizon, config.scheme)?;
        let obj = objective_continuous(&traj, &problem.target)?;
        trace.push(obj);
        if best.as_ref().is_none_or(|(b, _)| problem.target.improves(obj, *b)) {
            best = Some((obj, control.clone()));
        }
        let adj = backward_continuous(net, &traj, &control, &problem.target, config.scheme)?;
        let next = update_controls_continuous(&control, &adj)?;
        let change = (0..control.steps())
            .flat_map(|k| (0..net.node_count()).map(move |i| (i, k)))
            .map(|(i, k)| (next.nu(i, k) - control.nu(i, k)).abs())
            .fold(0.0, f64::max);
        control = next;
        log::debug!("continuous iteration {iterations}: objective {obj:.6}, change {change:.3e}");
        if change < config.tol {
            converged = true;
            break;
        }
    }
    let (objective, control) = best.expect("at least one iteration runs");
    Ok(ContinuousReport {
        control,
        objective,
        iterations,
        converged,
        objective_trace: trace,
    })
}

#[cfg(all(test, not(feature = "printed-survival")))]
mod tests {
    use super::*;
    use crate::continuous::{backward_continuous, integrate_forward};
    use crate::dmp::Sense;

    fn star_problem(budget: f64) -> ContinuousProblem {
        let net = SpreadingNetwork::with_unlabeled(3, [(0, 1, 0.3), (0, 2, 0.3)]).unwrap();
        ContinuousProblem {
            network: net,
            initial: InitialCondition::all_susceptible(3),
            horizon: 1.0,
            dt: 0.05,
            target: TargetSpec::total_spread(3, 1, Sense::MaximizeInfected).unwrap(),
            controllable: vec![true; 3],
            budget: vec![budget; 20],
        }
    }

    #[test]
    fn single_controllable_node_takes_everything() {
        let p = star_problem(0.7);
        let mut mask = vec![false; 3];
        mask[1] = true;
        let c = ContinuousControl::uniform(3, p.dt, mask, p.budget.clone()).unwrap();
        let tr = integrate_forward(&p.network, &p.initial, &c, 1.0, Scheme::Rk4).unwrap();
        let adj = backward_continuous(&p.network, &tr, &c, &p.target, Scheme::Rk4).unwrap();
        let next = update_controls_continuous(&c, &adj).unwrap();
        for k in 0..20 {
            assert_eq!(next.nu(1, k), 0.7);
            assert_eq!(next.nu(0, k), 0.0);
        }
    }

    #[test]
    fn symmetric_leaves_split_evenly() {
        let p = star_problem(0.4);
        let c = ContinuousControl::uniform(3, p.dt, vec![false, true, true], p.budget.clone()).unwrap();
        let tr = integrate_forward(&p.network, &p.initial, &c, 1.0, Scheme::Rk4).unwrap();
        let adj = backward_continuous(&p.network, &tr, &c, &p.target, Scheme::Rk4).unwrap();
        let next = update_controls_continuous(&c, &adj).unwrap();
        for k in 0..20 {
            assert_eq!(next.nu(1, k), next.nu(2, k));
            assert!((next.nu(1, k) - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn hub_gets_the_budget() {
        let report = optimize_continuous(&star_problem(0.5), &ContinuousConfig::default()).unwrap();
        assert!(report.objective >= report.objective_trace[0]);
        assert!(report.control.nu(0, 0) > report.control.nu(1, 0));
        assert!(report.control.residuals().iter().all(|r| r.abs() < 1e-12));
    }
}
