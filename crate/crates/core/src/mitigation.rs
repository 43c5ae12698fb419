//! Closed-loop vaccination policies evaluated on sampled epidemics.
//!
//! Every replica starts from the same deterministic infected set. At each step
//! the policy picks `mu(t)` (feedback policies look at the realized state
//! first), then one stochastic step is drawn. Replica `r` uses the same
//! random stream under every policy, so policies are compared on common
//! random numbers.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dmp::{ControlSchedule, Sense, TargetSpec};
use crate::error::{Error, Result};
use crate::heuristics::{high_risk_scores, ranked_amounts};
use crate::network::{InitialCondition, SpreadingNetwork};
use crate::optim::{forward_backward_iterate, Mode, OptimizerConfig, ProblemSpec};
use crate::sim::{mc_step, EpidemicState, NodeState, ReplicaStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    /// Optimized once from the initial condition, no feedback.
    Planned,
    /// Unit vaccinations down the high-risk ranking.
    Greedy,
    /// Optimizes the next step only from the observed state.
    DmpGreedy,
    /// Optimizes all remaining steps from the observed state, commits the first.
    DmpOptimal,
}

impl Policy {
    pub const ALL: [Policy; 4] = [Policy::Planned, Policy::Greedy, Policy::DmpGreedy, Policy::DmpOptimal];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Planned => "planned",
            Policy::Greedy => "greedy",
            Policy::DmpGreedy => "dmp-greedy",
            Policy::DmpOptimal => "dmp-optimal",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown policy {s:?}")))
    }
}

#[derive(Debug, Clone)]
pub struct MitigationConfig {
    pub horizon: usize,
    /// Vaccination budget per step, `horizon` entries.
    pub budget: Vec<f64>,
    pub replicas: usize,
    pub seed: u64,
    /// Wall-clock cap for a single policy decision.
    pub decision_timeout: Option<Duration>,
    /// Settings of the optimizer calls made by the DMP-based policies.
    pub optimizer: OptimizerConfig,
}

impl MitigationConfig {
    pub fn new(horizon: usize, budget_per_step: f64, replicas: usize, seed: u64) -> Self {
        Self {
            horizon,
            budget: vec![budget_per_step; horizon],
            replicas,
            seed,
            decision_timeout: None,
            optimizer: OptimizerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyRun {
    pub policy: Policy,
    /// Infected count per replica at `t = 0..=horizon`.
    pub infected: Vec<Vec<usize>>,
    pub mean_infected: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Vaccination mass placed on susceptible nodes, per replica and step.
    pub spent: Vec<Vec<f64>>,
}

fn observed(state: &EpidemicState) -> InitialCondition {
    let triples = state
        .states
        .iter()
        .map(|s| match s {
            NodeState::S => [1.0, 0.0, 0.0],
            NodeState::I => [0.0, 1.0, 0.0],
            NodeState::R => [0.0, 0.0, 1.0],
        })
        .collect();
    InitialCondition::from_triples(triples).expect("point masses are normalized")
}

/// Vaccination schedule over `budget.len()` steps minimizing the expected
/// number infected at the last step, with the susceptibles of `state` as
/// the controllable set.
fn optimize_from(
    net: &SpreadingNetwork,
    state: &EpidemicState,
    budget: &[f64],
    config: &MitigationConfig,
) -> Result<ControlSchedule> {
    let n = net.node_count();
    let horizon = budget.len();
    let sus = state.susceptible();
    let mut c = ControlSchedule::zeros(n, horizon);
    if sus.is_empty() {
        return Ok(c);
    }
    let cap = sus.len() as f64;
    let budget: Vec<f64> = budget.iter().map(|b| b.min(cap)).collect();
    let mut mask = vec![false; n];
    for &i in &sus {
        mask[i] = true;
    }
    c.set_controllable(mask)?;
    if budget.iter().all(|&b| b <= 0.0) {
        return Ok(c);
    }
    let mut problem = ProblemSpec::new(
        net,
        observed(state),
        horizon,
        Mode::Vaccination,
        TargetSpec::total_spread(n, horizon, Sense::MinimizeInfected)?,
        budget,
    );
    problem.base = c;
    let mut opt = config.optimizer.clone();
    opt.time_limit = config.decision_timeout;
    Ok(forward_backward_iterate(&problem, &opt)?.schedule)
}

fn greedy_step(net: &SpreadingNetwork, state: &EpidemicState, budget: f64) -> Result<Vec<f64>> {
    let risk = high_risk_scores(state, net);
    let mut sus = state.susceptible();
    sus.sort_by(|&a, &b| risk[b].total_cmp(&risk[a]).then(a.cmp(&b)));
    ranked_amounts(net.node_count(), &sus, budget.min(sus.len() as f64))
}

fn run_replica(
    net: &SpreadingNetwork,
    infected: &[usize],
    policy: Policy,
    planned: Option<&ControlSchedule>,
    replica: usize,
    config: &MitigationConfig,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let n = net.node_count();
    let horizon = config.horizon;
    let mut stream = ReplicaStream::new(config.seed, replica as u64, net);
    let mut state = EpidemicState::with_infected(n, infected);
    let mut controls = ControlSchedule::zeros(n, horizon);
    let mut counts = vec![state.count(NodeState::I)];
    let mut spent = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let mu: Vec<f64> = match policy {
            Policy::Planned => planned.expect("planned schedule").mu_at(t).to_vec(),
            Policy::Greedy => greedy_step(net, &state, config.budget[t])?,
            Policy::DmpGreedy => optimize_from(net, &state, &config.budget[t..t + 1], config)?
                .mu_at(0)
                .to_vec(),
            Policy::DmpOptimal => optimize_from(net, &state, &config.budget[t..], config)?
                .mu_at(0)
                .to_vec(),
        };
        spent.push(
            (0..n)
                .filter(|&i| state.states[i] == NodeState::S)
                .map(|i| mu[i])
                .sum(),
        );
        controls.mu_at_mut(t).copy_from_slice(&mu);
        state = mc_step(&state, net, &controls, stream.at_step(t));
        counts.push(state.count(NodeState::I));
    }
    Ok((counts, spent))
}

/// Runs `policy` on `config.replicas` sampled epidemics started from the
/// infected set `infected`.
pub fn run_policy(
    net: &SpreadingNetwork,
    infected: &[usize],
    policy: Policy,
    config: &MitigationConfig,
) -> Result<PolicyRun> {
    let n = net.node_count();
    if let Some(&i) = infected.iter().find(|&&i| i >= n) {
        return Err(Error::Invalid(format!("infected node {i} outside 0..{n}")));
    }
    if config.budget.len() < config.horizon {
        return Err(Error::Invalid(format!(
            "budget has {} entries for horizon {}",
            config.budget.len(),
            config.horizon
        )));
    }
    if let Some(&b) = config.budget.iter().find(|&&b| !(b >= 0.0)) {
        return Err(Error::InfeasibleBudget {
            budget: b,
            lower: 0.0,
            upper: n as f64,
        });
    }
    if config.replicas == 0 {
        return Err(Error::Invalid("at least one replica is needed".into()));
    }
    let planned = match policy {
        Policy::Planned if config.horizon > 0 => Some(optimize_from(
            net,
            &EpidemicState::with_infected(n, infected),
            &config.budget[..config.horizon],
            config,
        )?),
        _ => None,
    };
    let results: Vec<(Vec<usize>, Vec<f64>)> = (0..config.replicas)
        .into_par_iter()
        .map(|r| run_replica(net, infected, policy, planned.as_ref(), r, config))
        .collect::<Result<_>>()?;
    let (infected_counts, spent): (Vec<_>, Vec<_>) = results.into_iter().unzip();

    let reps = config.replicas as f64;
    let mut mean_infected = Vec::with_capacity(config.horizon + 1);
    let mut stderr = Vec::with_capacity(config.horizon + 1);
    for t in 0..=config.horizon {
        let xs: Vec<f64> = infected_counts.iter().map(|c| c[t] as f64).collect();
        let m = xs.iter().sum::<f64>() / reps;
        let se = if config.replicas > 1 {
            let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (reps - 1.0);
            (var / reps).sqrt()
        } else {
            0.0
        };
        mean_infected.push(m);
        stderr.push(se);
    }
    Ok(PolicyRun {
        policy,
        infected: infected_counts,
        mean_infected,
        stderr,
        spent,
    })
}

/// CSV with columns `policy,t,mean_infected,stderr`.
pub fn write_policy_csv<W: Write>(runs: &[PolicyRun], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["policy", "t", "mean_infected", "stderr"])?;
    for run in runs {
        for (t, (m, se)) in run.mean_infected.iter().zip(&run.stderr).enumerate() {
            w.write_record([run.policy.name().to_string(), t.to_string(), m.to_string(), se.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::erdos_renyi;
    use crate::network::AlphaSampler;

    #[test]
    fn policy_names_round_trip() {
        for p in Policy::ALL {
            assert_eq!(p.name().parse::<Policy>().unwrap(), p);
            let json = serde_json::to_string(&p).unwrap();
            assert_eq!(json, format!("\"{}\"", p.name()));
        }
        assert!("optimal".parse::<Policy>().is_err());
    }

    #[test]
    fn single_edge_is_blocked() {
        let net = SpreadingNetwork::with_unlabeled(2, [(0, 1, 0.9)]).unwrap();
        let cfg = MitigationConfig::new(1, 1.0, 20, 3);
        for p in Policy::ALL {
            let run = run_policy(&net, &[0], p, &cfg).unwrap();
            assert_eq!(run.mean_infected, vec![1.0, 1.0], "{p}");
            assert!(run.spent.iter().all(|s| (s[0] - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn saturated_budget_freezes_infection() {
        let net = erdos_renyi(12, 0.4, AlphaSampler::Uniform { low: 0.3, high: 0.9 }, 1).unwrap();
        let cfg = MitigationConfig::new(4, 12.0, 10, 5);
        for p in Policy::ALL {
            let run = run_policy(&net, &[0, 5], p, &cfg).unwrap();
            assert!(run.mean_infected.iter().all(|&m| m == 2.0), "{p}: {:?}", run.mean_infected);
        }
    }

    #[test]
    fn csv_layout() {
        let run = PolicyRun {
            policy: Policy::Greedy,
            infected: vec![vec![1, 2]],
            mean_infected: vec![1.0, 2.0],
            stderr: vec![0.0, 0.5],
            spent: vec![vec![1.0]],
        };
        let mut buf = Vec::new();
        write_policy_csv(&[run], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "policy,t,mean_infected,stderr\ngreedy,0,1,0\ngreedy,1,2,0.5\n"
        );
    }
}
