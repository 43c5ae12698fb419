//! Seeding benchmark: every method places a budget of spontaneous
//! activation at `t = 0` and is scored by the normalized spread at the
//! horizon under the forward equations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dmp::{run_forward, ControlSchedule, Sense, TargetSpec};
use crate::error::{Error, Result};
use crate::heuristics::{allocate_random, allocate_ranked, allocate_uniform, kshell_order, rank_ci, rank_hda, rank_kshell};
use crate::network::{InitialCondition, SpreadingNetwork};
use crate::optim::{forward_backward_iterate, Mode, OptimizerConfig, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Random,
    Uniform,
    Hda,
    Kshell,
    /// Collective influence with the given ball radius.
    Ci(usize),
    Dmp,
}

impl Method {
    /// Default column order: random, hda, k-shell, CI_2, CI_4, uniform, dmp.
    pub const DEFAULTS: [Method; 7] = [
        Method::Random,
        Method::Hda,
        Method::Kshell,
        Method::Ci(2),
        Method::Ci(4),
        Method::Uniform,
        Method::Dmp,
    ];

    /// Parses a comma-separated list; fails on the first unknown entry.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(str::parse).collect()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Random => f.write_str("random"),
            Method::Uniform => f.write_str("uniform"),
            Method::Hda => f.write_str("hda"),
            Method::Kshell => f.write_str("kshell"),
            Method::Ci(l) => write!(f, "ci:{l}"),
            Method::Dmp => f.write_str("dmp"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Method::Random),
            "uniform" => Ok(Method::Uniform),
            "hda" => Ok(Method::Hda),
            "kshell" | "k-shell" => Ok(Method::Kshell),
            "dmp" => Ok(Method::Dmp),
            _ => match s.strip_prefix("ci:").map(str::parse::<usize>) {
                Some(Ok(l)) if l >= 1 => Ok(Method::Ci(l)),
                _ => Err(Error::Invalid(format!(
                    "unknown method {s:?} (expected random, uniform, hda, kshell, ci:L or dmp)"
                ))),
            },
        }
    }
}

/// Seeding instance shared by all methods.
#[derive(Debug, Clone)]
pub struct SeedingBenchmark<'a> {
    pub network: &'a SpreadingNetwork,
    pub budget: f64,
    pub horizon: usize,
    /// Seed of the random baseline.
    pub seed: u64,
    pub optimizer: OptimizerConfig,
}

impl<'a> SeedingBenchmark<'a> {
    pub fn new(network: &'a SpreadingNetwork, budget_fraction: f64, horizon: usize, seed: u64) -> Self {
        Self {
            network,
            budget: budget_fraction * network.node_count() as f64,
            horizon,
            seed,
            optimizer: OptimizerConfig::default(),
        }
    }

    fn needed(&self) -> usize {
        (self.budget.ceil() as usize).min(self.network.node_count())
    }

    /// The `t = 0` activation schedule chosen by `method`.
    pub fn allocate(&self, method: Method) -> Result<ControlSchedule> {
        let net = self.network;
        let nodes = |r: Vec<crate::heuristics::RankedNode>| r.into_iter().map(|x| x.node).collect::<Vec<_>>();
        match method {
            Method::Random => allocate_random(net, self.budget, self.seed),
            Method::Uniform => allocate_uniform(net, self.budget),
            Method::Hda => allocate_ranked(net, &nodes(rank_hda(net, self.needed())), self.budget),
            Method::Kshell => allocate_ranked(net, &nodes(kshell_order(&rank_kshell(net))), self.budget),
            Method::Ci(l) => allocate_ranked(net, &nodes(rank_ci(net, l, self.needed())?), self.budget),
            Method::Dmp => {
                let problem = self.problem()?;
                let report = forward_backward_iterate(&problem, &self.optimizer)?;
                Ok(report.schedule)
            }
        }
    }

    fn problem(&self) -> Result<ProblemSpec<'a>> {
        let n = self.network.node_count();
        Ok(ProblemSpec::new(
            self.network,
            InitialCondition::all_susceptible(n),
            self.horizon,
            Mode::Seeding,
            TargetSpec::total_spread(n, self.horizon, Sense::MaximizeInfected)?,
            vec![self.budget],
        ))
    }

    /// `sum_i (P_I + P_R)(T) / N` from an all-susceptible start.
    pub fn normalized_spread(&self, schedule: &ControlSchedule) -> Result<f64> {
        let n = self.network.node_count();
        let c = schedule.resized(self.horizon);
        let traj = run_forward(self.network, &InitialCondition::all_susceptible(n), &c, self.horizon)?;
        let total: f64 = (0..n).map(|i| traj.pi(i, self.horizon) + traj.pr(i, self.horizon)).sum();
        Ok(total / n as f64)
    }

    pub fn evaluate(&self, method: Method) -> Result<f64> {
        self.normalized_spread(&self.allocate(method)?)
    }
}
