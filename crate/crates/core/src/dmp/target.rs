use serde::{Deserialize, Serialize};

use super::DmpTrajectory;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sense {
    MaximizeInfected,
    MinimizeInfected,
}

/// Nodes that should (or should not) be infected at given times.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    targets: Vec<(usize, usize)>,
    sense: Sense,
}

impl TargetSpec {
    /// `targets` holds `(node, time)` pairs with `time >= 1`.
    pub fn new(targets: Vec<(usize, usize)>, sense: Sense) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::Invalid("target set is empty".into()));
        }
        if let Some(&(i, _)) = targets.iter().find(|&&(_, t)| t == 0) {
            return Err(Error::Invalid(format!("target time of node {i} must be at least 1")));
        }
        Ok(Self { targets, sense })
    }

    /// Every node at time `horizon`.
    pub fn total_spread(n: usize, horizon: usize, sense: Sense) -> Result<Self> {
        Self::new((0..n).map(|i| (i, horizon)).collect(), sense)
    }

    pub fn targets(&self) -> &[(usize, usize)] {
        &self.targets
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn max_time(&self) -> usize {
        self.targets.iter().map(|t| t.1).max().unwrap_or(0)
    }

    /// `true` when `a` is a better objective value than `b` under this sense.
    pub fn improves(&self, a: f64, b: f64) -> bool {
        match self.sense {
            Sense::MaximizeInfected => a > b,
            Sense::MinimizeInfected => a < b,
        }
    }

    pub(crate) fn check(&self, n: usize, horizon: usize) -> Result<()> {
        for &(i, t) in &self.targets {
            if i >= n {
                return Err(Error::Invalid(format!("target node {i} outside 0..{n}")));
            }
            if t > horizon {
                return Err(Error::Invalid(format!(
                    "target time {t} of node {i} exceeds horizon {horizon}"
                )));
            }
        }
        Ok(())
    }
}

/// Sum of `P_I` over the targets at their required times.
pub fn objective_value(traj: &DmpTrajectory, target: &TargetSpec) -> Result<f64> {
    target.check(traj.node_count(), traj.horizon())?;
    Ok(target.targets.iter().map(|&(i, t)| traj.pi(i, t)).sum())
}
