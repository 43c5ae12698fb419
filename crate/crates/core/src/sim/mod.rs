//! Ground truth for the message-passing solver: seeded Monte-Carlo
//! realizations of the stochastic rules and an exact joint-distribution
//! oracle for small graphs.

mod exact;
mod mc;
mod state;

pub use exact::{exact_marginals, MAX_EXACT_NODES};
pub use mc::{mc_estimate_marginals, mc_step, write_mc_csv, McEstimate, ReplicaStream};
pub use state::{EpidemicState, NodeState};

/// Per-node, per-time state probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    n: usize,
    horizon: usize,
    probs: Vec<[f64; 3]>,
}

impl Marginals {
    pub(crate) fn new(n: usize, horizon: usize, probs: Vec<[f64; 3]>) -> Self {
        debug_assert_eq!(probs.len(), n * (horizon + 1));
        Self { n, horizon, probs }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn get(&self, i: usize, t: usize) -> [f64; 3] {
        self.probs[t * self.n + i]
    }

    pub fn ps(&self, i: usize, t: usize) -> f64 {
        self.get(i, t)[0]
    }

    pub fn pi(&self, i: usize, t: usize) -> f64 {
        self.get(i, t)[1]
    }

    pub fn pr(&self, i: usize, t: usize) -> f64 {
        self.get(i, t)[2]
    }
}
