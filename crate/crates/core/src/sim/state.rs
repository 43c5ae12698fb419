use crate::network::SpreadingNetwork;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum NodeState {
    S = 0,
    I = 1,
    R = 2,
}

/// One realization of the epidemic at time `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpidemicState {
    pub states: Vec<NodeState>,
    pub t: usize,
}

impl EpidemicState {
    pub fn all_susceptible(n: usize) -> Self {
        Self {
            states: vec![NodeState::S; n],
            t: 0,
        }
    }

    pub fn with_infected(n: usize, infected: &[usize]) -> Self {
        let mut s = Self::all_susceptible(n);
        for &i in infected {
            s.states[i] = NodeState::I;
        }
        s
    }

    pub fn count(&self, which: NodeState) -> usize {
        self.states.iter().filter(|&&s| s == which).count()
    }

    pub fn susceptible(&self) -> Vec<usize> {
        (0..self.states.len())
            .filter(|&i| self.states[i] == NodeState::S)
            .collect()
    }

    /// Probability that susceptible `i` is infected through its edges alone.
    pub fn edge_infection_risk(&self, net: &SpreadingNetwork, i: usize) -> f64 {
        if self.states[i] != NodeState::S {
            return 0.0;
        }
        let escape: f64 = net
            .in_edges(i)
            .iter()
            .filter(|&&e| self.states[net.src(e)] == NodeState::I)
            .map(|&e| 1.0 - net.alpha(e))
            .product();
        1.0 - escape
    }
}
