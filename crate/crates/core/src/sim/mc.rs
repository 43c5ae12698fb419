use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{EpidemicState, Marginals, NodeState};
use crate::dmp::ControlSchedule;
use crate::error::{Error, Result};
use crate::network::{InitialCondition, SpreadingNetwork};

/// Counter-based random stream for one replica.
///
/// The stream of replica `r` under master seed `s` is ChaCha8 seeded with `s`
/// on stream id `r`. The initial-state draws occupy the first `n` uniforms;
/// step `t` starts at a fixed offset so that every step consumes the same
/// uniforms regardless of what happened earlier. Policies that share a
/// replica index therefore see common random numbers.
#[derive(Debug, Clone)]
pub struct ReplicaStream {
    rng: ChaCha8Rng,
    n: u128,
    per_step: u128,
}

impl ReplicaStream {
    pub fn new(master_seed: u64, replica: u64, net: &SpreadingNetwork) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(replica);
        let n = net.node_count() as u128;
        // Each f64 consumes two 32-bit words.
        let per_step = 2 * (2 * n + net.edge_count() as u128);
        Self { rng, n, per_step }
    }

    pub fn at_initial(&mut self) -> &mut ChaCha8Rng {
        self.rng.set_word_pos(0);
        &mut self.rng
    }

    pub fn at_step(&mut self, t: usize) -> &mut ChaCha8Rng {
        self.rng.set_word_pos(2 * self.n + t as u128 * self.per_step);
        &mut self.rng
    }

    /// Samples the initial state from the product measure.
    pub fn initial_state(&mut self, ic: &InitialCondition) -> EpidemicState {
        let rng = self.at_initial();
        let states = (0..ic.len())
            .map(|i| {
                let u: f64 = rng.gen();
                if u < ic.ps(i) {
                    NodeState::S
                } else if u < ic.ps(i) + ic.pi(i) {
                    NodeState::I
                } else {
                    NodeState::R
                }
            })
            .collect();
        EpidemicState { states, t: 0 }
    }
}

/// Advances one synchronous step using the controls at `state.t`.
///
/// Draw order is fixed: for every node in index order one uniform for `nu`,
/// one for `mu`, then one per in-edge. All draws happen whatever the node
/// state is. A susceptible node that is both vaccinated and infected in the
/// same step ends up recovered.
pub fn mc_step<R: Rng + ?Sized>(
    state: &EpidemicState,
    net: &SpreadingNetwork,
    controls: &ControlSchedule,
    rng: &mut R,
) -> EpidemicState {
    let t = state.t;
    let mut next = state.states.clone();
    for i in 0..net.node_count() {
        let u_nu: f64 = rng.gen();
        let u_mu: f64 = rng.gen();
        let mut infected = u_nu < controls.nu(i, t);
        for &e in net.in_edges(i) {
            let u: f64 = rng.gen();
            if u < net.alpha(e) && state.states[net.src(e)] == NodeState::I {
                infected = true;
            }
        }
        if state.states[i] == NodeState::S {
            if u_mu < controls.mu(i, t) {
                next[i] = NodeState::R;
            } else if infected {
                next[i] = NodeState::I;
            }
        }
    }
    EpidemicState {
        states: next,
        t: t + 1,
    }
}

/// Monte-Carlo marginals with binomial standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub marginals: Marginals,
    pub replicas: usize,
}

impl McEstimate {
    /// `sqrt(p (1 - p) / replicas)` for state index 0 = S, 1 = I, 2 = R.
    pub fn stderr(&self, i: usize, t: usize, state: NodeState) -> f64 {
        let p = self.marginals.get(i, t)[state as usize];
        (p * (1.0 - p) / self.replicas as f64).sqrt()
    }
}

/// Runs `replicas` independent realizations in parallel. Results depend only
/// on `seed` and `replicas`, never on the number of worker threads.
pub fn mc_estimate_marginals(
    net: &SpreadingNetwork,
    ic: &InitialCondition,
    controls: &ControlSchedule,
    horizon: usize,
    replicas: usize,
    seed: u64,
) -> Result<McEstimate> {
    if replicas == 0 {
        return Err(Error::Invalid("need at least one replica".into()));
    }
    ic.check_size(net.node_count())?;
    if controls.horizon() < horizon {
        return Err(Error::Invalid(format!(
            "control schedule covers {} steps, horizon is {horizon}",
            controls.horizon()
        )));
    }
    let n = net.node_count();
    let slots = n * (horizon + 1) * 3;
    let counts = (0..replicas as u64)
        .into_par_iter()
        .fold(
            || vec![0u64; slots],
            |mut acc, r| {
                let mut stream = ReplicaStream::new(seed, r, net);
                let mut state = stream.initial_state(ic);
                tally(&mut acc, &state, 0, n);
                for t in 0..horizon {
                    state = mc_step(&state, net, controls, stream.at_step(t));
                    tally(&mut acc, &state, t + 1, n);
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; slots],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let total = replicas as f64;
    let probs = counts
        .chunks_exact(3)
        .map(|c| [c[0] as f64 / total, c[1] as f64 / total, c[2] as f64 / total])
        .collect();
    Ok(McEstimate {
        marginals: Marginals::new(n, horizon, probs),
        replicas,
    })
}

fn tally(acc: &mut [u64], state: &EpidemicState, t: usize, n: usize) {
    for (i, &s) in state.states.iter().enumerate() {
        acc[(t * n + i) * 3 + s as usize] += 1;
    }
}

/// CSV `node,t,P_S,P_I,P_R,stderr` where `stderr` refers to `P_I`.
pub fn write_mc_csv<W: Write>(net: &SpreadingNetwork, est: &McEstimate, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "t", "P_S", "P_I", "P_R", "stderr"])?;
    let m = &est.marginals;
    for t in 0..=m.horizon() {
        for i in 0..m.node_count() {
            let p = m.get(i, t);
            w.write_record([
                net.label(i).to_string(),
                t.to_string(),
                p[0].to_string(),
                p[1].to_string(),
                p[2].to_string(),
                est.stderr(i, t, NodeState::I).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
