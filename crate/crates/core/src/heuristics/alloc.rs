use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dmp::ControlSchedule;
use crate::error::{Error, Result};
use crate::network::SpreadingNetwork;
use crate::sim::EpidemicState;

fn check_budget(n: usize, budget: f64) -> Result<()> {
    if !(budget >= 0.0 && budget <= n as f64) {
        return Err(Error::InfeasibleBudget {
            budget,
            lower: 0.0,
            upper: n as f64,
        });
    }
    Ok(())
}

/// Per-node amounts for a ranking: 1 for the first `floor(budget)` entries,
/// the remainder for the next one, 0 elsewhere.
pub fn ranked_amounts(n: usize, ranking: &[usize], budget: f64) -> Result<Vec<f64>> {
    check_budget(n, budget)?;
    let whole = budget.floor() as usize;
    let frac = budget - whole as f64;
    let needed = whole + usize::from(frac > 0.0);
    if ranking.len() < needed {
        return Err(Error::Invalid(format!(
            "ranking has {} nodes, budget {budget} needs {needed}",
            ranking.len()
        )));
    }
    let mut out = vec![0.0; n];
    for &i in &ranking[..whole] {
        out[i] = 1.0;
    }
    if frac > 0.0 {
        out[ranking[whole]] = frac;
    }
    Ok(out)
}

fn seeding_schedule(amounts: Vec<f64>) -> ControlSchedule {
    let mut c = ControlSchedule::zeros(amounts.len(), 1);
    c.nu_at_mut(0).copy_from_slice(&amounts);
    c
}

/// One-step seeding schedule from a node ranking.
pub fn allocate_ranked(net: &SpreadingNetwork, ranking: &[usize], budget: f64) -> Result<ControlSchedule> {
    ranked_amounts(net.node_count(), ranking, budget).map(seeding_schedule)
}

/// `floor(budget)` distinct random nodes at `nu(0) = 1` plus one more with the
/// remainder. Same seed, same nodes.
pub fn allocate_random(net: &SpreadingNetwork, budget: f64, seed: u64) -> Result<ControlSchedule> {
    let mut order: Vec<usize> = (0..net.node_count()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    allocate_ranked(net, &order, budget)
}

/// `nu_i(0) = budget / N` everywhere.
pub fn allocate_uniform(net: &SpreadingNetwork, budget: f64) -> Result<ControlSchedule> {
    let n = net.node_count();
    check_budget(n, budget)?;
    Ok(seeding_schedule(vec![budget / n as f64; n]))
}

/// Probability that each susceptible node is infected at the next step given
/// the realized state; zero for infected and recovered nodes.
pub fn high_risk_scores(state: &EpidemicState, net: &SpreadingNetwork) -> Vec<f64> {
    (0..net.node_count())
        .map(|i| state.edge_infection_risk(net, i))
        .collect()
}
