use super::Marginals;
use crate::dmp::ControlSchedule;
use crate::error::{Error, Result};
use crate::network::{InitialCondition, SpreadingNetwork};

/// Largest graph the dense oracle accepts (`3^12 = 531441` joint states).
pub const MAX_EXACT_NODES: usize = 12;

const S: u8 = 0;
const I: u8 = 1;

/// Evolves the full joint distribution over `{S, I, R}^N` and returns the
/// node marginals. States are base-3 integers with node `i` at digit `i`.
pub fn exact_marginals(
    net: &SpreadingNetwork,
    ic: &InitialCondition,
    controls: &ControlSchedule,
    horizon: usize,
) -> Result<Marginals> {
    let n = net.node_count();
    if n > MAX_EXACT_NODES {
        return Err(Error::TooLarge(format!(
            "exact oracle supports at most {MAX_EXACT_NODES} nodes, got {n}"
        )));
    }
    ic.check_size(n)?;
    if controls.horizon() < horizon {
        return Err(Error::Invalid(format!(
            "control schedule covers {} steps, horizon is {horizon}",
            controls.horizon()
        )));
    }
    let size = 3usize.pow(n as u32);
    let pow3: Vec<usize> = (0..n).map(|i| 3usize.pow(i as u32)).collect();

    let mut dist = vec![0.0f64; size];
    let mut digits = vec![0u8; n];
    for (x, slot) in dist.iter_mut().enumerate() {
        decode(x, &mut digits);
        *slot = digits
            .iter()
            .enumerate()
            .map(|(i, &d)| ic.triples()[i][d as usize])
            .product();
    }

    let mut probs = Vec::with_capacity(n * (horizon + 1));
    push_marginals(&dist, n, &mut probs);
    // Per susceptible node: (probability of staying S, of going to I, of going to R).
    let mut moves: Vec<(usize, [f64; 3])> = Vec::with_capacity(n);
    for t in 0..horizon {
        let mut next = vec![0.0f64; size];
        for (x, &p) in dist.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            decode(x, &mut digits);
            moves.clear();
            for i in 0..n {
                if digits[i] != S {
                    continue;
                }
                let (nu, mu) = (controls.nu(i, t), controls.mu(i, t));
                let escape: f64 = net
                    .in_edges(i)
                    .iter()
                    .filter(|&&e| digits[net.src(e)] == I)
                    .map(|&e| 1.0 - net.alpha(e))
                    .product::<f64>()
                    * (1.0 - nu);
                moves.push((i, [(1.0 - mu) * escape, (1.0 - mu) * (1.0 - escape), mu]));
            }
            spread(&mut next, x, p, &moves, &pow3);
        }
        dist = next;
        push_marginals(&dist, n, &mut probs);
    }
    Ok(Marginals::new(n, horizon, probs))
}

fn decode(mut x: usize, digits: &mut [u8]) {
    for d in digits.iter_mut() {
        *d = (x % 3) as u8;
        x /= 3;
    }
}

/// Distributes mass `p` of state `x` over all outcomes of the susceptible nodes.
fn spread(next: &mut [f64], x: usize, p: f64, moves: &[(usize, [f64; 3])], pow3: &[usize]) {
    match moves.split_first() {
        None => next[x] += p,
        Some((&(i, q), rest)) => {
            for (d, &qd) in q.iter().enumerate() {
                if qd != 0.0 {
                    spread(next, x + d * pow3[i], p * qd, rest, pow3);
                }
            }
        }
    }
}

fn push_marginals(dist: &[f64], n: usize, out: &mut Vec<[f64; 3]>) {
    let start = out.len();
    out.resize(start + n, [0.0; 3]);
    let mut digits = vec![0u8; n];
    for (x, &p) in dist.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        decode(x, &mut digits);
        for (i, &d) in digits.iter().enumerate() {
            out[start + i][d as usize] += p;
        }
    }
}
