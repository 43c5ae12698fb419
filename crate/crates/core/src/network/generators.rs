//! Seeded synthetic graphs. Every generator returns an undirected network
//! (both directions present) with one alpha drawn per undirected pair.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{PassengerRecord, SpreadingNetwork};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaSampler {
    Constant(f64),
    /// Uniform on `[low, high)`.
    Uniform { low: f64, high: f64 },
}

impl AlphaSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            AlphaSampler::Constant(a) => a,
            AlphaSampler::Uniform { low, high } => low + (high - low) * rng.gen::<f64>(),
        }
    }
}

fn unlabeled(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

fn build(
    n: usize,
    pairs: Vec<(usize, usize)>,
    alpha: AlphaSampler,
    rng: &mut ChaCha8Rng,
) -> Result<SpreadingNetwork> {
    let triples: Vec<_> = pairs
        .into_iter()
        .map(|(a, b)| (a, b, alpha.sample(rng)))
        .collect();
    SpreadingNetwork::undirected(unlabeled(n), triples)
}

/// Uniform random labeled tree via Prüfer-sequence decoding.
pub fn generate_random_tree(n: usize, alpha: AlphaSampler, seed: u64) -> Result<SpreadingNetwork> {
    if n == 0 {
        return Err(Error::Invalid("tree needs at least one node".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(n.saturating_sub(1));
    if n == 2 {
        pairs.push((0, 1));
    } else if n > 2 {
        let code: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
        let mut degree = vec![1usize; n];
        for &c in &code {
            degree[c] += 1;
        }
        let mut leaves: BinaryHeap<Reverse<usize>> =
            (0..n).filter(|&i| degree[i] == 1).map(Reverse).collect();
        for &c in &code {
            let Reverse(leaf) = leaves.pop().expect("Prüfer decoding always has a leaf");
            pairs.push((leaf, c));
            degree[c] -= 1;
            if degree[c] == 1 {
                leaves.push(Reverse(c));
            }
        }
        let Reverse(u) = leaves.pop().unwrap();
        let Reverse(v) = leaves.pop().unwrap();
        pairs.push((u, v));
    }
    build(n, pairs, alpha, &mut rng)
}

pub fn star_graph(n: usize, alpha: f64) -> Result<SpreadingNetwork> {
    SpreadingNetwork::undirected(unlabeled(n), (1..n).map(|i| (0, i, alpha)))
}

pub fn path_graph(n: usize, alpha: f64) -> Result<SpreadingNetwork> {
    SpreadingNetwork::undirected(unlabeled(n), (1..n).map(|i| (i - 1, i, alpha)))
}

pub fn cycle_graph(n: usize, alpha: f64) -> Result<SpreadingNetwork> {
    if n < 3 {
        return Err(Error::Invalid("cycle needs at least three nodes".into()));
    }
    SpreadingNetwork::undirected(unlabeled(n), (0..n).map(|i| (i, (i + 1) % n, alpha)))
}

pub fn complete_graph(n: usize, alpha: f64) -> Result<SpreadingNetwork> {
    let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j, alpha)));
    SpreadingNetwork::undirected(unlabeled(n), pairs)
}

/// G(n, p) random graph.
pub fn erdos_renyi(n: usize, p: f64, alpha: AlphaSampler, seed: u64) -> Result<SpreadingNetwork> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < p {
                pairs.push((i, j));
            }
        }
    }
    build(n, pairs, alpha, &mut rng)
}

/// Preferential attachment: a clique on `m + 1` nodes, then every new node
/// links to `m` distinct existing nodes chosen proportionally to degree.
pub fn barabasi_albert(n: usize, m: usize, alpha: AlphaSampler, seed: u64) -> Result<SpreadingNetwork> {
    if m == 0 || n <= m {
        return Err(Error::Invalid(format!(
            "preferential attachment needs 0 < m < n (m = {m}, n = {n})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    let mut ends: Vec<usize> = Vec::new();
    for i in 0..=m {
        for j in i + 1..=m {
            pairs.push((i, j));
            ends.extend([i, j]);
        }
    }
    for v in m + 1..n {
        let mut chosen = BTreeSet::new();
        while chosen.len() < m {
            chosen.insert(ends[rng.gen_range(0..ends.len())]);
        }
        for u in chosen {
            pairs.push((u, v));
            ends.extend([u, v]);
        }
    }
    build(n, pairs, alpha, &mut rng)
}

/// Route table for `airports` hubs with Zipf-distributed sizes and
/// gravity-model traffic between every ordered pair, perturbed by
/// multiplicative noise. Hub `AP00` is the largest. Feed the result through
/// [`super::from_passenger_records`] to get a sparse flight-style network.
pub fn synthetic_flight_records(airports: usize, seed: u64) -> Vec<PassengerRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size: Vec<f64> = (0..airports).map(|i| 1.0 / ((i + 1) as f64).powf(0.55)).collect();
    let mut out = Vec::new();
    for i in 0..airports {
        for j in 0..airports {
            if i == j {
                continue;
            }
            let noise = (rng.gen::<f64>() * 2.0 - 1.0) * 0.6;
            let p = 2.0e6 * size[i] * size[j] * noise.exp();
            out.push(PassengerRecord::new(
                format!("AP{i:02}"),
                format!("AP{j:02}"),
                p.round() as u64,
            ));
        }
    }
    out
}

/// Union-find acyclicity and connectivity check of the undirected view.
pub fn is_tree(net: &SpreadingNetwork) -> bool {
    let n = net.node_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut seen = HashSet::new();
    let mut count = 0;
    for (s, d, _) in net.edges() {
        let key = (s.min(d), s.max(d));
        if !seen.insert(key) {
            continue;
        }
        let (a, b) = (root(&mut parent, s), root(&mut parent, d));
        if a == b {
            return false;
        }
        parent[a] = b;
        count += 1;
    }
    count + 1 == n
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tree_sizes_and_determinism() {
        let s = AlphaSampler::Uniform { low: 0.0, high: 1.0 };
        assert!(generate_random_tree(0, s, 1).is_err());
        assert_eq!(generate_random_tree(1, s, 1).unwrap().edge_count(), 0);
        let a = generate_random_tree(5, s, 42).unwrap();
        let b = generate_random_tree(5, s, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.undirected_edge_count(), 4);
        let big = generate_random_tree(100, s, 3).unwrap();
        assert_eq!(big.undirected_edge_count(), 99);
        assert!(is_tree(&big));
    }

    #[test]
    fn small_shapes() {
        assert_eq!(star_graph(5, 0.5).unwrap().edge_count(), 8);
        assert!(!is_tree(&cycle_graph(4, 0.5).unwrap()));
        assert!(is_tree(&path_graph(4, 0.5).unwrap()));
        assert_eq!(complete_graph(4, 0.5).unwrap().undirected_edge_count(), 6);
        let ba = barabasi_albert(50, 2, AlphaSampler::Constant(0.3), 9).unwrap();
        assert_eq!(ba.undirected_edge_count(), 3 + 2 * 47);
    }

    #[test]
    fn flight_records_shape() {
        let recs = synthetic_flight_records(61, 1);
        let net = super::super::from_passenger_records(&recs, 0.05, 0.1).unwrap();
        assert_eq!(net.node_count(), 61);
        let amax = net.max_alpha();
        let amin = net.alphas().iter().copied().fold(1.0, f64::min);
        assert_eq!(amin, 0.05);
        assert!(amax <= 0.5 + 1e-12, "{amax}");
        assert!((250..=550).contains(&net.edge_count()), "{}", net.edge_count());
        // The largest hub has the highest total out-traffic weight.
        let w = |i: usize| net.out_edges(i).iter().map(|&e| net.alpha(e)).sum::<f64>();
        let hub = net.node_by_label("AP00").unwrap();
        assert!((0..61).all(|i| w(i) <= w(hub)));
    }

    proptest! {
        #[test]
        fn random_trees_are_trees(n in 1usize..60, seed in any::<u64>()) {
            let t = generate_random_tree(n, AlphaSampler::Constant(0.5), seed).unwrap();
            prop_assert!(is_tree(&t));
            prop_assert!(t.check_consistency());
        }
    }
}
