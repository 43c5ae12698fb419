use std::collections::{BTreeSet, VecDeque};

use dmpopt::heuristics::{high_risk_scores, rank_ci, rank_hda, rank_kshell};
use dmpopt::network::{barabasi_albert, erdos_renyi, AlphaSampler, SpreadingNetwork};
use dmpopt::sim::{EpidemicState, NodeState};
use proptest::prelude::*;

fn adjacency(n: usize, edges: &BTreeSet<(usize, usize)>, alive: &[bool]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        if alive[a] && alive[b] {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    adj
}

fn pairs(net: &SpreadingNetwork) -> BTreeSet<(usize, usize)> {
    net.edges().map(|(s, d, _)| (s.min(d), s.max(d))).collect()
}

/// Degrees rebuilt from the edge set every round.
fn naive_hda(net: &SpreadingNetwork, k: usize) -> Vec<usize> {
    let n = net.node_count();
    let edges = pairs(net);
    let mut alive = vec![true; n];
    let mut out = vec![];
    for _ in 0..k.min(n) {
        let adj = adjacency(n, &edges, &alive);
        let best = (0..n)
            .filter(|&i| alive[i])
            .max_by_key(|&i| (adj[i].len(), std::cmp::Reverse(i)))
            .unwrap();
        alive[best] = false;
        out.push(best);
    }
    out
}

fn distances(adj: &[Vec<usize>], src: usize) -> Vec<Option<usize>> {
    let mut d = vec![None; adj.len()];
    d[src] = Some(0);
    let mut q = VecDeque::from([src]);
    while let Some(v) = q.pop_front() {
        for &u in &adj[v] {
            if d[u].is_none() {
                d[u] = Some(d[v].unwrap() + 1);
                q.push_back(u);
            }
        }
    }
    d
}

/// Every score recomputed by full BFS every round.
fn naive_ci(net: &SpreadingNetwork, l: usize, k: usize) -> Vec<(usize, u64)> {
    let n = net.node_count();
    let edges = pairs(net);
    let mut alive = vec![true; n];
    let mut out = vec![];
    for _ in 0..k.min(n) {
        let adj = adjacency(n, &edges, &alive);
        let ci = |i: usize| -> u64 {
            let di = adj[i].len() as u64;
            if di == 0 {
                return 0;
            }
            let d = distances(&adj, i);
            let s: u64 = (0..n)
                .filter(|&j| d[j] == Some(l))
                .map(|j| adj[j].len() as u64 - 1)
                .sum();
            (di - 1) * s
        };
        let best = (0..n)
            .filter(|&i| alive[i])
            .max_by_key(|&i| (ci(i), std::cmp::Reverse(i)))
            .unwrap();
        out.push((best, ci(best)));
        alive[best] = false;
    }
    out
}

/// Shell index as the largest k whose k-core (by repeated deletion) holds the node.
fn naive_shells(net: &SpreadingNetwork) -> Vec<usize> {
    let n = net.node_count();
    let edges = pairs(net);
    let mut shell = vec![0; n];
    for k in 1..n {
        let mut alive = vec![true; n];
        loop {
            let adj = adjacency(n, &edges, &alive);
            let drop: Vec<usize> = (0..n).filter(|&i| alive[i] && adj[i].len() < k).collect();
            if drop.is_empty() {
                break;
            }
            for i in drop {
                alive[i] = false;
            }
        }
        for i in 0..n {
            if alive[i] {
                shell[i] = k;
            }
        }
    }
    shell
}

fn graphs() -> Vec<SpreadingNetwork> {
    let mut out = vec![];
    for seed in 0..12u64 {
        let n = 10 + (seed as usize * 7) % 41;
        out.push(erdos_renyi(n, 4.0 / n as f64, AlphaSampler::Constant(0.5), seed).unwrap());
        out.push(barabasi_albert(n, 2, AlphaSampler::Constant(0.5), seed).unwrap());
    }
    out
}

#[test]
fn hda_matches_naive_recomputation() {
    for net in graphs() {
        let n = net.node_count();
        let fast: Vec<usize> = rank_hda(&net, n).iter().map(|r| r.node).collect();
        assert_eq!(fast, naive_hda(&net, n));
    }
    let net = erdos_renyi(20, 0.2, AlphaSampler::Constant(0.5), 99).unwrap();
    let fast: Vec<usize> = rank_hda(&net, 5).iter().map(|r| r.node).collect();
    assert_eq!(fast, naive_hda(&net, 5));
}

#[test]
fn ci_matches_naive_recomputation() {
    for (g, net) in graphs().into_iter().enumerate() {
        for l in 1..=3 {
            let k = net.node_count().min(15);
            let fast: Vec<(usize, u64)> = rank_ci(&net, l, k)
                .unwrap()
                .iter()
                .map(|r| (r.node, r.score as u64))
                .collect();
            assert_eq!(fast, naive_ci(&net, l, k), "graph {g}, l = {l}");
        }
    }
}

#[test]
fn kshell_satisfies_core_definition() {
    for net in graphs() {
        let shells = rank_kshell(&net);
        assert_eq!(shells, naive_shells(&net));
        let adj = net.undirected_neighbors();
        for (i, &s) in shells.iter().enumerate() {
            let inside = adj[i].iter().filter(|&&j| shells[j] >= s).count();
            assert!(inside >= s);
        }
    }
}

proptest! {
    #[test]
    fn risk_is_a_monotone_probability(
        seed in 0u64..1000,
        infected in proptest::collection::vec(any::<bool>(), 12),
        extra in 0usize..12,
        bump in 0.0f64..0.5,
    ) {
        let net = erdos_renyi(12, 0.3, AlphaSampler::Uniform { low: 0.0, high: 0.5 }, seed).unwrap();
        let ids: Vec<usize> = (0..12).filter(|&i| infected[i]).collect();
        let state = EpidemicState::with_infected(12, &ids);
        let base = high_risk_scores(&state, &net);
        for (i, &r) in base.iter().enumerate() {
            prop_assert!((0.0..=1.0).contains(&r));
            if state.states[i] != NodeState::S {
                prop_assert_eq!(r, 0.0);
            }
        }
        // Adding an infected node never lowers the risk of a node that stays susceptible.
        let mut more = ids.clone();
        more.push(extra);
        let grown = high_risk_scores(&EpidemicState::with_infected(12, &more), &net);
        for i in 0..12 {
            if i != extra && !infected[i] {
                prop_assert!(grown[i] >= base[i] - 1e-15);
            }
        }
        // Raising every coupling never lowers any risk.
        let raised = SpreadingNetwork::new(
            net.labels().to_vec(),
            net.edges().map(|(s, d, a)| (s, d, a + bump)),
        ).unwrap();
        let up = high_risk_scores(&state, &raised);
        for i in 0..12 {
            prop_assert!(up[i] >= base[i] - 1e-15);
        }
    }
}

#[test]
fn risk_examples() {
    let net = SpreadingNetwork::with_unlabeled(3, [(0, 2, 0.2), (1, 2, 0.5)]).unwrap();
    let none = high_risk_scores(&EpidemicState::all_susceptible(3), &net);
    assert_eq!(none, vec![0.0; 3]);
    let one = high_risk_scores(&EpidemicState::with_infected(3, &[0]), &net);
    assert!((one[2] - 0.2).abs() < 1e-15);
    let two = high_risk_scores(&EpidemicState::with_infected(3, &[0, 1]), &net);
    assert!((two[2] - 0.6).abs() < 1e-15);
}
