//! Adaptive degree (HDA), k-shell and collective-influence rankings on the
//! undirected view of a network.

use std::cmp::Reverse;
use std::collections::{BTreeSet, VecDeque};
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::SpreadingNetwork;

/// A selected node and the score it had when it was selected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankedNode {
    pub node: usize,
    pub score: f64,
}

/// Adaptive highest-degree ranking: pick the node of largest residual degree,
/// delete it, repeat. Returns at most `k` nodes.
pub fn rank_hda(net: &SpreadingNetwork, k: usize) -> Vec<RankedNode> {
    let adj = net.undirected_neighbors();
    let n = adj.len();
    let mut deg: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut alive = vec![true; n];
    let mut queue: BTreeSet<(Reverse<usize>, usize)> = (0..n).map(|i| (Reverse(deg[i]), i)).collect();
    let mut out = Vec::with_capacity(k.min(n));
    while out.len() < k {
        let Some((Reverse(d), v)) = queue.pop_first() else { break };
        alive[v] = false;
        out.push(RankedNode {
            node: v,
            score: d as f64,
        });
        for &u in &adj[v] {
            if alive[u] {
                queue.remove(&(Reverse(deg[u]), u));
                deg[u] -= 1;
                queue.insert((Reverse(deg[u]), u));
            }
        }
    }
    out
}

/// Shell index of every node by iterative peeling of the undirected view.
pub fn rank_kshell(net: &SpreadingNetwork) -> Vec<usize> {
    let adj = net.undirected_neighbors();
    let n = adj.len();
    let mut deg: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut removed = vec![false; n];
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|i| (deg[i], i)).collect();
    let mut shell = vec![0; n];
    let mut k = 0;
    while let Some((d, v)) = queue.pop_first() {
        k = k.max(d);
        shell[v] = k;
        removed[v] = true;
        for &u in &adj[v] {
            if !removed[u] {
                queue.remove(&(deg[u], u));
                deg[u] -= 1;
                queue.insert((deg[u], u));
            }
        }
    }
    shell
}

/// Nodes by descending shell index, ties by index.
pub fn kshell_order(shells: &[usize]) -> Vec<RankedNode> {
    let mut order: Vec<usize> = (0..shells.len()).collect();
    order.sort_by_key(|&i| (Reverse(shells[i]), i));
    order
        .into_iter()
        .map(|i| RankedNode {
            node: i,
            score: shells[i] as f64,
        })
        .collect()
}

/// Collective influence `(d_i - 1) * sum_{j at distance l} (d_j - 1)` of
/// `node` on the subgraph of `alive` nodes. Zero for removed nodes.
pub fn collective_influence(adj: &[Vec<usize>], alive: &[bool], node: usize, l: usize) -> u64 {
    if !alive[node] {
        return 0;
    }
    let degree = |v: usize| adj[v].iter().filter(|&&u| alive[u]).count() as u64;
    let d = degree(node);
    if d <= 1 {
        return 0;
    }
    let shell: u64 = within(adj, alive, node, l)
        .into_iter()
        .filter(|&(_, dist)| dist == l)
        .map(|(v, _)| degree(v).saturating_sub(1))
        .sum();
    (d - 1) * shell
}

/// Alive nodes at distance at most `radius` from `src`, with distances.
fn within(adj: &[Vec<usize>], alive: &[bool], src: usize, radius: usize) -> Vec<(usize, usize)> {
    let mut dist = std::collections::HashMap::new();
    dist.insert(src, 0usize);
    let mut order = vec![(src, 0)];
    let mut queue = VecDeque::from([src]);
    while let Some(v) = queue.pop_front() {
        let dv = dist[&v];
        if dv == radius {
            continue;
        }
        for &u in &adj[v] {
            if alive[u] && !dist.contains_key(&u) {
                dist.insert(u, dv + 1);
                order.push((u, dv + 1));
                queue.push_back(u);
            }
        }
    }
    order
}

/// Adaptive collective-influence ranking with ball radius `l`. After each
/// removal only nodes within `l + 1` of the removed node are rescored.
pub fn rank_ci(net: &SpreadingNetwork, l: usize, k: usize) -> Result<Vec<RankedNode>> {
    if l == 0 {
        return Err(Error::Invalid("collective influence radius must be at least 1".into()));
    }
    let adj = net.undirected_neighbors();
    let n = adj.len();
    let mut alive = vec![true; n];
    let mut score: Vec<u64> = (0..n)
        .into_par_iter()
        .map(|i| collective_influence(&adj, &alive, i, l))
        .collect();
    let mut queue: BTreeSet<(Reverse<u64>, usize)> = (0..n).map(|i| (Reverse(score[i]), i)).collect();
    let mut out = Vec::with_capacity(k.min(n));
    while out.len() < k {
        let Some((Reverse(s), v)) = queue.pop_first() else { break };
        let affected = within(&adj, &alive, v, l + 1);
        alive[v] = false;
        out.push(RankedNode {
            node: v,
            score: s as f64,
        });
        for (u, _) in affected {
            if u == v {
                continue;
            }
            let fresh = collective_influence(&adj, &alive, u, l);
            if fresh != score[u] {
                queue.remove(&(Reverse(score[u]), u));
                score[u] = fresh;
                queue.insert((Reverse(fresh), u));
            }
        }
    }
    Ok(out)
}

/// CSV with columns `rank,node_label,score`, rank starting at 1.
pub fn write_rankings_csv<W: Write>(net: &SpreadingNetwork, ranking: &[RankedNode], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rank", "node_label", "score"])?;
    for (r, item) in ranking.iter().enumerate() {
        w.write_record([
            (r + 1).to_string(),
            net.label(item.node).to_string(),
            item.score.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{cycle_graph, star_graph};

    fn two_level_star() -> SpreadingNetwork {
        // c = 0, hubs 1 and 2, leaves 3..=6.
        SpreadingNetwork::undirected(
            (0..7).map(|i| i.to_string()).collect(),
            [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6)]
                .into_iter()
                .map(|(a, b)| (a, b, 0.5)),
        )
        .unwrap()
    }

    #[test]
    fn hda_examples() {
        let star = star_graph(6, 0.5).unwrap();
        assert_eq!(rank_hda(&star, 1)[0].node, 0);
        // Stars of sizes 5 (center 5) and 3 (center 0).
        let pairs = [(0, 1), (0, 2), (5, 6), (5, 7), (5, 8), (5, 9)];
        let net = SpreadingNetwork::undirected(
            (0..10).map(|i| i.to_string()).collect(),
            pairs.into_iter().map(|(a, b)| (a, b, 0.5)),
        )
        .unwrap();
        let r: Vec<usize> = rank_hda(&net, 2).iter().map(|x| x.node).collect();
        assert_eq!(r, vec![5, 0]);
        assert_eq!(rank_hda(&net, 100).len(), 10);
    }

    #[test]
    fn kshell_examples() {
        assert!(rank_kshell(&cycle_graph(7, 0.5).unwrap()).iter().all(|&s| s == 2));
        assert!(rank_kshell(&star_graph(7, 0.5).unwrap()).iter().all(|&s| s == 1));
        let mut pairs: Vec<(usize, usize, f64)> = vec![];
        for i in 0..4 {
            for j in i + 1..4 {
                pairs.push((i, j, 0.5));
            }
        }
        pairs.push((3, 4, 0.5));
        let net = SpreadingNetwork::undirected((0..5).map(|i| i.to_string()).collect(), pairs).unwrap();
        assert_eq!(rank_kshell(&net), vec![3, 3, 3, 3, 1]);
        let order: Vec<usize> = kshell_order(&rank_kshell(&net)).iter().map(|r| r.node).collect();
        assert_eq!(order, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn ci_examples() {
        let net = two_level_star();
        let adj = net.undirected_neighbors();
        let alive = vec![true; 7];
        assert_eq!(collective_influence(&adj, &alive, 0, 1), 4);
        assert_eq!(collective_influence(&adj, &alive, 1, 2), 4);
        // Hub 1 at radius 1: neighbors are c (degree 2) and two leaves.
        assert_eq!(collective_influence(&adj, &alive, 1, 1), 2);
        // Leaves score zero at every radius.
        assert_eq!(collective_influence(&adj, &alive, 3, 2), 0);
        assert!(rank_ci(&net, 0, 1).is_err());
    }

    #[test]
    fn rankings_csv() {
        let net = star_graph(3, 0.5).unwrap();
        let mut buf = Vec::new();
        write_rankings_csv(&net, &rank_hda(&net, 2), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "rank,node_label,score\n1,0,2\n2,1,0\n");
    }
}
