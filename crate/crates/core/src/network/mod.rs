//! Directed weighted spreading networks.
//!
//! Nodes are dense indices `0..n` with optional string labels. Each directed
//! edge `k -> i` carries a transmission probability `alpha`. Edges are stored
//! in flat arrays indexed by an edge id (the insertion order), with CSR-style
//! in/out adjacency slices. Message arrays elsewhere in the crate are indexed
//! by the same edge id.

mod generators;
mod io;
mod passengers;

pub use generators::{
    barabasi_albert, complete_graph, cycle_graph, erdos_renyi, generate_random_tree, is_tree, path_graph,
    star_graph, synthetic_flight_records, AlphaSampler,
};
pub use io::{load_edge_list, write_edge_list, EdgeListDialect, NetworkJson};
pub use passengers::{from_passenger_records, read_passenger_csv, PassengerRecord};

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SpreadingNetwork {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    src: Vec<usize>,
    dst: Vec<usize>,
    alpha: Vec<f64>,
    in_offsets: Vec<usize>,
    in_list: Vec<usize>,
    out_offsets: Vec<usize>,
    out_list: Vec<usize>,
    reverse: Vec<Option<usize>>,
    in_pos: Vec<usize>,
}

impl SpreadingNetwork {
    /// Builds a validated network from labels and `(src, dst, alpha)` triples.
    ///
    /// Rejects self-loops, duplicate ordered pairs, indices out of range and
    /// `alpha` outside `[0, 1]`.
    pub fn new<I>(labels: Vec<String>, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let n = labels.len();
        if n == 0 {
            return Err(Error::Invalid("network needs at least one node".into()));
        }
        let mut index = HashMap::with_capacity(n);
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::Invalid(format!("duplicate node label {l:?}")));
            }
        }

        let mut src = Vec::new();
        let mut dst = Vec::new();
        let mut alpha = Vec::new();
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        for (s, d, a) in edges {
            if s >= n || d >= n {
                return Err(Error::Invalid(format!(
                    "edge ({s}, {d}) references a node outside 0..{n}"
                )));
            }
            if s == d {
                return Err(Error::SelfLoop(labels[s].clone()));
            }
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::AlphaOutOfRange {
                    src: labels[s].clone(),
                    dst: labels[d].clone(),
                    alpha: a,
                });
            }
            if seen.insert((s, d), src.len()).is_some() {
                return Err(Error::DuplicateEdge {
                    src: labels[s].clone(),
                    dst: labels[d].clone(),
                });
            }
            src.push(s);
            dst.push(d);
            alpha.push(a);
        }

        let (in_offsets, in_list) = csr(n, &dst);
        let (out_offsets, out_list) = csr(n, &src);
        let reverse = (0..src.len())
            .map(|e| seen.get(&(dst[e], src[e])).copied())
            .collect();

        let mut in_pos = vec![0; src.len()];
        for i in 0..n {
            for (j, &e) in in_list[in_offsets[i]..in_offsets[i + 1]].iter().enumerate() {
                in_pos[e] = j;
            }
        }

        Ok(Self {
            labels,
            index,
            src,
            dst,
            alpha,
            in_offsets,
            in_list,
            out_offsets,
            out_list,
            reverse,
            in_pos,
        })
    }

    /// Network with labels `"0"`, `"1"`, ... .
    pub fn with_unlabeled<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        Self::new((0..n).map(|i| i.to_string()).collect(), edges)
    }

    /// Undirected construction: every pair becomes two directed edges with equal alpha.
    pub fn undirected<I>(labels: Vec<String>, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let edges: Vec<_> = pairs
            .into_iter()
            .flat_map(|(a, b, w)| [(a, b, w), (b, a, w)])
            .collect();
        Self::new(labels, edges)
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.src.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> &str {
        &self.labels[node]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn node_by_label(&self, label: &str) -> Result<usize> {
        self.index_of(label)
            .ok_or_else(|| Error::UnknownNode(label.to_string()))
    }

    #[inline]
    pub fn src(&self, e: usize) -> usize {
        self.src[e]
    }

    #[inline]
    pub fn dst(&self, e: usize) -> usize {
        self.dst[e]
    }

    #[inline]
    pub fn alpha(&self, e: usize) -> f64 {
        self.alpha[e]
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alpha
    }

    /// Ids of edges `k -> node`.
    #[inline]
    pub fn in_edges(&self, node: usize) -> &[usize] {
        &self.in_list[self.in_offsets[node]..self.in_offsets[node + 1]]
    }

    /// Ids of edges `node -> l`.
    #[inline]
    pub fn out_edges(&self, node: usize) -> &[usize] {
        &self.out_list[self.out_offsets[node]..self.out_offsets[node + 1]]
    }

    /// Id of the edge `i -> k` for `e = k -> i`, when present.
    #[inline]
    pub fn reverse(&self, e: usize) -> Option<usize> {
        self.reverse[e]
    }

    /// Position of `e` inside `in_edges(dst(e))`.
    #[inline]
    pub fn in_position(&self, e: usize) -> usize {
        self.in_pos[e]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.edge_count()).map(move |e| (self.src[e], self.dst[e], self.alpha[e]))
    }

    pub fn max_alpha(&self) -> f64 {
        self.alpha.iter().copied().fold(0.0, f64::max)
    }

    /// Same topology with every alpha replaced.
    pub fn with_uniform_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(
            self.labels.clone(),
            self.edges().map(|(s, d, _)| (s, d, alpha)),
        )
    }

    /// Sorted, deduplicated neighbor lists of the undirected view: `i ~ j`
    /// whenever either `i -> j` or `j -> i` exists.
    pub fn undirected_neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count()];
        for (s, d, _) in self.edges() {
            adj[s].push(d);
            adj[d].push(s);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    /// Number of undirected pairs in [`Self::undirected_neighbors`].
    pub fn undirected_edge_count(&self) -> usize {
        self.undirected_neighbors().iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Checks that the adjacency slices are consistent with the edge arrays.
    pub fn check_consistency(&self) -> bool {
        let mut from_in = HashSet::new();
        let mut from_out = HashSet::new();
        for i in 0..self.node_count() {
            for &e in self.in_edges(i) {
                if self.dst[e] != i {
                    return false;
                }
                from_in.insert(e);
            }
            for &e in self.out_edges(i) {
                if self.src[e] != i {
                    return false;
                }
                from_out.insert(e);
            }
        }
        let all = self.edge_count();
        (0..all).all(|e| self.in_edges(self.dst[e])[self.in_pos[e]] == e)
            && from_in.len() == all
            && from_out.len() == all
            && (0..all).all(|e| match self.reverse[e] {
                Some(r) => self.src[r] == self.dst[e] && self.dst[r] == self.src[e],
                None => true,
            })
    }
}

fn csr(n: usize, key: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut offsets = vec![0usize; n + 1];
    for &k in key {
        offsets[k + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut list = vec![0usize; key.len()];
    for (e, &k) in key.iter().enumerate() {
        list[fill[k]] = e;
        fill[k] += 1;
    }
    (offsets, list)
}

/// Per-node `(P_S(0), P_I(0), P_R(0))`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialCondition {
    probs: Vec<[f64; 3]>,
}

impl InitialCondition {
    pub fn from_triples(probs: Vec<[f64; 3]>) -> Result<Self> {
        for (i, p) in probs.iter().enumerate() {
            if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Invalid(format!(
                    "initial probabilities of node {i} outside [0, 1]: {p:?}"
                )));
            }
            if (p[0] + p[1] + p[2] - 1.0).abs() > 1e-12 {
                return Err(Error::Invalid(format!(
                    "initial probabilities of node {i} do not sum to 1: {p:?}"
                )));
            }
        }
        Ok(Self { probs })
    }

    pub fn all_susceptible(n: usize) -> Self {
        Self {
            probs: vec![[1.0, 0.0, 0.0]; n],
        }
    }

    /// Deterministic start with the given infected nodes, everything else susceptible.
    pub fn with_infected(n: usize, infected: &[usize]) -> Result<Self> {
        let mut ic = Self::all_susceptible(n);
        for &i in infected {
            if i >= n {
                return Err(Error::Invalid(format!("infected node {i} outside 0..{n}")));
            }
            ic.probs[i] = [0.0, 1.0, 0.0];
        }
        Ok(ic)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn ps(&self, i: usize) -> f64 {
        self.probs[i][0]
    }

    pub fn pi(&self, i: usize) -> f64 {
        self.probs[i][1]
    }

    pub fn pr(&self, i: usize) -> f64 {
        self.probs[i][2]
    }

    pub fn triples(&self) -> &[[f64; 3]] {
        &self.probs
    }

    /// Every triple is a unit vector.
    pub fn is_deterministic(&self) -> bool {
        self.probs
            .iter()
            .all(|p| p.iter().all(|&v| v == 0.0 || v == 1.0))
    }

    pub(crate) fn check_size(&self, n: usize) -> Result<()> {
        if self.probs.len() != n {
            return Err(Error::Invalid(format!(
                "initial condition has {} nodes, network has {n}",
                self.probs.len()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_edges() {
        let labels = || vec!["a".to_string(), "b".to_string()];
        assert!(matches!(
            SpreadingNetwork::new(labels(), [(0, 0, 0.5)]),
            Err(Error::SelfLoop(_))
        ));
        assert!(matches!(
            SpreadingNetwork::new(labels(), [(0, 1, 0.5), (0, 1, 0.2)]),
            Err(Error::DuplicateEdge { .. })
        ));
        assert!(matches!(
            SpreadingNetwork::new(labels(), [(0, 1, -0.1)]),
            Err(Error::AlphaOutOfRange { .. })
        ));
        assert!(SpreadingNetwork::new(labels(), [(0, 1, 1.0)]).is_ok());
    }

    #[test]
    fn adjacency_and_reverse() {
        let net =
            SpreadingNetwork::with_unlabeled(3, [(0, 1, 0.1), (1, 0, 0.2), (1, 2, 0.3)]).unwrap();
        assert!(net.check_consistency());
        assert_eq!(net.in_edges(0), &[1]);
        assert_eq!(net.out_edges(1), &[1, 2]);
        assert_eq!(net.reverse(0), Some(1));
        assert_eq!(net.reverse(2), None);
        assert_eq!(net.undirected_neighbors()[1], vec![0, 2]);
        assert_eq!(net.undirected_edge_count(), 2);
    }

    #[test]
    fn initial_condition_validation() {
        assert!(InitialCondition::from_triples(vec![[0.5, 0.3, 0.2]]).is_ok());
        assert!(InitialCondition::from_triples(vec![[0.5, 0.3, 0.3]]).is_err());
        let ic = InitialCondition::with_infected(3, &[1]).unwrap();
        assert!(ic.is_deterministic());
        assert_eq!(ic.pi(1), 1.0);
        assert!(!InitialCondition::from_triples(vec![[0.7, 0.3, 0.0]])
            .unwrap()
            .is_deterministic());
    }
}
