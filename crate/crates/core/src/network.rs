//! Recurrence networks: the recurrence matrix without self-loops, read as an
//! unweighted undirected graph.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::bits::BitMatrix;
use crate::error::{Error, Result};
use crate::recurrence::RecurrenceMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceNetwork {
    adjacency: BitMatrix,
    degrees: Vec<usize>,
}

impl RecurrenceNetwork {
    /// Adjacency `A = R - I`.
    pub fn from_recurrence(r: &RecurrenceMatrix) -> Self {
        let mut adjacency = r.bits().clone();
        for i in 0..adjacency.size() {
            adjacency.set(i, i, false);
        }
        Self::with_degrees(adjacency)
    }

    /// Symmetric adjacency with an empty diagonal.
    pub fn from_adjacency(adjacency: BitMatrix) -> Result<Self> {
        if (0..adjacency.size()).any(|i| adjacency.get(i, i)) {
            return Err(Error::InvalidInput("adjacency has self-loops".into()));
        }
        if !adjacency.is_symmetric() {
            return Err(Error::InvalidInput("adjacency is not symmetric".into()));
        }
        Ok(Self::with_degrees(adjacency))
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = BitMatrix::zeros(n);
        for &(i, j) in edges {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidInput(format!("invalid edge ({i}, {j})")));
            }
            adjacency.set(i, j, true);
            adjacency.set(j, i, true);
        }
        Ok(Self::with_degrees(adjacency))
    }

    fn with_degrees(adjacency: BitMatrix) -> Self {
        let degrees = (0..adjacency.size()).map(|i| adjacency.row_count(i)).collect();
        Self { adjacency, degrees }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.size()
    }

    pub fn edge_count(&self) -> usize {
        self.degrees.iter().sum::<usize>() / 2
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency.get(i, j)
    }

    pub fn adjacency(&self) -> &BitMatrix {
        &self.adjacency
    }

    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency.row_ones(node)
    }

    /// Local clustering of `node`: closed ordered neighbour pairs over `k(k-1)`,
    /// zero when the degree is at most one.
    pub fn local_clustering(&self, node: usize) -> f64 {
        let k = self.degrees[node];
        if k <= 1 {
            return 0.0;
        }
        let row = self.adjacency.row(node);
        let closed: u64 = self
            .neighbors(node)
            .map(|i| {
                row.iter()
                    .zip(self.adjacency.row(i))
                    .map(|(a, b)| (a & b).count_ones() as u64)
                    .sum::<u64>()
            })
            .sum();
        closed as f64 / (k as f64 * (k - 1) as f64)
    }

    /// Mean local clustering over all nodes, isolated ones counting as zero.
    pub fn clustering_coefficient(&self) -> f64 {
        let n = self.node_count();
        if n == 0 {
            return 0.0;
        }
        let local: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|v| self.local_clustering(v))
            .collect();
        local.iter().sum::<f64>() / n as f64
    }

    /// Hop distances from `source`; `None` for unreachable nodes.
    pub fn bfs_distances(&self, source: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.node_count()];
        self.bfs_levels(source, |node, depth| dist[node] = Some(depth));
        dist
    }

    /// Frontier-at-a-time BFS over packed rows; `visit` sees every reached node
    /// except the source.
    fn bfs_levels(&self, source: usize, mut visit: impl FnMut(usize, u32)) {
        let words = self.adjacency.words_per_row();
        let mut visited = vec![0u64; words];
        visited[source / 64] |= 1 << (source % 64);
        let mut frontier = vec![source];
        let mut next = vec![0u64; words];
        let mut depth = 0u32;
        while !frontier.is_empty() {
            depth += 1;
            next.iter_mut().for_each(|w| *w = 0);
            for &u in &frontier {
                for (acc, &w) in next.iter_mut().zip(self.adjacency.row(u)) {
                    *acc |= w;
                }
            }
            frontier.clear();
            for (k, (acc, seen)) in next.iter_mut().zip(visited.iter_mut()).enumerate() {
                *acc &= !*seen;
                *seen |= *acc;
                let mut w = *acc;
                while w != 0 {
                    let node = k * 64 + w.trailing_zeros() as usize;
                    w &= w - 1;
                    frontier.push(node);
                    visit(node, depth);
                }
            }
        }
    }

    /// Connected components, isolated nodes included.
    pub fn component_count(&self) -> usize {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut components = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for v in self.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        components
    }

    /// Mean shortest-path length over ordered pairs of distinct, mutually
    /// reachable nodes.
    pub fn characteristic_path_length(&self) -> Result<PathLengthReport> {
        let n = self.node_count();
        if n < 2 {
            return Err(Error::InsufficientData { needed: 2, got: n });
        }
        if self.edge_count() == 0 {
            return Err(Error::UndefinedMeasure("CPL"));
        }
        let (distance_sum, reachable_pairs) = (0..n)
            .into_par_iter()
            .map(|source| {
                let mut sum = 0u64;
                let mut reached = 0u64;
                self.bfs_levels(source, |_, depth| {
                    sum += depth as u64;
                    reached += 1;
                });
                (sum, reached)
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        let total_pairs = (n as u64) * (n as u64 - 1);
        Ok(PathLengthReport {
            cpl: distance_sum as f64 / reachable_pairs as f64,
            distance_sum,
            reachable_pairs,
            reachable_fraction: reachable_pairs as f64 / total_pairs as f64,
            components: self.component_count(),
        })
    }
}

/// Characteristic path length with the reachability it was averaged over.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathLengthReport {
    pub cpl: f64,
    pub distance_sum: u64,
    pub reachable_pairs: u64,
    /// Reachable ordered pairs over `N(N-1)`.
    pub reachable_fraction: f64,
    pub components: usize,
}

pub fn to_network(r: &RecurrenceMatrix) -> RecurrenceNetwork {
    RecurrenceNetwork::from_recurrence(r)
}

/// Parameters recorded in an edge-list header.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeListMeta {
    pub epsilon: f64,
    pub dimension: usize,
    pub delay: usize,
}

/// `i,j` rows with `i < j`, preceded by `# key=value` comment lines.
pub fn write_edge_list<W: Write>(
    net: &RecurrenceNetwork,
    meta: &EdgeListMeta,
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "# N={}", net.node_count())?;
    writeln!(out, "# epsilon={}", meta.epsilon)?;
    writeln!(out, "# m={}", meta.dimension)?;
    writeln!(out, "# tau={}", meta.delay)?;
    writeln!(out, "i,j")?;
    for i in 0..net.node_count() {
        for j in net.neighbors(i).filter(|&j| j > i) {
            writeln!(out, "{i},{j}")?;
        }
    }
    Ok(())
}
