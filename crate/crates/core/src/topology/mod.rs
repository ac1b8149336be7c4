//! Network graphs, routing and the routing-distance distribution.
//!
//! A [`Topology`] is an immutable, connected, simple, undirected graph. Nodes
//! are dense indices `0..n`. Requests are routed along BFS shortest paths with
//! a deterministic tie-break: from any node, the next hop is the
//! lowest-numbered neighbour that is one hop closer to the destination.

mod distance;
mod generate;
mod graphml;

use std::collections::VecDeque;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use distance::{distance_model, DistanceMode, DistanceModel, DistanceSource};
pub use generate::{
    build_er, build_line, build_power_law, build_regular_tree, regular_tree_node_count,
    ER_MAX_ATTEMPTS,
};
pub use graphml::{load_graphml, parse_graphml};

/// Marks an unreachable node in BFS distance vectors.
pub const UNREACHABLE: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type")]
pub enum TopologyKind {
    Line,
    /// Root has `r + 1` children, every other internal node `r`; layers `0..=h`.
    RegularTree {
        r: usize,
        h: usize,
    },
    /// `giant_component` is set when no connected sample was drawn within the
    /// attempt budget and the largest component of the last sample was kept.
    ErdosRenyi {
        p: f64,
        attempts: usize,
        giant_component: bool,
    },
    PowerLaw {
        gamma: f64,
        sampled_nodes: usize,
    },
    Imported {
        name: String,
    },
}

/// Declarative recipe for a topology, as written in experiment plans.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySpec {
    Line { n: usize },
    RegularTree { r: usize, h: usize },
    ErdosRenyi { n: usize, p: f64, seed: u64 },
    PowerLaw { n: usize, gamma: f64, seed: u64 },
    Graphml { path: PathBuf },
}

impl TopologySpec {
    pub fn build(&self) -> Result<Topology> {
        match self {
            TopologySpec::Line { n } => build_line(*n),
            TopologySpec::RegularTree { r, h } => build_regular_tree(*r, *h),
            TopologySpec::ErdosRenyi { n, p, seed } => build_er(*n, *p, *seed),
            TopologySpec::PowerLaw { n, gamma, seed } => build_power_law(*n, *gamma, *seed),
            TopologySpec::Graphml { path } => load_graphml(path),
        }
    }

    /// Short identifier used in result files.
    pub fn label(&self) -> String {
        match self {
            TopologySpec::Line { n } => format!("line(n={n})"),
            TopologySpec::RegularTree { r, h } => format!("tree(r={r},h={h})"),
            TopologySpec::ErdosRenyi { n, p, seed } => format!("er(n={n},p={p},seed={seed})"),
            TopologySpec::PowerLaw { n, gamma, seed } => {
                format!("power_law(n={n},gamma={gamma},seed={seed})")
            }
            TopologySpec::Graphml { path } => {
                format!(
                    "graphml({})",
                    path.file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default()
                )
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Topology {
    kind: TopologyKind,
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
    layers: Option<Vec<usize>>,
    labels: Option<Vec<String>>,
}

impl Topology {
    /// Builds a topology from an explicit edge list.
    ///
    /// Rejects self-loops, duplicate edges (in either orientation), out of
    /// range endpoints and disconnected graphs.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], kind: TopologyKind) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("topology needs at least one node"));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::invalid(format!(
                    "edge ({u},{v}) out of range for n={n}"
                )));
            }
            if u == v {
                return Err(Error::invalid(format!("self-loop at node {u}")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for (u, nbrs) in adjacency.iter_mut().enumerate() {
            nbrs.sort_unstable();
            if nbrs.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::invalid(format!("duplicate edge at node {u}")));
            }
        }
        let topo = Topology {
            kind,
            adjacency,
            edge_count: edges.len(),
            layers: None,
            labels: None,
        };
        topo.check_connected()?;
        Ok(topo)
    }

    /// Simplifies an arbitrary multigraph edge list (drops self-loops and
    /// parallel edges) and keeps its largest connected component. Returns the
    /// topology and, for each new node, its index in the input.
    pub(crate) fn giant_component_of(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        kind: TopologyKind,
    ) -> (Self, Vec<usize>) {
        let mut adjacency = vec![Vec::new(); n];
        for (u, v) in edges {
            if u != v {
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
            nbrs.dedup();
        }

        let mut component = vec![usize::MAX; n];
        let mut best: (usize, usize) = (0, 0); // (size, label)
        let mut label = 0;
        for start in 0..n {
            if component[start] != usize::MAX {
                continue;
            }
            let mut size = 0;
            let mut queue = VecDeque::from([start]);
            component[start] = label;
            while let Some(u) = queue.pop_front() {
                size += 1;
                for &w in &adjacency[u] {
                    if component[w] == usize::MAX {
                        component[w] = label;
                        queue.push_back(w);
                    }
                }
            }
            if size > best.0 {
                best = (size, label);
            }
            label += 1;
        }

        let kept: Vec<usize> = (0..n).filter(|&v| component[v] == best.1).collect();
        let mut remap = vec![usize::MAX; n];
        for (new, &old) in kept.iter().enumerate() {
            remap[old] = new;
        }
        let adjacency: Vec<Vec<usize>> = kept
            .iter()
            .map(|&old| {
                let mut nbrs: Vec<usize> = adjacency[old].iter().map(|&w| remap[w]).collect();
                nbrs.sort_unstable();
                nbrs
            })
            .collect();
        let edge_count = adjacency.iter().map(Vec::len).sum::<usize>() / 2;
        (
            Topology {
                kind,
                adjacency,
                edge_count,
                layers: None,
                labels: None,
            },
            kept,
        )
    }

    pub(crate) fn with_layers(mut self, layers: Vec<usize>) -> Self {
        debug_assert_eq!(layers.len(), self.node_count());
        self.layers = Some(layers);
        self
    }

    pub(crate) fn with_labels(mut self, labels: Vec<String>) -> Self {
        debug_assert_eq!(labels.len(), self.node_count());
        self.labels = Some(labels);
        self
    }

    pub fn kind(&self) -> &TopologyKind {
        &self.kind
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Sorted neighbour list.
    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].len()
    }

    pub fn average_degree(&self) -> f64 {
        2.0 * self.edge_count as f64 / self.node_count() as f64
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, nbrs)| nbrs.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Layer (depth from the root) of a node; only regular trees carry layers.
    pub fn layer(&self, v: usize) -> Option<usize> {
        self.layers.as_ref().map(|l| l[v])
    }

    pub fn layers(&self) -> Option<&[usize]> {
        self.layers.as_deref()
    }

    /// Original node identifiers for imported graphs.
    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Tree height `h` for regular trees.
    pub fn tree_height(&self) -> Option<usize> {
        match self.kind {
            TopologyKind::RegularTree { h, .. } => Some(h),
            _ => None,
        }
    }

    pub fn is_tree(&self) -> bool {
        self.edge_count + 1 == self.node_count()
    }

    /// Nodes of a regular tree at the given layer, in ascending id order.
    pub fn nodes_in_layer(&self, layer: usize) -> Vec<usize> {
        match &self.layers {
            Some(l) => (0..l.len()).filter(|&v| l[v] == layer).collect(),
            None => Vec::new(),
        }
    }

    /// Hop distances from `src` ([`UNREACHABLE`] where no path exists).
    pub fn bfs_distances(&self, src: usize) -> Vec<u32> {
        let mut dist = vec![UNREACHABLE; self.node_count()];
        let mut queue = VecDeque::with_capacity(self.node_count());
        dist[src] = 0;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let next = dist[u] + 1;
            for &w in &self.adjacency[u] {
                if dist[w] == UNREACHABLE {
                    dist[w] = next;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.bfs_distances(0).iter().all(|&d| d != UNREACHABLE)
    }

    fn check_connected(&self) -> Result<()> {
        let reached = self
            .bfs_distances(0)
            .iter()
            .filter(|&&d| d != UNREACHABLE)
            .count();
        if reached == self.node_count() {
            Ok(())
        } else {
            Err(Error::Disconnected {
                reached,
                total: self.node_count(),
            })
        }
    }

    /// Routing state towards a single destination.
    pub fn next_hop_table(&self, dest: usize) -> NextHopTable {
        let dist = self.bfs_distances(dest);
        let next = (0..self.node_count())
            .map(|u| {
                if u == dest || dist[u] == UNREACHABLE {
                    return u32::MAX;
                }
                // neighbours are sorted, so the first closer one is the lowest id
                self.adjacency[u]
                    .iter()
                    .copied()
                    .find(|&w| dist[w] + 1 == dist[u])
                    .map_or(u32::MAX, |w| w as u32)
            })
            .collect();
        NextHopTable { dest, dist, next }
    }
}

/// Shortest-path forwarding state towards one destination node.
#[derive(Clone, Debug)]
pub struct NextHopTable {
    dest: usize,
    dist: Vec<u32>,
    next: Vec<u32>,
}

impl NextHopTable {
    pub fn destination(&self) -> usize {
        self.dest
    }

    pub fn distance(&self, from: usize) -> u32 {
        self.dist[from]
    }

    #[inline]
    pub fn next_hop(&self, from: usize) -> Option<usize> {
        match self.next[from] {
            u32::MAX => None,
            w => Some(w as usize),
        }
    }

    /// Node sequence from `from` to the destination, both inclusive.
    pub fn path(&self, from: usize) -> Option<Vec<usize>> {
        if self.dist[from] == UNREACHABLE {
            return None;
        }
        let mut path = Vec::with_capacity(self.dist[from] as usize + 1);
        let mut u = from;
        path.push(u);
        while u != self.dest {
            u = self.next_hop(u)?;
            path.push(u);
        }
        Some(path)
    }
}

/// BFS shortest path from `u` to `v`, both inclusive.
pub fn shortest_path(t: &Topology, u: usize, v: usize) -> Result<Vec<usize>> {
    let n = t.node_count();
    if u >= n || v >= n {
        return Err(Error::invalid(format!(
            "node out of range: ({u}, {v}) with n={n}"
        )));
    }
    if u == v {
        return Err(Error::invalid("shortest_path needs distinct endpoints"));
    }
    t.next_hop_table(v).path(u).ok_or_else(|| {
        Error::Invariant(format!(
            "node {v} unreachable from {u} in a connected topology"
        ))
    })
}
