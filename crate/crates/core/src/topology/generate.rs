use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Topology, TopologyKind};
use crate::error::{Error, Result};

/// Regeneration attempts for G(n, p) before falling back to the giant component.
pub const ER_MAX_ATTEMPTS: usize = 100;

const DEGREE_PARITY_ATTEMPTS: usize = 100;

/// Path graph `0 - 1 - ... - (n-1)`.
pub fn build_line(n: usize) -> Result<Topology> {
    if n < 2 {
        return Err(Error::invalid(format!("line needs n >= 2, got {n}")));
    }
    let edges: Vec<_> = (0..n - 1).map(|u| (u, u + 1)).collect();
    Topology::from_edges(n, &edges, TopologyKind::Line)
}

/// `1 + (r+1)(r^h - 1)/(r - 1)`: node count of the `(r+1)`-regular spanning
/// tree with layers `0..=h`.
pub fn regular_tree_node_count(r: usize, h: usize) -> usize {
    let mut count = 1;
    let mut layer = r + 1;
    for _ in 0..h {
        count += layer;
        layer *= r;
    }
    count
}

/// Regular spanning tree: the root has `r + 1` children and every other
/// internal node `r`, so every internal node has degree `r + 1`.
///
/// Node ids are assigned breadth-first, so the root is 0, layer 1 is
/// `1..=r+1`, and ids increase with layer.
pub fn build_regular_tree(r: usize, h: usize) -> Result<Topology> {
    if r < 2 || h < 1 {
        return Err(Error::invalid(format!(
            "regular tree needs r >= 2 and h >= 1, got r={r}, h={h}"
        )));
    }
    let n = regular_tree_node_count(r, h);
    let mut edges = Vec::with_capacity(n - 1);
    let mut layers = vec![0usize; n];
    let mut next_id = 1;
    let mut frontier = vec![0usize];
    for layer in 1..=h {
        let fanout = if layer == 1 { r + 1 } else { r };
        let mut next_frontier = Vec::with_capacity(frontier.len() * fanout);
        for &parent in &frontier {
            for _ in 0..fanout {
                edges.push((parent, next_id));
                layers[next_id] = layer;
                next_frontier.push(next_id);
                next_id += 1;
            }
        }
        frontier = next_frontier;
    }
    debug_assert_eq!(next_id, n);
    Ok(Topology::from_edges(n, &edges, TopologyKind::RegularTree { r, h })?.with_layers(layers))
}

/// Erdős–Rényi G(n, p).
///
/// Up to [`ER_MAX_ATTEMPTS`] independent samples are drawn; the first
/// connected one is returned. If none is connected the largest component of
/// the last sample is kept and the kind records `giant_component = true`.
pub fn build_er(n: usize, p: f64, seed: u64) -> Result<Topology> {
    if n < 2 {
        return Err(Error::invalid(format!("G(n,p) needs n >= 2, got {n}")));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!(
            "edge probability must lie in (0, 1], got {p}"
        )));
    }
    let mut last = None;
    for attempt in 0..ER_MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if p >= 1.0 || rng.random::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        let kind = TopologyKind::ErdosRenyi {
            p,
            attempts: attempt + 1,
            giant_component: false,
        };
        match Topology::from_edges(n, &edges, kind) {
            Ok(t) => return Ok(t),
            Err(Error::Disconnected { .. }) => last = Some(edges),
            Err(e) => return Err(e),
        }
    }
    let edges = last.expect("at least one attempt");
    let kind = TopologyKind::ErdosRenyi {
        p,
        attempts: ER_MAX_ATTEMPTS,
        giant_component: true,
    };
    let (t, _) = Topology::giant_component_of(n, edges, kind);
    if t.node_count() < 2 {
        return Err(Error::GenerationFailed {
            attempts: ER_MAX_ATTEMPTS,
        });
    }
    Ok(t)
}

/// Configuration-model graph whose degree fractions follow `k^-gamma`.
///
/// Degrees are drawn i.i.d. on `1..n` with `P(k) ∝ k^-gamma`; stubs are
/// matched uniformly at random, self-loops and parallel edges are erased and
/// the giant component is kept, so the result usually has fewer than `n`
/// nodes.
pub fn build_power_law(n: usize, gamma: f64, seed: u64) -> Result<Topology> {
    if n < 10 {
        return Err(Error::invalid(format!(
            "power-law graph needs n >= 10, got {n}"
        )));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::invalid(format!(
            "degree exponent must be positive, got {gamma}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_degree = n - 1;
    let mut cdf = Vec::with_capacity(max_degree);
    let mut acc = 0.0;
    for k in 1..=max_degree {
        acc += (k as f64).powf(-gamma);
        cdf.push(acc);
    }
    let total = acc;
    let draw = |rng: &mut ChaCha8Rng| {
        let u = rng.random::<f64>() * total;
        cdf.partition_point(|&c| c <= u).min(max_degree - 1) + 1
    };

    let mut degrees: Vec<usize> = (0..n).map(|_| draw(&mut rng)).collect();
    let mut attempts = 0;
    while degrees.iter().sum::<usize>() % 2 == 1 {
        if attempts == DEGREE_PARITY_ATTEMPTS {
            return Err(Error::invalid(
                "could not draw a degree sequence with even sum",
            ));
        }
        let v = rng.random_range(0..n);
        degrees[v] = draw(&mut rng);
        attempts += 1;
    }

    let mut stubs: Vec<usize> = degrees
        .iter()
        .enumerate()
        .flat_map(|(v, &k)| std::iter::repeat_n(v, k))
        .collect();
    stubs.shuffle(&mut rng);
    let edges = stubs.chunks_exact(2).map(|pair| (pair[0], pair[1]));
    let (t, _) = Topology::giant_component_of(
        n,
        edges,
        TopologyKind::PowerLaw {
            gamma,
            sampled_nodes: n,
        },
    );
    if t.node_count() < 2 {
        return Err(Error::GenerationFailed { attempts: 1 });
    }
    Ok(t)
}
