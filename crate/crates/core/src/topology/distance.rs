use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{Topology, UNREACHABLE};
use crate::error::{Error, Result};
use crate::scalar::{kahan_sum, Real};

/// Above this node count `Auto` switches from all-pairs BFS to sampling.
pub const EXACT_NODE_LIMIT: usize = 20_000;
/// Sampled pairs per node used by `Auto` on large graphs.
pub const AUTO_PAIRS_PER_NODE: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DistanceSource {
    ExactAllPairs,
    SampledPairs {
        count: usize,
        seed: u64,
    },
    /// Supplied directly (tests, hand-built distributions).
    Explicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceMode {
    ExactAllPairs,
    SampledPairs {
        count: usize,
        seed: u64,
    },
    /// Exact when `n <= 20000`, otherwise `100 n` sampled pairs.
    Auto {
        seed: u64,
    },
}

/// Distribution `f_d` of the hop distance between a uniformly random
/// requester and a uniformly random distinct server node.
#[derive(Clone, Debug, Serialize)]
pub struct DistanceModel<F> {
    /// `pmf[d]` for `d = 0..=max`; `pmf[0]` is always zero.
    pmf: Vec<F>,
    mean: F,
    source: DistanceSource,
}

impl<F: Real> DistanceModel<F> {
    /// Builds a model from `(distance, probability)` entries.
    pub fn from_pmf(entries: impl IntoIterator<Item = (u32, F)>) -> Result<Self> {
        let mut pmf = vec![F::zero()];
        for (d, f) in entries {
            if d == 0 {
                return Err(Error::invalid("distances must be >= 1"));
            }
            if !(f >= F::zero()) {
                return Err(Error::invalid(format!("negative probability at d={d}")));
            }
            let d = d as usize;
            if pmf.len() <= d {
                pmf.resize(d + 1, F::zero());
            }
            pmf[d] = pmf[d] + f;
        }
        let total = kahan_sum(pmf.iter().copied());
        let tol = F::lit(1e-9).max(F::epsilon() * F::lit(16.0));
        if (total - F::one()).abs() > tol {
            return Err(Error::invalid(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self::assemble(pmf, DistanceSource::Explicit))
    }

    fn from_counts(counts: &[u64], source: DistanceSource) -> Self {
        let total: u64 = counts.iter().sum();
        let total_f = F::from_u64(total).expect("count fits");
        let pmf = counts
            .iter()
            .map(|&c| F::from_u64(c).expect("count fits") / total_f)
            .collect();
        Self::assemble(pmf, source)
    }

    fn assemble(mut pmf: Vec<F>, source: DistanceSource) -> Self {
        while pmf.len() > 1 && pmf[pmf.len() - 1] == F::zero() {
            pmf.pop();
        }
        let mean = kahan_sum(
            pmf.iter()
                .enumerate()
                .map(|(d, &f)| F::from_usize_lossy(d) * f),
        );
        DistanceModel { pmf, mean, source }
    }

    /// `f_d`; zero outside the support.
    pub fn probability(&self, d: u32) -> F {
        self.pmf.get(d as usize).copied().unwrap_or_else(F::zero)
    }

    /// Mean distance `d̄`.
    pub fn mean(&self) -> F {
        self.mean
    }

    pub fn max_distance(&self) -> u32 {
        (self.pmf.len() - 1) as u32
    }

    pub fn source(&self) -> DistanceSource {
        self.source
    }

    /// `(d, f_d)` over the support (entries with `f_d > 0`).
    pub fn iter(&self) -> impl Iterator<Item = (u32, F)> + '_ {
        self.pmf
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, &f)| f > F::zero())
            .map(|(d, &f)| (d as u32, f))
    }
}

/// Computes `f_d` over ordered pairs (requester, server node) with
/// requester != server node.
pub fn distance_model<F: Real>(t: &Topology, mode: DistanceMode) -> Result<DistanceModel<F>> {
    let n = t.node_count();
    if n < 2 {
        return Err(Error::invalid("distance model needs at least two nodes"));
    }
    let mode = match mode {
        DistanceMode::Auto { seed } if n > EXACT_NODE_LIMIT => DistanceMode::SampledPairs {
            count: AUTO_PAIRS_PER_NODE * n,
            seed,
        },
        DistanceMode::Auto { .. } => DistanceMode::ExactAllPairs,
        m => m,
    };
    match mode {
        DistanceMode::ExactAllPairs => {
            let counts = (0..n)
                .into_par_iter()
                .map(|src| {
                    let mut hist = Vec::new();
                    for d in t.bfs_distances(src) {
                        if d == UNREACHABLE {
                            continue;
                        }
                        let d = d as usize;
                        if hist.len() <= d {
                            hist.resize(d + 1, 0u64);
                        }
                        hist[d] += 1;
                    }
                    hist
                })
                .reduce(Vec::new, merge_histograms);
            let mut counts = counts;
            if counts.iter().skip(1).sum::<u64>() != (n as u64) * (n as u64 - 1) {
                return Err(Error::Disconnected {
                    reached: 0,
                    total: n,
                });
            }
            counts[0] = 0;
            Ok(DistanceModel::from_counts(
                &counts,
                DistanceSource::ExactAllPairs,
            ))
        }
        DistanceMode::SampledPairs { count, seed } => {
            if count == 0 {
                return Err(Error::invalid("sampled distance model needs count >= 1"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut pairs: Vec<(usize, usize)> = (0..count)
                .map(|_| {
                    let u = rng.random_range(0..n);
                    let mut v = rng.random_range(0..n - 1);
                    if v >= u {
                        v += 1;
                    }
                    (u, v)
                })
                .collect();
            let distances = if t.is_tree() {
                tree_distances(t, &pairs)
            } else {
                grouped_bfs_distances(t, &mut pairs)
            };
            let mut counts = Vec::new();
            for d in distances {
                if d == UNREACHABLE {
                    return Err(Error::Disconnected {
                        reached: 0,
                        total: n,
                    });
                }
                let d = d as usize;
                if counts.len() <= d {
                    counts.resize(d + 1, 0u64);
                }
                counts[d] += 1;
            }
            Ok(DistanceModel::from_counts(
                &counts,
                DistanceSource::SampledPairs { count, seed },
            ))
        }
        DistanceMode::Auto { .. } => unreachable!("resolved above"),
    }
}

fn merge_histograms(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    if a.len() < b.len() {
        a.resize(b.len(), 0);
    }
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

fn grouped_bfs_distances(t: &Topology, pairs: &mut [(usize, usize)]) -> Vec<u32> {
    pairs.sort_unstable();
    pairs
        .chunk_by(|a, b| a.0 == b.0)
        .collect::<Vec<_>>()
        .into_par_iter()
        .flat_map_iter(|group| {
            let dist = t.bfs_distances(group[0].0);
            group.iter().map(move |&(_, v)| dist[v]).collect::<Vec<_>>()
        })
        .collect()
}

fn tree_distances(t: &Topology, pairs: &[(usize, usize)]) -> Vec<u32> {
    let n = t.node_count();
    let depth = t.bfs_distances(0);
    let mut parent = vec![usize::MAX; n];
    for v in 1..n {
        parent[v] = t
            .neighbors(v)
            .iter()
            .copied()
            .find(|&w| depth[w] + 1 == depth[v])
            .expect("tree parent");
    }
    pairs
        .iter()
        .map(|&(u, v)| {
            let (mut a, mut b) = (u, v);
            let mut hops = 0;
            while depth[a] > depth[b] {
                a = parent[a];
                hops += 1;
            }
            while depth[b] > depth[a] {
                b = parent[b];
                hops += 1;
            }
            while a != b {
                a = parent[a];
                b = parent[b];
                hops += 2;
            }
            hops
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_line, build_regular_tree, Topology, TopologyKind};
    use approx::assert_relative_eq;

    #[test]
    fn line_of_three() {
        let t = build_line(3).unwrap();
        let dm: DistanceModel<f64> = distance_model(&t, DistanceMode::ExactAllPairs).unwrap();
        assert_relative_eq!(dm.probability(1), 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(dm.probability(2), 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(dm.mean(), 4.0 / 3.0, epsilon = 1e-15);
        assert_eq!(dm.source(), DistanceSource::ExactAllPairs);
    }

    #[test]
    fn complete_graph() {
        let edges: Vec<_> = (0..4)
            .flat_map(|u| ((u + 1)..4).map(move |v| (u, v)))
            .collect();
        let t =
            Topology::from_edges(4, &edges, TopologyKind::Imported { name: "k4".into() }).unwrap();
        let dm: DistanceModel<f64> = distance_model(&t, DistanceMode::ExactAllPairs).unwrap();
        assert_eq!(dm.iter().collect::<Vec<_>>(), vec![(1, 1.0)]);
        assert_eq!(dm.mean(), 1.0);
    }

    #[test]
    fn line_200_mean_is_n_plus_one_over_three() {
        let t = build_line(200).unwrap();
        let dm: DistanceModel<f64> = distance_model(&t, DistanceMode::ExactAllPairs).unwrap();
        assert_relative_eq!(dm.mean(), 67.0, epsilon = 1e-9);
    }

    #[test]
    fn tree_fast_path_matches_bfs() {
        let t = build_regular_tree(2, 5).unwrap();
        let mut pairs: Vec<(usize, usize)> = (0..500)
            .map(|i| ((i * 37) % t.node_count(), (i * 91 + 5) % t.node_count()))
            .collect();
        pairs.retain(|(u, v)| u != v);
        let fast = tree_distances(&t, &pairs);
        let slow: Vec<u32> = pairs.iter().map(|&(u, v)| t.bfs_distances(u)[v]).collect();
        assert_eq!(fast, slow);
    }

    #[test]
    fn from_pmf_validates() {
        assert!(DistanceModel::<f64>::from_pmf([(1, 0.5), (3, 0.4)]).is_err());
        assert!(DistanceModel::<f64>::from_pmf([(0, 1.0)]).is_err());
        let dm = DistanceModel::<f64>::from_pmf([(1, 0.5), (3, 0.5)]).unwrap();
        assert_eq!(dm.mean(), 2.0);
        assert_eq!(dm.max_distance(), 3);
        assert_eq!(dm.probability(2), 0.0);
    }

    #[test]
    fn auto_is_exact_on_small_graphs() {
        let t = build_line(10).unwrap();
        let dm: DistanceModel<f32> = distance_model(&t, DistanceMode::Auto { seed: 1 }).unwrap();
        assert_eq!(dm.source(), DistanceSource::ExactAllPairs);
        assert!((dm.mean() - 11.0 / 3.0).abs() < 1e-5);
    }
}
