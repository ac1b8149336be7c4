//! Cache sizing and realized static placements.

use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, PlacementDistribution};
use crate::error::{Error, Result};
use crate::scalar::{kahan_sum, Real};
use crate::topology::{regular_tree_node_count, Topology, TopologyKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Sizing {
    Homogeneous {
        s: usize,
    },
    /// Black-or-white: only layers `0..=cut_layer` of a regular tree cache.
    /// `black_budget_per_node` is the base share; the first
    /// `B mod black_nodes` black nodes get one extra slot.
    BlackOrWhite {
        cut_layer: usize,
        black_budget_per_node: usize,
        black_nodes: usize,
        m: usize,
    },
    Custom,
}

/// Per-node cache budgets `b_v`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CacheConfig {
    budgets: Vec<usize>,
    total_budget: usize,
    sizing: Sizing,
}

impl CacheConfig {
    /// Every node holds `s` contents.
    pub fn homogeneous(node_count: usize, s: usize) -> Self {
        CacheConfig {
            budgets: vec![s; node_count],
            total_budget: node_count * s,
            sizing: Sizing::Homogeneous { s },
        }
    }

    pub fn custom(budgets: Vec<usize>) -> Self {
        let total_budget = budgets.iter().sum();
        CacheConfig {
            budgets,
            total_budget,
            sizing: Sizing::Custom,
        }
    }

    pub fn budgets(&self) -> &[usize] {
        &self.budgets
    }

    pub fn budget(&self, v: usize) -> usize {
        self.budgets[v]
    }

    pub fn total_budget(&self) -> usize {
        self.total_budget
    }

    pub fn sizing(&self) -> Sizing {
        self.sizing
    }

    pub fn node_count(&self) -> usize {
        self.budgets.len()
    }
}

/// Splits `total_budget` equally over the nodes in layers `0..=cut_layer`
/// of a regular tree; the remainder goes to the lowest node ids.
pub fn bow_config(t: &Topology, cut_layer: usize, total_budget: usize) -> Result<CacheConfig> {
    let (r, h) = match *t.kind() {
        TopologyKind::RegularTree { r, h } => (r, h),
        _ => return Err(Error::invalid("black-or-white sizing needs a regular tree")),
    };
    if cut_layer > h {
        return Err(Error::invalid(format!(
            "cut layer {cut_layer} exceeds tree height {h}"
        )));
    }
    let black = regular_tree_node_count(r, cut_layer);
    if total_budget < black {
        return Err(Error::InfeasibleBudget(format!(
            "total budget {total_budget} is smaller than the {black} black nodes of layers 0..={cut_layer}"
        )));
    }
    let base = total_budget / black;
    let extra = total_budget % black;
    // node ids are breadth-first, so black nodes are exactly 0..black
    let budgets = (0..t.node_count())
        .map(|v| match v {
            v if v < extra => base + 1,
            v if v < black => base,
            _ => 0,
        })
        .collect();
    Ok(CacheConfig {
        budgets,
        total_budget,
        sizing: Sizing::BlackOrWhite {
            cut_layer,
            black_budget_per_node: base,
            black_nodes: black,
            m: h - cut_layer,
        },
    })
}

/// Cached content sets of every node, as sorted 0-based content indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementRealization {
    pub seed: u64,
    pub policy: String,
    pub per_node: Vec<Vec<u32>>,
}

impl PlacementRealization {
    pub fn contents(&self, v: usize) -> &[u32] {
        &self.per_node[v]
    }

    #[inline]
    pub fn contains(&self, v: usize, content: usize) -> bool {
        self.per_node[v].binary_search(&(content as u32)).is_ok()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

/// Fills every node independently: `b_v` i.i.d. draws from `q`, duplicates
/// collapsed. URP draws a uniform `b_v`-subset instead.
///
/// Node `v` uses its own ChaCha stream `v` under `seed`, so the result does
/// not depend on thread scheduling.
pub fn realize<F: Real>(
    dist: &PlacementDistribution<F>,
    cfg: &CacheConfig,
    seed: u64,
) -> PlacementRealization {
    let q: Vec<f64> = dist.q().iter().map(|x| x.as_f64()).collect();
    let mut cdf = Vec::with_capacity(q.len());
    let mut acc = 0.0;
    for &x in &q {
        acc += x;
        cdf.push(acc);
    }
    let total = acc;
    let support = dist.cut_index();
    let uniform = dist.without_replacement();
    let per_node = (0..cfg.node_count())
        .into_par_iter()
        .map(|v| {
            let b = cfg.budget(v);
            if b == 0 || support == 0 {
                return Vec::new();
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(v as u64);
            let mut set: Vec<u32> = if uniform {
                index::sample(&mut rng, q.len(), b.min(q.len()))
                    .into_iter()
                    .map(|i| i as u32)
                    .collect()
            } else {
                (0..b)
                    .map(|_| {
                        let u = rng.random::<f64>() * total;
                        let i = cdf.partition_point(|&c| c <= u).min(support - 1);
                        i as u32
                    })
                    .collect()
            };
            set.sort_unstable();
            set.dedup();
            set
        })
        .collect();
    PlacementRealization {
        seed,
        policy: dist.policy().to_string(),
        per_node,
    }
}

/// Per-content probability that a node with budget `b` holds the content
/// under i.i.d. draws: `1 - (1 - q_i)^b`.
pub fn hit_probability<F: Real>(dist: &PlacementDistribution<F>, b: usize) -> Vec<F> {
    let exp = F::from_usize_lossy(b);
    dist.q()
        .iter()
        .map(|&q| F::one() - (F::one() - q).powf(exp))
        .collect()
}

/// Exact presence probability `b / |C|` of a uniform `b`-subset.
pub fn urp_exact_hit_probability<F: Real>(content_count: usize, b: usize) -> F {
    F::from_usize_lossy(b.min(content_count)) / F::from_usize_lossy(content_count)
}

/// Delay of the idealized policy that places contents along every path in
/// popularity order: `sum_i p_i min(ceil(i/s), d)`.
pub fn lbnd_delay_given_distance<F: Real>(cat: &Catalog<F>, s: usize, d: usize) -> Result<F> {
    if s == 0 || d == 0 {
        return Err(Error::invalid(format!(
            "LBND needs s >= 1 and d >= 1, got s={s}, d={d}"
        )));
    }
    Ok(kahan_sum(cat.popularity().iter().enumerate().rev().map(
        |(idx, &p)| {
            let hop = (idx / s + 1).min(d);
            p * F::from_usize_lossy(hop)
        },
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{make_catalog, placement_distribution, PlacementPolicy};
    use crate::topology::{build_line, build_regular_tree};
    use approx::assert_relative_eq;

    #[test]
    fn bow_examples() {
        let t = build_regular_tree(2, 2).unwrap();
        assert_eq!(t.node_count(), 10);
        let cfg = bow_config(&t, 1, 40).unwrap();
        assert_eq!(&cfg.budgets()[..4], &[10, 10, 10, 10]);
        assert!(cfg.budgets()[4..].iter().all(|&b| b == 0));
        assert_eq!(cfg.total_budget(), 40);

        let full = bow_config(&t, 2, 23).unwrap();
        assert_eq!(full.budgets(), &[3, 3, 3, 2, 2, 2, 2, 2, 2, 2]);

        let root = bow_config(&t, 0, 7).unwrap();
        assert_eq!(root.budgets()[0], 7);
        assert_eq!(root.budgets().iter().sum::<usize>(), 7);
        match root.sizing() {
            Sizing::BlackOrWhite { m, black_nodes, .. } => assert_eq!((m, black_nodes), (2, 1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bow_rejects_infeasible() {
        let t = build_regular_tree(2, 2).unwrap();
        assert!(matches!(
            bow_config(&t, 1, 3),
            Err(Error::InfeasibleBudget(_))
        ));
        assert!(bow_config(&t, 3, 100).is_err());
        assert!(bow_config(&build_line(5).unwrap(), 0, 5).is_err());
    }

    #[test]
    fn zero_budget_and_degenerate_q() {
        let dist = PlacementDistribution::from_weights(vec![1.0f64, 0.0, 0.0, 0.0]).unwrap();
        let cfg = CacheConfig::custom(vec![0, 3, 3]);
        let r = realize(&dist, &cfg, 5);
        assert!(r.contents(0).is_empty());
        assert_eq!(r.contents(1), &[0]);
        assert_eq!(r.contents(2), &[0]);
    }

    #[test]
    fn urp_iid_presence_rate() {
        // i.i.d. model: 1 - (3/4)^4
        let q = PlacementDistribution::from_weights(vec![0.25f64; 4]).unwrap();
        let r = realize(&q, &CacheConfig::homogeneous(10_000, 4), 1);
        let rate = (0..10_000).filter(|&v| r.contains(v, 2)).count() as f64 / 1e4;
        assert!((rate - (1.0 - 0.75f64.powi(4))).abs() < 0.02, "{rate}");
    }

    #[test]
    fn urp_without_replacement_fills_budget() {
        let c = make_catalog(10, 1.0f64).unwrap();
        let dist = placement_distribution(&c, PlacementPolicy::Urp).unwrap();
        let r = realize(&dist, &CacheConfig::homogeneous(50, 4), 3);
        assert!(r.per_node.iter().all(|s| s.len() == 4));
    }

    #[test]
    fn hit_probability_examples() {
        let d = PlacementDistribution::from_weights(vec![0.6f64, 0.4]).unwrap();
        let h = hit_probability(&d, 2);
        assert_relative_eq!(h[0], 0.84, epsilon = 1e-12);
        assert_relative_eq!(h[1], 0.64, epsilon = 1e-12);
        assert!(hit_probability(&d, 0).iter().all(|&x| x == 0.0));
        assert_eq!(urp_exact_hit_probability::<f64>(4, 2), 0.5);
    }

    #[test]
    fn lbnd_examples() {
        let c = make_catalog(4, 1.0f64).unwrap();
        assert_relative_eq!(
            lbnd_delay_given_distance(&c, 2, 10).unwrap(),
            1.28,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            lbnd_delay_given_distance(&c, 2, 1).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            lbnd_delay_given_distance(&c, 4, 7).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert!(lbnd_delay_given_distance(&c, 0, 7).is_err());
    }

    #[test]
    fn realization_json_round_trip() {
        let c = make_catalog(20, 1.0f64).unwrap();
        let dist = placement_distribution(&c, PlacementPolicy::Tpp).unwrap();
        let r = realize(&dist, &CacheConfig::homogeneous(5, 3), 11);
        let back = PlacementRealization::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(r, back);
        assert_eq!(r, realize(&dist, &CacheConfig::homogeneous(5, 3), 11));
    }
}
