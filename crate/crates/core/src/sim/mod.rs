//! Slotted request simulator.
//!
//! In every slot each requester node independently issues a request with
//! probability `arrival_prob`. The content is drawn from the catalog and the
//! request walks the shortest path towards the content's server, checking
//! the caches of the nodes it visits starting with the requester's own. A hit
//! at the `k`-th visited node costs `k` hops; reaching the server costs the
//! routing distance `d`. The node adjacent to the server is the `d`-th one
//! visited, so a hit there costs the same as the server fetch.

mod cache;
mod scenario;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::catalog::{Catalog, PlacementDistribution};
use crate::error::{Error, Result};
use crate::placement::{realize, CacheConfig, PlacementRealization};
use crate::topology::{NextHopTable, Topology};

pub use cache::{replacement_step, CacheEvent, NodeCache, ReplacementPolicy};
pub use scenario::{scenario, Scenario, ScenarioName, ScenarioOverrides};

// Stream ids for the simulator's RNGs, far above any node id used by the
// placement realization under the same seed.
const STREAM_SERVERS: u64 = 1 << 48;
const STREAM_REQUESTS: u64 = (1 << 48) + 1;
const STREAM_REPLACEMENT: u64 = (1 << 48) + 2;

/// Number of batches used for the single-run confidence interval.
pub const BATCHES: usize = 10;

/// Where content servers are attached.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerPlacement {
    /// Each content gets an independent uniformly random node per run.
    UniformPerContent,
    /// All servers hang off one node.
    Fixed { node: usize },
}

/// Which nodes generate requests.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Requesters {
    AllNodes,
    /// Nodes in the deepest layer of a regular tree.
    BottomLayer,
    Nodes {
        nodes: Vec<usize>,
    },
}

/// When a delivered content is offered to dynamic caches.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InsertOn {
    /// Every node the content passes on its way back.
    #[default]
    Delivery,
    /// Only the requester's own cache.
    FirstHop,
}

#[derive(Clone, Copy, Debug)]
pub enum CachePolicy<'a> {
    Static(&'a PlacementRealization),
    Dynamic(ReplacementPolicy),
}

impl CachePolicy<'_> {
    pub fn name(&self) -> String {
        match self {
            CachePolicy::Static(r) => r.policy.clone(),
            CachePolicy::Dynamic(p) => p.name().to_string(),
        }
    }
}

/// One simulation run.
#[derive(Clone, Debug)]
pub struct SimConfig<'a> {
    pub topology: &'a Topology,
    pub catalog: &'a Catalog<f64>,
    pub caches: &'a CacheConfig,
    pub policy: CachePolicy<'a>,
    pub arrival_prob: f64,
    pub slots: usize,
    pub warmup_slots: usize,
    pub seed: u64,
    pub servers: ServerPlacement,
    pub requesters: Requesters,
    pub insert_on: InsertOn,
}

impl SimConfig<'_> {
    pub fn validate(&self) -> Result<()> {
        let n = self.topology.node_count();
        if !(self.arrival_prob > 0.0 && self.arrival_prob <= 1.0) {
            return Err(Error::invalid(format!(
                "arrival probability must lie in (0, 1], got {}",
                self.arrival_prob
            )));
        }
        if self.warmup_slots >= self.slots {
            return Err(Error::invalid(format!(
                "warmup ({}) must be shorter than the run ({} slots)",
                self.warmup_slots, self.slots
            )));
        }
        if self.caches.node_count() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: self.caches.node_count(),
            });
        }
        if n < 2 {
            return Err(Error::invalid("simulation needs at least two nodes"));
        }
        if let CachePolicy::Static(r) = self.policy {
            if r.per_node.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: r.per_node.len(),
                });
            }
            if let Some(v) = (0..n).find(|&v| r.per_node[v].len() > self.caches.budget(v)) {
                return Err(Error::invalid(format!(
                    "placement exceeds the budget of node {v}"
                )));
            }
            if r.per_node
                .iter()
                .flatten()
                .any(|&c| c as usize >= self.catalog.len())
            {
                return Err(Error::invalid(
                    "placement references a content outside the catalog",
                ));
            }
        }
        if let ServerPlacement::Fixed { node } = self.servers {
            if node >= n {
                return Err(Error::invalid(format!("server node {node} out of range")));
            }
        }
        let req = self.requester_nodes()?;
        if req.is_empty() {
            return Err(Error::invalid("no requester nodes"));
        }
        if let ServerPlacement::Fixed { node } = self.servers {
            if req.iter().all(|&v| v == node) {
                return Err(Error::invalid(
                    "every requester coincides with the server node",
                ));
            }
        }
        Ok(())
    }

    fn requester_nodes(&self) -> Result<Vec<usize>> {
        let n = self.topology.node_count();
        match &self.requesters {
            Requesters::AllNodes => Ok((0..n).collect()),
            Requesters::BottomLayer => {
                let h = self
                    .topology
                    .tree_height()
                    .ok_or_else(|| Error::invalid("bottom-layer requesters need a regular tree"))?;
                Ok(self.topology.nodes_in_layer(h))
            }
            Requesters::Nodes { nodes } => {
                if let Some(&v) = nodes.iter().find(|&&v| v >= n) {
                    return Err(Error::invalid(format!("requester node {v} out of range")));
                }
                Ok(nodes.clone())
            }
        }
    }
}

/// Outcome of one run, measured after warmup.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimResult {
    pub mean_delay: f64,
    /// Half-width of a 95% t-interval over [`BATCHES`] batch means.
    pub ci95_halfwidth: f64,
    pub request_count: u64,
    pub delay_sum: u64,
    /// `d -> (mean delay, request count)`.
    pub per_distance: BTreeMap<u32, (f64, u64)>,
    /// Fraction of measured requests served by a cache in each tree layer.
    pub hit_rate_per_layer: Option<Vec<f64>>,
    /// Mean delay over consecutive thirds of the measured window, used to
    /// check for drift.
    pub window_means: [f64; 3],
}

/// Runs one simulation. Deterministic for a fixed configuration and seed.
pub fn run(cfg: &SimConfig<'_>) -> Result<SimResult> {
    cfg.validate()?;
    let topo = cfg.topology;
    let n = topo.node_count();
    let requesters = cfg.requester_nodes()?;

    let mut server_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    server_rng.set_stream(STREAM_SERVERS);
    let servers: Vec<usize> = match cfg.servers {
        ServerPlacement::UniformPerContent => (0..cfg.catalog.len())
            .map(|_| server_rng.random_range(0..n))
            .collect(),
        ServerPlacement::Fixed { node } => vec![node; cfg.catalog.len()],
    };
    let tables = routing_tables(topo, &servers);

    let mut req_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    req_rng.set_stream(STREAM_REQUESTS);
    let mut repl_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    repl_rng.set_stream(STREAM_REPLACEMENT);

    let mut dynamic: Option<Vec<NodeCache>> = match cfg.policy {
        CachePolicy::Dynamic(p) => Some(
            (0..n)
                .map(|v| NodeCache::new(p, cfg.caches.budget(v)))
                .collect(),
        ),
        CachePolicy::Static(_) => None,
    };
    let layers = topo.layers();
    let layer_count = layers.map(|l| l.iter().max().copied().unwrap_or(0) + 1);
    let mut layer_hits = vec![0u64; layer_count.unwrap_or(0)];

    let measured = cfg.slots - cfg.warmup_slots;
    let mut batch_sum = [0u64; BATCHES];
    let mut batch_count = [0u64; BATCHES];
    let mut window_sum = [0u64; 3];
    let mut window_count = [0u64; 3];
    let mut per_distance: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
    let mut path: Vec<usize> = Vec::new();

    for slot in 0..cfg.slots {
        let measuring = slot >= cfg.warmup_slots;
        let offset = slot.saturating_sub(cfg.warmup_slots);
        for &origin in &requesters {
            if req_rng.random::<f64>() >= cfg.arrival_prob {
                continue;
            }
            let content = cfg.catalog.sample(&mut req_rng);
            let server = servers[content];
            let mut requester = origin;
            while requester == server {
                requester = requesters[req_rng.random_range(0..requesters.len())];
            }
            let table = tables[server]
                .as_ref()
                .expect("table built for every server");
            let d = table.distance(requester);
            let c = content as u32;

            path.clear();
            let mut node = requester;
            let mut hit_at = None;
            for l in 0..d as usize {
                let hit = match (&cfg.policy, &dynamic) {
                    (CachePolicy::Static(r), _) => r.contains(node, content),
                    (_, Some(caches)) => caches[node].contains(c),
                    _ => unreachable!(),
                };
                if let Some(caches) = dynamic.as_mut() {
                    let event = if hit {
                        CacheEvent::Hit
                    } else {
                        CacheEvent::MissPassThrough
                    };
                    caches[node].step(c, event, &mut repl_rng);
                }
                if hit {
                    hit_at = Some((l, node));
                    break;
                }
                path.push(node);
                node = table.next_hop(node).expect("connected topology");
            }
            if let Some(caches) = dynamic.as_mut() {
                let receivers = match cfg.insert_on {
                    InsertOn::Delivery => &path[..],
                    InsertOn::FirstHop => &path[..path.len().min(1)],
                };
                for &v in receivers.iter().rev() {
                    caches[v].step(c, CacheEvent::Delivered, &mut repl_rng);
                }
            }
            let delay = hit_at.map_or(d, |(l, _)| l as u32 + 1);
            debug_assert!(delay >= 1 && delay <= d);

            if measuring {
                let b = offset * BATCHES / measured;
                batch_sum[b] += delay as u64;
                batch_count[b] += 1;
                let w = offset * 3 / measured;
                window_sum[w] += delay as u64;
                window_count[w] += 1;
                let e = per_distance.entry(d).or_insert((0, 0));
                e.0 += delay as u64;
                e.1 += 1;
                if let (Some(layers), Some((_, v))) = (layers, hit_at) {
                    layer_hits[layers[v]] += 1;
                }
            }
        }
    }

    let request_count: u64 = batch_count.iter().sum();
    if request_count == 0 {
        return Err(Error::invalid(
            "no requests were measured; increase slots or arrival probability",
        ));
    }
    let delay_sum: u64 = batch_sum.iter().sum();
    let batch_means: Vec<f64> = batch_sum
        .iter()
        .zip(&batch_count)
        .filter(|(_, &k)| k > 0)
        .map(|(&s, &k)| s as f64 / k as f64)
        .collect();
    let window_means = [0, 1, 2].map(|w| {
        if window_count[w] == 0 {
            f64::NAN
        } else {
            window_sum[w] as f64 / window_count[w] as f64
        }
    });
    Ok(SimResult {
        mean_delay: delay_sum as f64 / request_count as f64,
        ci95_halfwidth: ci95_halfwidth(&batch_means),
        request_count,
        delay_sum,
        per_distance: per_distance
            .into_iter()
            .map(|(d, (s, k))| (d, (s as f64 / k as f64, k)))
            .collect(),
        hit_rate_per_layer: layer_count.map(|_| {
            layer_hits
                .iter()
                .map(|&h| h as f64 / request_count as f64)
                .collect()
        }),
        window_means,
    })
}

fn routing_tables(topo: &Topology, servers: &[usize]) -> Vec<Option<NextHopTable>> {
    let mut distinct: Vec<usize> = servers.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let built: Vec<(usize, NextHopTable)> = distinct
        .par_iter()
        .map(|&s| (s, topo.next_hop_table(s)))
        .collect();
    let mut tables: Vec<Option<NextHopTable>> = vec![None; topo.node_count()];
    for (s, t) in built {
        tables[s] = Some(t);
    }
    tables
}

/// Half-width of the 95% Student-t interval of the mean of `samples`
/// (NaN with fewer than two samples).
pub fn ci95_halfwidth(samples: &[f64]) -> f64 {
    let k = samples.len();
    if k < 2 {
        return f64::NAN;
    }
    let mean = samples.iter().sum::<f64>() / k as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (k - 1) as f64)
        .expect("valid degrees of freedom")
        .inverse_cdf(0.975);
    t * (var / k as f64).sqrt()
}

/// Placement rule for a multi-seed run: a static distribution realized
/// afresh for each seed, or a dynamic replacement policy.
#[derive(Clone, Debug)]
pub enum PolicySpec {
    Static(PlacementDistribution<f64>),
    Dynamic(ReplacementPolicy),
}

impl PolicySpec {
    pub fn name(&self) -> String {
        match self {
            PolicySpec::Static(d) => d.policy().to_string(),
            PolicySpec::Dynamic(p) => p.name().to_string(),
        }
    }

    pub fn is_dynamic(&self) -> bool {
        matches!(self, PolicySpec::Dynamic(_))
    }
}

/// Everything but the seed and the policy.
#[derive(Clone, Debug)]
pub struct SimSetup<'a> {
    pub topology: &'a Topology,
    pub catalog: &'a Catalog<f64>,
    pub caches: &'a CacheConfig,
    pub arrival_prob: f64,
    pub slots: usize,
    pub warmup_slots: usize,
    pub servers: ServerPlacement,
    pub requesters: Requesters,
    pub insert_on: InsertOn,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeedSummary {
    pub seeds: Vec<u64>,
    pub runs: Vec<SimResult>,
    /// Mean of the per-seed means.
    pub mean_delay: f64,
    /// 95% t-interval half-width over per-seed means; falls back to the
    /// batch-means interval for a single seed.
    pub ci95_halfwidth: f64,
}

/// Runs one policy under every seed (in parallel) and aggregates.
pub fn run_seeds(setup: &SimSetup<'_>, policy: &PolicySpec, seeds: &[u64]) -> Result<SeedSummary> {
    if seeds.is_empty() {
        return Err(Error::invalid("at least one seed is required"));
    }
    let runs = seeds
        .par_iter()
        .map(|&seed| {
            let realization;
            let cache_policy = match policy {
                PolicySpec::Static(dist) => {
                    realization = realize(dist, setup.caches, seed);
                    CachePolicy::Static(&realization)
                }
                PolicySpec::Dynamic(p) => CachePolicy::Dynamic(*p),
            };
            run(&SimConfig {
                topology: setup.topology,
                catalog: setup.catalog,
                caches: setup.caches,
                policy: cache_policy,
                arrival_prob: setup.arrival_prob,
                slots: setup.slots,
                warmup_slots: setup.warmup_slots,
                seed,
                servers: setup.servers.clone(),
                requesters: setup.requesters.clone(),
                insert_on: setup.insert_on,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let means: Vec<f64> = runs.iter().map(|r| r.mean_delay).collect();
    let mean_delay = means.iter().sum::<f64>() / means.len() as f64;
    let ci = if runs.len() == 1 {
        runs[0].ci95_halfwidth
    } else {
        ci95_halfwidth(&means)
    };
    Ok(SeedSummary {
        seeds: seeds.to_vec(),
        runs,
        mean_delay,
        ci95_halfwidth: ci,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{make_catalog, placement_distribution, PlacementPolicy};
    use crate::topology::{build_line, build_regular_tree};

    fn base<'a>(
        t: &'a Topology,
        c: &'a Catalog<f64>,
        caches: &'a CacheConfig,
        policy: CachePolicy<'a>,
    ) -> SimConfig<'a> {
        SimConfig {
            topology: t,
            catalog: c,
            caches,
            policy,
            arrival_prob: 0.5,
            slots: 200,
            warmup_slots: 20,
            seed: 1,
            servers: ServerPlacement::UniformPerContent,
            requesters: Requesters::AllNodes,
            insert_on: InsertOn::Delivery,
        }
    }

    #[test]
    fn everything_cached_gives_one_hop() {
        let t = build_line(10).unwrap();
        let c = make_catalog(1, 1.0).unwrap();
        let caches = CacheConfig::homogeneous(10, 1);
        let r = PlacementRealization {
            seed: 0,
            policy: "ALL".into(),
            per_node: vec![vec![0]; 10],
        };
        let res = run(&base(&t, &c, &caches, CachePolicy::Static(&r))).unwrap();
        assert_eq!(res.mean_delay, 1.0);
    }

    #[test]
    fn empty_caches_give_routing_distance() {
        let t = build_line(6).unwrap();
        let c = make_catalog(20, 1.0).unwrap();
        let caches = CacheConfig::homogeneous(6, 0);
        let r = PlacementRealization {
            seed: 0,
            policy: "NONE".into(),
            per_node: vec![vec![]; 6],
        };
        let res = run(&base(&t, &c, &caches, CachePolicy::Static(&r))).unwrap();
        for (&d, &(mean, _)) in &res.per_distance {
            assert_eq!(mean, d as f64);
        }
    }

    #[test]
    fn deterministic_and_consistent() {
        let t = build_line(20).unwrap();
        let c = make_catalog(50, 1.2).unwrap();
        let caches = CacheConfig::homogeneous(20, 3);
        for policy in [
            ReplacementPolicy::Lru,
            ReplacementPolicy::Lfu,
            ReplacementPolicy::Random,
        ] {
            let cfg = base(&t, &c, &caches, CachePolicy::Dynamic(policy));
            let a = run(&cfg).unwrap();
            let b = run(&cfg).unwrap();
            assert_eq!(a, b);
            let weighted: f64 = a
                .per_distance
                .values()
                .map(|&(m, k)| m * k as f64)
                .sum::<f64>()
                / a.request_count as f64;
            assert!((weighted - a.mean_delay).abs() < 1e-9);
        }
    }

    #[test]
    fn tree_scenario_records_layers() {
        let t = build_regular_tree(2, 3).unwrap();
        let c = make_catalog(30, 1.0).unwrap();
        let caches = CacheConfig::homogeneous(t.node_count(), 2);
        let dist = placement_distribution(&c, PlacementPolicy::Tpp).unwrap();
        let r = realize(&dist, &caches, 4);
        let mut cfg = base(&t, &c, &caches, CachePolicy::Static(&r));
        cfg.servers = ServerPlacement::Fixed { node: 0 };
        cfg.requesters = Requesters::BottomLayer;
        let res = run(&cfg).unwrap();
        let layers = res.hit_rate_per_layer.unwrap();
        assert_eq!(layers.len(), 4);
        assert_eq!(
            layers[0], 0.0,
            "root is the server attachment, never visited"
        );
        assert!(res.per_distance.keys().all(|&d| d == 3));
    }

    #[test]
    fn validation_errors() {
        let t = build_line(5).unwrap();
        let c = make_catalog(5, 1.0).unwrap();
        let caches = CacheConfig::homogeneous(5, 1);
        let mut cfg = base(
            &t,
            &c,
            &caches,
            CachePolicy::Dynamic(ReplacementPolicy::Lru),
        );
        cfg.arrival_prob = 0.0;
        assert!(run(&cfg).is_err());
        cfg.arrival_prob = 0.5;
        cfg.warmup_slots = 200;
        assert!(run(&cfg).is_err());
        let wrong = CacheConfig::homogeneous(4, 1);
        let cfg = base(&t, &c, &wrong, CachePolicy::Dynamic(ReplacementPolicy::Lru));
        assert!(run(&cfg).is_err());
    }

    #[test]
    fn ci_of_constant_samples_is_zero() {
        assert_eq!(ci95_halfwidth(&[2.0, 2.0, 2.0]), 0.0);
        assert!(ci95_halfwidth(&[1.0]).is_nan());
        let hw = ci95_halfwidth(&[1.0, 2.0, 3.0, 4.0]);
        assert!((hw - 3.182446305284263 * (1.6666666666666667f64 / 4.0).sqrt()).abs() < 1e-9);
    }
}
