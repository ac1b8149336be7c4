//! Preset simulation environments.
//!
//! * `I`: a 200-node line, 400 contents, 50 slots per cache.
//! * `II`: an imported AS-level graph, 3000 contents, 5 slots per cache.
//! * `III`: the binary (r = 2) regular tree of height 15, 3000 contents,
//!   5 slots per cache on average; servers at the root, requests from the
//!   bottom layer.
//!
//! Every default can be overridden, which is how the reduced-scale variants
//! are built.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{InsertOn, Requesters, ServerPlacement};
use crate::error::{Error, Result};
use crate::placement::{bow_config, CacheConfig, Sizing};
use crate::topology::{distance_model, DistanceMode, Topology, TopologySpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioName {
    I,
    II,
    III,
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(ScenarioName::I),
            "II" | "2" => Ok(ScenarioName::II),
            "III" | "3" => Ok(ScenarioName::III),
            _ => Err(Error::Plan(format!("unknown scenario {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioOverrides {
    pub topology: Option<TopologySpec>,
    pub content_count: Option<usize>,
    /// Per-node budget for homogeneous sizing.
    pub s: Option<usize>,
    /// Network-wide budget for tree scenarios; defaults to `s * n`.
    pub total_budget: Option<usize>,
    /// Deepest black layer for tree scenarios; defaults to the tree height.
    pub cut_layer: Option<usize>,
    pub arrival_prob: Option<f64>,
    pub slots: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub insert_on: Option<InsertOn>,
    /// Seed for sampled distance estimates on large graphs.
    pub distance_seed: Option<u64>,
}

/// A fully resolved environment, ready to be combined with a catalog and a
/// policy.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: ScenarioName,
    pub topology_label: String,
    pub topology: Topology,
    pub content_count: usize,
    pub caches: CacheConfig,
    pub servers: ServerPlacement,
    pub requesters: Requesters,
    pub arrival_prob: f64,
    pub slots: usize,
    pub seeds: Vec<u64>,
    pub insert_on: InsertOn,
    /// Average distance fed to TPP-C: the measured mean routing distance, or
    /// the black depth `max(c, 1)` on tree scenarios.
    pub d_bar: f64,
    /// Per-node budget fed to TPP-C (the black share on tree scenarios).
    pub tppc_s: usize,
    pub cut_layer: Option<usize>,
}

pub const DEFAULT_SLOTS: usize = 100_000;
pub const DEFAULT_SEED_COUNT: u64 = 10;
pub const DEFAULT_ARRIVAL_PROB: f64 = 0.5;

/// Builds a preset environment with overrides applied.
pub fn scenario(name: ScenarioName, o: &ScenarioOverrides) -> Result<Scenario> {
    let (default_topo, content_count, s) = match name {
        ScenarioName::I => (Some(TopologySpec::Line { n: 200 }), 400, 50),
        ScenarioName::II => (None, 3000, 5),
        ScenarioName::III => (Some(TopologySpec::RegularTree { r: 2, h: 15 }), 3000, 5),
    };
    let spec = o.topology.clone().or(default_topo).ok_or_else(|| {
        Error::Plan("scenario II needs a topology (a GraphML file or a generated graph)".into())
    })?;
    if name == ScenarioName::III && !matches!(spec, TopologySpec::RegularTree { .. }) {
        return Err(Error::Plan(
            "scenario III needs a regular tree topology".into(),
        ));
    }
    let topology = spec.build()?;
    let n = topology.node_count();
    let content_count = o.content_count.unwrap_or(content_count);
    let s = o.s.unwrap_or(s);
    if content_count == 0 {
        return Err(Error::Plan("content_count must be >= 1".into()));
    }

    let (caches, servers, requesters, d_bar, tppc_s, cut_layer) = if name == ScenarioName::III {
        let h = topology.tree_height().expect("regular tree");
        let c = o.cut_layer.unwrap_or(h);
        let total = o.total_budget.unwrap_or(s * n);
        let caches = bow_config(&topology, c, total)?;
        let black_s = match caches.sizing() {
            Sizing::BlackOrWhite {
                black_budget_per_node,
                ..
            } => black_budget_per_node,
            _ => unreachable!("bow_config always yields black-or-white sizing"),
        };
        let depth = c.max(1) as f64;
        (
            caches,
            ServerPlacement::Fixed { node: 0 },
            Requesters::BottomLayer,
            depth,
            black_s,
            Some(c),
        )
    } else {
        if o.cut_layer.is_some() || o.total_budget.is_some() {
            return Err(Error::Plan(
                "cut_layer and total_budget only apply to scenario III".into(),
            ));
        }
        let mode = DistanceMode::Auto {
            seed: o.distance_seed.unwrap_or(0),
        };
        let d_bar = distance_model::<f64>(&topology, mode)?.mean();
        (
            CacheConfig::homogeneous(n, s),
            ServerPlacement::UniformPerContent,
            Requesters::AllNodes,
            d_bar,
            s,
            None,
        )
    };

    let arrival_prob = o.arrival_prob.unwrap_or(DEFAULT_ARRIVAL_PROB);
    let slots = o.slots.unwrap_or(DEFAULT_SLOTS);
    let seeds = o
        .seeds
        .clone()
        .unwrap_or_else(|| (0..DEFAULT_SEED_COUNT).collect());
    if seeds.is_empty() {
        return Err(Error::Plan("at least one seed is required".into()));
    }
    Ok(Scenario {
        name,
        topology_label: spec.label(),
        topology,
        content_count,
        caches,
        servers,
        requesters,
        arrival_prob,
        slots,
        seeds,
        insert_on: o.insert_on.unwrap_or_default(),
        d_bar,
        tppc_s,
        cut_layer,
    })
}
