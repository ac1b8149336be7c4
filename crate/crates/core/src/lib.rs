//! Cache-network delay toolkit.
//!
//! The crate covers network topologies and routing distances, Zipf content
//! catalogs, static placement policies (URP, PPP, TPP, TPP-C) and the LBND
//! ordering oracle, closed-form delay evaluators and bounds, a slotted
//! request simulator with static and dynamic (LRU, LFU, random) caches, and
//! an experiment runner that writes CSV results.
//!
//! Analytical code is generic over [`Real`] (`f64` or `f32`); the aliases at
//! the crate root fix the scalar to `f64`.

// `!(x >= y)` is used on purpose so that NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod catalog;
pub mod error;
pub mod experiment;
pub mod placement;
pub mod scalar;
pub mod sim;
pub mod topology;

pub use catalog::{
    cs_bound, make_catalog, placement_distribution, placement_distribution_with, Catalog,
    CutRounding, PlacementDistribution, PlacementPolicy,
};
pub use error::{Error, Result};
pub use placement::{bow_config, realize, CacheConfig, PlacementRealization, Sizing};
pub use scalar::Real;
pub use topology::{
    distance_model, DistanceMode, DistanceModel, Topology, TopologyKind, TopologySpec,
};

pub type Catalog64 = Catalog<f64>;
pub type Catalog32 = Catalog<f32>;
pub type PlacementDistribution64 = PlacementDistribution<f64>;
pub type DistanceModel64 = DistanceModel<f64>;
pub type BoundReport64 = analysis::BoundReport<f64>;
pub type DelayCurve64 = analysis::DelayCurve<f64>;
