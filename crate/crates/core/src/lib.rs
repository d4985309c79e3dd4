//! Item selection for recommender cold-start.
//!
//! The pipeline picks the smallest set of catalog items that covers every
//! category label, steers that set toward items spread across the embedding
//! space, optionally bounds it to `t` items, and then warm-starts the
//! remaining items from their nearest selected neighbour. The [`explore`]
//! module reruns the selection over the shrinking cold set and simulates
//! exploration policies offline.

pub mod bitset;
pub mod catalog;
pub mod cli;
pub mod clustering;
pub mod embed;
pub mod error;
pub mod explore;
pub mod isp;
pub mod report;
pub mod setcover;
pub mod warmstart;

pub use catalog::{build_incidence, load_catalog, Catalog, CatalogFormat, IncidenceMatrix, Item, Label};
pub use clustering::{diversity_costs, kmeans, ClusterModel};
pub use embed::{load_embeddings, pairwise_distance, tfidf_embed, EmbeddingMatrix, Metric};
pub use error::{Error, Result};
pub use explore::{
    greedy_warmstart_policy, order_weights, recursive_isp, simulate, ExplorationPlan, Policy,
    SimulationConfig, SimulationResult, WeightScheme,
};
pub use isp::{
    baseline_kmeans, baseline_random, coverage, solve_isp, CoverageReport, DiversityMode, IspConfig,
    IspResult,
};
pub use setcover::{
    solve_max_cover, solve_unicost, solve_weighted, solve_weighted_with, Backend, CoverInstance, CoverOptions,
    Selection,
};
pub use warmstart::{resolve_threshold, unit_coverage, warm_start, WarmStartMap};
