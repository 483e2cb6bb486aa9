//! Online POMDP planning over particle beliefs with information-theoretic
//! rewards: a PFT-DPW baseline and SITH-PFT, which replaces the exact entropy
//! estimate with adaptively refined bounds while building the same tree.

pub mod belief;
pub mod config;
pub mod entropy;
mod error;
pub mod lightdark;
pub mod model;
pub mod particle_filter;
pub mod pft_dpw;
pub mod rng;
pub mod search;
pub mod selection;
pub mod sith;
pub mod snapshot;
#[cfg(test)]
mod test_models;

pub use belief::ParticleBelief;
pub use config::PlannerConfig;
pub use entropy::{boers_minus_entropy, init_cache, BoundsPair, SimplificationCache};
pub use error::{Error, Result};
pub use model::{CountingModel, GenerativeModel};
pub use particle_filter::{pf_update, sample_observation, PfUpdate};
pub use pft_dpw::plan_baseline;
pub use rng::{SeededStream, StreamKey};
pub use search::{PlanOutcome, PlanReport};
pub use sith::{plan as plan_sith, plan_with_strategy, ResimplificationStrategy};
pub use snapshot::{compare_trees, SearchTree, TreeComparison, TreeSnapshot};
