//! Pieces shared by both planners: stream labels, the rollout driver,
//! discounted accumulation, simulation traces and plan reports.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::belief::ParticleBelief;
use crate::error::{Error, Result};
use crate::model::GenerativeModel;
use crate::particle_filter::{pf_update, sample_observation, PfUpdate};
use crate::rng::StreamKey;
use crate::snapshot::TreeSnapshot;

/// Key of the root node for a planning session.
pub fn root_key(seed: u64) -> StreamKey {
    StreamKey::from_seed(seed).fork(b"root")
}

/// Key of the `n_ha`-th visit of action `a` at a node.
pub fn visit_key(node: StreamKey, a: usize, n_ha: u64) -> StreamKey {
    node.fork_indexed(b"visit", &[a as u64, n_ha])
}

/// Key of observation branch `index` under action `a`.
pub fn child_key(node: StreamKey, a: usize, index: usize) -> StreamKey {
    node.fork_indexed(b"child", &[a as u64, index as u64])
}

/// A belief is terminal once every particle is in a terminal state.
pub fn belief_is_terminal<M: GenerativeModel>(b: &ParticleBelief<M::State>, model: &M) -> bool {
    b.particles().iter().all(|x| model.is_terminal_state(x))
}

/// `sum_k gamma^k v_k`, accumulated front to back.
pub fn discounted_sum(values: impl IntoIterator<Item = f64>, gamma: f64) -> f64 {
    let mut acc = 0.0;
    let mut factor = 1.0;
    for v in values {
        acc += factor * v;
        factor *= gamma;
    }
    acc
}

/// One step of a rollout, handed to the caller's reward bookkeeping.
pub struct RolloutStep<S> {
    pub index: usize,
    /// Depth of the belief produced by this step.
    pub depth: usize,
    pub action: usize,
    pub update: PfUpdate<S>,
    pub key: StreamKey,
}

/// Simulate uniformly random non-terminal actions from `b` (at `depth`) down
/// to depth 0. A degenerate posterior truncates the rollout.
pub fn drive_rollout<M, F>(
    b: &ParticleBelief<M::State>,
    depth: usize,
    model: &M,
    key: StreamKey,
    mut on_step: F,
) -> Result<()>
where
    M: GenerativeModel,
    F: FnMut(RolloutStep<M::State>) -> Result<()>,
{
    let choices: Vec<usize> = (0..model.num_actions()).filter(|&a| !model.is_terminal_action(a)).collect();
    if choices.is_empty() {
        return Ok(());
    }
    let mut current = b.clone();
    for (index, d) in (1..=depth).rev().enumerate() {
        if belief_is_terminal(&current, model) {
            break;
        }
        let step_key = key.fork_indexed(b"step", &[index as u64]);
        let a = choices[step_key.fork(b"act").stream().random_range(0..choices.len())];
        let z = sample_observation(&current, a, model, &mut step_key.fork(b"obs").stream());
        let update = match pf_update(&current, a, &z, model, &mut step_key.fork(b"pf").stream()) {
            Ok(u) => u,
            Err(Error::DegeneratePosterior) => break,
            Err(e) => return Err(e),
        };
        let next = update.posterior.clone();
        on_step(RolloutStep { index, depth: d - 1, action: a, update, key: step_key })?;
        current = next;
    }
    Ok(())
}

/// One edge traversed by a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub node: usize,
    pub action: usize,
    /// Child reached, `None` when the particle filter degenerated.
    pub child: Option<usize>,
    /// Whether the child was created (and rolled out) by this simulation.
    pub created: bool,
    /// Return propagated through this edge: `(R, L, U)`, with `L = U` for the baseline.
    pub ret: [f64; 3],
}

/// Per-session report of one planner run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub algorithm: String,
    pub action: usize,
    pub wall_time_s: f64,
    /// Action-selection rounds that had to tighten bounds.
    pub resimplification_rounds: u64,
    /// Bound refinements (cache promotions).
    pub refinements: u64,
    /// Rounds where the depth-weighted refinement rule promoted nothing and
    /// every descendant was refined instead.
    pub fallback_rounds: u64,
    /// Caches per simplification level (index 0 is level 1), tree and rollouts.
    pub level_histogram: Vec<u64>,
    pub tree_nodes: usize,
    pub tree_digest: String,
}

/// Result of a planning session.
#[derive(Debug, Clone)]
pub struct PlanOutcome<T> {
    pub action: usize,
    pub report: PlanReport,
    pub tree: T,
    pub snapshot: TreeSnapshot,
}
