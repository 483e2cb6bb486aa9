//! SITH-PFT: PFT-DPW with bounded information rewards.
//!
//! Every node stores a [`SimplificationCache`] whose bounds `[l, u]` replace
//! the exact `-H`. Action selection compares bounded UCB intervals and only
//! tightens bounds while intervals overlap, so the tree (actions,
//! observations, visit counts) matches the baseline planner built with the
//! same seed.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::belief::ParticleBelief;
use crate::config::PlannerConfig;
use crate::entropy::{init_cache, BoundsPair, SimplificationCache};
use crate::error::{Error, Result};
use crate::model::GenerativeModel;
use crate::particle_filter::{pf_update, sample_observation};
use crate::rng::StreamKey;
use crate::search::{
    belief_is_terminal, child_key, discounted_sum, drive_rollout, root_key, visit_key, PlanOutcome, PlanReport,
    TraceStep,
};
use crate::selection::{dpw_allows_new_child, refine_condition, ucb_bounds};
use crate::snapshot::{observation_bits, snapshot_dfs, NodeView, SearchTree, TreeSnapshot};

/// How bounds are tightened once action selection finds an overlap.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResimplificationStrategy {
    /// Depth-weighted rule: refine only nodes whose discounted gap exceeds
    /// the triggering gap spread over its depth.
    #[default]
    Specific,
    /// Refine every descendant one level.
    BruteForce,
}

/// The belief-action node whose gap triggered resimplification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapQuery {
    pub node: usize,
    pub action: usize,
    pub gap: f64,
    /// Depth of the belief node `h`.
    pub depth: usize,
}

#[derive(Debug, Clone)]
pub struct RolloutEntry<S> {
    pub cache: Option<SimplificationCache<S>>,
    pub bounds: BoundsPair,
    /// Depth of the belief reached by this step.
    pub depth: usize,
    /// Discount exponent inside the rollout.
    pub exponent: u32,
}

/// Rollout from a tree leaf with its discounted `(R, L, U)` contributions.
#[derive(Debug, Clone)]
pub struct RolloutRecord<S> {
    pub entries: Vec<RolloutEntry<S>>,
    pub reward: f64,
    pub lower: f64,
    pub upper: f64,
}

impl<S> Default for RolloutRecord<S> {
    fn default() -> Self {
        RolloutRecord { entries: Vec::new(), reward: 0.0, lower: 0.0, upper: 0.0 }
    }
}

impl<S> RolloutRecord<S> {
    fn recompute(&mut self, gamma: f64) {
        self.lower = discounted_sum(self.entries.iter().map(|e| e.bounds.lower), gamma);
        self.upper = discounted_sum(self.entries.iter().map(|e| e.bounds.upper), gamma);
    }
}

#[derive(Debug, Clone, Default)]
pub struct SithAction {
    pub n: u64,
    pub q_x: f64,
    pub lb: f64,
    pub ub: f64,
    pub children: Vec<usize>,
}

impl SithAction {
    pub fn gap(&self) -> f64 {
        self.ub - self.lb
    }
}

#[derive(Debug, Clone)]
pub struct SithNode<S, O> {
    pub belief: ParticleBelief<S>,
    pub key: StreamKey,
    pub depth: usize,
    pub n: u64,
    pub visits: u64,
    pub terminal: bool,
    pub observation: Option<O>,
    pub r_x: f64,
    /// `None` at the root and when `lambda = 0`.
    pub cache: Option<SimplificationCache<S>>,
    pub bounds: BoundsPair,
    pub rollout: RolloutRecord<S>,
    pub actions: Vec<SithAction>,
}

#[derive(Debug, Clone)]
pub struct SithTree<S, O> {
    pub nodes: Vec<SithNode<S, O>>,
}

impl<S, O: AsRef<[f64]>> SearchTree for SithTree<S, O> {
    fn snapshot(&self) -> TreeSnapshot {
        snapshot_dfs(|id| {
            let node = &self.nodes[id];
            NodeView {
                n: node.n,
                visits: node.visits,
                observation: observation_bits(node.observation.as_ref()),
                actions: node.actions.iter().map(|a| (a.n, a.children.clone())).collect(),
            }
        })
    }
}

impl<S: Clone, O> SithTree<S, O> {
    /// Caches per level (index 0 is level 1), tree nodes and rollouts.
    pub fn level_histogram(&self, levels: usize) -> Vec<u64> {
        let mut hist = vec![0; levels];
        let caches = self
            .nodes
            .iter()
            .flat_map(|n| n.cache.iter().chain(n.rollout.entries.iter().filter_map(|e| e.cache.as_ref())));
        for c in caches {
            hist[c.level() - 1] += 1;
        }
        hist
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SithStats {
    pub rounds: u64,
    pub refinements: u64,
    pub fallback_rounds: u64,
}

/// Gap of the resimplified belief-action node before and after one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRecord {
    pub node: usize,
    pub action: usize,
    pub before: f64,
    pub after: f64,
}

/// SITH-PFT planner for one session.
pub struct SithPft<'m, M: GenerativeModel> {
    model: &'m M,
    cfg: PlannerConfig,
    strategy: ResimplificationStrategy,
    tree: SithTree<M::State, M::Observation>,
    caches: usize,
    watermark: usize,
    stats: SithStats,
    trace: Option<Vec<Vec<TraceStep>>>,
    gap_log: Option<Vec<GapRecord>>,
    current: Vec<TraceStep>,
}

impl<'m, M: GenerativeModel> SithPft<'m, M> {
    pub fn new(b0: ParticleBelief<M::State>, cfg: &PlannerConfig, model: &'m M) -> Result<Self> {
        cfg.validate()?;
        let terminal = belief_is_terminal(&b0, model);
        let root = SithNode {
            belief: b0,
            key: root_key(cfg.seed),
            depth: cfg.d_max,
            n: 1,
            visits: 1,
            terminal,
            observation: None,
            r_x: 0.0,
            cache: None,
            bounds: BoundsPair::exact(0.0),
            rollout: RolloutRecord::default(),
            actions: Vec::new(),
        };
        Ok(SithPft {
            model,
            cfg: cfg.clone(),
            strategy: ResimplificationStrategy::Specific,
            tree: SithTree { nodes: vec![root] },
            caches: 0,
            watermark: usize::MAX,
            stats: SithStats::default(),
            trace: None,
            gap_log: None,
            current: Vec::new(),
        })
    }

    pub fn with_strategy(mut self, strategy: ResimplificationStrategy) -> Self {
        self.strategy = strategy;
        self
    }

    /// Record every simulation's path and returns, and every round's gap change.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self.gap_log = Some(Vec::new());
        self
    }

    pub fn tree(&self) -> &SithTree<M::State, M::Observation> {
        &self.tree
    }

    pub fn into_tree(self) -> SithTree<M::State, M::Observation> {
        self.tree
    }

    pub fn stats(&self) -> SithStats {
        self.stats
    }

    pub fn traces(&self) -> &[Vec<TraceStep>] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn gap_log(&self) -> &[GapRecord] {
        self.gap_log.as_deref().unwrap_or(&[])
    }

    pub fn simulate_once(&mut self) -> Result<(f64, f64, f64)> {
        self.current.clear();
        self.watermark = usize::MAX;
        let out = self.simulate(0, self.cfg.d_max)?;
        if let Some(t) = self.trace.as_mut() {
            t.push(std::mem::take(&mut self.current));
        }
        Ok(out)
    }

    /// Root action with exploration switched off, tightening bounds as needed.
    pub fn best_action(&mut self) -> Result<usize> {
        self.action_selection(0, 0.0, true)
    }

    /// Refine every cache below `h` one level and rebuild the affected bounds.
    pub fn refine_subtree(&mut self, h: usize) -> Result<()> {
        self.refine_all(h)
    }

    /// Rebuild every visited belief-action node's bounds from its children, deepest first.
    pub fn reconstruct_all(&mut self) -> Result<()> {
        for h in (0..self.tree.nodes.len()).rev() {
            for a in 0..self.tree.nodes[h].actions.len() {
                self.reconstruct(h, a)?;
            }
        }
        Ok(())
    }

    fn simulate(&mut self, h: usize, depth: usize) -> Result<(f64, f64, f64)> {
        if depth == 0 || self.tree.nodes[h].terminal {
            return Ok((0.0, 0.0, 0.0));
        }
        if self.tree.nodes[h].actions.is_empty() {
            self.tree.nodes[h].actions = vec![SithAction::default(); self.model.num_actions()];
        }
        let gamma = self.cfg.gamma;
        let a = self.action_selection(h, self.cfg.c, false)?;
        let node = &self.tree.nodes[h];
        let n_ha = node.actions[a].n;
        let n_children = node.actions[a].children.len();
        let vkey = visit_key(node.key, a, n_ha);
        let slot = self.current.len();
        self.current.push(TraceStep { node: h, action: a, child: None, created: false, ret: [0.0; 3] });

        let ret = if dpw_allows_new_child(n_ha, n_children, self.cfg.k_o, self.cfg.alpha_o) {
            let z = sample_observation(&node.belief, a, self.model, &mut vkey.fork(b"obs").stream());
            match pf_update(&node.belief, a, &z, self.model, &mut vkey.fork(b"pf").stream()) {
                Err(Error::DegeneratePosterior) => (0.0, 0.0, 0.0),
                Err(e) => return Err(e),
                Ok(update) => {
                    let ckey = child_key(node.key, a, n_children);
                    let terminal =
                        self.model.is_terminal_action(a) || belief_is_terminal(&update.posterior, self.model);
                    let belief = update.posterior.clone();
                    let r_x = update.r_x;
                    let (cache, bounds) = self.bound_update(update, a, ckey.fork(b"perm"))?;
                    let rollout = if terminal {
                        RolloutRecord::default()
                    } else {
                        self.rollout(&belief, depth - 1, ckey.fork(b"rollout"))?
                    };
                    let ret = (
                        r_x + gamma * rollout.reward,
                        bounds.lower + gamma * rollout.lower,
                        bounds.upper + gamma * rollout.upper,
                    );
                    let id = self.tree.nodes.len();
                    self.tree.nodes.push(SithNode {
                        belief,
                        key: ckey,
                        depth: depth - 1,
                        n: 1,
                        visits: 1,
                        terminal,
                        observation: Some(z),
                        r_x,
                        cache,
                        bounds,
                        rollout,
                        actions: Vec::new(),
                    });
                    self.tree.nodes[h].actions[a].children.push(id);
                    self.current[slot].child = Some(id);
                    self.current[slot].created = true;
                    ret
                }
            }
        } else {
            let pick = vkey.fork(b"reuse").stream().random_range(0..n_children);
            let c = node.actions[a].children[pick];
            self.current[slot].child = Some(c);
            let child = &mut self.tree.nodes[c];
            child.visits += 1;
            let (r_x, b) = (child.r_x, child.bounds);
            let (r, l, u) = self.simulate(c, depth - 1)?;
            (r_x + gamma * r, b.lower + gamma * l, b.upper + gamma * u)
        };

        let node = &mut self.tree.nodes[h];
        node.n += 1;
        let act = &mut node.actions[a];
        act.n += 1;
        let n = act.n as f64;
        act.q_x += (ret.0 - act.q_x) / n;
        if self.watermark < depth {
            self.reconstruct(h, a)?;
        } else {
            let act = &mut self.tree.nodes[h].actions[a];
            act.lb += (ret.1 - act.lb) / n;
            act.ub += (ret.2 - act.ub) / n;
        }
        self.current[slot].ret = [ret.0, ret.1, ret.2];
        Ok(ret)
    }

    fn bound_update(
        &mut self,
        update: crate::particle_filter::PfUpdate<M::State>,
        a: usize,
        perm: StreamKey,
    ) -> Result<(Option<SimplificationCache<M::State>>, BoundsPair)> {
        if self.cfg.lambda == 0.0 {
            return Ok((None, BoundsPair::exact(0.0)));
        }
        let (cache, bounds) = init_cache(update, self.model, a, self.cfg.levels, perm)?;
        self.caches += 1;
        Ok((Some(cache), bounds))
    }

    fn rollout(
        &mut self,
        b: &ParticleBelief<M::State>,
        depth: usize,
        key: StreamKey,
    ) -> Result<RolloutRecord<M::State>> {
        let mut rewards = Vec::new();
        let mut entries = Vec::new();
        let model = self.model;
        drive_rollout(b, depth, model, key, |step| {
            rewards.push(step.update.r_x);
            let (cache, bounds) = self.bound_update(step.update, step.action, step.key.fork(b"perm"))?;
            entries.push(RolloutEntry { cache, bounds, depth: step.depth, exponent: step.index as u32 });
            Ok(())
        })?;
        let mut record =
            RolloutRecord { entries, reward: discounted_sum(rewards, self.cfg.gamma), lower: 0.0, upper: 0.0 };
        record.recompute(self.cfg.gamma);
        Ok(record)
    }

    /// Bounded UCB interval of every visited action at `h`.
    fn intervals(&self, h: usize, c: f64) -> Vec<Option<(f64, f64)>> {
        let node = &self.tree.nodes[h];
        node.actions
            .iter()
            .map(|act| (act.n > 0).then(|| ucb_bounds(act.q_x, act.lb, act.ub, act.n, node.n, c, self.cfg.lambda)))
            .collect()
    }

    /// One Select Best pass: `(true, a)` when `a` dominates every visited
    /// sibling, otherwise `(false, target)` naming the overlapping action with
    /// the largest gap.
    pub fn select_best(&self, h: usize, c: f64) -> Result<(bool, usize)> {
        let iv = self.intervals(h, c);
        let mut best: Option<(usize, f64)> = None;
        for (a, v) in iv.iter().enumerate() {
            if let Some((lo, _)) = v {
                if best.is_none_or(|(_, b)| *lo > b) {
                    best = Some((a, *lo));
                }
            }
        }
        let (a_tilde, lo_tilde) =
            best.ok_or_else(|| Error::InternalConsistency(format!("node {h} has no visited action")))?;
        let actions = &self.tree.nodes[h].actions;
        let mut status = true;
        let mut gap = 0.0;
        let mut target = a_tilde;
        for (a, v) in iv.iter().enumerate() {
            let Some((_, hi)) = v else { continue };
            if a != a_tilde && lo_tilde < *hi {
                status = false;
                let g = actions[a].gap();
                if g > gap {
                    gap = g;
                    target = a;
                }
            }
        }
        Ok((status, target))
    }

    fn action_selection(&mut self, h: usize, c: f64, greedy: bool) -> Result<usize> {
        if !greedy {
            if let Some(a) = self.tree.nodes[h].actions.iter().position(|a| a.n == 0) {
                return Ok(a);
            }
        }
        let cap = (self.caches + 1) * self.cfg.levels;
        for _ in 0..=cap {
            let (done, target) = self.select_best(h, c)?;
            if done {
                return Ok(target);
            }
            self.stats.rounds += 1;
            let before = self.tree.nodes[h].actions[target].gap();
            let query = GapQuery { node: h, action: target, gap: before, depth: self.tree.nodes[h].depth };
            let refined = self.stats.refinements;
            let children = self.tree.nodes[h].actions[target].children.clone();
            match self.strategy {
                ResimplificationStrategy::Specific => {
                    for &ch in &children {
                        self.resimplify(ch, &query)?;
                    }
                    if self.stats.refinements == refined {
                        self.stats.fallback_rounds += 1;
                        for &ch in &children {
                            self.refine_all(ch)?;
                        }
                    }
                }
                ResimplificationStrategy::BruteForce => {
                    for &ch in &children {
                        self.refine_all(ch)?;
                    }
                }
            }
            self.reconstruct(h, target)?;
            self.watermark = self.watermark.min(self.tree.nodes[h].depth);
            if let Some(log) = self.gap_log.as_mut() {
                let after = self.tree.nodes[h].actions[target].gap();
                log.push(GapRecord { node: h, action: target, before, after });
            }
        }
        Err(Error::InternalConsistency(format!("action selection at node {h} did not settle within {cap} rounds")))
    }

    fn is_leaf(&self, h: usize) -> bool {
        self.tree.nodes[h].actions.iter().all(|a| a.children.is_empty())
    }

    fn resimplify(&mut self, h: usize, q: &GapQuery) -> Result<()> {
        if !self.is_leaf(h) {
            let node = &self.tree.nodes[h];
            let mut best: Option<(usize, f64)> = None;
            for (a, act) in node.actions.iter().enumerate() {
                if act.children.is_empty() {
                    continue;
                }
                let w = act.n as f64 * act.gap();
                if best.is_none_or(|(_, b)| w > b) {
                    best = Some((a, w));
                }
            }
            if let Some((a, _)) = best {
                let children = node.actions[a].children.clone();
                for ch in children {
                    self.resimplify(ch, q)?;
                }
                self.reconstruct(h, a)?;
            }
        }
        self.refine_if(h, q)?;
        self.resimplify_rollout(h, q)
    }

    fn refine_if(&mut self, h: usize, q: &GapQuery) -> Result<()> {
        let gamma = self.cfg.gamma;
        let node = &self.tree.nodes[h];
        let Some(cache) = node.cache.as_ref() else { return Ok(()) };
        if cache.is_converged()
            || !refine_condition(node.bounds.upper, node.bounds.lower, q.depth, node.depth, q.gap, gamma)
        {
            return Ok(());
        }
        self.refine_node(h)
    }

    fn refine_node(&mut self, h: usize) -> Result<()> {
        let model = self.model;
        let node = &mut self.tree.nodes[h];
        if let Some(cache) = node.cache.as_mut() {
            if !cache.is_converged() {
                node.bounds = cache.refine(model)?;
                self.stats.refinements += 1;
            }
        }
        Ok(())
    }

    fn resimplify_rollout(&mut self, h: usize, q: &GapQuery) -> Result<()> {
        let gamma = self.cfg.gamma;
        let record = &self.tree.nodes[h].rollout;
        let mut pick: Option<(usize, f64)> = None;
        for (k, e) in record.entries.iter().enumerate() {
            let Some(cache) = e.cache.as_ref() else { continue };
            if cache.is_converged() || !refine_condition(e.bounds.upper, e.bounds.lower, q.depth, e.depth, q.gap, gamma)
            {
                continue;
            }
            let w = e.bounds.width();
            if pick.is_none_or(|(_, b)| w > b) {
                pick = Some((k, w));
            }
        }
        if let Some((k, _)) = pick {
            let model = self.model;
            let record = &mut self.tree.nodes[h].rollout;
            let entry = &mut record.entries[k];
            entry.bounds = entry.cache.as_mut().expect("entry has a cache").refine(model)?;
            record.recompute(gamma);
            self.stats.refinements += 1;
        }
        Ok(())
    }

    fn refine_all(&mut self, h: usize) -> Result<()> {
        self.refine_node(h)?;
        let model = self.model;
        let gamma = self.cfg.gamma;
        let record = &mut self.tree.nodes[h].rollout;
        let mut touched = 0;
        for entry in record.entries.iter_mut() {
            if let Some(cache) = entry.cache.as_mut() {
                if !cache.is_converged() {
                    entry.bounds = cache.refine(model)?;
                    touched += 1;
                }
            }
        }
        if touched > 0 {
            record.recompute(gamma);
            self.stats.refinements += touched;
        }
        for a in 0..self.tree.nodes[h].actions.len() {
            let children = self.tree.nodes[h].actions[a].children.clone();
            if children.is_empty() {
                continue;
            }
            for ch in children {
                self.refine_all(ch)?;
            }
            self.reconstruct(h, a)?;
        }
        Ok(())
    }

    /// Rebuild `LB(ha)`, `UB(ha)` from children's immediate bounds, rollouts
    /// and grandchildren's bounds, weighted by visit counts.
    fn reconstruct(&mut self, h: usize, a: usize) -> Result<()> {
        let gamma = self.cfg.gamma;
        let nodes = &self.tree.nodes;
        let act = &nodes[h].actions[a];
        if act.n == 0 {
            return Ok(());
        }
        let mut sum_l = 0.0;
        let mut sum_u = 0.0;
        for &c in &act.children {
            let child = &nodes[c];
            let w = child.visits as f64;
            let mut l = w * child.bounds.lower + gamma * child.rollout.lower;
            let mut u = w * child.bounds.upper + gamma * child.rollout.upper;
            if !child.actions.is_empty() {
                let mut total = 0;
                let mut sl = 0.0;
                let mut su = 0.0;
                for g in &child.actions {
                    total += g.n;
                    sl += g.n as f64 * g.lb;
                    su += g.n as f64 * g.ub;
                }
                if child.n != 1 + total {
                    return Err(Error::InternalConsistency(format!(
                        "node {c}: N = {} but its actions sum to {total}",
                        child.n
                    )));
                }
                l += gamma * sl;
                u += gamma * su;
            }
            sum_l += l;
            sum_u += u;
        }
        let n = act.n as f64;
        let act = &mut self.tree.nodes[h].actions[a];
        act.lb = sum_l / n;
        act.ub = sum_u / n;
        Ok(())
    }
}

/// Run a full SITH-PFT session from `b0` with the given strategy.
pub fn plan_with_strategy<M: GenerativeModel>(
    b0: &ParticleBelief<M::State>,
    cfg: &PlannerConfig,
    model: &M,
    strategy: ResimplificationStrategy,
) -> Result<PlanOutcome<SithTree<M::State, M::Observation>>> {
    let start = Instant::now();
    let mut planner = SithPft::new(b0.clone(), cfg, model)?.with_strategy(strategy);
    for _ in 0..cfg.n_iter {
        planner.simulate_once()?;
    }
    let action = planner.best_action()?;
    let wall_time_s = start.elapsed().as_secs_f64();
    let stats = planner.stats();
    let tree = planner.into_tree();
    let snapshot = tree.snapshot();
    let report = PlanReport {
        algorithm: match strategy {
            ResimplificationStrategy::Specific => "sith-pft".into(),
            ResimplificationStrategy::BruteForce => "sith-pft-brute-force".into(),
        },
        action,
        wall_time_s,
        resimplification_rounds: stats.rounds,
        refinements: stats.refinements,
        fallback_rounds: stats.fallback_rounds,
        level_histogram: tree.level_histogram(cfg.levels),
        tree_nodes: tree.nodes.len(),
        tree_digest: snapshot.digest(),
    };
    Ok(PlanOutcome { action, report, tree, snapshot })
}

/// Run a full SITH-PFT session with the depth-weighted strategy.
pub fn plan<M: GenerativeModel>(
    b0: &ParticleBelief<M::State>,
    cfg: &PlannerConfig,
    model: &M,
) -> Result<PlanOutcome<SithTree<M::State, M::Observation>>> {
    plan_with_strategy(b0, cfg, model, ResimplificationStrategy::Specific)
}
