//! Baseline PFT-DPW: UCB over belief-action nodes with exact entropy rewards.

use std::time::Instant;

use rand::Rng;

use crate::belief::ParticleBelief;
use crate::config::PlannerConfig;
use crate::entropy::minus_entropy_of_update;
use crate::error::{Error, Result};
use crate::model::GenerativeModel;
use crate::particle_filter::{pf_update, sample_observation};
use crate::rng::StreamKey;
use crate::search::{
    belief_is_terminal, child_key, discounted_sum, drive_rollout, root_key, visit_key, PlanOutcome, PlanReport,
    TraceStep,
};
use crate::selection::{dpw_allows_new_child, ucb};
use crate::snapshot::{observation_bits, snapshot_dfs, NodeView, SearchTree, TreeSnapshot};

#[derive(Debug, Clone, Default)]
pub struct BaselineAction {
    pub n: u64,
    pub q_x: f64,
    pub q_i: f64,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct BaselineNode<S, O> {
    pub belief: ParticleBelief<S>,
    pub key: StreamKey,
    pub depth: usize,
    /// `N(h)`, starting at 1 for the creation visit.
    pub n: u64,
    /// Simulations routed into this observation branch.
    pub visits: u64,
    pub terminal: bool,
    pub observation: Option<O>,
    pub r_x: f64,
    /// Exact `-H` of the step that created the node.
    pub info: f64,
    pub actions: Vec<BaselineAction>,
}

#[derive(Debug, Clone)]
pub struct BaselineTree<S, O> {
    pub nodes: Vec<BaselineNode<S, O>>,
}

impl<S, O: AsRef<[f64]>> SearchTree for BaselineTree<S, O> {
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

/// Baseline planner for one session.
pub struct PftDpw<'m, M: GenerativeModel> {
    model: &'m M,
    cfg: PlannerConfig,
    tree: BaselineTree<M::State, M::Observation>,
    trace: Option<Vec<Vec<TraceStep>>>,
    current: Vec<TraceStep>,
}

impl<'m, M: GenerativeModel> PftDpw<'m, M> {
    pub fn new(b0: ParticleBelief<M::State>, cfg: &PlannerConfig, model: &'m M) -> Result<Self> {
        cfg.validate()?;
        let terminal = belief_is_terminal(&b0, model);
        let root = BaselineNode {
            belief: b0,
            key: root_key(cfg.seed),
            depth: cfg.d_max,
            n: 1,
            visits: 1,
            terminal,
            observation: None,
            r_x: 0.0,
            info: 0.0,
            actions: Vec::new(),
        };
        Ok(PftDpw {
            model,
            cfg: cfg.clone(),
            tree: BaselineTree { nodes: vec![root] },
            trace: None,
            current: Vec::new(),
        })
    }

    /// Record every simulation's path and returns.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn tree(&self) -> &BaselineTree<M::State, M::Observation> {
        &self.tree
    }

    pub fn traces(&self) -> &[Vec<TraceStep>] {
        self.trace.as_deref().unwrap_or(&[])
    }

    /// Run one simulation from the root.
    pub fn simulate_once(&mut self) -> Result<(f64, f64)> {
        self.current.clear();
        let out = self.simulate(0, self.cfg.d_max)?;
        if let Some(t) = self.trace.as_mut() {
            t.push(std::mem::take(&mut self.current));
        }
        Ok(out)
    }

    /// Greedy root action (`c = 0`) over visited actions.
    pub fn best_action(&self) -> Result<usize> {
        let root = &self.tree.nodes[0];
        let mut best: Option<(usize, f64)> = None;
        for (a, act) in root.actions.iter().enumerate() {
            if act.n == 0 {
                continue;
            }
            let q = act.q_x + self.cfg.lambda * act.q_i;
            if best.is_none_or(|(_, v)| q > v) {
                best = Some((a, q));
            }
        }
        best.map(|(a, _)| a).ok_or_else(|| Error::InternalConsistency("root has no visited action".into()))
    }

    pub fn into_tree(self) -> BaselineTree<M::State, M::Observation> {
        self.tree
    }

    fn select(&self, h: usize) -> usize {
        let node = &self.tree.nodes[h];
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for (a, act) in node.actions.iter().enumerate() {
            if act.n == 0 {
                return a;
            }
            let v = ucb(act.q_x + self.cfg.lambda * act.q_i, act.n, node.n, self.cfg.c);
            if v > best_v {
                best = a;
                best_v = v;
            }
        }
        best
    }

    fn simulate(&mut self, h: usize, depth: usize) -> Result<(f64, f64)> {
        if depth == 0 || self.tree.nodes[h].terminal {
            return Ok((0.0, 0.0));
        }
        if self.tree.nodes[h].actions.is_empty() {
            self.tree.nodes[h].actions = vec![BaselineAction::default(); self.model.num_actions()];
        }
        let gamma = self.cfg.gamma;
        let a = self.select(h);
        let node = &self.tree.nodes[h];
        let n_ha = node.actions[a].n;
        let n_children = node.actions[a].children.len();
        let vkey = visit_key(node.key, a, n_ha);
        let slot = self.current.len();
        self.current.push(TraceStep { node: h, action: a, child: None, created: false, ret: [0.0; 3] });

        let ret = if dpw_allows_new_child(n_ha, n_children, self.cfg.k_o, self.cfg.alpha_o) {
            let z = sample_observation(&node.belief, a, self.model, &mut vkey.fork(b"obs").stream());
            match pf_update(&node.belief, a, &z, self.model, &mut vkey.fork(b"pf").stream()) {
                Err(Error::DegeneratePosterior) => (0.0, 0.0),
                Err(e) => return Err(e),
                Ok(update) => {
                    let ckey = child_key(node.key, a, n_children);
                    let info = if self.cfg.lambda == 0.0 {
                        0.0
                    } else {
                        minus_entropy_of_update(&update, a, self.model).value
                    };
                    let terminal =
                        self.model.is_terminal_action(a) || belief_is_terminal(&update.posterior, self.model);
                    let (roll_r, roll_i) = if terminal {
                        (0.0, 0.0)
                    } else {
                        self.rollout(&update.posterior, depth - 1, ckey.fork(b"rollout"))?
                    };
                    let r_x = update.r_x;
                    let id = self.tree.nodes.len();
                    self.tree.nodes.push(BaselineNode {
                        belief: update.posterior,
                        key: ckey,
                        depth: depth - 1,
                        n: 1,
                        visits: 1,
                        terminal,
                        observation: Some(z),
                        r_x,
                        info,
                        actions: Vec::new(),
                    });
                    self.tree.nodes[h].actions[a].children.push(id);
                    self.current[slot].child = Some(id);
                    self.current[slot].created = true;
                    (r_x + gamma * roll_r, info + gamma * roll_i)
                }
            }
        } else {
            let pick = vkey.fork(b"reuse").stream().random_range(0..n_children);
            let c = node.actions[a].children[pick];
            self.current[slot].child = Some(c);
            let child = &mut self.tree.nodes[c];
            child.visits += 1;
            let (r_x, info) = (child.r_x, child.info);
            let (r, i) = self.simulate(c, depth - 1)?;
            (r_x + gamma * r, info + gamma * i)
        };

        let node = &mut self.tree.nodes[h];
        node.n += 1;
        let act = &mut node.actions[a];
        act.n += 1;
        let n = act.n as f64;
        act.q_x += (ret.0 - act.q_x) / n;
        act.q_i += (ret.1 - act.q_i) / n;
        self.current[slot].ret = [ret.0, ret.1, ret.1];
        Ok(ret)
    }

    fn rollout(&self, b: &ParticleBelief<M::State>, depth: usize, key: StreamKey) -> Result<(f64, f64)> {
        let mut rewards = Vec::new();
        let mut infos = Vec::new();
        let lambda = self.cfg.lambda;
        drive_rollout(b, depth, self.model, key, |step| {
            rewards.push(step.update.r_x);
            infos.push(if lambda == 0.0 {
                0.0
            } else {
                minus_entropy_of_update(&step.update, step.action, self.model).value
            });
            Ok(())
        })?;
        Ok((discounted_sum(rewards, self.cfg.gamma), discounted_sum(infos, self.cfg.gamma)))
    }
}

/// Run a full baseline session from `b0`.
pub fn plan_baseline<M: GenerativeModel>(
    b0: &ParticleBelief<M::State>,
    cfg: &PlannerConfig,
    model: &M,
) -> Result<PlanOutcome<BaselineTree<M::State, M::Observation>>> {
    let start = Instant::now();
    let mut planner = PftDpw::new(b0.clone(), cfg, model)?;
    for _ in 0..cfg.n_iter {
        planner.simulate_once()?;
    }
    let action = planner.best_action()?;
    let wall_time_s = start.elapsed().as_secs_f64();
    let tree = planner.into_tree();
    let snapshot = tree.snapshot();
    let report = PlanReport {
        algorithm: "pft-dpw".into(),
        action,
        wall_time_s,
        resimplification_rounds: 0,
        refinements: 0,
        fallback_rounds: 0,
        level_histogram: Vec::new(),
        tree_nodes: tree.nodes.len(),
        tree_digest: snapshot.digest(),
    };
    Ok(PlanOutcome { action, report, tree, snapshot })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_models::ScalarModel;

    fn belief() -> ParticleBelief<[f64; 1]> {
        ParticleBelief::uniform(vec![[0.0], [1.0]]).unwrap()
    }

    fn cfg(n_iter: usize) -> PlannerConfig {
        PlannerConfig { m: 2, d_max: 3, n_iter, lambda: 0.5, ..PlannerConfig::default() }
    }

    #[test]
    fn single_action_single_iteration() {
        let mut model = ScalarModel::identity_reward();
        model.actions = 1;
        let out = plan_baseline(&belief(), &cfg(1), &model).unwrap();
        assert_eq!(out.action, 0);
        assert_eq!(out.tree.nodes[0].n, 2);
    }

    #[test]
    fn accounting_holds_after_every_simulation() {
        let model = ScalarModel::identity_reward();
        let mut p = PftDpw::new(belief(), &cfg(1), &model).unwrap();
        for _ in 0..40 {
            p.simulate_once().unwrap();
            for node in &p.tree().nodes {
                if node.actions.is_empty() {
                    continue;
                }
                let total: u64 = node.actions.iter().map(|a| a.n).sum();
                assert_eq!(node.n, 1 + total);
                for act in &node.actions {
                    assert!(act.n as usize >= act.children.len());
                }
            }
        }
    }

    #[test]
    fn running_means_match_shadow_log() {
        let model = ScalarModel::identity_reward();
        let mut p = PftDpw::new(belief(), &cfg(1), &model).unwrap().with_trace();
        for _ in 0..60 {
            p.simulate_once().unwrap();
        }
        let mut sums = std::collections::HashMap::<(usize, usize), (f64, f64, u64)>::new();
        for sim in p.traces() {
            for s in sim {
                let e = sums.entry((s.node, s.action)).or_default();
                e.0 += s.ret[0];
                e.1 += s.ret[1];
                e.2 += 1;
            }
        }
        for ((h, a), (r, i, n)) in sums {
            let act = &p.tree().nodes[h].actions[a];
            assert_eq!(act.n, n);
            assert!((act.q_x - r / n as f64).abs() < 1e-9);
            assert!((act.q_i - i / n as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_lambda_has_no_information() {
        let model = ScalarModel::identity_reward();
        let c = PlannerConfig { lambda: 0.0, ..cfg(30) };
        let out = plan_baseline(&belief(), &c, &model).unwrap();
        assert!(out.tree.nodes.iter().all(|n| n.info == 0.0));
        assert!(out.tree.nodes.iter().flat_map(|n| &n.actions).all(|a| a.q_i == 0.0));
    }

    #[test]
    fn same_seed_same_digest() {
        let model = ScalarModel::identity_reward();
        let a = plan_baseline(&belief(), &cfg(50), &model).unwrap();
        let b = plan_baseline(&belief(), &cfg(50), &model).unwrap();
        assert_eq!(a.report.tree_digest, b.report.tree_digest);
        let c = plan_baseline(&belief(), &PlannerConfig { seed: 9, ..cfg(50) }, &model).unwrap();
        assert_eq!(c.snapshot.nodes[0].n, 51);
    }
}
