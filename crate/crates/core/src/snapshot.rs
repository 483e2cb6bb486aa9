//! Canonical tree snapshots for digesting and diffing planner trees.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One edge `(action, observation-branch index)` of a path from the root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStep {
    pub action: u32,
    pub child: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub action: u32,
    pub n: u64,
    pub children: u32,
}

/// A belief node in depth-first order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub path: Vec<PathStep>,
    /// `N(h)`.
    pub n: u64,
    /// Simulations that passed through the branch leading to this node.
    pub visits: u64,
    /// Bit patterns of the observation that created the node (empty at the root).
    pub observation: Vec<u64>,
    pub actions: Vec<ActionRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeSnapshot {
    pub nodes: Vec<NodeRecord>,
}

/// Trees that can be exported as a [`TreeSnapshot`].
pub trait SearchTree {
    fn snapshot(&self) -> TreeSnapshot;
}

impl TreeSnapshot {
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.nodes.len() * 64);
        out.extend_from_slice(&(self.nodes.len() as u64).to_le_bytes());
        for node in &self.nodes {
            out.extend_from_slice(&(node.path.len() as u32).to_le_bytes());
            for step in &node.path {
                out.extend_from_slice(&step.action.to_le_bytes());
                out.extend_from_slice(&step.child.to_le_bytes());
            }
            out.extend_from_slice(&node.n.to_le_bytes());
            out.extend_from_slice(&node.visits.to_le_bytes());
            out.extend_from_slice(&(node.observation.len() as u32).to_le_bytes());
            for bits in &node.observation {
                out.extend_from_slice(&bits.to_le_bytes());
            }
            out.extend_from_slice(&(node.actions.len() as u32).to_le_bytes());
            for a in &node.actions {
                out.extend_from_slice(&a.action.to_le_bytes());
                out.extend_from_slice(&a.n.to_le_bytes());
                out.extend_from_slice(&a.children.to_le_bytes());
            }
        }
        out
    }

    /// Hex SHA-256 of [`TreeSnapshot::canonical_bytes`].
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_bytes()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Per-node view used by [`snapshot_dfs`].
pub(crate) struct NodeView {
    pub n: u64,
    pub visits: u64,
    pub observation: Vec<u64>,
    /// `(N(ha), children)` per action index; empty before expansion.
    pub actions: Vec<(u64, Vec<usize>)>,
}

/// Depth-first canonical export of an arena tree rooted at node 0.
pub(crate) fn snapshot_dfs(view: impl Fn(usize) -> NodeView) -> TreeSnapshot {
    let mut nodes = Vec::new();
    let mut stack = vec![(0usize, Vec::<PathStep>::new())];
    while let Some((id, path)) = stack.pop() {
        let v = view(id);
        let mut pending = Vec::new();
        for (a, (_, children)) in v.actions.iter().enumerate() {
            for (k, &c) in children.iter().enumerate() {
                let mut p = path.clone();
                p.push(PathStep { action: a as u32, child: k as u32 });
                pending.push((c, p));
            }
        }
        stack.extend(pending.into_iter().rev());
        nodes.push(NodeRecord {
            path,
            n: v.n,
            visits: v.visits,
            observation: v.observation,
            actions: v
                .actions
                .iter()
                .enumerate()
                .map(|(a, (n, ch))| ActionRecord { action: a as u32, n: *n, children: ch.len() as u32 })
                .collect(),
        });
    }
    TreeSnapshot { nodes }
}

pub(crate) fn observation_bits<O: AsRef<[f64]>>(z: Option<&O>) -> Vec<u64> {
    z.map(|z| z.as_ref().iter().map(|v| v.to_bits()).collect()).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeComparison {
    pub equal: bool,
    /// Path of the first node (depth-first) whose record differs.
    pub first_divergence: Option<Vec<PathStep>>,
}

pub fn compare_trees(a: &TreeSnapshot, b: &TreeSnapshot) -> TreeComparison {
    if a.digest() == b.digest() {
        return TreeComparison { equal: true, first_divergence: None };
    }
    let mismatch = a.nodes.iter().zip(&b.nodes).find(|(x, y)| x != y).map(|(x, _)| x.path.clone());
    let path = mismatch.or_else(|| {
        let n = a.nodes.len().min(b.nodes.len());
        a.nodes.get(n).or_else(|| b.nodes.get(n)).map(|r| r.path.clone())
    });
    TreeComparison { equal: false, first_divergence: Some(path.unwrap_or_default()) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_tree() -> TreeSnapshot {
        let rec = |path: Vec<PathStep>, n, actions: Vec<(u32, u64, u32)>| NodeRecord {
            path,
            n,
            visits: n,
            observation: vec![1.5f64.to_bits()],
            actions: actions.into_iter().map(|(action, n, children)| ActionRecord { action, n, children }).collect(),
        };
        let s = |action, child| PathStep { action, child };
        TreeSnapshot {
            nodes: vec![
                rec(vec![], 4, vec![(0, 2, 1), (1, 1, 1)]),
                rec(vec![s(0, 0)], 2, vec![(0, 1, 1)]),
                rec(vec![s(0, 0), s(0, 0)], 1, vec![]),
                rec(vec![s(1, 0)], 1, vec![]),
            ],
        }
    }

    #[test]
    fn tree_equals_itself() {
        let t = sample_tree();
        let cmp = compare_trees(&t, &t.clone());
        assert!(cmp.equal);
        assert_eq!(cmp.first_divergence, None);
    }

    #[test]
    fn incremented_count_reports_path() {
        let t = sample_tree();
        let mut u = t.clone();
        u.nodes[1].actions[0].n += 1;
        let cmp = compare_trees(&t, &u);
        assert!(!cmp.equal);
        assert_eq!(cmp.first_divergence, Some(vec![PathStep { action: 0, child: 0 }]));
        assert_ne!(t.digest(), u.digest());
    }

    #[test]
    fn missing_node_reports_path() {
        let t = sample_tree();
        let mut u = t.clone();
        u.nodes.pop();
        let cmp = compare_trees(&t, &u);
        assert_eq!(cmp.first_divergence, Some(vec![PathStep { action: 1, child: 0 }]));
    }

    #[test]
    fn save_load_roundtrip() {
        let t = sample_tree();
        let dir = std::env::temp_dir().join(format!("sithpft-snap-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("t.json");
        t.save(&p).unwrap();
        assert_eq!(TreeSnapshot::load(&p).unwrap(), t);
    }
}
