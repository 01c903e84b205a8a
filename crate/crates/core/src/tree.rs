//! Flat indexing of complete `b`-ary public trees.
//!
//! Nodes are stored depth by depth; within a depth, a node's position is the
//! base-`b` integer spelled by its branch history. Edge `(node, a)` of an
//! internal node with flat index `j` lives at `j * b + a`.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Upper bound on stored nodes; `b^K` grows fast.
pub const MAX_NODES: usize = 1 << 22;

/// Public node `(k, omega)`; `omega` holds zero-based branch indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct NodeId {
    pub k: usize,
    pub omega: Vec<usize>,
}

impl NodeId {
    pub fn root() -> Self {
        Self::default()
    }

    pub fn child(&self, a: usize) -> Self {
        let mut omega = self.omega.clone();
        omega.push(a);
        Self {
            k: self.k + 1,
            omega,
        }
    }

    /// Branch history as one-based digits, e.g. `"12"`; empty at the root.
    pub fn omega_string(&self) -> String {
        self.omega
            .iter()
            .map(|a| {
                let d = a + 1;
                if d < 10 {
                    char::from(b'0' + d as u8).to_string()
                } else {
                    format!("[{d}]")
                }
            })
            .collect()
    }

    pub fn parse_omega(k: usize, s: &str) -> Result<Self> {
        let omega: Vec<usize> = s
            .chars()
            .map(|c| {
                c.to_digit(10)
                    .filter(|d| *d >= 1)
                    .map(|d| d as usize - 1)
                    .ok_or_else(|| Error::Parse(format!("bad branch letter {c:?} in omega {s:?}")))
            })
            .collect::<Result<_>>()?;
        if omega.len() != k {
            return Err(Error::Parse(format!(
                "omega {s:?} has length {} but k = {k}",
                omega.len()
            )));
        }
        Ok(Self { k, omega })
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {})",
            self.k,
            if self.k == 0 {
                "∅".to_string()
            } else {
                self.omega_string()
            }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeLayout {
    branching: usize,
    horizon: usize,
    offsets: Vec<usize>,
}

impl TreeLayout {
    pub fn new(branching: usize, horizon: usize) -> Result<Self> {
        if branching == 0 {
            return Err(Error::Domain("branching factor must be at least 1".into()));
        }
        let mut offsets = Vec::with_capacity(horizon + 2);
        let mut total = 0usize;
        let mut width = 1usize;
        for _ in 0..=horizon {
            offsets.push(total);
            total = total
                .checked_add(width)
                .filter(|t| *t <= MAX_NODES)
                .ok_or_else(|| {
                    Error::TreeTooLarge(format!(
                        "{branching}-ary tree of depth {horizon} exceeds {MAX_NODES} nodes"
                    ))
                })?;
            width = width.saturating_mul(branching);
        }
        offsets.push(total);
        Ok(Self {
            branching,
            horizon,
            offsets,
        })
    }

    pub fn branching(&self) -> usize {
        self.branching
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn node_count(&self) -> usize {
        self.offsets[self.horizon + 1]
    }

    /// Nodes with `k < K`.
    pub fn internal_count(&self) -> usize {
        self.offsets[self.horizon]
    }

    pub fn edge_count(&self) -> usize {
        self.internal_count() * self.branching
    }

    pub fn level(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k + 1]
    }

    pub fn depth_of(&self, idx: usize) -> usize {
        debug_assert!(idx < self.node_count());
        match self.offsets.binary_search(&idx) {
            Ok(k) => k,
            Err(k) => k - 1,
        }
    }

    pub fn is_leaf(&self, idx: usize) -> bool {
        idx >= self.internal_count()
    }

    /// Level order makes this heap indexing: `child = b * idx + 1 + a`, i.e.
    /// the child sits at its edge index plus one.
    pub fn child(&self, idx: usize, a: usize) -> usize {
        idx * self.branching + 1 + a
    }

    pub fn parent(&self, idx: usize) -> Option<(usize, usize)> {
        if idx == 0 {
            return None;
        }
        Some(((idx - 1) / self.branching, (idx - 1) % self.branching))
    }

    pub fn edge(&self, idx: usize, a: usize) -> usize {
        idx * self.branching + a
    }

    pub fn node_id(&self, idx: usize) -> NodeId {
        let k = self.depth_of(idx);
        let mut pos = idx - self.offsets[k];
        let mut omega = vec![0; k];
        for slot in omega.iter_mut().rev() {
            *slot = pos % self.branching;
            pos /= self.branching;
        }
        NodeId { k, omega }
    }

    pub fn index_of(&self, id: &NodeId) -> Result<usize> {
        if id.k > self.horizon || id.omega.len() != id.k {
            return Err(Error::Domain(format!(
                "node {id} is not in a tree of depth {}",
                self.horizon
            )));
        }
        let mut pos = 0usize;
        for &a in &id.omega {
            if a >= self.branching {
                return Err(Error::Domain(format!(
                    "node {id} uses branch {} > {}",
                    a + 1,
                    self.branching
                )));
            }
            pos = pos * self.branching + a;
        }
        Ok(self.offsets[id.k] + pos)
    }

    /// Maps the flat index of node `local` in the subtree rooted at `root` to
    /// its index in this tree.
    pub fn embed(&self, root: usize, sub: &TreeLayout, local: usize) -> usize {
        let root_k = self.depth_of(root);
        let d = sub.depth_of(local);
        let width = self.branching.pow(d as u32);
        let base = (root - self.offsets[root_k]) * width;
        self.offsets[root_k + d] + base + (local - sub.offsets[d])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_count_matches_geometric_sum() {
        for b in 1..=4 {
            for k in 0..=5 {
                let l = TreeLayout::new(b, k).unwrap();
                let expect: usize = (0..=k).map(|d| b.pow(d as u32)).sum();
                assert_eq!(l.node_count(), expect);
            }
        }
    }

    #[test]
    fn enumeration_visits_each_node_once() {
        let l = TreeLayout::new(3, 4).unwrap();
        let mut seen = std::collections::HashSet::new();
        for idx in 0..l.node_count() {
            let id = l.node_id(idx);
            assert_eq!(l.index_of(&id).unwrap(), idx);
            assert!(seen.insert(id));
        }
        assert_eq!(seen.len(), l.node_count());
    }

    #[test]
    fn child_and_parent_are_inverse() {
        let l = TreeLayout::new(2, 5).unwrap();
        for idx in 0..l.internal_count() {
            for a in 0..2 {
                let c = l.child(idx, a);
                assert_eq!(l.parent(c), Some((idx, a)));
                assert_eq!(l.node_id(c), l.node_id(idx).child(a));
            }
        }
        assert_eq!(l.parent(0), None);
    }

    #[test]
    fn embed_maps_subtree_nodes() {
        let l = TreeLayout::new(2, 4).unwrap();
        let sub = TreeLayout::new(2, 3).unwrap();
        let root = l.child(0, 1);
        for local in 0..sub.node_count() {
            let id = sub.node_id(local);
            let mut full = vec![1];
            full.extend(&id.omega);
            let global = l
                .index_of(&NodeId {
                    k: id.k + 1,
                    omega: full,
                })
                .unwrap();
            assert_eq!(l.embed(root, &sub, local), global);
        }
    }

    #[test]
    fn omega_string_round_trips() {
        let id = NodeId {
            k: 3,
            omega: vec![0, 1, 1],
        };
        assert_eq!(id.omega_string(), "122");
        assert_eq!(NodeId::parse_omega(3, "122").unwrap(), id);
        assert!(NodeId::parse_omega(2, "122").is_err());
    }

    #[test]
    fn oversized_tree_is_rejected() {
        assert!(matches!(
            TreeLayout::new(8, 16),
            Err(Error::TreeTooLarge(_))
        ));
    }
}
