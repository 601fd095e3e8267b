//! Incomplete decision trees over Boolean features.
//!
//! Left branches take feature value `false`, right branches `true`.

mod gain;
mod membership;
mod superimpose;

pub use gain::{argmax_lowest, info_gain, teacher_designated, teacher_gain, GainFunction};
pub use membership::{member_of_dt, MAX_ORACLE_METAFEATURES};
pub use superimpose::{conflict, induce, superimpose, Superimposition};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::costly::Label;
use crate::error::{usage, Error, Result};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Internal { var: usize, left: NodeId, right: NodeId },
    Leaf(Label),
    Empty,
}

/// Arena-backed tree. Node ids are stable under `affix` and `label_leaf`.
#[derive(Debug, Clone)]
pub struct IncompleteTree {
    nodes: Vec<Node>,
    parent: Vec<Option<NodeId>>,
    depth: Vec<usize>,
    root: NodeId,
}

/// Ordered set of metafeatures; insertion order drives candidate enumeration.
pub type MetafeatureSet = Vec<IncompleteTree>;

impl IncompleteTree {
    pub fn empty() -> Self {
        IncompleteTree { nodes: vec![Node::Empty], parent: vec![None], depth: vec![0], root: 0 }
    }

    pub fn leaf(l: Label) -> Self {
        let mut t = Self::empty();
        t.nodes[0] = Node::Leaf(l);
        t
    }

    /// Stump on `var` with two empty leaves.
    pub fn stump(var: usize) -> Self {
        let mut t = Self::empty();
        t.split(0, var);
        t
    }

    /// Stump on `var` with labeled leaves.
    pub fn labeled_stump(var: usize, left: Label, right: Label) -> Self {
        let mut t = Self::stump(var);
        t.nodes[1] = Node::Leaf(left);
        t.nodes[2] = Node::Leaf(right);
        t
    }

    /// Left-spine chain: each variable splits the left child of the previous one.
    /// All other leaves are empty.
    pub fn chain(vars: &[usize]) -> Self {
        let mut t = Self::empty();
        let mut u = t.root;
        for &v in vars {
            let (l, _) = t.split(u, v);
            u = l;
        }
        t
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> Node {
        self.nodes[id]
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.parent[id]
    }

    pub fn depth_of(&self, id: NodeId) -> usize {
        self.depth[id]
    }

    pub fn var(&self, id: NodeId) -> Option<usize> {
        match self.nodes[id] {
            Node::Internal { var, .. } => Some(var),
            _ => None,
        }
    }

    pub fn child(&self, id: NodeId, right: bool) -> Option<NodeId> {
        match self.nodes[id] {
            Node::Internal { left, right: r, .. } => Some(if right { r } else { left }),
            _ => None,
        }
    }

    fn reachable(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(u) = stack.pop() {
            out.push(u);
            if let Node::Internal { left, right, .. } = self.nodes[u] {
                stack.push(right);
                stack.push(left);
            }
        }
        out
    }

    /// Number of internal nodes.
    pub fn size(&self) -> usize {
        self.reachable().into_iter().filter(|&u| matches!(self.nodes[u], Node::Internal { .. })).count()
    }

    /// Depth of the deepest node (a single node has depth 0).
    pub fn depth(&self) -> usize {
        self.reachable().into_iter().map(|u| self.depth[u]).max().unwrap_or(0)
    }

    pub fn is_complete(&self) -> bool {
        self.reachable().into_iter().all(|u| !matches!(self.nodes[u], Node::Empty))
    }

    /// Empty leaves in left-first depth-first order.
    pub fn empty_leaves(&self) -> Vec<NodeId> {
        self.reachable().into_iter().filter(|&u| self.nodes[u] == Node::Empty).collect()
    }

    pub fn internal_nodes(&self) -> Vec<NodeId> {
        self.reachable().into_iter().filter(|&u| self.var(u).is_some()).collect()
    }

    pub fn vars(&self) -> BTreeSet<usize> {
        self.reachable().into_iter().filter_map(|u| self.var(u)).collect()
    }

    /// Node ids from the root down to `id`, inclusive.
    pub fn path_to(&self, id: NodeId) -> Vec<NodeId> {
        let mut p = vec![id];
        let mut u = id;
        while let Some(q) = self.parent[u] {
            p.push(q);
            u = q;
        }
        p.reverse();
        p
    }

    /// Branch directions from the root to `id` (`true` = right).
    pub fn directions_to(&self, id: NodeId) -> Vec<bool> {
        let path = self.path_to(id);
        path.windows(2).map(|w| self.child(w[0], true) == Some(w[1])).collect()
    }

    pub fn node_at(&self, dirs: &[bool]) -> Option<NodeId> {
        let mut u = self.root;
        for &d in dirs {
            u = self.child(u, d)?;
        }
        Some(u)
    }

    /// Variables of the strict ancestors of `id`.
    pub fn ancestor_vars(&self, id: NodeId) -> Vec<usize> {
        let mut out = Vec::new();
        let mut u = id;
        while let Some(p) = self.parent[u] {
            out.push(self.var(p).expect("parent is internal"));
            u = p;
        }
        out
    }

    /// Turns the empty leaf `u` into an internal node with two empty children.
    pub(crate) fn split(&mut self, u: NodeId, var: usize) -> (NodeId, NodeId) {
        debug_assert_eq!(self.nodes[u], Node::Empty);
        let d = self.depth[u] + 1;
        let l = self.push(Node::Empty, Some(u), d);
        let r = self.push(Node::Empty, Some(u), d);
        self.nodes[u] = Node::Internal { var, left: l, right: r };
        (l, r)
    }

    pub(crate) fn set_label(&mut self, u: NodeId, l: Label) {
        self.nodes[u] = Node::Leaf(l);
    }

    fn push(&mut self, n: Node, parent: Option<NodeId>, depth: usize) -> NodeId {
        self.nodes.push(n);
        self.parent.push(parent);
        self.depth.push(depth);
        self.nodes.len() - 1
    }

    fn check_empty(&self, u: NodeId) -> Result<()> {
        match self.nodes.get(u) {
            Some(Node::Empty) if self.is_attached(u) => Ok(()),
            Some(_) => usage(format!("node {u} is not an empty leaf")),
            None => usage(format!("node {u} does not exist")),
        }
    }

    fn is_attached(&self, u: NodeId) -> bool {
        self.path_to(u)[0] == self.root
    }

    /// Copies `f2` into this tree rooted at the empty leaf `u`.
    pub fn affix(&self, u: NodeId, f2: &IncompleteTree, strict: bool) -> Result<IncompleteTree> {
        self.check_empty(u)?;
        let mut t = self.clone();
        t.graft(u, f2, f2.root);
        if strict {
            if let Some(v) = t.repeated_path_var() {
                return Err(Error::IllegalTree(format!("variable x{v} repeats on a root-to-leaf path")));
            }
        }
        Ok(t)
    }

    fn graft(&mut self, at: NodeId, src: &IncompleteTree, s: NodeId) {
        match src.nodes[s] {
            Node::Internal { var, left, right } => {
                let (l, r) = self.split(at, var);
                self.graft(l, src, left);
                self.graft(r, src, right);
            }
            n => self.nodes[at] = n,
        }
    }

    pub fn label_leaf(&self, u: NodeId, l: Label) -> Result<IncompleteTree> {
        self.check_empty(u)?;
        let mut t = self.clone();
        t.nodes[u] = Node::Leaf(l);
        Ok(t)
    }

    /// Copy of the subtree rooted at `id`.
    pub fn subtree(&self, id: NodeId) -> IncompleteTree {
        let mut t = IncompleteTree::empty();
        t.graft(0, self, id);
        t
    }

    /// Copy of the subtree at `id` with every strict descendant satisfying
    /// `cut` replaced by an empty leaf.
    pub fn subtree_cut(&self, id: NodeId, cut: impl Fn(NodeId) -> bool) -> IncompleteTree {
        fn go(dst: &mut IncompleteTree, at: NodeId, src: &IncompleteTree, s: NodeId, top: bool, cut: &dyn Fn(NodeId) -> bool) {
            if !top && cut(s) {
                return;
            }
            match src.nodes[s] {
                Node::Internal { var, left, right } => {
                    let (l, r) = dst.split(at, var);
                    go(dst, l, src, left, false, cut);
                    go(dst, r, src, right, false, cut);
                }
                n => dst.nodes[at] = n,
            }
        }
        let mut t = IncompleteTree::empty();
        go(&mut t, 0, self, id, true, &cut);
        t
    }

    pub fn repeated_path_var(&self) -> Option<usize> {
        fn go(t: &IncompleteTree, u: NodeId, seen: &mut Vec<usize>) -> Option<usize> {
            if let Node::Internal { var, left, right } = t.nodes[u] {
                if seen.contains(&var) {
                    return Some(var);
                }
                seen.push(var);
                let r = go(t, left, seen).or_else(|| go(t, right, seen));
                seen.pop();
                return r;
            }
            None
        }
        go(self, self.root, &mut Vec::new())
    }

    /// Labels found among the leaves below `id` as (has `-`, has `+`).
    fn leaf_labels(&self, id: NodeId) -> (bool, bool) {
        match self.nodes[id] {
            Node::Leaf(Label::Neg) => (true, false),
            Node::Leaf(Label::Pos) => (false, true),
            Node::Empty => (false, false),
            Node::Internal { left, right, .. } => {
                let (a, b) = self.leaf_labels(left);
                let (c, d) = self.leaf_labels(right);
                (a || c, b || d)
            }
        }
    }

    /// Every internal node has both labels among its descendant leaves.
    pub fn is_reduced(&self) -> bool {
        self.internal_nodes().into_iter().all(|u| self.leaf_labels(u) == (true, true))
    }

    /// Every internal node has at least one leaf child.
    pub fn is_list(&self) -> bool {
        self.internal_nodes().into_iter().all(|u| {
            let (l, r) = (self.child(u, false).unwrap(), self.child(u, true).unwrap());
            self.var(l).is_none() || self.var(r).is_none()
        })
    }

    /// Leaf reached by `x`, reading features through `read`.
    pub fn route(&self, mut read: impl FnMut(usize) -> Result<bool>) -> Result<NodeId> {
        let mut u = self.root;
        while let Node::Internal { var, left, right } = self.nodes[u] {
            u = if read(var)? { right } else { left };
        }
        Ok(u)
    }

    pub fn predict(&self, read: impl FnMut(usize) -> Result<bool>) -> Result<Label> {
        if !self.is_complete() {
            return usage("predict on an incomplete tree");
        }
        match self.nodes[self.route(read)?] {
            Node::Leaf(l) => Ok(l),
            _ => unreachable!("complete tree routes to a leaf"),
        }
    }

    pub fn predict_row(&self, row: &[bool]) -> Result<Label> {
        self.predict(|i| {
            row.get(i).copied().ok_or_else(|| Error::Usage(format!("feature {i} outside example of width {}", row.len())))
        })
    }

    pub fn to_json(&self) -> TreeJson {
        fn go(t: &IncompleteTree, u: NodeId) -> TreeJson {
            match t.nodes[u] {
                Node::Internal { var, left, right } => {
                    TreeJson::Internal { var, left: Box::new(go(t, left)), right: Box::new(go(t, right)) }
                }
                Node::Leaf(l) => TreeJson::Leaf { leaf: l.symbol().to_string() },
                Node::Empty => TreeJson::Empty { empty: true },
            }
        }
        go(self, self.root)
    }

    pub fn from_json(j: &TreeJson) -> Result<IncompleteTree> {
        fn go(t: &mut IncompleteTree, at: NodeId, j: &TreeJson) -> Result<()> {
            match j {
                TreeJson::Internal { var, left, right } => {
                    let (l, r) = t.split(at, *var);
                    go(t, l, left)?;
                    go(t, r, right)
                }
                TreeJson::Leaf { leaf } => {
                    let l = match leaf.as_str() {
                        "+" => Label::Pos,
                        "-" | "−" => Label::Neg,
                        other => return Err(Error::Parse(format!("unknown leaf label {other:?}"))),
                    };
                    t.nodes[at] = Node::Leaf(l);
                    Ok(())
                }
                TreeJson::Empty { empty: true } => Ok(()),
                TreeJson::Empty { empty: false } => Err(Error::Parse("\"empty\" must be true".into())),
            }
        }
        let mut t = IncompleteTree::empty();
        go(&mut t, 0, j)?;
        Ok(t)
    }
}

/// Structural equality, independent of arena layout.
impl PartialEq for IncompleteTree {
    fn eq(&self, other: &Self) -> bool {
        fn go(a: &IncompleteTree, u: NodeId, b: &IncompleteTree, v: NodeId) -> bool {
            match (a.nodes[u], b.nodes[v]) {
                (Node::Internal { var: x, left: l1, right: r1 }, Node::Internal { var: y, left: l2, right: r2 }) => {
                    x == y && go(a, l1, b, l2) && go(a, r1, b, r2)
                }
                (Node::Leaf(x), Node::Leaf(y)) => x == y,
                (Node::Empty, Node::Empty) => true,
                _ => false,
            }
        }
        go(self, self.root, other, other.root)
    }
}

impl Eq for IncompleteTree {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeJson {
    Internal { var: usize, left: Box<TreeJson>, right: Box<TreeJson> },
    Leaf { leaf: String },
    Empty { empty: bool },
}

impl Serialize for IncompleteTree {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for IncompleteTree {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = TreeJson::deserialize(d)?;
        IncompleteTree::from_json(&j).map_err(serde::de::Error::custom)
    }
}

/// Adds `t` unless a structurally equal tree is present. Returns whether it was added.
pub fn insert_dedup(set: &mut MetafeatureSet, t: IncompleteTree) -> bool {
    if set.contains(&t) {
        false
    } else {
        set.push(t);
        true
    }
}
