use std::collections::HashMap;

use super::{IncompleteTree, Node, NodeId};
use crate::error::{usage, Error, Result};

pub const MAX_ORACLE_METAFEATURES: usize = 64;

/// Decides whether the complete tree `g` can be grown from `fs` by affix and
/// label steps. With `use_prefixes` every pruning of every element of `fs`
/// (any node, the root included, cut back to an empty leaf) is also available.
///
/// The search tries every decomposition of `g` into metafeature occurrences,
/// memoized per node of `g`.
pub fn member_of_dt(g: &IncompleteTree, fs: &[IncompleteTree], use_prefixes: bool, depth_cap: usize, size_cap: usize) -> Result<bool> {
    if g.depth() > depth_cap || g.size() > size_cap || fs.len() > MAX_ORACLE_METAFEATURES {
        return Err(Error::OracleTooLarge(format!(
            "depth {} (cap {depth_cap}), size {} (cap {size_cap}), |F| = {} (cap {MAX_ORACLE_METAFEATURES})",
            g.depth(),
            g.size(),
            fs.len()
        )));
    }
    if !g.is_complete() {
        return usage("membership is defined for complete trees");
    }
    let mut s = Search { g, fs, prefixes: use_prefixes, memo: HashMap::new() };
    Ok(s.grows(g.root()))
}

struct Search<'a> {
    g: &'a IncompleteTree,
    fs: &'a [IncompleteTree],
    prefixes: bool,
    memo: HashMap<NodeId, bool>,
}

impl Search<'_> {
    /// The subtree of `g` at `gn` is an occurrence of some metafeature with
    /// everything below its empty leaves grown recursively.
    fn grows(&mut self, gn: NodeId) -> bool {
        if let Some(&b) = self.memo.get(&gn) {
            return b;
        }
        let fs = self.fs;
        let b = fs.iter().any(|f| self.rooted(f, gn));
        self.memo.insert(gn, b);
        b
    }

    fn rooted(&mut self, f: &IncompleteTree, gn: NodeId) -> bool {
        match f.node(f.root()) {
            // a metafeature without a split only yields constant trees
            Node::Leaf(l) => match self.g.node(gn) {
                Node::Leaf(m) => l == m || self.prefixes,
                _ => false,
            },
            Node::Empty => matches!(self.g.node(gn), Node::Leaf(_)),
            Node::Internal { .. } => {
                self.matches(f, f.root(), gn) || (self.prefixes && matches!(self.g.node(gn), Node::Leaf(_)))
            }
        }
    }

    fn matches(&mut self, f: &IncompleteTree, fn_: NodeId, gn: NodeId) -> bool {
        match (f.node(fn_), self.g.node(gn)) {
            (Node::Internal { var: a, left: fl, right: fr }, Node::Internal { var: b, left: gl, right: gr }) if a == b => {
                self.child_matches(f, fl, gl) && self.child_matches(f, fr, gr)
            }
            _ => false,
        }
    }

    fn child_matches(&mut self, f: &IncompleteTree, fn_: NodeId, gn: NodeId) -> bool {
        let open = |s: &mut Self| matches!(s.g.node(gn), Node::Leaf(_)) || s.grows(gn);
        match f.node(fn_) {
            Node::Empty => open(self),
            Node::Leaf(l) => self.g.node(gn) == Node::Leaf(l) || (self.prefixes && open(self)),
            Node::Internal { .. } => self.matches(f, fn_, gn) || (self.prefixes && open(self)),
        }
    }
}
