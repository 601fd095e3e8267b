//! Tree and list learners: top-down scratch learning, learning from a
//! metafeature set, the representation updates and the seen-features baseline.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::costly::{BoolDataset, Label, ProbeLedger};
use crate::error::{usage, Error, Result};
use crate::tree::{argmax_lowest, insert_dedup, superimpose, GainFunction, IncompleteTree, MetafeatureSet, Node, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Number of features.
    pub n: usize,
    /// Depth bound.
    pub d: usize,
    /// Size bound, counted in internal nodes.
    pub s: usize,
}

impl TreeParams {
    pub fn new(n: usize, d: usize, s: usize) -> Result<Self> {
        if d == 0 || d > s {
            return usage(format!("tree params need 1 <= d <= s, got d={d}, s={s}"));
        }
        Ok(TreeParams { n, d, s })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LfdOutcome {
    Learned(IncompleteTree),
    /// `failed_path` runs from the root of `partial` to the node that
    /// triggered the failure.
    Failed { partial: IncompleteTree, failed_path: Vec<NodeId> },
}

impl LfdOutcome {
    pub fn learned(&self) -> Option<&IncompleteTree> {
        match self {
            LfdOutcome::Learned(t) => Some(t),
            LfdOutcome::Failed { .. } => None,
        }
    }
}

/// Top-down growth shared by every tree learner. `candidates` yields the
/// features allowed at an empty node, ancestors already excluded.
fn grow(
    ds: &mut BoolDataset,
    gain: &GainFunction,
    p: TreeParams,
    mut candidates: impl FnMut(&IncompleteTree, NodeId) -> Result<Vec<usize>>,
) -> Result<LfdOutcome> {
    let mut tree = IncompleteTree::empty();
    let mut members: Vec<Vec<usize>> = vec![(0..ds.n_examples()).collect()];
    let mut stack = vec![tree.root()];
    while let Some(u) = stack.pop() {
        if tree.depth_of(u) > p.d || tree.size() > p.s {
            let failed_path = tree.path_to(u);
            return Ok(LfdOutcome::Failed { partial: tree, failed_path });
        }
        let sample = std::mem::take(&mut members[u]);
        let Some(&first) = sample.first() else {
            tree.set_label(u, Label::Pos);
            continue;
        };
        let l0 = *ds.label(first);
        if sample.iter().all(|&e| *ds.label(e) == l0) {
            tree.set_label(u, l0);
            continue;
        }
        let cands = candidates(&tree, u)?;
        if cands.is_empty() {
            let failed_path = tree.path_to(u);
            return Ok(LfdOutcome::Failed { partial: tree, failed_path });
        }
        let mut columns = Vec::with_capacity(cands.len());
        for &i in &cands {
            columns.push(sample.iter().map(|&e| ds.probe(e, i)).collect::<Result<Vec<bool>>>()?);
        }
        let gains = gain.gains(ds, &sample, &cands, &columns)?;
        let best = argmax_lowest(&cands, &gains).expect("nonempty candidates");
        let col = &columns[cands.iter().position(|&c| c == best).unwrap()];
        let (l, r) = tree.split(u, best);
        members.resize(members.len().max(r + 1), Vec::new());
        for (&e, &v) in sample.iter().zip(col) {
            members[if v { r } else { l }].push(e);
        }
        stack.push(r);
        stack.push(l);
    }
    Ok(LfdOutcome::Learned(tree))
}

fn without_ancestors(tree: &IncompleteTree, u: NodeId, cands: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let anc = tree.ancestor_vars(u);
    let set: BTreeSet<usize> = cands.into_iter().filter(|c| !anc.contains(c)).collect();
    set.into_iter().collect()
}

/// Probes every cell, then splits top-down on the best of all features.
pub fn learn_tree_scratch(ds: &mut BoolDataset, gain: &GainFunction, p: TreeParams) -> Result<IncompleteTree> {
    ds.probe_all();
    let n = ds.n_features();
    match grow(ds, gain, p, |t, u| Ok(without_ancestors(t, u, 0..n)))? {
        LfdOutcome::Learned(t) => Ok(t),
        LfdOutcome::Failed { partial, .. } => Err(Error::Realizability(format!(
            "no tree with depth <= {} and size <= {} found (reached depth {}, size {})",
            p.d,
            p.s,
            partial.depth(),
            partial.size()
        ))),
    }
}

/// Features induced at `u` by superimposing each metafeature at each node on
/// the root-to-`u` path, minus the variables of `u`'s ancestors.
pub fn induced_candidates(tree: &IncompleteTree, u: NodeId, fs: &[IncompleteTree]) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for w in tree.path_to(u) {
        for f in fs {
            let s = superimpose(tree, w, u, f)?;
            if !s.conflict {
                out.extend(s.induced);
            }
        }
    }
    Ok(without_ancestors(tree, u, out))
}

/// Learns from the metafeature set, probing on each node's sample only the
/// features induced there.
pub fn lfd_tree(ds: &mut BoolDataset, fs: &[IncompleteTree], gain: &GainFunction, p: TreeParams) -> Result<LfdOutcome> {
    grow(ds, gain, p, |t, u| induced_candidates(t, u, fs))
}

/// Top-down learning restricted to the features in `seen`.
pub fn naive_lfd_seen_features(ds: &mut BoolDataset, seen: &BTreeSet<usize>, gain: &GainFunction, p: TreeParams) -> Result<LfdOutcome> {
    grow(ds, gain, p, |t, u| Ok(without_ancestors(t, u, seen.iter().copied())))
}

/// Every example's distinct probed features stay within `2|F| + 2d`.
pub fn per_example_probe_bound_check(ledger: &ProbeLedger, rep_size: usize, d: usize) -> bool {
    ledger.max_per_example() <= 2 * rep_size + 2 * d
}

/// Walks `dirs` in `partial` and `g` together while both split on the same
/// variable. Returns the nodes of `g` visited, ending at the first node where
/// the two disagree, or `None` if they never do.
fn divergence_along(g: &IncompleteTree, partial: &IncompleteTree, dirs: &[bool]) -> Option<Vec<NodeId>> {
    let (mut gn, mut pn) = (g.root(), partial.root());
    let mut out = Vec::new();
    for k in 0..=dirs.len() {
        out.push(gn);
        match (partial.node(pn), g.node(gn)) {
            (Node::Internal { var: a, .. }, Node::Internal { var: b, .. }) if a == b => {
                let &d = dirs.get(k)?;
                gn = g.child(gn, d).unwrap();
                pn = partial.child(pn, d).unwrap();
            }
            (Node::Leaf(_), Node::Leaf(_)) => return None,
            _ => return Some(out),
        }
    }
    None
}

/// First disagreement between `partial` and `g` in depth-first order.
fn first_divergence(g: &IncompleteTree, partial: &IncompleteTree) -> Option<Vec<NodeId>> {
    fn go(g: &IncompleteTree, partial: &IncompleteTree, gn: NodeId, pn: NodeId, path: &mut Vec<NodeId>) -> bool {
        path.push(gn);
        match (partial.node(pn), g.node(gn)) {
            (Node::Internal { var: a, left: pl, right: pr }, Node::Internal { var: b, left: gl, right: gr }) if a == b => {
                if go(g, partial, gl, pl, path) || go(g, partial, gr, pr, path) {
                    return true;
                }
            }
            (Node::Leaf(_), Node::Leaf(_)) => {}
            _ => return true,
        }
        path.pop();
        false
    }
    let mut path = Vec::new();
    go(g, partial, g.root(), partial.root(), &mut path).then_some(path)
}

/// Path in `g` corresponding to the failed path of `partial`, ending at the
/// node where they disagree.
pub fn corresponding_path(g: &IncompleteTree, partial: &IncompleteTree, failed_path: &[NodeId]) -> Result<Vec<NodeId>> {
    let dirs = match failed_path.last() {
        Some(&u) => partial.directions_to(u),
        None => Vec::new(),
    };
    divergence_along(g, partial, &dirs)
        .or_else(|| first_divergence(g, partial))
        .ok_or_else(|| Error::InternalConsistency("learned tree agrees with the failed partial tree everywhere".into()))
}

/// Adds the subtree of `g` at every internal node of the corresponding path.
/// Returns how many new metafeatures were added.
pub fn improve_rep_tree(fs: &mut MetafeatureSet, g: &IncompleteTree, partial: &IncompleteTree, failed_path: &[NodeId]) -> Result<usize> {
    let path = corresponding_path(g, partial, failed_path)?;
    let mut added = 0;
    for v in path {
        if g.var(v).is_some() {
            added += insert_dedup(fs, g.subtree(v)) as usize;
        }
    }
    Ok(added)
}

/// Adds the suffix of the list `g` below its longest common prefix with `partial`.
pub fn improve_rep_list(fs: &mut MetafeatureSet, g: &IncompleteTree, partial: &IncompleteTree) -> Result<usize> {
    if !g.is_list() {
        return usage("improve_rep_list needs a decision list");
    }
    let (mut gn, mut pn) = (g.root(), partial.root());
    loop {
        let Node::Internal { var, left, right } = g.node(gn) else {
            return Err(Error::InternalConsistency("list agrees with the failed partial tree".into()));
        };
        if partial.var(pn) != Some(var) {
            return Ok(insert_dedup(fs, g.subtree(gn)) as usize);
        }
        let go_right = match (g.var(left), g.var(right)) {
            (None, Some(_)) => true,
            (Some(_), None) => false,
            _ => return Err(Error::InternalConsistency("list agrees with the failed partial tree".into())),
        };
        gn = if go_right { right } else { left };
        pn = partial.child(pn, go_right).unwrap();
    }
}

/// Adds only the subtree of `g` at the topmost node on the corresponding path
/// that disagrees with `partial`.
pub fn improve_rep_anchor(fs: &mut MetafeatureSet, g: &IncompleteTree, partial: &IncompleteTree, failed_path: &[NodeId]) -> Result<usize> {
    let path = corresponding_path(g, partial, failed_path)?;
    let v = *path.last().unwrap();
    if g.var(v).is_none() {
        return Err(Error::InternalConsistency("disagreement is at a leaf of the learned tree".into()));
    }
    Ok(insert_dedup(fs, g.subtree(v)) as usize)
}

/// Cuts `g` at every node splitting on an anchor and adds each piece.
pub fn improve_rep_overcomplete(fs: &mut MetafeatureSet, g: &IncompleteTree, anchors: &BTreeSet<usize>) -> Result<usize> {
    let is_anchor = |u: NodeId| g.var(u).is_some_and(|v| anchors.contains(&v));
    if !is_anchor(g.root()) {
        return Err(Error::ModelViolation("root of the learned tree is not an anchor".into()));
    }
    let mut added = 0;
    for u in g.internal_nodes() {
        if is_anchor(u) {
            added += insert_dedup(fs, g.subtree_cut(u, is_anchor)) as usize;
        }
    }
    Ok(added)
}

/// Number of leading tasks learned from scratch by the semi-adversarial
/// bootstrap: `ceil(ln(K / delta) / p_min)`.
pub fn bootstrap_count(p_min: f64, delta: f64, k: usize) -> usize {
    ((k as f64 / delta).ln() / p_min).ceil().max(1.0) as usize
}

/// Whether `t` labels every example of `ds` correctly (unmetered audit).
pub fn consistent_with(t: &IncompleteTree, ds: &BoolDataset) -> Result<bool> {
    for e in 0..ds.n_examples() {
        if t.predict_row(ds.audit_row(e))? != *ds.label(e) {
            return Ok(false);
        }
    }
    Ok(true)
}
