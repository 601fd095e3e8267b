use super::{IncompleteTree, Node, NodeId};
use crate::error::{usage, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Superimposition {
    pub conflict: bool,
    pub induced: Option<usize>,
}

/// Lays `f` over `g` with `f`'s root at `w` and walks the `w -> u` path.
///
/// Each assigned internal node of `g` on the path is compared with the node of
/// `f` it maps to. With `w == u` nothing is compared. Once the walk leaves `f`
/// (through one of `f`'s leaves) no further comparisons happen and nothing is
/// induced.
pub fn superimpose(g: &IncompleteTree, w: NodeId, u: NodeId, f: &IncompleteTree) -> Result<Superimposition> {
    if w >= g.nodes.len() || u >= g.nodes.len() {
        return usage("superimpose: node id outside tree");
    }
    let path = g.path_to(u);
    let Some(start) = path.iter().position(|&v| v == w) else {
        return usage(format!("node {u} is not in the subtree of {w}"));
    };
    let path = &path[start..];
    let compare = path.len() > 1;
    let mut fnode = Some(f.root());
    let mut conflict = false;
    for (k, &v) in path.iter().enumerate() {
        let Some(fv) = fnode else { break };
        if compare {
            if let (Some(a), Some(b)) = (g.var(v), f.var(fv)) {
                conflict |= a != b;
            }
        }
        if k + 1 < path.len() {
            let right = g.child(v, true) == Some(path[k + 1]);
            fnode = match f.node(fv) {
                Node::Internal { left, right: r, .. } => Some(if right { r } else { left }),
                _ => None,
            };
        }
    }
    let induced = fnode.and_then(|fv| f.var(fv));
    Ok(Superimposition { conflict, induced })
}

pub fn conflict(g: &IncompleteTree, w: NodeId, u: NodeId, f: &IncompleteTree) -> Result<bool> {
    superimpose(g, w, u, f).map(|s| s.conflict)
}

pub fn induce(g: &IncompleteTree, w: NodeId, u: NodeId, f: &IncompleteTree) -> Result<Option<usize>> {
    superimpose(g, w, u, f).map(|s| s.induced)
}
