use super::{IncompleteTree, Node};
use crate::costly::{BoolDataset, Label};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub enum GainFunction {
    Information,
    /// Scores 1 for the variable the target splits on at the deepest node
    /// shared by the whole sample, 0 otherwise.
    Teacher(IncompleteTree),
}

fn entropy(pos: usize, n: usize) -> f64 {
    if n == 0 || pos == 0 || pos == n {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

/// Information gain of splitting `labels` by `values`.
pub fn info_gain(labels: &[Label], values: &[bool]) -> f64 {
    let n = labels.len();
    let pos = labels.iter().filter(|&&l| l == Label::Pos).count();
    let (mut n1, mut pos1) = (0, 0);
    for (l, &v) in labels.iter().zip(values) {
        if v {
            n1 += 1;
            pos1 += (*l == Label::Pos) as usize;
        }
    }
    let (n0, pos0) = (n - n1, pos - pos1);
    let split = (n0 as f64 * entropy(pos0, n0) + n1 as f64 * entropy(pos1, n1)) / n.max(1) as f64;
    (entropy(pos, n) - split).max(0.0)
}

/// Feature with the highest gain; ties go to the lowest feature index.
pub fn argmax_lowest(candidates: &[usize], gains: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (&c, &g) in candidates.iter().zip(gains) {
        best = match best {
            None => Some((c, g)),
            Some((b, bg)) if g > bg || (g == bg && c < b) => Some((c, g)),
            keep => keep,
        };
    }
    best.map(|(c, _)| c)
}

impl GainFunction {
    /// Gains for each candidate. `columns[k]` holds candidate `k`'s probed
    /// values on `examples`, in order.
    pub fn gains(&self, ds: &BoolDataset, examples: &[usize], candidates: &[usize], columns: &[Vec<bool>]) -> Result<Vec<f64>> {
        match self {
            GainFunction::Information => {
                let labels: Vec<Label> = examples.iter().map(|&e| *ds.label(e)).collect();
                Ok(columns.iter().map(|c| info_gain(&labels, c)).collect())
            }
            GainFunction::Teacher(target) => {
                let v = teacher_designated(target, ds, examples)?;
                Ok(candidates.iter().map(|&i| if Some(i) == v { 1.0 } else { 0.0 }).collect())
            }
        }
    }
}

/// Variable at the deepest target node reached by every example of `examples`,
/// or `None` when that node is a leaf. Reads rows without metering: this is the
/// oracle side, not the learner.
pub fn teacher_designated(target: &IncompleteTree, ds: &BoolDataset, examples: &[usize]) -> Result<Option<usize>> {
    for &e in examples {
        let row = ds.audit_row(e);
        let leaf = target.route(|i| Ok(row[i]))?;
        match target.node(leaf) {
            Node::Leaf(l) if l == *ds.label(e) => {}
            Node::Leaf(_) => return Err(Error::OracleMisuse(format!("example {e} disagrees with the teacher's target"))),
            _ => return Err(Error::OracleMisuse("teacher target is incomplete".into())),
        }
    }
    let mut u = target.root();
    while let Node::Internal { var, left, right } = target.node(u) {
        let mut vals = examples.iter().map(|&e| ds.audit_row(e)[var]);
        let Some(first) = vals.next() else { return Ok(Some(var)) };
        if vals.all(|v| v == first) {
            u = if first { right } else { left };
        } else {
            return Ok(Some(var));
        }
    }
    Ok(None)
}

/// Teacher gain of feature `i` on `examples`.
pub fn teacher_gain(target: &IncompleteTree, ds: &BoolDataset, examples: &[usize], i: usize) -> Result<f64> {
    Ok(if teacher_designated(target, ds, examples)? == Some(i) { 1.0 } else { 0.0 })
}
