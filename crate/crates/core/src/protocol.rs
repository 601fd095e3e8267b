//! The lifelong loop: try the cheap learner, fall back to scratch learning and
//! grow the representation, optionally restarting it when bad targets pile up.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::costly::{report, BoolDataset, CostlyDataset, GridDataset, ProbeLedger, Totals};
use crate::distribution::ProductDistribution;
use crate::error::{usage, Error, Result};
use crate::monomial::{improve_rep_monomial, learn_monomial_scratch, lfd_monomial, FailReason, Monomial, Outcome, PowerOracle, RepresentationMatrix};
use crate::polynomial::{improve_rep_polynomial, learn_polynomial_scratch, lfd_polynomial, OrthogonalBasis, PolyOracle, Polynomial, SampledParams};
use crate::tree::{insert_dedup, GainFunction, IncompleteTree, MetafeatureSet, NodeId};
use crate::tree_learn::{
    consistent_with, improve_rep_anchor, improve_rep_list, improve_rep_overcomplete, improve_rep_tree, learn_tree_scratch, lfd_tree,
    naive_lfd_seen_features, LfdOutcome, TreeParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Trees,
    Lists,
    AnchorTrees,
    OvercompleteTrees,
    Monomials,
    Polynomials,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Trees => "trees",
            Family::Lists => "lists",
            Family::AnchorTrees => "anchor_trees",
            Family::OvercompleteTrees => "overcomplete_trees",
            Family::Monomials => "monomials",
            Family::Polynomials => "polynomials",
        }
    }

    pub fn is_tree_like(self) -> bool {
        !matches!(self, Family::Monomials | Family::Polynomials)
    }
}

/// What to do when bad targets keep forcing scratch learning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Agnostic {
    #[default]
    None,
    /// Empty the representation on the `(K+1)`th failure since the last restart.
    Restart,
    /// Never restart; stop updating after `cap` failure-driven updates.
    Expansion { cap: usize },
    /// Restart on the `(K+c+1)`th failure since the last restart.
    Combined { c: usize },
}

/// `round(sqrt(r K N / m))` clamped to `[1, max(r, 1)]`.
pub fn combined_c(r: usize, k: usize, n: usize, m: usize) -> usize {
    let c = ((r * k * n) as f64 / m.max(1) as f64).sqrt().round() as usize;
    c.clamp(1, r.max(1))
}

/// A learning task. `target` is hidden from learners except through the
/// teacher gain and the exact oracles.
#[derive(Debug, Clone)]
pub struct Task<D, T> {
    pub dataset: D,
    pub target: T,
    pub good: bool,
}

pub type TreeTask = Task<BoolDataset, IncompleteTree>;
pub type MonomialTask = Task<GridDataset, Monomial>;
pub type PolyTask = Task<GridDataset, Polynomial>;

pub trait Metered {
    fn ledger(&self) -> &ProbeLedger;
}

impl<V: Copy, L> Metered for CostlyDataset<V, L> {
    fn ledger(&self) -> &ProbeLedger {
        CostlyDataset::ledger(self)
    }
}

/// One target family plugged into the lifelong loop.
pub trait Learner {
    type Data: Metered;
    type Target;
    type Rep;
    type Hyp;
    /// What a failed cheap attempt hands to the representation update.
    type Miss;

    fn family(&self) -> Family;
    fn empty_rep(&self) -> Self::Rep;
    fn rep_size(&self, rep: &Self::Rep) -> usize;
    fn lfd(&self, task: &mut Task<Self::Data, Self::Target>, rep: &Self::Rep) -> Result<std::result::Result<Self::Hyp, Self::Miss>>;
    fn scratch(&self, task: &mut Task<Self::Data, Self::Target>) -> Result<Self::Hyp>;
    /// `miss` is `None` for bootstrap tasks, which never ran the cheap learner.
    fn improve(&self, rep: &mut Self::Rep, hyp: &Self::Hyp, miss: Option<&Self::Miss>) -> Result<usize>;
    fn sound(&self, task: &Task<Self::Data, Self::Target>, hyp: &Self::Hyp) -> Result<bool>;
    /// Per-example probe cap for a successful cheap attempt.
    fn lfd_probe_bound(&self, rep_size: usize) -> usize;
    /// Scratch-count and representation-size caps for a realizable stream over `k` metafeatures.
    fn scratch_envelope(&self, k: usize) -> usize;
    fn rep_envelope(&self, k: usize) -> Option<usize>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainKind {
    Teacher,
    Information,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeVariant {
    Trees,
    Lists,
    Anchor,
    Overcomplete,
    /// Baseline: the representation is the set of features seen so far.
    NaiveSeen,
}

/// Metafeatures plus, for the overcomplete model, the anchors found so far.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TreeRep {
    pub fs: MetafeatureSet,
    pub anchors: BTreeSet<usize>,
    pub seen: BTreeSet<usize>,
}

#[derive(Debug, Clone)]
pub struct TreeLearner {
    pub params: TreeParams,
    pub variant: TreeVariant,
    pub gain: GainKind,
    /// Upper bound on the overcomplete scratch count besides the bootstrap.
    pub k1: usize,
}

impl TreeLearner {
    pub fn new(params: TreeParams, variant: TreeVariant) -> Self {
        TreeLearner { params, variant, gain: GainKind::Teacher, k1: 1 }
    }

    fn gain_for(&self, target: &IncompleteTree) -> GainFunction {
        match self.gain {
            GainKind::Teacher => GainFunction::Teacher(target.clone()),
            GainKind::Information => GainFunction::Information,
        }
    }
}

impl Learner for TreeLearner {
    type Data = BoolDataset;
    type Target = IncompleteTree;
    type Rep = TreeRep;
    type Hyp = IncompleteTree;
    type Miss = (IncompleteTree, Vec<NodeId>);

    fn family(&self) -> Family {
        match self.variant {
            TreeVariant::Trees | TreeVariant::NaiveSeen => Family::Trees,
            TreeVariant::Lists => Family::Lists,
            TreeVariant::Anchor => Family::AnchorTrees,
            TreeVariant::Overcomplete => Family::OvercompleteTrees,
        }
    }

    fn empty_rep(&self) -> TreeRep {
        TreeRep::default()
    }

    fn rep_size(&self, rep: &TreeRep) -> usize {
        match self.variant {
            TreeVariant::NaiveSeen => rep.seen.len(),
            _ => rep.fs.len(),
        }
    }

    fn lfd(&self, task: &mut TreeTask, rep: &TreeRep) -> Result<std::result::Result<IncompleteTree, Self::Miss>> {
        let gain = self.gain_for(&task.target);
        let out = match self.variant {
            TreeVariant::NaiveSeen => naive_lfd_seen_features(&mut task.dataset, &rep.seen, &gain, self.params)?,
            _ => lfd_tree(&mut task.dataset, &rep.fs, &gain, self.params)?,
        };
        Ok(match out {
            LfdOutcome::Learned(t) => Ok(t),
            LfdOutcome::Failed { partial, failed_path } => Err((partial, failed_path)),
        })
    }

    fn scratch(&self, task: &mut TreeTask) -> Result<IncompleteTree> {
        let gain = self.gain_for(&task.target);
        learn_tree_scratch(&mut task.dataset, &gain, self.params)
    }

    fn improve(&self, rep: &mut TreeRep, g: &IncompleteTree, miss: Option<&Self::Miss>) -> Result<usize> {
        if g.size() == 0 {
            return Ok(0);
        }
        if self.variant == TreeVariant::Overcomplete {
            // Anchors are read off the roots of scratch-learned targets.
            rep.anchors.insert(g.var(g.root()).expect("nonempty tree"));
            return improve_rep_overcomplete(&mut rep.fs, g, &rep.anchors);
        }
        if self.variant == TreeVariant::NaiveSeen {
            let before = rep.seen.len();
            rep.seen.extend(g.vars());
            return Ok(rep.seen.len() - before);
        }
        let Some((partial, path)) = miss else {
            return Ok(insert_dedup(&mut rep.fs, g.clone()) as usize);
        };
        match self.variant {
            TreeVariant::Trees => improve_rep_tree(&mut rep.fs, g, partial, path),
            TreeVariant::Lists => improve_rep_list(&mut rep.fs, g, partial),
            TreeVariant::Anchor => improve_rep_anchor(&mut rep.fs, g, partial, path),
            TreeVariant::Overcomplete | TreeVariant::NaiveSeen => unreachable!(),
        }
    }

    fn sound(&self, task: &TreeTask, h: &IncompleteTree) -> Result<bool> {
        Ok(h.is_complete() && h.depth() <= self.params.d && h.size() <= self.params.s && consistent_with(h, &task.dataset)?)
    }

    fn lfd_probe_bound(&self, rep_size: usize) -> usize {
        match self.variant {
            TreeVariant::NaiveSeen => rep_size,
            _ => 2 * rep_size + 2 * self.params.d,
        }
    }

    fn scratch_envelope(&self, k: usize) -> usize {
        match self.variant {
            TreeVariant::Trees | TreeVariant::Anchor => k,
            TreeVariant::Lists => 3 * k * k,
            TreeVariant::Overcomplete => self.k1 * k,
            TreeVariant::NaiveSeen => usize::MAX,
        }
    }

    fn rep_envelope(&self, k: usize) -> Option<usize> {
        match self.variant {
            TreeVariant::Trees => Some(k * self.params.d),
            TreeVariant::Anchor => Some(k),
            _ => None,
        }
    }
}

/// Oracle choice shared by the monomial and polynomial learners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleMode {
    Exact,
    Sampled(SampledParams),
}

#[derive(Debug, Clone)]
pub struct MonomialLearner {
    pub dist: ProductDistribution,
    pub d: u32,
    pub exact: bool,
}

impl MonomialLearner {
    fn oracle<'a>(&self, target: &'a Monomial) -> PowerOracle<'a> {
        if self.exact {
            PowerOracle::Exact(target)
        } else {
            PowerOracle::Sampled
        }
    }
}

impl Learner for MonomialLearner {
    type Data = GridDataset;
    type Target = Monomial;
    type Rep = RepresentationMatrix;
    type Hyp = Monomial;
    type Miss = FailReason;

    fn family(&self) -> Family {
        Family::Monomials
    }

    fn empty_rep(&self) -> RepresentationMatrix {
        RepresentationMatrix::new(self.dist.n)
    }

    fn rep_size(&self, rep: &RepresentationMatrix) -> usize {
        rep.len()
    }

    fn lfd(&self, task: &mut MonomialTask, rep: &RepresentationMatrix) -> Result<std::result::Result<Monomial, FailReason>> {
        let oracle = self.oracle(&task.target);
        Ok(match lfd_monomial(&mut task.dataset, rep, &self.dist, oracle, self.d)? {
            Outcome::Learned(g) => Ok(g),
            Outcome::Failed(r) => Err(r),
        })
    }

    fn scratch(&self, task: &mut MonomialTask) -> Result<Monomial> {
        let oracle = self.oracle(&task.target);
        learn_monomial_scratch(&mut task.dataset, &self.dist, oracle, self.d)
    }

    fn improve(&self, rep: &mut RepresentationMatrix, g: &Monomial, _: Option<&FailReason>) -> Result<usize> {
        if rep.contains(g) {
            return Ok(0);
        }
        improve_rep_monomial(rep, g)?;
        Ok(1)
    }

    fn sound(&self, task: &MonomialTask, g: &Monomial) -> Result<bool> {
        if self.exact && g != &task.target {
            return Ok(false);
        }
        let ds = &task.dataset;
        Ok((0..ds.n_examples()).all(|e| &g.eval(ds.audit_row(e)) == ds.label(e)))
    }

    fn lfd_probe_bound(&self, rep_size: usize) -> usize {
        rep_size.max(self.d as usize)
    }

    fn scratch_envelope(&self, k: usize) -> usize {
        k
    }

    fn rep_envelope(&self, k: usize) -> Option<usize> {
        Some(k)
    }
}

#[derive(Debug, Clone)]
pub struct PolyLearner {
    pub basis: Arc<OrthogonalBasis>,
    pub d: u32,
    pub t: usize,
    pub mode: OracleMode,
}

impl PolyLearner {
    fn oracle<'a>(&self, target: &'a Polynomial) -> PolyOracle<'a> {
        match self.mode {
            OracleMode::Exact => PolyOracle::Exact(target),
            OracleMode::Sampled(p) => PolyOracle::Sampled(p),
        }
    }
}

impl Learner for PolyLearner {
    type Data = GridDataset;
    type Target = Polynomial;
    type Rep = RepresentationMatrix;
    type Hyp = Polynomial;
    type Miss = FailReason;

    fn family(&self) -> Family {
        Family::Polynomials
    }

    fn empty_rep(&self) -> RepresentationMatrix {
        RepresentationMatrix::new(0)
    }

    fn rep_size(&self, rep: &RepresentationMatrix) -> usize {
        rep.len()
    }

    fn lfd(&self, task: &mut PolyTask, rep: &RepresentationMatrix) -> Result<std::result::Result<Polynomial, FailReason>> {
        if rep.n() != task.dataset.n_features() {
            return Ok(Err(FailReason::EmptyRepresentation));
        }
        let oracle = self.oracle(&task.target);
        Ok(match lfd_polynomial(&mut task.dataset, rep, &self.basis, oracle, self.d, self.t)? {
            Outcome::Learned(g) => Ok(g),
            Outcome::Failed(r) => Err(r),
        })
    }

    fn scratch(&self, task: &mut PolyTask) -> Result<Polynomial> {
        let oracle = self.oracle(&task.target);
        learn_polynomial_scratch(&mut task.dataset, &self.basis, oracle, self.d, self.t)
    }

    fn improve(&self, rep: &mut RepresentationMatrix, p: &Polynomial, _: Option<&FailReason>) -> Result<usize> {
        if let Some(g) = p.monomials().next() {
            if rep.n() != g.n() {
                *rep = RepresentationMatrix::new(g.n());
            }
        }
        improve_rep_polynomial(rep, p)
    }

    fn sound(&self, task: &PolyTask, p: &Polynomial) -> Result<bool> {
        if self.mode == OracleMode::Exact && p != &task.target {
            return Ok(false);
        }
        let ds = &task.dataset;
        Ok((0..ds.n_examples()).all(|e| &p.eval(ds.audit_row(e)) == ds.label(e)))
    }

    fn lfd_probe_bound(&self, rep_size: usize) -> usize {
        rep_size + self.t * self.d as usize
    }

    fn scratch_envelope(&self, k: usize) -> usize {
        k
    }

    fn rep_envelope(&self, _: usize) -> Option<usize> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Metafeature count of the stream, read only by the bound checks and
    /// the restart rule.
    pub k: usize,
    pub agnostic: Agnostic,
    /// Leading tasks learned from scratch and added whole.
    pub bootstrap: usize,
    /// After the bootstrap, failures are scratch-learned without touching the representation.
    pub freeze_after_bootstrap: bool,
    /// Bad-target count, when known, for the agnostic checks.
    pub r: Option<usize>,
}

impl ProtocolConfig {
    pub fn realizable(k: usize) -> Self {
        ProtocolConfig { k, agnostic: Agnostic::None, bootstrap: 0, freeze_after_bootstrap: false, r: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskOutcome {
    /// The cheap learner succeeded.
    Lfd,
    /// Cheap learner failed; scratch-learned and the representation updated.
    Scratch,
    /// Scratch-learned as part of the bootstrap.
    Bootstrap,
    /// Cheap learner failed after a frozen bootstrap; scratch-learned only.
    FrozenScratch,
}

impl TaskOutcome {
    pub fn name(self) -> &'static str {
        match self {
            TaskOutcome::Lfd => "lfd",
            TaskOutcome::Scratch => "scratch",
            TaskOutcome::Bootstrap => "bootstrap",
            TaskOutcome::FrozenScratch => "frozen_scratch",
        }
    }

    pub fn is_scratch(self) -> bool {
        self != TaskOutcome::Lfd
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task_index: usize,
    pub family: Family,
    pub outcome: TaskOutcome,
    pub probes: usize,
    pub per_example_max: usize,
    /// Representation size the task was attempted with.
    pub rep_size: usize,
    pub restart_epoch: usize,
    pub good: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub family: Family,
    pub tasks: Vec<TaskRecord>,
    pub totals: Totals,
    pub restarts: usize,
    /// Representation size after each task.
    pub rep_size_trace: Vec<usize>,
    pub bound_checks: BTreeMap<String, bool>,
}

impl RunReport {
    pub fn all_checks_pass(&self) -> bool {
        self.bound_checks.values().all(|&b| b)
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.bound_checks.iter().filter(|(_, &ok)| !ok).map(|(k, _)| k.as_str()).collect()
    }

    /// Failures of the cheap learner after the bootstrap.
    pub fn post_bootstrap_failures(&self) -> usize {
        self.tasks.iter().filter(|t| matches!(t.outcome, TaskOutcome::Scratch | TaskOutcome::FrozenScratch)).count()
    }
}

/// Runs the lifelong loop over `tasks` in order.
pub fn run_protocol<L: Learner>(learner: &L, tasks: &mut [Task<L::Data, L::Target>], cfg: &ProtocolConfig) -> Result<RunReport> {
    if let Agnostic::Combined { c } = cfg.agnostic {
        if c == 0 {
            return usage("combined protocol needs c >= 1");
        }
    }
    let mut rep = learner.empty_rep();
    let mut since_restart = 0usize;
    let mut updates = 0usize;
    let mut restarts = 0usize;
    let mut records = Vec::with_capacity(tasks.len());
    let mut trace = Vec::with_capacity(tasks.len());
    let mut max_rep = 0usize;
    let mut lfd_bound_ok = true;
    for (j, task) in tasks.iter_mut().enumerate() {
        let attempted_size = learner.rep_size(&rep);
        let (outcome, hyp) = if j < cfg.bootstrap {
            let h = learner.scratch(task)?;
            learner.improve(&mut rep, &h, None)?;
            (TaskOutcome::Bootstrap, h)
        } else {
            match learner.lfd(task, &rep)? {
                Ok(h) => {
                    lfd_bound_ok &= task.dataset.ledger().max_per_example() <= learner.lfd_probe_bound(attempted_size);
                    (TaskOutcome::Lfd, h)
                }
                Err(miss) => {
                    let h = learner.scratch(task)?;
                    if cfg.freeze_after_bootstrap && cfg.bootstrap > 0 {
                        (TaskOutcome::FrozenScratch, h)
                    } else {
                        let limit = match cfg.agnostic {
                            Agnostic::Restart => Some(cfg.k),
                            Agnostic::Combined { c } => Some(cfg.k + c),
                            Agnostic::None | Agnostic::Expansion { .. } => None,
                        };
                        // The triggering failure closes the old epoch; its hypothesis
                        // seeds the emptied representation without counting again.
                        let restart = limit.is_some_and(|l| since_restart >= l);
                        if restart {
                            rep = learner.empty_rep();
                            restarts += 1;
                            since_restart = 0;
                        }
                        let frozen = matches!(cfg.agnostic, Agnostic::Expansion { cap } if updates >= cap);
                        if !frozen {
                            learner.improve(&mut rep, &h, Some(&miss))?;
                            updates += 1;
                            if !restart {
                                since_restart += 1;
                            }
                        }
                        (TaskOutcome::Scratch, h)
                    }
                }
            }
        };
        if !learner.sound(task, &hyp)? {
            return Err(Error::Soundness(format!("task {j}: {} hypothesis disagrees with the task", learner.family().name())));
        }
        let ledger = task.dataset.ledger();
        records.push(TaskRecord {
            task_index: j,
            family: learner.family(),
            outcome,
            probes: ledger.total_probes(),
            per_example_max: ledger.max_per_example(),
            rep_size: attempted_size,
            restart_epoch: restarts,
            good: task.good,
        });
        let size = learner.rep_size(&rep);
        max_rep = max_rep.max(size);
        trace.push(size);
    }

    let ledgers: Vec<ProbeLedger> = tasks.iter().map(|t| t.dataset.ledger().clone()).collect();
    let scratch: Vec<bool> = records.iter().map(|r| r.outcome.is_scratch()).collect();
    let good: Vec<bool> = records.iter().map(|r| r.good).collect();
    let mut totals = report(&ledgers, &scratch, &good)?.totals;
    totals.restart_count = restarts;

    let mut checks = BTreeMap::new();
    checks.insert("lfd_per_example_probes".to_string(), lfd_bound_ok);
    let scratch_count = totals.scratch_count;
    match (cfg.agnostic, cfg.r) {
        (Agnostic::None, None | Some(0)) => {
            let env = learner.scratch_envelope(cfg.k).saturating_add(cfg.bootstrap);
            checks.insert("scratch_count".to_string(), scratch_count <= env);
            if let Some(env) = learner.rep_envelope(cfg.k) {
                checks.insert("rep_size".to_string(), max_rep <= env);
            }
        }
        (Agnostic::Restart, Some(r)) => {
            checks.insert("restarts".to_string(), restarts <= r);
            checks.insert("scratch_count".to_string(), scratch_count <= (r + 1) * (cfg.k + 1));
        }
        (Agnostic::Combined { c }, Some(r)) => {
            checks.insert("epochs".to_string(), restarts <= r / (c + 1));
        }
        _ => {}
    }
    Ok(RunReport { family: learner.family(), tasks: records, totals, restarts, rep_size_trace: trace, bound_checks: checks })
}

/// The restart variant: empty the representation on the `(K+1)`th failure since the last restart.
pub fn run_restart_protocol<L: Learner>(learner: &L, tasks: &mut [Task<L::Data, L::Target>], k: usize, r: Option<usize>) -> Result<RunReport> {
    run_protocol(learner, tasks, &ProtocolConfig { k, agnostic: Agnostic::Restart, bootstrap: 0, freeze_after_bootstrap: false, r })
}

/// `c`-expansion between `r/c`-restarts.
pub fn run_combined_protocol<L: Learner>(learner: &L, tasks: &mut [Task<L::Data, L::Target>], k: usize, c: usize, r: Option<usize>) -> Result<RunReport> {
    run_protocol(learner, tasks, &ProtocolConfig { k, agnostic: Agnostic::Combined { c }, bootstrap: 0, freeze_after_bootstrap: false, r })
}

/// Scratch-learns the first `bootstrap` tasks, adds each whole, then runs
/// the cheap learner only.
pub fn run_semi_adversarial<L: Learner>(learner: &L, tasks: &mut [Task<L::Data, L::Target>], k: usize, bootstrap: usize) -> Result<RunReport> {
    run_protocol(learner, tasks, &ProtocolConfig { k, agnostic: Agnostic::None, bootstrap, freeze_after_bootstrap: true, r: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costly::{CostlyDataset, Label};
    use crate::distribution::DEFAULT_GRID;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use Label::{Neg, Pos};

    fn stump(v: usize, l: Label, r: Label) -> IncompleteTree {
        IncompleteTree::labeled_stump(v, l, r)
    }

    fn tree_task(t: &IncompleteTree, n: usize) -> TreeTask {
        let rows: Vec<Vec<bool>> = (0..(1usize << n)).map(|b| (0..n).map(|i| b >> i & 1 == 1).collect()).collect();
        let labels = rows.iter().map(|r| t.predict_row(r).unwrap()).collect();
        Task { dataset: CostlyDataset::new(n, rows, labels).unwrap(), target: t.clone(), good: true }
    }

    fn learner() -> TreeLearner {
        TreeLearner::new(TreeParams::new(4, 2, 3).unwrap(), TreeVariant::Trees)
    }

    #[test]
    fn single_task_is_one_scratch() {
        let mut tasks = vec![tree_task(&stump(1, Neg, Pos), 4)];
        let rep = run_protocol(&learner(), &mut tasks, &ProtocolConfig::realizable(1)).unwrap();
        assert_eq!(rep.totals.scratch_count, 1);
        assert_eq!(rep.totals.total_probes, 16 * 4);
        assert!(rep.all_checks_pass());
    }

    #[test]
    fn repeated_tree_is_learned_cheaply() {
        let t = stump(2, Pos, Neg);
        let mut tasks: Vec<TreeTask> = (0..5).map(|_| tree_task(&t, 4)).collect();
        let rep = run_protocol(&learner(), &mut tasks, &ProtocolConfig::realizable(1)).unwrap();
        let outcomes: Vec<TaskOutcome> = rep.tasks.iter().map(|r| r.outcome).collect();
        assert_eq!(outcomes[0], TaskOutcome::Scratch);
        assert!(outcomes[1..].iter().all(|&o| o == TaskOutcome::Lfd));
        assert_eq!(rep.rep_size_trace, vec![1; 5]);
        assert!(rep.tasks[1].probes < rep.tasks[0].probes);
    }

    #[test]
    fn restart_triggers_on_k_plus_first_failure() {
        // The trigger seeds the new epoch but is charged to the old one.
        let mut tasks: Vec<TreeTask> = (0..4).map(|v| tree_task(&stump(v, Neg, Pos), 4)).collect();
        let rep = run_restart_protocol(&learner(), &mut tasks, 1, Some(2)).unwrap();
        assert_eq!(rep.restarts, 2);
        assert_eq!(rep.rep_size_trace, vec![1, 1, 2, 1]);
        assert_eq!(rep.tasks.iter().map(|t| t.restart_epoch).collect::<Vec<_>>(), vec![0, 1, 1, 2]);
        assert!(rep.all_checks_pass());

        let mut tasks: Vec<TreeTask> = (0..3).map(|v| tree_task(&stump(v, Neg, Pos), 4)).collect();
        let rep = run_combined_protocol(&learner(), &mut tasks, 1, 5, Some(2)).unwrap();
        assert_eq!(rep.restarts, 0);
        assert_eq!(rep.rep_size_trace, vec![1, 2, 3]);
    }

    #[test]
    fn bootstrap_then_frozen() {
        let t = stump(0, Neg, Pos);
        let mut tasks = vec![tree_task(&t, 3), tree_task(&t, 3), tree_task(&stump(2, Neg, Pos), 3)];
        let l = TreeLearner::new(TreeParams::new(3, 1, 1).unwrap(), TreeVariant::Trees);
        let rep = run_semi_adversarial(&l, &mut tasks, 1, 1).unwrap();
        let outcomes: Vec<TaskOutcome> = rep.tasks.iter().map(|r| r.outcome).collect();
        assert_eq!(outcomes, vec![TaskOutcome::Bootstrap, TaskOutcome::Lfd, TaskOutcome::FrozenScratch]);
        assert_eq!(rep.rep_size_trace, vec![1, 1, 1]);
        assert_eq!(rep.post_bootstrap_failures(), 1);
    }

    #[test]
    fn monomial_repeats() {
        let dist = ProductDistribution::grid(3, DEFAULT_GRID).unwrap();
        let g = Monomial(vec![2, 0, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut tasks: Vec<MonomialTask> = (0..4)
            .map(|_| {
                let rows: Vec<_> = (0..6).map(|_| dist.sample_row(&mut rng).unwrap()).collect();
                let labels = rows.iter().map(|r| g.eval(r)).collect();
                Task { dataset: CostlyDataset::new(3, rows, labels).unwrap(), target: g.clone(), good: true }
            })
            .collect();
        let l = MonomialLearner { dist, d: 3, exact: true };
        let rep = run_protocol(&l, &mut tasks, &ProtocolConfig::realizable(1)).unwrap();
        assert_eq!(rep.totals.scratch_count, 1);
        assert!(rep.all_checks_pass());
    }

    #[test]
    fn combined_c_formula() {
        assert_eq!(combined_c(4, 2, 8, 16), 2);
        assert_eq!(combined_c(0, 3, 10, 10), 1);
        assert_eq!(combined_c(2, 10, 100, 1), 2);
    }
}
