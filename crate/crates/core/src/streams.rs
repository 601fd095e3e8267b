//! Seeded task streams for every family, the agnostic mixer, the lower-bound
//! regimes and the single-feature guessing game.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::costly::{BoolDataset, CostlyDataset, GridDataset, Label};
use crate::distribution::{ProductDistribution, DEFAULT_GRID};
use crate::error::{Error, Result};
use crate::linalg::EchelonBasis;
use crate::monomial::Monomial;
use crate::polynomial::Polynomial;
use crate::protocol::{Family, MonomialTask, PolyTask, Task, TreeTask};
use crate::rational::Q;
use crate::tree::{IncompleteTree, MetafeatureSet, Node, NodeId};

const RETRIES: usize = 1000;

/// Independent RNG for `(seed, trial)`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    #[default]
    Random,
    AdversarialFirst,
    AdversarialInterleaved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StreamSpec {
    pub family: Family,
    /// Feature count.
    pub n: usize,
    /// Metafeature count; anchor groups for the overcomplete model.
    pub k: usize,
    /// Depth bound for trees, degree bound for monomials and polynomials.
    pub d: usize,
    /// Size bound for trees.
    pub s: usize,
    /// Terms per polynomial; metafeatures per path for the overcomplete model (0 = no cap).
    pub t: usize,
    /// Good targets.
    pub m: usize,
    /// Bad targets.
    pub r: usize,
    /// Examples per task.
    pub samples: usize,
    pub seed: u64,
    pub placement: Placement,
    pub mf_depth: usize,
    /// Variants per anchor group in the overcomplete model.
    pub k1: usize,
    /// Chance of affixing a metafeature at an empty leaf while composing.
    pub p_affix: f64,
    pub grid_m: u64,
    /// Coefficient magnitude floor for polynomial targets.
    pub a_min: f64,
}

impl Default for StreamSpec {
    fn default() -> Self {
        StreamSpec {
            family: Family::Trees,
            n: 16,
            k: 2,
            d: 4,
            s: 15,
            t: 0,
            m: 10,
            r: 0,
            samples: 64,
            seed: 0,
            placement: Placement::Random,
            mf_depth: 2,
            k1: 2,
            p_affix: 0.5,
            grid_m: DEFAULT_GRID,
            a_min: 0.25,
        }
    }
}

impl StreamSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Spec(m));
        if self.k == 0 || self.k > self.n {
            return bad(format!("need 1 <= K <= N, got K={} N={}", self.k, self.n));
        }
        if self.d == 0 {
            return bad("d must be positive".into());
        }
        if self.family.is_tree_like() {
            if self.d > self.s {
                return bad(format!("need d <= s, got d={} s={}", self.d, self.s));
            }
            if self.mf_depth == 0 || self.mf_depth > self.d {
                return bad(format!("need 1 <= metafeature depth <= d, got {}", self.mf_depth));
            }
        }
        if self.family == Family::OvercompleteTrees && self.k1 == 0 {
            return bad("overcomplete model needs K1 >= 1".into());
        }
        if self.family == Family::Polynomials && self.t == 0 {
            return bad("polynomial streams need t >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.p_affix) {
            return bad("p_affix must lie in [0, 1]".into());
        }
        Ok(())
    }

    fn dist(&self) -> Result<ProductDistribution> {
        ProductDistribution::grid(self.n, self.grid_m)
    }
}

/// Which of the `m + r` positions hold bad targets.
pub fn placement_flags(m: usize, r: usize, placement: Placement, rng: &mut impl Rng) -> Vec<bool> {
    let total = m + r;
    let mut bad = vec![false; total];
    match placement {
        Placement::Random => {
            for i in rand::seq::index::sample(rng, total, r) {
                bad[i] = true;
            }
        }
        Placement::AdversarialFirst => bad[..r].iter_mut().for_each(|b| *b = true),
        Placement::AdversarialInterleaved => {
            for i in 0..r {
                bad[(i + 1) * total / r - 1] = true;
            }
        }
    }
    bad
}

fn random_label(rng: &mut impl Rng) -> Label {
    Label::from(rng.gen_bool(0.5))
}

/// Flips free leaves so that no internal node has two equally labeled leaf
/// children. Returns false if some such pair has no free member.
fn reduce(t: &mut IncompleteTree, free: &BTreeSet<NodeId>) -> bool {
    for u in t.internal_nodes() {
        let (l, r) = (t.child(u, false).unwrap(), t.child(u, true).unwrap());
        if let (Node::Leaf(a), Node::Leaf(b)) = (t.node(l), t.node(r)) {
            if a == b {
                if free.contains(&r) {
                    t.set_label(r, b.flip());
                } else if free.contains(&l) {
                    t.set_label(l, a.flip());
                } else {
                    return false;
                }
            }
        }
    }
    true
}

/// Random incomplete tree rooted at `root` (or a pool variable), depth at
/// most `depth`, variables distinct within the tree, at least one empty leaf
/// and no pair of equally labeled sibling leaves.
fn random_metafeature(rng: &mut impl Rng, root: Option<usize>, pool: &[usize], depth: usize, list: bool) -> IncompleteTree {
    let mut avail: Vec<usize> = pool.to_vec();
    avail.shuffle(rng);
    let mut t = IncompleteTree::empty();
    let target_depth = rng.gen_range(1..=depth.max(1));
    let root_var = root.unwrap_or_else(|| avail.pop().expect("nonempty pool"));
    let (l, r) = t.split(t.root(), root_var);
    if list {
        let (mut leafside, mut cont) = if rng.gen_bool(0.5) { (l, r) } else { (r, l) };
        for _ in 1..target_depth {
            let Some(v) = avail.pop() else { break };
            t.set_label(leafside, random_label(rng));
            let (a, b) = t.split(cont, v);
            (leafside, cont) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
        }
        t.set_label(leafside, random_label(rng));
        return t;
    }
    let mut frontier = vec![(l, 1usize), (r, 1usize)];
    let mut leaves = Vec::new();
    while let Some((u, dep)) = frontier.pop() {
        if dep < target_depth && rng.gen_bool(0.5) {
            if let Some(v) = avail.pop() {
                let (a, b) = t.split(u, v);
                frontier.push((a, dep + 1));
                frontier.push((b, dep + 1));
                continue;
            }
        }
        leaves.push(u);
    }
    leaves.sort_unstable();
    let keep_empty = leaves[rng.gen_range(0..leaves.len())];
    let mut labeled = BTreeSet::new();
    for &u in &leaves {
        if u != keep_empty && rng.gen_bool(0.5) {
            t.set_label(u, random_label(rng));
            labeled.insert(u);
        }
    }
    let ok = reduce(&mut t, &labeled);
    debug_assert!(ok);
    t
}

/// Hidden ground truth of a tree stream.
#[derive(Debug, Clone)]
pub struct TreeStream {
    pub tasks: Vec<TreeTask>,
    pub metafeatures: MetafeatureSet,
    pub anchors: Vec<usize>,
}

/// Samples the metafeature set for `spec.family`.
pub fn gen_metafeatures(spec: &StreamSpec, rng: &mut impl Rng) -> Result<(MetafeatureSet, Vec<usize>)> {
    spec.validate()?;
    let all: Vec<usize> = (0..spec.n).collect();
    let fits = |f: &IncompleteTree| f.size() <= spec.s && f.depth() <= spec.d;
    let mut fs: MetafeatureSet = Vec::new();
    let mut anchors = Vec::new();
    match spec.family {
        Family::Trees | Family::Lists => {
            let list = spec.family == Family::Lists;
            for _ in 0..RETRIES {
                if fs.len() == spec.k {
                    break;
                }
                let f = random_metafeature(rng, None, &all, spec.mf_depth, list);
                if fits(&f) && !fs.contains(&f) {
                    fs.push(f);
                }
            }
        }
        Family::AnchorTrees | Family::OvercompleteTrees => {
            anchors = rand::seq::index::sample(rng, spec.n, spec.k).into_vec();
            let rest: Vec<usize> = all.iter().copied().filter(|v| !anchors.contains(v)).collect();
            if rest.is_empty() && spec.mf_depth > 1 {
                return Err(Error::Spec("no non-anchor features left".into()));
            }
            let per = if spec.family == Family::AnchorTrees { 1 } else { spec.k1 };
            for &a in &anchors {
                let mut group: Vec<IncompleteTree> = Vec::new();
                for _ in 0..RETRIES {
                    if group.len() == per {
                        break;
                    }
                    let depth = if rest.is_empty() { 1 } else { spec.mf_depth };
                    let f = random_metafeature(rng, Some(a), &rest, depth, false);
                    if fits(&f) && !group.contains(&f) {
                        group.push(f);
                    }
                }
                if group.len() < per {
                    return Err(Error::GeneratorExhausted(format!("could not draw {per} distinct variants for anchor x{a}")));
                }
                fs.extend(group);
            }
        }
        _ => return Err(Error::Spec(format!("{} is not a tree family", spec.family.name()))),
    }
    if matches!(spec.family, Family::Trees | Family::Lists) && fs.len() < spec.k {
        return Err(Error::GeneratorExhausted(format!("only {} distinct metafeatures fit", fs.len())));
    }
    Ok((fs, anchors))
}

/// Composes one target from `fs[top]` by affixing metafeatures at empty
/// leaves and labeling the rest, then reduces it.
pub fn compose_target(spec: &StreamSpec, fs: &[IncompleteTree], top: usize, anchors: &[usize], rng: &mut impl Rng) -> Result<IncompleteTree> {
    let mut g = fs[top].clone();
    let mut free = BTreeSet::new();
    let anchor_count = |g: &IncompleteTree, u: NodeId| g.ancestor_vars(u).iter().filter(|v| anchors.contains(v)).count();
    while let Some(&u) = g.empty_leaves().first() {
        let mut placed = false;
        let path_ok = spec.family != Family::OvercompleteTrees || spec.t == 0 || anchor_count(&g, u) < spec.t;
        if path_ok && rng.gen_bool(spec.p_affix) {
            let mut order: Vec<usize> = (0..fs.len()).collect();
            order.shuffle(rng);
            for j in order {
                if let Ok(h) = g.affix(u, &fs[j], true) {
                    if h.depth() <= spec.d && h.size() <= spec.s {
                        g = h;
                        placed = true;
                        break;
                    }
                }
            }
        }
        if !placed {
            g = g.label_leaf(u, random_label(rng))?;
            free.insert(u);
        }
    }
    if !reduce(&mut g, &free) {
        return Err(Error::GeneratorExhausted("target cannot be reduced".into()));
    }
    debug_assert!(g.is_reduced());
    Ok(g)
}

/// One example routed to every leaf, then uniform rows up to `samples`.
pub fn leaf_covering_dataset(g: &IncompleteTree, n: usize, samples: usize, rng: &mut impl Rng) -> Result<BoolDataset> {
    let mut rows = Vec::new();
    for u in leaves(g) {
        let mut row: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let path = g.path_to(u);
        for (w, &dir) in path.iter().zip(&g.directions_to(u)) {
            row[g.var(*w).unwrap()] = dir;
        }
        rows.push(row);
    }
    while rows.len() < samples {
        rows.push((0..n).map(|_| rng.gen_bool(0.5)).collect());
    }
    let labels = rows.iter().map(|r| g.predict_row(r)).collect::<Result<Vec<_>>>()?;
    CostlyDataset::new(n, rows, labels)
}

fn leaves(g: &IncompleteTree) -> Vec<NodeId> {
    let mut out = Vec::new();
    let mut stack = vec![g.root()];
    while let Some(u) = stack.pop() {
        match g.node(u) {
            Node::Internal { left, right, .. } => {
                stack.push(right);
                stack.push(left);
            }
            _ => out.push(u),
        }
    }
    out
}

/// Random complete reduced tree over `pool`, depth at most `depth`.
fn random_complete_tree(rng: &mut impl Rng, pool: &[usize], depth: usize, s: usize) -> Result<IncompleteTree> {
    for _ in 0..RETRIES {
        let mut t = random_metafeature(rng, None, pool, depth, false);
        if t.size() > s {
            continue;
        }
        let mut free = BTreeSet::new();
        while let Some(&u) = t.empty_leaves().first() {
            t = t.label_leaf(u, random_label(rng))?;
            free.insert(u);
        }
        if reduce(&mut t, &free) {
            return Ok(t);
        }
    }
    Err(Error::GeneratorExhausted("no complete tree over the bad pool".into()))
}

/// Tree-family stream with `spec.m` good targets and `spec.r` bad ones
/// placed per `spec.placement`.
pub fn gen_tree_stream(spec: &StreamSpec, trial: u64) -> Result<TreeStream> {
    spec.validate()?;
    let mut rng = trial_rng(spec.seed, trial);
    let (fs, anchors) = gen_metafeatures(spec, &mut rng)?;
    let flags = placement_flags(spec.m, spec.r, spec.placement, &mut rng);
    let used: BTreeSet<usize> = fs.iter().flat_map(|f| f.vars()).collect();
    let bad_pool: Vec<usize> = (0..spec.n).filter(|v| !used.contains(v)).collect();
    if spec.r > 0 && bad_pool.is_empty() {
        return Err(Error::Spec(format!("no features outside the metafeatures for bad targets (N={})", spec.n)));
    }
    let mut tasks = Vec::with_capacity(flags.len());
    for bad in flags {
        let target = if bad {
            random_complete_tree(&mut rng, &bad_pool, spec.mf_depth.min(spec.d), spec.s)?
        } else {
            // Uniform top metafeature: every one is topmost with chance 1/|F|.
            let top = rng.gen_range(0..fs.len());
            compose_target(spec, &fs, top, &anchors, &mut rng)?
        };
        let dataset = leaf_covering_dataset(&target, spec.n, spec.samples, &mut rng)?;
        tasks.push(Task { dataset, target, good: !bad });
    }
    Ok(TreeStream { tasks, metafeatures: fs, anchors })
}

/// Hidden ground truth of a monomial or polynomial stream.
#[derive(Debug, Clone)]
pub struct AlgebraicStream<T> {
    pub tasks: Vec<T>,
    /// Columns of the hidden matrix `F`.
    pub columns: Vec<Monomial>,
}

/// `K` independent natural columns, each of degree at most `max(1, d/2)`.
pub fn gen_representation(n: usize, k: usize, d: u32, rng: &mut impl Rng) -> Result<Vec<Monomial>> {
    let cap = (d / 2).max(1);
    for _ in 0..RETRIES {
        let mut span = EchelonBasis::new();
        let mut cols = Vec::with_capacity(k);
        for _ in 0..RETRIES {
            if cols.len() == k {
                break;
            }
            let deg = rng.gen_range(1..=cap);
            let mut g = Monomial::zero(n);
            for _ in 0..deg {
                g.0[rng.gen_range(0..n)] += 1;
            }
            if span.insert(&g.to_q()) {
                cols.push(g);
            }
        }
        if cols.len() == k {
            return Ok(cols);
        }
    }
    Err(Error::GeneratorExhausted(format!("no rank-{k} representation found")))
}

/// Nonzero natural combination of `cols` with degree at most `d`.
pub fn random_combination(cols: &[Monomial], d: u32, rng: &mut impl Rng) -> Monomial {
    let n = cols[0].n();
    let mut order: Vec<usize> = (0..cols.len()).collect();
    order.shuffle(rng);
    let mut budget = d;
    let mut w = vec![0u32; cols.len()];
    for &j in &order {
        let deg = cols[j].degree();
        if deg <= budget {
            w[j] = rng.gen_range(0..=budget / deg);
            budget -= w[j] * deg;
        }
    }
    if w.iter().all(|&x| x == 0) {
        let j = *order.iter().min_by_key(|&&j| cols[j].degree()).unwrap();
        w[j] = 1;
    }
    let mut g = Monomial::zero(n);
    for (c, &wj) in cols.iter().zip(&w) {
        for i in 0..n {
            g.0[i] += wj * c.0[i];
        }
    }
    g
}

fn random_outside_span(cols: &[Monomial], n: usize, d: u32, rng: &mut impl Rng) -> Result<Monomial> {
    let mut span = EchelonBasis::new();
    for c in cols {
        span.insert(&c.to_q());
    }
    for _ in 0..RETRIES {
        let mut g = Monomial::zero(n);
        for _ in 0..rng.gen_range(1..=d) {
            g.0[rng.gen_range(0..n)] += 1;
        }
        if !span.contains(&g.to_q()) {
            return Ok(g);
        }
    }
    Err(Error::Spec("no monomial of degree <= d lies outside the representation span".into()))
}

fn grid_dataset(spec: &StreamSpec, dist: &ProductDistribution, rng: &mut impl Rng, label: impl Fn(&[crate::costly::GridValue]) -> Q) -> Result<GridDataset> {
    let rows: Vec<Vec<_>> = (0..spec.samples.max(2)).map(|_| dist.sample_row(rng)).collect::<Result<_>>()?;
    let labels = rows.iter().map(|r| label(r)).collect();
    CostlyDataset::new(spec.n, rows, labels)
}

pub fn gen_monomial_stream(spec: &StreamSpec, trial: u64) -> Result<AlgebraicStream<MonomialTask>> {
    spec.validate()?;
    let mut rng = trial_rng(spec.seed, trial);
    let d = spec.d as u32;
    let dist = spec.dist()?;
    let columns = gen_representation(spec.n, spec.k, d, &mut rng)?;
    let flags = placement_flags(spec.m, spec.r, spec.placement, &mut rng);
    let mut tasks = Vec::with_capacity(flags.len());
    for bad in flags {
        let target = if bad { random_outside_span(&columns, spec.n, d, &mut rng)? } else { random_combination(&columns, d, &mut rng) };
        let dataset = grid_dataset(spec, &dist, &mut rng, |r| target.eval(r))?;
        tasks.push(Task { dataset, target, good: !bad });
    }
    Ok(AlgebraicStream { tasks, columns })
}

fn random_coefficient(a_min: f64, rng: &mut impl Rng) -> Q {
    loop {
        let den = [1i64, 2, 4][rng.gen_range(0..3)];
        let num = rng.gen_range(1..=9i64) * if rng.gen_bool(0.5) { 1 } else { -1 };
        if (num as f64 / den as f64).abs() >= a_min {
            return crate::rational::qr(num, den);
        }
    }
}

pub fn gen_poly_stream(spec: &StreamSpec, trial: u64) -> Result<AlgebraicStream<PolyTask>> {
    spec.validate()?;
    let mut rng = trial_rng(spec.seed, trial);
    let d = spec.d as u32;
    let dist = spec.dist()?;
    let columns = gen_representation(spec.n, spec.k, d, &mut rng)?;
    let flags = placement_flags(spec.m, spec.r, spec.placement, &mut rng);
    let mut tasks = Vec::with_capacity(flags.len());
    for bad in flags {
        let terms = rng.gen_range(1..=spec.t);
        let mut target = Polynomial::new();
        for _ in 0..RETRIES {
            if target.len() == terms {
                break;
            }
            let g = if bad && target.is_zero() { random_outside_span(&columns, spec.n, d, &mut rng)? } else { random_combination(&columns, d, &mut rng) };
            if target.coeff(&g).is_none() {
                target.add_term(g, random_coefficient(spec.a_min, &mut rng));
            }
        }
        let dataset = grid_dataset(spec, &dist, &mut rng, |r| target.eval(r))?;
        tasks.push(Task { dataset, target, good: !bad });
    }
    Ok(AlgebraicStream { tasks, columns })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Realizable,
    Intermediate,
    Large1,
    Large2,
}

/// Range limits for the agnostic lower bounds.
pub fn r_min(n: usize, k: usize, m: usize) -> f64 {
    let (n, k, m) = (n as f64, k as f64, m as f64);
    (m / n).max(k * n / m).max(k)
}

pub fn r_max(n: usize, k: usize, m: usize) -> f64 {
    let (n, k, m) = (n as f64, k as f64, m as f64);
    (m * n / k).min((n - k) * (n - k) * m / (k * n))
}

/// Stump labeling `+` when feature `i` is 1.
pub fn single_feature_target(i: usize) -> IncompleteTree {
    IncompleteTree::labeled_stump(i, Label::Neg, Label::Pos)
}

/// Single-feature target streams from the lower-bound constructions. Good
/// flags are assigned after the fact from the designated features.
#[allow(clippy::too_many_arguments)]
pub fn gen_adversary_stream(regime: Regime, n: usize, k: usize, m: usize, r: usize, samples: usize, seed: u64, trial: u64) -> Result<Vec<TreeTask>> {
    if k == 0 || k >= n {
        return Err(Error::Spec(format!("need 1 <= K < N, got K={k} N={n}")));
    }
    let (rf, rmin, rmax) = (r as f64, r_min(n, k, m), r_max(n, k, m));
    let (nf, kf, mf) = (n as f64, k as f64, m as f64);
    let mut rng = trial_rng(seed, trial);
    let mut feats: Vec<usize> = Vec::new();
    let good: BTreeSet<usize> = match regime {
        Regime::Realizable => {
            if m < k {
                return Err(Error::Spec("realizable regime needs m >= K".into()));
            }
            let chosen = rand::seq::index::sample(&mut rng, n, k).into_vec();
            feats.extend(&chosen);
            for _ in k..m {
                feats.push(chosen[rng.gen_range(0..k)]);
            }
            chosen.into_iter().collect()
        }
        Regime::Intermediate | Regime::Large1 | Regime::Large2 => {
            let m_prime = match regime {
                Regime::Intermediate => {
                    if rf <= nf - kf || rf > rmax {
                        return Err(Error::Spec(format!("intermediate regime needs N-K < r <= {rmax:.2}, got r={r}")));
                    }
                    rf * nf / (nf - kf)
                }
                Regime::Large1 => {
                    if rf < mf * nf / kf || rf < rmin {
                        return Err(Error::Spec(format!("large regime 1 needs r >= max(mN/K, r_min) = {:.2}", (mf * nf / kf).max(rmin))));
                    }
                    mf * nf / kf
                }
                _ => {
                    let lo = ((nf - kf) * (nf - kf) * mf / (kf * nf)).max(rmin);
                    if rf < lo || rf >= mf * nf / kf {
                        return Err(Error::Spec(format!("large regime 2 needs {lo:.2} <= r < {:.2}", mf * nf / kf)));
                    }
                    (rf * nf * mf / kf).sqrt()
                }
            };
            for _ in 0..m_prime.round() as usize {
                feats.push(rng.gen_range(0..n));
            }
            let chosen = rand::seq::index::sample(&mut rng, n, k).into_vec();
            if regime != Regime::Large1 {
                for _ in 0..m {
                    feats.push(chosen[rng.gen_range(0..k)]);
                }
            }
            chosen.into_iter().collect()
        }
    };
    feats
        .into_iter()
        .map(|i| {
            let target = single_feature_target(i);
            let dataset = leaf_covering_dataset(&target, n, samples, &mut rng)?;
            Ok(Task { dataset, target, good: good.contains(&i) })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameLearner {
    /// Names a uniform feature without probing.
    Blind,
    /// Reads whole columns in random order and names the first match.
    Scan,
    /// Reads columns cell by cell, drops a column at its first mismatch and
    /// names a uniform choice among columns not ruled out.
    Consistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameData {
    RandomBits,
    /// Only the hidden feature is 1.
    OneHot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameOutcome {
    pub win: bool,
    pub probes: usize,
}

/// One round: the adversary hides `i*` in a pool of `pool` features, labels
/// equal feature `i*`, and the learner probes at most `budget` cells.
pub fn play_single_feature_game(learner: GameLearner, data: GameData, budget: usize, pool: usize, samples: usize, rng: &mut impl Rng) -> Result<GameOutcome> {
    if pool == 0 || samples == 0 {
        return Err(Error::Spec("game needs a nonempty pool and at least one example".into()));
    }
    if budget > samples * pool {
        return Err(Error::Spec(format!("budget {budget} exceeds S*N' = {}", samples * pool)));
    }
    let hidden = rng.gen_range(0..pool);
    let rows: Vec<Vec<bool>> = (0..samples)
        .map(|_| (0..pool).map(|i| if data == GameData::OneHot { i == hidden } else { rng.gen_bool(0.5) }).collect())
        .collect();
    let labels: Vec<Label> = rows.iter().map(|r| Label::from(r[hidden])).collect();
    let mut ds: BoolDataset = CostlyDataset::new(pool, rows, labels)?;
    let mut order: Vec<usize> = (0..pool).collect();
    order.shuffle(rng);
    let mut left = budget;
    // Columns still possible, and columns fully verified.
    let mut alive: Vec<usize> = Vec::new();
    let mut matched: Vec<usize> = Vec::new();
    let mut unread: Vec<usize> = Vec::new();
    for &i in &order {
        match learner {
            GameLearner::Blind => unread.push(i),
            GameLearner::Scan => {
                if left < samples {
                    unread.push(i);
                    continue;
                }
                left -= samples;
                let mut ok = true;
                for e in 0..samples {
                    ok &= Label::from(ds.probe(e, i)?) == *ds.label(e);
                }
                if ok {
                    matched.push(i);
                }
            }
            GameLearner::Consistent => {
                let mut ok = true;
                let mut full = true;
                for e in 0..samples {
                    if left == 0 {
                        full = false;
                        break;
                    }
                    left -= 1;
                    if Label::from(ds.probe(e, i)?) != *ds.label(e) {
                        ok = false;
                        break;
                    }
                }
                if ok && full {
                    matched.push(i);
                } else if ok {
                    alive.push(i);
                }
            }
        }
    }
    let named = match learner {
        GameLearner::Blind => *unread.choose(rng).unwrap(),
        GameLearner::Scan => matched.first().copied().unwrap_or_else(|| *unread.choose(rng).expect("some column unread")),
        GameLearner::Consistent => {
            let cands: Vec<usize> = matched.iter().chain(&alive).copied().collect();
            *cands.choose(rng).expect("the hidden column is never ruled out")
        }
    };
    if ds.ledger().total_probes() > budget {
        return Ok(GameOutcome { win: false, probes: ds.ledger().total_probes() });
    }
    Ok(GameOutcome { win: named == hidden, probes: ds.ledger().total_probes() })
}

/// Fraction of `trials` rounds lost.
pub fn game_failure_rate(learner: GameLearner, data: GameData, budget: usize, pool: usize, samples: usize, trials: usize, seed: u64) -> Result<f64> {
    let mut lost = 0usize;
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial as u64);
        lost += !play_single_feature_game(learner, data, budget, pool, samples, &mut rng)?.win as usize;
    }
    Ok(lost as f64 / trials.max(1) as f64)
}
