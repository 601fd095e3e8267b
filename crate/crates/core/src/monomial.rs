//! Monomials over a product distribution on `[1, 2]^N`: exponent estimation
//! from log-correlations, the representation matrix and its learners.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::costly::{GridDataset, GridValue};
use crate::distribution::ProductDistribution;
use crate::error::{usage, Error, Result};
use crate::linalg::{self, EchelonBasis, Matrix};
use crate::rational::{is_integer, to_f64, Q};

/// Exponent vector `g`, standing for `prod_i x_i^{g_i}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn zero(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    pub fn unit(n: usize, i: usize, e: u32) -> Self {
        let mut g = Self::zero(n);
        g.0[i] = e;
        g
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i] > 0).collect()
    }

    pub fn to_q(&self) -> Vec<Q> {
        self.0.iter().map(|&e| Q::from_integer(e.into())).collect()
    }

    /// Exact value at a grid point, reading coordinates through `read`.
    pub fn eval_with(&self, mut read: impl FnMut(usize) -> Result<GridValue>) -> Result<Q> {
        let (mut num, mut den) = (BigInt::from(1), BigInt::from(1));
        for i in self.support() {
            let v = read(i)?;
            let e = self.0[i] as usize;
            num *= num_traits::pow(BigInt::from(v.n), e);
            den *= num_traits::pow(BigInt::from(v.m), e);
        }
        Ok(Q::new(num, den))
    }

    pub fn eval(&self, row: &[GridValue]) -> Q {
        self.eval_with(|i| Ok(row[i])).expect("row access")
    }

    /// Sparse form `{"i": e}` with zero exponents omitted.
    pub fn to_sparse(&self) -> BTreeMap<String, u32> {
        self.support().into_iter().map(|i| (i.to_string(), self.0[i])).collect()
    }

    pub fn from_sparse(n: usize, m: &BTreeMap<String, u32>) -> Result<Self> {
        let mut g = Self::zero(n);
        for (k, &e) in m {
            let i: usize = k.parse().map_err(|_| Error::Parse(format!("bad feature index {k:?}")))?;
            if i >= n {
                return Err(Error::Parse(format!("feature index {i} outside {n} features")));
            }
            g.0[i] = e;
        }
        Ok(g)
    }
}

/// Ground-truth access for exponent estimation.
#[derive(Debug, Clone, Copy)]
pub enum PowerOracle<'a> {
    /// Evaluates the log-correlation analytically from the hidden target.
    Exact(&'a Monomial),
    /// Empirical log-correlation over the estimation rows.
    Sampled,
}

/// All rows but the last; the last row is held out for verification.
pub fn estimation_rows<V: Copy, L>(ds: &crate::costly::CostlyDataset<V, L>) -> Range<usize> {
    0..ds.n_examples().saturating_sub(1).max(1)
}

pub fn verification_row<V: Copy, L>(ds: &crate::costly::CostlyDataset<V, L>) -> usize {
    ds.n_examples() - 1
}

/// Estimates `g_i` as `<Q_g, log x_i - E log x_i> / Var(log x_i)`, rounded.
/// Probes feature `i` on every estimation row in both modes.
pub fn estimate_power(ds: &mut GridDataset, i: usize, dist: &ProductDistribution, oracle: PowerOracle) -> Result<u32> {
    let rows = estimation_rows(ds);
    let mut logs = Vec::with_capacity(rows.len());
    for e in rows.clone() {
        logs.push(ds.probe(e, i)?.ln());
    }
    let ratio = match oracle {
        PowerOracle::Exact(g) => {
            // Independence kills every cross term E[log x_j (log x_i - mu)], j != i,
            // so the numerator is g_i Var(log x_i) and the ratio is g_i.
            g.0[i] as f64
        }
        PowerOracle::Sampled => {
            let s = logs.len() as f64;
            let mean = logs.iter().sum::<f64>() / s;
            let var = logs.iter().map(|l| l * l).sum::<f64>() / s - mean * mean;
            let floor = dist.log_variance() / 2.0;
            if var < floor {
                return Err(Error::VarianceUnderflow { feature: i, value: var, floor });
            }
            let mut num = 0.0;
            for (e, l) in rows.zip(&logs) {
                num += to_f64(ds.label(e)).ln() * (l - mean);
            }
            (num / s) / var
        }
    };
    Ok(ratio.round().max(0.0) as u32)
}

/// Probes everything and estimates each exponent.
pub fn learn_monomial_scratch(ds: &mut GridDataset, dist: &ProductDistribution, oracle: PowerOracle, d: u32) -> Result<Monomial> {
    ds.probe_all();
    let g = Monomial((0..ds.n_features()).map(|i| estimate_power(ds, i, dist, oracle)).collect::<Result<_>>()?);
    if g.degree() > d {
        return Err(Error::ModelViolation(format!("estimated degree {} exceeds {d}", g.degree())));
    }
    Ok(g)
}

/// Sample size `ceil(C d / min(c^2/d, c/d, 1)^2 * ln(N m / delta))`.
pub fn sample_bound(constant: f64, d: u32, c: f64, n: usize, m: usize, delta: f64) -> f64 {
    let d = d.max(1) as f64;
    let r = (c * c / d).min(c / d).min(1.0);
    (constant * d / (r * r) * ((n * m.max(1)) as f64 / delta).ln()).ceil()
}

/// Stored targets as columns of an N×k matrix with the invariants that the
/// columns are independent and `F[I]` is invertible.
#[derive(Debug, Clone)]
pub struct RepresentationMatrix {
    n: usize,
    columns: Vec<Monomial>,
    span: EchelonBasis,
    rows: Vec<usize>,
    inverse: Matrix,
}

impl RepresentationMatrix {
    pub fn new(n: usize) -> Self {
        RepresentationMatrix { n, columns: Vec::new(), span: EchelonBasis::new(), rows: Vec::new(), inverse: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn columns(&self) -> &[Monomial] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.span.rank()
    }

    pub fn contains(&self, g: &Monomial) -> bool {
        self.span.contains(&g.to_q())
    }

    /// Appends `g`; fails with `RankNotIncreased` if it is in the span.
    pub fn push(&mut self, g: Monomial) -> Result<()> {
        if g.n() != self.n {
            return usage(format!("monomial over {} features, matrix over {}", g.n(), self.n));
        }
        if !self.span.insert(&g.to_q()) {
            return Err(Error::RankNotIncreased);
        }
        self.columns.push(g);
        let full = self.row_matrix(0..self.n);
        self.rows = linalg::independent_rows(&full);
        if self.rows.len() != self.columns.len() {
            return Err(Error::InternalConsistency("independent row count differs from rank".into()));
        }
        let sub: Matrix = self.rows.iter().map(|&i| full[i].clone()).collect();
        self.inverse = linalg::inverse(&sub).ok_or_else(|| Error::InternalConsistency("F[I] is singular".into()))?;
        Ok(())
    }

    fn row_matrix(&self, rows: impl Iterator<Item = usize>) -> Matrix {
        rows.map(|i| self.columns.iter().map(|c| Q::from_integer(c.0[i].into())).collect()).collect()
    }

    /// Row indices `I` chosen by lowest-index pivoting.
    pub fn independent_rows(&self) -> &[usize] {
        &self.rows
    }

    /// Weights `w` with `F[I] w = v`.
    pub fn solve(&self, v: &[Q]) -> Vec<Q> {
        linalg::mat_vec(&self.inverse, v)
    }

    /// `F w`.
    pub fn combine(&self, w: &[Q]) -> Vec<Q> {
        let m = self.row_matrix(0..self.n);
        linalg::mat_vec(&m, w)
    }
}

/// Reason a cheap learner gave up.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailReason {
    EmptyRepresentation,
    NotNatural,
    DegreeTooHigh,
    VerificationMismatch,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome<T> {
    Learned(T),
    Failed(FailReason),
}

impl<T> Outcome<T> {
    pub fn learned(&self) -> Option<&T> {
        match self {
            Outcome::Learned(t) => Some(t),
            Outcome::Failed(_) => None,
        }
    }
}

/// Converts rational entries to a natural exponent vector.
pub(crate) fn natural_vector(v: &[Q]) -> Option<Monomial> {
    v.iter()
        .map(|x| if is_integer(x) && !x.is_negative() { x.to_integer().to_u32() } else { None })
        .collect::<Option<Vec<u32>>>()
        .map(Monomial)
}

fn verify_monomial(ds: &mut GridDataset, g: &Monomial) -> Result<bool> {
    let e = verification_row(ds);
    let v = g.eval_with(|i| ds.probe(e, i))?;
    Ok(&v == ds.label(e))
}

/// Learns from the representation: estimates exponents only on the rows `I`,
/// lifts them through `F[I]^{-1}` and checks one held-out example.
pub fn lfd_monomial(ds: &mut GridDataset, rep: &RepresentationMatrix, dist: &ProductDistribution, oracle: PowerOracle, d: u32) -> Result<Outcome<Monomial>> {
    if rep.is_empty() {
        return Ok(Outcome::Failed(FailReason::EmptyRepresentation));
    }
    let mut gi = Vec::with_capacity(rep.len());
    for &i in rep.independent_rows() {
        gi.push(Q::from_integer(estimate_power(ds, i, dist, oracle)?.into()));
    }
    let w = rep.solve(&gi);
    let Some(g) = natural_vector(&rep.combine(&w)) else {
        return Ok(Outcome::Failed(FailReason::NotNatural));
    };
    if g.degree() > d {
        return Ok(Outcome::Failed(FailReason::DegreeTooHigh));
    }
    if !verify_monomial(ds, &g)? {
        return Ok(Outcome::Failed(FailReason::VerificationMismatch));
    }
    Ok(Outcome::Learned(g))
}

/// Appends a scratch-learned target; the rank must grow.
pub fn improve_rep_monomial(rep: &mut RepresentationMatrix, g: &Monomial) -> Result<()> {
    rep.push(g.clone())
}

/// Estimates exponents only on `seen`, assumes zero elsewhere, then verifies.
pub fn naive_lfd_seen_monomial(ds: &mut GridDataset, seen: &BTreeSet<usize>, dist: &ProductDistribution, oracle: PowerOracle, d: u32) -> Result<Outcome<Monomial>> {
    let mut g = Monomial::zero(ds.n_features());
    for &i in seen {
        g.0[i] = estimate_power(ds, i, dist, oracle)?;
    }
    if g.degree() > d {
        return Ok(Outcome::Failed(FailReason::DegreeTooHigh));
    }
    if !verify_monomial(ds, &g)? {
        return Ok(Outcome::Failed(FailReason::VerificationMismatch));
    }
    Ok(Outcome::Learned(g))
}

/// Whether `v` is the zero vector.
pub fn is_zero_vector(v: &[Q]) -> bool {
    v.iter().all(Zero::is_zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costly::CostlyDataset;
    use crate::distribution::DEFAULT_GRID;
    use crate::rational::q;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dataset(g: &Monomial, s: usize, dist: &ProductDistribution, seed: u64) -> GridDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<GridValue>> = (0..s).map(|_| dist.sample_row(&mut rng).unwrap()).collect();
        let labels = rows.iter().map(|r| g.eval(r)).collect();
        CostlyDataset::new(g.n(), rows, labels).unwrap()
    }

    #[test]
    fn exact_estimates() {
        let dist = ProductDistribution::grid(4, DEFAULT_GRID).unwrap();
        let g = Monomial(vec![2, 1, 0, 0]);
        let mut ds = dataset(&g, 5, &dist, 1);
        assert_eq!(estimate_power(&mut ds, 0, &dist, PowerOracle::Exact(&g)).unwrap(), 2);
        assert_eq!(estimate_power(&mut ds, 3, &dist, PowerOracle::Exact(&g)).unwrap(), 0);
        assert_eq!(ds.ledger().total_probes(), 2 * 4);
    }

    #[test]
    fn scratch_cases() {
        let dist = ProductDistribution::grid(3, DEFAULT_GRID).unwrap();
        for g in [Monomial::zero(3), Monomial::unit(3, 0, 1)] {
            let mut ds = dataset(&g, 6, &dist, 2);
            assert_eq!(learn_monomial_scratch(&mut ds, &dist, PowerOracle::Exact(&g), 4).unwrap(), g);
            assert_eq!(ds.ledger().total_probes(), 18);
        }
        let g = Monomial(vec![3, 2, 0]);
        let mut ds = dataset(&g, 6, &dist, 2);
        assert!(matches!(learn_monomial_scratch(&mut ds, &dist, PowerOracle::Exact(&g), 4), Err(Error::ModelViolation(_))));
    }

    #[test]
    fn sampled_estimates_recover_exponents() {
        let dist = ProductDistribution::grid(3, DEFAULT_GRID).unwrap();
        let g = Monomial(vec![2, 0, 1]);
        let mut ds = dataset(&g, 4000, &dist, 3);
        let est = learn_monomial_scratch(&mut ds, &dist, PowerOracle::Sampled, 6).unwrap();
        assert_eq!(est, g);
    }

    #[test]
    fn sampled_variance_floor() {
        let dist = ProductDistribution::grid(1, DEFAULT_GRID).unwrap();
        let row = vec![GridValue { n: DEFAULT_GRID, m: DEFAULT_GRID }];
        let mut ds = CostlyDataset::new(1, vec![row.clone(), row.clone(), row], vec![q(1), q(1), q(1)]).unwrap();
        assert!(matches!(estimate_power(&mut ds, 0, &dist, PowerOracle::Sampled), Err(Error::VarianceUnderflow { .. })));
    }

    #[test]
    fn representation_and_lfd() {
        let dist = ProductDistribution::grid(3, DEFAULT_GRID).unwrap();
        let mut rep = RepresentationMatrix::new(3);
        rep.push(Monomial(vec![1, 1, 0])).unwrap();
        rep.push(Monomial(vec![0, 0, 1])).unwrap();
        assert_eq!(rep.independent_rows(), &[0, 2]);
        let g = Monomial(vec![1, 1, 2]);
        let mut ds = dataset(&g, 8, &dist, 4);
        let out = lfd_monomial(&mut ds, &rep, &dist, PowerOracle::Exact(&g), 6).unwrap();
        assert_eq!(out, Outcome::Learned(g.clone()));
        assert_eq!(rep.solve(&[q(1), q(2)]), vec![q(1), q(2)]);
        // per-example: |I| on estimation rows, support on the verification row
        let per = ds.ledger().per_example_probes();
        assert!(per[..7].iter().all(|&c| c == 2));
        assert_eq!(per[7], 3);
    }

    #[test]
    fn lfd_rejects_off_span_target() {
        // g[I] lies in the span of F[I] but g does not lie in C(F)
        let dist = ProductDistribution::grid(3, DEFAULT_GRID).unwrap();
        let mut rep = RepresentationMatrix::new(3);
        rep.push(Monomial(vec![1, 1, 0])).unwrap();
        assert_eq!(rep.independent_rows(), &[0]);
        let g = Monomial(vec![1, 0, 0]);
        let mut ds = dataset(&g, 8, &dist, 5);
        let out = lfd_monomial(&mut ds, &rep, &dist, PowerOracle::Exact(&g), 6).unwrap();
        assert_eq!(out, Outcome::Failed(FailReason::VerificationMismatch));
        assert_eq!(
            lfd_monomial(&mut ds, &RepresentationMatrix::new(3), &dist, PowerOracle::Exact(&g), 6).unwrap(),
            Outcome::Failed(FailReason::EmptyRepresentation)
        );
    }

    #[test]
    fn improve_rep_rank() {
        let mut rep = RepresentationMatrix::new(3);
        improve_rep_monomial(&mut rep, &Monomial(vec![1, 0, 2])).unwrap();
        assert_eq!(rep.rank(), 1);
        assert_eq!(improve_rep_monomial(&mut rep, &Monomial(vec![1, 0, 2])), Err(Error::RankNotIncreased));
        assert_eq!(improve_rep_monomial(&mut rep, &Monomial(vec![2, 0, 4])), Err(Error::RankNotIncreased));
    }

    #[test]
    fn naive_seen() {
        let dist = ProductDistribution::grid(4, DEFAULT_GRID).unwrap();
        let g = Monomial(vec![0, 2, 0, 1]);
        let mut ds = dataset(&g, 8, &dist, 6);
        let seen: BTreeSet<usize> = [1, 3].into();
        assert_eq!(naive_lfd_seen_monomial(&mut ds, &seen, &dist, PowerOracle::Exact(&g), 6).unwrap(), Outcome::Learned(g.clone()));
        let seen: BTreeSet<usize> = [1].into();
        let mut ds = dataset(&g, 8, &dist, 6);
        assert_eq!(
            naive_lfd_seen_monomial(&mut ds, &seen, &dist, PowerOracle::Exact(&g), 6).unwrap(),
            Outcome::Failed(FailReason::VerificationMismatch)
        );
    }

    #[test]
    fn sparse_json() {
        let g = Monomial(vec![0, 3, 0, 1]);
        let s = g.to_sparse();
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"{"1":3,"3":1}"#);
        assert_eq!(Monomial::from_sparse(4, &s).unwrap(), g);
        assert!(Monomial::from_sparse(2, &s).is_err());
    }

    #[test]
    fn bound_is_huge_for_uniform_marginal() {
        let c = ProductDistribution::grid(1, DEFAULT_GRID).unwrap().log_variance();
        assert!(sample_bound(4.0, 6, c, 32, 100, 0.05) > 1e8);
    }
}
