//! Sparse polynomials under a known product distribution, learned one
//! monomial at a time through correlations with a monic orthogonal basis.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::costly::{GridDataset, GridValue};
use crate::distribution::ProductDistribution;
use crate::error::{usage, Error, Result};
use crate::monomial::{estimation_rows, natural_vector, verification_row, FailReason, Monomial, Outcome, RepresentationMatrix};
use crate::rational::{format_q, parse_q, to_f64, Q};

/// Sum of distinct monomials with nonzero rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, Q>,
}

impl Polynomial {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, Q)>) -> Self {
        let mut p = Self::new();
        for (g, a) in terms {
            p.add_term(g, a);
        }
        p
    }

    pub fn add_term(&mut self, g: Monomial, a: Q) {
        let e = self.terms.entry(g).or_insert_with(Q::zero);
        *e += a;
        if e.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Q)> {
        self.terms.iter()
    }

    pub fn monomials(&self) -> impl Iterator<Item = &Monomial> {
        self.terms.keys()
    }

    pub fn coeff(&self, g: &Monomial) -> Option<&Q> {
        self.terms.get(g)
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Features appearing in some term.
    pub fn support(&self) -> BTreeSet<usize> {
        self.terms.keys().flat_map(|g| g.support()).collect()
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        let mut p = self.clone();
        for (g, a) in &other.terms {
            p.add_term(g.clone(), -a.clone());
        }
        p
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut p = Polynomial::new();
        for (g, a) in &self.terms {
            for (h, b) in &other.terms {
                let gh = Monomial(g.0.iter().zip(&h.0).map(|(x, y)| x + y).collect());
                p.add_term(gh, a * b);
            }
        }
        p
    }

    pub fn eval_with(&self, mut read: impl FnMut(usize) -> Result<GridValue>) -> Result<Q> {
        let mut s = Q::zero();
        for (g, a) in &self.terms {
            s += g.eval_with(&mut read)? * a;
        }
        Ok(s)
    }

    pub fn eval(&self, row: &[GridValue]) -> Q {
        self.eval_with(|i| Ok(row[i])).expect("row access")
    }

    pub fn eval_f64(&self, read: impl Fn(usize) -> f64) -> f64 {
        self.terms
            .iter()
            .map(|(g, a)| to_f64(a) * g.support().iter().map(|&i| read(i).powi(g.0[i] as i32)).product::<f64>())
            .sum()
    }

    pub fn to_json(&self) -> PolynomialJson {
        PolynomialJson {
            terms: self.terms.iter().map(|(g, a)| TermJson { monomial: g.to_sparse(), coeff: format_q(a) }).collect(),
        }
    }

    pub fn from_json(n: usize, j: &PolynomialJson) -> Result<Polynomial> {
        let mut p = Polynomial::new();
        for t in &j.terms {
            let g = Monomial::from_sparse(n, &t.monomial)?;
            if p.terms.contains_key(&g) {
                return Err(Error::Parse("repeated monomial in polynomial".into()));
            }
            p.add_term(g, parse_q(&t.coeff)?);
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub monomial: BTreeMap<String, u32>,
    pub coeff: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialJson {
    pub terms: Vec<TermJson>,
}

/// Monic orthogonal polynomials `H_k`, `k <= 2d`, for one marginal.
#[derive(Debug, Clone)]
pub struct OrthogonalBasis {
    d: u32,
    moments: Vec<Q>,
    /// Ascending coefficients of `H_k`.
    polys: Vec<Vec<Q>>,
    norms: Vec<Q>,
    /// `table[k][h] = E[H_k(x) x^h]` for `h <= 2d`.
    table: Vec<Vec<Q>>,
    polys_f64: Vec<Vec<f64>>,
    norms_f64: Vec<f64>,
}

impl OrthogonalBasis {
    pub fn build(dist: &ProductDistribution, d: u32) -> Result<Self> {
        let top = 2 * d as usize;
        let moments: Vec<Q> = (0..=2 * top as u32).map(|j| dist.moment(j)).collect();
        let inner_xk = |k: usize, p: &[Q]| -> Q { p.iter().enumerate().map(|(t, c)| c * &moments[k + t]).sum() };
        let mut polys: Vec<Vec<Q>> = Vec::new();
        let mut norms: Vec<Q> = Vec::new();
        for k in 0..=top {
            let mut h = vec![Q::zero(); k + 1];
            h[k] = Q::one();
            for j in 0..k {
                let proj = inner_xk(k, &polys[j]) / &norms[j];
                for (t, c) in polys[j].iter().enumerate() {
                    h[t] -= &proj * c;
                }
            }
            let n = inner_xk(k, &h);
            if !n.is_positive() {
                return Err(Error::ModelViolation(format!("degree-{k} basis polynomial has zero norm")));
            }
            polys.push(h);
            norms.push(n);
        }
        let table = polys.iter().map(|p| (0..=top).map(|h| inner_xk(h, p)).collect()).collect();
        let polys_f64 = polys.iter().map(|p| p.iter().map(to_f64).collect()).collect();
        let norms_f64 = norms.iter().map(to_f64).collect();
        Ok(OrthogonalBasis { d, moments, polys, norms, table, polys_f64, norms_f64 })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn moment(&self, j: usize) -> &Q {
        &self.moments[j]
    }

    pub fn poly(&self, k: usize) -> &[Q] {
        &self.polys[k]
    }

    pub fn norm(&self, k: usize) -> &Q {
        &self.norms[k]
    }

    /// `E[H_j H_k]` by direct expansion against the moments.
    pub fn inner(&self, j: usize, k: usize) -> Q {
        let mut s = Q::zero();
        for (a, x) in self.polys[j].iter().enumerate() {
            for (b, y) in self.polys[k].iter().enumerate() {
                s += x * y * &self.moments[a + b];
            }
        }
        s
    }

    fn eval_f64(&self, k: usize, x: f64) -> f64 {
        self.polys_f64[k].iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    fn table(&self, k: u32, h: u32) -> Result<&Q> {
        self.table
            .get(k as usize)
            .and_then(|r| r.get(h as usize))
            .ok_or_else(|| Error::Usage(format!("basis built for d={} cannot pair H_{k} with x^{h}", self.d)))
    }
}

/// Ground-truth access for correlations.
#[derive(Debug, Clone, Copy)]
pub enum PolyOracle<'a> {
    Exact(&'a Polynomial),
    Sampled(SampledParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampledParams {
    /// Positivity threshold of the detection test.
    pub tau: f64,
    /// Coefficients below this magnitude count as zero.
    pub a_min: f64,
    /// Largest denominator tried when snapping a coefficient estimate to a rational.
    pub max_denominator: u64,
    /// A positive detection also needs the mean this many standard errors above zero.
    pub z: f64,
}

impl Default for SampledParams {
    fn default() -> Self {
        SampledParams { tau: 1e-6, a_min: 0.05, max_denominator: 16, z: 4.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rhs {
    Residual,
    ResidualSquared,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Corr {
    Exact(Q),
    /// Empirical mean and its standard error.
    Sampled { mean: f64, se: f64 },
}

impl Corr {
    fn positive(&self, oracle: PolyOracle) -> bool {
        match (self, oracle) {
            (Corr::Exact(q), _) => q.is_positive(),
            (Corr::Sampled { mean, se }, PolyOracle::Sampled(p)) => *mean > p.tau && *mean > p.z * se,
            (Corr::Sampled { .. }, PolyOracle::Exact(_)) => unreachable!(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Corr::Exact(q) => to_f64(q),
            Corr::Sampled { mean, .. } => *mean,
        }
    }
}

/// `E[prod_i H_{k_i}(x_i) * rhs]` where the residual is `target - current`.
/// Both modes charge probes for the `lhs` features and the features of
/// `current` on every estimation row.
pub fn correlate(ds: &mut GridDataset, basis: &OrthogonalBasis, oracle: PolyOracle, lhs: &[(usize, u32)], rhs: Rhs, current: &Polynomial) -> Result<Corr> {
    let rows = estimation_rows(ds);
    let feats: BTreeSet<usize> = lhs.iter().map(|&(i, _)| i).chain(current.support()).collect();
    let mut values: Vec<Vec<GridValue>> = Vec::with_capacity(rows.len());
    for e in rows.clone() {
        values.push(feats.iter().map(|&i| ds.probe(e, i)).collect::<Result<_>>()?);
    }
    match oracle {
        PolyOracle::Exact(target) => {
            let mut r = target.sub(current);
            if rhs == Rhs::ResidualSquared {
                r = r.mul(&r);
            }
            let mut total = Q::zero();
            'terms: for (h, a) in r.terms() {
                let mut prod = a.clone();
                let mut k_of = vec![0u32; h.n()];
                for &(i, k) in lhs {
                    k_of[i] = k;
                }
                for (i, &k) in k_of.iter().enumerate() {
                    let e = h.0[i];
                    if k == 0 && e == 0 {
                        continue;
                    }
                    let t = basis.table(k, e)?;
                    if t.is_zero() {
                        continue 'terms;
                    }
                    prod *= t;
                }
                total += prod;
            }
            Ok(Corr::Exact(total))
        }
        PolyOracle::Sampled(_) => {
            let pos = |i: usize| feats.iter().position(|&f| f == i).unwrap();
            let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(values.len());
            for (row, e) in values.iter().zip(rows) {
                let x = |i: usize| row[pos(i)].to_f64();
                let resid = to_f64(ds.label(e)) - current.eval_f64(x);
                let r = if rhs == Rhs::ResidualSquared { resid * resid } else { resid };
                let l: f64 = lhs.iter().map(|&(i, k)| basis.eval_f64(k as usize, x(i))).product();
                pairs.push((l, r));
            }
            let k = pairs.len() as f64;
            // Mean-zero lhs: subtracting the mean of r leaves the expectation
            // unchanged and shrinks the variance.
            let shift = if lhs.iter().any(|&(_, d)| d > 0) { pairs.iter().map(|p| p.1).sum::<f64>() / k } else { 0.0 };
            let (mut sum, mut sq) = (0.0, 0.0);
            for (l, r) in pairs {
                let v = l * (r - shift);
                sum += v;
                sq += v * v;
            }
            let mean = sum / k;
            let var = (sq / k - mean * mean).max(0.0);
            Ok(Corr::Sampled { mean, se: (var / k).sqrt() })
        }
    }
}

fn residual_is_zero(ds: &mut GridDataset, basis: &OrthogonalBasis, oracle: PolyOracle, current: &Polynomial) -> Result<bool> {
    let c = correlate(ds, basis, oracle, &[], Rhs::ResidualSquared, current)?;
    Ok(match c {
        Corr::Exact(q) => q.is_zero(),
        Corr::Sampled { .. } => !c.positive(oracle),
    })
}

/// Lexicographically largest monomial of the residual, restricted to `vars`
/// (other coordinates read as 0), scanning each variable's power from the
/// remaining degree budget down.
fn lex_search(ds: &mut GridDataset, basis: &OrthogonalBasis, oracle: PolyOracle, vars: &[usize], d: u32, current: &Polynomial) -> Result<Monomial> {
    let mut g = Monomial::zero(ds.n_features());
    let mut lhs: Vec<(usize, u32)> = Vec::new();
    let mut budget = d;
    for &i in vars {
        for dp in (1..=budget).rev() {
            lhs.push((i, 2 * dp));
            if correlate(ds, basis, oracle, &lhs, Rhs::ResidualSquared, current)?.positive(oracle) {
                g.0[i] = dp;
                budget -= dp;
                break;
            }
            lhs.pop();
        }
        if budget == 0 {
            break;
        }
    }
    Ok(g)
}

/// Coefficient of `g` in the residual: `<prod H_{g_i}(x_i), residual> / prod n_{g_i}`.
/// Returns `None` if it is zero (or below `a_min` in sampled mode).
fn coefficient(ds: &mut GridDataset, basis: &OrthogonalBasis, oracle: PolyOracle, g: &Monomial, current: &Polynomial) -> Result<Option<Q>> {
    let lhs: Vec<(usize, u32)> = g.support().into_iter().map(|i| (i, g.0[i])).collect();
    match correlate(ds, basis, oracle, &lhs, Rhs::Residual, current)? {
        Corr::Exact(c) => {
            let mut n = Q::one();
            for &(_, k) in &lhs {
                n *= basis.norm(k as usize);
            }
            let a = c / n;
            Ok((!a.is_zero()).then_some(a))
        }
        Corr::Sampled { mean: c, .. } => {
            let PolyOracle::Sampled(p) = oracle else { unreachable!() };
            let n: f64 = lhs.iter().map(|&(_, k)| basis.norms_f64[k as usize]).product();
            let a = c / n;
            if a.abs() < p.a_min {
                return Ok(None);
            }
            Ok(Some(snap_rational(a, p.max_denominator)))
        }
    }
}

/// Closest rational to `x` with denominator at most `max_den`.
pub fn snap_rational(x: f64, max_den: u64) -> Q {
    let mut best = Q::from_integer(BigInt::from(x.round() as i64));
    let mut err = (x - x.round()).abs();
    for q in 2..=max_den.max(1) {
        let p = (x * q as f64).round();
        let e = (x - p / q as f64).abs();
        if e < err - 1e-12 {
            err = e;
            best = Q::new(BigInt::from(p as i64), BigInt::from(q));
        }
    }
    best
}

/// Extracts up to `t` terms, largest first, over all features.
pub fn learn_polynomial_scratch(ds: &mut GridDataset, basis: &OrthogonalBasis, oracle: PolyOracle, d: u32, t: usize) -> Result<Polynomial> {
    if d > basis.d() {
        return usage(format!("basis built for degree {} but d = {d}", basis.d()));
    }
    ds.probe_all();
    let vars: Vec<usize> = (0..ds.n_features()).collect();
    let mut current = Polynomial::new();
    loop {
        if residual_is_zero(ds, basis, oracle, &current)? {
            return Ok(current);
        }
        if current.len() == t {
            return Err(Error::SparsityViolation(t));
        }
        let g = lex_search(ds, basis, oracle, &vars, d, &current)?;
        match coefficient(ds, basis, oracle, &g, &current)? {
            Some(a) => current.add_term(g, a),
            None if matches!(oracle, PolyOracle::Sampled(_)) => return Ok(current),
            None => return Err(Error::InternalConsistency(format!("zero coefficient for extracted monomial {:?}", g.0))),
        }
    }
}

fn verify_polynomial(ds: &mut GridDataset, p: &Polynomial) -> Result<bool> {
    let e = verification_row(ds);
    let v = p.eval_with(|i| ds.probe(e, i))?;
    Ok(&v == ds.label(e))
}

/// Learns from the representation: the lexicographic search runs over the
/// rows `I` only and each partial exponent vector is lifted through `F[I]^{-1}`.
pub fn lfd_polynomial(ds: &mut GridDataset, rep: &RepresentationMatrix, basis: &OrthogonalBasis, oracle: PolyOracle, d: u32, t: usize) -> Result<Outcome<Polynomial>> {
    if rep.is_empty() {
        return Ok(Outcome::Failed(FailReason::EmptyRepresentation));
    }
    let rows = rep.independent_rows().to_vec();
    let mut current = Polynomial::new();
    for _ in 0..t {
        if residual_is_zero(ds, basis, oracle, &current)? {
            break;
        }
        let gi = lex_search(ds, basis, oracle, &rows, d, &current)?;
        let v: Vec<Q> = rows.iter().map(|&i| Q::from_integer(gi.0[i].into())).collect();
        let Some(g) = natural_vector(&rep.combine(&rep.solve(&v))) else {
            return Ok(Outcome::Failed(FailReason::NotNatural));
        };
        if g.degree() > d {
            return Ok(Outcome::Failed(FailReason::DegreeTooHigh));
        }
        match coefficient(ds, basis, oracle, &g, &current)? {
            Some(a) => current.add_term(g, a),
            None => break,
        }
    }
    if !verify_polynomial(ds, &current)? {
        return Ok(Outcome::Failed(FailReason::VerificationMismatch));
    }
    Ok(Outcome::Learned(current))
}

/// Appends every monomial of `p` outside the current span. Returns how many
/// columns were added.
pub fn improve_rep_polynomial(rep: &mut RepresentationMatrix, p: &Polynomial) -> Result<usize> {
    let mut added = 0;
    for g in p.monomials() {
        if !rep.contains(g) {
            rep.push(g.clone())?;
            added += 1;
        }
    }
    Ok(added)
}

/// The scratch procedure over the features in `seen` only, then verification.
pub fn naive_lfd_seen_polynomial(ds: &mut GridDataset, seen: &BTreeSet<usize>, basis: &OrthogonalBasis, oracle: PolyOracle, d: u32, t: usize) -> Result<Outcome<Polynomial>> {
    let vars: Vec<usize> = seen.iter().copied().collect();
    let mut current = Polynomial::new();
    for _ in 0..t {
        if residual_is_zero(ds, basis, oracle, &current)? {
            break;
        }
        let g = lex_search(ds, basis, oracle, &vars, d, &current)?;
        match coefficient(ds, basis, oracle, &g, &current)? {
            Some(a) => current.add_term(g, a),
            None => break,
        }
    }
    if !verify_polynomial(ds, &current)? {
        return Ok(Outcome::Failed(FailReason::VerificationMismatch));
    }
    Ok(Outcome::Learned(current))
}

/// Magnitude of the smallest coefficient, for generator checks.
pub fn min_abs_coeff(p: &Polynomial) -> Option<f64> {
    p.terms().map(|(_, a)| to_f64(&a.abs())).reduce(f64::min)
}

/// Integer-valued `Q` helper for generators.
pub fn q_from_ratio(n: i64, d: u64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}
