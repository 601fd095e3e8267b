//! Product distributions over `[1, 2]^N` with identical marginals.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::costly::GridValue;
use crate::error::{usage, Result};
use crate::rational::Q;

pub const DEFAULT_GRID: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Marginal {
    /// Uniform on `{1 + j/m : j = 0..=m}`.
    Grid { m: u64 },
    /// Uniform on `[1, 2]`. Moments only; it cannot be sampled exactly.
    ContinuousUniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductDistribution {
    pub n: usize,
    pub marginal: Marginal,
    log_mean: f64,
    log_sq_mean: f64,
}

impl ProductDistribution {
    pub fn new(n: usize, marginal: Marginal) -> Result<Self> {
        let (log_mean, log_sq_mean) = match marginal {
            Marginal::Grid { m } => {
                if m == 0 {
                    return usage("grid resolution must be positive");
                }
                grid_log_moments(m)
            }
            Marginal::ContinuousUniform => {
                let l2 = std::f64::consts::LN_2;
                (2.0 * l2 - 1.0, 2.0 * l2 * l2 - 4.0 * l2 + 2.0)
            }
        };
        Ok(ProductDistribution { n, marginal, log_mean, log_sq_mean })
    }

    pub fn grid(n: usize, m: u64) -> Result<Self> {
        Self::new(n, Marginal::Grid { m })
    }

    /// `E[log x]` for one coordinate.
    pub fn log_mean(&self) -> f64 {
        self.log_mean
    }

    /// `E[log^2 x]` for one coordinate.
    pub fn log_sq_mean(&self) -> f64 {
        self.log_sq_mean
    }

    /// `Var(log x)`, the constant `c` of the minimum-variance assumption.
    pub fn log_variance(&self) -> f64 {
        self.log_sq_mean - self.log_mean * self.log_mean
    }

    pub fn sample_value(&self, rng: &mut impl Rng) -> Result<GridValue> {
        match self.marginal {
            Marginal::Grid { m } => Ok(GridValue { n: m + rng.gen_range(0..=m), m }),
            Marginal::ContinuousUniform => usage("cannot draw exact samples from the continuous marginal"),
        }
    }

    pub fn sample_row(&self, rng: &mut impl Rng) -> Result<Vec<GridValue>> {
        (0..self.n).map(|_| self.sample_value(rng)).collect()
    }

    /// Exact `E[x^j]` for one coordinate.
    pub fn moment(&self, j: u32) -> Q {
        match self.marginal {
            Marginal::Grid { m } => {
                // sum_{n=m}^{2m} n^j / (m^j (m+1))
                let big_m = BigInt::from(m);
                let s = power_sum_below(&BigInt::from(2 * m + 1), j) - power_sum_below(&big_m, j);
                Q::new(s, num_traits::pow(big_m, j as usize) * BigInt::from(m + 1))
            }
            Marginal::ContinuousUniform => {
                let two = BigInt::from(2);
                Q::new(num_traits::pow(two, j as usize + 1) - 1, BigInt::from(j + 1))
            }
        }
    }
}

fn grid_log_moments(m: u64) -> (f64, f64) {
    static CACHE: OnceLock<Mutex<HashMap<u64, (f64, f64)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(&v) = cache.lock().unwrap().get(&m) {
        return v;
    }
    let (mut s1, mut s2) = (0.0f64, 0.0f64);
    let lm = (m as f64).ln();
    for j in 0..=m {
        let l = ((m + j) as f64).ln() - lm;
        s1 += l;
        s2 += l * l;
    }
    let k = (m + 1) as f64;
    let v = (s1 / k, s2 / k);
    cache.lock().unwrap().insert(m, v);
    v
}

/// Bernoulli numbers `B_0..=B_k` with `B_1 = -1/2`.
pub fn bernoulli(k: usize) -> Vec<Q> {
    let mut b: Vec<Q> = Vec::with_capacity(k + 1);
    for m in 0..=k {
        if m == 0 {
            b.push(Q::one());
            continue;
        }
        let mut s = Q::zero();
        let mut c = BigInt::one(); // C(m+1, j)
        for (j, bj) in b.iter().enumerate() {
            s += Q::from_integer(c.clone()) * bj;
            c = c * BigInt::from(m + 1 - j) / BigInt::from(j + 1);
        }
        b.push(-s / Q::from_integer(BigInt::from(m + 1)));
    }
    b
}

/// `sum_{i=0}^{n-1} i^k` in closed form.
pub fn power_sum_below(n: &BigInt, k: u32) -> BigInt {
    let k = k as usize;
    let b = bernoulli(k);
    let mut s = Q::zero();
    let mut c = BigInt::one(); // C(k+1, j)
    for (j, bj) in b.iter().enumerate() {
        s += Q::from_integer(c.clone() * num_traits::pow(n.clone(), k + 1 - j)) * bj;
        c = c * BigInt::from(k + 1 - j) / BigInt::from(j + 1);
    }
    let s = s / Q::from_integer(BigInt::from(k + 1));
    debug_assert!(s.is_integer());
    s.to_integer()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qr, to_f64};

    #[test]
    fn power_sums_match_brute_force() {
        for k in 0..9u32 {
            for n in 0..30i64 {
                let brute: BigInt = (0..n).map(|i| num_traits::pow(BigInt::from(i), k as usize)).sum();
                assert_eq!(power_sum_below(&BigInt::from(n), k), brute, "k={k} n={n}");
            }
        }
    }

    #[test]
    fn grid_moments_match_direct_sum() {
        for m in [1u64, 2, 5, 16] {
            let d = ProductDistribution::grid(1, m).unwrap();
            for j in 0..10u32 {
                let direct: Q = (0..=m).map(|t| crate::rational::pow(&Q::new((m + t).into(), m.into()), j)).sum::<Q>()
                    / Q::from_integer(BigInt::from(m + 1));
                assert_eq!(d.moment(j), direct);
            }
        }
    }

    #[test]
    fn reference_moments() {
        let c = ProductDistribution::new(1, Marginal::ContinuousUniform).unwrap();
        assert_eq!(c.moment(0), q(1));
        assert_eq!(c.moment(1), qr(3, 2));
        assert_eq!(c.moment(2), qr(7, 3));
        let g = ProductDistribution::grid(1, DEFAULT_GRID).unwrap();
        assert_eq!(g.moment(0), q(1));
        assert_eq!(g.moment(1), qr(3, 2));
        let gap = (to_f64(&g.moment(2)) - 7.0 / 3.0).abs();
        assert!(gap < 2.0 / DEFAULT_GRID as f64, "gap {gap}");
    }

    #[test]
    fn log_moments() {
        let c = ProductDistribution::new(1, Marginal::ContinuousUniform).unwrap();
        assert!((c.log_mean() - 0.386294).abs() < 1e-6);
        assert!((c.log_sq_mean() - 0.188317).abs() < 1e-6);
        assert!((c.log_variance() - 0.039094).abs() < 1e-6);
        let g = ProductDistribution::grid(1, DEFAULT_GRID).unwrap();
        assert!((g.log_mean() - c.log_mean()).abs() < 1e-6);
        assert!((g.log_variance() - c.log_variance()).abs() < 1e-6);
    }
}
