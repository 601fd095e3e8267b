//! Exact Gaussian elimination over the rationals.

use num_traits::{One, Zero};

use crate::rational::Q;

/// Row-major dense matrix.
pub type Matrix = Vec<Vec<Q>>;

/// Incremental echelon basis of row vectors, used for rank and span tests.
#[derive(Debug, Clone, Default)]
pub struct EchelonBasis {
    rows: Vec<(usize, Vec<Q>)>,
}

impl EchelonBasis {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, v: &[Q]) -> Vec<Q> {
        let mut v = v.to_vec();
        for (p, row) in &self.rows {
            if !v[*p].is_zero() {
                let f = v[*p].clone();
                for (x, r) in v.iter_mut().zip(row) {
                    if !r.is_zero() {
                        *x -= &f * r;
                    }
                }
            }
        }
        v
    }

    pub fn contains(&self, v: &[Q]) -> bool {
        self.reduce(v).iter().all(Zero::is_zero)
    }

    /// Adds `v` if it is independent of the basis. Returns whether it was added.
    pub fn insert(&mut self, v: &[Q]) -> bool {
        let mut r = self.reduce(v);
        let Some(p) = r.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = r[p].recip();
        for x in r.iter_mut() {
            *x *= &inv;
        }
        for (_, row) in self.rows.iter_mut() {
            if !row[p].is_zero() {
                let f = row[p].clone();
                for (x, y) in row.iter_mut().zip(&r) {
                    *x -= &f * y;
                }
            }
        }
        self.rows.push((p, r));
        true
    }
}

pub fn rank(rows: &[Vec<Q>]) -> usize {
    let mut b = EchelonBasis::new();
    rows.iter().filter(|r| b.insert(r)).count()
}

/// Greedy lowest-index choice of rows of `m` (N×k) spanning its row space.
pub fn independent_rows(m: &[Vec<Q>]) -> Vec<usize> {
    let mut b = EchelonBasis::new();
    (0..m.len()).filter(|&i| b.insert(&m[i])).collect()
}

/// Solves the square system `a x = b`; `None` if `a` is singular.
pub fn solve(a: &[Vec<Q>], b: &[Q]) -> Option<Vec<Q>> {
    let n = a.len();
    let mut aug: Matrix = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    eliminate(&mut aug, n)?;
    Some(aug.into_iter().map(|mut r| r.pop().unwrap()).collect())
}

pub fn inverse(a: &[Vec<Q>]) -> Option<Matrix> {
    let n = a.len();
    let mut aug: Matrix = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            r
        })
        .collect();
    eliminate(&mut aug, n)?;
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Gauss-Jordan on the first `n` columns of an augmented matrix, with the
/// lowest-index nonzero pivot in each column.
fn eliminate(aug: &mut Matrix, n: usize) -> Option<()> {
    for c in 0..n {
        let p = (c..n).find(|&r| !aug[r][c].is_zero())?;
        aug.swap(c, p);
        let inv = aug[c][c].recip();
        for x in aug[c].iter_mut() {
            *x *= &inv;
        }
        let pivot = aug[c].clone();
        for (r, row) in aug.iter_mut().enumerate() {
            if r != c && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, y) in row.iter_mut().zip(&pivot) {
                    if !y.is_zero() {
                        *x -= &f * y;
                    }
                }
            }
        }
    }
    Some(())
}

pub fn mat_vec(a: &[Vec<Q>], x: &[Q]) -> Vec<Q> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qr};

    fn m(rows: &[&[i64]]) -> Matrix {
        rows.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect()
    }

    #[test]
    fn lowest_index_pivoting() {
        // columns (1,1,0) and (0,1,1), stored as rows of the N x k matrix
        let f = m(&[&[1, 0], &[1, 1], &[0, 1]]);
        assert_eq!(independent_rows(&f), vec![0, 1]);
        let e3 = m(&[&[0], &[0], &[0], &[1]]);
        assert_eq!(independent_rows(&e3), vec![3]);
        let id = m(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]);
        assert_eq!(independent_rows(&id), vec![0, 1, 2]);
    }

    #[test]
    fn solve_and_inverse() {
        let a = m(&[&[2, 1], &[1, 3]]);
        let x = solve(&a, &[q(3), q(5)]).unwrap();
        assert_eq!(x, vec![qr(4, 5), qr(7, 5)]);
        let inv = inverse(&a).unwrap();
        assert_eq!(mat_vec(&inv, &[q(3), q(5)]), x);
        assert!(solve(&m(&[&[1, 2], &[2, 4]]), &[q(1), q(2)]).is_none());
    }

    #[test]
    fn span_membership() {
        let mut b = EchelonBasis::new();
        assert!(b.insert(&[q(1), q(1), q(0)]));
        assert!(b.insert(&[q(0), q(1), q(1)]));
        assert!(b.contains(&[q(1), q(2), q(1)]));
        assert!(!b.contains(&[q(1), q(0), q(0)]));
        assert!(!b.insert(&[q(2), q(3), q(1)]));
        assert_eq!(b.rank(), 2);
        assert_eq!(rank(&m(&[&[1, 2], &[2, 4], &[0, 1]])), 2);
    }
}
