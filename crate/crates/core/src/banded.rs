//! Banded LU factorization with partial pivoting for complex matrices.
//!
//! Row interchanges can widen the upper band from `ku` to `kl + ku`, so each
//! row reserves that many superdiagonals, as in LAPACK's `gbtrf`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    /// Row `i` holds columns `i - kl ..= i + kl + ku`.
    rows: Vec<Complex64>,
    /// Multipliers of column `k` for rows `k + 1 ..= k + kl`.
    lower: Vec<Complex64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    /// Factors `A + shift I`.
    pub fn factor(a: &CsrMatrix, shift: Complex64) -> Result<BandedLu> {
        let n = a.dim();
        let (kl, ku) = a.bandwidths();
        let width = 2 * kl + ku + 1;
        let mut lu = BandedLu {
            n,
            kl,
            ku,
            width,
            rows: vec![Complex64::new(0.0, 0.0); n * width],
            lower: vec![Complex64::new(0.0, 0.0); n * kl],
            pivots: vec![0; n],
        };
        for i in 0..n {
            for (c, v) in a.row(i) {
                *lu.at(i, c) += v;
            }
            *lu.at(i, i) += shift;
        }
        lu.eliminate()?;
        Ok(lu)
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    fn at(&mut self, i: usize, j: usize) -> &mut Complex64 {
        let s = self.slot(i, j);
        &mut self.rows[s]
    }

    fn get(&self, i: usize, j: usize) -> Complex64 {
        self.rows[self.slot(i, j)]
    }

    fn eliminate(&mut self) -> Result<()> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).norm();
            for i in k + 1..=last_row {
                let v = self.get(i, k).norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular);
            }
            self.pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (s, t) = (self.slot(k, j), self.slot(p, j));
                    self.rows.swap(s, t);
                }
            }
            let pivot = self.get(k, k);
            for i in k + 1..=last_row {
                let l = self.get(i, k) / pivot;
                self.lower[k * kl + (i - k - 1)] = l;
                *self.at(i, k) = Complex64::new(0.0, 0.0);
                if l != Complex64::new(0.0, 0.0) {
                    for j in k + 1..=last_col {
                        let u = self.get(k, j);
                        *self.at(i, j) -= l * u;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `(A + shift I) x = b` in place.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            b.swap(k, self.pivots[k]);
            let bk = b[k];
            for i in k + 1..=(k + kl).min(n - 1) {
                b[i] -= self.lower[k * kl + (i - k - 1)] * bk;
            }
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..=(i + kl + ku).min(n - 1) {
                acc -= self.get(i, j) * b[j];
            }
            b[i] = acc / self.get(i, i);
        }
    }
}
