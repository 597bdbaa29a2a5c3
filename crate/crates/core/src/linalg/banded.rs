//! Banded LU with partial pivoting (the LAPACK `gbtrf` scheme).
//!
//! The structured quad mesh numbers nodes column by column, so every
//! global matrix has bandwidth proportional to the short mesh dimension.
//! One factorization serves all time steps of a run and also answers
//! transpose solves for the adjoint sweep.

use super::{CsrMatrix, Scalar};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandedLu<T = f64> {
    n: usize,
    kl: usize,
    ku: usize,
    /// Row-major band storage: entry `(i, j)` lives at `i * width + (j + kl - i)`
    /// for `i - kl <= j <= i + kl + ku`.
    data: Vec<T>,
    pivots: Vec<usize>,
}

impl<T: Scalar> BandedLu<T> {
    pub fn factor(a: &CsrMatrix<T>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Dimension {
                what: "banded LU requires a square matrix",
                expected: a.nrows(),
                got: a.ncols(),
            });
        }
        let n = a.nrows();
        let (kl, ku) = a.bandwidths();
        let width = 2 * kl + ku + 1;
        let mut data = vec![T::zero(); n * width];
        for (i, j, v) in a.triplets() {
            data[i * width + (j + kl - i)] = v;
        }
        let mut lu = Self {
            n,
            kl,
            ku,
            data,
            pivots: vec![0; n],
        };
        lu.eliminate()?;
        Ok(lu)
    }

    #[inline]
    fn width(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width() + (j + self.kl - i)
    }

    /// Offset such that `row_base(i) + j == idx(i, j)`.
    #[inline]
    fn row_base(&self, i: usize) -> usize {
        i * self.width() + self.kl - i
    }

    fn eliminate(&mut self) -> Result<()> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].modulus();
            for i in k + 1..=last_row {
                let m = self.data[self.idx(i, k)].modulus();
                if m > best {
                    best = m;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(Error::SingularMatrix { column: k });
            }
            self.pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                if self.data[ik] == T::zero() {
                    continue;
                }
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                let row_k = self.row_base(k);
                let row_i = self.row_base(i);
                for j in k + 1..=last_col {
                    let ukj = self.data[row_k + j];
                    self.data[row_i + j] -= l * ukj;
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.n);
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk == T::zero() {
                continue;
            }
            for i in k + 1..=(k + kl).min(n - 1) {
                b[i] -= self.data[self.idx(i, k)] * bk;
            }
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            let base = self.row_base(i);
            for j in i + 1..=(i + kl + ku).min(n - 1) {
                acc -= self.data[base + j] * b[j];
            }
            b[i] = acc / self.data[base + i];
        }
    }

    /// Solves `Aᵀ x = b` in place (plain transpose, no conjugation).
    pub fn solve_transpose_in_place(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.n);
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        // Uᵀ y = b
        for j in 0..n {
            let mut acc = b[j];
            for i in j.saturating_sub(kl + ku)..j {
                acc -= self.data[self.idx(i, j)] * b[i];
            }
            b[j] = acc / self.data[self.idx(j, j)];
        }
        // then the elementary lower factors and row swaps, in reverse
        for k in (0..n).rev() {
            let mut acc = b[k];
            for i in k + 1..=(k + kl).min(n - 1) {
                acc -= self.data[self.idx(i, k)] * b[i];
            }
            b[k] = acc;
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_transpose(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_transpose_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::TripletBuilder;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn random_banded(n: usize, kl: usize, ku: usize, seed: u64) -> CsrMatrix {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                // weak diagonal so that pivoting actually happens
                let v: f64 = rng.random_range(-1.0..1.0);
                b.push(i, j, if i == j { 0.1 * v } else { v });
            }
        }
        b.build().unwrap()
    }

    fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
        let ax = a.mul_vec(x);
        ax.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn solves_random_banded_systems_with_pivoting() {
        for (seed, (kl, ku)) in [(1, (2, 3)), (2, (5, 1)), (3, (0, 4)), (4, (7, 7))] {
            let n = 60;
            let a = random_banded(n, kl, ku, seed);
            let lu = BandedLu::factor(&a).unwrap();
            let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let x = lu.solve(&b);
            let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            assert!(residual(&a, &x, &b) < 1e-12 * scale, "kl={kl} ku={ku}");
            let xt = lu.solve_transpose(&b);
            let scale = xt.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            assert!(residual(&a.transpose(), &xt, &b) < 1e-12 * scale);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(
            BandedLu::factor(&a),
            Err(Error::SingularMatrix { column: 1 })
        ));
    }

    #[test]
    fn complex_solve() {
        let a = CsrMatrix::from_dense(&[
            vec![Complex64::new(1.0, 1.0), Complex64::new(2.0, 0.0)],
            vec![Complex64::new(0.0, -1.0), Complex64::new(3.0, 0.5)],
        ]);
        let lu = BandedLu::factor(&a).unwrap();
        let b = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)];
        let x = lu.solve(&b);
        let ax = a.mul_vec(&x);
        for (p, q) in ax.iter().zip(&b) {
            assert!((p - q).norm() < 1e-14);
        }
    }
}
