//! Banded `L D Lᴴ` factorization of shifted Hermitian pencils `A − σB`.
//!
//! No pivoting: the pivots of `D` are real and their signs give the inertia of
//! `A − σB` (the number of eigenvalues of the pencil below `σ`).

use num_complex::Complex64;
use thiserror::Error;

use crate::sparse::CsrMatrix;

const PIVOT_FLOOR: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FactorError {
    #[error("near-singular pivot {pivot:e} at row {row} (shift {shift}); adjust the shift")]
    Singular { row: usize, pivot: f64, shift: f64 },
    #[error("matrix dimensions differ ({a} vs {b})")]
    Shape { a: usize, b: usize },
    #[error("ordering has length {got}, expected {expected}")]
    Ordering { got: usize, expected: usize },
}

#[derive(Debug, Clone)]
pub struct BandedLdl {
    n: usize,
    bw: usize,
    /// `perm[old] = new`.
    perm: Vec<usize>,
    /// Row `i` holds `L[i][i-bw..i]` at `i * bw ..`, left-padded for `i < bw`.
    lower: Vec<Complex64>,
    diag: Vec<f64>,
    shift: f64,
}

impl BandedLdl {
    /// Factor `A − shift·B` in the order given by `perm` (identity if `None`).
    pub fn factor(
        a: &CsrMatrix<Complex64>,
        b: &CsrMatrix<f64>,
        shift: f64,
        perm: Option<&[usize]>,
    ) -> Result<Self, FactorError> {
        let n = a.nrows();
        if b.nrows() != n || a.ncols() != n || b.ncols() != n {
            return Err(FactorError::Shape { a: n, b: b.nrows() });
        }
        let perm: Vec<usize> = match perm {
            Some(p) if p.len() != n => {
                return Err(FactorError::Ordering {
                    got: p.len(),
                    expected: n,
                })
            }
            Some(p) => p.to_vec(),
            None => (0..n).collect(),
        };
        let mut bw = 0;
        for (i, j, _) in a.triplets() {
            bw = bw.max(perm[i].abs_diff(perm[j]));
        }
        for (i, j, _) in b.triplets() {
            bw = bw.max(perm[i].abs_diff(perm[j]));
        }
        let mut lower = vec![Complex64::new(0.0, 0.0); n * bw];
        let mut diag = vec![0.0; n];
        let mut scatter = |i: usize, j: usize, v: Complex64| {
            let (pi, pj) = (perm[i], perm[j]);
            if pj < pi {
                lower[pi * bw + (pj + bw - pi)] += v;
            } else if pi == pj {
                diag[pi] += v.re;
            }
        };
        for (i, j, &v) in a.triplets() {
            scatter(i, j, v);
        }
        for (i, j, &v) in b.triplets() {
            scatter(i, j, Complex64::new(-shift * v, 0.0));
        }
        let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.abs())).max(f64::MIN_POSITIVE);

        // Row-oriented elimination: for j < i, L_ij d_j = M_ij − Σ_k L_ik d_k conj(L_jk).
        // The products u_k = L_ik d_k are kept in the row itself until the row is done.
        let mut u = vec![Complex64::new(0.0, 0.0); bw];
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let row = i * bw;
            for j in lo..i {
                let tj = j + bw - i;
                let jrow = j * bw;
                let jlo = lo.max(j.saturating_sub(bw));
                let mut s = lower[row + tj];
                // k in jlo..j: row i offset k + bw - i, row j offset k + bw - j.
                let ri = &u[(jlo + bw - i)..tj];
                let rj = &lower[(jrow + jlo + bw - j)..(jrow + bw)];
                for (x, y) in ri.iter().zip(rj) {
                    s -= x * y.conj();
                }
                u[tj] = s;
                lower[row + tj] = s / diag[j];
            }
            let mut d = diag[i];
            for t in (lo + bw - i)..bw {
                d -= (u[t] * lower[row + t].conj()).re;
            }
            if !(d.abs() > PIVOT_FLOOR * scale) {
                return Err(FactorError::Singular {
                    row: i,
                    pivot: d,
                    shift,
                });
            }
            diag[i] = d;
        }
        Ok(Self {
            n,
            bw,
            perm,
            lower,
            diag,
            shift,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Number of negative pivots, i.e. eigenvalues of the pencil below the shift.
    pub fn negative_count(&self) -> usize {
        self.diag.iter().filter(|&&d| d < 0.0).count()
    }

    pub fn is_positive_definite(&self) -> bool {
        self.negative_count() == 0
    }

    /// Solve `(A − σB) x = rhs`; `work` must have length `n`.
    pub fn solve_into(&self, rhs: &[Complex64], x: &mut [Complex64], work: &mut [Complex64]) {
        let (n, bw) = (self.n, self.bw);
        for (old, &new) in self.perm.iter().enumerate() {
            work[new] = rhs[old];
        }
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let row = &self.lower[i * bw + (lo + bw - i)..(i + 1) * bw];
            let mut s = work[i];
            for (l, z) in row.iter().zip(&work[lo..i]) {
                s -= l * z;
            }
            work[i] = s;
        }
        for (w, d) in work.iter_mut().zip(&self.diag) {
            *w /= *d;
        }
        for i in (0..n).rev() {
            let lo = i.saturating_sub(bw);
            let xi = work[i];
            let row = &self.lower[i * bw + (lo + bw - i)..(i + 1) * bw];
            for (l, z) in row.iter().zip(&mut work[lo..i]) {
                *z -= l.conj() * xi;
            }
        }
        for (old, &new) in self.perm.iter().enumerate() {
            x[old] = work[new];
        }
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let mut x = vec![Complex64::new(0.0, 0.0); self.n];
        let mut work = vec![Complex64::new(0.0, 0.0); self.n];
        self.solve_into(rhs, &mut x, &mut work);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_banded_hermitian(n: usize, bw: usize, diag_boost: f64, seed: u64) -> CsrMatrix<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, Complex64::new(diag_boost + rng.random_range(0.0..1.0), 0.0)));
            for j in (i + 1)..(i + 1 + bw).min(n) {
                let v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                t.push((i, j, v));
                t.push((j, i, v.conj()));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    fn identity(n: usize) -> CsrMatrix<f64> {
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn solve_residual_small() {
        let n = 60;
        let a = random_banded_hermitian(n, 4, 12.0, 1);
        let b = identity(n);
        let f = BandedLdl::factor(&a, &b, -0.5, None).unwrap();
        assert!(f.is_positive_definite());
        let rhs: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let x = f.solve(&rhs);
        let mut ax = vec![Complex64::default(); n];
        a.matvec(&x, &mut ax);
        let res: f64 = ax
            .iter()
            .zip(&x)
            .zip(&rhs)
            .map(|((ax, x), r)| (ax + 0.5 * x - r).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let rn = rhs.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!(res / rn < 1e-12);
    }

    #[test]
    fn permuted_solve_matches_identity_order() {
        let n = 30;
        let a = random_banded_hermitian(n, 3, 8.0, 2);
        let b = identity(n);
        let perm: Vec<usize> = (0..n).map(|i| (i * 7) % n).collect();
        let f1 = BandedLdl::factor(&a, &b, -1.0, None).unwrap();
        let f2 = BandedLdl::factor(&a, &b, -1.0, Some(&perm)).unwrap();
        let rhs: Vec<Complex64> = (0..n).map(|i| Complex64::new(1.0, i as f64 * 0.1)).collect();
        for (x, y) in f1.solve(&rhs).iter().zip(f2.solve(&rhs)) {
            assert!((x - y).norm() < 1e-11);
        }
    }

    #[test]
    fn inertia_counts_eigenvalues_below_shift() {
        let n = 10;
        let t: Vec<_> = (0..n).map(|i| (i, i, Complex64::new(i as f64, 0.0))).collect();
        let a = CsrMatrix::from_triplets(n, n, &t);
        let b = identity(n);
        for (shift, below) in [(-0.5, 0), (0.5, 1), (3.5, 4), (9.5, 10)] {
            let f = BandedLdl::factor(&a, &b, shift, None).unwrap();
            assert_eq!(f.negative_count(), below);
        }
        assert!(matches!(
            BandedLdl::factor(&a, &b, 3.0, None),
            Err(FactorError::Singular { .. })
        ));
    }
}
