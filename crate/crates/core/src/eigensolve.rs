//! Lowest eigenpairs of a Hermitian pencil `A x = λ B x` with `B` positive
//! definite.
//!
//! The production path is shift-invert Lanczos on `(A − σB)⁻¹ B` in the
//! B-inner product, with full reorthogonalization, locking across explicit
//! restarts, and a Sylvester-inertia count after convergence so that no
//! eigenvalue below the reported ones is skipped. [`dense_reference`] solves the
//! same pencil densely and is the oracle the iterative path is checked against.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::banded::{BandedLdl, FactorError};
use crate::sparse::CsrMatrix;

/// Eigenvalues this close below zero are reported as exactly zero.
pub const ZERO_CLAMP: f64 = 1e-10;
pub const DEFAULT_SHIFT: f64 = -0.5;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DENSE_CAP: usize = 5000;
const STEPS_PER_BAND: usize = 50;
const MAX_RESTARTS: usize = 4;
const MAX_COUNT_REPAIRS: usize = 6;
const SOLVER_SEED: u64 = 0x0B10_C4E5;

type C = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("requested {bands} eigenpairs of a {n}-dimensional pencil")]
    TooManyBands { bands: usize, n: usize },
    #[error("tolerance {0} outside (0, 1e-3]")]
    BadTolerance(f64),
    #[error("B is not positive definite ({0})")]
    IndefiniteB(String),
    #[error("A − σB is not positive definite at σ = {shift}; A is not semidefinite or the shift is too high")]
    IndefiniteShift { shift: f64 },
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error("no convergence after {iterations} Lanczos steps; best residuals {residuals:?}")]
    NotConverged {
        residuals: Vec<f64>,
        iterations: usize,
    },
    #[error("dense reference limited to {cap} unknowns, pencil has {n}")]
    TooLarge { n: usize, cap: usize },
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

/// A Hermitian pencil in sparse form. `ordering` is an optional
/// bandwidth-reducing permutation (`ordering[dof] = position`).
#[derive(Debug, Clone)]
pub struct Pencil {
    pub a: CsrMatrix<C>,
    pub b: CsrMatrix<f64>,
    pub ordering: Option<Vec<usize>>,
}

impl Pencil {
    pub fn new(a: CsrMatrix<C>, b: CsrMatrix<f64>) -> Result<Self, EigenError> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || b.ncols() != n {
            return Err(EigenError::Shape(format!(
                "A is {}x{}, B is {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        Ok(Self {
            a,
            b,
            ordering: None,
        })
    }

    /// Pencil from dense row-major real matrices, mainly for tests.
    pub fn from_dense_real(n: usize, a: &[f64], b: &[f64]) -> Result<Self, EigenError> {
        if a.len() != n * n || b.len() != n * n {
            return Err(EigenError::Shape("dense input is not n×n".into()));
        }
        let mut ta = Vec::new();
        let mut tb = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if a[i * n + j] != 0.0 {
                    ta.push((i, j, C::new(a[i * n + j], 0.0)));
                }
                if b[i * n + j] != 0.0 {
                    tb.push((i, j, b[i * n + j]));
                }
            }
        }
        Pencil::new(
            CsrMatrix::from_triplets(n, n, &ta),
            CsrMatrix::from_triplets(n, n, &tb),
        )
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn ordering(&self) -> Option<&[usize]> {
        self.ordering.as_deref()
    }

    /// `‖A x − λ B x‖₂ / ‖B x‖₂`.
    pub fn residual(&self, lambda: f64, x: &[C]) -> f64 {
        let n = self.dim();
        let mut ax = vec![C::default(); n];
        let mut bx = vec![C::default(); n];
        self.a.matvec(x, &mut ax);
        self.b.matvec_complex(x, &mut bx);
        residual_from(lambda, &ax, &bx)
    }
}

fn residual_from(lambda: f64, ax: &[C], bx: &[C]) -> f64 {
    let num: f64 = ax
        .iter()
        .zip(bx)
        .map(|(a, b)| (a - b * lambda).norm_sqr())
        .sum();
    let den: f64 = bx.iter().map(|b| b.norm_sqr()).sum();
    (num / den).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub bands: usize,
    pub tol: f64,
    pub shift: f64,
    /// Confirm by an inertia count that no eigenvalue below the largest
    /// reported one was missed.
    pub verify_count: bool,
    pub seed: u64,
}

impl SolveOptions {
    pub fn new(bands: usize, tol: f64) -> Self {
        Self {
            bands,
            tol,
            shift: DEFAULT_SHIFT,
            verify_count: true,
            seed: SOLVER_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigResult {
    /// Ascending.
    pub lambdas: Vec<f64>,
    /// B-orthonormal eigenvectors, one per eigenvalue.
    pub vectors: Vec<Vec<C>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

impl EigResult {
    /// `max |Xᴴ B X − I|`.
    pub fn b_orthonormality_defect(&self, b: &CsrMatrix<f64>) -> f64 {
        let n = b.nrows();
        let bx: Vec<Vec<C>> = self
            .vectors
            .iter()
            .map(|x| {
                let mut y = vec![C::default(); n];
                b.matvec_complex(x, &mut y);
                y
            })
            .collect();
        let mut worst: f64 = 0.0;
        for (i, xi) in self.vectors.iter().enumerate() {
            for (j, bxj) in bx.iter().enumerate() {
                let g = dot(xi, bxj);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }
}

/// `xᴴ y`
#[inline]
fn dot(x: &[C], y: &[C]) -> C {
    let mut acc = C::new(0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        acc += a.conj() * b;
    }
    acc
}

#[inline]
fn axpy(alpha: C, x: &[C], y: &mut [C]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn clamp_zero(lambda: f64) -> f64 {
    if lambda.abs() <= ZERO_CLAMP {
        0.0
    } else {
        lambda
    }
}

/// Reusable factorization of `A − σB` applying `x ↦ (A − σB)⁻¹ B x`.
#[derive(Debug, Clone)]
pub struct ShiftInvert {
    factor: BandedLdl,
    b: CsrMatrix<f64>,
}

impl ShiftInvert {
    pub fn new(pencil: &Pencil, shift: f64) -> Result<Self, EigenError> {
        let factor = BandedLdl::factor(&pencil.a, &pencil.b, shift, pencil.ordering())?;
        Ok(Self {
            factor,
            b: pencil.b.clone(),
        })
    }

    pub fn shift(&self) -> f64 {
        self.factor.shift()
    }

    pub fn is_positive_definite(&self) -> bool {
        self.factor.is_positive_definite()
    }

    pub fn apply(&self, x: &[C]) -> Vec<C> {
        let n = self.factor.dim();
        let mut bx = vec![C::default(); n];
        self.b.matvec_complex(x, &mut bx);
        self.factor.solve(&bx)
    }

    /// `(A − σB)⁻¹ rhs` for a precomputed `rhs = B x`.
    fn solve_b_applied(&self, bx: &[C], out: &mut [C], work: &mut [C]) {
        self.factor.solve_into(bx, out, work);
    }
}

/// Solve `(A − σB) y = B x`.
pub fn shift_invert_apply(
    a: &CsrMatrix<C>,
    b: &CsrMatrix<f64>,
    shift: f64,
    x: &[C],
) -> Result<Vec<C>, EigenError> {
    let pencil = Pencil::new(a.clone(), b.clone())?;
    if x.len() != pencil.dim() {
        return Err(EigenError::Shape(format!(
            "vector of length {} for a {}-dimensional pencil",
            x.len(),
            pencil.dim()
        )));
    }
    Ok(ShiftInvert::new(&pencil, shift)?.apply(x))
}

/// Eigenvalues and last-row eigenvector components of a symmetric
/// tridiagonal matrix (implicit QL with Wilkinson shifts), in ascending order.
fn tridiagonal_eigen_last_row(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = alpha.len();
    let mut d = alpha.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&beta[..n.saturating_sub(1)]);
    let mut z = vec![0.0; n];
    if n > 0 {
        z[n - 1] = 1.0;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    (idx.iter().map(|&i| d[i]).collect(), idx.iter().map(|&i| z[i]).collect())
}

struct Locked {
    lambda: f64,
    x: Vec<C>,
    bx: Vec<C>,
    residual: f64,
}

struct RitzPair {
    lambda: f64,
    x: Vec<C>,
    bx: Vec<C>,
    residual: f64,
}

struct Lanczos<'a> {
    pencil: &'a Pencil,
    op: &'a ShiftInvert,
    tol: f64,
    rng: ChaCha8Rng,
    steps: usize,
}

impl<'a> Lanczos<'a> {
    fn random_vector(&mut self) -> Vec<C> {
        (0..self.pencil.dim())
            .map(|_| C::new(self.rng.random_range(-1.0..1.0), self.rng.random_range(-1.0..1.0)))
            .collect()
    }

    fn b_apply(&self, x: &[C]) -> Vec<C> {
        let mut y = vec![C::default(); x.len()];
        self.pencil.b.matvec_complex(x, &mut y);
        y
    }

    /// Classical Gram–Schmidt in the B-inner product against the locked
    /// vectors and the current basis, repeated once when the first pass
    /// cancels more than half the norm. Returns the summed basis coefficients,
    /// `B w` and `‖w‖²_B`.
    fn orthogonalize(
        &self,
        w: &mut [C],
        locked: &[Locked],
        basis: &[Vec<C>],
        bbasis: &[Vec<C>],
    ) -> (Vec<C>, Vec<C>, f64) {
        let mut coeffs = vec![C::default(); basis.len()];
        let mut bw = Vec::new();
        let mut norm2 = 0.0;
        for pass in 0..2 {
            let mut removed = 0.0;
            for l in locked {
                let c = dot(&l.bx, w);
                axpy(-c, &l.x, w);
                removed += c.norm_sqr();
            }
            for (k, (q, bq)) in basis.iter().zip(bbasis).enumerate() {
                let c = dot(bq, w);
                axpy(-c, q, w);
                coeffs[k] += c;
                removed += c.norm_sqr();
            }
            bw = self.b_apply(w);
            norm2 = dot(w, &bw).re;
            if pass == 0 && norm2 >= removed {
                break;
            }
        }
        (coeffs, bw, norm2)
    }

    /// One Lanczos run from `start`, stopping when the `want` lowest Ritz pairs
    /// meet the tolerance or the basis reaches `max_steps`.
    fn run(&mut self, start: Vec<C>, want: usize, max_steps: usize, locked: &[Locked]) -> Result<Vec<RitzPair>, EigenError> {
        let n = self.pencil.dim();
        let shift = self.op.shift();
        let mut basis: Vec<Vec<C>> = Vec::new();
        let mut bbasis: Vec<Vec<C>> = Vec::new();
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();

        let mut r = start;
        let (_, mut br, mut nrm2) = self.orthogonalize(&mut r, locked, &basis, &bbasis);
        if !(nrm2 > 1e-300) {
            r = self.random_vector();
            (_, br, nrm2) = self.orthogonalize(&mut r, locked, &basis, &bbasis);
            if !(nrm2 > 0.0) {
                return Err(EigenError::IndefiniteB("non-positive B-norm of a start vector".into()));
            }
        }
        let mut work = vec![C::default(); n];
        let mut trigger = 1.0;
        loop {
            let nrm = nrm2.sqrt();
            let inv = 1.0 / nrm;
            r.iter_mut().for_each(|v| *v *= inv);
            br.iter_mut().for_each(|v| *v *= inv);
            basis.push(std::mem::take(&mut r));
            bbasis.push(std::mem::take(&mut br));
            let j = basis.len() - 1;

            let mut w = vec![C::default(); n];
            self.op.solve_b_applied(&bbasis[j], &mut w, &mut work);
            let (coeffs, bw, wn2) = self.orthogonalize(&mut w, locked, &basis, &bbasis);
            alpha.push(coeffs[j].re);
            if wn2 < -1e-12 * alpha[j].abs().max(1e-300) {
                return Err(EigenError::IndefiniteB("negative B-norm in the Krylov recurrence".into()));
            }
            let mut b_next = wn2.max(0.0).sqrt();
            self.steps += 1;

            let full = basis.len() >= max_steps || basis.len() + locked.len() >= n;
            let breakdown = b_next <= 1e-12 * alpha.iter().fold(0.0f64, |m, a| m.max(a.abs()));
            if breakdown {
                b_next = 0.0;
            }
            let check = full || breakdown || (basis.len() > want && basis.len() % 2 == 0);
            if check {
                let (theta, last) = tridiagonal_eigen_last_row(&alpha, &beta);
                let k = basis.len();
                let top = want.min(k);
                // ratio ‖(A − σB) w‖ / ‖B w‖ maps T-residuals to pencil residuals
                let ratio = if b_next > 0.0 {
                    let mut aw = vec![C::default(); n];
                    self.pencil.a.matvec(&w, &mut aw);
                    let num: f64 = aw.iter().zip(&bw).map(|(a, b)| (a - b * shift).norm_sqr()).sum();
                    let den: f64 = bw.iter().map(|b| b.norm_sqr()).sum();
                    (num / den).sqrt()
                } else {
                    0.0
                };
                let estimates_ok = (0..top).all(|t| {
                    let idx = k - 1 - t;
                    let th = theta[idx];
                    th > 0.0 && (b_next * last[idx]).abs() / th * ratio <= trigger * self.tol
                });
                if (estimates_ok && top == want) || full {
                    let pairs = self.ritz_pairs(&alpha, &beta, &basis, top);
                    let converged = pairs.iter().all(|p| p.residual <= self.tol);
                    if (converged && top == want) || full {
                        return Ok(pairs);
                    }
                    trigger *= 0.1;
                }
                if breakdown {
                    // Invariant subspace: continue with a fresh direction.
                    let mut fresh = self.random_vector();
                    let (_, bf, fn2) = self.orthogonalize(&mut fresh, locked, &basis, &bbasis);
                    if !(fn2 > 1e-24) {
                        let pairs = self.ritz_pairs(&alpha, &beta, &basis, top);
                        return Ok(pairs);
                    }
                    beta.push(0.0);
                    r = fresh;
                    br = bf;
                    nrm2 = fn2;
                    continue;
                }
            }
            beta.push(b_next);
            r = w;
            br = bw;
            nrm2 = wn2;
        }
    }

    /// The `count` lowest Ritz pairs with their true pencil residuals.
    fn ritz_pairs(&self, alpha: &[f64], beta: &[f64], basis: &[Vec<C>], count: usize) -> Vec<RitzPair> {
        let k = alpha.len();
        let n = self.pencil.dim();
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut pairs = Vec::with_capacity(count);
        for &idx in order.iter().take(count) {
            let mut x = vec![C::default(); n];
            for (row, q) in basis.iter().enumerate() {
                axpy(C::new(eig.eigenvectors[(row, idx)], 0.0), q, &mut x);
            }
            let mut ax = vec![C::default(); n];
            self.pencil.a.matvec(&x, &mut ax);
            let bx = self.b_apply(&x);
            let xbx = dot(&x, &bx).re;
            let lambda = dot(&x, &ax).re / xbx;
            let residual = residual_from(lambda, &ax, &bx);
            let s = 1.0 / xbx.sqrt();
            x.iter_mut().for_each(|v| *v *= s);
            let bx: Vec<C> = bx.into_iter().map(|v| v * s).collect();
            pairs.push(RitzPair {
                lambda,
                x,
                bx,
                residual,
            });
        }
        pairs.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        pairs
    }
}

/// Lowest `bands` eigenpairs by shift-invert Lanczos with default options.
pub fn solve_lowest(
    pencil: &Pencil,
    bands: usize,
    tol: f64,
    warm_start: Option<&[Vec<C>]>,
) -> Result<EigResult, EigenError> {
    solve_lowest_with(pencil, &SolveOptions::new(bands, tol), warm_start)
}

pub fn solve_lowest_with(
    pencil: &Pencil,
    opts: &SolveOptions,
    warm_start: Option<&[Vec<C>]>,
) -> Result<EigResult, EigenError> {
    let n = pencil.dim();
    let bands = opts.bands;
    if bands == 0 || bands > n {
        return Err(EigenError::TooManyBands { bands, n });
    }
    if !(opts.tol > 0.0 && opts.tol <= 1e-3) {
        return Err(EigenError::BadTolerance(opts.tol));
    }
    if let Some(i) = (0..n).find(|&i| !(pencil.b.get(i, i) > 0.0)) {
        return Err(EigenError::IndefiniteB(format!(
            "diagonal entry {i} is {}",
            pencil.b.get(i, i)
        )));
    }
    let op = ShiftInvert::new(pencil, opts.shift)?;
    if !op.is_positive_definite() {
        return Err(EigenError::IndefiniteShift { shift: opts.shift });
    }
    let mut lz = Lanczos {
        pencil,
        op: &op,
        tol: opts.tol,
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
        steps: 0,
    };

    let mut start = match warm_start {
        Some(vs) if !vs.is_empty() && vs.iter().all(|v| v.len() == n) => {
            let mut s = vec![C::default(); n];
            for v in vs {
                axpy(C::new(1.0, 0.0), v, &mut s);
            }
            s
        }
        _ => lz.random_vector(),
    };

    let mut locked: Vec<Locked> = Vec::new();
    let mut best: Vec<f64> = Vec::new();
    for _ in 0..=MAX_RESTARTS {
        let want = bands - locked.len();
        let cap = (STEPS_PER_BAND * bands).min(n - locked.len());
        let pairs = lz.run(start, want, cap, &locked)?;
        best = pairs.iter().map(|p| p.residual).collect();
        let mut next = vec![C::default(); n];
        for p in pairs {
            if p.residual <= opts.tol {
                locked.push(Locked {
                    lambda: p.lambda,
                    x: p.x,
                    bx: p.bx,
                    residual: p.residual,
                });
            } else {
                axpy(C::new(1.0, 0.0), &p.x, &mut next);
            }
        }
        if locked.len() >= bands {
            break;
        }
        start = next;
    }
    if locked.len() < bands {
        return Err(EigenError::NotConverged {
            residuals: best,
            iterations: lz.steps,
        });
    }
    locked.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));

    if opts.verify_count && bands < n {
        let mut repairs = 0;
        let mut window = 10.0 * opts.tol;
        loop {
            let top = locked[bands - 1].lambda;
            let mu = top + window * top.abs().max(1.0);
            let below_found = locked.iter().filter(|l| l.lambda < mu).count();
            let count = match BandedLdl::factor(&pencil.a, &pencil.b, mu, pencil.ordering()) {
                Ok(f) => f.negative_count(),
                Err(FactorError::Singular { .. }) => {
                    window *= 10.0;
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            if count <= below_found || locked.len() >= n {
                break;
            }
            repairs += 1;
            if repairs > MAX_COUNT_REPAIRS {
                return Err(EigenError::NotConverged {
                    residuals: locked.iter().map(|l| l.residual).collect(),
                    iterations: lz.steps,
                });
            }
            let missing = (count - below_found).min(n - locked.len());
            let cap = (STEPS_PER_BAND * bands).min(n - locked.len());
            let fresh = lz.random_vector();
            let pairs = lz.run(fresh, missing, cap, &locked)?;
            let mut gained = false;
            for p in pairs {
                if p.residual <= opts.tol {
                    gained = true;
                    locked.push(Locked {
                        lambda: p.lambda,
                        x: p.x,
                        bx: p.bx,
                        residual: p.residual,
                    });
                }
            }
            if !gained {
                return Err(EigenError::NotConverged {
                    residuals: locked.iter().map(|l| l.residual).collect(),
                    iterations: lz.steps,
                });
            }
            locked.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        }
    }

    locked.truncate(bands);
    Ok(EigResult {
        lambdas: locked.iter().map(|l| clamp_zero(l.lambda)).collect(),
        residuals: locked.iter().map(|l| l.residual).collect(),
        vectors: locked.into_iter().map(|l| l.x).collect(),
        iterations: lz.steps,
    })
}

/// Lowest `bands` eigenpairs from a dense Cholesky-reduced Hermitian
/// eigendecomposition.
pub fn dense_reference(pencil: &Pencil, bands: usize) -> Result<EigResult, EigenError> {
    let n = pencil.dim();
    if n > DENSE_CAP {
        return Err(EigenError::TooLarge { n, cap: DENSE_CAP });
    }
    if bands == 0 || bands > n {
        return Err(EigenError::TooManyBands { bands, n });
    }
    if let Some(i) = (0..n).find(|&i| !(pencil.b.get(i, i) > 0.0)) {
        return Err(EigenError::IndefiniteB(format!("diagonal entry {i} is {}", pencil.b.get(i, i))));
    }
    let da = pencil.a.to_dense();
    let db = pencil.b.to_dense();
    let a = DMatrix::<C>::from_row_slice(n, n, &da);
    let b = DMatrix::<C>::from_row_slice(n, n, &db.iter().map(|&v| C::new(v, 0.0)).collect::<Vec<_>>());
    let chol = b
        .cholesky()
        .ok_or_else(|| EigenError::IndefiniteB("Cholesky factorization failed".into()))?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(&a)
        .ok_or_else(|| EigenError::IndefiniteB("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&y.adjoint())
        .ok_or_else(|| EigenError::IndefiniteB("singular Cholesky factor".into()))?;
    let c = (&c + c.adjoint()) * C::new(0.5, 0.0);
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let lh = l.adjoint();
    let mut lambdas = Vec::with_capacity(bands);
    let mut vectors = Vec::with_capacity(bands);
    let mut residuals = Vec::with_capacity(bands);
    for &idx in order.iter().take(bands) {
        let yv = eig.eigenvectors.column(idx).into_owned();
        let xv = lh
            .solve_upper_triangular(&yv)
            .ok_or_else(|| EigenError::IndefiniteB("singular Cholesky factor".into()))?;
        let x: Vec<C> = xv.iter().copied().collect();
        let lambda = eig.eigenvalues[idx];
        residuals.push(pencil.residual(lambda, &x));
        lambdas.push(clamp_zero(lambda));
        vectors.push(x);
    }
    Ok(EigResult {
        lambdas,
        vectors,
        residuals,
        iterations: 0,
    })
}
