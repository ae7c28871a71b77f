//! P1 finite elements for the Bloch-shifted Helmholtz pencil on the pixel mesh.
//!
//! Each pixel `(i, j)` spans `[i h, (i+1) h] × [j h, (j+1) h]` and is split along
//! its lower-left to upper-right diagonal. Nodes on the right and top edges of
//! the cell are identified with the left and bottom ones, giving `m²` periodic
//! degrees of freedom numbered `i * m + j`.
//!
//! For trial `φ_j` and test `φ_i` the sesquilinear form splits as
//!
//! ```text
//! a_ij(k) = S_ij + i (k_x Dx_ij + k_y Dy_ij) + |k|² Mα_ij
//! ```
//!
//! with `S` the α-weighted stiffness, `Mα` the α-weighted mass and `Dx`, `Dy`
//! real antisymmetric drift terms. [`CellOperators`] keeps these four real
//! matrices so that a pencil at a new `k` costs one pass over the nonzeros.

use num_complex::Complex64;
use thiserror::Error;

use crate::cellgen::UnitCellMask;
use crate::eigensolve::Pencil;
use crate::lattice::{mode_coefficients, wrap_to_zone, LatticeSpec, Mode};
use crate::sparse::CsrMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("degenerate element (area {area:e})")]
    DegenerateElement { area: f64 },
    #[error("mesh resolution {0} is too small (need m >= 2)")]
    MeshTooSmall(usize),
    #[error("non-positive coefficient α = {alpha}, β = {beta}")]
    BadCoefficient { alpha: f64, beta: f64 },
    #[error("wave vector ({0}, {1}) is not finite")]
    NonFiniteK(f64, f64),
}

pub type Triangle = [[f64; 2]; 3];

/// Coefficient-free element integrals of the P1 basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementParts {
    pub area: f64,
    /// `∫ ∇φ_j · ∇φ_i`
    pub stiffness: [[f64; 3]; 3],
    /// `(area / 3) (∂x φ_i − ∂x φ_j)`
    pub drift_x: [[f64; 3]; 3],
    /// `(area / 3) (∂y φ_i − ∂y φ_j)`
    pub drift_y: [[f64; 3]; 3],
    /// `∫ φ_i φ_j`
    pub mass: [[f64; 3]; 3],
}

pub fn element_parts(tri: &Triangle) -> Result<ElementParts, FemError> {
    let [p0, p1, p2] = *tri;
    let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    let area = 0.5 * det.abs();
    let scale = (p1[0] - p0[0])
        .abs()
        .max((p1[1] - p0[1]).abs())
        .max((p2[0] - p0[0]).abs())
        .max((p2[1] - p0[1]).abs());
    if !(area > 1e-14 * scale * scale) {
        return Err(FemError::DegenerateElement { area });
    }
    // ∇φ_i is the inward normal of the opposite edge divided by 2·(signed area).
    let mut grad = [[0.0f64; 2]; 3];
    for (i, g) in grad.iter_mut().enumerate() {
        let a = tri[(i + 1) % 3];
        let b = tri[(i + 2) % 3];
        *g = [(a[1] - b[1]) / det, (b[0] - a[0]) / det];
    }
    let mut parts = ElementParts {
        area,
        stiffness: [[0.0; 3]; 3],
        drift_x: [[0.0; 3]; 3],
        drift_y: [[0.0; 3]; 3],
        mass: [[0.0; 3]; 3],
    };
    for i in 0..3 {
        for j in 0..3 {
            parts.stiffness[i][j] = area * (grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1]);
            parts.drift_x[i][j] = area / 3.0 * (grad[i][0] - grad[j][0]);
            parts.drift_y[i][j] = area / 3.0 * (grad[i][1] - grad[j][1]);
            parts.mass[i][j] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
        }
    }
    Ok(parts)
}

/// Exact element blocks `(A_e, B_e)` for constant `α`, `β` and wave vector `k`.
pub fn element_matrices(
    tri: &Triangle,
    alpha: f64,
    beta: f64,
    k: [f64; 2],
) -> Result<([[Complex64; 3]; 3], [[f64; 3]; 3]), FemError> {
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(FemError::BadCoefficient { alpha, beta });
    }
    let parts = element_parts(tri)?;
    let k2 = k[0] * k[0] + k[1] * k[1];
    let mut a = [[Complex64::new(0.0, 0.0); 3]; 3];
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            a[i][j] = Complex64::new(
                alpha * (parts.stiffness[i][j] + k2 * parts.mass[i][j]),
                alpha * (k[0] * parts.drift_x[i][j] + k[1] * parts.drift_y[i][j]),
            );
            b[i][j] = beta * parts.mass[i][j];
        }
    }
    Ok((a, b))
}

/// Periodic node numbering: node `(i, j)` of the `(m+1)²` grid maps to dof
/// `(i mod m) * m + (j mod m)`.
#[inline]
pub fn dof(i: usize, j: usize, m: usize) -> usize {
    (i % m) * m + (j % m)
}

/// The two triangles of pixel `(i, j)` as node-grid indices, counter-clockwise.
pub fn pixel_triangles(i: usize, j: usize) -> [[(usize, usize); 3]; 2] {
    let ll = (i, j);
    let lr = (i + 1, j);
    let ur = (i + 1, j + 1);
    let ul = (i, j + 1);
    [[ll, lr, ur], [ll, ur, ul]]
}

/// Position along one axis in the folded order `0, m-1, 1, m-2, …`; periodic
/// neighbours end up at most two places apart.
fn fold_position(i: usize, m: usize) -> usize {
    if 2 * i < m {
        2 * i
    } else {
        2 * (m - 1 - i) + 1
    }
}

/// Bandwidth-reducing permutation `dof -> position` for the periodic grid.
pub fn fold_ordering(m: usize) -> Vec<usize> {
    let mut perm = vec![0; m * m];
    for i in 0..m {
        for j in 0..m {
            perm[i * m + j] = fold_position(i, m) * m + fold_position(j, m);
        }
    }
    perm
}

/// k-independent operators for one cell and polarization.
#[derive(Debug, Clone)]
pub struct CellOperators {
    m: usize,
    mode: Mode,
    lattice: LatticeSpec,
    stiffness: CsrMatrix<f64>,
    drift_x: CsrMatrix<f64>,
    drift_y: CsrMatrix<f64>,
    mass_alpha: CsrMatrix<f64>,
    mass_beta: CsrMatrix<f64>,
    ordering: Vec<usize>,
}

impl CellOperators {
    pub fn new(mask: &UnitCellMask, mode: Mode) -> Result<Self, FemError> {
        Self::with_lattice(mask, mode, LatticeSpec::default())
    }

    pub fn with_lattice(
        mask: &UnitCellMask,
        mode: Mode,
        lattice: LatticeSpec,
    ) -> Result<Self, FemError> {
        let m = mask.m();
        if m < 2 {
            return Err(FemError::MeshTooSmall(m));
        }
        let coeffs = mode_coefficients(mask, mode);
        let h = lattice.a / m as f64;
        let n = m * m;
        let cap = 2 * m * m * 9;
        let mut s = Vec::with_capacity(cap);
        let mut dx = Vec::with_capacity(cap);
        let mut dy = Vec::with_capacity(cap);
        let mut ma = Vec::with_capacity(cap);
        let mut mb = Vec::with_capacity(cap);
        for i in 0..m {
            for j in 0..m {
                let alpha = coeffs.alpha[i * m + j];
                let beta = coeffs.beta[i * m + j];
                for tri in pixel_triangles(i, j) {
                    let coords: Triangle =
                        tri.map(|(ni, nj)| [ni as f64 * h, nj as f64 * h]);
                    let parts = element_parts(&coords)?;
                    let dofs = tri.map(|(ni, nj)| dof(ni, nj, m));
                    for a in 0..3 {
                        for b in 0..3 {
                            let (r, c) = (dofs[a], dofs[b]);
                            s.push((r, c, alpha * parts.stiffness[a][b]));
                            dx.push((r, c, alpha * parts.drift_x[a][b]));
                            dy.push((r, c, alpha * parts.drift_y[a][b]));
                            ma.push((r, c, alpha * parts.mass[a][b]));
                            mb.push((r, c, beta * parts.mass[a][b]));
                        }
                    }
                }
            }
        }
        let ops = Self {
            m,
            mode,
            lattice,
            stiffness: CsrMatrix::from_triplets(n, n, &s),
            drift_x: CsrMatrix::from_triplets(n, n, &dx),
            drift_y: CsrMatrix::from_triplets(n, n, &dy),
            mass_alpha: CsrMatrix::from_triplets(n, n, &ma),
            mass_beta: CsrMatrix::from_triplets(n, n, &mb),
            ordering: fold_ordering(m),
        };
        debug_assert!(ops.stiffness.same_pattern(&ops.drift_x));
        debug_assert!(ops.stiffness.same_pattern(&ops.mass_beta));
        Ok(ops)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn lattice(&self) -> LatticeSpec {
        self.lattice
    }

    pub fn mass(&self) -> &CsrMatrix<f64> {
        &self.mass_beta
    }

    pub fn pencil_at(&self, k: [f64; 2]) -> Result<BlochPencil, FemError> {
        if !(k[0].is_finite() && k[1].is_finite()) {
            return Err(FemError::NonFiniteK(k[0], k[1]));
        }
        // Discretization error grows with |k|h, so assemble at the zone representative.
        let kz = wrap_to_zone(k, self.lattice.a);
        let k2 = kz[0] * kz[0] + kz[1] * kz[1];
        let mut a: CsrMatrix<Complex64> = self.stiffness.zeros_like();
        let s = self.stiffness.values();
        let dx = self.drift_x.values();
        let dy = self.drift_y.values();
        let ma = self.mass_alpha.values();
        for (idx, v) in a.values_mut().iter_mut().enumerate() {
            *v = Complex64::new(s[idx] + k2 * ma[idx], kz[0] * dx[idx] + kz[1] * dy[idx]);
        }
        Ok(BlochPencil {
            m: self.m,
            mode: self.mode,
            k,
            pencil: Pencil {
                a,
                b: self.mass_beta.clone(),
                ordering: Some(self.ordering.clone()),
            },
        })
    }
}

/// Assembled Hermitian pair `(A(k), B)` on the periodic dof map.
#[derive(Debug, Clone)]
pub struct BlochPencil {
    pub m: usize,
    pub mode: Mode,
    /// Requested wave vector; the matrices use its zone representative.
    pub k: [f64; 2],
    pub pencil: Pencil,
}

impl BlochPencil {
    pub fn n_dof(&self) -> usize {
        self.m * self.m
    }

    pub fn a(&self) -> &CsrMatrix<Complex64> {
        &self.pencil.a
    }

    pub fn b(&self) -> &CsrMatrix<f64> {
        &self.pencil.b
    }

    pub fn dof(&self, i: usize, j: usize) -> usize {
        dof(i, j, self.m)
    }
}

pub fn assemble(mask: &UnitCellMask, mode: Mode, k: [f64; 2]) -> Result<BlochPencil, FemError> {
    CellOperators::new(mask, mode)?.pencil_at(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cellgen::{generate_p4m_cell, AIR, ALUMINA, EPS_ALUMINA};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // 5-point Gauss–Legendre on [0, 1].
    const GL_X: [f64; 5] = [
        0.046_910_077_030_668,
        0.230_765_344_947_158,
        0.5,
        0.769_234_655_052_842,
        0.953_089_922_969_332,
    ];
    const GL_W: [f64; 5] = [
        0.118_463_442_528_095,
        0.239_314_335_249_683,
        0.284_444_444_444_444,
        0.239_314_335_249_683,
        0.118_463_442_528_095,
    ];

    fn barycentric(tri: &Triangle, x: [f64; 2]) -> [f64; 3] {
        let [p0, p1, p2] = *tri;
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let l1 = ((x[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (x[1] - p0[1])) / det;
        let l2 = ((p1[0] - p0[0]) * (x[1] - p0[1]) - (x[0] - p0[0]) * (p1[1] - p0[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Duffy-mapped tensor Gauss rule with finite-difference gradients: an
    /// oracle that shares nothing with the closed-form element code.
    fn quadrature_element(tri: &Triangle, alpha: f64, beta: f64, k: [f64; 2]) -> ([[Complex64; 3]; 3], [[f64; 3]; 3]) {
        let [p0, p1, p2] = *tri;
        let jac = ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1])).abs();
        let fd = 1e-6 * jac.sqrt();
        let mut a = [[Complex64::new(0.0, 0.0); 3]; 3];
        let mut b = [[0.0; 3]; 3];
        for (u, wu) in GL_X.iter().zip(GL_W) {
            for (v, wv) in GL_X.iter().zip(GL_W) {
                // (u, v) in the square -> (s, t) = (u, v (1 - u)) in the reference triangle.
                let (s, t) = (*u, v * (1.0 - u));
                let w = wu * wv * (1.0 - u) * jac;
                let x = [
                    p0[0] + s * (p1[0] - p0[0]) + t * (p2[0] - p0[0]),
                    p0[1] + s * (p1[1] - p0[1]) + t * (p2[1] - p0[1]),
                ];
                let phi = barycentric(tri, x);
                let px = barycentric(tri, [x[0] + fd, x[1]]);
                let mx = barycentric(tri, [x[0] - fd, x[1]]);
                let py = barycentric(tri, [x[0], x[1] + fd]);
                let my = barycentric(tri, [x[0], x[1] - fd]);
                let grad: Vec<[f64; 2]> = (0..3)
                    .map(|n| [(px[n] - mx[n]) / (2.0 * fd), (py[n] - my[n]) / (2.0 * fd)])
                    .collect();
                let ik = Complex64::new(0.0, 1.0);
                for i in 0..3 {
                    for j in 0..3 {
                        // (∇φ_j + i k φ_j) · conj(∇φ_i + i k φ_i)
                        let uj = [grad[j][0] + ik * k[0] * phi[j], grad[j][1] + ik * k[1] * phi[j]];
                        let vi = [
                            (grad[i][0] + ik * k[0] * phi[i]).conj(),
                            (grad[i][1] + ik * k[1] * phi[i]).conj(),
                        ];
                        a[i][j] += w * alpha * (uj[0] * vi[0] + uj[1] * vi[1]);
                        b[i][j] += w * beta * phi[i] * phi[j];
                    }
                }
            }
        }
        (a, b)
    }

    #[test]
    fn reference_right_triangle_stiffness() {
        let h = 0.25;
        let tri = [[0.0, 0.0], [h, 0.0], [0.0, h]];
        let (a, _) = element_matrices(&tri, 1.0, 1.0, [0.0, 0.0]).unwrap();
        let (qa, _) = quadrature_element(&tri, 1.0, 1.0, [0.0, 0.0]);
        let expected = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((qa[i][j].re - expected[i][j]).abs() < 1e-8);
                assert!((a[i][j].re - expected[i][j]).abs() < 1e-14);
                assert_eq!(a[i][j].im, 0.0);
            }
        }
    }

    #[test]
    fn reference_right_triangle_mass() {
        let h = 0.3;
        let tri = [[0.0, 0.0], [h, 0.0], [0.0, h]];
        let (_, b) = element_matrices(&tri, 1.0, 1.0, [0.0, 0.0]).unwrap();
        let (_, qb) = quadrature_element(&tri, 1.0, 1.0, [0.0, 0.0]);
        for i in 0..3 {
            for j in 0..3 {
                let expected = h * h / 24.0 * if i == j { 2.0 } else { 1.0 };
                assert!((b[i][j] - expected).abs() < 1e-15);
                assert!((qb[i][j] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn closed_form_matches_quadrature_on_random_triangles() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let tri: Triangle = [
                [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
            ];
            let alpha = rng.random_range(0.1..2.0);
            let beta = rng.random_range(0.1..9.0);
            let k = [rng.random_range(-7.0..7.0), rng.random_range(-7.0..7.0)];
            let Ok((a, b)) = element_matrices(&tri, alpha, beta, k) else {
                continue;
            };
            let (qa, qb) = quadrature_element(&tri, alpha, beta, k);
            let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.norm()));
            for i in 0..3 {
                for j in 0..3 {
                    assert!((a[i][j] - qa[i][j]).norm() <= 1e-6 * scale.max(1.0));
                    assert!((b[i][j] - qb[i][j]).abs() <= 1e-10 * beta);
                    assert!((a[i][j] - a[j][i].conj()).norm() <= 1e-14 * scale.max(1.0));
                }
            }
        }
    }

    #[test]
    fn mass_block_formula() {
        let tri = [[0.1, 0.2], [1.3, 0.4], [0.5, 1.7]];
        let parts = element_parts(&tri).unwrap();
        let (_, b) = element_matrices(&tri, 1.0, 2.5, [1.0, -2.0]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let pattern = if i == j { 2.0 } else { 1.0 };
                assert!((b[i][j] - 2.5 * parts.area / 12.0 * pattern).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn degenerate_triangle_rejected() {
        let tri = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]];
        assert!(matches!(
            element_matrices(&tri, 1.0, 1.0, [0.0, 0.0]),
            Err(FemError::DegenerateElement { .. })
        ));
        let ok = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(matches!(
            element_matrices(&ok, -1.0, 1.0, [0.0, 0.0]),
            Err(FemError::BadCoefficient { .. })
        ));
    }

    /// Dense assembly straight from `element_matrices` with explicit index folding.
    fn dense_assembly(mask: &UnitCellMask, mode: Mode, k: [f64; 2]) -> (Vec<Complex64>, Vec<f64>) {
        let m = mask.m();
        let n = m * m;
        let h = 1.0 / m as f64;
        let mut a = vec![Complex64::new(0.0, 0.0); n * n];
        let mut b = vec![0.0; n * n];
        for i in 0..m {
            for j in 0..m {
                let (alpha, beta) = mode.coefficients(mask.permittivity(i, j));
                for tri in pixel_triangles(i, j) {
                    let coords = tri.map(|(x, y)| [x as f64 * h, y as f64 * h]);
                    let (ea, eb) = element_matrices(&coords, alpha, beta, k).unwrap();
                    let fold: Vec<usize> = tri.iter().map(|&(x, y)| (x % m) * m + (y % m)).collect();
                    for r in 0..3 {
                        for c in 0..3 {
                            a[fold[r] * n + fold[c]] += ea[r][c];
                            b[fold[r] * n + fold[c]] += eb[r][c];
                        }
                    }
                }
            }
        }
        (a, b)
    }

    #[test]
    fn assembly_matches_dense_oracle() {
        let mask = generate_p4m_cell(3, 4, 2).unwrap();
        for mode in [Mode::Te, Mode::Tm] {
            for k in [[0.0, 0.0], [1.3, -0.4], [std::f64::consts::PI, 2.0]] {
                let pencil = assemble(&mask, mode, k).unwrap();
                let (da, db) = dense_assembly(&mask, mode, k);
                let sa = pencil.a().to_dense();
                let sb = pencil.b().to_dense();
                for idx in 0..da.len() {
                    assert!((sa[idx] - da[idx]).norm() < 1e-13);
                    assert!((sb[idx] - db[idx]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn pencil_structure_on_random_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for draw in 0..20 {
            let mask = generate_p4m_cell(draw, 8, 3).unwrap();
            let mode = if draw % 2 == 0 { Mode::Te } else { Mode::Tm };
            let k = [rng.random_range(-7.0..7.0), rng.random_range(-7.0..7.0)];
            let p = assemble(&mask, mode, k).unwrap();
            assert!(p.a().hermitian_defect() <= 1e-12 * p.a().max_abs());
            assert_eq!(p.b().symmetric_defect(), 0.0);
            assert!(p.b().diagonal().iter().all(|&d| d > 0.0));
            for _ in 0..5 {
                let mut x: Vec<Complex64> = (0..p.n_dof())
                    .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect();
                let norm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                x.iter_mut().for_each(|v| *v /= norm);
                let mut ax = vec![Complex64::default(); p.n_dof()];
                p.a().matvec(&x, &mut ax);
                let xax: Complex64 = x.iter().zip(&ax).map(|(a, b)| a.conj() * b).sum();
                assert!(xax.re >= -1e-10);
                let mut bx = vec![Complex64::default(); p.n_dof()];
                p.b().matvec_complex(&x, &mut bx);
                let xbx: Complex64 = x.iter().zip(&bx).map(|(a, b)| a.conj() * b).sum();
                assert!(xbx.re > 0.0);
            }
        }
    }

    #[test]
    fn constants_span_kernel_at_gamma() {
        let mask = generate_p4m_cell(8, 8, 4).unwrap();
        for mode in [Mode::Te, Mode::Tm] {
            let p = assemble(&mask, mode, [0.0, 0.0]).unwrap();
            let ones = vec![Complex64::new(1.0, 0.0); p.n_dof()];
            let mut y = vec![Complex64::default(); p.n_dof()];
            p.a().matvec(&ones, &mut y);
            assert!(y.iter().all(|v| v.norm() < 1e-12));
        }
    }

    #[test]
    fn alumina_is_scaled_air_in_te() {
        let k = [0.7, 2.1];
        let air = assemble(&UnitCellMask::uniform(6, AIR), Mode::Te, k).unwrap();
        let alu = assemble(&UnitCellMask::uniform(6, ALUMINA), Mode::Te, k).unwrap();
        for (x, y) in air.a().values().iter().zip(alu.a().values()) {
            assert!((x / EPS_ALUMINA - y).norm() <= 1e-15 * x.norm().max(1.0));
        }
        assert_eq!(air.b().values(), alu.b().values());
    }

    #[test]
    fn negated_k_gives_conjugate_operator() {
        let mask = generate_p4m_cell(21, 8, 3).unwrap();
        let ops = CellOperators::new(&mask, Mode::Te).unwrap();
        let a = ops.pencil_at([1.1, -0.3]).unwrap();
        let b = ops.pencil_at([-1.1, 0.3]).unwrap();
        for (x, y) in a.a().values().iter().zip(b.a().values()) {
            assert_eq!(x.conj(), *y);
        }
    }

    #[test]
    fn fold_ordering_is_a_narrow_permutation() {
        for m in [2, 3, 4, 7, 16] {
            let perm = fold_ordering(m);
            let mut seen = perm.clone();
            seen.sort_unstable();
            assert_eq!(seen, (0..m * m).collect::<Vec<_>>());
            let mask = UnitCellMask::uniform(m, AIR);
            let p = assemble(&mask, Mode::Te, [0.3, 0.2]).unwrap();
            let bw = p
                .a()
                .triplets()
                .map(|(i, j, _)| perm[i].abs_diff(perm[j]))
                .max()
                .unwrap();
            assert!(bw <= 2 * m + 2, "bandwidth {bw} for m = {m}");
        }
    }

    #[test]
    fn rejects_non_finite_k() {
        let mask = UnitCellMask::uniform(4, AIR);
        assert!(matches!(
            assemble(&mask, Mode::Te, [f64::NAN, 0.0]),
            Err(FemError::NonFiniteK(..))
        ));
    }
}
