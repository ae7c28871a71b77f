//! Band surfaces `ω_n(k) = √λ_n(k)` over torus k-grids, and batch sweeps of
//! cell collections into dataset records.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cellgen::{P4mOp, UnitCellMask};
use crate::dataset::DatasetRecord;
use crate::eigensolve::{solve_lowest_with, EigenError, SolveOptions, DEFAULT_TOL};
use crate::fem::{CellOperators, FemError};
use crate::lattice::{wrap_to_zone, KGrid, LatticeSpec, Mode};

pub const DEFAULT_BANDS: usize = 10;
/// Grid points solved back to back with warm starts; fixed so that results do
/// not depend on the worker count.
const CHUNK: usize = 32;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("eigensolve failed at grid point (p={p}, q={q}) of the {m}x{m} grid: {source}")]
    Solve {
        p: usize,
        q: usize,
        m: usize,
        #[source]
        source: EigenError,
    },
    #[error("invalid k-grid resolution {0}")]
    BadResolution(usize),
    #[error("no resolutions requested")]
    NoResolutions,
    #[error("worker count must be at least 1")]
    NoWorkers,
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub bands: usize,
    pub tol: f64,
    pub workers: usize,
    /// Reuse eigenvalues across k-points related by the k-transpose when the
    /// cell is transpose invariant (an exact symmetry of the mesh).
    pub use_symmetry: bool,
    pub warm_start: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            bands: DEFAULT_BANDS,
            tol: DEFAULT_TOL,
            workers: 1,
            use_symmetry: true,
            warm_start: false,
        }
    }
}

/// `omega[n·m² + p·m + q] = ω_{n+1}(k_pq)`, stored in single precision (the
/// dataset precision).
#[derive(Debug, Clone, PartialEq)]
pub struct BandSurface {
    pub cell_id: u64,
    pub mode: Mode,
    pub bands: usize,
    pub m: usize,
    pub omega: Vec<f32>,
}

impl BandSurface {
    pub fn zeros(cell_id: u64, mode: Mode, bands: usize, m: usize) -> Self {
        Self {
            cell_id,
            mode,
            bands,
            m,
            omega: vec![0.0; bands * m * m],
        }
    }

    #[inline]
    pub fn index(&self, n: usize, p: usize, q: usize) -> usize {
        n * self.m * self.m + p * self.m + q
    }

    pub fn get(&self, n: usize, p: usize, q: usize) -> f32 {
        self.omega[self.index(n, p, q)]
    }

    pub fn band(&self, n: usize) -> &[f32] {
        let sz = self.m * self.m;
        &self.omega[n * sz..(n + 1) * sz]
    }

    /// Non-negativity and pointwise band ordering.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.omega.len() != self.bands * self.m * self.m {
            return Err(format!(
                "expected {} values, found {}",
                self.bands * self.m * self.m,
                self.omega.len()
            ));
        }
        for p in 0..self.m {
            for q in 0..self.m {
                for n in 0..self.bands {
                    let w = self.get(n, p, q);
                    if !(w >= 0.0) {
                        return Err(format!("band {} at ({p}, {q}) is {w}", n + 1));
                    }
                    if n > 0 && w < self.get(n - 1, p, q) {
                        return Err(format!("bands {} and {} cross at ({p}, {q})", n, n + 1));
                    }
                }
            }
        }
        Ok(())
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Reduced fraction `(p/d, q/d)` of the reciprocal period, so that the same
/// wave vector on different grids shares one key and one bitwise k value.
type KKey = (usize, usize, usize);

fn reduced_key(p: usize, q: usize, m: usize) -> KKey {
    let g = gcd(gcd(p, q), m);
    (p / g, q / g, m / g)
}

/// Smallest key in the orbit of `(p, q)` under the enabled maps. Negation is
/// always exact since `A(−k)` is the complex conjugate of `A(k)`.
fn canonical_key(p: usize, q: usize, m: usize, negate: bool, transpose: bool) -> KKey {
    let key = reduced_key(p, q, m);
    let mut best = key;
    let mut consider = |k: KKey| best = best.min(k);
    let neg = reduced_key((m - p) % m, (m - q) % m, m);
    if transpose {
        consider((key.1, key.0, key.2));
    }
    if negate {
        consider(neg);
        if transpose {
            consider((neg.1, neg.0, neg.2));
        }
    }
    best
}

/// Zone representative of the key, computed from the signed fractions so that
/// negated keys give bitwise negated wave vectors.
fn key_to_k(key: KKey, lattice: LatticeSpec) -> [f64; 2] {
    let (p, q, m) = key;
    let signed = |i: usize| if 2 * i > m { i as f64 - m as f64 } else { i as f64 };
    let scale = 2.0 * std::f64::consts::PI / lattice.a;
    wrap_to_zone([scale * signed(p) / m as f64, scale * signed(q) / m as f64], lattice.a)
}

fn to_omega(lambda: f64) -> f32 {
    lambda.max(0.0).sqrt() as f32
}

struct KWork {
    key: KKey,
    /// First grid location asking for this key, for error reports.
    origin: (usize, usize, usize),
}

/// Solve every distinct wave vector of the requested grids for one cell.
fn solve_keys(
    ops: &CellOperators,
    work: &[KWork],
    opts: &SweepOptions,
) -> Result<Vec<Vec<f64>>, SweepError> {
    let solve_opts = SolveOptions::new(opts.bands, opts.tol);
    let lattice = ops.lattice();
    let chunks: Vec<Result<Vec<Vec<f64>>, SweepError>> = work
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut out = Vec::with_capacity(chunk.len());
            let mut warm: Option<Vec<Vec<Complex64>>> = None;
            for item in chunk {
                let pencil = ops.pencil_at(key_to_k(item.key, lattice))?;
                let start = if opts.warm_start { warm.as_deref() } else { None };
                let res = solve_lowest_with(&pencil.pencil, &solve_opts, start).map_err(|source| {
                    let (m, p, q) = item.origin;
                    SweepError::Solve { p, q, m, source }
                })?;
                out.push(res.lambdas);
                if opts.warm_start {
                    warm = Some(res.vectors);
                }
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::with_capacity(work.len());
    for c in chunks {
        all.extend(c?);
    }
    Ok(all)
}

/// Band surfaces of one cell at each requested grid resolution. Wave vectors
/// shared between grids are solved once. Runs on the current rayon pool.
pub fn cell_surfaces(
    mask: &UnitCellMask,
    mode: Mode,
    resolutions: &[usize],
    opts: &SweepOptions,
) -> Result<Vec<BandSurface>, SweepError> {
    if resolutions.is_empty() {
        return Err(SweepError::NoResolutions);
    }
    if let Some(&m) = resolutions.iter().find(|&&m| m < 2) {
        return Err(SweepError::BadResolution(m));
    }
    let ops = CellOperators::new(mask, mode)?;
    let transpose = opts.use_symmetry && mask.is_invariant_under(P4mOp::Transpose);
    let negate = opts.use_symmetry;

    let mut index: BTreeMap<KKey, usize> = BTreeMap::new();
    let mut work = Vec::new();
    for &m in resolutions {
        for p in 0..m {
            for q in 0..m {
                let key = canonical_key(p, q, m, negate, transpose);
                index.entry(key).or_insert_with(|| {
                    work.push(KWork {
                        key,
                        origin: (m, p, q),
                    });
                    work.len() - 1
                });
            }
        }
    }
    let lambdas = solve_keys(&ops, &work, opts)?;

    let mut surfaces = Vec::with_capacity(resolutions.len());
    for &m in resolutions {
        let mut s = BandSurface::zeros(mask.cell_id, mode, opts.bands, m);
        for p in 0..m {
            for q in 0..m {
                let vals = &lambdas[index[&canonical_key(p, q, m, negate, transpose)]];
                for (n, &l) in vals.iter().enumerate() {
                    let at = s.index(n, p, q);
                    s.omega[at] = to_omega(l);
                }
            }
        }
        surfaces.push(s);
    }
    Ok(surfaces)
}

/// Band surface of one cell over `grid`, each grid point solved directly.
pub fn band_surfaces(
    mask: &UnitCellMask,
    mode: Mode,
    grid: &KGrid,
    bands: usize,
    tol: f64,
) -> Result<BandSurface, SweepError> {
    let ops = CellOperators::with_lattice(mask, mode, grid.lattice())?;
    let solve_opts = SolveOptions::new(bands, tol);
    let m = grid.m();
    let mut s = BandSurface::zeros(mask.cell_id, mode, bands, m);
    for p in 0..m {
        for q in 0..m {
            let pencil = ops.pencil_at(key_to_k(reduced_key(p, q, m), grid.lattice()))?;
            let res = solve_lowest_with(&pencil.pencil, &solve_opts, None)
                .map_err(|source| SweepError::Solve { p, q, m, source })?;
            for (n, &l) in res.lambdas.iter().enumerate() {
                let at = s.index(n, p, q);
                s.omega[at] = to_omega(l);
            }
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailure {
    pub index: usize,
    pub cell_id: u64,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SweepSummary {
    pub records: usize,
    pub failures: Vec<CellFailure>,
}

#[derive(Serialize)]
struct ProgressLine {
    index: usize,
    cell_id: u64,
    ok: bool,
    elapsed_s: f64,
}

/// Line-delimited JSON sinks for progress and failures.
#[derive(Default)]
pub struct Manifests<'a> {
    pub progress: Option<&'a mut dyn Write>,
    pub failures: Option<&'a mut dyn Write>,
}

fn write_json_line<T: Serialize>(out: &mut Option<&mut dyn Write>, value: &T) -> std::io::Result<()> {
    if let Some(w) = out.as_mut() {
        serde_json::to_writer(&mut **w, value)?;
        w.write_all(b"\n")?;
        w.flush()?;
    }
    Ok(())
}

/// Sweep `cells` in order, handing each finished record to `sink`. A cell
/// that fails is logged to the failure manifest and skipped.
pub fn sweep<F>(
    cells: &[UnitCellMask],
    mode: Mode,
    resolutions: &[usize],
    opts: &SweepOptions,
    mut manifests: Manifests<'_>,
    mut sink: F,
) -> Result<SweepSummary, SweepError>
where
    F: FnMut(DatasetRecord) -> std::io::Result<()>,
{
    if opts.workers == 0 {
        return Err(SweepError::NoWorkers);
    }
    if resolutions.is_empty() {
        return Err(SweepError::NoResolutions);
    }
    let mut sorted = resolutions.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    let io_err = |e: std::io::Error| SweepError::Pool(format!("manifest or sink write failed: {e}"));

    let mut summary = SweepSummary::default();
    let start = Instant::now();
    for (index, mask) in cells.iter().enumerate() {
        let result = pool.install(|| cell_surfaces(mask, mode, &sorted, opts));
        let ok = result.is_ok();
        match result {
            Ok(surfaces) => {
                sink(DatasetRecord {
                    cell_id: mask.cell_id,
                    mask: mask.clone(),
                    surfaces,
                })
                .map_err(io_err)?;
                summary.records += 1;
            }
            Err(e) => {
                log::warn!("cell {} failed: {e}", mask.cell_id);
                let failure = CellFailure {
                    index,
                    cell_id: mask.cell_id,
                    error: e.to_string(),
                };
                write_json_line(&mut manifests.failures, &failure).map_err(io_err)?;
                summary.failures.push(failure);
            }
        }
        write_json_line(
            &mut manifests.progress,
            &ProgressLine {
                index,
                cell_id: mask.cell_id,
                ok,
                elapsed_s: start.elapsed().as_secs_f64(),
            },
        )
        .map_err(io_err)?;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cellgen::{generate_p4m_cell, AIR, ALUMINA, EPS_ALUMINA};
    use crate::lattice::build_kgrid;

    #[test]
    fn keys_merge_across_grids() {
        assert_eq!(reduced_key(4, 8, 16), (1, 2, 4));
        assert_eq!(reduced_key(16, 32, 64), (1, 2, 4));
        assert_eq!(reduced_key(0, 0, 16), (0, 0, 1));
        assert_eq!(canonical_key(3, 1, 8, false, true), (1, 3, 8));
        assert_eq!(canonical_key(3, 1, 8, false, false), (3, 1, 8));
        assert_eq!(canonical_key(7, 6, 8, true, false), (1, 2, 8));
        assert_eq!(canonical_key(7, 5, 8, true, true), (1, 3, 8));
        let k1 = key_to_k(reduced_key(8, 0, 16), LatticeSpec::default());
        let k2 = key_to_k(reduced_key(32, 0, 64), LatticeSpec::default());
        assert_eq!(k1, k2);
    }

    #[test]
    fn empty_lattice_x_point() {
        let mask = UnitCellMask::uniform(8, AIR);
        let s = band_surfaces(&mask, Mode::Te, &build_kgrid(4), 2, 1e-9).unwrap();
        let w = s.get(0, 2, 0) as f64;
        assert!((w - std::f64::consts::PI).abs() / std::f64::consts::PI < 0.02, "{w}");
        assert_eq!(s.get(0, 0, 0), 0.0);
        s.check_invariants().unwrap();
    }

    #[test]
    fn alumina_scaling() {
        let air = band_surfaces(&UnitCellMask::uniform(4, AIR), Mode::Te, &build_kgrid(4), 3, 1e-10).unwrap();
        let alu = band_surfaces(&UnitCellMask::uniform(4, ALUMINA), Mode::Te, &build_kgrid(4), 3, 1e-10).unwrap();
        let s = EPS_ALUMINA.sqrt() as f32;
        for (a, b) in air.omega.iter().zip(&alu.omega) {
            assert!((a / s - b).abs() <= 1e-6 * a.max(1e-3));
        }
    }

    #[test]
    fn symmetric_reuse_matches_direct_solves() {
        let mask = generate_p4m_cell(21, 8, 3).unwrap();
        let direct = band_surfaces(&mask, Mode::Tm, &build_kgrid(8), 4, 1e-9).unwrap();
        let opts = SweepOptions {
            bands: 4,
            tol: 1e-9,
            ..SweepOptions::default()
        };
        let reused = cell_surfaces(&mask, Mode::Tm, &[4, 8], &opts).unwrap();
        assert_eq!(reused[0].m, 4);
        for (a, b) in reused[1].omega.iter().zip(&direct.omega) {
            assert!((a - b).abs() <= 1e-6 * b.max(1e-3));
        }
        for n in 0..4 {
            for p in 0..4 {
                for q in 0..4 {
                    assert_eq!(reused[0].get(n, p, q), reused[1].get(n, 2 * p, 2 * q));
                }
            }
        }
    }

    #[test]
    fn warm_start_stays_within_tolerance() {
        let mask = generate_p4m_cell(5, 8, 3).unwrap();
        let cold = cell_surfaces(&mask, Mode::Te, &[8], &SweepOptions { bands: 4, ..Default::default() }).unwrap();
        let warm = cell_surfaces(
            &mask,
            Mode::Te,
            &[8],
            &SweepOptions {
                bands: 4,
                warm_start: true,
                ..Default::default()
            },
        )
        .unwrap();
        for (a, b) in cold[0].omega.iter().zip(&warm[0].omega) {
            assert!((a - b).abs() <= 1e-6 * a.max(1e-3));
        }
    }

    #[test]
    fn sweep_orders_output_and_logs() {
        let cells: Vec<_> = (0..3).map(|s| generate_p4m_cell(s, 4, 2).unwrap()).collect();
        let opts = SweepOptions {
            bands: 3,
            workers: 2,
            ..Default::default()
        };
        let mut progress = Vec::new();
        let mut ids = Vec::new();
        let summary = sweep(
            &cells,
            Mode::Te,
            &[4],
            &opts,
            Manifests {
                progress: Some(&mut progress),
                failures: None,
            },
            |r| {
                ids.push(r.cell_id);
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(summary.records, 3);
        assert_eq!(ids, cells.iter().map(|c| c.cell_id).collect::<Vec<_>>());
        assert_eq!(String::from_utf8(progress).unwrap().lines().count(), 3);
    }

    #[test]
    fn empty_sweep_succeeds() {
        let summary = sweep(&[], Mode::Te, &[16], &SweepOptions::default(), Manifests::default(), |_| Ok(())).unwrap();
        assert_eq!(summary.records, 0);
    }

    #[test]
    fn solver_errors_carry_grid_point() {
        let mask = generate_p4m_cell(5, 4, 2).unwrap();
        let opts = SweepOptions {
            bands: 17,
            ..Default::default()
        };
        match cell_surfaces(&mask, Mode::Te, &[2], &opts) {
            Err(SweepError::Solve { p: 0, q: 0, m: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
