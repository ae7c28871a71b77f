//! Square unit cells with p4m plane symmetry, stored as binary material masks.
//!
//! A mask is an `m × m` row-major grid of pixels where `0` is alumina (ε = 8.9)
//! and `1` is air (ε = 1). Pixel `(i, j)` sits in row `i`, column `j`; the
//! 8-element point group of the square acts on these indices about the cell
//! center.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Material code for alumina.
pub const ALUMINA: u8 = 0;
/// Material code for air.
pub const AIR: u8 = 1;

/// Permittivity of alumina.
pub const EPS_ALUMINA: f64 = 8.9;
/// Permittivity of air.
pub const EPS_AIR: f64 = 1.0;

const MAX_GENERATION_ATTEMPTS: u32 = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CellError {
    #[error("resolution {0} must be a positive even number")]
    OddResolution(usize),
    #[error("feature count must be at least 1")]
    NoFeatures,
    #[error("no non-degenerate cell after {attempts} attempts (seed {seed})")]
    GenerationFailed { seed: u64, attempts: u32 },
    #[error("pixel ({i}, {j}) lies outside the fundamental wedge for m = {m}")]
    OutsideWedge { i: usize, j: usize, m: usize },
    #[error("wedge pixel ({i}, {j}) given more than once")]
    DuplicatePixel { i: usize, j: usize },
    #[error("wedge pixel ({i}, {j}) missing")]
    MissingPixel { i: usize, j: usize },
    #[error("pixel value {0} is not a material code (expected 0 or 1)")]
    InvalidValue(u8),
    #[error("mask has {got} entries, expected {expected}")]
    WrongSize { got: usize, expected: usize },
    #[error("downsampling factor {factor} does not divide resolution {m}")]
    BadFactor { m: usize, factor: usize },
    #[error("malformed mask text: {0}")]
    Parse(String),
}

/// The eight point-group operations of the square acting on pixel indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum P4mOp {
    Identity,
    Rot90,
    Rot180,
    Rot270,
    MirrorRows,
    MirrorCols,
    Transpose,
    AntiTranspose,
}

impl P4mOp {
    pub const ALL: [P4mOp; 8] = [
        P4mOp::Identity,
        P4mOp::Rot90,
        P4mOp::Rot180,
        P4mOp::Rot270,
        P4mOp::MirrorRows,
        P4mOp::MirrorCols,
        P4mOp::Transpose,
        P4mOp::AntiTranspose,
    ];

    /// Image of pixel `(i, j)` on an `m × m` grid.
    pub fn apply(self, i: usize, j: usize, m: usize) -> (usize, usize) {
        let r = m - 1;
        match self {
            P4mOp::Identity => (i, j),
            P4mOp::Rot90 => (j, r - i),
            P4mOp::Rot180 => (r - i, r - j),
            P4mOp::Rot270 => (r - j, i),
            P4mOp::MirrorRows => (r - i, j),
            P4mOp::MirrorCols => (i, r - j),
            P4mOp::Transpose => (j, i),
            P4mOp::AntiTranspose => (r - j, r - i),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitCellMask {
    m: usize,
    cells: Vec<u8>,
    pub cell_id: u64,
    pub seed: u64,
}

impl UnitCellMask {
    pub fn new(m: usize, cells: Vec<u8>, cell_id: u64, seed: u64) -> Result<Self, CellError> {
        if cells.len() != m * m {
            return Err(CellError::WrongSize {
                got: cells.len(),
                expected: m * m,
            });
        }
        if let Some(&v) = cells.iter().find(|&&v| v > 1) {
            return Err(CellError::InvalidValue(v));
        }
        Ok(Self {
            m,
            cells,
            cell_id,
            seed,
        })
    }

    pub fn uniform(m: usize, material: u8) -> Self {
        assert!(material <= 1, "material code must be 0 or 1");
        Self {
            m,
            cells: vec![material; m * m],
            cell_id: 0,
            seed: 0,
        }
    }

    pub fn with_id(mut self, cell_id: u64) -> Self {
        self.cell_id = cell_id;
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.cells[i * self.m + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: u8) {
        assert!(value <= 1);
        self.cells[i * self.m + j] = value;
    }

    pub fn permittivity(&self, i: usize, j: usize) -> f64 {
        if self.get(i, j) == ALUMINA {
            EPS_ALUMINA
        } else {
            EPS_AIR
        }
    }

    /// Both materials present.
    pub fn is_mixed(&self) -> bool {
        self.cells.contains(&ALUMINA) && self.cells.contains(&AIR)
    }

    pub fn air_fraction(&self) -> f64 {
        let air = self.cells.iter().filter(|&&v| v == AIR).count();
        air as f64 / self.cells.len() as f64
    }

    /// The mask transformed by `op`.
    pub fn transformed(&self, op: P4mOp) -> UnitCellMask {
        let m = self.m;
        let mut out = vec![0u8; m * m];
        for i in 0..m {
            for j in 0..m {
                let (ti, tj) = op.apply(i, j, m);
                out[ti * m + tj] = self.get(i, j);
            }
        }
        UnitCellMask {
            m,
            cells: out,
            cell_id: self.cell_id,
            seed: self.seed,
        }
    }

    pub fn is_invariant_under(&self, op: P4mOp) -> bool {
        let m = self.m;
        (0..m).all(|i| {
            (0..m).all(|j| {
                let (ti, tj) = op.apply(i, j, m);
                self.get(ti, tj) == self.get(i, j)
            })
        })
    }

    /// Rows of `0`/`1` characters, one line per row.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.m * (self.m + 1));
        for i in 0..self.m {
            for j in 0..self.m {
                s.push(if self.get(i, j) == AIR { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str, cell_id: u64, seed: u64) -> Result<Self, CellError> {
        let rows: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect();
        let m = rows.len();
        let mut cells = Vec::with_capacity(m * m);
        for row in &rows {
            if row.len() != m {
                return Err(CellError::Parse(format!(
                    "row of length {} in a {m}-row mask",
                    row.len()
                )));
            }
            for c in row.chars() {
                cells.push(match c {
                    '0' => ALUMINA,
                    '1' => AIR,
                    other => return Err(CellError::Parse(format!("unexpected character {other:?}"))),
                });
            }
        }
        UnitCellMask::new(m, cells, cell_id, seed)
    }
}

/// Constant `n / L` band-index channel fed alongside a mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandChannel {
    pub n: usize,
    pub bands: usize,
    pub m: usize,
}

impl BandChannel {
    pub fn new(n: usize, bands: usize, m: usize) -> Self {
        assert!(n >= 1 && n <= bands, "band index {n} outside 1..={bands}");
        Self { n, bands, m }
    }

    pub fn value(&self) -> f64 {
        self.n as f64 / self.bands as f64
    }

    pub fn to_grid(&self) -> Vec<f64> {
        vec![self.value(); self.m * self.m]
    }
}

/// True iff all 8 group images equal the mask.
pub fn validate_p4m(mask: &UnitCellMask) -> bool {
    P4mOp::ALL.iter().all(|&op| mask.is_invariant_under(op))
}

/// Representative of pixel `(i, j)` inside the wedge `0 <= j <= i < m/2`.
pub fn wedge_representative(i: usize, j: usize, m: usize) -> (usize, usize) {
    let fi = i.min(m - 1 - i);
    let fj = j.min(m - 1 - j);
    (fi.max(fj), fi.min(fj))
}

/// Number of pixels in the fundamental wedge for an even resolution `m`.
pub fn wedge_len(m: usize) -> usize {
    let half = m / 2;
    half * (half + 1) / 2
}

#[inline]
fn wedge_index(i: usize, j: usize) -> usize {
    i * (i + 1) / 2 + j
}

/// Expand values given on the wedge `{(i, j) : 0 <= j <= i < m/2}` into a full
/// p4m-invariant mask. Every wedge pixel must be given exactly once.
pub fn unfold_fundamental_domain(
    fd: &[((usize, usize), u8)],
    m: usize,
) -> Result<UnitCellMask, CellError> {
    if m == 0 || m % 2 != 0 {
        return Err(CellError::OddResolution(m));
    }
    let half = m / 2;
    let mut wedge: Vec<Option<u8>> = vec![None; wedge_len(m)];
    for &((i, j), v) in fd {
        if i >= half || j > i {
            return Err(CellError::OutsideWedge { i, j, m });
        }
        if v > 1 {
            return Err(CellError::InvalidValue(v));
        }
        let slot = &mut wedge[wedge_index(i, j)];
        if slot.is_some() {
            return Err(CellError::DuplicatePixel { i, j });
        }
        *slot = Some(v);
    }
    let mut values = Vec::with_capacity(wedge.len());
    for i in 0..half {
        for j in 0..=i {
            match wedge[wedge_index(i, j)] {
                Some(v) => values.push(v),
                None => return Err(CellError::MissingPixel { i, j }),
            }
        }
    }
    Ok(unfold_wedge_values(&values, m))
}

fn unfold_wedge_values(values: &[u8], m: usize) -> UnitCellMask {
    let mut cells = vec![0u8; m * m];
    for i in 0..m {
        for j in 0..m {
            let (wi, wj) = wedge_representative(i, j, m);
            cells[i * m + j] = values[wedge_index(wi, wj)];
        }
    }
    UnitCellMask {
        m,
        cells,
        cell_id: 0,
        seed: 0,
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th child of `seed`, used for retries and per-cell seeds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x5EED)))
}

/// Random rectangles and disks of air painted onto an alumina wedge, then
/// unfolded. Coordinates are continuous over the quadrant `[0, m/2)²`; a wedge
/// pixel becomes air when its center is covered.
fn draw_wedge(rng: &mut ChaCha8Rng, m: usize, feature_count: usize) -> Vec<u8> {
    let half = m / 2;
    let h = half as f64;
    let mut values = vec![ALUMINA; wedge_len(m)];
    for _ in 0..feature_count {
        let mut cx: f64 = rng.random_range(0.0..h);
        let mut cy: f64 = rng.random_range(0.0..h);
        if cy > cx {
            std::mem::swap(&mut cx, &mut cy);
        }
        let disk = rng.random_bool(0.5);
        let (rx, ry) = if disk {
            let r = rng.random_range(0.1..0.6) * h;
            (r, r)
        } else {
            (
                rng.random_range(0.1..0.5) * h,
                rng.random_range(0.1..0.5) * h,
            )
        };
        for i in 0..half {
            for j in 0..=i {
                let dx = i as f64 + 0.5 - cx;
                let dy = j as f64 + 0.5 - cy;
                let covered = if disk {
                    dx * dx + dy * dy <= rx * rx
                } else {
                    dx.abs() <= rx && dy.abs() <= ry
                };
                if covered {
                    values[wedge_index(i, j)] = AIR;
                }
            }
        }
    }
    values
}

/// Deterministic p4m cell from `(seed, m, feature_count)`. Degenerate draws are
/// retried with derived sub-seeds.
pub fn generate_p4m_cell(
    seed: u64,
    m: usize,
    feature_count: usize,
) -> Result<UnitCellMask, CellError> {
    if m == 0 || m % 2 != 0 {
        return Err(CellError::OddResolution(m));
    }
    if feature_count == 0 {
        return Err(CellError::NoFeatures);
    }
    for attempt in 0..MAX_GENERATION_ATTEMPTS {
        let sub = if attempt == 0 {
            seed
        } else {
            derive_seed(seed, u64::from(attempt))
        };
        let mut rng = ChaCha8Rng::seed_from_u64(sub);
        let values = draw_wedge(&mut rng, m, feature_count);
        let mut mask = unfold_wedge_values(&values, m);
        if mask.is_mixed() {
            mask.cell_id = seed;
            mask.seed = seed;
            return Ok(mask);
        }
    }
    Err(CellError::GenerationFailed {
        seed,
        attempts: MAX_GENERATION_ATTEMPTS,
    })
}

/// Majority vote over `factor × factor` blocks; ties go to alumina.
pub fn downsample_mask(mask: &UnitCellMask, factor: usize) -> Result<UnitCellMask, CellError> {
    let m = mask.m();
    if factor == 0 || m % factor != 0 {
        return Err(CellError::BadFactor { m, factor });
    }
    let mc = m / factor;
    let block = factor * factor;
    let mut cells = vec![0u8; mc * mc];
    for bi in 0..mc {
        for bj in 0..mc {
            let mut air = 0;
            for di in 0..factor {
                for dj in 0..factor {
                    air += usize::from(mask.get(bi * factor + di, bj * factor + dj));
                }
            }
            cells[bi * mc + bj] = if 2 * air > block { AIR } else { ALUMINA };
        }
    }
    Ok(UnitCellMask {
        m: mc,
        cells,
        cell_id: mask.cell_id,
        seed: mask.seed,
    })
}

const ARCHIVE_HEADER: &str = "# phc-mask-archive v1";

/// Plain-text archive of several masks, each preceded by a `cell` line.
pub fn masks_to_archive(masks: &[UnitCellMask]) -> String {
    let mut out = String::new();
    out.push_str(ARCHIVE_HEADER);
    out.push('\n');
    for mask in masks {
        let _ = writeln!(out, "cell {} seed {} m {}", mask.cell_id, mask.seed, mask.m());
        out.push_str(&mask.to_text());
    }
    out
}

pub fn masks_from_archive(text: &str) -> Result<Vec<UnitCellMask>, CellError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == ARCHIVE_HEADER => {}
        _ => return Err(CellError::Parse("missing archive header".into())),
    }
    let mut masks = Vec::new();
    while let Some(line) = lines.next() {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let field = |idx: usize, name: &str| -> Result<u64, CellError> {
            if parts.get(idx - 1) != Some(&name) {
                return Err(CellError::Parse(format!("expected `{name}` in {line:?}")));
            }
            parts
                .get(idx)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| CellError::Parse(format!("bad `{name}` value in {line:?}")))
        };
        if parts.len() != 6 {
            return Err(CellError::Parse(format!("bad cell line {line:?}")));
        }
        let id = field(1, "cell")?;
        let seed = field(3, "seed")?;
        let m = field(5, "m")? as usize;
        let mut body = String::new();
        for _ in 0..m {
            let row = lines
                .next()
                .ok_or_else(|| CellError::Parse(format!("cell {id} truncated")))?;
            body.push_str(row);
            body.push('\n');
        }
        let mask = UnitCellMask::from_text(&body, id, seed)?;
        if mask.m() != m {
            return Err(CellError::Parse(format!("cell {id} is not {m}x{m}")));
        }
        masks.push(mask);
    }
    Ok(masks)
}
