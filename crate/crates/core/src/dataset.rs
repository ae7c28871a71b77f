//! PCBD v1 band-surface datasets, split manifests and normalization ranges.
//!
//! Layout (little-endian): `"PCBD"`, u32 version, u32 m_cell, u32 bands,
//! u32 n_res, u32[n_res] ascending resolutions, u8 mode, 3 pad bytes,
//! u64 n_records; then per record u64 cell_id, m_cell² mask bytes and, for
//! each resolution and band, r² f32 values with the k_x index as the row;
//! finally a u32 CRC-32 of everything before it.

use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bandsweep::BandSurface;
use crate::cellgen::UnitCellMask;
use crate::lattice::Mode;

pub const MAGIC: &[u8; 4] = b"PCBD";
pub const VERSION: u32 = 1;
pub const MIN_SPLIT_CELLS: usize = 10;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("not a PCBD file (magic {0:?})")]
    BadMagic([u8; 4]),
    #[error("unsupported PCBD version {0}")]
    UnsupportedVersion(u32),
    #[error("file truncated: needed {needed} bytes at offset {offset}, {available} available")]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },
    #[error("{0} unexpected bytes after the last record")]
    TrailingBytes(usize),
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("corrupt record {record}: {reason}")]
    Corrupt { record: usize, reason: String },
    #[error("invalid metadata: {0}")]
    BadMeta(String),
    #[error("record {record} does not match the metadata: {reason}")]
    Inconsistent { record: usize, reason: String },
    #[error("split: {0}")]
    Split(String),
}

fn io_at(path: &Path) -> impl Fn(io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PcbdMeta {
    pub m_cell: usize,
    pub bands: usize,
    /// Ascending k-grid sides.
    pub resolutions: Vec<usize>,
    pub mode: Mode,
}

impl PcbdMeta {
    /// The FEM mesh is the pixel grid of the cell, so surfaces were computed
    /// on an `m_cell × m_cell` mesh.
    pub fn mesh_m(&self) -> usize {
        self.m_cell
    }

    fn validate(&self) -> Result<(), DatasetError> {
        if self.m_cell == 0 || self.bands == 0 || self.resolutions.is_empty() {
            return Err(DatasetError::BadMeta(format!("{self:?}")));
        }
        if self.resolutions.windows(2).any(|w| w[0] >= w[1]) || self.resolutions[0] == 0 {
            return Err(DatasetError::BadMeta(format!(
                "resolutions {:?} must be strictly ascending and positive",
                self.resolutions
            )));
        }
        let max = u32::MAX as usize;
        if self.m_cell > max || self.bands > max || self.resolutions.iter().any(|&r| r > max) {
            return Err(DatasetError::BadMeta("field exceeds u32".into()));
        }
        Ok(())
    }

    pub fn header_len(&self) -> usize {
        4 + 4 * 4 + 4 * self.resolutions.len() + 4 + 8
    }

    pub fn record_len(&self) -> usize {
        8 + self.m_cell * self.m_cell
            + self
                .resolutions
                .iter()
                .map(|r| self.bands * r * r * 4)
                .sum::<usize>()
    }

    fn encode_header(&self, n_records: u64) -> Vec<u8> {
        let mut h = Vec::with_capacity(self.header_len());
        h.extend_from_slice(MAGIC);
        h.extend_from_slice(&VERSION.to_le_bytes());
        h.extend_from_slice(&(self.m_cell as u32).to_le_bytes());
        h.extend_from_slice(&(self.bands as u32).to_le_bytes());
        h.extend_from_slice(&(self.resolutions.len() as u32).to_le_bytes());
        for &r in &self.resolutions {
            h.extend_from_slice(&(r as u32).to_le_bytes());
        }
        h.push(self.mode.code());
        h.extend_from_slice(&[0, 0, 0]);
        h.extend_from_slice(&n_records.to_le_bytes());
        h
    }
}

/// One cell with a band surface per resolution, ordered like the metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub cell_id: u64,
    pub mask: UnitCellMask,
    pub surfaces: Vec<BandSurface>,
}

impl DatasetRecord {
    pub fn surface(&self, m: usize) -> Option<&BandSurface> {
        self.surfaces.iter().find(|s| s.m == m)
    }

    fn check(&self, meta: &PcbdMeta, record: usize) -> Result<(), DatasetError> {
        let bad = |reason: String| DatasetError::Inconsistent { record, reason };
        if self.mask.m() != meta.m_cell {
            return Err(bad(format!("mask is {0}x{0}, expected {1}x{1}", self.mask.m(), meta.m_cell)));
        }
        if self.surfaces.len() != meta.resolutions.len() {
            return Err(bad(format!(
                "{} surfaces for {} resolutions",
                self.surfaces.len(),
                meta.resolutions.len()
            )));
        }
        for (s, &r) in self.surfaces.iter().zip(&meta.resolutions) {
            if s.m != r || s.bands != meta.bands || s.omega.len() != meta.bands * r * r {
                return Err(bad(format!(
                    "surface {}x{} with {} bands, expected {r}x{r} with {}",
                    s.m, s.m, s.bands, meta.bands
                )));
            }
            if s.mode != meta.mode || s.cell_id != self.cell_id {
                return Err(bad("surface mode or cell id differs from the record".into()));
            }
        }
        Ok(())
    }

    fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.cell_id.to_le_bytes());
        out.extend_from_slice(self.mask.cells());
        for s in &self.surfaces {
            for v in &s.omega {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
}

/// Streaming writer. The file is written under a temporary name and renamed
/// into place by [`PcbdWriter::finish`].
pub struct PcbdWriter {
    meta: PcbdMeta,
    path: PathBuf,
    tmp: PathBuf,
    out: BufWriter<File>,
    body_crc: crc32fast::Hasher,
    records: u64,
    buf: Vec<u8>,
}

impl PcbdWriter {
    pub fn create(path: impl AsRef<Path>, meta: PcbdMeta) -> Result<Self, DatasetError> {
        meta.validate()?;
        let path = path.as_ref().to_path_buf();
        let mut name = path.file_name().unwrap_or_default().to_os_string();
        name.push(".partial");
        let tmp = path.with_file_name(name);
        let file = File::create(&tmp).map_err(io_at(&tmp))?;
        let mut out = BufWriter::new(file);
        out.write_all(&meta.encode_header(0)).map_err(io_at(&tmp))?;
        Ok(Self {
            meta,
            path,
            tmp,
            out,
            body_crc: crc32fast::Hasher::new(),
            records: 0,
            buf: Vec::new(),
        })
    }

    pub fn meta(&self) -> &PcbdMeta {
        &self.meta
    }

    pub fn push(&mut self, record: &DatasetRecord) -> Result<(), DatasetError> {
        record.check(&self.meta, self.records as usize)?;
        self.buf.clear();
        record.encode(&mut self.buf);
        self.body_crc.update(&self.buf);
        self.out.write_all(&self.buf).map_err(io_at(&self.tmp))?;
        self.records += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<u64, DatasetError> {
        let header = self.meta.encode_header(self.records);
        let mut crc = crc32fast::Hasher::new();
        crc.update(&header);
        crc.combine(&self.body_crc);
        let tmp = self.tmp.clone();
        let res = (|| -> io::Result<()> {
            self.out.write_all(&crc.finalize().to_le_bytes())?;
            self.out.seek(SeekFrom::Start(0))?;
            self.out.write_all(&header)?;
            let file = self.out.into_inner().map_err(|e| e.into_error())?;
            file.sync_all()?;
            Ok(())
        })();
        res.map_err(io_at(&tmp))?;
        fs::rename(&tmp, &self.path).map_err(io_at(&self.path))?;
        Ok(self.records)
    }
}

pub fn encode_pcbd(meta: &PcbdMeta, records: &[DatasetRecord]) -> Result<Vec<u8>, DatasetError> {
    meta.validate()?;
    let mut out = meta.encode_header(records.len() as u64);
    out.reserve(records.len() * meta.record_len() + 4);
    for (i, r) in records.iter().enumerate() {
        r.check(meta, i)?;
        r.encode(&mut out);
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

pub fn write_pcbd(path: impl AsRef<Path>, meta: &PcbdMeta, records: &[DatasetRecord]) -> Result<(), DatasetError> {
    let mut w = PcbdWriter::create(path, meta.clone())?;
    for r in records {
        w.push(r)?;
    }
    w.finish()?;
    Ok(())
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DatasetError> {
        if self.data.len() - self.pos < n {
            return Err(DatasetError::Truncated {
                offset: self.pos,
                needed: n,
                available: self.data.len() - self.pos,
            });
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, DatasetError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, DatasetError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_pcbd(data: &[u8]) -> Result<(PcbdMeta, Vec<DatasetRecord>), DatasetError> {
    if data.len() >= 4 && &data[..4] != MAGIC {
        return Err(DatasetError::BadMagic(data[..4].try_into().unwrap()));
    }
    if data.len() < 4 {
        return Err(DatasetError::Truncated {
            offset: 0,
            needed: 4,
            available: data.len(),
        });
    }
    if data.len() < 8 {
        return Err(DatasetError::Truncated {
            offset: 4,
            needed: 4,
            available: data.len() - 4,
        });
    }
    let version = u32::from_le_bytes(data[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(DatasetError::UnsupportedVersion(version));
    }
    if data.len() < 4 + 8 {
        return Err(DatasetError::Truncated {
            offset: 8,
            needed: 4,
            available: data.len() - 8,
        });
    }
    // Checksum first, so a flipped bit anywhere reports as corruption rather
    // than as whatever the damaged field happens to decode to.
    let body = &data[..data.len() - 4];
    let stored = u32::from_le_bytes(data[data.len() - 4..].try_into().unwrap());
    let computed = crc32fast::hash(body);

    let mut cur = Cursor { data: body, pos: 8 };
    let header = (|| -> Result<(PcbdMeta, u64), DatasetError> {
        let m_cell = cur.u32()? as usize;
        let bands = cur.u32()? as usize;
        let n_res = cur.u32()? as usize;
        if n_res > (body.len() - cur.pos) / 4 {
            return Err(DatasetError::Truncated {
                offset: cur.pos,
                needed: n_res * 4,
                available: body.len() - cur.pos,
            });
        }
        let resolutions = (0..n_res)
            .map(|_| cur.u32().map(|v| v as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let tail = cur.take(4)?;
        let mode = Mode::from_code(tail[0])
            .ok_or_else(|| DatasetError::BadMeta(format!("mode code {}", tail[0])))?;
        let n_records = cur.u64()?;
        Ok((
            PcbdMeta {
                m_cell,
                bands,
                resolutions,
                mode,
            },
            n_records,
        ))
    })();
    if stored != computed {
        return Err(DatasetError::Checksum { stored, computed });
    }
    let (meta, n_records) = header?;
    meta.validate()?;

    let remaining = body.len() - cur.pos;
    let rec_len = meta.record_len();
    let expected = (n_records as u128) * rec_len as u128;
    if (remaining as u128) < expected {
        return Err(DatasetError::Truncated {
            offset: cur.pos,
            needed: expected.min(usize::MAX as u128) as usize,
            available: remaining,
        });
    }
    if remaining as u128 > expected {
        return Err(DatasetError::TrailingBytes(remaining - expected as usize));
    }

    let mut records = Vec::with_capacity(n_records as usize);
    for record in 0..n_records as usize {
        let cell_id = cur.u64()?;
        let cells = cur.take(meta.m_cell * meta.m_cell)?.to_vec();
        let mask = UnitCellMask::new(meta.m_cell, cells, cell_id, cell_id).map_err(|e| DatasetError::Corrupt {
            record,
            reason: e.to_string(),
        })?;
        let mut surfaces = Vec::with_capacity(meta.resolutions.len());
        for &r in &meta.resolutions {
            let raw = cur.take(meta.bands * r * r * 4)?;
            let omega = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            surfaces.push(BandSurface {
                cell_id,
                mode: meta.mode,
                bands: meta.bands,
                m: r,
                omega,
            });
        }
        records.push(DatasetRecord {
            cell_id,
            mask,
            surfaces,
        });
    }
    Ok((meta, records))
}

pub fn read_pcbd(path: impl AsRef<Path>) -> Result<(PcbdMeta, Vec<DatasetRecord>), DatasetError> {
    let path = path.as_ref();
    let mut data = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut data))
        .map_err(io_at(path))?;
    decode_pcbd(&data)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub omega_min: f64,
    pub omega_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub fractions: SplitFractions,
    pub train: Vec<u64>,
    pub val: Vec<u64>,
    pub test: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Normalization>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl SplitManifest {
    pub fn ids(&self, split: Split) -> &[u64] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        serde_json::from_str(text).map_err(|e| DatasetError::Split(e.to_string()))
    }
}

/// Shuffle `cell_ids` with a seeded generator and cut 80/10/10, rounding the
/// train and validation counts to the nearest cell.
pub fn make_split(cell_ids: &[u64], seed: u64) -> Result<SplitManifest, DatasetError> {
    let n = cell_ids.len();
    if n < MIN_SPLIT_CELLS {
        return Err(DatasetError::Split(format!(
            "{n} cells, at least {MIN_SPLIT_CELLS} required"
        )));
    }
    let mut sorted = cell_ids.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(DatasetError::Split(format!("duplicate cell id {}", w[0])));
    }
    let fractions = SplitFractions::default();
    let mut ids = cell_ids.to_vec();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (fractions.train * n as f64).round() as usize;
    let n_val = (fractions.val * n as f64).round() as usize;
    let test = ids.split_off(n_train + n_val);
    let val = ids.split_off(n_train);
    Ok(SplitManifest {
        seed,
        fractions,
        train: ids,
        val,
        test,
        normalization: None,
    })
}

/// Global min and max of every band value of the listed cells.
pub fn normalization_stats(records: &[DatasetRecord], ids: &[u64]) -> Result<Normalization, DatasetError> {
    if ids.is_empty() {
        return Err(DatasetError::Split("normalization over an empty split".into()));
    }
    let wanted: std::collections::HashSet<u64> = ids.iter().copied().collect();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut seen = 0usize;
    for r in records.iter().filter(|r| wanted.contains(&r.cell_id)) {
        seen += 1;
        for v in r.surfaces.iter().flat_map(|s| &s.omega) {
            lo = lo.min(*v as f64);
            hi = hi.max(*v as f64);
        }
    }
    if seen == 0 || !lo.is_finite() {
        return Err(DatasetError::Split("no band values for the requested cells".into()));
    }
    if lo == hi {
        log::warn!("degenerate normalization range: every value equals {lo}");
    }
    Ok(Normalization {
        omega_min: lo.max(0.0),
        omega_max: hi,
    })
}
