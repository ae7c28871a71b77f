use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use phc_core::dataset::{make_split, normalization_stats, read_pcbd, write_pcbd, DatasetRecord, PcbdMeta};
use phc_core::BandSurface;
use serde::Serialize;

use crate::config::{sidecar, write_snapshot, write_text};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Mask to band surface at the mask resolution.
    F1,
    /// Coarse to fine band surface (fine side = 4 x coarse side).
    F2,
}

#[derive(Debug, Args, Serialize)]
pub struct MakeDataset {
    /// PCBD files from solve-bands; surfaces are merged by cell id.
    #[arg(long = "bands-files", num_args = 1.., required = true)]
    pub bands_files: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub task: Task,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

struct Merged {
    meta_base: PcbdMeta,
    order: Vec<u64>,
    cells: BTreeMap<u64, DatasetRecord>,
}

fn merge(files: &[PathBuf]) -> CliResult<Merged> {
    let mut merged: Option<Merged> = None;
    for path in files {
        let (meta, records) = read_pcbd(path)?;
        let m = merged.get_or_insert_with(|| Merged {
            meta_base: meta.clone(),
            order: Vec::new(),
            cells: BTreeMap::new(),
        });
        if (meta.m_cell, meta.bands, meta.mode) != (m.meta_base.m_cell, m.meta_base.bands, m.meta_base.mode) {
            return Err(CliError::config(format!(
                "{} has cell size, band count or mode different from {}",
                path.display(),
                files[0].display()
            )));
        }
        for rec in records {
            match m.cells.get_mut(&rec.cell_id) {
                None => {
                    m.order.push(rec.cell_id);
                    m.cells.insert(rec.cell_id, rec);
                }
                Some(existing) => {
                    if existing.mask.cells() != rec.mask.cells() {
                        return Err(CliError::config(format!(
                            "cell {} has different masks in different inputs",
                            rec.cell_id
                        )));
                    }
                    for s in rec.surfaces {
                        match existing.surface(s.m) {
                            Some(prev) if prev != &s => {
                                return Err(CliError::config(format!(
                                    "cell {} has conflicting {}x{} surfaces",
                                    rec.cell_id, s.m, s.m
                                )))
                            }
                            Some(_) => {}
                            None => existing.surfaces.push(s),
                        }
                    }
                }
            }
        }
    }
    merged.ok_or_else(|| CliError::config("no input files"))
}

fn select(record: &DatasetRecord, resolutions: &[usize]) -> Option<Vec<BandSurface>> {
    resolutions.iter().map(|&r| record.surface(r).cloned()).collect()
}

impl MakeDataset {
    pub fn run(&self) -> CliResult<()> {
        let merged = merge(&self.bands_files)?;
        let mut available: Vec<usize> = merged
            .cells
            .values()
            .flat_map(|r| r.surfaces.iter().map(|s| s.m))
            .collect();
        available.sort_unstable();
        available.dedup();
        let m_cell = merged.meta_base.m_cell;
        let resolutions = match self.task {
            Task::F1 => {
                if !available.contains(&m_cell) {
                    return Err(CliError::config(format!(
                        "task f1 needs {m_cell}x{m_cell} surfaces to match the {m_cell}x{m_cell} masks; found {available:?}"
                    )));
                }
                vec![m_cell]
            }
            Task::F2 => {
                let pairs: Vec<usize> = available.iter().copied().filter(|r| available.contains(&(4 * r))).collect();
                match pairs.as_slice() {
                    [r] => vec![*r, 4 * r],
                    [] => {
                        return Err(CliError::config(format!(
                            "task f2 needs surfaces at r and 4r; found {available:?}"
                        )))
                    }
                    _ => {
                        return Err(CliError::config(format!(
                            "task f2 is ambiguous for resolutions {available:?}"
                        )))
                    }
                }
            }
        };
        let mut records = Vec::with_capacity(merged.order.len());
        for id in &merged.order {
            let rec = &merged.cells[id];
            let surfaces = select(rec, &resolutions).ok_or_else(|| {
                CliError::config(format!("cell {id} lacks one of the resolutions {resolutions:?}"))
            })?;
            records.push(DatasetRecord {
                cell_id: rec.cell_id,
                mask: rec.mask.clone(),
                surfaces,
            });
        }
        let meta = PcbdMeta {
            resolutions,
            ..merged.meta_base
        };
        let ids: Vec<u64> = records.iter().map(|r| r.cell_id).collect();
        let mut split = make_split(&ids, self.split_seed)?;
        split.normalization = Some(normalization_stats(&records, &split.train)?);

        write_pcbd(&self.out, &meta, &records)?;
        let hash = write_snapshot(&self.out, "make-dataset", self)?;

        #[derive(Serialize)]
        struct WithHash<'a> {
            config_hash: &'a str,
            task: Task,
            #[serde(flatten)]
            split: &'a phc_core::SplitManifest,
        }
        let text = serde_json::to_string_pretty(&WithHash {
            config_hash: &hash,
            task: self.task,
            split: &split,
        })
        .expect("manifest serializes");
        write_text(&sidecar(&self.out, "split.json"), &(text + "\n"))?;
        log::info!(
            "dataset {} with {} cells ({} train / {} val / {} test)",
            self.out.display(),
            records.len(),
            split.train.len(),
            split.val.len(),
            split.test.len()
        );
        Ok(())
    }
}
