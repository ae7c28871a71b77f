use std::path::PathBuf;

use clap::Args;
use phc_core::cellgen::{derive_seed, generate_p4m_cell, masks_to_archive};
use serde::Serialize;

use crate::config::{sidecar, write_snapshot, write_text};
use crate::error::{CliError, CliResult};

#[derive(Debug, Args, Serialize)]
pub struct GenCells {
    /// Number of cells.
    #[arg(long)]
    pub n: usize,
    /// Pixels per side (even).
    #[arg(long, default_value_t = 16)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rectangles and disks drawn per cell.
    #[arg(long, default_value_t = 3)]
    pub features: usize,
    /// Mask archive to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct ManifestEntry {
    index: usize,
    cell_id: u64,
    seed: u64,
    m: usize,
    air_fraction: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config_hash: &'a str,
    master_seed: u64,
    cells: Vec<ManifestEntry>,
}

impl GenCells {
    fn validate(&self) -> CliResult<()> {
        if self.m < 2 || self.m % 2 != 0 {
            return Err(CliError::config(format!("--m must be an even number >= 2, got {}", self.m)));
        }
        if self.features == 0 {
            return Err(CliError::config("--features must be at least 1"));
        }
        Ok(())
    }

    pub fn run(&self) -> CliResult<()> {
        self.validate()?;
        let masks = (0..self.n)
            .map(|i| generate_p4m_cell(derive_seed(self.seed, i as u64), self.m, self.features))
            .collect::<Result<Vec<_>, _>>()?;
        write_text(&self.out, &masks_to_archive(&masks))?;
        let hash = write_snapshot(&self.out, "gen-cells", self)?;
        let manifest = Manifest {
            config_hash: &hash,
            master_seed: self.seed,
            cells: masks
                .iter()
                .enumerate()
                .map(|(index, m)| ManifestEntry {
                    index,
                    cell_id: m.cell_id,
                    seed: m.seed,
                    m: m.m(),
                    air_fraction: m.air_fraction(),
                })
                .collect(),
        };
        let path = sidecar(&self.out, "manifest.json");
        write_text(&path, &(serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n"))?;
        log::info!("wrote {} cells to {}", masks.len(), self.out.display());
        Ok(())
    }
}
