use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::Args;
use phc_core::bandsweep::{sweep, Manifests, SweepOptions};
use phc_core::cellgen::masks_from_archive;
use phc_core::dataset::{PcbdMeta, PcbdWriter};
use phc_core::Mode;
use serde::Serialize;

use crate::config::{read_text, sidecar, write_snapshot};
use crate::error::{CliError, CliResult};

#[derive(Debug, Args, Serialize)]
pub struct SolveBands {
    /// Mask archive from gen-cells.
    #[arg(long)]
    pub cells: PathBuf,
    /// k-grid side; repeat for several grids.
    #[arg(long = "m-kgrid", required = true)]
    pub m_kgrid: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub bands: usize,
    #[arg(long, default_value = "TE")]
    pub mode: Mode,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, env = "PHC_WORKERS", default_value_t = 1)]
    #[serde(skip)]
    pub workers: usize,
    /// Solve every grid point even when the cell symmetry allows reuse.
    #[arg(long)]
    pub no_symmetry: bool,
    /// Seed each solve with the previous grid point's eigenvectors.
    #[arg(long)]
    pub warm_start: bool,
    #[arg(long)]
    pub out: PathBuf,
}

impl SolveBands {
    fn validate(&self) -> CliResult<Vec<usize>> {
        let mut res = self.m_kgrid.clone();
        res.sort_unstable();
        res.dedup();
        if res.iter().any(|&m| m < 2) {
            return Err(CliError::config("--m-kgrid values must be at least 2"));
        }
        if self.bands == 0 {
            return Err(CliError::config("--bands must be at least 1"));
        }
        if !(self.tol > 0.0 && self.tol <= 1e-3) {
            return Err(CliError::config(format!("--tol must lie in (0, 1e-3], got {}", self.tol)));
        }
        if self.workers == 0 {
            return Err(CliError::config("--workers must be at least 1"));
        }
        Ok(res)
    }

    pub fn run(&self) -> CliResult<()> {
        let resolutions = self.validate()?;
        let masks = masks_from_archive(&read_text(&self.cells)?)?;
        let m_cell = masks
            .first()
            .map(|m| m.m())
            .ok_or_else(|| CliError::config("the cell archive contains no cells"))?;
        if masks.iter().any(|m| m.m() != m_cell) {
            return Err(CliError::config("all cells in the archive must share one resolution"));
        }
        if self.bands > m_cell * m_cell {
            return Err(CliError::config(format!(
                "--bands {} exceeds the {} unknowns of a {m_cell}x{m_cell} cell",
                self.bands,
                m_cell * m_cell
            )));
        }
        let meta = PcbdMeta {
            m_cell,
            bands: self.bands,
            resolutions: resolutions.clone(),
            mode: self.mode,
        };
        let opts = SweepOptions {
            bands: self.bands,
            tol: self.tol,
            workers: self.workers,
            use_symmetry: !self.no_symmetry,
            warm_start: self.warm_start,
        };
        write_snapshot(&self.out, "solve-bands", self)?;

        let open = |suffix: &str| -> CliResult<BufWriter<File>> {
            let p = sidecar(&self.out, suffix);
            File::create(&p).map(BufWriter::new).map_err(|e| CliError::io(&p, e))
        };
        let mut progress = open("progress.jsonl")?;
        let mut failures = open("failures.jsonl")?;
        let mut writer = PcbdWriter::create(&self.out, meta)?;
        let mut write_err = None;
        let summary = sweep(
            &masks,
            self.mode,
            &resolutions,
            &opts,
            Manifests {
                progress: Some(&mut progress),
                failures: Some(&mut failures),
            },
            |record| {
                writer.push(&record).map_err(|e| {
                    let msg = e.to_string();
                    write_err = Some(CliError::from(e));
                    std::io::Error::other(msg)
                })
            },
        );
        if let Some(e) = write_err {
            return Err(e);
        }
        let summary = summary?;
        writer.finish()?;
        log::info!("wrote {} records to {}", summary.records, self.out.display());
        if !summary.failures.is_empty() {
            return Err(CliError::compute(format!(
                "{} of {} cells failed; see {}",
                summary.failures.len(),
                masks.len(),
                sidecar(&self.out, "failures.jsonl").display()
            )));
        }
        Ok(())
    }
}
