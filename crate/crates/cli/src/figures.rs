use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use image::{Rgb, RgbImage};
use phc_core::dataset::read_pcbd;
use phc_core::metrics::MetricReport;
use phc_core::{BandSurface, UnitCellMask};
use serde::Serialize;

use crate::config::{read_text, write_snapshot, write_text};
use crate::error::{CliError, CliResult};

#[derive(Debug, Args, Serialize)]
pub struct ExportFigures {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// MetricReport JSON to render as a CSV table.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Number of leading cells to render.
    #[arg(long, default_value_t = 4)]
    pub cells: usize,
    /// Minimum image side in pixels; each grid value becomes a square block.
    #[arg(long, default_value_t = 256)]
    pub min_side: u32,
    #[arg(long)]
    pub out_dir: PathBuf,
}

const PALETTE: [[f64; 3]; 6] = [
    [0.267, 0.005, 0.329],
    [0.254, 0.265, 0.530],
    [0.164, 0.471, 0.558],
    [0.135, 0.659, 0.518],
    [0.478, 0.821, 0.318],
    [0.993, 0.906, 0.144],
];

fn colour(t: f64) -> Rgb<u8> {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (PALETTE.len() - 1) as f64;
    let i = (x.floor() as usize).min(PALETTE.len() - 2);
    let f = x - i as f64;
    let c = |k: usize| ((PALETTE[i][k] * (1.0 - f) + PALETTE[i + 1][k] * f) * 255.0).round() as u8;
    Rgb([c(0), c(1), c(2)])
}

/// Scaled colour image of an `m × m` grid; row index `p` runs along x.
fn grid_image(values: &[f64], m: usize, min_side: u32, lo: f64, hi: f64) -> RgbImage {
    let scale = min_side.div_ceil(m as u32).max(1);
    let side = m as u32 * scale;
    let span = if hi > lo { hi - lo } else { 1.0 };
    RgbImage::from_fn(side, side, |x, y| {
        let p = (x / scale) as usize;
        // Image rows go downwards; put q = 0 at the bottom.
        let q = m - 1 - (y / scale) as usize;
        colour((values[p * m + q] - lo) / span)
    })
}

fn save(img: &RgbImage, path: &Path) -> CliResult<()> {
    img.save(path).map_err(|e| CliError::io(path, e))
}

fn grid_csv(values: impl Iterator<Item = f64>, m: usize) -> String {
    let vals: Vec<f64> = values.collect();
    let mut out = String::new();
    for p in 0..m {
        let row: Vec<String> = (0..m).map(|q| format!("{}", vals[p * m + q])).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

fn export_mask(mask: &UnitCellMask, dir: &Path, min_side: u32) -> CliResult<()> {
    let m = mask.m();
    let values: Vec<f64> = (0..m * m).map(|i| f64::from(mask.cells()[i])).collect();
    save(&grid_image(&values, m, min_side, 0.0, 1.0), &dir.join(format!("cell{}_mask.png", mask.cell_id)))
}

fn export_surface(s: &BandSurface, dir: &Path, min_side: u32) -> CliResult<()> {
    for n in 0..s.bands {
        let band: Vec<f64> = s.band(n).iter().map(|&v| f64::from(v)).collect();
        let lo = band.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = band.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let stem = format!("cell{}_k{}_band{:02}", s.cell_id, s.m, n + 1);
        save(&grid_image(&band, s.m, min_side, lo, hi), &dir.join(format!("{stem}.png")))?;
        write_text(&dir.join(format!("{stem}.csv")), &grid_csv(band.into_iter(), s.m))?;
    }
    Ok(())
}

impl ExportFigures {
    pub fn run(&self) -> CliResult<()> {
        if self.dataset.is_none() && self.report.is_none() {
            return Err(CliError::config("give --dataset, --report or both"));
        }
        if self.min_side == 0 {
            return Err(CliError::config("--min-side must be positive"));
        }
        std::fs::create_dir_all(&self.out_dir).map_err(|e| CliError::io(&self.out_dir, e))?;
        if let Some(path) = &self.dataset {
            let (_, records) = read_pcbd(path)?;
            for r in records.iter().take(self.cells) {
                export_mask(&r.mask, &self.out_dir, self.min_side)?;
                for s in &r.surfaces {
                    export_surface(s, &self.out_dir, self.min_side)?;
                }
            }
        }
        if let Some(path) = &self.report {
            let report: MetricReport = serde_json::from_str(&read_text(path)?)
                .map_err(|e| CliError::config(format!("{}: not a metric report: {e}", path.display())))?;
            write_text(&self.out_dir.join("mre_table.csv"), &report.to_csv())?;
        }
        write_snapshot(&self.out_dir.join("figures"), "export-figures", self)?;
        Ok(())
    }
}
