use std::collections::HashSet;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use phc_core::dataset::{read_pcbd, write_pcbd, DatasetRecord, PcbdMeta, Split, SplitManifest};
use phc_core::metrics::{bilinear_upsample, mre, BandTensor, MetricReport, DEFAULT_DELTA};
use phc_core::BandSurface;
use serde::Serialize;

use crate::config::{read_text, write_snapshot, write_text};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitArg {
    Train,
    Val,
    Test,
    All,
}

/// Cell selection shared by the evaluation commands.
#[derive(Debug, Args, Serialize)]
pub struct Selection {
    /// Split manifest from make-dataset.
    #[arg(long)]
    pub split_manifest: Option<PathBuf>,
    /// Split to evaluate; defaults to test with a manifest, all cells without.
    #[arg(long, value_enum)]
    pub split: Option<SplitArg>,
    /// Truth entries below this magnitude are excluded from the MRE.
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
}

impl Selection {
    fn resolve(&self) -> CliResult<(SplitArg, Option<HashSet<u64>>)> {
        if !(self.delta >= 0.0) {
            return Err(CliError::config("--delta must be non-negative"));
        }
        match (&self.split_manifest, self.split) {
            (None, None) | (None, Some(SplitArg::All)) => Ok((SplitArg::All, None)),
            (None, Some(_)) => Err(CliError::config("--split needs --split-manifest")),
            (Some(path), split) => {
                let manifest = SplitManifest::from_json(&read_text(path)?)?;
                let split = split.unwrap_or(SplitArg::Test);
                let ids = match split {
                    SplitArg::Train => Some(manifest.ids(Split::Train)),
                    SplitArg::Val => Some(manifest.ids(Split::Val)),
                    SplitArg::Test => Some(manifest.ids(Split::Test)),
                    SplitArg::All => None,
                };
                Ok((split, ids.map(|ids| ids.iter().copied().collect())))
            }
        }
    }
}

fn split_label(split: SplitArg) -> &'static str {
    match split {
        SplitArg::Train => "train",
        SplitArg::Val => "val",
        SplitArg::Test => "test",
        SplitArg::All => "all",
    }
}

fn file_label(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

#[derive(Serialize)]
struct ReportFile<'a> {
    config_hash: &'a str,
    #[serde(flatten)]
    report: &'a MetricReport,
}

fn write_report(path: &Path, command: &str, config: &impl Serialize, report: &MetricReport) -> CliResult<()> {
    let hash = write_snapshot(path, command, config)?;
    let text = serde_json::to_string_pretty(&ReportFile {
        config_hash: &hash,
        report,
    })
    .expect("report serializes");
    write_text(path, &(text + "\n"))?;
    write_text(&path.with_extension("csv"), &report.to_csv())?;
    log::info!("aggregate MRE {:.4}% over {} entries", report.aggregate * 100.0, report.included);
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct BaselineSr {
    /// Dataset holding coarse and fine surfaces.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub factor: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub selection: Selection,
    /// MetricReport JSON; a CSV table is written alongside.
    #[arg(long)]
    pub report: PathBuf,
    /// Also write the upsampled surfaces as a PCBD file.
    #[arg(long)]
    pub pred_out: Option<PathBuf>,
}

impl BaselineSr {
    pub fn run(&self) -> CliResult<()> {
        if self.factor < 2 {
            return Err(CliError::config("--factor must be at least 2"));
        }
        let (split, ids) = self.selection.resolve()?;
        let (meta, records) = read_pcbd(&self.dataset)?;
        let coarse = meta
            .resolutions
            .iter()
            .copied()
            .find(|r| meta.resolutions.contains(&(r * self.factor)))
            .ok_or_else(|| {
                CliError::config(format!(
                    "dataset resolutions {:?} contain no pair r, {}r",
                    meta.resolutions, self.factor
                ))
            })?;
        let fine = coarse * self.factor;
        let selected: Vec<&DatasetRecord> = records
            .iter()
            .filter(|r| ids.as_ref().is_none_or(|s| s.contains(&r.cell_id)))
            .collect();
        if selected.is_empty() {
            return Err(CliError::config("no cells selected"));
        }
        let mut preds = Vec::with_capacity(selected.len());
        let mut truths = Vec::with_capacity(selected.len());
        for r in &selected {
            preds.push(bilinear_upsample(r.surface(coarse).expect("resolution in meta"), self.factor)?);
            truths.push(r.surface(fine).expect("resolution in meta"));
        }
        let report = mre(
            &BandTensor::from_surfaces(&preds)?,
            &BandTensor::from_surfaces(truths.iter().copied())?,
            self.selection.delta,
        )?
        .with_labels(file_label(&self.dataset), split_label(split));

        if let Some(out) = &self.pred_out {
            let pred_meta = PcbdMeta {
                resolutions: vec![fine],
                ..meta.clone()
            };
            let pred_records: Vec<DatasetRecord> = selected
                .iter()
                .zip(preds)
                .map(|(r, p)| DatasetRecord {
                    cell_id: r.cell_id,
                    mask: r.mask.clone(),
                    surfaces: vec![p],
                })
                .collect();
            write_pcbd(out, &pred_meta, &pred_records)?;
        }
        write_report(&self.report, "baseline-sr", self, &report)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct Metrics {
    /// Predicted surfaces (PCBD).
    #[arg(long)]
    pub pred: PathBuf,
    /// Reference surfaces (PCBD).
    #[arg(long)]
    pub truth: PathBuf,
    /// Grid side to compare; defaults to the largest one present in both.
    #[arg(long)]
    pub resolution: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub selection: Selection,
    #[arg(long)]
    pub report: PathBuf,
}

impl Metrics {
    pub fn run(&self) -> CliResult<()> {
        let (split, ids) = self.selection.resolve()?;
        let (pmeta, preds) = read_pcbd(&self.pred)?;
        let (tmeta, truths) = read_pcbd(&self.truth)?;
        if pmeta.bands != tmeta.bands || pmeta.mode != tmeta.mode {
            return Err(CliError::config("prediction and truth differ in band count or mode"));
        }
        let res = match self.resolution {
            Some(r) => r,
            None => *pmeta
                .resolutions
                .iter()
                .rev()
                .find(|r| tmeta.resolutions.contains(r))
                .ok_or_else(|| CliError::config("prediction and truth share no resolution"))?,
        };
        if !pmeta.resolutions.contains(&res) || !tmeta.resolutions.contains(&res) {
            return Err(CliError::config(format!("resolution {res} not present in both files")));
        }
        let mut p_surf: Vec<&BandSurface> = Vec::new();
        let mut t_surf: Vec<&BandSurface> = Vec::new();
        for p in preds.iter().filter(|r| ids.as_ref().is_none_or(|s| s.contains(&r.cell_id))) {
            let t = truths
                .iter()
                .find(|t| t.cell_id == p.cell_id)
                .ok_or_else(|| CliError::config(format!("cell {} missing from the truth file", p.cell_id)))?;
            p_surf.push(p.surface(res).expect("resolution in meta"));
            t_surf.push(t.surface(res).expect("resolution in meta"));
        }
        if p_surf.is_empty() {
            return Err(CliError::config("no cells selected"));
        }
        let report = mre(
            &BandTensor::from_surfaces(p_surf)?,
            &BandTensor::from_surfaces(t_surf)?,
            self.selection.delta,
        )?
        .with_labels(file_label(&self.truth), split_label(split));
        write_report(&self.report, "metrics", self, &report)
    }
}
