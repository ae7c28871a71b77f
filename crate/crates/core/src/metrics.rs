//! Mean relative error, the mean-square training loss and the periodic
//! bilinear super-resolution baseline.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bandsweep::BandSurface;

pub const DEFAULT_DELTA: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("shape mismatch: {0:?} vs {1:?}")]
    Shape([usize; 4], [usize; 4]),
    #[error("every truth entry is below the exclusion threshold {0}")]
    AllExcluded(f64),
    #[error("exclusion threshold must be non-negative, got {0}")]
    BadDelta(f64),
    #[error("empty tensor")]
    Empty,
    #[error("grid side {0} is too small to interpolate")]
    TooSmall(usize),
}

/// Dense `[sample][band][p][q]` values.
#[derive(Debug, Clone, PartialEq)]
pub struct BandTensor {
    pub samples: usize,
    pub bands: usize,
    pub m: usize,
    pub values: Vec<f64>,
}

impl BandTensor {
    pub fn new(samples: usize, bands: usize, m: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), samples * bands * m * m, "tensor size");
        Self {
            samples,
            bands,
            m,
            values,
        }
    }

    pub fn from_surfaces<'a, I>(surfaces: I) -> Result<Self, MetricError>
    where
        I: IntoIterator<Item = &'a BandSurface>,
    {
        let mut values = Vec::new();
        let mut shape: Option<(usize, usize)> = None;
        let mut samples = 0;
        for s in surfaces {
            match shape {
                None => shape = Some((s.bands, s.m)),
                Some((b, m)) if (b, m) != (s.bands, s.m) => {
                    return Err(MetricError::Shape([samples, b, m, m], [1, s.bands, s.m, s.m]))
                }
                _ => {}
            }
            values.extend(s.omega.iter().map(|&v| v as f64));
            samples += 1;
        }
        let (bands, m) = shape.ok_or(MetricError::Empty)?;
        Ok(Self::new(samples, bands, m, values))
    }

    pub fn shape(&self) -> [usize; 4] {
        [self.samples, self.bands, self.m, self.m]
    }

    /// Restrict to bands `lo..hi` (0-based, exclusive end).
    pub fn bands_range(&self, lo: usize, hi: usize) -> Self {
        let plane = self.m * self.m;
        let mut values = Vec::with_capacity(self.samples * (hi - lo) * plane);
        for s in 0..self.samples {
            let base = s * self.bands * plane;
            values.extend_from_slice(&self.values[base + lo * plane..base + hi * plane]);
        }
        Self::new(self.samples, hi - lo, self.m, values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub dataset: String,
    pub split: String,
    pub delta: f64,
    /// Mean relative error per band, as a fraction.
    pub per_band: Vec<f64>,
    pub aggregate: f64,
    pub excluded_per_band: Vec<usize>,
    pub excluded: usize,
    pub included: usize,
}

impl MetricReport {
    pub fn with_labels(mut self, dataset: impl Into<String>, split: impl Into<String>) -> Self {
        self.dataset = dataset.into();
        self.split = split.into();
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Table with rows of five bands and the aggregate in the last column,
    /// percentages to two decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (row, chunk) in self.per_band.chunks(5).enumerate() {
            let first = row * 5 + 1;
            let labels: Vec<String> = (first..first + chunk.len()).map(|b| b.to_string()).collect();
            let values: Vec<String> = chunk.iter().map(|v| format!("{:.2}%", v * 100.0)).collect();
            let agg_head = if row == 0 { "MRE" } else { "" };
            let agg = if row == 0 {
                format!("{:.2}%", self.aggregate * 100.0)
            } else {
                String::new()
            };
            out.push_str(&format!("Band number,{},{agg_head}\n", labels.join(",")));
            out.push_str(&format!("MRE,{},{agg}\n", values.join(",")));
        }
        out
    }
}

/// Mean relative error `|pred − truth| / |truth|`, skipping entries with
/// `|truth| < delta`.
pub fn mre(pred: &BandTensor, truth: &BandTensor, delta: f64) -> Result<MetricReport, MetricError> {
    if pred.shape() != truth.shape() {
        return Err(MetricError::Shape(pred.shape(), truth.shape()));
    }
    if !(delta >= 0.0) {
        return Err(MetricError::BadDelta(delta));
    }
    let plane = truth.m * truth.m;
    let mut sums = vec![0.0; truth.bands];
    let mut counts = vec![0usize; truth.bands];
    let mut excluded = vec![0usize; truth.bands];
    for s in 0..truth.samples {
        for n in 0..truth.bands {
            let base = (s * truth.bands + n) * plane;
            for i in base..base + plane {
                let t = truth.values[i];
                if t.abs() < delta || t == 0.0 {
                    excluded[n] += 1;
                    continue;
                }
                sums[n] += (pred.values[i] - t).abs() / t.abs();
                counts[n] += 1;
            }
        }
    }
    let included: usize = counts.iter().sum();
    if included == 0 {
        return Err(MetricError::AllExcluded(delta));
    }
    let per_band = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
        .collect();
    Ok(MetricReport {
        dataset: String::new(),
        split: String::new(),
        delta,
        per_band,
        aggregate: sums.iter().sum::<f64>() / included as f64,
        excluded: excluded.iter().sum(),
        excluded_per_band: excluded,
        included,
    })
}

/// Mean over all samples, bands and grid points of the squared error.
pub fn mse_loss(pred: &BandTensor, truth: &BandTensor) -> Result<f64, MetricError> {
    if pred.shape() != truth.shape() {
        return Err(MetricError::Shape(pred.shape(), truth.shape()));
    }
    if truth.values.is_empty() {
        return Err(MetricError::Empty);
    }
    let sum: f64 = pred
        .values
        .iter()
        .zip(&truth.values)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / truth.values.len() as f64)
}

/// Bilinear interpolation of an `m × m` periodic grid onto an
/// `(factor·m) × (factor·m)` grid; fine point `P` sits at coarse coordinate
/// `P / factor`, wrapping across the torus seam.
pub fn bilinear_upsample_grid(values: &[f64], m: usize, factor: usize) -> Result<Vec<f64>, MetricError> {
    if m < 2 {
        return Err(MetricError::TooSmall(m));
    }
    assert_eq!(values.len(), m * m, "grid size");
    let fine = m * factor;
    let weights: Vec<(usize, usize, f64)> = (0..fine)
        .map(|p| {
            let lo = p / factor;
            let t = (p % factor) as f64 / factor as f64;
            (lo, (lo + 1) % m, t)
        })
        .collect();
    let mut out = vec![0.0; fine * fine];
    for (pf, &(p0, p1, tp)) in weights.iter().enumerate() {
        for (qf, &(q0, q1, tq)) in weights.iter().enumerate() {
            let v00 = values[p0 * m + q0];
            let v01 = values[p0 * m + q1];
            let v10 = values[p1 * m + q0];
            let v11 = values[p1 * m + q1];
            out[pf * fine + qf] = (1.0 - tp) * ((1.0 - tq) * v00 + tq * v01) + tp * ((1.0 - tq) * v10 + tq * v11);
        }
    }
    Ok(out)
}

pub fn bilinear_upsample(surface: &BandSurface, factor: usize) -> Result<BandSurface, MetricError> {
    let m = surface.m;
    let fine = m * factor;
    let mut omega = Vec::with_capacity(surface.bands * fine * fine);
    for n in 0..surface.bands {
        let band: Vec<f64> = surface.band(n).iter().map(|&v| v as f64).collect();
        omega.extend(bilinear_upsample_grid(&band, m, factor)?.into_iter().map(|v| v as f32));
    }
    Ok(BandSurface {
        cell_id: surface.cell_id,
        mode: surface.mode,
        bands: surface.bands,
        m: fine,
        omega,
    })
}
