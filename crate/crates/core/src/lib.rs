//! Band-structure engine for two-dimensional square-lattice photonic
//! crystals: unit-cell generation, periodic P1 finite elements, generalized
//! Hermitian eigensolves, k-grid sweeps, the binary dataset format and the
//! interpolation baseline with its error metrics.

pub mod banded;
pub mod bandsweep;
pub mod cellgen;
pub mod dataset;
pub mod eigensolve;
pub mod fem;
pub mod lattice;
pub mod metrics;
pub mod sparse;

pub use cellgen::{generate_p4m_cell, UnitCellMask, AIR, ALUMINA};
pub use eigensolve::{dense_reference, solve_lowest, EigResult, EigenError, Pencil};
pub use fem::{assemble, BlochPencil, CellOperators};
pub use lattice::{build_kgrid, KGrid, LatticeSpec, Mode};
pub use bandsweep::{band_surfaces, cell_surfaces, sweep, BandSurface, SweepOptions};
pub use dataset::{read_pcbd, write_pcbd, DatasetRecord, PcbdMeta, SplitManifest};
pub use metrics::{bilinear_upsample, mre, mse_loss, BandTensor, MetricReport};
