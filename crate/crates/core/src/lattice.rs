//! Square-lattice geometry, the reciprocal torus grid of wave vectors, and the
//! per-polarization coefficient maps.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cellgen::UnitCellMask;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    pub a: f64,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        Self { a: 1.0 }
    }
}

impl LatticeSpec {
    pub fn primitive(&self) -> [[f64; 2]; 2] {
        [[self.a, 0.0], [0.0, self.a]]
    }

    pub fn reciprocal(&self) -> [[f64; 2]; 2] {
        let g = 2.0 * PI / self.a;
        [[g, 0.0], [0.0, g]]
    }

    pub fn gamma(&self) -> [f64; 2] {
        [0.0, 0.0]
    }

    pub fn x_point(&self) -> [f64; 2] {
        [PI / self.a, 0.0]
    }

    pub fn m_point(&self) -> [f64; 2] {
        [PI / self.a, PI / self.a]
    }
}

/// Uniform `m × m` grid over one reciprocal period `[0, 2π/a)²`, endpoint
/// exclusive. Point `(p, q)` (0-based, `p` along k_x) is stored at `p * m + q`.
#[derive(Debug, Clone, PartialEq)]
pub struct KGrid {
    m: usize,
    lattice: LatticeSpec,
    points: Vec<[f64; 2]>,
}

impl KGrid {
    pub fn new(m: usize, lattice: LatticeSpec) -> Self {
        assert!(m >= 2, "k-grid needs at least 2 points per side");
        let mut points = Vec::with_capacity(m * m);
        for p in 0..m {
            for q in 0..m {
                points.push(fraction_to_k(p, q, m, lattice.a));
            }
        }
        Self { m, lattice, points }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn lattice(&self) -> LatticeSpec {
        self.lattice
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn point(&self, p: usize, q: usize) -> [f64; 2] {
        self.points[p * self.m + q]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `build_kgrid` with the unit lattice.
pub fn build_kgrid(m: usize) -> KGrid {
    KGrid::new(m, LatticeSpec::default())
}

/// Wave vector `(2π p / (m a), 2π q / (m a))`.
pub fn fraction_to_k(p: usize, q: usize, m: usize, a: f64) -> [f64; 2] {
    let scale = 2.0 * PI / a;
    [
        scale * p as f64 / m as f64,
        scale * q as f64 / m as f64,
    ]
}

/// Representative of `k` modulo the reciprocal lattice in `[−π/a, π/a]²`.
/// Values inside the zone are returned unchanged. A component on the zone
/// boundary takes the sign of the other component, so the chosen set of
/// representatives is closed under negation and transpose.
pub fn wrap_to_zone(k: [f64; 2], a: f64) -> [f64; 2] {
    let g = 2.0 * PI / a;
    let edge = PI / a;
    let [x, y] = k.map(|c| if c.abs() <= edge { c } else { c - g * (c / g).round() });
    let on_edge = |c: f64| c.abs() == edge;
    let toward = |c: f64| if c < 0.0 { -edge } else { edge };
    match (on_edge(x), on_edge(y)) {
        (true, true) => [edge, edge],
        (true, false) => [toward(y), y],
        (false, true) => [x, toward(x)],
        (false, false) => [x, y],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "TE")]
    Te,
    #[serde(rename = "TM")]
    Tm,
}

impl Mode {
    pub fn code(self) -> u8 {
        match self {
            Mode::Te => 0,
            Mode::Tm => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Mode> {
        match code {
            0 => Some(Mode::Te),
            1 => Some(Mode::Tm),
            _ => None,
        }
    }

    /// `(α, β)` for a pixel of permittivity `eps`.
    pub fn coefficients(self, eps: f64) -> (f64, f64) {
        match self {
            Mode::Te => (1.0 / eps, 1.0),
            Mode::Tm => (1.0, eps),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Te => "TE",
            Mode::Tm => "TM",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "TE" => Ok(Mode::Te),
            "TM" => Ok(Mode::Tm),
            other => Err(format!("unknown mode {other:?} (expected TE or TM)")),
        }
    }
}

/// Piecewise-constant `α`, `β` per pixel, row-major like the mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCoefficients {
    pub mode: Mode,
    pub m: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

pub fn mode_coefficients(mask: &UnitCellMask, mode: Mode) -> ModeCoefficients {
    let m = mask.m();
    let mut alpha = Vec::with_capacity(m * m);
    let mut beta = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let (a, b) = mode.coefficients(mask.permittivity(i, j));
            alpha.push(a);
            beta.push(b);
        }
    }
    ModeCoefficients {
        mode,
        m,
        alpha,
        beta,
    }
}
