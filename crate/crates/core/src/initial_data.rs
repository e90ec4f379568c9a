//! Named initial-data generators.

use crate::error::{Error, Result};
use crate::spectral::{self, Field, Grid, GridKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// One Fourier component `amplitude · cos(mode · x + phase)` on the
/// `2π`-normalized periodic coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub mode: u32,
    pub amplitude: f64,
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialData {
    /// `amplitude · sin(mode · 2πx/P)` (periodic) or plain `sin` on the line.
    Sine { amplitude: f64, mode: u32 },
    MultiMode { modes: Vec<Mode> },
    /// `amplitude · exp(-(x - center)² / (2 width²))`.
    Gaussian { amplitude: f64, width: f64, center: f64 },
    /// Seeded random field. Periodic: modes `1..=max_mode` with amplitudes
    /// decaying like `1/m²`. Line: random trigonometric polynomial under a
    /// Gaussian window of the given width.
    Random { seed: u64, max_mode: u32, amplitude: f64, width: f64 },
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::Sine { amplitude: 1.0, mode: 1 }
    }
}

impl InitialData {
    pub fn sine() -> Self {
        Self::default()
    }

    pub fn gaussian(amplitude: f64, width: f64) -> Self {
        InitialData::Gaussian { amplitude, width, center: 0.0 }
    }

    pub fn random(seed: u64, max_mode: u32, amplitude: f64) -> Self {
        InitialData::Random { seed, max_mode, amplitude, width: 2.0 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InitialData::Sine { .. } => "sine",
            InitialData::MultiMode { .. } => "multi-mode",
            InitialData::Gaussian { .. } => "gaussian",
            InitialData::Random { .. } => "random",
        }
    }

    /// Sample on `grid`. Dynamics on periodic grids assume mean-zero data,
    /// which callers impose separately.
    pub fn sample(&self, grid: &Grid) -> Result<Field> {
        let scale = match grid.kind() {
            GridKind::Periodic => 2.0 * PI / grid.length(),
            GridKind::Line => 1.0,
        };
        match self {
            InitialData::Sine { amplitude, mode } => {
                let k = *mode as f64 * scale;
                Field::from_fn(*grid, |x| amplitude * (k * x).sin())
            }
            InitialData::MultiMode { modes } => Field::from_fn(*grid, |x| {
                modes
                    .iter()
                    .map(|m| m.amplitude * (m.mode as f64 * scale * x + m.phase).cos())
                    .sum()
            }),
            InitialData::Gaussian { amplitude, width, center } => {
                if *width <= 0.0 {
                    return Err(Error::InvalidArgument("gaussian width must be positive".into()));
                }
                Field::from_fn(*grid, |x| {
                    let z = (x - center) / width;
                    amplitude * (-0.5 * z * z).exp()
                })
            }
            InitialData::Random { seed, max_mode, amplitude, width } => {
                if *max_mode == 0 {
                    return Err(Error::InvalidArgument("random field needs max_mode >= 1".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let modes: Vec<(f64, f64, f64)> = (1..=*max_mode)
                    .map(|m| {
                        let a = rng.gen_range(-1.0..1.0) / (m as f64 * m as f64);
                        let phase = rng.gen_range(0.0..2.0 * PI);
                        (m as f64, a, phase)
                    })
                    .collect();
                let raw = match grid.kind() {
                    GridKind::Periodic => Field::from_fn(*grid, |x| {
                        modes.iter().map(|&(m, a, p)| a * (m * scale * x + p).cos()).sum()
                    })?,
                    GridKind::Line => {
                        let k0 = 1.0 / width;
                        Field::from_fn(*grid, |x| {
                            let z = x / width;
                            (-0.5 * z * z).exp()
                                * modes
                                    .iter()
                                    .map(|&(m, a, p)| a * ((m - 1.0) * k0 * x + p).cos())
                                    .sum::<f64>()
                        })?
                    }
                };
                let peak = raw.sup();
                if peak == 0.0 {
                    return Ok(raw);
                }
                raw.scale(amplitude / peak)
            }
        }
    }

    /// Periodic sample projected to mean zero and to the 2/3-rule band,
    /// the admissible initial data for the spectral dynamics.
    pub fn sample_dynamic(&self, grid: &Grid) -> Result<Field> {
        let f = self.sample(grid)?;
        if grid.is_periodic() {
            Ok(spectral::dealias(&f.without_mean()))
        } else {
            Ok(f)
        }
    }
}
