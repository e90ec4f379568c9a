//! Grids, fields and the shared numerical substrate.
//!
//! Two backends are provided:
//!
//! * **periodic**: `n` equispaced nodes on `[0, P)`, power-of-two `n`.
//!   Hilbert transform, derivatives, interpolation and dealiasing act on
//!   the discrete Fourier coefficients. The Hilbert transform multiplies
//!   mode `k` by `-i sgn(k)`; the zero mode and the Nyquist mode are
//!   annihilated.
//! * **line**: `n` nodes on `[-L, L]` including both endpoints. Samples
//!   are understood as a zero-extended function on the real line, so every
//!   quadrature in this crate uses uniform weights `h` (the trapezoid rule
//!   on the real line for the zero extension). Derivatives are fourth-order
//!   centered differences with zero padding, which keeps the first and
//!   third derivative matrices exactly antisymmetric. The Hilbert transform
//!   is a principal-value trapezoid sum that omits the diagonal node; see
//!   [`PvRule`].

mod fourier;
mod line;

pub use fourier::FourierPlan;
pub use line::PvRule;
pub(crate) use line::{derivative_with_ghosts, lagrange};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Which discretization of the spatial variable a [`Grid`] uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Periodic,
    Line,
}

/// Uniform sampling of either the circle or a truncated line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    kind: GridKind,
    n: usize,
    /// Period for periodic grids, half-width `L` for line grids.
    length: f64,
}

pub const DEFAULT_PERIODIC_N: usize = 1024;
pub const DEFAULT_LINE_N: usize = 4097;
pub const DEFAULT_LINE_HALF_WIDTH: f64 = 30.0;

impl Grid {
    pub fn periodic(n: usize, period: f64) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "periodic grids need a power-of-two n >= 16, got {n}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!("period must be positive, got {period}")));
        }
        Ok(Self { kind: GridKind::Periodic, n, length: period })
    }

    /// Periodic grid on `[0, 2π)`.
    pub fn periodic_2pi(n: usize) -> Result<Self> {
        Self::periodic(n, 2.0 * PI)
    }

    pub fn line(n: usize, half_width: f64) -> Result<Self> {
        if n < 16 {
            return Err(Error::InvalidGrid(format!("line grids need n >= 16, got {n}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half-width must be positive, got {half_width}"
            )));
        }
        Ok(Self { kind: GridKind::Line, n, length: half_width })
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn is_periodic(&self) -> bool {
        self.kind == GridKind::Periodic
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Period (periodic) or half-width (line).
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        match self.kind {
            GridKind::Periodic => self.length / self.n as f64,
            GridKind::Line => 2.0 * self.length / (self.n - 1) as f64,
        }
    }

    /// Left end of the sampled interval.
    pub fn origin(&self) -> f64 {
        match self.kind {
            GridKind::Periodic => 0.0,
            GridKind::Line => -self.length,
        }
    }

    pub fn point(&self, j: usize) -> f64 {
        self.origin() + j as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Quadrature weight attached to every node.
    pub fn weight(&self) -> f64 {
        self.spacing()
    }

    /// Same geometry at twice the resolution (`2n` periodic, `2n - 1` line,
    /// so that line nodes nest).
    pub fn refined(&self) -> Self {
        match self.kind {
            GridKind::Periodic => Self { n: 2 * self.n, ..*self },
            GridKind::Line => Self { n: 2 * self.n - 1, ..*self },
        }
    }

    /// Largest retained Fourier index under the 2/3 rule.
    pub fn dealias_cutoff(&self) -> usize {
        self.n / 3
    }

    pub(crate) fn require_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Real samples of a function on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
    mean: f64,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::LengthMismatch { expected: grid.n(), got: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Ok(Self { grid, values, mean })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.n()], mean: 0.0 }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.points().into_iter().map(f).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Arithmetic mean of the samples.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.require_same(&other.grid)?;
        Self::new(
            self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn scale(&self, a: f64) -> Result<Self> {
        self.map(|v| a * v)
    }

    pub fn add(&self, other: &Field) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Copy with the sample mean removed.
    pub fn without_mean(&self) -> Self {
        let m = self.mean;
        Self { grid: self.grid, values: self.values.iter().map(|v| v - m).collect(), mean: 0.0 }
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `max_j |self_j - other_j|`.
    pub fn sup_distance(&self, other: &Field) -> Result<f64> {
        self.grid.require_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Discrete inner product with the grid's quadrature weights.
    pub fn inner(&self, other: &Field) -> Result<f64> {
        self.grid.require_same(&other.grid)?;
        Ok(self.grid.weight() * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>())
    }

    /// Two-column CSV (`x,value`).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,value\n");
        for (j, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{:.17e},{:.17e}\n", self.grid.point(j), v));
        }
        out
    }
}

/// Discrete Sobolev norms. `h1`/`h2` are the full norms
/// `(‖f‖² + ‖f'‖² [+ ‖f''‖²])^{1/2}`; the `*_semi` entries are `‖f'‖` and `‖f''‖`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l2: f64,
    pub h1: f64,
    pub h2: f64,
    pub h1_semi: f64,
    pub h2_semi: f64,
    pub sup: f64,
}

fn weighted_l2(grid: &Grid, values: &[f64]) -> f64 {
    (grid.weight() * values.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// Hilbert transform with the default principal-value rule on line grids.
pub fn hilbert_transform(f: &Field) -> Result<Field> {
    hilbert_transform_with(f, PvRule::default())
}

pub fn hilbert_transform_with(f: &Field, rule: PvRule) -> Result<Field> {
    if f.grid.kind == GridKind::Line {
        line::check_decay(&f.values);
    }
    Field::new(f.grid, hilbert_values(&f.grid, &f.values, rule))
}

/// Hilbert transform of raw samples without the decay diagnostic. The
/// g-dynamics develop slowly decaying tails by design.
pub(crate) fn hilbert_values(grid: &Grid, values: &[f64], rule: PvRule) -> Vec<f64> {
    match grid.kind {
        GridKind::Periodic => fourier::with_plan(grid.n, |plan| plan.hilbert(grid, values)),
        GridKind::Line => line::hilbert(values, rule),
    }
}

/// Derivative of raw samples; `order` must be 1..=3.
pub(crate) fn derivative_values(grid: &Grid, values: &[f64], order: usize) -> Vec<f64> {
    match grid.kind {
        GridKind::Periodic => fourier::with_plan(grid.n, |plan| plan.derivative(grid, values, order)),
        GridKind::Line => line::derivative(grid, values, order),
    }
}

/// Spatial derivative of order 1, 2 or 3.
pub fn derivative(f: &Field, order: usize) -> Result<Field> {
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidArgument(format!("derivative order must be 1..=3, got {order}")));
    }
    Field::new(f.grid, derivative_values(&f.grid, &f.values, order))
}

/// Evaluate the field between nodes. Periodic fields use band-limited
/// (trigonometric) interpolation with wrapped points; line fields use a
/// six-point Lagrange stencil.
pub fn interpolate(f: &Field, points: &[f64]) -> Result<Vec<f64>> {
    match f.grid.kind {
        GridKind::Periodic => Ok(fourier::with_plan(f.grid.n, |plan| {
            let coeffs = plan.coefficients(&f.values);
            points.iter().map(|&x| plan.evaluate(&f.grid, &coeffs, x)).collect()
        })),
        GridKind::Line => points.iter().map(|&x| line::interpolate(&f.grid, &f.values, x)).collect(),
    }
}

pub fn norms(f: &Field) -> Result<Norms> {
    let d1 = derivative(f, 1)?;
    let d2 = derivative(f, 2)?;
    let l2 = weighted_l2(&f.grid, &f.values);
    let h1_semi = weighted_l2(&f.grid, &d1.values);
    let h2_semi = weighted_l2(&f.grid, &d2.values);
    Ok(Norms {
        l2,
        h1: (l2 * l2 + h1_semi * h1_semi).sqrt(),
        h2: (l2 * l2 + h1_semi * h1_semi + h2_semi * h2_semi).sqrt(),
        h1_semi,
        h2_semi,
        sup: f.sup(),
    })
}

/// Discrete L² norm alone (no derivatives).
pub fn l2_norm(f: &Field) -> f64 {
    weighted_l2(&f.grid, &f.values)
}

/// 2/3-rule truncation: zero every Fourier mode with `|k| > n/3`.
/// On line grids this is a no-op and emits a warning.
pub fn dealias(f: &Field) -> Field {
    match f.grid.kind {
        GridKind::Periodic => {
            let values = fourier::with_plan(f.grid.n, |plan| plan.dealias(&f.values));
            Field::new(f.grid, values).expect("dealiasing preserves finiteness")
        }
        GridKind::Line => {
            log::warn!("dealias requested on a line grid; returning the field unchanged");
            f.clone()
        }
    }
}

/// Fraction of spectral energy carried by the top third of the retained
/// (2/3-rule) modes, `|k| > (2/3)·(n/3)`. Periodic grids only.
pub fn tail_energy_fraction(f: &Field) -> Result<f64> {
    if !f.grid.is_periodic() {
        return Err(Error::GridMismatch("tail energy needs a periodic grid".into()));
    }
    Ok(fourier::with_plan(f.grid.n, |plan| {
        let c = plan.coefficients(&f.values);
        fourier::tail_fraction(&c, f.grid.dealias_cutoff())
    }))
}
