//! Line backend: zero-padded finite differences, principal-value sums and
//! local Lagrange interpolation on `[-L, L]`.

use super::Grid;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Trapezoid-type principal-value rules for `p.v. (1/π) ∫ f(y)/(x-y) dy`.
/// Both omit the diagonal node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PvRule {
    /// Sum over nodes at odd offsets only, with doubled weight. Keeps the
    /// symmetric cancellation of the singular kernel and converges
    /// spectrally for smooth decaying data.
    #[default]
    OddOffset,
    /// Plain trapezoid sum with the diagonal node dropped. Carries an
    /// `h f'(x)/π` defect, i.e. first order.
    Punctured,
}

/// Relative size of boundary samples above which the truncated PV sum
/// is flagged.
const DECAY_TOLERANCE: f64 = 1e-8;

/// Warn when the samples at `±L` are not small relative to the field, in
/// which case truncating the PV integral to `[-L, L]` is inaccurate.
pub(super) fn check_decay(f: &[f64]) {
    let scale = f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let edge = f[0].abs().max(f[f.len() - 1].abs());
    if scale > 0.0 && edge > DECAY_TOLERANCE * scale {
        log::warn!(
            "line Hilbert transform: boundary samples {edge:.3e} exceed decay tolerance (max {scale:.3e})"
        );
    }
}

pub(super) fn hilbert(f: &[f64], rule: PvRule) -> Vec<f64> {
    let n = f.len();
    // The kernel h/(π (x_i - x_j)) depends only on i - j.
    let (stride, weight) = match rule {
        PvRule::OddOffset => (2, 2.0 / PI),
        PvRule::Punctured => (1, 1.0 / PI),
    };
    let kernel: Vec<f64> = (0..n).map(|k| if k == 0 { 0.0 } else { weight / k as f64 }).collect();
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        // j < i: positive offsets
        let mut k = 1;
        while k <= i {
            acc += kernel[k] * f[i - k];
            k += stride;
        }
        let mut k = 1;
        while i + k < n {
            acc -= kernel[k] * f[i + k];
            k += stride;
        }
        *o = acc;
    }
    out
}

/// Fourth-order centered differences, samples outside `[-L, L]` taken as 0.
pub(super) fn derivative(grid: &Grid, f: &[f64], order: usize) -> Vec<f64> {
    let h = grid.spacing();
    let n = f.len() as isize;
    let at = |i: isize| if (0..n).contains(&i) { f[i as usize] } else { 0.0 };
    let (stencil, denom): (&[(isize, f64)], f64) = match order {
        1 => (&[(-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)], 12.0 * h),
        2 => (&[(-2, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0)], 12.0 * h * h),
        3 => (
            &[(-3, 1.0), (-2, -8.0), (-1, 13.0), (1, -13.0), (2, 8.0), (3, -1.0)],
            8.0 * h * h * h,
        ),
        _ => unreachable!("order checked by caller"),
    };
    (0..n)
        .map(|i| stencil.iter().map(|&(o, w)| w * at(i + o)).sum::<f64>() / denom)
        .collect()
}

/// Fourth-order first derivative with two explicit samples beyond each end
/// (`left = [f(-L-2h), f(-L-h)]`, `right = [f(L+h), f(L+2h)]`).
pub(crate) fn derivative_with_ghosts(h: f64, f: &[f64], left: [f64; 2], right: [f64; 2]) -> Vec<f64> {
    let n = f.len() as isize;
    let at = |i: isize| match i {
        -2 => left[0],
        -1 => left[1],
        i if i == n => right[0],
        i if i == n + 1 => right[1],
        i => f[i as usize],
    };
    (0..n).map(|i| (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) / (12.0 * h)).collect()
}

pub(super) const STENCIL: usize = 6;

pub(super) fn interpolate(grid: &Grid, f: &[f64], x: f64) -> Result<f64> {
    let l = grid.length();
    if !(x >= -l && x <= l) {
        return Err(Error::OutOfDomain { point: x, half_width: l });
    }
    let h = grid.spacing();
    let n = f.len();
    let cell = (((x + l) / h).floor() as usize).min(n - 2);
    let start = cell.saturating_sub(STENCIL / 2 - 1).min(n - STENCIL);
    let nodes: Vec<f64> = (start..start + STENCIL).map(|j| grid.point(j)).collect();
    Ok(lagrange(&nodes, &f[start..start + STENCIL], x))
}

/// Lagrange form of the interpolating polynomial through `(xs, ys)` at `x`.
pub(crate) fn lagrange(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for (k, (&xk, &yk)) in xs.iter().zip(ys).enumerate() {
        let mut num = 1.0;
        let mut den = 1.0;
        for (m, &xm) in xs.iter().enumerate() {
            if m != k {
                num *= x - xm;
                den *= xk - xm;
            }
        }
        acc += yk * num / den;
    }
    acc
}
