//! The transformed equation
//!
//! ```text
//! g_t = H[g] − (ε²/π) ∂_ξ ∫ (ξ − ξ̃) g̃_ξ̃ φ(c; ε) dξ̃,   c = (g − g̃)/(ξ − ξ̃),
//! φ(c; ε) = −(log(1 − εc) + εc)/ε²,
//! ```
//!
//! its expanded (non-divergence) form, RK4 time integration and the H²
//! energy monitors.
//!
//! The inner integral is a trapezoid sum with a kernel matrix that is
//! exactly antisymmetric in `(ξ, ξ̃)`. Together with an antisymmetric
//! derivative matrix this makes `Σ g · rhs` vanish to round-off, the
//! discrete counterpart of `d/dt ‖g‖ = 0`.
//!
//! On periodic grids `g` is treated as a periodic function on ℝ and the
//! integral runs over all of ℝ: the nearest image is summed exactly and
//! the remaining images through the lattice sums
//! `Z_q(s) = Σ_{m≠0} (s + Pm)^{-q}`.

use crate::analysis::{A_CONSTANT, N_CONSTANT};
use crate::error::{Error, Result};
use crate::rk4::Rk4;
use crate::spectral::{self, Field, Grid, GridKind, PvRule};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Largest admissible `|εc|`.
pub const KERNEL_DOMAIN: f64 = 0.5;
pub const DEFAULT_SERIES_SWITCH: f64 = 0.1;
/// Taylor terms used below the switch; `0.1^24` is far below round-off.
const SERIES_TERMS: usize = 24;

/// φ and the related functions `Φ' = φ`, `Ψ = cφ − 2Φ` for fixed ε.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiFamily {
    pub eps: f64,
    /// Below this `|εc|` the Taylor series replaces the closed forms, which
    /// lose digits to cancellation.
    pub series_switch: f64,
}

impl PhiFamily {
    pub fn new(eps: f64) -> Self {
        Self { eps, series_switch: DEFAULT_SERIES_SWITCH }
    }

    fn w(&self, c: f64) -> Result<f64> {
        let w = self.eps * c;
        if w.abs() > KERNEL_DOMAIN || !w.is_finite() {
            return Err(Error::KernelDomain(w));
        }
        Ok(w)
    }

    /// `Σ_{k≥0} w^k / ((k + a)(k + b))`, or `Σ w^k / (k + a)` when `b` is `None`.
    fn series(w: f64, a: f64, b: Option<f64>) -> f64 {
        let mut acc = 0.0;
        for k in (0..SERIES_TERMS).rev() {
            let k = k as f64;
            let coeff = match b {
                Some(b) => 1.0 / ((k + a) * (k + b)),
                None => 1.0 / (k + a),
            };
            acc = acc * w + coeff;
        }
        acc
    }

    /// φ(c) = c² Σ_{k≥0} (εc)^k / (k + 2).
    pub fn phi(&self, c: f64) -> Result<f64> {
        let w = self.w(c)?;
        Ok(c * c * self.phi_shape(w))
    }

    fn phi_shape(&self, w: f64) -> f64 {
        if w.abs() < self.series_switch {
            Self::series(w, 2.0, None)
        } else {
            -((-w).ln_1p() + w) / (w * w)
        }
    }

    /// φ_c = c / (1 − εc).
    pub fn phi_c(&self, c: f64) -> Result<f64> {
        let w = self.w(c)?;
        Ok(c / (1.0 - w))
    }

    /// φ_cc = 1 / (1 − εc)².
    pub fn phi_cc(&self, c: f64) -> Result<f64> {
        let w = self.w(c)?;
        Ok(1.0 / ((1.0 - w) * (1.0 - w)))
    }

    /// Φ with Φ(0) = 0: c³ Σ_{k≥0} (εc)^k / ((k + 2)(k + 3)).
    pub fn big_phi(&self, c: f64) -> Result<f64> {
        let w = self.w(c)?;
        let shape = if w.abs() < self.series_switch {
            Self::series(w, 2.0, Some(3.0))
        } else {
            let l = (-w).ln_1p();
            ((1.0 - w) * l + w) / (w * w * w) - 0.5 / w
        };
        Ok(c * c * c * shape)
    }

    /// Ψ = cφ − 2Φ.
    pub fn psi(&self, c: f64) -> Result<f64> {
        Ok(c * self.phi(c)? - 2.0 * self.big_phi(c)?)
    }

    /// Ψ'' = c / (1 − εc)².
    pub fn psi2(&self, c: f64) -> Result<f64> {
        let w = self.w(c)?;
        Ok(c / ((1.0 - w) * (1.0 - w)))
    }

    /// Ψ''' = (1 + εc) / (1 − εc)³.
    pub fn psi3(&self, c: f64) -> Result<f64> {
        let w = self.w(c)?;
        Ok((1.0 + w) / ((1.0 - w) * (1.0 - w) * (1.0 - w)))
    }
}

/// Dense row-major `n × n` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Signed separation `ξ_i − ξ_j`; on periodic grids the nearest image,
/// wrapped into `[−P/2, P/2)`.
pub(crate) fn separation(grid: &Grid, i: usize, j: usize) -> f64 {
    let h = grid.spacing();
    let k = i as isize - j as isize;
    match grid.kind() {
        GridKind::Line => k as f64 * h,
        GridKind::Periodic => {
            let n = grid.n() as isize;
            let mut k = k.rem_euclid(n);
            if k >= n - n / 2 {
                k -= n;
            }
            k as f64 * h
        }
    }
}

/// `c(ξ_i, ξ_j) = (g_i − g_j)/(ξ_i − ξ_j)`, diagonal `g_ξ(ξ_i)`.
pub fn difference_quotient(g: &Field) -> Result<SquareMatrix> {
    let grid = *g.grid();
    let gx = spectral::derivative(g, 1)?;
    let v = g.values();
    let n = grid.n();
    let mut c = SquareMatrix::zeros(n);
    for i in 0..n {
        c.set(i, i, gx.values()[i]);
        for j in i + 1..n {
            let q = (v[i] - v[j]) / separation(&grid, i, j);
            c.set(i, j, q);
            c.set(j, i, q);
        }
    }
    Ok(c)
}

/// `Z_q(s) = Σ_{m≠0} (s + Pm)^{-q}` for `q = 1..=qmax` and `|s| ≤ P/2`.
pub(crate) fn lattice_sums(period: f64, s: f64, qmax: usize) -> Vec<f64> {
    const DIRECT: usize = 32;
    let p = period;
    let big = p * DIRECT as f64;
    let mut out = Vec::with_capacity(qmax);
    for q in 1..=qmax {
        let qi = q as i32;
        let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
        // Direct part, m = 1..DIRECT-1, both branches.
        let mut z = 0.0;
        for m in (1..DIRECT).rev() {
            let pm = p * m as f64;
            z += (pm + s).powi(-qi) + sign * (pm - s).powi(-qi);
        }
        // Euler-Maclaurin tail from m = DIRECT for each branch `(Pm + a)^{-q}`.
        let qf = q as f64;
        let em = |a: f64| {
            let x = big + a;
            let f0 = x.powi(-qi);
            let d1 = -qf * p * x.powi(-qi - 1);
            let d3 = -qf * (qf + 1.0) * (qf + 2.0) * p.powi(3) * x.powi(-qi - 3);
            let d5 = -qf * (qf + 1.0) * (qf + 2.0) * (qf + 3.0) * (qf + 4.0) * p.powi(5) * x.powi(-qi - 5);
            0.5 * f0 - d1 / 12.0 + d3 / 720.0 - d5 / 30240.0
        };
        z += em(s) + sign * em(-s);
        z += if q == 1 {
            -((big + s) / (big - s)).ln() / p
        } else {
            ((big + s).powi(1 - qi) + sign * (big - s).powi(1 - qi)) / (p * (qf - 1.0))
        };
        out.push(z);
    }
    out
}

const MAX_LATTICE_ORDER: usize = 64;

/// Far-image kernel data on a periodic grid: `Z_q` at every grid offset.
#[derive(Clone, Debug)]
struct LatticeTable {
    period: f64,
    /// `z[k * MAX_LATTICE_ORDER + (q - 1)]` for offset `k` (nearest image).
    z: Vec<f64>,
}

impl LatticeTable {
    fn new(grid: &Grid) -> Self {
        let n = grid.n();
        let mut z = Vec::with_capacity(n * MAX_LATTICE_ORDER);
        for k in 0..n {
            let s = separation(grid, k, 0);
            z.extend(lattice_sums(grid.length(), s, MAX_LATTICE_ORDER));
        }
        Self { period: grid.length(), z }
    }

    fn at(&self, k: usize) -> &[f64] {
        &self.z[k * MAX_LATTICE_ORDER..(k + 1) * MAX_LATTICE_ORDER]
    }
}

/// Reusable workspace for the φ-form right-hand side.
#[derive(Clone, Debug)]
pub(crate) struct GOperator {
    grid: Grid,
    phi: PhiFamily,
    rule: PvRule,
    lattice: Option<LatticeTable>,
    gx: Vec<f64>,
    flux: Vec<f64>,
}

impl GOperator {
    pub(crate) fn new(grid: Grid, eps: f64) -> Self {
        let lattice = (grid.is_periodic() && eps != 0.0).then(|| LatticeTable::new(&grid));
        let n = grid.n();
        Self { grid, phi: PhiFamily::new(eps), rule: PvRule::default(), lattice, gx: vec![0.0; n], flux: vec![0.0; n] }
    }

    /// Number of far-image series terms for the current field.
    fn image_terms(&self, g: &[f64]) -> Result<usize> {
        let Some(table) = &self.lattice else { return Ok(0) };
        let (lo, hi) = g.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        let rho = self.phi.eps.abs() * (hi - lo) / (0.5 * table.period);
        if rho >= 0.5 {
            return Err(Error::KernelDomain(rho));
        }
        if rho == 0.0 {
            return Ok(2);
        }
        let terms = (-37.0 / rho.ln()).ceil() as usize + 2;
        Ok(terms.clamp(2, MAX_LATTICE_ORDER))
    }

    /// Antisymmetric kernel `K(s, d)`: `s φ(d/s)` plus far images.
    #[inline]
    fn kernel(&self, i: usize, j: usize, d: f64, terms: usize) -> Result<f64> {
        let s = separation(&self.grid, i, j);
        let mut k = s * self.phi.phi(d / s)?;
        if let Some(table) = &self.lattice {
            let offset = (i + self.grid.n() - j) % self.grid.n();
            let z = table.at(offset);
            let x = self.phi.eps * d;
            // d² Σ_{p=2}^{terms} x^{p-2} Z_{p-1} / p
            let mut acc = 0.0;
            for p in (2..=terms).rev() {
                acc = acc * x + z[p - 2] / p as f64;
            }
            k += d * d * acc;
        }
        Ok(k)
    }

    /// `F(ξ_i) = Σ_j w g'_j K(ξ_i − ξ_j, g_i − g_j)`, the inner integral.
    pub(crate) fn inner_integral(&mut self, g: &[f64]) -> Result<&[f64]> {
        let n = self.grid.n();
        self.gx = spectral::derivative_values(&self.grid, g, 1);
        let terms = self.image_terms(g)?;
        let w = self.grid.weight();
        self.flux.iter_mut().for_each(|f| *f = 0.0);
        for i in 0..n {
            for j in i + 1..n {
                let k = self.kernel(i, j, g[i] - g[j], terms)?;
                self.flux[i] += w * self.gx[j] * k;
                self.flux[j] -= w * self.gx[i] * k;
            }
        }
        Ok(&self.flux)
    }

    /// Inner integral at a line point `x` outside `[-L, L]`, where `g = 0`.
    /// The flux decays only algebraically, so the outer derivative needs
    /// these values instead of zero padding.
    fn outside_flux(&self, g: &[f64], x: f64) -> Result<f64> {
        let w = self.grid.weight();
        let mut acc = 0.0;
        for (j, (&gj, &gxj)) in g.iter().zip(&self.gx).enumerate() {
            let s = x - self.grid.point(j);
            acc += w * gxj * s * self.phi.phi(-gj / s)?;
        }
        Ok(acc)
    }

    pub(crate) fn rhs(&mut self, g: &[f64], out: &mut [f64]) -> Result<()> {
        let eps = self.phi.eps;
        let hg = spectral::hilbert_values(&self.grid, g, self.rule);
        if eps == 0.0 {
            out.copy_from_slice(&hg);
            return Ok(());
        }
        self.inner_integral(g)?;
        let df = match self.grid.kind() {
            GridKind::Periodic => spectral::derivative_values(&self.grid, &self.flux, 1),
            GridKind::Line => {
                let h = self.grid.spacing();
                let l = self.grid.length();
                let ghost = |x: f64| self.outside_flux(g, x);
                let left = [ghost(-l - 2.0 * h)?, ghost(-l - h)?];
                let right = [ghost(l + h)?, ghost(l + 2.0 * h)?];
                spectral::derivative_with_ghosts(h, &self.flux, left, right)
            }
        };
        let scale = eps * eps / PI;
        for ((o, h), d) in out.iter_mut().zip(&hg).zip(&df) {
            *o = h - scale * d;
        }
        if let Some(index) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(())
    }
}

/// `N ε ‖g‖^{1/4} ‖g_ξξ‖^{3/4}`; the working regime requires `≤ 1/2`.
pub fn smallness(g: &Field, eps: f64) -> Result<f64> {
    let g2 = spectral::l2_norm(&spectral::derivative(g, 2)?);
    Ok(N_CONSTANT * eps.abs() * spectral::l2_norm(g).powf(0.25) * g2.powf(0.75))
}

pub const SMALLNESS_LIMIT: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct GState {
    pub t: f64,
    pub g: Field,
    pub eps: f64,
}

impl GState {
    /// Fails when the smallness certificate exceeds 1/2.
    pub fn new(g: Field, eps: f64) -> Result<Self> {
        if !eps.is_finite() {
            return Err(Error::InvalidArgument(format!("eps must be finite, got {eps}")));
        }
        let cert = smallness(&g, eps)?;
        if cert > SMALLNESS_LIMIT {
            return Err(Error::Smallness(format!("N‖εg‖^{{1/4}}‖εg_ξξ‖^{{3/4}} = {cert:.6} exceeds 1/2")));
        }
        Ok(Self { t: 0.0, g, eps })
    }

    pub fn grid(&self) -> &Grid {
        self.g.grid()
    }
}

/// φ-form right-hand side `H[g] − (ε²/π) ∂_ξ ∫ (ξ−ξ̃) g̃' φ(c) dξ̃`.
pub fn rhs_g_phi_form(state: &GState) -> Result<Field> {
    let mut op = GOperator::new(*state.grid(), state.eps);
    let mut out = vec![0.0; state.g.len()];
    op.rhs(state.g.values(), &mut out)?;
    Field::new(*state.grid(), out)
}

/// Expanded-form right-hand side
/// `H[g] + (ε²/π) ∫ φ_c(c) [ (g̃/s)(c − g̃') + g̃'(c − g') ] dξ̃`, `s = ξ − ξ̃`,
/// with the diagonal limit `φ_c(g') g g''/2`. Line grids only.
pub fn rhs_g_expanded_form(state: &GState) -> Result<Field> {
    let grid = *state.grid();
    if grid.kind() != GridKind::Line {
        return Err(Error::GridMismatch("the expanded form is implemented on the line".into()));
    }
    let g = state.g.values();
    let hg = spectral::hilbert_values(&grid, g, PvRule::default());
    if state.eps == 0.0 {
        return Field::new(grid, hg);
    }
    let phi = PhiFamily::new(state.eps);
    let g1 = spectral::derivative_values(&grid, g, 1);
    let g2 = spectral::derivative_values(&grid, g, 2);
    let n = grid.n();
    let w = grid.weight();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.5 * phi.phi_c(g1[i])? * g[i] * g2[i];
        for j in (0..n).filter(|&j| j != i) {
            let s = separation(&grid, i, j);
            let c = (g[i] - g[j]) / s;
            acc += phi.phi_c(c)? * (g[j] / s * (c - g1[j]) + g1[j] * (c - g1[i]));
        }
        out[i] = hg[i] + state.eps * state.eps / PI * w * acc;
    }
    Field::new(grid, out)
}

/// RK4 step of the φ-form flow.
pub fn step_g(state: &GState, dt: f64) -> Result<GState> {
    let mut op = GOperator::new(*state.grid(), state.eps);
    let mut rk = Rk4::new(state.g.len());
    let mut g = state.g.values().to_vec();
    rk.step(&mut g, dt, |x, o| op.rhs(x, o))?;
    Ok(GState { t: state.t + dt, g: Field::new(*state.grid(), g)?, eps: state.eps })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GRunOptions {
    pub dt: f64,
    pub sample_interval: f64,
    /// Stop once `‖g_ξξ‖` reaches this multiple of its initial value.
    pub stop_at_h2_factor: Option<f64>,
}

impl GRunOptions {
    pub fn new(dt: f64) -> Self {
        Self { dt, sample_interval: dt, stop_at_h2_factor: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GSample {
    pub t: f64,
    pub l2_g: f64,
    /// `‖g_ξξ‖`.
    pub h2semi_g: f64,
    /// `½ ε² A ‖g₀‖^{1/2} ‖g_ξξ‖^{5/2}`.
    pub bound_rhs: f64,
    /// Smallness certificate `N ε ‖g‖^{1/4} ‖g_ξξ‖^{3/4}`.
    pub cert: f64,
    /// Instantaneous `d/dt ‖g_ξξ‖ = ⟨g_ξξ, ∂_ξ² g_t⟩ / ‖g_ξξ‖`.
    pub rate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GStop {
    Completed,
    /// The smallness certificate exceeded 1/2.
    RegimeExit,
    H2FactorReached,
}

#[derive(Clone, Debug)]
pub struct GTrajectory {
    pub eps: f64,
    pub samples: Vec<GSample>,
    pub final_state: GState,
    pub stop: GStop,
    pub steps: usize,
    pub dt: f64,
}

impl GTrajectory {
    /// CSV with columns `t,l2_g,h2semi_g,bound_rhs,cert`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,l2_g,h2semi_g,bound_rhs,cert\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{:.10e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                s.t, s.l2_g, s.h2semi_g, s.bound_rhs, s.cert
            ));
        }
        out
    }

    /// First sample time with `‖g_ξξ‖ ≥ factor · ‖g₀ξξ‖`, linearly
    /// interpolated between samples.
    pub fn growth_time(&self, factor: f64) -> Option<f64> {
        let target = factor * self.samples.first()?.h2semi_g;
        let k = self.samples.iter().position(|s| s.h2semi_g >= target)?;
        if k == 0 {
            return Some(self.samples[0].t);
        }
        let (a, b) = (&self.samples[k - 1], &self.samples[k]);
        Some(a.t + (target - a.h2semi_g) / (b.h2semi_g - a.h2semi_g) * (b.t - a.t))
    }
}

fn sample(op: &mut GOperator, grid: &Grid, t: f64, g: &[f64], eps: f64, l2_0: f64) -> Result<GSample> {
    let w = grid.weight();
    let l2 = (w * g.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let g2 = spectral::derivative_values(grid, g, 2);
    let h2 = (w * g2.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let mut rhs = vec![0.0; g.len()];
    op.rhs(g, &mut rhs)?;
    let r2 = spectral::derivative_values(grid, &rhs, 2);
    let rate = if h2 > 0.0 { w * g2.iter().zip(&r2).map(|(a, b)| a * b).sum::<f64>() / h2 } else { 0.0 };
    Ok(GSample {
        t,
        l2_g: l2,
        h2semi_g: h2,
        bound_rhs: 0.5 * eps * eps * A_CONSTANT * l2_0.sqrt() * h2.powf(2.5),
        cert: N_CONSTANT * eps.abs() * l2.powf(0.25) * h2.powf(0.75),
        rate,
    })
}

/// RK4 integration of the φ-form flow to `t_end` with fixed step, stopping
/// early when the smallness certificate exceeds 1/2 or the optional
/// `‖g_ξξ‖` growth target is met.
pub fn integrate_g(state: &GState, t_end: f64, opts: &GRunOptions) -> Result<GTrajectory> {
    if !(t_end > state.t) || !(opts.dt > 0.0) {
        return Err(Error::InvalidArgument("integrate_g needs t_end > t and dt > 0".into()));
    }
    let grid = *state.grid();
    let steps = ((t_end - state.t) / opts.dt).round().max(1.0) as usize;
    let dt = (t_end - state.t) / steps as f64;
    let every = ((opts.sample_interval / dt).round() as usize).max(1);
    let mut op = GOperator::new(grid, state.eps);
    let mut rk = Rk4::new(state.g.len());
    let mut g = state.g.values().to_vec();
    let l2_0 = spectral::l2_norm(&state.g);
    let first = sample(&mut op, &grid, state.t, &g, state.eps, l2_0)?;
    let h2_0 = first.h2semi_g;
    let mut samples = vec![first];
    let mut stop = GStop::Completed;
    let mut taken = 0;
    for i in 1..=steps {
        rk.step(&mut g, dt, |x, o| op.rhs(x, o))?;
        taken = i;
        let t = if i == steps { t_end } else { state.t + i as f64 * dt };
        let growth_check = opts.stop_at_h2_factor.is_some();
        if i % every == 0 || i == steps || growth_check {
            let s = sample(&mut op, &grid, t, &g, state.eps, l2_0)?;
            let record = i % every == 0 || i == steps;
            if s.cert > SMALLNESS_LIMIT {
                samples.push(s);
                stop = GStop::RegimeExit;
                log::info!("g-flow left the small-data regime at t = {t:.4} (certificate {:.4})", s.cert);
                break;
            }
            if let Some(f) = opts.stop_at_h2_factor {
                if s.h2semi_g >= f * h2_0 {
                    samples.push(s);
                    stop = GStop::H2FactorReached;
                    break;
                }
            }
            if record {
                samples.push(s);
            }
        }
    }
    let t_final = samples.last().map_or(state.t, |s| s.t);
    let final_state = GState { t: t_final, g: Field::new(grid, g)?, eps: state.eps };
    Ok(GTrajectory { eps: state.eps, samples, final_state, stop, steps: taken, dt })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBudget {
    pub e0: f64,
    pub eps0: f64,
    pub k: f64,
    /// Largest `measured / bound` over the finite-difference rates
    /// (`≤ 1` means the bound held).
    pub worst_fd_ratio: f64,
    /// Largest `rate / bound` over the instantaneous rates.
    pub worst_rate_ratio: f64,
    pub violations: usize,
    pub max_l2_drift: f64,
}

/// Check `d/dt ‖g_ξξ‖ ≤ ½ ε² A ‖g₀‖^{1/2} ‖g_ξξ‖^{5/2}` along a trajectory,
/// both with centered differences of the sampled norms (bound evaluated
/// at the larger endpoint norm) and with the instantaneous rates.
pub fn energy_budget(traj: &GTrajectory) -> Result<EnergyBudget> {
    let first = traj.samples.first().ok_or_else(|| Error::InvalidArgument("empty trajectory".into()))?;
    let e0 = first.l2_g.powf(0.25) * first.h2semi_g.powf(0.75);
    let (eps0, k) = if e0 > 0.0 {
        (1.0 / (2.0 * 2.0_f64.sqrt() * N_CONSTANT * e0), 2.0 / (3.0 * A_CONSTANT * e0 * e0))
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let tol = 1e-12;
    let mut violations = 0;
    let mut worst_fd: f64 = 0.0;
    for w in traj.samples.windows(2) {
        let dt = w[1].t - w[0].t;
        if dt <= 0.0 {
            continue;
        }
        let measured = (w[1].h2semi_g - w[0].h2semi_g) / dt;
        let bound = w[0].bound_rhs.max(w[1].bound_rhs);
        if measured > bound + tol * w[1].h2semi_g.max(1.0) {
            violations += 1;
        }
        if bound > 0.0 {
            worst_fd = worst_fd.max(measured / bound);
        }
    }
    let mut worst_rate: f64 = 0.0;
    for s in &traj.samples {
        if s.rate > s.bound_rhs + tol * s.h2semi_g.max(1.0) {
            violations += 1;
        }
        if s.bound_rhs > 0.0 {
            worst_rate = worst_rate.max(s.rate / s.bound_rhs);
        }
    }
    let max_l2_drift =
        traj.samples.iter().map(|s| (s.l2_g - first.l2_g).abs() / first.l2_g.max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
    Ok(EnergyBudget { e0, eps0, k, worst_fd_ratio: worst_fd, worst_rate_ratio: worst_rate, violations, max_l2_drift })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub eps: f64,
    pub n: usize,
    pub dt: f64,
    pub times: Vec<f64>,
    /// `‖g_A − g_B‖_sup` at each checkpoint.
    pub errors: Vec<f64>,
    /// Largest `‖ε g_ξ‖` seen on either path.
    pub max_slope_cert: f64,
}

impl CrossValidation {
    pub fn final_error(&self) -> f64 {
        self.errors.last().copied().unwrap_or(0.0)
    }
}

/// Two routes to `g(t)` from `u0` on a periodic grid:
/// A evolves `u` with the Burgers-Hilbert solver and transforms `H[u(t)]`;
/// B transforms `H[u0]` and evolves the g-equation.
pub fn cross_validate(u0: &Field, eps: f64, t_end: f64, dt: f64, checkpoints: usize) -> Result<CrossValidation> {
    use crate::bh_solver::{self, BhState};
    use crate::coord_transform::forward_solve;
    if !u0.grid().is_periodic() {
        return Err(Error::GridMismatch("cross-validation runs on the periodic backend".into()));
    }
    if checkpoints == 0 || !(t_end > 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidArgument("cross_validate needs t_end > 0, dt > 0, checkpoints >= 1".into()));
    }
    let grid = *u0.grid();
    let steps_per = ((t_end / checkpoints as f64) / dt).round().max(1.0) as usize;
    let dt = t_end / (steps_per * checkpoints) as f64;
    let bh = BhState::new(u0.clone(), eps)?;
    let tp0 = forward_solve(&spectral::hilbert_transform(&bh.u)?, eps)?;
    let mut gstate = GState::new(tp0.g().clone(), eps)?;
    let mut max_cert = tp0.slope_cert();
    let mut ustate = bh;
    let mut times = vec![0.0];
    let mut errors = vec![0.0];
    let mut gop = GOperator::new(grid, eps);
    let mut grk = Rk4::new(grid.n());
    for _ in 0..checkpoints {
        for _ in 0..steps_per {
            ustate = bh_solver::step(&ustate, dt)?;
            let mut g = gstate.g.into_values();
            grk.step(&mut g, dt, |x, o| gop.rhs(x, o))?;
            gstate = GState { t: gstate.t + dt, g: Field::new(grid, g)?, eps };
        }
        let tp = forward_solve(&spectral::hilbert_transform(&ustate.u)?, eps).map_err(|e| {
            Error::Precondition(format!("transform lost at t = {:.4}: {e}", ustate.t))
        })?;
        let cert_b = eps.abs() * spectral::derivative(&gstate.g, 1)?.sup();
        max_cert = max_cert.max(tp.slope_cert()).max(cert_b);
        times.push(ustate.t);
        errors.push(tp.g().sup_distance(&gstate.g)?);
    }
    Ok(CrossValidation { eps, n: grid.n(), dt, times, errors, max_slope_cert: max_cert })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial_data::InitialData;

    fn line(n: usize, l: f64) -> Grid {
        Grid::line(n, l).unwrap()
    }

    #[test]
    fn phi_examples() {
        let f = PhiFamily::new(0.5);
        assert_eq!(f.phi(0.0).unwrap(), 0.0);
        assert_eq!(PhiFamily::new(0.0).phi(3.0).unwrap(), 4.5);
        // -(ln(0.5) + 0.5)/0.25
        let v = f.phi(1.0).unwrap();
        assert!((v - 0.772_588_722_239_781_2).abs() < 1e-15, "{v}");
        assert!(v <= 1.0);
        assert!(matches!(f.phi(1.5), Err(Error::KernelDomain(_))));
    }

    #[test]
    fn family_continuous_at_switch() {
        let series = PhiFamily { eps: 1.0, series_switch: 0.1 + 1e-9 };
        let closed = PhiFamily { eps: 1.0, series_switch: 0.1 - 1e-9 };
        for c in [0.1, -0.1] {
            for g in [PhiFamily::phi, PhiFamily::big_phi, PhiFamily::psi] {
                let (a, b) = (g(&series, c).unwrap(), g(&closed, c).unwrap());
                assert!((a - b).abs() <= 1e-12 * a.abs(), "c={c}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn derivatives_consistent() {
        // Φ' = φ, φ' = φ_c, Ψ'' and Ψ''' by centered differences.
        let f = PhiFamily::new(0.7);
        let h = 1e-4;
        for &c in &[-0.6, -0.2, 0.05, 0.3, 0.65] {
            let d = |g: &dyn Fn(f64) -> f64| (g(c + h) - g(c - h)) / (2.0 * h);
            let d2 = |g: &dyn Fn(f64) -> f64| (g(c + h) - 2.0 * g(c) + g(c - h)) / (h * h);
            assert!((d(&|x| f.big_phi(x).unwrap()) - f.phi(c).unwrap()).abs() < 1e-7);
            assert!((d(&|x| f.phi(x).unwrap()) - f.phi_c(c).unwrap()).abs() < 1e-7);
            assert!((d(&|x| f.phi_c(x).unwrap()) - f.phi_cc(c).unwrap()).abs() < 1e-7);
            assert!((d2(&|x| f.psi(x).unwrap()) - f.psi2(c).unwrap()).abs() < 1e-6);
            assert!((d(&|x| f.psi2(x).unwrap()) - f.psi3(c).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn lattice_sums_match_closed_forms() {
        let p = 2.0 * PI;
        for &s in &[-3.0, -1.0, -0.01, 0.2, 1.7, 3.1] {
            let z = lattice_sums(p, s, 3);
            let theta = PI * s / p;
            let z1 = (PI / p) / theta.tan() - 1.0 / s;
            let z2 = (PI / p).powi(2) / theta.sin().powi(2) - 1.0 / (s * s);
            assert!((z[0] - z1).abs() < 1e-13, "s={s}: {} vs {z1}", z[0]);
            assert!((z[1] - z2).abs() < 1e-12, "s={s}: {} vs {z2}", z[1]);
        }
        // Z_3(0) = 0 and Z_2(0) = 2ζ(2)/P².
        let z0 = lattice_sums(p, 0.0, 3);
        assert!(z0[0].abs() < 1e-16 && z0[2].abs() < 1e-16);
        assert!((z0[1] - 2.0 * PI * PI / 6.0 / (p * p)).abs() < 1e-14);
    }

    #[test]
    fn difference_quotient_properties() {
        let grid = line(101, 5.0);
        let z = difference_quotient(&Field::zeros(grid)).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        let lin = Field::from_fn(grid, |x| 0.3 * x).unwrap();
        let c = difference_quotient(&lin).unwrap();
        for i in 0..101 {
            for j in 0..101 {
                if i != j {
                    assert!((c.get(i, j) - 0.3).abs() < 1e-13);
                }
                assert_eq!(c.get(i, j), c.get(j, i));
            }
        }
    }

    #[test]
    fn trivial_right_hand_sides() {
        let grid = line(257, 12.0);
        let g = InitialData::gaussian(0.5, 1.0).sample(&grid).unwrap();
        let zero = GState::new(Field::zeros(grid), 0.1).unwrap();
        assert_eq!(rhs_g_phi_form(&zero).unwrap().sup(), 0.0);
        assert_eq!(rhs_g_expanded_form(&zero).unwrap().sup(), 0.0);
        let s0 = GState::new(g.clone(), 0.0).unwrap();
        let h = spectral::hilbert_transform(&g).unwrap();
        assert_eq!(rhs_g_phi_form(&s0).unwrap(), h);
        assert_eq!(rhs_g_expanded_form(&s0).unwrap(), h);
    }

    #[test]
    fn conservation_structure_exact() {
        for grid in [line(201, 10.0), Grid::periodic_2pi(64).unwrap()] {
            let g = if grid.is_periodic() {
                InitialData::sine().sample_dynamic(&grid).unwrap()
            } else {
                InitialData::gaussian(1.0, 1.0).sample(&grid).unwrap()
            };
            let st = GState::new(g.clone(), 0.1).unwrap();
            let r = rhs_g_phi_form(&st).unwrap();
            let dot = g.inner(&r).unwrap();
            assert!(dot.abs() < 1e-13, "{dot}");
        }
    }

    #[test]
    fn forms_agree_on_gaussian() {
        let grid = line(801, 15.0);
        let g = InitialData::gaussian(1.0, 1.0).sample(&grid).unwrap();
        let st = GState::new(g, 0.1).unwrap();
        let a = rhs_g_phi_form(&st).unwrap();
        let b = rhs_g_expanded_form(&st).unwrap();
        let nonlinear = a.sub(&spectral::hilbert_transform(&st.g).unwrap()).unwrap().sup();
        let diff = a.sup_distance(&b).unwrap();
        assert!(diff < 1e-5 * nonlinear, "diff {diff}, nonlinear size {nonlinear}");
    }

    /// `p.v. (1/π) ∫ [g̃ + ε(g − 2g̃)g̃' − ε²(g − g̃)g'g̃'] / (ξ − ξ̃ − ε(g − g̃)) dξ̃`,
    /// the equation written directly from the change of variables, summed
    /// with the odd-offset rule.
    fn raw_form(g: &Field, eps: f64) -> Vec<f64> {
        let grid = *g.grid();
        let v = g.values();
        let d = spectral::derivative(g, 1).unwrap();
        let d = d.values();
        let n = v.len();
        let h = grid.spacing();
        (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for j in (0..n).filter(|&j| (i as isize - j as isize) % 2 != 0) {
                    let s = grid.point(i) - grid.point(j);
                    let num = v[j] + eps * (v[i] - 2.0 * v[j]) * d[j] - eps * eps * (v[i] - v[j]) * d[i] * d[j];
                    acc += 2.0 * h / PI * num / (s - eps * (v[i] - v[j]));
                }
                acc
            })
            .collect()
    }

    #[test]
    fn phi_form_matches_raw_equation() {
        let eps = 0.2;
        let diffs: Vec<f64> = [401, 801]
            .iter()
            .map(|&n| {
                let grid = line(n, 15.0);
                let g = InitialData::gaussian(1.0, 1.0).sample(&grid).unwrap();
                let a = rhs_g_phi_form(&GState::new(g.clone(), eps).unwrap()).unwrap();
                a.sup_distance(&Field::new(grid, raw_form(&g, eps)).unwrap()).unwrap()
            })
            .collect();
        assert!(diffs[1] < 1e-7, "{diffs:?}");
        assert!(diffs[0] / diffs[1] > 12.0, "{diffs:?}");
    }

    #[test]
    fn linear_flow_is_rotation() {
        let grid = Grid::periodic_2pi(64).unwrap();
        let g0 = InitialData::sine().sample_dynamic(&grid).unwrap();
        let st = GState::new(g0.clone(), 0.0).unwrap();
        let traj = integrate_g(&st, 2.0, &GRunOptions::new(0.01)).unwrap();
        let exact = crate::bh_solver::exact_linear_solution(&g0, 2.0).unwrap();
        assert!(traj.final_state.g.sup_distance(&exact).unwrap() < 1e-9);
    }

    #[test]
    fn smallness_enforced() {
        let grid = line(257, 12.0);
        let g = InitialData::gaussian(5.0, 0.5).sample(&grid).unwrap();
        assert!(matches!(GState::new(g, 0.5), Err(Error::Smallness(_))));
    }
}
