//! Numerical checks of the constants and inequalities behind the H²
//! energy estimate: the maximal function, the row norms of `c` and `c_ξ`,
//! the integrals `I, I₁, I₂, I₃` and the resulting a priori bounds.
//!
//! All ξ̃-integrals run over ℝ: a trapezoid sum over the line grid plus
//! the exterior (where `g̃ = 0`) integrated exactly in `τ = 1/(ξ − ξ̃)`
//! by Gauss-Legendre quadrature.

use crate::coord_transform::gn_check;
use crate::error::{Error, Result};
use crate::g_solver::{self, GState, PhiFamily};
use crate::initial_data::InitialData;
use crate::spectral::{self, Field, Grid};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Gagliardo-Nirenberg constant `√(8/3)`.
pub const N_CONSTANT: f64 = crate::coord_transform::GN_CONSTANT;
/// Maximal-operator bound `1 + √2`.
pub const M_CONSTANT: f64 = 1.0 + std::f64::consts::SQRT_2;
/// `48 + 128 M / 3`.
pub const A_CONSTANT: f64 = 48.0 + 128.0 * M_CONSTANT / 3.0;

const RELATIVE_SLACK: f64 = 1e-12;

fn require_line(grid: &Grid, what: &str) -> Result<()> {
    if grid.is_periodic() {
        return Err(Error::GridMismatch(format!("{what} is defined on the line backend")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaximalProfile {
    pub source: Field,
    pub values: Vec<f64>,
}

/// One-sided maximal function over grid-aligned intervals:
/// `g*(ξ_i) = max_j |∫_{ξ_j}^{ξ_i} |g_ξ|| / |ξ_i − ξ_j|`, with `|g_ξ(ξ_i)|`
/// as the zero-length limit. Integrals use trapezoid prefix sums.
pub fn maximal_function(gx: &Field) -> Result<MaximalProfile> {
    require_line(gx.grid(), "the maximal function")?;
    let h = gx.grid().spacing();
    let a: Vec<f64> = gx.values().iter().map(|v| v.abs()).collect();
    let n = a.len();
    let mut prefix = vec![0.0; n];
    for k in 1..n {
        prefix[k] = prefix[k - 1] + 0.5 * h * (a[k - 1] + a[k]);
    }
    let values = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| (prefix[i] - prefix[j]).abs() / ((i as f64 - j as f64).abs() * h))
                .fold(a[i], f64::max)
        })
        .collect();
    Ok(MaximalProfile { source: gx.clone(), values })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaximalCheck {
    /// `‖g*‖ / ‖g_ξ‖`.
    pub ratio: f64,
    pub bound_ok: bool,
}

pub fn maximal_bound_check(gx: &Field) -> Result<MaximalCheck> {
    let profile = maximal_function(gx)?;
    let denom = spectral::l2_norm(gx);
    if denom == 0.0 {
        return Err(Error::InvalidArgument("maximal bound check needs a nonzero field".into()));
    }
    let star = Field::new(*gx.grid(), profile.values)?;
    let ratio = spectral::l2_norm(&star) / denom;
    Ok(MaximalCheck { ratio, bound_ok: ratio <= M_CONSTANT * (1.0 + RELATIVE_SLACK) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub n: f64,
    pub m: f64,
    pub a: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3_prime: f64,
    pub a3_double_prime: f64,
    pub e0: f64,
    pub eps0: f64,
    pub k: f64,
}

pub fn constants_report(e0: f64) -> Result<ConstantsReport> {
    if !(e0 > 0.0) || !e0.is_finite() {
        return Err(Error::InvalidArgument(format!("E0 must be positive and finite, got {e0}")));
    }
    Ok(ConstantsReport {
        n: N_CONSTANT,
        m: M_CONSTANT,
        a: A_CONSTANT,
        a1: 32.0 / 3.0,
        a2: 64.0 * M_CONSTANT / 9.0,
        a3_prime: 64.0 * M_CONSTANT / 3.0,
        a3_double_prime: 64.0 / 3.0,
        e0,
        eps0: 1.0 / (2.0 * std::f64::consts::SQRT_2 * N_CONSTANT * e0),
        k: 2.0 / (3.0 * A_CONSTANT * e0 * e0),
    })
}

/// `E₀ = ‖g‖^{1/4} ‖g_ξξ‖^{3/4}`.
pub fn energy_scale(g: &Field) -> Result<f64> {
    Ok(spectral::l2_norm(g).powf(0.25) * spectral::l2_norm(&spectral::derivative(g, 2)?).powf(0.75))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(m);
    for k in 0..m {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=m {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

const TAIL_NODES: usize = 24;

/// Per-row ξ̃-integrals at a fixed ξ.
#[derive(Clone, Copy, Debug, Default)]
struct RowIntegrals {
    c2: f64,
    cxi2: f64,
    i: f64,
    i1: f64,
    i2: f64,
    i3: f64,
}

impl RowIntegrals {
    fn add(&mut self, w: f64, o: &RowIntegrals) {
        self.c2 += w * o.c2;
        self.cxi2 += w * o.cxi2;
        self.i += w * o.i;
        self.i1 += w * o.i1;
        self.i2 += w * o.i2;
        self.i3 += w * o.i3;
    }
}

/// Values of `g, g', g'', g'''` at ξ.
#[derive(Clone, Copy, Debug)]
struct Jet {
    g: f64,
    g1: f64,
    g2: f64,
    g3: f64,
}

/// Integrands at separation `s`, `c`, `c_ξ` with `g̃' = gt1`.
fn integrands(phi: &PhiFamily, at: &Jet, s: f64, c: f64, cxi: f64, gt1: f64) -> Result<RowIntegrals> {
    let psi2 = phi.psi2(c)?;
    Ok(RowIntegrals {
        c2: c * c,
        cxi2: cxi * cxi,
        i: at.g3 * gt1 * (s * phi.phi_cc(c)? * cxi * cxi + phi.phi_c(c)? * at.g2),
        i1: psi2 * cxi * at.g2 * at.g2,
        i2: psi2 * cxi * cxi * at.g2,
        i3: s * phi.psi3(c)? * cxi * cxi * cxi * at.g2,
    })
}

struct Integrator {
    grid: Grid,
    phi: PhiFamily,
    g: Vec<f64>,
    jets: Vec<Jet>,
    nodes: Vec<(f64, f64)>,
}

impl Integrator {
    fn new(g: &Field, eps: f64) -> Result<Self> {
        let grid = *g.grid();
        let d1 = spectral::derivative(g, 1)?;
        let d2 = spectral::derivative(g, 2)?;
        let d3 = spectral::derivative(g, 3)?;
        let jets = (0..grid.n())
            .map(|k| Jet { g: g.values()[k], g1: d1.values()[k], g2: d2.values()[k], g3: d3.values()[k] })
            .collect();
        Ok(Self { grid, phi: PhiFamily::new(eps), g: g.values().to_vec(), jets, nodes: gauss_legendre(TAIL_NODES) })
    }

    fn row(&self, i: usize) -> Result<RowIntegrals> {
        let at = self.jets[i];
        let h = self.grid.spacing();
        let mut row = RowIntegrals::default();
        for j in 0..self.grid.n() {
            let term = if j == i {
                integrands(&self.phi, &at, 0.0, at.g1, 0.5 * at.g2, at.g1)?
            } else {
                let s = g_solver::separation(&self.grid, i, j);
                let c = (at.g - self.g[j]) / s;
                integrands(&self.phi, &at, s, c, (at.g1 - c) / s, self.jets[j].g1)?
            };
            row.add(h, &term);
        }
        // Exterior: s ∈ (a, ∞) on the left, s ∈ (−∞, −a) on the right.
        let edge = self.grid.length() + 0.5 * h;
        let xi = self.grid.point(i);
        for (a, sign) in [(xi + edge, 1.0), (edge - xi, -1.0)] {
            let half = 0.5 / a;
            for &(x, w) in &self.nodes {
                let tau = sign * half * (1.0 + x);
                let s = 1.0 / tau;
                let c = at.g / s;
                let term = integrands(&self.phi, &at, s, c, (at.g1 - c) / s, 0.0)?;
                row.add(w * half * s * s, &term);
            }
        }
        Ok(row)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub eps: f64,
    pub i: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    /// `|I − (−5/2 I₁ + 3 I₂ − I₃)|`.
    pub identity_residual: f64,
    /// Residual relative to `max(|I|, |5/2 I₁|, |3 I₂|, |I₃|)`.
    pub identity_relative: f64,
    /// `A ‖g_ξ‖ ‖g_ξξ‖³`.
    pub i_bound: f64,
    pub i_bound_ok: bool,
    /// `max_ξ (∫ c² dξ̃)^{1/2}` and its bound `2 ‖g_ξ‖`.
    pub c_row_max: f64,
    pub c_row_bound: f64,
    pub c_row_ok: bool,
    /// `max_ξ (∫ c_ξ² dξ̃)^{1/2}` and its bound `(4/3) ‖g_ξξ‖`.
    pub cxi_row_max: f64,
    pub cxi_row_bound: f64,
    pub cxi_row_ok: bool,
    /// `ε² I / (2 ‖g_ξξ‖)`, the H² growth rate implied by `I`.
    pub h2_rate: f64,
    /// `½ ε² A ‖g‖^{1/2} ‖g_ξξ‖^{5/2}`.
    pub h2_rate_bound: f64,
    pub h2_rate_ok: bool,
}

/// Evaluate `I`, `I₁`, `I₂`, `I₃` and the row-norm inequalities for `g`
/// on a line grid. Requires the smallness condition.
pub fn estimate_suite(g: &Field, eps: f64) -> Result<EstimateReport> {
    require_line(g.grid(), "the estimate suite")?;
    GState::new(g.clone(), eps)?;
    let integ = Integrator::new(g, eps)?;
    let rows = (0..g.len()).map(|i| integ.row(i)).collect::<Result<Vec<_>>>()?;
    let h = g.grid().spacing();
    let mut total = RowIntegrals::default();
    for r in &rows {
        total.add(h, r);
    }
    let combo = -2.5 * total.i1 + 3.0 * total.i2 - total.i3;
    let scale = [total.i, 2.5 * total.i1, 3.0 * total.i2, total.i3].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let residual = (total.i - combo).abs();
    let l2 = spectral::l2_norm(g);
    let n1 = spectral::l2_norm(&spectral::derivative(g, 1)?);
    let n2 = spectral::l2_norm(&spectral::derivative(g, 2)?);
    let i_bound = A_CONSTANT * n1 * n2.powi(3);
    let c_row_max = rows.iter().map(|r| r.c2.sqrt()).fold(0.0, f64::max);
    let cxi_row_max = rows.iter().map(|r| r.cxi2.sqrt()).fold(0.0, f64::max);
    let slack = 1.0 + RELATIVE_SLACK;
    let h2_rate = if n2 > 0.0 { eps * eps * total.i / (2.0 * n2) } else { 0.0 };
    let h2_rate_bound = 0.5 * eps * eps * A_CONSTANT * l2.sqrt() * n2.powf(2.5);
    Ok(EstimateReport {
        eps,
        i: total.i,
        i1: total.i1,
        i2: total.i2,
        i3: total.i3,
        identity_residual: residual,
        identity_relative: if scale > 0.0 { residual / scale } else { 0.0 },
        i_bound,
        i_bound_ok: total.i.abs() <= i_bound * slack,
        c_row_max,
        c_row_bound: 2.0 * n1,
        c_row_ok: c_row_max <= 2.0 * n1 * slack,
        cxi_row_max,
        cxi_row_bound: 4.0 / 3.0 * n2,
        cxi_row_ok: cxi_row_max <= 4.0 / 3.0 * n2 * slack,
        h2_rate,
        h2_rate_bound,
        h2_rate_ok: h2_rate <= h2_rate_bound * slack + RELATIVE_SLACK,
    })
}

/// Seeded random-field campaign over all inequality checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub fields: usize,
    pub seed: u64,
    pub n: usize,
    pub half_width: f64,
    pub max_mode: u32,
    pub amplitude: f64,
    /// Fraction of the smallness limit used to pick ε per field.
    pub regime_fraction: f64,
    pub eps_cap: f64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self { fields: 100, seed: 1, n: 241, half_width: 12.0, max_mode: 6, amplitude: 1.0, regime_fraction: 0.9, eps_cap: 0.2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldCheck {
    pub seed: u64,
    pub eps: f64,
    /// `‖g_ξ‖_sup / (N ‖g‖^{1/4} ‖g_ξξ‖^{3/4})`.
    pub gn_ratio: f64,
    pub c_row_ratio: f64,
    pub cxi_row_ratio: f64,
    pub i_ratio: f64,
    pub maximal_ratio: f64,
    /// Measured `d/dt ‖g_ξξ‖` from the right-hand side over the bound.
    pub h2_rate_ratio: f64,
    pub identity_relative: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub constants: ConstantsReport,
    pub config: CampaignConfig,
    pub fields: Vec<FieldCheck>,
    pub failures: usize,
    pub worst_gn_ratio: f64,
    pub worst_c_row_ratio: f64,
    pub worst_cxi_row_ratio: f64,
    pub worst_i_ratio: f64,
    pub worst_maximal_ratio: f64,
    pub worst_h2_rate_ratio: f64,
}

fn check_field(cfg: &CampaignConfig, seed: u64) -> Result<FieldCheck> {
    let grid = Grid::line(cfg.n, cfg.half_width)?;
    let g = InitialData::random(seed, cfg.max_mode, cfg.amplitude).sample(&grid)?;
    let e0 = energy_scale(&g)?;
    let eps = (cfg.regime_fraction * g_solver::SMALLNESS_LIMIT / (N_CONSTANT * e0)).min(cfg.eps_cap);
    let gn = gn_check(&g)?;
    let est = estimate_suite(&g, eps)?;
    let gx = spectral::derivative(&g, 1)?;
    let maximal = maximal_bound_check(&gx)?;
    let rhs = g_solver::rhs_g_phi_form(&GState::new(g.clone(), eps)?)?;
    let g2 = spectral::derivative(&g, 2)?;
    let n2 = spectral::l2_norm(&g2);
    let rate = g2.inner(&spectral::derivative(&rhs, 2)?)? / n2;
    let h2_rate_ratio = rate / est.h2_rate_bound;
    let passed = gn.satisfied
        && est.c_row_ok
        && est.cxi_row_ok
        && est.i_bound_ok
        && est.h2_rate_ok
        && maximal.bound_ok
        && h2_rate_ratio <= 1.0;
    Ok(FieldCheck {
        seed,
        eps,
        gn_ratio: gn.lhs / gn.rhs,
        c_row_ratio: est.c_row_max / est.c_row_bound,
        cxi_row_ratio: est.cxi_row_max / est.cxi_row_bound,
        i_ratio: est.i.abs() / est.i_bound,
        maximal_ratio: maximal.ratio / M_CONSTANT,
        h2_rate_ratio,
        identity_relative: est.identity_relative,
        passed,
    })
}

/// Run every inequality check on `cfg.fields` seeded random line fields.
/// Ratios are measured over bound, so each must stay at or below 1.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignReport> {
    let fields = (0..cfg.fields as u64)
        .into_par_iter()
        .map(|k| check_field(cfg, cfg.seed.wrapping_add(k)))
        .collect::<Result<Vec<_>>>()?;
    let worst = |f: fn(&FieldCheck) -> f64| fields.iter().map(f).fold(f64::MIN, f64::max);
    Ok(CampaignReport {
        constants: constants_report(1.0)?,
        config: cfg.clone(),
        failures: fields.iter().filter(|f| !f.passed).count(),
        worst_gn_ratio: worst(|f| f.gn_ratio),
        worst_c_row_ratio: worst(|f| f.c_row_ratio),
        worst_cxi_row_ratio: worst(|f| f.cxi_row_ratio),
        worst_i_ratio: worst(|f| f.i_ratio),
        worst_maximal_ratio: worst(|f| f.maximal_ratio),
        worst_h2_rate_ratio: worst(|f| f.h2_rate_ratio),
        fields,
    })
}
