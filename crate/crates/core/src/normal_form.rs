//! The dependent-variable normal form `v = u + (ε/2)|∂x|(h²)`, `h = H[u]`,
//! `|∂x| = H∂x`, its evolution residual along Burgers-Hilbert trajectories,
//! and its agreement with the coordinate transform.

use crate::bh_solver::BhState;
use crate::coord_transform::{forward_solve, inverse_eval, TransformPair};
use crate::error::{Error, Result};
use crate::fit::{log_log_fit, LineFit};
use crate::spectral::{self, Field};
use serde::{Deserialize, Serialize};

/// Coarsest snapshot spacing accepted by [`nf_residual`].
pub const MAX_SAMPLE_DT: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
pub struct NfPair {
    pub u: Field,
    pub v: Field,
    pub eps: f64,
}

/// `|∂x| f = H[f_x]`.
fn abs_dx(f: &Field) -> Result<Field> {
    spectral::hilbert_transform(&spectral::derivative(f, 1)?)
}

fn dealiased_product(a: &Field, b: &Field) -> Result<Field> {
    Ok(spectral::dealias(&a.zip_with(b, |x, y| x * y)?))
}

pub fn nf_forward(u: &Field, eps: f64) -> Result<NfPair> {
    if !u.grid().is_periodic() {
        return Err(Error::GridMismatch("the normal form is evaluated on periodic grids".into()));
    }
    let h = spectral::hilbert_transform(u)?;
    let b = abs_dx(&dealiased_product(&h, &h)?)?;
    let v = u.add(&b.scale(0.5 * eps)?)?;
    Ok(NfPair { u: u.clone(), v, eps })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NfResidualSample {
    pub t: f64,
    /// `v_t + (ε²/2)|∂x|[h |∂x|(u²)] − H[v]`.
    pub residual_sup: f64,
    pub residual_l2: f64,
    /// `u_t − H[u]`, the balance without the transformation.
    pub naive_sup: f64,
    pub naive_l2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NfResidualReport {
    pub eps: f64,
    pub dt_sample: f64,
    pub samples: Vec<NfResidualSample>,
}

impl NfResidualReport {
    pub fn max_residual(&self) -> f64 {
        self.samples.iter().map(|s| s.residual_sup).fold(0.0, f64::max)
    }

    pub fn min_naive(&self) -> f64 {
        self.samples.iter().map(|s| s.naive_sup).fold(f64::INFINITY, f64::min)
    }

    /// Columns `eps,t,residual_sup,residual_l2,naive_sup,naive_l2`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,t,residual_sup,residual_l2,naive_sup,naive_l2\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}\n",
                self.eps, s.t, s.residual_sup, s.residual_l2, s.naive_sup, s.naive_l2
            ));
        }
        out
    }
}

fn time_derivative(f: [&Field; 5], dt: f64) -> Result<Field> {
    let [a, b, _, d, e] = f;
    let num = a.sub(e)?.add(&d.sub(b)?.scale(8.0)?)?;
    num.scale(1.0 / (12.0 * dt))
}

/// Residual of the normal-form equation at every interior snapshot, with
/// `v_t` from fourth-order centered differences of stored snapshots.
/// Snapshots must be uniformly spaced by at most [`MAX_SAMPLE_DT`].
pub fn nf_residual(snapshots: &[BhState], eps: f64) -> Result<NfResidualReport> {
    if snapshots.len() < 5 {
        return Err(Error::InvalidArgument("normal-form residual needs at least 5 snapshots".into()));
    }
    let dt = snapshots[1].t - snapshots[0].t;
    let uniform = snapshots.windows(2).all(|w| ((w[1].t - w[0].t) - dt).abs() <= 1e-9 * dt.abs().max(1.0));
    if !(dt > 0.0) || dt > MAX_SAMPLE_DT * (1.0 + 1e-12) || !uniform {
        return Err(Error::InvalidArgument(format!(
            "insufficient sampling: snapshots must be uniform with spacing <= {MAX_SAMPLE_DT} (got {dt})"
        )));
    }
    let us: Vec<&Field> = snapshots.iter().map(|s| &s.u).collect();
    let vs = us.iter().map(|u| nf_forward(u, eps).map(|p| p.v)).collect::<Result<Vec<_>>>()?;
    let mut samples = Vec::with_capacity(snapshots.len() - 4);
    for k in 2..snapshots.len() - 2 {
        let u = us[k];
        let v_t = time_derivative([&vs[k - 2], &vs[k - 1], &vs[k], &vs[k + 1], &vs[k + 2]], dt)?;
        let h = spectral::hilbert_transform(u)?;
        let inner = abs_dx(&dealiased_product(u, u)?)?;
        let correction = abs_dx(&dealiased_product(&h, &inner)?)?.scale(0.5 * eps * eps)?;
        let r = v_t.add(&correction)?.sub(&spectral::hilbert_transform(&vs[k])?)?;
        let u_t = time_derivative([us[k - 2], us[k - 1], us[k], us[k + 1], us[k + 2]], dt)?;
        let naive = u_t.sub(&h)?;
        samples.push(NfResidualSample {
            t: snapshots[k].t,
            residual_sup: r.sup(),
            residual_l2: spectral::l2_norm(&r),
            naive_sup: naive.sup(),
            naive_l2: spectral::l2_norm(&naive),
        });
    }
    Ok(NfResidualReport { eps, dt_sample: dt, samples })
}

/// Solve `g = h − ε h h_x` for `h` by characteristics, i.e. the inverse
/// coordinate transform.
pub fn nf_invert_ode(g: &Field, eps: f64) -> Result<Field> {
    inverse_eval(&TransformPair::new(g.clone(), eps)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub eps: f64,
    /// `‖forward_solve(h, ε).g − (h − ε h h_x)‖_sup`.
    pub difference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    /// Fit of `log difference` against `log ε` over rows with `ε ≠ 0`.
    pub fit: Option<LineFit>,
}

pub fn compare_transforms(h: &Field, eps_list: &[f64]) -> Result<CompareReport> {
    let hx = spectral::derivative(h, 1)?;
    let hhx = h.zip_with(&hx, |a, b| a * b)?;
    let rows = eps_list
        .iter()
        .map(|&eps| {
            let g_coord = forward_solve(h, eps)?;
            let g_nf = h.sub(&hhx.scale(eps)?)?;
            Ok(CompareRow { eps, difference: g_coord.g().sup_distance(&g_nf)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        rows.iter().filter(|r| r.eps != 0.0).map(|r| (r.eps.abs(), r.difference)).unzip();
    Ok(CompareReport { fit: log_log_fit(&xs, &ys), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bh_solver;
    use crate::initial_data::InitialData;
    use crate::spectral::Grid;

    fn grid() -> Grid {
        Grid::periodic_2pi(64).unwrap()
    }

    #[test]
    fn trivial_forward_cases() {
        let u = InitialData::sine().sample_dynamic(&grid()).unwrap();
        assert_eq!(nf_forward(&u, 0.0).unwrap().v, u);
        assert_eq!(nf_forward(&Field::zeros(grid()), 0.3).unwrap().v.sup(), 0.0);
    }

    #[test]
    fn cosine_mode_by_mode() {
        let (a, eps) = (0.8, 0.3);
        let u = Field::from_fn(grid(), |x| a * x.cos()).unwrap();
        let v = nf_forward(&u, eps).unwrap().v;
        let oracle = Field::from_fn(grid(), |x| a * x.cos() - 0.5 * eps * a * a * (2.0 * x).cos()).unwrap();
        assert!(v.sup_distance(&oracle).unwrap() < 1e-14);
    }

    #[test]
    fn hilbert_of_normal_form_is_quadratic_ode() {
        // H[v] = h − ε h h_x for v from u, h = H[u].
        let u = InitialData::MultiMode {
            modes: vec![
                crate::initial_data::Mode { mode: 1, amplitude: 1.0, phase: 0.2 },
                crate::initial_data::Mode { mode: 3, amplitude: 0.3, phase: 1.0 },
            ],
        }
        .sample_dynamic(&grid())
        .unwrap();
        let eps = 0.2;
        let v = nf_forward(&u, eps).unwrap().v;
        let h = spectral::hilbert_transform(&u).unwrap();
        let hx = spectral::derivative(&h, 1).unwrap();
        let expect = h.sub(&h.zip_with(&hx, |a, b| eps * a * b).unwrap()).unwrap();
        let g = spectral::hilbert_transform(&v).unwrap();
        assert!(g.sup_distance(&expect).unwrap() < 1e-13);
    }

    #[test]
    fn residual_removes_first_order_term() {
        let u0 = InitialData::sine().sample_dynamic(&Grid::periodic_2pi(128).unwrap()).unwrap();
        let mut ratios = Vec::new();
        for eps in [0.1, 0.05] {
            let st = bh_solver::BhState::new(u0.clone(), eps).unwrap();
            let snaps = bh_solver::snapshots(&st, 0.2, 0.002, 5).unwrap();
            let rep = nf_residual(&snaps, eps).unwrap();
            assert!(rep.max_residual() < 1e-7, "{}", rep.max_residual());
            ratios.push(rep.min_naive() / eps);
        }
        // naive residual is ε u u_x: scales with ε
        assert!((ratios[0] / ratios[1] - 1.0).abs() < 0.1, "{ratios:?}");
    }

    #[test]
    fn linear_case_is_differencing_error_only() {
        let u0 = InitialData::sine().sample_dynamic(&grid()).unwrap();
        let st = bh_solver::BhState::new(u0, 0.0).unwrap();
        let snaps = bh_solver::snapshots(&st, 0.1, 0.01, 1).unwrap();
        let rep = nf_residual(&snaps, 0.0).unwrap();
        // (dt⁴/30)·|v^{(5)}| with unit-frequency rotation, plus RK4 error
        assert!(rep.max_residual() < 1e-9, "{}", rep.max_residual());
    }

    #[test]
    fn sampling_is_checked() {
        let u0 = InitialData::sine().sample_dynamic(&grid()).unwrap();
        let st = bh_solver::BhState::new(u0, 0.1).unwrap();
        let coarse = bh_solver::snapshots(&st, 0.5, 0.05, 1).unwrap();
        assert!(matches!(nf_residual(&coarse, 0.1), Err(Error::InvalidArgument(_))));
        assert!(nf_residual(&coarse[..3], 0.1).is_err());
    }

    #[test]
    fn invert_ode_cases() {
        let g = InitialData::sine().sample_dynamic(&grid()).unwrap();
        assert_eq!(nf_invert_ode(&g, 0.0).unwrap(), g);
        let mut scaled = Vec::new();
        for eps in [0.1, 0.05, 0.025] {
            let h = nf_invert_ode(&g, eps).unwrap();
            let hx = spectral::derivative(&h, 1).unwrap();
            let r = g.sub(&h).unwrap().add(&h.zip_with(&hx, |a, b| eps * a * b).unwrap()).unwrap();
            scaled.push(r.sup() / (eps * eps));
        }
        assert!(scaled.iter().all(|s| *s < 2.0), "{scaled:?}");
        assert!((scaled[2] / scaled[0] - 1.0).abs() < 0.2, "{scaled:?}");
    }

    #[test]
    fn compare_transforms_slope() {
        let h = spectral::hilbert_transform(&InitialData::sine().sample_dynamic(&grid()).unwrap()).unwrap();
        let rep = compare_transforms(&h, &[0.0, 0.1, 0.05, 0.025, 0.0125]).unwrap();
        assert_eq!(rep.rows[0].difference, 0.0);
        let fit = rep.fit.unwrap();
        assert_eq!(fit.points, 4);
        assert!((fit.slope - 2.0).abs() < 0.1, "{fit:?}");
        let zero = compare_transforms(&Field::zeros(grid()), &[0.1, 0.05]).unwrap();
        assert!(zero.rows.iter().all(|r| r.difference == 0.0));
    }
}
