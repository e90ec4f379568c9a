//! Batch drivers behind the command-line runner: breaking-time sweeps over
//! ε, the two-path cross-check of the transformed flow, and refinement
//! studies.

use crate::bh_solver::{self, BhState, BlowupCriterion, DetectionReason, DtPolicy};
use crate::error::{Error, Result};
use crate::fit::{log_log_fit, LineFit};
use crate::g_solver::{self, GState};
use crate::initial_data::InitialData;
use crate::spectral::{self, Field, Grid};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    Bh,
    Burgers,
}

impl SweepMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepMode::Bh => "bh",
            SweepMode::Burgers => "burgers",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub data: InitialData,
    pub n: usize,
    pub period: f64,
    /// Strictly decreasing, positive.
    pub eps_list: Vec<f64>,
    pub bh: bool,
    pub burgers: bool,
    pub dt_policy: DtPolicy,
    /// BH runs stop at `bh_horizon / ε²`.
    pub bh_horizon: f64,
    /// Burgers runs stop at `burgers_horizon / ε`.
    pub burgers_horizon: f64,
    pub slope_factor: f64,
    pub tail_threshold: f64,
    /// Inclusive ε-window `[lo, hi]` for the fits.
    pub fit_window: Option<(f64, f64)>,
    /// Worker threads; 1 runs sequentially.
    pub threads: usize,
}

/// `count` values from `start` to `end` in geometric progression.
pub fn geometric_eps(start: f64, end: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 || !(start > end && end > 0.0) {
        return Err(Error::InvalidArgument("geometric ε list needs start > end > 0 and count >= 2".into()));
    }
    let r = (end / start).powf(1.0 / (count - 1) as f64);
    let mut v: Vec<f64> = (0..count).map(|k| start * r.powi(k as i32)).collect();
    v[count - 1] = end;
    Ok(v)
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            data: InitialData::sine(),
            n: spectral::DEFAULT_PERIODIC_N,
            period: 2.0 * PI,
            eps_list: geometric_eps(0.5, 0.02, 8).expect("valid default"),
            bh: true,
            burgers: true,
            dt_policy: DtPolicy { max_dt: 0.05, ..DtPolicy::default() },
            bh_horizon: 100.0,
            burgers_horizon: 5.0,
            slope_factor: bh_solver::DEFAULT_SLOPE_FACTOR,
            tail_threshold: bh_solver::DEFAULT_TAIL_THRESHOLD,
            fit_window: None,
            threads: 1,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eps_list.is_empty() {
            return Err(Error::InvalidArgument("sweep needs at least one ε".into()));
        }
        if self.eps_list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidArgument("sweep ε values must be positive".into()));
        }
        if self.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument("sweep ε list must be strictly decreasing".into()));
        }
        if !self.bh && !self.burgers {
            return Err(Error::InvalidArgument("sweep needs the BH or the Burgers mode".into()));
        }
        if !(self.bh_horizon > 0.0 && self.burgers_horizon > 0.0) {
            return Err(Error::InvalidArgument("sweep horizons must be positive".into()));
        }
        if self.threads == 0 {
            return Err(Error::InvalidArgument("threads must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub eps: f64,
    pub mode: SweepMode,
    /// Detection time; `None` when censored.
    pub t_s: Option<f64>,
    pub detection_reason: Option<DetectionReason>,
    /// Neither breaking nor refusal before `t_max`.
    pub censored: bool,
    pub t_max: f64,
    pub n: usize,
    pub dt: f64,
    pub steps: usize,
    pub sup_ux: f64,
    pub tail_fraction: f64,
    /// Characteristics breaking time (Burgers rows).
    pub predicted: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    /// Sorted by mode, then by increasing ε.
    pub records: Vec<SweepRecord>,
    pub bh_fit: Option<LineFit>,
    pub burgers_fit: Option<LineFit>,
    /// Largest `|T_s / predicted − 1|` over uncensored Burgers rows.
    pub burgers_max_relative_error: Option<f64>,
    pub censored: usize,
}

impl SweepReport {
    pub fn records_for(&self, mode: SweepMode) -> impl Iterator<Item = &SweepRecord> {
        self.records.iter().filter(move |r| r.mode == mode)
    }

    /// One row per (mode, ε), censored rows included.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.10e}")).unwrap_or_default();
        let mut out = String::from(
            "eps,mode,t_s,detection_reason,censored,t_max,n,dt,steps,sup_ux,tail_fraction,predicted\n",
        );
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{:.10e},{},{:.10e},{},{:.10e},{:.10e},{}\n",
                r.eps,
                r.mode.as_str(),
                opt(r.t_s),
                r.detection_reason.map(|d| d.as_str()).unwrap_or("censored"),
                r.censored,
                r.t_max,
                r.n,
                r.dt,
                r.steps,
                r.sup_ux,
                r.tail_fraction,
                opt(r.predicted)
            ));
        }
        out
    }

    /// Two columns `log10(2πε) log10(T_s)` for the uncensored rows of `mode`.
    pub fn plot_data(&self, mode: SweepMode) -> String {
        let mut out = format!("# {} mode: log10(2*pi*eps) log10(T_s)\n", mode.as_str());
        for r in self.records_for(mode) {
            if let Some(t) = r.t_s {
                out.push_str(&format!("{:.10} {:.10}\n", (2.0 * PI * r.eps).log10(), t.log10()));
            }
        }
        out
    }
}

fn sweep_one(cfg: &SweepConfig, u0: &Field, eps: f64, mode: SweepMode) -> Result<SweepRecord> {
    let (state, t_max, predicted) = match mode {
        SweepMode::Bh => (BhState::new(u0.clone(), eps)?, cfg.bh_horizon / (eps * eps), None),
        SweepMode::Burgers => {
            let st = BhState::burgers(u0.clone(), eps)?;
            let pred = bh_solver::burgers_breaking_time(&st.u, eps)?;
            (st, cfg.burgers_horizon / eps, Some(pred))
        }
    };
    let criterion = BlowupCriterion::relative_to(&state.u, cfg.slope_factor, cfg.tail_threshold)?;
    let policy = DtPolicy { sample_interval: f64::INFINITY, ..cfg.dt_policy };
    let run = bh_solver::integrate_until(&state, t_max, &criterion, &policy)?;
    let last = run.samples.last().copied();
    let (sup_ux, tail) = match (&run.breaking, last) {
        (Some(b), _) => (b.sup_ux, b.tail_fraction),
        (None, Some(s)) => (s.sup_ux, s.tail_fraction),
        (None, None) => (f64::NAN, f64::NAN),
    };
    if run.breaking.is_none() {
        log::warn!("{} run at eps = {eps} reached t_max = {t_max:.4e} without breaking (censored)", mode.as_str());
    }
    Ok(SweepRecord {
        eps,
        mode,
        t_s: run.breaking.map(|b| b.time),
        detection_reason: run.breaking.map(|b| b.reason),
        censored: run.breaking.is_none(),
        t_max,
        n: cfg.n,
        dt: run.dt,
        steps: run.steps,
        sup_ux,
        tail_fraction: tail,
        predicted,
    })
}

fn fit_mode(records: &[SweepRecord], mode: SweepMode, window: Option<(f64, f64)>) -> Option<LineFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter(|r| r.mode == mode && !r.censored)
        .filter(|r| window.is_none_or(|(lo, hi)| r.eps >= lo && r.eps <= hi))
        .filter_map(|r| r.t_s.map(|t| (r.eps, t)))
        .unzip();
    log_log_fit(&xs, &ys)
}

/// Run every (ε, mode) job and fit `log T_s` against `log ε`. Censored runs
/// stay in the record list but are left out of the fits.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let grid = Grid::periodic(cfg.n, cfg.period)?;
    let u0 = cfg.data.sample_dynamic(&grid)?;
    let mut jobs = Vec::new();
    for &eps in &cfg.eps_list {
        if cfg.bh {
            jobs.push((eps, SweepMode::Bh));
        }
        if cfg.burgers {
            jobs.push((eps, SweepMode::Burgers));
        }
    }
    let run = |&(eps, mode): &(f64, SweepMode)| sweep_one(cfg, &u0, eps, mode);
    let mut records = if cfg.threads == 1 {
        jobs.iter().map(run).collect::<Result<Vec<_>>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(run).collect::<Result<Vec<_>>>())?
    };
    records.sort_by(|a, b| a.mode.cmp(&b.mode).then(a.eps.total_cmp(&b.eps)));
    let censored = records.iter().filter(|r| r.censored).count();
    if censored > 0 {
        log::warn!("{censored} censored run(s) excluded from the fits");
    }
    let burgers_max_relative_error = records
        .iter()
        .filter(|r| r.mode == SweepMode::Burgers)
        .filter_map(|r| Some((r.t_s? / r.predicted?.is_finite().then_some(r.predicted?)? - 1.0).abs()))
        .reduce(f64::max);
    Ok(SweepReport {
        bh_fit: fit_mode(&records, SweepMode::Bh, cfg.fit_window),
        burgers_fit: fit_mode(&records, SweepMode::Burgers, cfg.fit_window),
        burgers_max_relative_error,
        censored,
        records,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckConfig {
    pub data: InitialData,
    pub eps: f64,
    pub t_end: f64,
    /// `(n, dt)` pairs, coarse to fine.
    pub resolutions: Vec<(usize, f64)>,
    pub checkpoints: usize,
}

impl Default for CrosscheckConfig {
    fn default() -> Self {
        Self {
            data: InitialData::sine(),
            eps: 0.1,
            t_end: 5.0,
            resolutions: vec![(16, 0.1), (32, 0.05), (64, 0.025)],
            checkpoints: 5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckRow {
    pub n: usize,
    pub dt: f64,
    /// `‖g_A − g_B‖_sup` at `t_end`.
    pub error: f64,
    /// Largest `‖ε g_ξ‖_sup` seen on either path.
    pub max_cert: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckReport {
    pub eps: f64,
    pub t_end: f64,
    pub rows: Vec<CrosscheckRow>,
    /// Observed orders in `dt` between successive rows.
    pub orders: Vec<f64>,
}

impl CrosscheckReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,t_end,n,dt,error,max_cert\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{:.10e},{:.10e}\n", self.eps, self.t_end, r.n, r.dt, r.error, r.max_cert));
        }
        out
    }
}

fn orders_between(params: &[f64], errors: &[f64]) -> Vec<f64> {
    params
        .windows(2)
        .zip(errors.windows(2))
        .map(|(p, e)| (e[0] / e[1]).ln() / (p[0] / p[1]).ln())
        .collect()
}

pub fn run_crosscheck(cfg: &CrosscheckConfig) -> Result<CrosscheckReport> {
    if cfg.resolutions.is_empty() {
        return Err(Error::InvalidArgument("crosscheck needs at least one resolution".into()));
    }
    let rows = cfg
        .resolutions
        .iter()
        .map(|&(n, dt)| {
            let grid = Grid::periodic_2pi(n)?;
            let u0 = cfg.data.sample_dynamic(&grid)?;
            let cv = g_solver::cross_validate(&u0, cfg.eps, cfg.t_end, dt, cfg.checkpoints)?;
            Ok(CrosscheckRow { n, dt: cv.dt, error: cv.final_error(), max_cert: cv.max_slope_cert })
        })
        .collect::<Result<Vec<_>>>()?;
    let dts: Vec<f64> = rows.iter().map(|r| r.dt).collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.error).collect();
    Ok(CrosscheckReport { eps: cfg.eps, t_end: cfg.t_end, orders: orders_between(&dts, &errs), rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvergenceStudy {
    /// Step refinement of the u-flow; exact rotation when ε = 0, otherwise
    /// a run at a quarter of the finest step.
    BhTemporal,
    /// Grid refinement of the u-flow against the finest grid.
    BhSpatial,
    /// Difference of the two g right-hand-side forms under line refinement.
    GQuadrature,
}

impl ConvergenceStudy {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConvergenceStudy::BhTemporal => "bh-temporal",
            ConvergenceStudy::BhSpatial => "bh-spatial",
            ConvergenceStudy::GQuadrature => "g-quadrature",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "bh-temporal" => Ok(Self::BhTemporal),
            "bh-spatial" => Ok(Self::BhSpatial),
            "g-quadrature" => Ok(Self::GQuadrature),
            other => Err(Error::InvalidArgument(format!("unknown convergence study '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub study: ConvergenceStudy,
    pub data: InitialData,
    pub eps: f64,
    pub t_end: f64,
    /// Grid size for the temporal study.
    pub n: usize,
    /// Steps for the temporal study; the first entry is the fixed step of
    /// the spatial study.
    pub dts: Vec<f64>,
    /// Grid sizes for the spatial and quadrature studies.
    pub ns: Vec<usize>,
    /// Line half-width for the quadrature study.
    pub half_width: f64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            study: ConvergenceStudy::BhTemporal,
            data: InitialData::sine(),
            eps: 0.0,
            t_end: 2.0,
            n: 64,
            dts: vec![0.2, 0.1, 0.05, 0.025],
            ns: vec![16, 32, 64, 128],
            half_width: 15.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    /// `dt` or `n`.
    pub parameter: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub study: ConvergenceStudy,
    pub rows: Vec<ConvergenceRow>,
    /// Observed orders with respect to the refinement parameter (`dt`, or `1/n`).
    pub orders: Vec<f64>,
    pub floor: f64,
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("study,parameter,error\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{:.10e}\n", self.study.as_str(), r.parameter, r.error));
        }
        out
    }
}

fn run_bh_fixed(u0: &Field, eps: f64, t_end: f64, dt: f64) -> Result<Field> {
    let state = BhState::new(u0.clone(), eps)?;
    let never = BlowupCriterion::new(f64::MAX, f64::MAX)?;
    let policy = DtPolicy { sample_interval: f64::INFINITY, ..DtPolicy::fixed(dt) };
    let run = bh_solver::integrate_until(&state, t_end, &never, &policy)?;
    if let Some(b) = run.breaking {
        return Err(Error::Unstable { dt, bound: b.time });
    }
    Ok(run.final_state.u)
}

pub fn run_convergence(cfg: &ConvergenceConfig) -> Result<ConvergenceReport> {
    let rows: Vec<ConvergenceRow> = match cfg.study {
        ConvergenceStudy::BhTemporal => {
            let grid = Grid::periodic_2pi(cfg.n)?;
            let u0 = cfg.data.sample_dynamic(&grid)?;
            let finest = cfg.dts.iter().copied().fold(f64::INFINITY, f64::min);
            let reference = if cfg.eps == 0.0 {
                bh_solver::exact_linear_solution(&BhState::new(u0.clone(), 0.0)?.u, cfg.t_end)?
            } else {
                run_bh_fixed(&u0, cfg.eps, cfg.t_end, finest / 4.0)?
            };
            cfg.dts
                .iter()
                .map(|&dt| {
                    let u = run_bh_fixed(&u0, cfg.eps, cfg.t_end, dt)?;
                    Ok(ConvergenceRow { parameter: dt, error: u.sup_distance(&reference)? })
                })
                .collect::<Result<_>>()?
        }
        ConvergenceStudy::BhSpatial => {
            let finest = *cfg.ns.iter().max().ok_or_else(|| Error::InvalidArgument("empty n list".into()))?;
            let dt = *cfg.dts.first().ok_or_else(|| Error::InvalidArgument("empty dt list".into()))?;
            let run = |n: usize| -> Result<Field> {
                let grid = Grid::periodic_2pi(n)?;
                run_bh_fixed(&cfg.data.sample_dynamic(&grid)?, cfg.eps, cfg.t_end, dt)
            };
            let reference = run(finest)?;
            cfg.ns
                .iter()
                .filter(|&&n| n != finest)
                .map(|&n| {
                    let u = run(n)?;
                    let stride = finest / n;
                    let err = u
                        .values()
                        .iter()
                        .enumerate()
                        .map(|(j, v)| (v - reference.values()[j * stride]).abs())
                        .fold(0.0, f64::max);
                    Ok(ConvergenceRow { parameter: n as f64, error: err })
                })
                .collect::<Result<_>>()?
        }
        ConvergenceStudy::GQuadrature => cfg
            .ns
            .iter()
            .map(|&n| {
                let grid = Grid::line(n, cfg.half_width)?;
                let st = GState::new(cfg.data.sample(&grid)?, cfg.eps)?;
                let a = g_solver::rhs_g_phi_form(&st)?;
                let b = g_solver::rhs_g_expanded_form(&st)?;
                Ok(ConvergenceRow { parameter: n as f64, error: a.sup_distance(&b)? })
            })
            .collect::<Result<_>>()?,
    };
    let params: Vec<f64> = match cfg.study {
        ConvergenceStudy::BhTemporal => rows.iter().map(|r| r.parameter).collect(),
        ConvergenceStudy::BhSpatial => rows.iter().map(|r| 1.0 / r.parameter).collect(),
        ConvergenceStudy::GQuadrature => rows.iter().map(|r| 1.0 / (r.parameter - 1.0)).collect(),
    };
    let errors: Vec<f64> = rows.iter().map(|r| r.error).collect();
    Ok(ConvergenceReport {
        study: cfg.study,
        orders: orders_between(&params, &errors),
        floor: errors.iter().copied().fold(f64::INFINITY, f64::min),
        rows,
    })
}
