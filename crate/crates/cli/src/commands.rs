//! One driver per experiment. Each writes its data files through the
//! [`Reporter`] and returns a JSON summary for the metadata.

use crate::config::{Experiment, Model, RunConfig};
use crate::error::CliResult;
use crate::report::Reporter;
use bhlab::analysis::{self, CampaignConfig};
use bhlab::bh_solver::{self, BhState, BlowupCriterion, DtPolicy};
use bhlab::coord_transform;
use bhlab::experiments::{self, ConvergenceConfig, CrosscheckConfig, SweepConfig, SweepMode};
use bhlab::g_solver::{self, GRunOptions, GState};
use bhlab::normal_form;
use bhlab::spectral;
use serde_json::{json, Value};

pub fn run(cfg: &RunConfig, rep: &mut Reporter) -> CliResult<Value> {
    match cfg.experiment {
        Experiment::Simulate => simulate(cfg, rep),
        Experiment::Sweep => sweep(cfg, rep),
        Experiment::Crosscheck => crosscheck(cfg, rep),
        Experiment::Convergence => convergence(cfg, rep),
        Experiment::Constants => constants(cfg, rep),
        Experiment::TransformDemo => transform_demo(cfg, rep),
    }
}

fn dt_policy(cfg: &RunConfig) -> DtPolicy {
    DtPolicy { dt: cfg.dt, cfl: cfg.cfl, max_dt: cfg.max_dt, sample_interval: cfg.sample_interval }
}

fn simulate(cfg: &RunConfig, rep: &mut Reporter) -> CliResult<Value> {
    let grid = cfg.grid()?;
    let data = cfg.initial_data()?;
    if cfg.model == Model::G {
        return simulate_g(cfg, rep, data.sample_dynamic(&grid)?);
    }
    let u0 = data.sample_dynamic(&grid)?;
    let state = match cfg.model {
        Model::Burgers => BhState::burgers(u0, cfg.eps)?,
        _ => BhState::new(u0, cfg.eps)?,
    };
    let criterion = BlowupCriterion::relative_to(&state.u, cfg.slope_factor, cfg.tail_threshold)?;
    let run = bh_solver::integrate_until(&state, cfg.t_end, &criterion, &dt_policy(cfg))?;
    rep.write("samples.csv", &run.samples_csv())?;
    rep.write("final.csv", &run.final_state.u.to_csv())?;
    let l2_0 = spectral::l2_norm(&state.u);
    let l2_1 = spectral::l2_norm(&run.final_state.u);
    let mut summary = json!({
        "model": cfg.model.as_str(),
        "eps": cfg.eps,
        "dt": run.dt,
        "steps": run.steps,
        "t_final": run.final_state.t,
        "l2_relative_drift": (l2_1 - l2_0).abs() / l2_0,
        "breaking": run.breaking,
    });
    if cfg.model == Model::Burgers {
        summary["predicted_breaking"] = json!(bh_solver::burgers_breaking_time(&state.u, cfg.eps)?);
    }
    if cfg.nf_residual && cfg.model == Model::Bh {
        let dt = run.dt.min(normal_form::MAX_SAMPLE_DT);
        let t_end = run.final_state.t;
        let snaps = bh_solver::snapshots(&state, t_end, dt, 1)?;
        let nf = normal_form::nf_residual(&snaps, cfg.eps)?;
        rep.write("nf_residual.csv", &nf.to_csv())?;
        summary["nf_max_residual"] = json!(nf.max_residual());
        summary["nf_min_naive"] = json!(nf.min_naive());
    }
    Ok(summary)
}

fn simulate_g(cfg: &RunConfig, rep: &mut Reporter, g0: bhlab::Field) -> CliResult<Value> {
    let state = GState::new(g0, cfg.eps)?;
    let opts = GRunOptions {
        dt: cfg.dt.unwrap_or(cfg.max_dt),
        sample_interval: cfg.sample_interval,
        stop_at_h2_factor: cfg.h2_factor,
    };
    let traj = g_solver::integrate_g(&state, cfg.t_end, &opts)?;
    rep.write("trajectory.csv", &traj.to_csv())?;
    rep.write("final.csv", &traj.final_state.g.to_csv())?;
    let budget = g_solver::energy_budget(&traj)?;
    Ok(json!({
        "model": "g",
        "eps": cfg.eps,
        "dt": traj.dt,
        "steps": traj.steps,
        "t_final": traj.final_state.t,
        "stop": format!("{:?}", traj.stop),
        "growth_time": cfg.h2_factor.and_then(|f| traj.growth_time(f)),
        "energy_budget": budget,
    }))
}

fn sweep(cfg: &RunConfig, rep: &mut Reporter) -> CliResult<Value> {
    let sc = SweepConfig {
        data: cfg.initial_data()?,
        n: cfg.n,
        period: cfg.period,
        eps_list: cfg.eps_list.clone(),
        bh: cfg.sweep_bh,
        burgers: cfg.sweep_burgers,
        dt_policy: dt_policy(cfg),
        bh_horizon: cfg.bh_horizon,
        burgers_horizon: cfg.burgers_horizon,
        slope_factor: cfg.slope_factor,
        tail_threshold: cfg.tail_threshold,
        fit_window: cfg.fit_window,
        threads: cfg.threads,
    };
    let report = experiments::run_sweep(&sc)?;
    rep.write("sweep.csv", &report.to_csv())?;
    if cfg.sweep_bh {
        rep.write("plot_bh.dat", &report.plot_data(SweepMode::Bh))?;
    }
    if cfg.sweep_burgers {
        rep.write("plot_burgers.dat", &report.plot_data(SweepMode::Burgers))?;
    }
    Ok(json!({
        "bh_fit": report.bh_fit,
        "burgers_fit": report.burgers_fit,
        "burgers_max_relative_error": report.burgers_max_relative_error,
        "censored": report.censored,
        "runs": report.records.len(),
    }))
}

fn crosscheck(cfg: &RunConfig, rep: &mut Reporter) -> CliResult<Value> {
    let cc = CrosscheckConfig {
        data: cfg.initial_data()?,
        eps: cfg.eps,
        t_end: cfg.t_end,
        resolutions: cfg.resolutions.clone(),
        checkpoints: cfg.checkpoints,
    };
    let report = experiments::run_crosscheck(&cc)?;
    rep.write("crosscheck.csv", &report.to_csv())?;
    Ok(json!({ "rows": report.rows, "orders": report.orders }))
}

fn convergence(cfg: &RunConfig, rep: &mut Reporter) -> CliResult<Value> {
    let cc = ConvergenceConfig {
        study: cfg.study,
        data: cfg.initial_data()?,
        eps: cfg.eps,
        t_end: cfg.t_end,
        n: cfg.n,
        dts: cfg.dts.clone(),
        ns: cfg.ns.clone(),
        half_width: cfg.half_width,
    };
    let report = experiments::run_convergence(&cc)?;
    rep.write("convergence.csv", &report.to_csv())?;
    Ok(json!({ "study": cfg.study.as_str(), "rows": report.rows, "orders": report.orders, "floor": report.floor }))
}

fn constants(cfg: &RunConfig, rep: &mut Reporter) -> CliResult<Value> {
    let report = analysis::constants_report(cfg.e0)?;
    rep.write_json("constants.json", &report)?;
    let mut summary = json!({ "constants": report });
    if cfg.campaign {
        let c = &cfg.campaign_settings;
        let cc = CampaignConfig {
            fields: c.fields,
            seed: cfg.seed,
            n: c.n,
            half_width: c.half_width,
            max_mode: c.max_mode,
            amplitude: c.amplitude,
            regime_fraction: c.regime_fraction,
            eps_cap: c.eps_cap,
        };
        let campaign = analysis::run_campaign(&cc)?;
        let mut csv = String::from(
            "seed,eps,gn_ratio,c_row_ratio,cxi_row_ratio,i_ratio,maximal_ratio,h2_rate_ratio,identity_relative,passed\n",
        );
        for f in &campaign.fields {
            csv.push_str(&format!(
                "{},{},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{}\n",
                f.seed,
                f.eps,
                f.gn_ratio,
                f.c_row_ratio,
                f.cxi_row_ratio,
                f.i_ratio,
                f.maximal_ratio,
                f.h2_rate_ratio,
                f.identity_relative,
                f.passed
            ));
        }
        rep.write("campaign.csv", &csv)?;
        summary["campaign"] = json!({
            "fields": campaign.fields.len(),
            "failures": campaign.failures,
            "worst_gn_ratio": campaign.worst_gn_ratio,
            "worst_c_row_ratio": campaign.worst_c_row_ratio,
            "worst_cxi_row_ratio": campaign.worst_cxi_row_ratio,
            "worst_i_ratio": campaign.worst_i_ratio,
            "worst_maximal_ratio": campaign.worst_maximal_ratio,
            "worst_h2_rate_ratio": campaign.worst_h2_rate_ratio,
        });
    }
    Ok(summary)
}

fn transform_demo(cfg: &RunConfig, rep: &mut Reporter) -> CliResult<Value> {
    let grid = cfg.grid()?;
    let h = cfg.initial_data()?.sample_dynamic(&grid)?;
    let hx_sup = spectral::derivative(&h, 1)?.sup();
    let tp = coord_transform::forward_solve(&h, cfg.eps)?;
    let back = coord_transform::inverse_eval(&tp)?;
    let mut csv = String::from("xi,g,x_of_xi,h,h_round_trip\n");
    for (j, xi) in grid.points().iter().enumerate() {
        csv.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            xi,
            tp.g().values()[j],
            tp.x_of_xi()[j],
            h.values()[j],
            back.values()[j]
        ));
    }
    rep.write("transform.csv", &csv)?;
    let norms = coord_transform::norm_transfer(&tp)?;
    let compare = normal_form::compare_transforms(&h, &cfg.eps_list)?;
    let mut ccsv = String::from("eps,difference\n");
    for r in &compare.rows {
        ccsv.push_str(&format!("{},{:.10e}\n", r.eps, r.difference));
    }
    rep.write("compare.csv", &ccsv)?;
    let mut summary = json!({
        "eps": cfg.eps,
        "precondition": cfg.eps.abs() * hx_sup,
        "slope_cert": tp.slope_cert(),
        "round_trip_error": back.sup_distance(&h)?,
        "norm_transfer": norms,
        "compare_fit": compare.fit,
    });
    if !grid.is_periodic() {
        summary["interpolation_inequality"] = json!(coord_transform::gn_check(tp.g())?);
    }
    Ok(summary)
}
