//! `bhlab`: batch runner for Burgers-Hilbert experiments.

mod commands;
mod config;
mod error;
mod report;

use clap::{Args, Parser, Subcommand};
use config::{Experiment, Model, RawConfig, RunConfig};
use error::CliResult;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "bhlab", version, about = "Burgers-Hilbert simulations, sweeps and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one trajectory (BH, Burgers or the transformed g-flow).
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        model: Option<Model>,
        /// Also write the normal-form residual along the BH trajectory.
        #[arg(long)]
        nf_residual: bool,
    },
    /// Breaking-time sweep over ε with log-log fits.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated, strictly decreasing.
        #[arg(long)]
        eps_list: Option<String>,
    },
    /// g-flow against the transformed u-flow at several resolutions.
    Crosscheck {
        #[command(flatten)]
        common: Common,
    },
    /// Refinement study: bh-temporal, bh-spatial or g-quadrature.
    Convergence {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        study: Option<String>,
    },
    /// Constants of the energy estimate, optionally with the inequality campaign.
    Constants {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        campaign: bool,
    },
    /// Coordinate transform round trip and normal-form comparison.
    TransformDemo {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        eps_list: Option<String>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Sectioned key-value configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override one entry, `section.key=value`. Repeatable; applied last.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// sine, multi-mode, gaussian or random.
    #[arg(long)]
    data: Option<String>,
    /// periodic or line.
    #[arg(long)]
    grid: Option<String>,
}

impl Common {
    fn raw(&self, extra: Vec<(&str, String)>) -> CliResult<RawConfig> {
        let mut raw = match &self.config {
            Some(p) => RawConfig::load(p)?,
            None => RawConfig::default(),
        };
        let mut put = |key: &str, v: Option<String>| {
            if let Some(v) = v {
                raw.set(key, &v);
            }
        };
        put("run.output_dir", self.output.as_ref().map(|p| p.display().to_string()));
        put("run.seed", self.seed.map(|v| v.to_string()));
        put("run.threads", self.threads.map(|v| v.to_string()));
        put("physics.eps", self.eps.map(|v| v.to_string()));
        put("grid.n", self.n.map(|v| v.to_string()));
        put("time.t_end", self.t_end.map(|v| v.to_string()));
        put("time.dt", self.dt.map(|v| v.to_string()));
        put("data.kind", self.data.clone());
        put("grid.kind", self.grid.clone());
        for (k, v) in extra {
            raw.set(k, &v);
        }
        for o in &self.overrides {
            raw.apply_override(o)?;
        }
        Ok(raw)
    }
}

fn build(cmd: &Command) -> CliResult<RunConfig> {
    let (experiment, common, extra): (Experiment, &Common, Vec<(&str, String)>) = match cmd {
        Command::Simulate { common, model, nf_residual } => {
            let mut extra = vec![];
            if let Some(m) = model {
                extra.push(("run.model", m.as_str().to_string()));
            }
            if *nf_residual {
                extra.push(("run.nf_residual", "true".into()));
            }
            (Experiment::Simulate, common, extra)
        }
        Command::Sweep { common, eps_list } => {
            (Experiment::Sweep, common, eps_list.iter().map(|l| ("physics.eps_list", l.clone())).collect())
        }
        Command::Crosscheck { common } => (Experiment::Crosscheck, common, vec![]),
        Command::Convergence { common, study } => {
            (Experiment::Convergence, common, study.iter().map(|s| ("run.study", s.clone())).collect())
        }
        Command::Constants { common, campaign } => {
            let extra = if *campaign { vec![("run.campaign", "true".to_string())] } else { vec![] };
            (Experiment::Constants, common, extra)
        }
        Command::TransformDemo { common, eps_list } => {
            (Experiment::TransformDemo, common, eps_list.iter().map(|l| ("physics.eps_list", l.clone())).collect())
        }
    };
    RunConfig::resolve(experiment, common.raw(extra)?)
}

fn execute(cmd: &Command) -> CliResult<()> {
    let cfg = build(cmd)?;
    let mut rep = report::Reporter::new(&cfg.output_dir)?;
    let summary = commands::run(&cfg, &mut rep)?;
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    rep.finish(&cfg, &summary)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            e.exit_code()
        }
    }
}
