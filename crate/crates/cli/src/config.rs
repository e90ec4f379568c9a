//! Run configuration: a sectioned `key = value` file plus command-line
//! overrides, resolved into typed settings with per-experiment defaults.
//!
//! ```ini
//! [run]
//! experiment = sweep
//! seed = 1
//! [physics]
//! eps_list = 0.16, 0.08, 0.04, 0.02
//! ```
//!
//! Every resolved value is written back by [`RunConfig::to_ini`], so a run
//! can be repeated from its echoed configuration.

use crate::error::{CliError, CliResult};
use bhlab::experiments::{geometric_eps, ConvergenceStudy};
use bhlab::initial_data::{InitialData, Mode};
use bhlab::spectral;
use ini::Ini;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Experiment {
    Simulate,
    Sweep,
    Crosscheck,
    Convergence,
    Constants,
    TransformDemo,
}

impl Experiment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Sweep => "sweep",
            Experiment::Crosscheck => "crosscheck",
            Experiment::Convergence => "convergence",
            Experiment::Constants => "constants",
            Experiment::TransformDemo => "transform-demo",
        }
    }
}

impl FromStr for Experiment {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "simulate" => Experiment::Simulate,
            "sweep" => Experiment::Sweep,
            "crosscheck" => Experiment::Crosscheck,
            "convergence" => Experiment::Convergence,
            "constants" => Experiment::Constants,
            "transform-demo" => Experiment::TransformDemo,
            other => return Err(format!("unknown experiment '{other}'")),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Model {
    Bh,
    Burgers,
    G,
}

impl Model {
    pub fn as_str(&self) -> &'static str {
        match self {
            Model::Bh => "bh",
            Model::Burgers => "burgers",
            Model::G => "g",
        }
    }
}

impl FromStr for Model {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bh" => Ok(Model::Bh),
            "burgers" => Ok(Model::Burgers),
            "g" => Ok(Model::G),
            other => Err(format!("unknown model '{other}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridChoice {
    Periodic,
    Line,
}

impl GridChoice {
    fn as_str(&self) -> &'static str {
        match self {
            GridChoice::Periodic => "periodic",
            GridChoice::Line => "line",
        }
    }
}

impl FromStr for GridChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "periodic" => Ok(GridChoice::Periodic),
            "line" => Ok(GridChoice::Line),
            other => Err(format!("unknown grid kind '{other}'")),
        }
    }
}

/// Raw `section.key → value` pairs before typing.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let ini = Ini::load_from_file(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut raw = RawConfig::default();
        for (section, props) in ini.iter() {
            for (key, value) in props.iter() {
                let section = section.ok_or_else(|| {
                    CliError::Config(format!("{}: key '{key}' outside a section", path.display()))
                })?;
                raw.set(&format!("{section}.{key}"), value);
            }
        }
        Ok(raw)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.trim().to_string(), value.trim().to_string());
    }

    /// Apply one `section.key=value` override.
    pub fn apply_override(&mut self, spec: &str) -> CliResult<()> {
        let (key, value) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override '{spec}' is not section.key=value")))?;
        if !key.contains('.') {
            return Err(CliError::Config(format!("override key '{key}' needs a section")));
        }
        self.set(key, value);
        Ok(())
    }

    fn take<T: FromStr>(&mut self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| CliError::Config(format!("{key} = '{v}': {e}"))),
        }
    }

    fn take_with<T>(&mut self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> CliResult<Option<T>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(v) => parse(&v).map(Some).map_err(|e| CliError::Config(format!("{key} = '{v}': {e}"))),
        }
    }
}

fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: Display,
{
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<T>().map_err(|e| format!("'{}': {e}", p.trim())))
        .collect()
}

fn parse_resolutions(s: &str) -> Result<Vec<(usize, f64)>, String> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (n, dt) = p.trim().split_once(':').ok_or("expected n:dt")?;
            Ok((n.parse().map_err(|e| format!("{e}"))?, dt.parse().map_err(|e| format!("{e}"))?))
        })
        .collect()
}

fn parse_modes(s: &str) -> Result<Vec<Mode>, String> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let parts: Vec<&str> = p.trim().split(':').collect();
            let [m, a, ph] = parts[..] else {
                return Err("expected mode:amplitude:phase".to_string());
            };
            Ok(Mode {
                mode: m.parse().map_err(|e| format!("{e}"))?,
                amplitude: a.parse().map_err(|e| format!("{e}"))?,
                phase: ph.parse().map_err(|e| format!("{e}"))?,
            })
        })
        .collect()
}

fn parse_optional(s: &str) -> Result<Option<f64>, String> {
    match s {
        "auto" | "none" => Ok(None),
        v => v.parse().map(Some).map_err(|e| format!("{e}")),
    }
}

fn parse_window(s: &str) -> Result<Option<(f64, f64)>, String> {
    if s == "none" {
        return Ok(None);
    }
    let (lo, hi) = s.split_once(':').ok_or("expected lo:hi or none")?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{e}"))?;
    if !(lo > 0.0 && lo <= hi) {
        return Err("window needs 0 < lo <= hi".into());
    }
    Ok(Some((lo, hi)))
}

fn join<T: Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn opt_str(v: Option<f64>, none: &str) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| none.to_string())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CampaignSettings {
    pub fields: usize,
    pub n: usize,
    pub half_width: f64,
    pub max_mode: u32,
    pub amplitude: f64,
    pub regime_fraction: f64,
    pub eps_cap: f64,
}

/// Fully resolved settings for one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub threads: usize,
    pub output_dir: PathBuf,
    pub model: Model,
    pub study: ConvergenceStudy,
    pub campaign: bool,
    pub nf_residual: bool,

    pub data_kind: String,
    pub amplitude: f64,
    pub mode: u32,
    pub width: f64,
    pub center: f64,
    pub modes: Vec<Mode>,
    pub max_mode: u32,

    pub grid: GridChoice,
    pub n: usize,
    pub period: f64,
    pub half_width: f64,

    pub eps: f64,
    pub eps_list: Vec<f64>,
    pub e0: f64,

    pub t_end: f64,
    pub dt: Option<f64>,
    pub cfl: f64,
    pub max_dt: f64,
    pub sample_interval: f64,
    pub bh_horizon: f64,
    pub burgers_horizon: f64,
    pub checkpoints: usize,
    pub resolutions: Vec<(usize, f64)>,
    pub dts: Vec<f64>,
    pub ns: Vec<usize>,

    pub slope_factor: f64,
    pub tail_threshold: f64,
    pub fit_window: Option<(f64, f64)>,
    pub sweep_bh: bool,
    pub sweep_burgers: bool,
    pub h2_factor: Option<f64>,

    pub campaign_settings: CampaignSettings,
}

impl RunConfig {
    /// Type every entry of `raw`, filling gaps with defaults for `experiment`.
    /// Unknown keys are rejected.
    pub fn resolve(experiment: Experiment, mut raw: RawConfig) -> CliResult<Self> {
        if let Some(e) = raw.take_with("run.experiment", |s| s.parse::<Experiment>())? {
            if e != experiment {
                return Err(CliError::Config(format!(
                    "configuration is for '{}', not '{}'",
                    e.as_str(),
                    experiment.as_str()
                )));
            }
        }
        let seed = raw.take("run.seed")?.unwrap_or(1);
        let threads = raw.take("run.threads")?.unwrap_or(1);
        let output_dir = raw.take("run.output_dir")?.unwrap_or_else(|| PathBuf::from("bhlab-out"));
        let model = raw.take_with("run.model", |s| s.parse::<Model>())?.unwrap_or(Model::Bh);
        let study = raw
            .take_with("run.study", |s| ConvergenceStudy::parse(s).map_err(|e| e.to_string()))?
            .unwrap_or(ConvergenceStudy::BhTemporal);
        let campaign = raw.take("run.campaign")?.unwrap_or(false);
        let nf_residual = raw.take("run.nf_residual")?.unwrap_or(false);

        let quadrature = experiment == Experiment::Convergence && study == ConvergenceStudy::GQuadrature;
        let grid = raw
            .take_with("grid.kind", |s| s.parse::<GridChoice>())?
            .unwrap_or(if quadrature { GridChoice::Line } else { GridChoice::Periodic });
        let default_n = match (experiment, grid) {
            (Experiment::Convergence, _) => 64,
            (_, GridChoice::Periodic) => spectral::DEFAULT_PERIODIC_N,
            (_, GridChoice::Line) => spectral::DEFAULT_LINE_N,
        };
        let n = raw.take("grid.n")?.unwrap_or(default_n);
        let period = raw.take("grid.period")?.unwrap_or(2.0 * PI);
        let half_width = raw
            .take("grid.half_width")?
            .unwrap_or(if quadrature { 15.0 } else { spectral::DEFAULT_LINE_HALF_WIDTH });

        let data_kind: String = raw
            .take("data.kind")?
            .unwrap_or_else(|| if grid == GridChoice::Line { "gaussian".into() } else { "sine".into() });
        let amplitude = raw.take("data.amplitude")?.unwrap_or(1.0);
        let mode = raw.take("data.mode")?.unwrap_or(1);
        let width = raw
            .take("data.width")?
            .unwrap_or(if data_kind == "random" { 2.0 } else { 1.0 });
        let center = raw.take("data.center")?.unwrap_or(0.0);
        let modes = raw.take_with("data.modes", parse_modes)?.unwrap_or_else(|| {
            vec![
                Mode { mode: 1, amplitude: 1.0, phase: 0.0 },
                Mode { mode: 2, amplitude: 0.5, phase: 0.3 },
            ]
        });
        let max_mode = raw.take("data.max_mode")?.unwrap_or(6);

        let default_eps = match (experiment, study) {
            (Experiment::Convergence, ConvergenceStudy::BhTemporal) => 0.0,
            _ => 0.1,
        };
        let eps = raw.take("physics.eps")?.unwrap_or(default_eps);
        let eps_list = match raw.take_with("physics.eps_list", parse_list::<f64>)? {
            Some(v) => v,
            None if experiment == Experiment::TransformDemo => vec![0.1, 0.05, 0.025, 0.0125],
            None => geometric_eps(0.5, 0.02, 8)?,
        };
        let e0 = raw.take("physics.e0")?.unwrap_or(1.0);

        let default_t_end = match experiment {
            Experiment::Convergence => 2.0,
            _ => 5.0,
        };
        let t_end = raw.take("time.t_end")?.unwrap_or(default_t_end);
        let dt = raw.take_with("time.dt", parse_optional)?.flatten();
        let cfl = raw.take("time.cfl")?.unwrap_or(0.25);
        let max_dt = raw
            .take("time.max_dt")?
            .unwrap_or(if experiment == Experiment::Sweep { 0.05 } else { 0.01 });
        let sample_interval = raw.take("time.sample_interval")?.unwrap_or(0.1);
        let bh_horizon = raw.take("time.bh_horizon")?.unwrap_or(100.0);
        let burgers_horizon = raw.take("time.burgers_horizon")?.unwrap_or(5.0);
        let checkpoints = raw.take("time.checkpoints")?.unwrap_or(5);
        let resolutions = raw
            .take_with("time.resolutions", parse_resolutions)?
            .unwrap_or_else(|| vec![(16, 0.1), (32, 0.05), (64, 0.025)]);
        let dts = match raw.take_with("time.dts", parse_list::<f64>)? {
            Some(v) => v,
            None if study == ConvergenceStudy::BhSpatial => vec![0.01],
            None => vec![0.2, 0.1, 0.05, 0.025],
        };
        let ns = raw.take_with("time.ns", parse_list::<usize>)?.unwrap_or_else(|| {
            if quadrature {
                vec![201, 401, 801, 1601]
            } else {
                vec![16, 32, 64, 128]
            }
        });

        let slope_factor = raw.take("detect.slope_factor")?.unwrap_or(bhlab::bh_solver::DEFAULT_SLOPE_FACTOR);
        let tail_threshold = raw
            .take("detect.tail_threshold")?
            .unwrap_or(bhlab::bh_solver::DEFAULT_TAIL_THRESHOLD);
        let fit_window = raw.take_with("detect.fit_window", parse_window)?.flatten();
        let sweep_bh = raw.take("detect.bh")?.unwrap_or(true);
        let sweep_burgers = raw.take("detect.burgers")?.unwrap_or(true);
        let h2_factor = raw.take_with("detect.h2_factor", parse_optional)?.flatten();

        let defaults = bhlab::analysis::CampaignConfig::default();
        let campaign_settings = CampaignSettings {
            fields: raw.take("campaign.fields")?.unwrap_or(defaults.fields),
            n: raw.take("campaign.n")?.unwrap_or(defaults.n),
            half_width: raw.take("campaign.half_width")?.unwrap_or(defaults.half_width),
            max_mode: raw.take("campaign.max_mode")?.unwrap_or(defaults.max_mode),
            amplitude: raw.take("campaign.amplitude")?.unwrap_or(defaults.amplitude),
            regime_fraction: raw.take("campaign.regime_fraction")?.unwrap_or(defaults.regime_fraction),
            eps_cap: raw.take("campaign.eps_cap")?.unwrap_or(defaults.eps_cap),
        };

        if let Some(key) = raw.entries.keys().next() {
            return Err(CliError::Config(format!("unknown configuration key '{key}'")));
        }
        let cfg = RunConfig {
            experiment,
            seed,
            threads,
            output_dir,
            model,
            study,
            campaign,
            nf_residual,
            data_kind,
            amplitude,
            mode,
            width,
            center,
            modes,
            max_mode,
            grid,
            n,
            period,
            half_width,
            eps,
            eps_list,
            e0,
            t_end,
            dt,
            cfl,
            max_dt,
            sample_interval,
            bh_horizon,
            burgers_horizon,
            checkpoints,
            resolutions,
            dts,
            ns,
            slope_factor,
            tail_threshold,
            fit_window,
            sweep_bh,
            sweep_burgers,
            h2_factor,
            campaign_settings,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> CliResult<()> {
        self.initial_data()?;
        if self.threads == 0 {
            return Err(CliError::Config("run.threads must be at least 1".into()));
        }
        if self.experiment == Experiment::Sweep {
            if self.eps_list.is_empty() || self.eps_list.iter().any(|e| !(*e > 0.0)) {
                return Err(CliError::Config("physics.eps_list needs positive values".into()));
            }
            if self.eps_list.windows(2).any(|w| w[1] >= w[0]) {
                return Err(CliError::Config("physics.eps_list must be strictly decreasing".into()));
            }
        }
        Ok(())
    }

    /// The named generator with its parameters.
    pub fn initial_data(&self) -> CliResult<InitialData> {
        Ok(match self.data_kind.as_str() {
            "sine" => InitialData::Sine { amplitude: self.amplitude, mode: self.mode },
            "multi-mode" => InitialData::MultiMode { modes: self.modes.clone() },
            "gaussian" => InitialData::Gaussian { amplitude: self.amplitude, width: self.width, center: self.center },
            "random" => InitialData::Random {
                seed: self.seed,
                max_mode: self.max_mode,
                amplitude: self.amplitude,
                width: self.width,
            },
            other => return Err(CliError::Config(format!("unknown data.kind '{other}'"))),
        })
    }

    pub fn grid(&self) -> CliResult<spectral::Grid> {
        Ok(match self.grid {
            GridChoice::Periodic => spectral::Grid::periodic(self.n, self.period)?,
            GridChoice::Line => spectral::Grid::line(self.n, self.half_width)?,
        })
    }

    /// All resolved values as an INI document.
    pub fn to_ini(&self) -> Ini {
        let mut ini = Ini::new();
        ini.with_section(Some("run"))
            .set("experiment", self.experiment.as_str())
            .set("seed", self.seed.to_string())
            .set("threads", self.threads.to_string())
            .set("output_dir", self.output_dir.display().to_string())
            .set("model", self.model.as_str())
            .set("study", self.study.as_str())
            .set("campaign", self.campaign.to_string())
            .set("nf_residual", self.nf_residual.to_string());
        let modes: Vec<String> = self.modes.iter().map(|m| format!("{}:{}:{}", m.mode, m.amplitude, m.phase)).collect();
        ini.with_section(Some("data"))
            .set("kind", self.data_kind.as_str())
            .set("amplitude", self.amplitude.to_string())
            .set("mode", self.mode.to_string())
            .set("width", self.width.to_string())
            .set("center", self.center.to_string())
            .set("modes", modes.join(", "))
            .set("max_mode", self.max_mode.to_string());
        ini.with_section(Some("grid"))
            .set("kind", self.grid.as_str())
            .set("n", self.n.to_string())
            .set("period", self.period.to_string())
            .set("half_width", self.half_width.to_string());
        ini.with_section(Some("physics"))
            .set("eps", self.eps.to_string())
            .set("eps_list", join(&self.eps_list))
            .set("e0", self.e0.to_string());
        let resolutions: Vec<String> = self.resolutions.iter().map(|(n, dt)| format!("{n}:{dt}")).collect();
        ini.with_section(Some("time"))
            .set("t_end", self.t_end.to_string())
            .set("dt", opt_str(self.dt, "auto"))
            .set("cfl", self.cfl.to_string())
            .set("max_dt", self.max_dt.to_string())
            .set("sample_interval", self.sample_interval.to_string())
            .set("bh_horizon", self.bh_horizon.to_string())
            .set("burgers_horizon", self.burgers_horizon.to_string())
            .set("checkpoints", self.checkpoints.to_string())
            .set("resolutions", resolutions.join(", "))
            .set("dts", join(&self.dts))
            .set("ns", join(&self.ns));
        ini.with_section(Some("detect"))
            .set("slope_factor", self.slope_factor.to_string())
            .set("tail_threshold", self.tail_threshold.to_string())
            .set(
                "fit_window",
                self.fit_window.map(|(lo, hi)| format!("{lo}:{hi}")).unwrap_or_else(|| "none".into()),
            )
            .set("bh", self.sweep_bh.to_string())
            .set("burgers", self.sweep_burgers.to_string())
            .set("h2_factor", opt_str(self.h2_factor, "none"));
        let c = &self.campaign_settings;
        ini.with_section(Some("campaign"))
            .set("fields", c.fields.to_string())
            .set("n", c.n.to_string())
            .set("half_width", c.half_width.to_string())
            .set("max_mode", c.max_mode.to_string())
            .set("amplitude", c.amplitude.to_string())
            .set("regime_fraction", c.regime_fraction.to_string())
            .set("eps_cap", c.eps_cap.to_string());
        ini
    }

    pub fn to_ini_string(&self) -> String {
        let mut buf = Vec::new();
        self.to_ini().write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ini output is utf-8")
    }

    /// `section → key → value` view for the JSON metadata.
    pub fn to_map(&self) -> BTreeMap<String, BTreeMap<String, String>> {
        let ini = self.to_ini();
        ini.iter()
            .filter_map(|(s, p)| {
                s.map(|s| (s.to_string(), p.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()))
            })
            .collect()
    }
}
