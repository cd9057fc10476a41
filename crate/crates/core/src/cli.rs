//! Command-line front end.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical accuracy
//! failure, 3 I/O failure.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

use crate::analytic::{critical_tau_m, displacement_alpha, zeno_bound, AnalyticError, CavityParams, PulseSchedule};
use crate::propagator::{IntegratorConfig, Method, PropagatorError, MIN_STEPS_PER_PULSE};
use crate::statespace::StateSpaceError;
use crate::sweep::{
    default_near_critical_tau_m, fig2_curves, fig3_grid, max_abs_error, oracle_compare, write_csv, SweepError,
    SweepGrid,
};
use crate::zenotheorem::{factorization_report, zeno_convergence, TheoremError, ZenoSystem};

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical accuracy error: {0}")]
    Numeric(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<AnalyticError> for CliError {
    fn from(e: AnalyticError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<PropagatorError> for CliError {
    fn from(e: PropagatorError) -> Self {
        match e {
            PropagatorError::Config(_) | PropagatorError::Analytic(_) => CliError::Config(e.to_string()),
            PropagatorError::StateSpace(StateSpaceError::InvalidDimension(_)) => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Io { .. } | SweepError::Csv { .. } | SweepError::NoRows(_) => CliError::Io(e.to_string()),
            SweepError::Propagator(p) => p.into(),
            SweepError::Analytic(a) => a.into(),
            SweepError::EmptyGrid | SweepError::InvalidGrid(_) => CliError::Config(e.to_string()),
        }
    }
}

impl From<TheoremError> for CliError {
    fn from(e: TheoremError) -> Self {
        match e {
            TheoremError::StateSpace(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

/// Physical and numerical settings shared by all subcommands.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub chi_rad_per_s: f64,
    pub delta_rad_per_s: f64,
    pub f_rad_per_s: f64,
    pub omega_rad_per_s: f64,
    pub tau_s: f64,
    pub tau_m_s: f64,
    pub n_cycles: u64,
    pub t_total_s: f64,
    pub seed: u64,
    pub steps_per_pulse: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = CavityParams::reference();
        Self {
            chi_rad_per_s: p.chi(),
            delta_rad_per_s: p.delta(),
            f_rad_per_s: p.f(),
            omega_rad_per_s: p.omega(),
            tau_s: 50e-6,
            tau_m_s: 5e-3,
            n_cycles: 100,
            t_total_s: 1e-3,
            seed: 42,
            steps_per_pulse: crate::propagator::DEFAULT_STEPS_PER_PULSE,
        }
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "chi_rad_per_s",
    "delta_rad_per_s",
    "f_rad_per_s",
    "omega_rad_per_s",
    "tau_s",
    "tau_m_s",
    "n_cycles",
    "t_total_s",
    "seed",
    "steps_per_pulse",
];

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("line {line}: invalid value {value:?} for {key}")))
}

impl RunConfig {
    /// Parses `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {line}: expected `key = value`, got {content:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(CliError::Config(format!("line {line}: empty value for {key}")));
            }
            match key {
                "chi_rad_per_s" => self.chi_rad_per_s = parse_value(key, value, line)?,
                "delta_rad_per_s" => self.delta_rad_per_s = parse_value(key, value, line)?,
                "f_rad_per_s" => self.f_rad_per_s = parse_value(key, value, line)?,
                "omega_rad_per_s" => self.omega_rad_per_s = parse_value(key, value, line)?,
                "tau_s" => self.tau_s = parse_value(key, value, line)?,
                "tau_m_s" => self.tau_m_s = parse_value(key, value, line)?,
                "n_cycles" => self.n_cycles = parse_value(key, value, line)?,
                "t_total_s" => self.t_total_s = parse_value(key, value, line)?,
                "seed" => self.seed = parse_value(key, value, line)?,
                "steps_per_pulse" => self.steps_per_pulse = parse_value(key, value, line)?,
                _ => {
                    return Err(CliError::Config(format!(
                        "line {line}: unknown key {key:?} (expected one of {})",
                        CONFIG_KEYS.join(", ")
                    )))
                }
            }
        }
        self.validate()
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text).map_err(|e| {
            CliError::Config(format!(
                "{}: {}",
                path.display(),
                e.to_string().trim_start_matches("configuration error: ")
            ))
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let finite = [
            ("chi_rad_per_s", self.chi_rad_per_s),
            ("delta_rad_per_s", self.delta_rad_per_s),
            ("f_rad_per_s", self.f_rad_per_s),
            ("omega_rad_per_s", self.omega_rad_per_s),
            ("tau_s", self.tau_s),
            ("tau_m_s", self.tau_m_s),
            ("t_total_s", self.t_total_s),
        ];
        if let Some((k, v)) = finite.iter().find(|(_, v)| !v.is_finite()) {
            return Err(CliError::Config(format!("{k} must be finite, got {v}")));
        }
        let range_err =
            |k: &str, v: String, need: &str| Err(CliError::Config(format!("{k} = {v} out of range: {need}")));
        if self.f_rad_per_s < 0.0 {
            return range_err("f_rad_per_s", self.f_rad_per_s.to_string(), "must be >= 0");
        }
        if self.tau_s <= 0.0 {
            return range_err("tau_s", self.tau_s.to_string(), "must be > 0");
        }
        if self.tau_m_s < 0.0 {
            return range_err("tau_m_s", self.tau_m_s.to_string(), "must be >= 0");
        }
        if self.t_total_s <= 0.0 {
            return range_err("t_total_s", self.t_total_s.to_string(), "must be > 0");
        }
        if self.n_cycles == 0 {
            return range_err("n_cycles", "0".into(), "must be >= 1");
        }
        if self.steps_per_pulse < MIN_STEPS_PER_PULSE {
            return range_err("steps_per_pulse", self.steps_per_pulse.to_string(), "must be >= 16");
        }
        Ok(())
    }

    pub fn params(&self) -> Result<CavityParams, CliError> {
        Ok(CavityParams::new(
            self.omega_rad_per_s,
            self.delta_rad_per_s,
            self.f_rad_per_s,
            self.chi_rad_per_s,
        )?)
    }

    pub fn schedule(&self) -> Result<PulseSchedule, CliError> {
        Ok(PulseSchedule::new(self.tau_s, self.tau_m_s, self.n_cycles)?)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "cavity-zeno",
    version,
    about = "Measurement-induced freezing of a driven cavity"
)]
pub struct Cli {
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags that override the config file.
#[derive(Debug, Args, Default)]
pub struct Overrides {
    /// `key = value` config file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub chi: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    pub f: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    #[arg(long = "tau-m", global = true)]
    pub tau_m: Option<f64>,
    #[arg(long = "n-cycles", global = true)]
    pub n_cycles: Option<u64>,
    #[arg(long = "t-total", global = true)]
    pub t_total: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub steps: Option<usize>,
}

impl Overrides {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        if let Some(v) = self.chi {
            cfg.chi_rad_per_s = v;
        }
        if let Some(v) = self.delta {
            cfg.delta_rad_per_s = v;
        }
        if let Some(v) = self.f {
            cfg.f_rad_per_s = v;
        }
        if let Some(v) = self.omega {
            cfg.omega_rad_per_s = v;
        }
        if let Some(v) = self.tau {
            cfg.tau_s = v;
        }
        if let Some(v) = self.tau_m {
            cfg.tau_m_s = v;
        }
        if let Some(v) = self.n_cycles {
            cfg.n_cycles = v;
        }
        if let Some(v) = self.t_total {
            cfg.t_total_s = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.steps {
            cfg.steps_per_pulse = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kicks {
    /// `h_j tau_m = 2 pi j / d`
    Clock,
    /// Standard-normal levels
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Integrator {
    /// Piecewise matrix exponential
    Expm,
    /// Fourth-order Runge-Kutta
    Rk4,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Free, Zeno and near-critical photon growth against N
    Fig2 {
        #[arg(long = "n-max", default_value_t = 200)]
        n_max: u64,
        /// Near-critical measurement time [s]; defaults to the first critical time + 3.5 µs
        #[arg(long = "tau-m-crit")]
        tau_m_crit: Option<f64>,
        #[arg(long, default_value = "fig2.csv")]
        out: PathBuf,
    },
    /// Mean photon number over the (tau, tau_m) plane at fixed total time
    Fig3 {
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, default_value = "fig3.csv")]
        out: PathBuf,
    },
    /// Bang-bang factorization and convergence for a random generator
    Theorem {
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long = "n-list", value_delimiter = ',', default_values_t = [64_u64, 128, 256, 512])]
        n_list: Vec<u64>,
        #[arg(long, value_enum, default_value_t = Kicks::Clock)]
        kicks: Kicks,
        /// Total drive time
        #[arg(long, default_value_t = 1.0)]
        time: f64,
        /// Kick duration
        #[arg(long = "kick-time", default_value_t = 1.0)]
        kick_time: f64,
        #[arg(long, default_value = "theorem.csv")]
        out: PathBuf,
    },
    /// Closed form against the numerical oracle, cycle by cycle
    Compare {
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, value_enum, default_value_t = Integrator::Expm)]
        method: Integrator,
        #[arg(long, default_value = "compare.csv")]
        out: PathBuf,
    },
    /// Derived quantities for the current parameters
    Info,
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn io(e: std::io::Error) -> CliError {
    CliError::Io(format!("writing output: {e}"))
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = cli.overrides.resolve()?;
    let params = cfg.params()?;
    match &cli.command {
        Command::Fig2 {
            n_max,
            tau_m_crit,
            out: path,
        } => {
            if *n_max == 0 {
                return Err(CliError::Config("n-max must be >= 1".into()));
            }
            let crit = match tau_m_crit {
                Some(t) => *t,
                None => default_near_critical_tau_m(&params)?,
            };
            let rows = fig2_curves(&params, cfg.tau_s, *n_max, cfg.tau_m_s, crit)?;
            write_csv(&rows, path)?;
            writeln!(out, "wrote {} rows to {}", rows.len(), path.display()).map_err(io)?;
        }
        Command::Fig3 { size, out: path } => {
            if *size < 2 {
                return Err(CliError::Config("size must be >= 2".into()));
            }
            let mut grid = SweepGrid::fig3_default(&params, *size)?;
            grid.t_total = cfg.t_total_s;
            let rows = fig3_grid(&params, &grid)?;
            for tau in grid.flagged_taus() {
                writeln!(out, "warning: N tau != t for tau = {tau:.6e} s").map_err(io)?;
            }
            write_csv(&rows, path)?;
            writeln!(out, "wrote {} rows to {}", rows.len(), path.display()).map_err(io)?;
        }
        Command::Theorem {
            dim,
            n_list,
            kicks,
            time,
            kick_time,
            out: path,
        } => {
            if n_list.is_empty() || n_list.contains(&0) {
                return Err(CliError::Config("n-list entries must be >= 1".into()));
            }
            if *dim < 2 {
                return Err(CliError::Config("dim must be >= 2".into()));
            }
            let n0 = n_list[0];
            let tau = time / n0 as f64;
            let template = match kicks {
                Kicks::Clock => ZenoSystem::random_clock(*dim, cfg.seed, tau, *kick_time, n0)?,
                Kicks::Random => ZenoSystem::random(*dim, cfg.seed, tau, *kick_time, n0)?,
            };
            let fact = factorization_report(&template)?;
            writeln!(
                out,
                "factorization max error (N={n0}): {:.3e}",
                fact.max_elementwise_error
            )
            .map_err(io)?;
            writeln!(out, "off-diagonal sum check:          {:.3e}", fact.lambda_check_error).map_err(io)?;
            let report = zeno_convergence(&template, *time, n_list)?;
            if report.has_critical_warning() {
                writeln!(
                    out,
                    "warning: critical kick pairs {:?}; no convergence expected",
                    report.critical_pairs
                )
                .map_err(io)?;
            }
            for p in &report.points {
                writeln!(out, "N = {:>6}  zeno error = {:.6e}", p.n_cycles, p.zeno_error).map_err(io)?;
            }
            if report.points.len() > 1 {
                writeln!(out, "log-log slope: {:.4}", report.loglog_slope()).map_err(io)?;
            }
            write_csv(&report.points, path)?;
            writeln!(out, "wrote {} rows to {}", report.points.len(), path.display()).map_err(io)?;
        }
        Command::Compare { dim, method, out: path } => {
            let sched = cfg.schedule()?;
            let method = match method {
                Integrator::Expm => Method::PiecewiseExponential,
                Integrator::Rk4 => Method::FixedStepRk4,
            };
            let mut icfg = IntegratorConfig::default()
                .with_steps(cfg.steps_per_pulse)
                .with_method(method);
            if let Some(d) = dim {
                icfg = icfg.with_dim(*d);
            }
            let rows = oracle_compare(&params, &sched, &icfg)?;
            writeln!(out, "max |analytic - numeric| = {:.3e}", max_abs_error(&rows)).map_err(io)?;
            write_csv(&rows, path)?;
            writeln!(out, "wrote {} rows to {}", rows.len(), path.display()).map_err(io)?;
        }
        Command::Info => {
            let line =
                |out: &mut dyn Write, label: &str, value: String| writeln!(out, "{label:<18}{value}").map_err(io);
            line(out, "xi = chi tau_m", format!("{:.12e} rad", params.xi(cfg.tau_m_s)))?;
            for k in 1..=3 {
                let value = match critical_tau_m(&params, k) {
                    Ok(t) => format!("{t:.12e} s"),
                    Err(_) => "undefined (chi = 0)".to_string(),
                };
                line(out, &format!("tau_m*(k={k})"), value)?;
            }
            let a2 = displacement_alpha(&params, cfg.tau_s).norm_sqr();
            line(out, "|alpha(tau)|^2", format!("{a2:.12e}"))?;
            let bound = match zeno_bound(&params, cfg.tau_s, cfg.tau_m_s) {
                Some(b) => format!("{b:.12e}"),
                None => "none (tau_m is critical)".to_string(),
            };
            line(out, "Zeno bound", bound)?;
        }
    }
    Ok(())
}
