use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use tumorbif::dynamics::Integrator;
use tumorbif::ModelParams;

/// Failure class, mapped onto the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config file or parameters (exit 2).
    Config(String),
    /// A certificate or computation failed (exit 1).
    Check(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Check(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Check(m) => m,
        }
    }
}

impl From<tumorbif::Error> for Failure {
    fn from(e: tumorbif::Error) -> Self {
        match e {
            tumorbif::Error::InvalidParams(_) | tumorbif::Error::EmptyGrid(_) => Failure::Config(e.to_string()),
            _ => Failure::Check(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IntegratorArg {
    Exact,
    Rk4,
}

impl From<IntegratorArg> for Integrator {
    fn from(v: IntegratorArg) -> Self {
        match v {
            IntegratorArg::Exact => Integrator::Exact,
            IntegratorArg::Rk4 => Integrator::Rk4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "tumorbif", version, about = "Bifurcation, sign certificates and stability data for a Robin-boundary tumor model")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. All are optional so that config-file values can fill gaps.
#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// Nutrient supply rate in the Robin condition.
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Threshold concentration in (0, 1).
    #[arg(long = "sigma-tilde", global = true)]
    pub sigma_tilde: Option<f64>,
    /// Cell-to-cell adhesiveness.
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Parameter grid, e.g. "beta=0.1,1,10;sigma_tilde=0.1:0.9:0.1".
    #[arg(long, global = true)]
    pub grid: Option<String>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Output file; sections other than the main table go to sibling files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for grid sweeps (default: number of cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Flat key=value file; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Adds DELTA to coefficient INDEX of the a_n polynomial ("INDEX:DELTA"); exercises failure paths.
    #[arg(long = "corrupt-coefficient", global = true, hide = true)]
    pub corrupt_coefficient: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Radial equilibrium: radius, residual and boundary derivatives.
    Stationary {
        /// Aggressiveness used for the pressure derivatives (default: mu_2 at each point).
        #[arg(long)]
        mu: Option<f64>,
    },
    /// Bifurcation values mu_n, coefficients B_n and eigenvalues lambda_n.
    Bifurcation {
        #[arg(long = "n-max")]
        n_max: Option<usize>,
        /// Aggressiveness at which lambda_n is evaluated (default: mu_2).
        #[arg(long)]
        mu: Option<f64>,
    },
    /// Every sign certificate: grid sweep, Table 1, cancellations, series checks.
    Certify {
        /// Series terms used for the series/closed-form comparison.
        #[arg(long)]
        terms: Option<usize>,
        /// Largest radius of the series/closed-form comparison.
        #[arg(long = "r-max")]
        r_max: Option<f64>,
    },
    /// Slope certificate of the first bifurcation branch over the grid.
    Slope,
    /// Linearized mode evolution and the first-order stability diagram.
    Simulate {
        /// Aggressiveness for the evolution (default: mu-factor times mu_2).
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long = "mu-factor")]
        mu_factor: Option<f64>,
        #[arg(long = "t-end")]
        t_end: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        /// Initial amplitudes, e.g. "2:0=1,3:1=0.5".
        #[arg(long)]
        modes: Option<String>,
        #[arg(long, value_enum)]
        integrator: Option<IntegratorArg>,
        #[arg(long = "n-max")]
        n_max: Option<usize>,
        #[arg(long = "eps-max")]
        eps_max: Option<f64>,
        #[arg(long = "eps-samples")]
        eps_samples: Option<usize>,
    },
    /// Exact integers a_n + b_n 3^(2n-5) for n = 4..17.
    Table1,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Stationary { .. } => "stationary",
            Command::Bifurcation { .. } => "bifurcation",
            Command::Certify { .. } => "certify",
            Command::Slope => "slope",
            Command::Simulate { .. } => "simulate",
            Command::Table1 => "table1",
        }
    }
}

/// Parsed `key=value` config file. Keys accept `-` or `_`.
#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Failure::Config(format!("config line {}: expected key=value, got {raw:?}", i + 1)))?;
            values.insert(k.trim().replace('-', "_"), v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Failure::Config(format!("config key {key}: cannot parse {v:?}"))),
        }
    }
}

/// Picks the command-line value, then the config file, then the default.
pub fn pick<T: std::str::FromStr>(cli: Option<T>, file: &ConfigFile, key: &str, default: T) -> CliResult<T> {
    match cli {
        Some(v) => Ok(v),
        None => Ok(file.get(key)?.unwrap_or(default)),
    }
}

pub fn pick_opt<T: std::str::FromStr>(cli: Option<T>, file: &ConfigFile, key: &str) -> CliResult<Option<T>> {
    match cli {
        Some(v) => Ok(Some(v)),
        None => file.get(key),
    }
}

/// Cartesian grid over the three model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    pub beta: Vec<f64>,
    pub sigma_tilde: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl ParamGrid {
    pub fn single(p: &ModelParams) -> Self {
        Self { beta: vec![p.beta], sigma_tilde: vec![p.sigma_tilde], gamma: vec![p.gamma] }
    }

    /// The sign-certificate grid: β ∈ {0.1, 1, 10, 100}, σ̃ ∈ {0.1, …, 0.9}.
    pub fn certificate(gamma: f64) -> Self {
        Self {
            beta: vec![0.1, 1.0, 10.0, 100.0],
            sigma_tilde: (1..=9).map(|i| i as f64 / 10.0).collect(),
            gamma: vec![gamma],
        }
    }

    /// Parses `name=list;name=list`, overriding axes of `base`. A list is comma-separated
    /// values or `start:stop:step` ranges (inclusive).
    pub fn parse(spec: &str, base: Self) -> CliResult<Self> {
        let mut g = base;
        for part in spec.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, list) = part
                .split_once('=')
                .ok_or_else(|| Failure::Config(format!("grid axis {part:?} needs name=values")))?;
            let values = parse_list(list.trim())?;
            match name.trim().replace('-', "_").as_str() {
                "beta" => g.beta = values,
                "sigma_tilde" => g.sigma_tilde = values,
                "gamma" => g.gamma = values,
                other => return Err(Failure::Config(format!("unknown grid axis {other:?}"))),
            }
        }
        Ok(g)
    }

    /// Points in deterministic order: β outermost, then σ̃, then γ.
    pub fn points(&self) -> CliResult<Vec<ModelParams>> {
        let mut out = Vec::with_capacity(self.beta.len() * self.sigma_tilde.len() * self.gamma.len());
        for &b in &self.beta {
            for &s in &self.sigma_tilde {
                for &g in &self.gamma {
                    out.push(ModelParams::new(b, s, g).map_err(|e| Failure::Config(e.to_string()))?);
                }
            }
        }
        if out.is_empty() {
            return Err(Failure::Config("grid is empty".into()));
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Value {
        json!({ "beta": self.beta, "sigma_tilde": self.sigma_tilde, "gamma": self.gamma })
    }
}

fn parse_num(s: &str) -> CliResult<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Failure::Config(format!("grid value {s:?} is not a finite number")))
}

fn parse_list(list: &str) -> CliResult<Vec<f64>> {
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let bits: Vec<&str> = item.split(':').collect();
        match bits.as_slice() {
            [v] => out.push(parse_num(v)?),
            [a, b, h] => out.extend(expand_range(parse_num(a)?, parse_num(b)?, parse_num(h)?)?),
            _ => return Err(Failure::Config(format!("grid item {item:?} is neither a value nor start:stop:step"))),
        }
    }
    if out.is_empty() {
        return Err(Failure::Config(format!("grid list {list:?} is empty")));
    }
    Ok(out)
}

fn expand_range(start: f64, stop: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Failure::Config(format!("range step must be positive, got {step}")));
    }
    if stop < start {
        return Err(Failure::Config(format!("range {start}:{stop} is empty")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(Failure::Config(format!("range {start}:{stop}:{step} has too many points")));
    }
    // snap to 12 decimals so 0.1:0.9:0.1 yields 0.3 rather than 0.30000000000000004
    Ok((0..count).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect())
}

/// `n:m=amplitude` pairs.
pub fn parse_modes(spec: &str) -> CliResult<Vec<((usize, i32), f64)>> {
    let bad = || Failure::Config(format!("modes {spec:?} must look like 2:0=1,3:1=0.5"));
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (nm, a) = item.split_once('=').ok_or_else(bad)?;
        let (n, m) = nm.split_once(':').ok_or_else(bad)?;
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        let m: i32 = m.trim().parse().map_err(|_| bad())?;
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        out.push(((n, m), a));
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

/// `INDEX:DELTA` for the hidden corruption hook.
pub fn parse_corruption(spec: &str) -> CliResult<(usize, i128)> {
    let bad = || Failure::Config(format!("corruption {spec:?} must look like INDEX:DELTA"));
    let (i, d) = spec.split_once(':').ok_or_else(bad)?;
    Ok((i.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?))
}
