//! Flat `key = value` configuration files and the merged run settings.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ppvt::netsim::{NetworkScenario, TxSnr};

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flag, key or value (exit 2).
    Usage(String),
    /// Numerical or statistical failure (exit 1).
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failure(m) => f.write_str(m),
        }
    }
}

impl From<ppvt::Error> for CliError {
    fn from(e: ppvt::Error) -> Self {
        match e {
            ppvt::Error::Validation { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(format!("i/o error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Every key accepted in a configuration file, with its default.
pub const KEYS: &[(&str, &str)] = &[
    ("lambda_b", "1"),
    ("lambda_u", "10"),
    ("path_loss_exp", "4"),
    ("rate", "10000"),
    ("gamma", "1"),
    ("gamma_db", "(unset)"),
    ("gamma_tx", "inf"),
    ("window_radius_factor", "8"),
    ("n_rep", "per command"),
    ("seed", "1"),
    ("gamma_grid", "(unset)"),
    ("gamma_grid_db", "-20:1:30"),
    ("rates", "1e3,1e4,1e5"),
    ("ratio", "10"),
    ("intensity", "1"),
    ("window_radius", "5"),
    ("output", "stdout"),
];

#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn parse(text: &str) -> CliResult<FileConfig> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", n + 1)))?;
            let k = k.trim();
            if !KEYS.iter().any(|(known, _)| *known == k) {
                return Err(CliError::Usage(format!("config line {}: unknown key {k:?}", n + 1)));
            }
            values.insert(k.to_string(), v.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn load(path: &Path) -> CliResult<FileConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        FileConfig::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.raw(key).map(|v| parse_value(key, v)).transpose()
    }
}

pub fn parse_value<T: FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.parse()
        .map_err(|_| CliError::Usage(format!("invalid value {v:?} for {key}")))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(g: f64) -> f64 {
    10.0 * g.log10()
}

/// `lo:step:hi` (inclusive) or a comma-separated list.
pub fn parse_grid(key: &str, spec: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let lo: f64 = parse_value(key, parts[0].trim())?;
        let step: f64 = parse_value(key, parts[1].trim())?;
        let hi: f64 = parse_value(key, parts[2].trim())?;
        if !(step > 0.0) || hi < lo {
            return Err(CliError::Usage(format!("invalid range {spec:?} for {key}")));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| lo + step * i as f64).collect());
    }
    parse_list(key, spec)
}

pub fn parse_list(key: &str, spec: &str) -> CliResult<Vec<f64>> {
    let v: Vec<f64> = spec
        .split(',')
        .map(|s| parse_value(key, s.trim()))
        .collect::<CliResult<_>>()?;
    if v.is_empty() {
        return Err(CliError::Usage(format!("{key} is empty")));
    }
    Ok(v)
}

pub fn parse_tx_snr(key: &str, v: &str) -> CliResult<TxSnr> {
    let g: f64 = parse_value(key, v)?;
    Ok(TxSnr::from_linear(g))
}

/// Scenario and run-control flags shared by the simulation commands.
/// Every field is optional; unset flags fall back to the config file, then
/// to the defaults in [`KEYS`].
#[derive(Debug, Clone, Default, clap::Args)]
pub struct ScenarioFlags {
    /// key = value configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub lambda_b: Option<f64>,
    #[arg(long)]
    pub lambda_u: Option<f64>,
    #[arg(long)]
    pub path_loss_exp: Option<f64>,
    /// target rate, bits/s
    #[arg(long)]
    pub rate: Option<f64>,
    /// SINR threshold, linear
    #[arg(long, conflicts_with = "gamma_db")]
    pub gamma: Option<f64>,
    /// SINR threshold, dB
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_db: Option<f64>,
    /// transmit SNR, linear; `inf` for no noise
    #[arg(long)]
    pub gamma_tx: Option<String>,
    /// window radius in units of 1/sqrt(lambda_b)
    #[arg(long)]
    pub window_factor: Option<f64>,
    #[arg(long)]
    pub n_rep: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// output file (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: NetworkScenario,
    pub n_rep: usize,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub file: FileConfig,
}

impl RunConfig {
    pub fn resolve(flags: &ScenarioFlags, default_n_rep: usize) -> CliResult<RunConfig> {
        let file = match &flags.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let d = NetworkScenario::default();
        let pick = |flag: Option<f64>, key: &str, default: f64| -> CliResult<f64> {
            Ok(match flag {
                Some(v) => v,
                None => file.get(key)?.unwrap_or(default),
            })
        };
        let gamma = match (flags.gamma, flags.gamma_db) {
            (Some(g), _) => g,
            (None, Some(db)) => db_to_linear(db),
            (None, None) => match (file.get::<f64>("gamma")?, file.get::<f64>("gamma_db")?) {
                (Some(_), Some(_)) => {
                    return Err(CliError::Usage("config sets both gamma and gamma_db".into()))
                }
                (Some(g), None) => g,
                (None, Some(db)) => db_to_linear(db),
                (None, None) => d.gamma,
            },
        };
        let tx_snr = match flags.gamma_tx.as_deref().or(file.raw("gamma_tx")) {
            Some(v) => parse_tx_snr("gamma_tx", v)?,
            None => d.tx_snr,
        };
        let scenario = NetworkScenario {
            lambda_b: pick(flags.lambda_b, "lambda_b", d.lambda_b)?,
            lambda_u: pick(flags.lambda_u, "lambda_u", d.lambda_u)?,
            path_loss_exp: pick(flags.path_loss_exp, "path_loss_exp", d.path_loss_exp)?,
            rate: pick(flags.rate, "rate", d.rate)?,
            gamma,
            tx_snr,
            window_radius_factor: pick(flags.window_factor, "window_radius_factor", d.window_radius_factor)?,
        };
        let n_rep = match flags.n_rep {
            Some(n) => n,
            None => file.get("n_rep")?.unwrap_or(default_n_rep),
        };
        let seed = match flags.seed {
            Some(s) => s,
            None => file.get("seed")?.unwrap_or(1),
        };
        let output_path = flags
            .out
            .clone()
            .or_else(|| file.raw("output").map(PathBuf::from));
        Ok(RunConfig {
            scenario,
            n_rep,
            seed,
            output_path,
            file,
        })
    }
}
