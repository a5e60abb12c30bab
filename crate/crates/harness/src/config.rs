//! Experiment configuration: a flat `key=value` file format (one pair per
//! line, `#` comments) with every key also exposed as a CLI flag that
//! overrides the file.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use ssrmax_core::sca::ScaConfig;
use ssrmax_core::zf::SelectionMode;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected key=value, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {detail}")]
    InvalidValue { key: String, detail: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Beamforming design selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Sca,
    Zf,
    Slnr,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Sca => "sca",
            Method::Zf => "zf",
            Method::Slnr => "slnr",
        }
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "sca" => Ok(Method::Sca),
            "zf" => Ok(Method::Zf),
            "slnr" => Ok(Method::Slnr),
            other => Err(format!("unknown method `{other}` (expected sca, zf, slnr)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub n_tx: usize,
    pub k_pairs: usize,
    pub eps: f64,
    pub snr_db_list: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub sca: ScaConfig,
    pub zf_selection: SelectionMode,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_tx: 4,
            k_pairs: 2,
            eps: 0.1,
            snr_db_list: vec![0.0, 5.0, 10.0, 15.0],
            trials: 20,
            methods: vec![Method::Sca, Method::Zf, Method::Slnr],
            seed: 1,
            sca: ScaConfig::default(),
            zf_selection: SelectionMode::Exhaustive,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e: T::Err| ConfigError::InvalidValue {
            key: key.to_string(),
            detail: e.to_string(),
        })
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl ExperimentConfig {
    /// Parse a flat key=value file on top of the defaults.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::default();
        let mut pairs = BTreeMap::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: ln + 1,
                text: raw.to_string(),
            })?;
            pairs.insert(key.trim().to_string(), value.trim().to_string());
        }
        for (key, value) in pairs {
            cfg.set(&key, &value)?;
        }
        Ok(cfg)
    }

    /// Apply one key=value pair (file lines and CLI overrides share this).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "ntx" => self.n_tx = parse(key, value)?,
            "k" => self.k_pairs = parse(key, value)?,
            "eps" => self.eps = parse(key, value)?,
            "snr" => self.snr_db_list = parse_list(key, value)?,
            "trials" => self.trials = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "methods" => {
                self.methods = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| {
                        s.parse::<Method>().map_err(|e| ConfigError::InvalidValue {
                            key: key.to_string(),
                            detail: e,
                        })
                    })
                    .collect::<Result<_, _>>()?
            }
            "sca_max_iter" => self.sca.max_iter = parse(key, value)?,
            "sca_obj_tol" => self.sca.obj_tol = parse(key, value)?,
            "sca_init_attempts" => self.sca.init_attempts = parse(key, value)?,
            "sca_rand_samples" => self.sca.randomization_samples = parse(key, value)?,
            "sca_strict_sign" => self.sca.strict_sign_check = parse(key, value)?,
            "zf_select" => {
                self.zf_selection = match value.trim() {
                    "exhaustive" => SelectionMode::Exhaustive,
                    "heuristic" => SelectionMode::Heuristic,
                    other => {
                        return Err(ConfigError::InvalidValue {
                            key: key.to_string(),
                            detail: format!("`{other}` (expected exhaustive or heuristic)"),
                        })
                    }
                }
            }
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.k_pairs < 1 || self.n_tx < self.k_pairs {
            return Err(ConfigError::Invalid(format!(
                "need n_tx >= k >= 1, got n_tx={} k={}",
                self.n_tx, self.k_pairs
            )));
        }
        if self.eps.is_nan() || self.eps < 0.0 {
            return Err(ConfigError::Invalid(format!(
                "eps must be >= 0, got {}",
                self.eps
            )));
        }
        if self.snr_db_list.is_empty() {
            return Err(ConfigError::Invalid("snr list must be nonempty".into()));
        }
        if self.trials < 1 {
            return Err(ConfigError::Invalid("trials must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(ConfigError::Invalid("methods must be nonempty".into()));
        }
        Ok(())
    }

    /// Sum power for an SNR point under the unit-noise convention.
    pub fn power(snr_db: f64) -> f64 {
        10f64.powf(snr_db / 10.0)
    }
}
