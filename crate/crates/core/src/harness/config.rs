use std::fmt;
use std::str::FromStr;

use crate::admm::{AdmmConfig, Dims};
use crate::baselines::{DEFAULT_BF_BUDGET, DEFAULT_BF_INNER_N_MAX};
use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::metrics::PowerModel;
use crate::quantization::QuantizationBounds;

/// Candidate trade-off weights tried by the per-trial γ search.
pub const GAMMA_GRID: [f64; 7] = [0.001, 0.00215, 0.00464, 0.01, 0.0215, 0.0464, 0.1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Admm,
    Hybrid1,
    Hybrid8,
    Digital,
    Bf,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Admm,
        Scheme::Hybrid1,
        Scheme::Hybrid8,
        Scheme::Digital,
        Scheme::Bf,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Scheme::Admm => "admm",
            Scheme::Hybrid1 => "hybrid1",
            Scheme::Hybrid8 => "hybrid8",
            Scheme::Digital => "digital",
            Scheme::Bf => "bf",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.label() == s.trim())
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown scheme '{s}' (expected admm, hybrid1, hybrid8, digital or bf)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    SnrDb,
    NRx,
    NTx,
    Gamma,
}

impl SweepVar {
    pub fn label(self) -> &'static str {
        match self {
            SweepVar::SnrDb => "snr_db",
            SweepVar::NRx => "n_rx",
            SweepVar::NTx => "n_tx",
            SweepVar::Gamma => "gamma",
        }
    }
}

impl FromStr for SweepVar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().replace('-', "_").as_str() {
            "snr_db" | "snr" => Ok(SweepVar::SnrDb),
            "n_rx" | "nrx" => Ok(SweepVar::NRx),
            "n_tx" | "ntx" => Ok(SweepVar::NTx),
            "gamma" => Ok(SweepVar::Gamma),
            _ => Err(Error::config(format!(
                "unknown sweep variable '{s}' (expected snr_db, n_rx, n_tx or gamma)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVar,
    pub values: Vec<f64>,
}

impl SweepSpec {
    pub fn new(variable: SweepVar, values: Vec<f64>) -> Result<Self> {
        let spec = Self { variable, values };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config("sweep needs at least one value"));
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::config(format!("sweep value {v} is not finite")));
        }
        if matches!(self.variable, SweepVar::NRx | SweepVar::NTx) {
            if let Some(v) = self.values.iter().find(|v| v.fract() != 0.0 || **v < 1.0) {
                return Err(Error::config(format!(
                    "{} sweep value {v} is not a positive integer",
                    self.variable.label()
                )));
            }
        }
        Ok(())
    }

    /// Copy of `base` with the swept variable set to `value`.
    pub fn apply(&self, base: &ExperimentConfig, value: f64) -> ExperimentConfig {
        let mut cfg = base.clone();
        match self.variable {
            SweepVar::SnrDb => cfg.snr_db = value,
            SweepVar::NRx => cfg.n_rx = value as usize,
            SweepVar::NTx => cfg.n_tx = value as usize,
            SweepVar::Gamma => cfg.gamma = value,
        }
        cfg
    }
}

/// How per-trial rates and powers become one EE figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EeAggregation {
    /// Mean of the per-trial `rate / power`.
    #[default]
    RatioMean,
    /// Mean rate over mean power.
    MeanRatio,
}

impl FromStr for EeAggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ratio-mean" => Ok(EeAggregation::RatioMean),
            "mean-ratio" => Ok(EeAggregation::MeanRatio),
            _ => Err(Error::config(format!(
                "unknown EE aggregation '{s}' (expected ratio-mean or mean-ratio)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub l_r: usize,
    pub n_s: usize,
    pub n_cl: usize,
    pub n_ray: usize,
    pub snr_db: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub n_max: usize,
    pub bounds: QuantizationBounds,
    pub pm: PowerModel,
    pub trials: usize,
    pub seed: u64,
    /// Reported in this order.
    pub schemes: Vec<Scheme>,
    /// Pick γ per trial from [`GAMMA_GRID`] by best EE instead of using `gamma`.
    pub gamma_search: bool,
    pub ee_agg: EeAggregation,
    /// Iterations per brute-force candidate.
    pub bf_inner_n_max: usize,
    pub bf_budget: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_tx: 32,
            n_rx: 16,
            l_r: 4,
            n_s: 4,
            n_cl: 2,
            n_ray: 4,
            snr_db: 20.0,
            gamma: 0.01,
            alpha: 1.0,
            n_max: 40,
            bounds: QuantizationBounds::default(),
            pm: PowerModel::default(),
            trials: 200,
            seed: 1,
            schemes: vec![Scheme::Admm, Scheme::Hybrid1, Scheme::Hybrid8, Scheme::Digital],
            gamma_search: false,
            ee_agg: EeAggregation::RatioMean,
            bf_inner_n_max: DEFAULT_BF_INNER_N_MAX,
            bf_budget: DEFAULT_BF_BUDGET,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(format!("{key}: cannot parse '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "" | "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::config(format!("{key}: expected a boolean, got '{value}'"))),
    }
}

/// Splits a comma list, dropping empty items.
pub(crate) fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// Parses flat `key = value` text. Blank lines and `#` comments are skipped;
/// keys are normalized to lower case with `_` read as `-`.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}: expected key=value, got '{line}'", n + 1)))?;
        let key = k.trim().to_ascii_lowercase().replace('_', "-");
        if key.is_empty() {
            return Err(Error::config(format!("line {}: empty key", n + 1)));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

impl ExperimentConfig {
    /// Sets one field from its flag name (without the leading dashes).
    /// Returns `Ok(false)` for keys that are not experiment fields.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        let key = key
            .trim()
            .trim_start_matches('-')
            .to_ascii_lowercase()
            .replace('_', "-");
        match key.as_str() {
            "ntx" => self.n_tx = parse_num(&key, value)?,
            "nrx" => self.n_rx = parse_num(&key, value)?,
            "lr" => self.l_r = parse_num(&key, value)?,
            "ns" => self.n_s = parse_num(&key, value)?,
            "ncl" => self.n_cl = parse_num(&key, value)?,
            "nray" => self.n_ray = parse_num(&key, value)?,
            "snr-db" => self.snr_db = parse_num(&key, value)?,
            "gamma" => self.gamma = parse_num(&key, value)?,
            "alpha" => self.alpha = parse_num(&key, value)?,
            "nmax" => self.n_max = parse_num(&key, value)?,
            "bmin" => self.bounds.b_min = parse_num(&key, value)?,
            "bmax" => self.bounds.b_max = parse_num(&key, value)?,
            "trials" => self.trials = parse_num(&key, value)?,
            "seed" => self.seed = parse_num(&key, value)?,
            "schemes" => {
                let mut schemes: Vec<Scheme> = split_list(value).map(Scheme::from_str).collect::<Result<_>>()?;
                let mut seen = std::collections::HashSet::new();
                schemes.retain(|s| seen.insert(*s));
                self.schemes = schemes;
            }
            "gamma-search" => self.gamma_search = parse_bool(&key, value)?,
            "ee-agg" => self.ee_agg = value.parse()?,
            "bf-nmax" => self.bf_inner_n_max = parse_num(&key, value)?,
            "bf-budget" => self.bf_budget = parse_num(&key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| match e {
            Error::InvalidInput(m) | Error::Domain(m) | Error::Config(m) => Error::Config(m),
            other => Error::config(other.to_string()),
        };
        Dims {
            n_r: self.n_rx,
            l_r: self.l_r,
            n_s: self.n_s,
        }
        .validate()
        .map_err(cfg_err)?;
        self.channel_params().validate().map_err(cfg_err)?;
        if self.n_s > self.n_tx {
            return Err(Error::config(format!("N_s={} exceeds N_T={}", self.n_s, self.n_tx)));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::config("snr_db must be finite"));
        }
        self.admm_config().validate().map_err(cfg_err)?;
        self.pm.validate().map_err(cfg_err)?;
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if self.schemes.is_empty() {
            return Err(Error::config("no schemes selected"));
        }
        if self.schemes.contains(&Scheme::Bf) {
            if self.bf_inner_n_max == 0 {
                return Err(Error::config("brute-force inner iteration count must be at least 1"));
            }
            let n = crate::baselines::candidate_count(self.l_r..=self.l_r, &self.bounds, false);
            if n.is_none_or(|n| n > self.bf_budget) {
                return Err(Error::config(format!(
                    "brute force over L_R={} with {} levels exceeds the budget of {} candidates",
                    self.l_r,
                    self.bounds.levels(),
                    self.bf_budget
                )));
            }
        }
        Ok(())
    }

    pub fn channel_params(&self) -> ChannelParams {
        ChannelParams {
            n_clusters: self.n_cl,
            n_rays: self.n_ray,
            ..ChannelParams::with_antennas(self.n_tx, self.n_rx)
        }
    }

    pub fn admm_config(&self) -> AdmmConfig {
        AdmmConfig {
            alpha: self.alpha,
            gamma: self.gamma,
            n_max: self.n_max,
            bounds: self.bounds,
            ..AdmmConfig::default()
        }
    }

    /// Noise variance for unit transmit power, `1 / SNR`.
    pub fn sigma_n2(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }
}
