//! Simulation configuration: flat TOML key-value file plus environment overrides.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::constellation::CodeRate;
use crate::error::{Error, Result};

pub const ENV_SEED: &str = "PASLDPC_SEED";
pub const ENV_WORKERS: &str = "PASLDPC_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub code: PathBuf,
    /// Spectral efficiencies to simulate.
    pub rates: Vec<f64>,
    pub snr_start: f64,
    pub snr_stop: f64,
    pub snr_step: f64,
    pub target_fer: f64,
    pub max_frames: u64,
    pub min_errors: u64,
    pub master_seed: u64,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub max_iter: usize,
    pub code_rate: CodeRate,
    pub m: usize,
    /// Record wall-clock time per point (otherwise written as 0).
    pub record_timing: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            code: PathBuf::new(),
            rates: Vec::new(),
            snr_start: 0.0,
            snr_stop: 0.0,
            snr_step: 0.25,
            target_fer: 1e-3,
            max_frames: 100_000,
            min_errors: 100,
            master_seed: 1,
            workers: 0,
            max_iter: 100,
            code_rate: CodeRate { num: 13, den: 16 },
            m: 4,
            record_timing: false,
        }
    }
}

/// File layout; every key is optional and falls back to [`SimConfig::default`].
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    code: Option<PathBuf>,
    #[serde(rename = "R")]
    rates: Option<Vec<f64>>,
    snr: Option<String>,
    target_fer: Option<f64>,
    max_frames: Option<u64>,
    min_errors: Option<u64>,
    seed: Option<u64>,
    workers: Option<usize>,
    max_iter: Option<usize>,
    rate: Option<String>,
    m: Option<usize>,
    record_timing: Option<bool>,
}

impl SimConfig {
    /// Parses a flat TOML file such as
    ///
    /// ```text
    /// code = "code.alist"
    /// R = [1.1, 2.1]
    /// snr = "4.0:6.0:0.25"
    /// rate = "13/16"
    /// seed = 7
    /// ```
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let mut c = SimConfig::default();
        if let Some(v) = raw.code {
            c.code = v;
        }
        if let Some(v) = raw.rates {
            c.rates = v;
        }
        if let Some(v) = raw.snr {
            c.set_snr(&v)?;
        }
        if let Some(v) = raw.rate {
            c.code_rate = v
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad code rate {v:?}")))?;
        }
        c.target_fer = raw.target_fer.unwrap_or(c.target_fer);
        c.max_frames = raw.max_frames.unwrap_or(c.max_frames);
        c.min_errors = raw.min_errors.unwrap_or(c.min_errors);
        c.master_seed = raw.seed.unwrap_or(c.master_seed);
        c.workers = raw.workers.unwrap_or(c.workers);
        c.max_iter = raw.max_iter.unwrap_or(c.max_iter);
        c.m = raw.m.unwrap_or(c.m);
        c.record_timing = raw.record_timing.unwrap_or(c.record_timing);
        Ok(c)
    }

    /// Sets the sweep from `start:stop:step` (or a single SNR).
    pub fn set_snr(&mut self, spec: &str) -> Result<()> {
        let grid = crate::parse_grid(spec)?;
        self.snr_start = grid[0];
        self.snr_stop = *grid.last().expect("non-empty grid");
        self.snr_step = match spec.split(':').nth(2) {
            Some(step) => step
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad grid {spec:?}")))?,
            None => 1.0,
        };
        Ok(())
    }

    /// Applies seed and worker overrides from `lookup` (normally the process environment).
    pub fn apply_env_with(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(v) = lookup(ENV_SEED) {
            self.master_seed = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("{ENV_SEED}={v:?}")))?;
        }
        if let Some(v) = lookup(ENV_WORKERS) {
            self.workers = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("{ENV_WORKERS}={v:?}")))?;
        }
        Ok(())
    }

    pub fn apply_env(&mut self) -> Result<()> {
        self.apply_env_with(|k| std::env::var(k).ok())
    }

    pub fn snr_grid(&self) -> Result<Vec<f64>> {
        crate::step_grid(self.snr_start, self.snr_stop, self.snr_step)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.min_errors < 1 {
            return bad("min_errors must be at least 1".into());
        }
        if !(self.snr_step > 0.0) {
            return bad("SNR step must be positive".into());
        }
        if self.rates.is_empty() {
            return bad("no spectral efficiencies given".into());
        }
        if !(self.target_fer > 0.0 && self.target_fer < 1.0) {
            return bad("target FER must lie in (0, 1)".into());
        }
        if self.max_frames == 0 {
            return bad("max_frames must be positive".into());
        }
        self.snr_grid().map(|_| ())
    }
}
