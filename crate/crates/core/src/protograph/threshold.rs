//! Asymptotic decoding thresholds: the smallest SNR at which PEXIT converges
//! with surrogates re-fitted at that SNR.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use super::pexit::{pexit_converges, PexitConfig};
use super::BaseMatrix;
use crate::constellation::{operating_pmf, AskConstellation, CodeRate, ShapedSource, SymbolPmf};
use crate::error::{Error, Result};
use crate::rates::{bmd_rate_inverse_db, capacity_snr_db};
use crate::surrogate::{fit_surrogates, SurrogateSet};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Bisection grid and bracket for threshold searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSearch {
    pub resolution_db: f64,
    pub below_capacity_db: f64,
    pub above_capacity_db: f64,
    pub pexit: PexitConfig,
}

impl Default for ThresholdSearch {
    fn default() -> Self {
        ThresholdSearch {
            resolution_db: 0.01,
            below_capacity_db: 1.0,
            above_capacity_db: 8.0,
            pexit: PexitConfig::default(),
        }
    }
}

/// Everything about one spectral efficiency that does not depend on the code:
/// the MB input, its required SNR and a cache of surrogates per probed SNR.
#[derive(Debug)]
pub struct OperatingContext {
    se: f64,
    constellation: AskConstellation,
    pmf: SymbolPmf,
    cache: Mutex<HashMap<i64, Option<Arc<SurrogateSet>>>>,
    required_db: OnceLock<std::result::Result<f64, Error>>,
}

impl OperatingContext {
    pub fn new(se: f64, rate: CodeRate, m: usize) -> Result<Self> {
        Ok(OperatingContext {
            se,
            constellation: AskConstellation::new(m)?,
            pmf: operating_pmf(se, rate, m)?,
            cache: Mutex::new(HashMap::new()),
            required_db: OnceLock::new(),
        })
    }

    pub fn se(&self) -> f64 {
        self.se
    }

    pub fn pmf(&self) -> &SymbolPmf {
        &self.pmf
    }

    pub fn capacity_db(&self) -> f64 {
        capacity_snr_db(self.se)
    }

    /// SNR (dB) at which the BMD rate of the operating PMF equals the SE.
    pub fn required_snr_db(&self) -> Result<f64> {
        self.required_db
            .get_or_init(|| bmd_rate_inverse_db(&self.constellation, &self.pmf, self.se))
            .clone()
    }

    /// Surrogates at `snr_db`; `None` when a bit-channel is degenerate there.
    pub fn surrogates_at(&self, snr_db: f64) -> Result<Option<Arc<SurrogateSet>>> {
        let key = (snr_db * 1e6).round() as i64;
        if let Some(hit) = self.cache.lock().expect("cache poisoned").get(&key) {
            return Ok(hit.clone());
        }
        let source = ShapedSource::at_snr_db(self.constellation.clone(), self.pmf.clone(), snr_db)?;
        let fitted = match fit_surrogates(&source, self.se) {
            Ok(set) => Some(Arc::new(set)),
            Err(Error::DegenerateChannel { .. }) => None,
            Err(e) => return Err(e),
        };
        self.cache
            .lock()
            .expect("cache poisoned")
            .insert(key, fitted.clone());
        Ok(fitted)
    }

    pub fn converges_at(
        &self,
        base: &BaseMatrix,
        snr_db: f64,
        config: &PexitConfig,
    ) -> Result<bool> {
        match self.surrogates_at(snr_db)? {
            Some(set) => Ok(pexit_converges(base, &set, config)?.converged),
            None => Ok(false),
        }
    }
}

/// Threshold result, serialised as the `threshold` report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub schema_version: u32,
    #[serde(rename = "R")]
    pub se: f64,
    pub threshold_db: f64,
    pub capacity_db: f64,
    pub gap_db: f64,
    pub required_snr_db: f64,
    pub backoff_db: f64,
    /// Surrogate `σ_i` at the threshold.
    pub sigmas: Vec<f64>,
}

fn threshold_index(
    base: &BaseMatrix,
    ctx: &OperatingContext,
    search: &ThresholdSearch,
) -> Result<i64> {
    let res = search.resolution_db;
    if !(res > 0.0) {
        return Err(Error::InvalidParameter(
            "threshold resolution must be positive".into(),
        ));
    }
    let cap = ctx.capacity_db();
    let mut lo = ((cap - search.below_capacity_db) / res).floor() as i64;
    let hi_start = ((cap + search.above_capacity_db) / res).ceil() as i64;
    let mut hi = hi_start;
    let ok = |idx: i64| ctx.converges_at(base, idx as f64 * res, &search.pexit);
    if !ok(hi)? {
        return Err(Error::DivergedEnsemble {
            snr_db: hi as f64 * res,
        });
    }
    let step = (1.0 / res).round().max(1.0) as i64;
    let mut extensions = 0;
    while ok(lo)? {
        // the surrogate approximation may converge below capacity; widen downwards
        hi = lo;
        lo -= step;
        extensions += 1;
        if extensions > 20 {
            return Ok(hi);
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Threshold in dB for spectral efficiency `se` with the default search.
pub fn threshold(base: &BaseMatrix, se: f64, rate: CodeRate, m: usize) -> Result<f64> {
    let ctx = OperatingContext::new(se, rate, m)?;
    threshold_db(base, &ctx, &ThresholdSearch::default())
}

/// Threshold in dB under an explicit context and search grid.
pub fn threshold_db(
    base: &BaseMatrix,
    ctx: &OperatingContext,
    search: &ThresholdSearch,
) -> Result<f64> {
    Ok(threshold_index(base, ctx, search)? as f64 * search.resolution_db)
}

/// Threshold plus gaps and the surrogates at the threshold.
pub fn threshold_report(
    base: &BaseMatrix,
    ctx: &OperatingContext,
    search: &ThresholdSearch,
) -> Result<ThresholdReport> {
    let threshold_db = threshold_db(base, ctx, search)?;
    let required = ctx.required_snr_db()?;
    let sigmas = ctx
        .surrogates_at(threshold_db)?
        .map(|s| s.sigmas.clone())
        .unwrap_or_default();
    Ok(ThresholdReport {
        schema_version: REPORT_SCHEMA_VERSION,
        se: ctx.se(),
        threshold_db,
        capacity_db: ctx.capacity_db(),
        gap_db: threshold_db - ctx.capacity_db(),
        required_snr_db: required,
        backoff_db: threshold_db - required,
        sigmas,
    })
}

/// `(R, threshold_dB - 10 log10(2^{2R} - 1))` over a grid of spectral efficiencies.
pub fn gap_curve(
    base: &BaseMatrix,
    grid: &[f64],
    rate: CodeRate,
    m: usize,
    search: &ThresholdSearch,
) -> Result<Vec<(f64, f64)>> {
    crate::par::map(grid, |&se| -> Result<(f64, f64)> {
        let ctx = OperatingContext::new(se, rate, m)?;
        let th = threshold_db(base, &ctx, search)?;
        Ok((se, th - ctx.capacity_db()))
    })
    .into_iter()
    .collect()
}
