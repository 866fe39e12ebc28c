//! Binary-input AWGN surrogates for the BICM bit-channels.
//!
//! Each bit-channel is replaced by a channel whose LLR is Gaussian with mean
//! `±2/σ²` and variance `4/σ²`; `σ` is chosen so that both channels have the
//! same conditional entropy of the input bit given the observation.

use serde::{Deserialize, Serialize};

use crate::constellation::{operating_pmf, AskConstellation, CodeRate, ShapedSource};
use crate::error::{Error, Result};
use crate::quadrature::{normal_expect_near, softplus};
use crate::rates::bit_channel_stats;

pub const SIGMA_MIN: f64 = 1e-6;
pub const SIGMA_MAX: f64 = 1e3;
/// Targets at or below this value are clamped to [`SIGMA_MIN`].
pub const ENTROPY_FLOOR: f64 = 1e-12;
/// Required agreement between fitted and target conditional entropy.
pub const FIT_TOL: f64 = 1e-8;

/// `H(B | L)` in bits for a binary-input AWGN channel with noise std `sigma`.
///
/// Uses `E[log2(1 + exp(-L))]` with `L ~ N(2/σ², 4/σ²)`.
pub fn biawgn_cond_entropy(sigma: f64) -> f64 {
    let mean = 2.0 / (sigma * sigma);
    let std = 2.0 / sigma;
    // softplus(-L) turns over at L = 0, i.e. z = -mean / std, within ~1/std
    normal_expect_near(-mean / std, 1.0 / std, |z| softplus(-(mean + std * z)))
        / std::f64::consts::LN_2
}

/// Surrogate noise parameters for one `(SNR, P_X)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSet {
    /// `σ_i` for levels `1..=m`.
    pub sigmas: Vec<f64>,
    pub snr_db: f64,
    pub se: f64,
    /// Levels whose target entropy was below [`ENTROPY_FLOOR`].
    #[serde(default)]
    pub clamped: Vec<bool>,
}

impl SurrogateSet {
    /// Builds a set directly from noise parameters.
    pub fn from_sigmas(sigmas: Vec<f64>, snr_db: f64, se: f64) -> Result<Self> {
        if sigmas.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidParameter(
                "surrogate sigmas must be positive and finite".into(),
            ));
        }
        let clamped = vec![false; sigmas.len()];
        Ok(SurrogateSet {
            sigmas,
            snr_db,
            se,
            clamped,
        })
    }

    pub fn m(&self) -> usize {
        self.sigmas.len()
    }

    /// Mean of the surrogate LLR for level `level` (1-based).
    pub fn llr_mean(&self, level: usize) -> f64 {
        let s = self.sigmas[level - 1];
        2.0 / (s * s)
    }

    /// Standard deviation of the surrogate LLR, `2 / σ`.
    pub fn llr_std(&self, level: usize) -> f64 {
        2.0 / self.sigmas[level - 1]
    }
}

/// Finds `σ` with `biawgn_cond_entropy(σ) = target`.
pub fn sigma_for_entropy(target: f64) -> Result<(f64, bool)> {
    if !target.is_finite() || target < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "conditional entropy {target} out of range"
        )));
    }
    if target <= ENTROPY_FLOOR {
        return Ok((SIGMA_MIN, true));
    }
    if target >= 1.0 - ENTROPY_FLOOR || target >= biawgn_cond_entropy(SIGMA_MAX) {
        return Err(Error::DegenerateChannel {
            level: 0,
            entropy: target,
        });
    }
    let (mut lo, mut hi) = (SIGMA_MIN.ln(), SIGMA_MAX.ln());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let h = biawgn_cond_entropy(mid.exp());
        if (h - target).abs() <= 1e-12 {
            return Ok((mid.exp(), false));
        }
        if h < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 {
            break;
        }
    }
    let sigma = (0.5 * (lo + hi)).exp();
    let residual = (biawgn_cond_entropy(sigma) - target).abs();
    if residual > FIT_TOL {
        return Err(Error::NumericFailure(format!(
            "surrogate fit residual {residual:.3e} for target {target}"
        )));
    }
    Ok((sigma, false))
}

/// Fits one surrogate per bit level of `source`.
pub fn fit_surrogates(source: &ShapedSource, se: f64) -> Result<SurrogateSet> {
    let stats = bit_channel_stats(source)?;
    fit_entropies(&stats.cond_entropy, source.snr_db(), se)
}

/// Fits surrogates to given per-level conditional entropies.
pub fn fit_entropies(cond_entropy: &[f64], snr_db: f64, se: f64) -> Result<SurrogateSet> {
    let mut sigmas = Vec::with_capacity(cond_entropy.len());
    let mut clamped = Vec::with_capacity(cond_entropy.len());
    for (i, &h) in cond_entropy.iter().enumerate() {
        let (s, c) = sigma_for_entropy(h).map_err(|e| match e {
            Error::DegenerateChannel { entropy, .. } => Error::DegenerateChannel {
                level: i + 1,
                entropy,
            },
            other => other,
        })?;
        sigmas.push(s);
        clamped.push(c);
    }
    Ok(SurrogateSet {
        sigmas,
        snr_db,
        se,
        clamped,
    })
}

/// Surrogates for the MB operating PMF of spectral efficiency `se` at `snr_db`.
pub fn fit_at_operating_point(
    se: f64,
    rate: CodeRate,
    m: usize,
    snr_db: f64,
) -> Result<SurrogateSet> {
    let constellation = AskConstellation::new(m)?;
    let pmf = operating_pmf(se, rate, m)?;
    let source = ShapedSource::at_snr_db(constellation, pmf, snr_db)?;
    fit_surrogates(&source, se)
}

/// Levels (1-based) sorted by increasing `σ`, ties broken by level index.
pub fn ordering_signature(set: &SurrogateSet) -> Vec<usize> {
    let mut levels: Vec<usize> = (1..=set.m()).collect();
    levels.sort_by(|&a, &b| {
        set.sigmas[a - 1]
            .total_cmp(&set.sigmas[b - 1])
            .then(a.cmp(&b))
    });
    levels
}
