//! ASK constellations with binary reflected Gray code (BRGC) labels and
//! Maxwell-Boltzmann (MB) shaping.
//!
//! Points are stored in ascending order `-(2^m - 1), ..., -1, 1, ..., 2^m - 1`.
//! Bit level 1 is the sign bit (`0` for negative points), levels `2..=m`
//! carry the Gray codeword of the amplitude index, level 2 being its most
//! significant bit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::entropy_bits;

const ENTROPY_TOL: f64 = 1e-12;
const NU_MAX: f64 = 10.0;
const MAX_BISECTIONS: usize = 200;

/// Binary reflected Gray code of `index`.
pub fn gray(index: u32) -> u32 {
    index ^ (index >> 1)
}

/// Inverse of [`gray`].
pub fn gray_inverse(code: u32) -> u32 {
    let mut index = code;
    let mut shift = code >> 1;
    while shift != 0 {
        index ^= shift;
        shift >>= 1;
    }
    index
}

/// A `2^m`-ASK constellation with its bit labels.
#[derive(Debug, Clone, PartialEq)]
pub struct AskConstellation {
    m: usize,
    points: Vec<f64>,
    labels: Vec<u32>,
}

impl AskConstellation {
    /// Builds the labeled `2^m`-ASK constellation, `2 <= m <= 8`.
    pub fn new(m: usize) -> Result<Self> {
        if !(2..=8).contains(&m) {
            return Err(Error::InvalidParameter(format!(
                "bits per symbol must be in 2..=8, got {m}"
            )));
        }
        let size = 1usize << m;
        let half = size / 2;
        let mut points = Vec::with_capacity(size);
        let mut labels = Vec::with_capacity(size);
        for p in 0..size {
            let x = 2 * p as i64 - (size as i64 - 1);
            let amp = ((x.unsigned_abs() - 1) / 2) as u32;
            let sign_bit = u32::from(x > 0);
            points.push(x as f64);
            labels.push((sign_bit << (m - 1)) | gray(amp));
        }
        debug_assert_eq!(points.len(), 2 * half);
        Ok(AskConstellation { m, points, labels })
    }

    /// Bits per symbol.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn size(&self) -> usize {
        self.points.len()
    }

    /// Number of distinct amplitudes, `2^(m-1)`.
    pub fn num_amplitudes(&self) -> usize {
        self.points.len() / 2
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Labels as integers with bit level 1 in the most significant position.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Bit of `point` at `level` (1-based).
    pub fn bit(&self, point: usize, level: usize) -> u8 {
        debug_assert!((1..=self.m).contains(&level));
        ((self.labels[point] >> (self.m - level)) & 1) as u8
    }

    /// Amplitude index `(|x| - 1) / 2` of `point`.
    pub fn amplitude_index(&self, point: usize) -> usize {
        let half = self.num_amplitudes();
        if point >= half {
            point - half
        } else {
            half - 1 - point
        }
    }

    /// Point index for a sign bit and amplitude index.
    pub fn point_index(&self, sign_bit: u8, amplitude: usize) -> usize {
        let half = self.num_amplitudes();
        if sign_bit == 1 {
            half + amplitude
        } else {
            half - 1 - amplitude
        }
    }

    /// The `m - 1` amplitude bits (levels 2..=m) of amplitude index `amplitude`.
    pub fn amplitude_bits(&self, amplitude: usize) -> impl Iterator<Item = u8> + '_ {
        let code = gray(amplitude as u32);
        (0..self.m - 1).map(move |i| ((code >> (self.m - 2 - i)) & 1) as u8)
    }

    /// Amplitude index for the given levels-2..=m bits.
    pub fn amplitude_from_bits(&self, bits: &[u8]) -> usize {
        debug_assert_eq!(bits.len(), self.m - 1);
        let code = bits.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b));
        gray_inverse(code) as usize
    }
}

/// Parses and evaluates a code rate written as `num/den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeRate {
    pub num: u32,
    pub den: u32,
}

impl CodeRate {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if den == 0 || num == 0 || num >= den {
            return Err(Error::InvalidParameter(format!(
                "code rate must lie in (0, 1), got {num}/{den}"
            )));
        }
        Ok(CodeRate { num, den })
    }

    pub fn value(&self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }

    /// Entropy overhead `(1 - c) m` paid by the parity bits.
    pub fn overhead(&self, m: usize) -> f64 {
        f64::from(self.den - self.num) * m as f64 / f64::from(self.den)
    }
}

impl fmt::Display for CodeRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for CodeRate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (n, d) = s
            .split_once('/')
            .ok_or_else(|| Error::Parse(format!("expected num/den, got {s:?}")))?;
        let num = n
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
        let den = d
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in {s:?}")))?;
        CodeRate::new(num, den)
    }
}

/// Probability mass function over the points of a constellation.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolPmf {
    probs: Vec<f64>,
}

impl SymbolPmf {
    /// Validates and wraps a probability vector.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidParameter(
                "PMF entries must be finite and >= 0".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "PMF sums to {total}, not 1"
            )));
        }
        Ok(SymbolPmf { probs })
    }

    pub fn uniform(size: usize) -> Self {
        SymbolPmf {
            probs: vec![1.0 / size as f64; size],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Entropy `H(X)` in bits.
    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.probs)
    }

    /// Second moment `E[X^2]` over the constellation points.
    pub fn energy(&self, constellation: &AskConstellation) -> f64 {
        self.probs
            .iter()
            .zip(constellation.points())
            .map(|(p, x)| p * x * x)
            .sum()
    }

    /// Amplitude marginal `P_A(a) = P_X(a) + P_X(-a)`, indexed by amplitude index.
    pub fn amplitude_pmf(&self, constellation: &AskConstellation) -> Vec<f64> {
        let half = constellation.num_amplitudes();
        (0..half)
            .map(|a| {
                self.probs[constellation.point_index(0, a)]
                    + self.probs[constellation.point_index(1, a)]
            })
            .collect()
    }

    /// Marginal `P(B_level = 1)`.
    pub fn bit_one_probability(&self, constellation: &AskConstellation, level: usize) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(p, _)| constellation.bit(*p, level) == 1)
            .map(|(_, q)| q)
            .sum()
    }
}

/// Maxwell-Boltzmann PMF `P(x) ∝ exp(-nu x^2)`.
pub fn mb_pmf(constellation: &AskConstellation, nu: f64) -> Result<SymbolPmf> {
    if !nu.is_finite() || nu < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "MB parameter must be finite and >= 0, got {nu}"
        )));
    }
    // shift by the smallest energy (x^2 = 1) so the largest weight is exactly 1
    let weights: Vec<f64> = constellation
        .points()
        .iter()
        .map(|x| (-nu * (x * x - 1.0)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    Ok(SymbolPmf {
        probs: weights.into_iter().map(|w| w / total).collect(),
    })
}

/// Finds the MB parameter whose PMF has entropy `target_entropy` bits.
pub fn mb_nu_for_entropy(constellation: &AskConstellation, target_entropy: f64) -> Result<f64> {
    let max = constellation.m() as f64;
    if !(target_entropy > 1.0 && target_entropy <= max + ENTROPY_TOL) {
        return Err(Error::InfeasibleEntropy {
            target: target_entropy,
            min: 1.0,
            max,
        });
    }
    let entropy_at = |nu: f64| mb_pmf(constellation, nu).map(|p| p.entropy());
    if (max - target_entropy).abs() <= ENTROPY_TOL {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, NU_MAX);
    if entropy_at(hi)? > target_entropy {
        return Err(Error::InfeasibleEntropy {
            target: target_entropy,
            min: entropy_at(hi)?,
            max,
        });
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let h = entropy_at(mid)?;
        if (h - target_entropy).abs() <= ENTROPY_TOL {
            return Ok(mid);
        }
        if h > target_entropy {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let nu = 0.5 * (lo + hi);
    let h = entropy_at(nu)?;
    if (h - target_entropy).abs() > 1e-9 {
        return Err(Error::NumericFailure(format!(
            "MB entropy bisection stalled at {h} bits for target {target_entropy}"
        )));
    }
    Ok(nu)
}

/// MB PMF with entropy `target_entropy` bits.
pub fn mb_from_entropy(constellation: &AskConstellation, target_entropy: f64) -> Result<SymbolPmf> {
    mb_pmf(
        constellation,
        mb_nu_for_entropy(constellation, target_entropy)?,
    )
}

/// Entropy `H(X)` needed for spectral efficiency `se` with code rate `rate`.
pub fn operating_entropy(se: f64, rate: CodeRate, m: usize) -> f64 {
    se + rate.overhead(m)
}

/// Spectral efficiency `H(X) - (1 - c) m` realised by a PMF.
pub fn spectral_efficiency(pmf: &SymbolPmf, rate: CodeRate, m: usize) -> f64 {
    pmf.entropy() - rate.overhead(m)
}

/// The MB PMF that yields spectral efficiency `se` with code rate `rate` on `2^m`-ASK.
pub fn operating_pmf(se: f64, rate: CodeRate, m: usize) -> Result<SymbolPmf> {
    let constellation = AskConstellation::new(m)?;
    let max_se = rate.value() * m as f64;
    if !(se > 0.0 && se <= max_se + ENTROPY_TOL) {
        return Err(Error::InfeasibleEntropy {
            target: operating_entropy(se, rate, m),
            min: 1.0,
            max: m as f64,
        });
    }
    mb_from_entropy(&constellation, operating_entropy(se, rate, m))
}

/// Channel input model `Delta * X` with `X ~ pmf`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapedSource {
    pub constellation: AskConstellation,
    pub pmf: SymbolPmf,
    pub delta: f64,
}

impl ShapedSource {
    pub fn new(constellation: AskConstellation, pmf: SymbolPmf, delta: f64) -> Result<Self> {
        if pmf.probs().len() != constellation.size() {
            return Err(Error::InvalidParameter(
                "PMF size does not match constellation".into(),
            ));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scaling must be positive, got {delta}"
            )));
        }
        Ok(ShapedSource {
            constellation,
            pmf,
            delta,
        })
    }

    /// Source scaled so that `E[(Delta X)^2] = snr_linear`.
    pub fn at_snr(
        constellation: AskConstellation,
        pmf: SymbolPmf,
        snr_linear: f64,
    ) -> Result<Self> {
        let source = ShapedSource::new(constellation, pmf, 1.0)?;
        source.scale_to_snr(snr_linear)
    }

    pub fn at_snr_db(constellation: AskConstellation, pmf: SymbolPmf, snr_db: f64) -> Result<Self> {
        Self::at_snr(constellation, pmf, crate::from_db(snr_db))
    }

    /// Rescales the source to the given linear SNR (unit noise variance).
    pub fn scale_to_snr(&self, snr_linear: f64) -> Result<Self> {
        if !(snr_linear > 0.0 && snr_linear.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "SNR must be positive, got {snr_linear}"
            )));
        }
        let energy = self.pmf.energy(&self.constellation);
        Ok(ShapedSource {
            constellation: self.constellation.clone(),
            pmf: self.pmf.clone(),
            delta: (snr_linear / energy).sqrt(),
        })
    }

    /// `E[(Delta X)^2]`.
    pub fn snr(&self) -> f64 {
        self.delta * self.delta * self.pmf.energy(&self.constellation)
    }

    pub fn snr_db(&self) -> f64 {
        crate::to_db(self.snr())
    }
}
