//! AWGN capacity, bit-channel entropies, BMD rates and operating points.

use serde::{Deserialize, Serialize};

use crate::constellation::{operating_pmf, AskConstellation, CodeRate, ShapedSource, SymbolPmf};
use crate::error::{Error, Result};
use crate::quadrature::{binary_entropy, GaussHermite};
use crate::{from_db, to_db};

/// Maximum accepted disagreement between two quadrature estimates.
pub const QUADRATURE_TOL: f64 = 1e-8;
const TRAPEZOID_SAMPLES: usize = 1 << 14;
const TAIL_SIGMAS: f64 = 8.0;
/// Upper end of the inverse-rate bracket above the capacity SNR.
pub const INVERSE_BRACKET_DB: f64 = 6.0;
const INVERSE_GRID: usize = 13;
const INVERSE_TOL: f64 = 1e-7;

/// `C(snr) = log2(1 + snr) / 2` bits per channel use.
pub fn awgn_capacity(snr_linear: f64) -> f64 {
    0.5 * (1.0 + snr_linear).log2()
}

/// SNR (linear) at which the AWGN capacity equals `rate`.
pub fn capacity_snr(rate: f64) -> f64 {
    (2.0 * rate).exp2() - 1.0
}

pub fn capacity_snr_db(rate: f64) -> f64 {
    to_db(capacity_snr(rate))
}

/// Per-level entropies of the BICM bit-channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitChannelStats {
    /// `H(B_i | Y)` for levels `1..=m`, in bits.
    pub cond_entropy: Vec<f64>,
    /// `H(B_i)` for levels `1..=m`, in bits.
    pub marginal_entropy: Vec<f64>,
    /// `H(B)`, equal to `H(X)` for a bijective labeling.
    pub label_entropy: f64,
}

impl BitChannelStats {
    /// `[H(B) - sum_i H(B_i | Y)]^+`.
    pub fn bmd_rate(&self) -> f64 {
        (self.label_entropy - self.cond_entropy.iter().sum::<f64>()).max(0.0)
    }
}

/// Evaluates the output density and per-level posterior entropies at `y`.
struct Posterior<'a> {
    source: &'a ShapedSource,
    centers: Vec<f64>,
    log_prior: Vec<f64>,
    // per level, the points with bit 0 and bit 1
    groups: Vec<[Vec<usize>; 2]>,
}

impl<'a> Posterior<'a> {
    fn new(source: &'a ShapedSource) -> Self {
        let c = &source.constellation;
        let centers = c.points().iter().map(|x| source.delta * x).collect();
        let log_prior = source.pmf.probs().iter().map(|p| p.ln()).collect();
        let groups = (1..=c.m())
            .map(|level| {
                let mut g = [Vec::new(), Vec::new()];
                for p in 0..c.size() {
                    g[c.bit(p, level) as usize].push(p);
                }
                g
            })
            .collect();
        Posterior {
            source,
            centers,
            log_prior,
            groups,
        }
    }

    /// Adds `weight * h(B_i | Y = y)` to `acc[i]` and returns `ln p(y) + ln sqrt(2 pi)`.
    fn accumulate(&self, y: f64, weight: f64, scratch: &mut [f64], acc: &mut [f64]) -> f64 {
        let mut max = f64::NEG_INFINITY;
        for (s, (c, lp)) in scratch
            .iter_mut()
            .zip(self.centers.iter().zip(&self.log_prior))
        {
            let d = y - c;
            *s = lp - 0.5 * d * d;
            max = max.max(*s);
        }
        let mut total = 0.0;
        for s in scratch.iter_mut() {
            *s = (*s - max).exp();
            total += *s;
        }
        for (level, g) in self.groups.iter().enumerate() {
            let one: f64 = g[1].iter().map(|&p| scratch[p]).sum();
            acc[level] += weight * binary_entropy(one / total);
        }
        max + total.ln()
    }

    fn by_hermite(&self, rule: &GaussHermite) -> Vec<f64> {
        let m = self.groups.len();
        let mut acc = vec![0.0; m];
        let mut scratch = vec![0.0; self.centers.len()];
        for (p, &prob) in self.source.pmf.probs().iter().enumerate() {
            if prob == 0.0 {
                continue;
            }
            for (z, w) in rule.points() {
                self.accumulate(self.centers[p] + z, prob * w, &mut scratch, &mut acc);
            }
        }
        acc
    }

    fn by_trapezoid(&self, samples: usize) -> Vec<f64> {
        let m = self.groups.len();
        let lo = self.centers[0] - TAIL_SIGMAS;
        let hi = self.centers[self.centers.len() - 1] + TAIL_SIGMAS;
        let h = (hi - lo) / (samples - 1) as f64;
        let norm = (2.0 * std::f64::consts::PI).sqrt();
        let mut acc = vec![0.0; m];
        let mut scratch = vec![0.0; self.centers.len()];
        let mut level_h = vec![0.0; m];
        for i in 0..samples {
            let y = lo + i as f64 * h;
            let end = if i == 0 || i == samples - 1 { 0.5 } else { 1.0 };
            level_h.iter_mut().for_each(|v| *v = 0.0);
            let log_density = self.accumulate(y, 1.0, &mut scratch, &mut level_h);
            let weight = end * h * log_density.exp() / norm;
            for (a, v) in acc.iter_mut().zip(&level_h) {
                *a += weight * v;
            }
        }
        acc
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Conditional and marginal entropies of the `m` bit-channels for a source
/// observed in unit-variance Gaussian noise.
pub fn bit_channel_stats(source: &ShapedSource) -> Result<BitChannelStats> {
    let c = &source.constellation;
    let marginal_entropy: Vec<f64> = (1..=c.m())
        .map(|level| binary_entropy(source.pmf.bit_one_probability(c, level)))
        .collect();
    let post = Posterior::new(source);
    let fine = post.by_hermite(GaussHermite::standard());
    let coarse = post.by_hermite(GaussHermite::check());
    let cond = if max_abs_diff(&fine, &coarse) <= QUADRATURE_TOL {
        fine
    } else {
        let fine = post.by_trapezoid(TRAPEZOID_SAMPLES);
        let coarse = post.by_trapezoid(TRAPEZOID_SAMPLES / 2);
        let residual = max_abs_diff(&fine, &coarse);
        if residual > QUADRATURE_TOL {
            return Err(Error::NumericFailure(format!(
                "bit-channel quadrature did not converge (residual {residual:.3e})"
            )));
        }
        fine
    };
    let cond_entropy = cond
        .into_iter()
        .zip(&marginal_entropy)
        .map(|(h, &hm)| h.clamp(0.0, hm))
        .collect();
    Ok(BitChannelStats {
        cond_entropy,
        marginal_entropy,
        label_entropy: source.pmf.entropy(),
    })
}

/// BMD achievable rate of a source, in bits per channel use.
pub fn bmd_rate(source: &ShapedSource) -> Result<f64> {
    Ok(bit_channel_stats(source)?.bmd_rate())
}

/// BMD rate of `pmf` on `constellation` at `snr_db`.
pub fn bmd_rate_at_db(
    constellation: &AskConstellation,
    pmf: &SymbolPmf,
    snr_db: f64,
) -> Result<f64> {
    bmd_rate(&ShapedSource::at_snr_db(
        constellation.clone(),
        pmf.clone(),
        snr_db,
    )?)
}

/// SNR (linear) at which the BMD rate of `pmf` equals `rate`.
pub fn bmd_rate_inverse(
    constellation: &AskConstellation,
    pmf: &SymbolPmf,
    rate: f64,
) -> Result<f64> {
    Ok(from_db(bmd_rate_inverse_db(constellation, pmf, rate)?))
}

/// Same as [`bmd_rate_inverse`], in dB.
pub fn bmd_rate_inverse_db(
    constellation: &AskConstellation,
    pmf: &SymbolPmf,
    rate: f64,
) -> Result<f64> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "rate must be positive, got {rate}"
        )));
    }
    if rate >= pmf.entropy() {
        return Err(Error::InfeasibleRate { rate });
    }
    let lo = capacity_snr_db(rate);
    let hi = lo + INVERSE_BRACKET_DB;
    let eval = |db: f64| bmd_rate_at_db(constellation, pmf, db);

    let mut prev = f64::NEG_INFINITY;
    let mut top = 0.0;
    for i in 0..INVERSE_GRID {
        let db = lo + (hi - lo) * i as f64 / (INVERSE_GRID - 1) as f64;
        let r = eval(db)?;
        if r < prev - 1e-9 {
            return Err(Error::NumericFailure(format!(
                "BMD rate is not monotone on [{lo:.3}, {hi:.3}] dB"
            )));
        }
        prev = r;
        top = r;
    }
    if top < rate {
        return Err(Error::InfeasibleRate { rate });
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let r = eval(mid)?;
        if (r - rate).abs() <= INVERSE_TOL {
            return Ok(mid);
        }
        if r < rate {
            a = mid;
        } else {
            b = mid;
        }
        if b - a < 1e-12 {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

/// A point `(SNR~, R)` of the shaped operating curve.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub se: f64,
    pub pmf: SymbolPmf,
    pub snr_shaped_db: f64,
    pub snr_capacity_db: f64,
}

impl OperatingPoint {
    pub fn gap_db(&self) -> f64 {
        self.snr_shaped_db - self.snr_capacity_db
    }
}

/// Computes `P_X^R` and the SNR at which its BMD rate reaches `se`.
pub fn operating_point(se: f64, rate: CodeRate, m: usize) -> Result<OperatingPoint> {
    let constellation = AskConstellation::new(m)?;
    let pmf = operating_pmf(se, rate, m)?;
    let snr_shaped_db = bmd_rate_inverse_db(&constellation, &pmf, se)?;
    Ok(OperatingPoint {
        se,
        pmf,
        snr_shaped_db,
        snr_capacity_db: capacity_snr_db(se),
    })
}

/// Shaped operating points over a grid of spectral efficiencies.
pub fn operating_curve(rate: CodeRate, m: usize, grid: &[f64]) -> Result<Vec<OperatingPoint>> {
    crate::par::map(grid, |&r| operating_point(r, rate, m))
        .into_iter()
        .collect()
}

/// One row of the shaped-versus-uniform comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    #[serde(rename = "R")]
    pub se: f64,
    pub snr_capacity_db: f64,
    pub snr_shaped_db: f64,
    pub snr_uniform_db: f64,
    pub gap_shaped_db: f64,
    pub gap_uniform_db: f64,
    /// `C(SNR~) - R` for the shaped input.
    pub rate_gap_shaped: f64,
    /// `C(SNR_uniform) - R` for the uniform input.
    pub rate_gap_uniform: f64,
}

/// Shaped and uniform required SNRs and gaps over `grid`.
pub fn curve_rows(rate: CodeRate, m: usize, grid: &[f64]) -> Result<Vec<CurveRow>> {
    let constellation = AskConstellation::new(m)?;
    let uniform = SymbolPmf::uniform(constellation.size());
    crate::par::map(grid, |&se| -> Result<CurveRow> {
        let op = operating_point(se, rate, m)?;
        let snr_uniform_db = bmd_rate_inverse_db(&constellation, &uniform, se)?;
        Ok(CurveRow {
            se,
            snr_capacity_db: op.snr_capacity_db,
            snr_shaped_db: op.snr_shaped_db,
            snr_uniform_db,
            gap_shaped_db: op.gap_db(),
            gap_uniform_db: snr_uniform_db - op.snr_capacity_db,
            rate_gap_shaped: awgn_capacity(from_db(op.snr_shaped_db)) - se,
            rate_gap_uniform: awgn_capacity(from_db(snr_uniform_db)) - se,
        })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::mb_from_entropy;
    use approx::assert_abs_diff_eq;

    fn uniform16(db: f64) -> ShapedSource {
        ShapedSource::at_snr_db(
            AskConstellation::new(4).unwrap(),
            SymbolPmf::uniform(16),
            db,
        )
        .unwrap()
    }

    #[test]
    fn capacity_values() {
        assert_eq!(awgn_capacity(0.0), 0.0);
        assert_abs_diff_eq!(awgn_capacity(15.0), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(awgn_capacity(3.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(capacity_snr_db(1.0), 10.0 * 3f64.log10(), epsilon = 1e-12);
    }

    #[test]
    fn low_snr_limit() {
        let s = uniform16(-60.0);
        let stats = bit_channel_stats(&s).unwrap();
        for (c, m) in stats.cond_entropy.iter().zip(&stats.marginal_entropy) {
            assert!((m - c).abs() < 1e-5);
        }
        assert!(stats.bmd_rate() < 1e-5);
        assert!(stats.bmd_rate() >= 0.0);
    }

    #[test]
    fn high_snr_limit() {
        let stats = bit_channel_stats(&uniform16(40.0)).unwrap();
        assert!(stats.cond_entropy.iter().all(|&h| h < 1e-3));
        assert_abs_diff_eq!(stats.bmd_rate(), 4.0, epsilon = 1e-3);
    }

    #[test]
    fn stats_invariants() {
        let c = AskConstellation::new(4).unwrap();
        for (h, db) in [(1.5, 0.0), (2.5, 8.0), (3.5, 15.0), (4.0, 20.0)] {
            let s =
                ShapedSource::at_snr_db(c.clone(), mb_from_entropy(&c, h).unwrap(), db).unwrap();
            let st = bit_channel_stats(&s).unwrap();
            for (ci, mi) in st.cond_entropy.iter().zip(&st.marginal_entropy) {
                assert!(0.0 <= *ci && ci <= mi && *mi <= 1.0 + 1e-15);
            }
            assert!(st.label_entropy <= st.marginal_entropy.iter().sum::<f64>() + 1e-12);
        }
    }

    #[test]
    fn inverse_errors() {
        let c = AskConstellation::new(4).unwrap();
        let p = mb_from_entropy(&c, 2.0).unwrap();
        assert!(matches!(
            bmd_rate_inverse(&c, &p, 2.0),
            Err(Error::InfeasibleRate { .. })
        ));
        assert!(bmd_rate_inverse(&c, &p, 0.0).is_err());
    }

    #[test]
    fn inverse_roundtrip_uniform() {
        let c = AskConstellation::new(4).unwrap();
        let u = SymbolPmf::uniform(16);
        let snr = bmd_rate_inverse(&c, &u, 3.25).unwrap();
        let r = bmd_rate(&ShapedSource::at_snr(c, u, snr).unwrap()).unwrap();
        assert_abs_diff_eq!(r, 3.25, epsilon = 1e-4);
    }

    #[test]
    fn small_rate_needs_small_snr() {
        let c = AskConstellation::new(4).unwrap();
        let u = SymbolPmf::uniform(16);
        let snr = bmd_rate_inverse(&c, &u, 1e-3).unwrap();
        assert!(snr < 0.01);
    }

    #[test]
    fn curve_at_unit_rate() {
        let rate = CodeRate::new(13, 16).unwrap();
        let rows = curve_rows(rate, 4, &[1.0]).unwrap();
        assert_abs_diff_eq!(rows[0].snr_capacity_db, 4.771, epsilon = 1e-3);
        assert!(rows[0].gap_shaped_db > 0.0);
        assert!(rows[0].rate_gap_shaped > 0.0);
    }
}
