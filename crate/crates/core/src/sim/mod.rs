//! Seeded Monte Carlo FER simulation of the PAS chain, gap extraction and
//! result persistence.
//!
//! Frame `i` at spectral efficiency `R` and SNR `s` draws its data bits and
//! noise from `rng::stream(seed, [R.to_bits(), s.to_bits(), i])`: data bits
//! from the low bit of successive 64-bit words (64 bits per word, LSB first),
//! then one Box-Muller normal per symbol. Frames are decoded in chunks and
//! tallied in frame order, so the stopping point and every count are
//! independent of the worker count.

mod config;
mod io;

use std::time::Instant;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::constellation::ShapedSource;
use crate::error::{Error, Result};
use crate::lifting::{load_code, SparseParityMatrix};
use crate::paschain::{BpDecoder, PasChain};
use crate::rng::{stream, BoxMuller};

pub use config::{SimConfig, ENV_SEED, ENV_WORKERS};
pub use io::{read_csv, read_json, write_csv, write_json, SimReport, SCHEMA_VERSION};

const CHUNK: u64 = 64;

/// FER statistics at one `(R, SNR)` point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    #[serde(rename = "R")]
    pub se: f64,
    pub snr_db: f64,
    pub frames: u64,
    pub frame_errors: u64,
    /// Codeword bit errors after BP.
    pub bit_errors: u64,
    pub fer: f64,
    pub ci95_lo: f64,
    pub ci95_hi: f64,
    pub wallclock_s: f64,
    pub seed: u64,
}

impl SimResult {
    pub fn ci95(&self) -> (f64, f64) {
        (self.ci95_lo, self.ci95_hi)
    }
}

/// Two-sided Clopper-Pearson interval at confidence `1 - alpha`.
pub fn clopper_pearson(errors: u64, trials: u64, alpha: f64) -> (f64, f64) {
    use statrs::function::beta::inv_beta_reg;
    if trials == 0 {
        return (0.0, 1.0);
    }
    let (k, n) = (errors as f64, trials as f64);
    let lo = if errors == 0 {
        0.0
    } else {
        inv_beta_reg(k, n - k + 1.0, alpha / 2.0)
    };
    let hi = if errors == trials {
        1.0
    } else {
        inv_beta_reg(k + 1.0, n - k, 1.0 - alpha / 2.0)
    };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, Default)]
struct FrameOutcome {
    error: bool,
    bit_errors: u64,
}

fn random_bits(rng: &mut impl RngCore, len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let word = rng.next_u64();
        out.extend(
            (0..64)
                .map(|i| ((word >> i) & 1) as u8)
                .take(len - out.len()),
        );
    }
    out
}

fn pas_frame(
    chain: &PasChain,
    source: &ShapedSource,
    seed: u64,
    path: [u64; 3],
    max_iter: usize,
) -> Result<FrameOutcome> {
    let mut rng = stream(seed, &path);
    let bits = random_bits(&mut rng, chain.frame_len());
    let frame = chain.encode(&bits, source)?;
    let mut normal = BoxMuller::new();
    let y: Vec<f64> = frame
        .symbols
        .iter()
        .map(|s| s + normal.sample(&mut rng))
        .collect();
    let rx = chain.receive(&y, source, max_iter);
    let bit_errors = rx
        .decode
        .bits
        .iter()
        .zip(&frame.codeword)
        .filter(|(a, b)| a != b)
        .count() as u64;
    let error = !matches!(&rx.frame_bits, Ok(b) if *b == bits);
    Ok(FrameOutcome { error, bit_errors })
}

/// Runs `f` inside a pool of `workers` threads (0 = all cores).
#[cfg(feature = "parallel")]
fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
fn with_workers<T: Send>(_workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    Ok(f())
}

/// Frame-ordered tally that stops exactly at `min_errors` or `max_frames`.
fn tally<F>(max_frames: u64, min_errors: u64, frame: F) -> Result<(u64, u64, u64)>
where
    F: Fn(u64) -> Result<FrameOutcome> + Sync + Send,
{
    let (mut frames, mut errors, mut bit_errors) = (0u64, 0u64, 0u64);
    while frames < max_frames && errors < min_errors {
        let indices: Vec<u64> = (frames..max_frames.min(frames + CHUNK)).collect();
        let outcomes = crate::par::map(&indices, |&i| frame(i));
        for outcome in outcomes {
            let o = outcome?;
            frames += 1;
            bit_errors += o.bit_errors;
            errors += u64::from(o.error);
            if errors >= min_errors {
                break;
            }
        }
    }
    Ok((frames, errors, bit_errors))
}

fn make_result(
    se: f64,
    snr_db: f64,
    seed: u64,
    counts: (u64, u64, u64),
    elapsed: Option<f64>,
) -> SimResult {
    let (frames, frame_errors, bit_errors) = counts;
    let (ci95_lo, ci95_hi) = clopper_pearson(frame_errors, frames, 0.05);
    SimResult {
        se,
        snr_db,
        frames,
        frame_errors,
        bit_errors,
        fer: if frames == 0 {
            0.0
        } else {
            frame_errors as f64 / frames as f64
        },
        ci95_lo,
        ci95_hi,
        wallclock_s: elapsed.unwrap_or(0.0),
        seed,
    }
}

/// Sweeps every `(R, SNR)` of `config` on the code stored at `config.code`.
pub fn run_fer(config: &SimConfig) -> Result<Vec<SimResult>> {
    let h = load_code(&config.code)?;
    run_fer_on(&h, config)
}

/// Like [`run_fer`] with an in-memory code.
pub fn run_fer_on(h: &SparseParityMatrix, config: &SimConfig) -> Result<Vec<SimResult>> {
    config.validate()?;
    let snrs = config.snr_grid()?;
    with_workers(config.workers, || {
        let mut results = Vec::new();
        for &se in &config.rates {
            let chain = PasChain::for_operating_point(h.clone(), config.code_rate, config.m, se)?;
            for &snr_db in &snrs {
                let start = Instant::now();
                let source = chain.source_at_snr_db(snr_db)?;
                let counts = tally(config.max_frames, config.min_errors, |i| {
                    pas_frame(
                        &chain,
                        &source,
                        config.master_seed,
                        [se.to_bits(), snr_db.to_bits(), i],
                        config.max_iter,
                    )
                })?;
                let elapsed = config.record_timing.then(|| start.elapsed().as_secs_f64());
                results.push(make_result(se, snr_db, config.master_seed, counts, elapsed));
            }
        }
        Ok(results)
    })?
}

/// Channel noise of frame `frame` for the binary-input AWGN runs.
pub fn bpsk_noise(seed: u64, frame: u64, n: usize) -> Vec<f64> {
    let mut rng = stream(seed, &[frame]);
    let mut normal = BoxMuller::new();
    (0..n).map(|_| normal.sample(&mut rng)).collect()
}

/// LLRs of the all-zero codeword sent as `+1` with noise `sigma * z`.
pub fn bpsk_llrs(noise: &[f64], sigma: f64) -> Vec<f64> {
    noise
        .iter()
        .map(|z| 2.0 * (1.0 + sigma * z) / (sigma * sigma))
        .collect()
}

/// FER of BP on a binary code over BPSK-AWGN, all-zero codeword.
pub fn binary_awgn_fer(
    h: &SparseParityMatrix,
    sigma: f64,
    max_frames: u64,
    min_errors: u64,
    seed: u64,
    max_iter: usize,
) -> Result<SimResult> {
    let decoder = BpDecoder::new(h);
    let n = h.cols();
    let counts = tally(max_frames, min_errors, |i| {
        let llrs = bpsk_llrs(&bpsk_noise(seed, i, n), sigma);
        let out = decoder.decode(&llrs, max_iter);
        let bit_errors = out.bits.iter().map(|&b| u64::from(b)).sum::<u64>();
        Ok(FrameOutcome {
            error: bit_errors > 0,
            bit_errors,
        })
    })?;
    let snr_db = crate::to_db(1.0 / (sigma * sigma));
    Ok(make_result(
        1.0 - h.rows() as f64 / n as f64,
        snr_db,
        seed,
        counts,
        None,
    ))
}

/// SNR at which `log10(FER)` crosses `target_fer`, per `R`, as the gap to
/// `10 log10(2^{2R} - 1)`.
pub fn gap_at_target(results: &[SimResult], target_fer: f64) -> Result<Vec<(f64, f64)>> {
    if !(target_fer > 0.0 && target_fer < 1.0) {
        return Err(Error::InvalidConfig("target FER must lie in (0, 1)".into()));
    }
    let mut rates: Vec<f64> = Vec::new();
    for r in results {
        if !rates.contains(&r.se) {
            rates.push(r.se);
        }
    }
    let target = target_fer.log10();
    rates
        .into_iter()
        .map(|se| {
            let mut pts: Vec<&SimResult> = results.iter().filter(|r| r.se == se).collect();
            pts.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
            let snr = pts
                .iter()
                .find(|p| p.fer == target_fer)
                .map(|p| p.snr_db)
                .or_else(|| {
                    pts.windows(2).find_map(|w| {
                        let (a, b) = (w[0], w[1]);
                        if a.fer > target_fer && b.fer < target_fer && b.fer > 0.0 {
                            let (la, lb) = (a.fer.log10(), b.fer.log10());
                            Some(a.snr_db + (target - la) * (b.snr_db - a.snr_db) / (lb - la))
                        } else {
                            None
                        }
                    })
                })
                .ok_or(Error::InsufficientSweep { rate: se })?;
            Ok((se, snr - crate::rates::capacity_snr_db(se)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(se: f64, snr_db: f64, fer: f64) -> SimResult {
        make_result(
            se,
            snr_db,
            0,
            (1_000_000, (fer * 1e6).round() as u64, 0),
            None,
        )
    }

    #[test]
    fn gap_interpolation() {
        let s0 = 10.0;
        let results: Vec<SimResult> = (0..6)
            .map(|i| synthetic(2.1, s0 + i as f64, 10f64.powf(-(i as f64))))
            .collect();
        let gaps = gap_at_target(&results, 1e-3).unwrap();
        let cap = crate::rates::capacity_snr_db(2.1);
        assert!((gaps[0].1 - (s0 + 3.0 - cap)).abs() < 1e-9);
        let half: Vec<SimResult> = results.iter().take(2).cloned().collect();
        assert!(matches!(
            gap_at_target(&half, 1e-3),
            Err(Error::InsufficientSweep { .. })
        ));
    }

    #[test]
    fn gap_uses_grid_point() {
        let results = vec![
            synthetic(1.1, 5.0, 1e-2),
            synthetic(1.1, 5.5, 1e-3),
            synthetic(1.1, 6.0, 1e-4),
        ];
        let gaps = gap_at_target(&results, 1e-3).unwrap();
        assert!((gaps[0].1 - (5.5 - crate::rates::capacity_snr_db(1.1))).abs() < 1e-12);
    }

    #[test]
    fn clopper_pearson_properties() {
        let (lo, hi) = clopper_pearson(0, 10, 0.05);
        assert_eq!(lo, 0.0);
        assert!((hi - (1.0 - 0.025f64.powf(0.1))).abs() < 1e-9);
        let (lo, hi) = clopper_pearson(100, 100_000, 0.05);
        assert!(lo < 1e-3 && 1e-3 < hi);
        assert!((hi - lo) / 2.0 / 1e-3 <= 0.21);
    }

    #[test]
    fn repetition_code_matches_gaussian_tail() {
        let h = SparseParityMatrix::from_dense(2, 3, &[1, 1, 0, 0, 1, 1]).unwrap();
        let sigma = 0.8;
        let r = binary_awgn_fer(&h, sigma, 20_000, u64::MAX, 11, 20).unwrap();
        let p = 0.5 * statrs::function::erf::erfc(3f64.sqrt() / sigma / 2f64.sqrt());
        assert!(r.ci95_lo <= p && p <= r.ci95_hi, "{p} vs {:?}", r.ci95());
    }
}
