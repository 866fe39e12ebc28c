//! Coded modulation toolkit for probabilistic amplitude shaping (PAS) with
//! protograph LDPC codes.
//!
//! The crate is organised bottom-up:
//!
//! - [`constellation`]: ASK points, BRGC labels and Maxwell-Boltzmann shaping.
//! - [`rates`]: AWGN capacity, bit-metric decoding (BMD) rates and operating points.
//! - [`surrogate`]: binary-input AWGN surrogates matched in conditional entropy.
//! - [`protograph`]: base matrices, PEXIT analysis and decoding thresholds.
//! - [`optimizer`]: integer differential evolution over base matrices.
//! - [`lifting`]: two-stage copy-and-permute lifting and alist I/O.
//! - [`paschain`]: distribution matching, systematic encoding, demapping and BP decoding.
//! - [`sim`]: seeded Monte Carlo FER sweeps and gap extraction.

pub mod constellation;
pub mod error;
pub mod lifting;
pub mod optimizer;
mod par;
pub mod paschain;
pub mod protograph;
pub mod quadrature;
pub mod rates;
pub mod rng;
pub mod sim;
pub mod surrogate;

pub use error::{Error, Result};

/// Converts a linear power ratio to dB.
pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Converts dB to a linear power ratio.
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `start, start + step, ...` up to and including `stop` (within 1e-9),
/// rounded to 12 decimals so decimal steps print cleanly.
pub fn step_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && start.is_finite() && stop.is_finite()) || stop < start {
        return Err(Error::InvalidConfig(format!(
            "bad grid {start}:{stop}:{step}"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// Parses `start:stop:step` or a single value.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad grid {spec:?}")))
        })
        .collect::<Result<_>>()?;
    match parts[..] {
        [v] if v.is_finite() => Ok(vec![v]),
        [a, b, s] => step_grid(a, b, s),
        _ => Err(Error::InvalidConfig(format!(
            "grid must be `start:stop:step`, got {spec:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = parse_grid("0.7:2.7:0.1").unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(g[3], 1.0);
        assert_eq!(g[20], 2.7);
        assert_eq!(parse_grid("4.0:6.0:0.25").unwrap().len(), 9);
        assert_eq!(parse_grid("2.5").unwrap(), vec![2.5]);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("0:1:0").is_err());
    }
}
