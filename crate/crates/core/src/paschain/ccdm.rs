//! Constant-composition distribution matching by exact enumerative coding.
//!
//! Input bits are read as an integer `I < 2^k_dm` which is unranked into the
//! `I`-th sequence (lexicographic order) of the type class.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Amplitude counts of every matcher output.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Composition {
    counts: Vec<u64>,
}

impl Composition {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() || counts.iter().sum::<u64>() == 0 {
            return Err(Error::InvalidParameter(
                "composition must contain at least one symbol".into(),
            ));
        }
        Ok(Composition { counts })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Sequence length `n_c`.
    pub fn len(&self) -> usize {
        self.counts.iter().sum::<u64>() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Size of the type class, `n_c! / prod(n_a!)`.
    pub fn multinomial(&self) -> BigUint {
        let mut acc = BigUint::one();
        let mut placed = 0u64;
        for &n in &self.counts {
            // running product of binomials C(placed + n, n)
            for i in 1..=n {
                acc *= placed + i;
                acc /= i;
            }
            placed += n;
        }
        acc
    }

    /// Number of input bits, `floor(log2 multinomial)`.
    pub fn input_bits(&self) -> usize {
        (self.multinomial().bits() as usize).saturating_sub(1)
    }

    /// Empirical distribution `counts / n_c`.
    pub fn pmf(&self) -> Vec<f64> {
        let n = self.len() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    /// Counts of `seq`, which must only use symbols `< self.counts.len()`.
    fn matches(&self, seq: &[usize]) -> bool {
        let mut counts = vec![0u64; self.counts.len()];
        for &a in seq {
            match counts.get_mut(a) {
                Some(c) => *c += 1,
                None => return false,
            }
        }
        counts == self.counts
    }
}

/// Largest-remainder rounding of `n_c * pmf` (ties go to the lower index).
pub fn composition_from_pmf(pmf: &[f64], n_c: usize) -> Result<Composition> {
    if n_c == 0 {
        return Err(Error::InvalidParameter(
            "sequence length must be positive".into(),
        ));
    }
    let total: f64 = pmf.iter().sum();
    if pmf.is_empty() || pmf.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || total <= 0.0 {
        return Err(Error::InvalidParameter(
            "amplitude PMF must be non-negative with positive mass".into(),
        ));
    }
    let scaled: Vec<f64> = pmf.iter().map(|p| p / total * n_c as f64).collect();
    let mut counts: Vec<u64> = scaled.iter().map(|x| x.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..pmf.len()).collect();
    order.sort_by(|&a, &b| {
        (scaled[b] - scaled[b].floor())
            .total_cmp(&(scaled[a] - scaled[a].floor()))
            .then(a.cmp(&b))
    });
    for &i in order
        .iter()
        .cycle()
        .take((n_c as u64).saturating_sub(assigned) as usize)
    {
        counts[i] += 1;
    }
    Composition::new(counts)
}

fn bits_to_int(bits: &[u8]) -> BigUint {
    let mut bytes = vec![0u8; bits.len().div_ceil(8)];
    // little-endian bytes, bit 0 of the integer is the last input bit
    for (i, &b) in bits.iter().rev().enumerate() {
        bytes[i / 8] |= (b & 1) << (i % 8);
    }
    BigUint::from_bytes_le(&bytes)
}

fn int_to_bits(value: &BigUint, width: usize) -> Vec<u8> {
    (0..width)
        .rev()
        .map(|i| u8::from(value.bit(i as u64)))
        .collect()
}

/// Maps exactly `composition.input_bits()` bits to a sequence with that composition.
pub fn ccdm_encode(bits: &[u8], composition: &Composition) -> Result<Vec<usize>> {
    let k = composition.input_bits();
    if bits.len() != k {
        return Err(Error::InvalidParameter(format!(
            "matcher expects {k} bits, got {}",
            bits.len()
        )));
    }
    let mut index = bits_to_int(bits);
    let mut counts = composition.counts.clone();
    let mut remaining = composition.len() as u64;
    let mut class = composition.multinomial();
    let mut out = Vec::with_capacity(remaining as usize);
    while remaining > 0 {
        for (a, count) in counts.iter_mut().enumerate() {
            if *count == 0 {
                continue;
            }
            // sequences of the remaining class that start with `a`
            let starting = &class * *count / remaining;
            if index < starting {
                out.push(a);
                *count -= 1;
                class = starting;
                break;
            }
            index -= &starting;
        }
        remaining -= 1;
    }
    Ok(out)
}

/// Inverse of [`ccdm_encode`].
pub fn ccdm_decode(sequence: &[usize], composition: &Composition) -> Result<Vec<u8>> {
    if !composition.matches(sequence) {
        return Err(Error::CompositionMismatch);
    }
    let mut counts = composition.counts.clone();
    let mut remaining = composition.len() as u64;
    let mut class = composition.multinomial();
    let mut index = BigUint::zero();
    for &a in sequence {
        for b in 0..a {
            if counts[b] > 0 {
                index += &class * counts[b] / remaining;
            }
        }
        class = &class * counts[a] / remaining;
        counts[a] -= 1;
        remaining -= 1;
    }
    let k = composition.input_bits();
    if index.bits() as usize > k {
        // a valid type-class member the encoder never emits
        return Err(Error::CompositionMismatch);
    }
    Ok(int_to_bits(&index, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn largest_remainder() {
        let c = composition_from_pmf(&[0.125; 8], 8).unwrap();
        assert_eq!(c.counts(), &[1; 8]);
        let c = composition_from_pmf(&[1.0, 0.0, 0.0], 17).unwrap();
        assert_eq!(c.counts(), &[17, 0, 0]);
        let c = composition_from_pmf(&[0.5, 0.25, 0.25], 3).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.counts(), &[1, 1, 1]);
    }

    #[test]
    fn degenerate_class() {
        let c = Composition::new(vec![5, 0, 0]).unwrap();
        assert_eq!(c.input_bits(), 0);
        assert_eq!(ccdm_encode(&[], &c).unwrap(), vec![0; 5]);
        assert_eq!(ccdm_decode(&[0; 5], &c).unwrap(), Vec::<u8>::new());
    }

    #[test]
    fn two_sequence_class() {
        let c = Composition::new(vec![1, 1]).unwrap();
        assert_eq!(c.input_bits(), 1);
        assert_eq!(ccdm_encode(&[0], &c).unwrap(), vec![0, 1]);
        assert_eq!(ccdm_encode(&[1], &c).unwrap(), vec![1, 0]);
    }

    #[test]
    fn exhaustive_small_class() {
        let c = Composition::new(vec![3, 2, 1, 2]).unwrap();
        assert_eq!(c.multinomial(), BigUint::from(1680u32));
        assert_eq!(c.input_bits(), 10);
        let mut seen = HashSet::new();
        for v in 0u32..1024 {
            let bits: Vec<u8> = (0..10).rev().map(|i| ((v >> i) & 1) as u8).collect();
            let seq = ccdm_encode(&bits, &c).unwrap();
            assert!(c.matches(&seq));
            assert_eq!(ccdm_decode(&seq, &c).unwrap(), bits);
            assert!(seen.insert(seq));
        }
    }

    #[test]
    fn mismatch_detected() {
        let c = Composition::new(vec![2, 2]).unwrap();
        assert!(matches!(
            ccdm_decode(&[0, 0, 0, 1], &c),
            Err(Error::CompositionMismatch)
        ));
        assert!(matches!(
            ccdm_decode(&[0, 2, 1, 1], &c),
            Err(Error::CompositionMismatch)
        ));
    }
}
