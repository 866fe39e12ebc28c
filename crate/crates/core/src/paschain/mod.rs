//! The PAS transmit/receive chain: constant-composition matching, systematic
//! encoding, ASK mapping, bitwise demapping, BP decoding and dematching.
//!
//! Column `j` of bit level `l` (in column order) belongs to symbol `j`.
//! Sign bits (level 1) carry extra data and parity; the amplitude levels
//! carry the matcher output. When `H` cannot place every parity bit on a
//! sign column, the few amplitude parity columns have their matcher bits
//! moved to the first sign information slots and restored on receive.

mod ccdm;
mod decoder;
mod encoder;
mod trace;

use crate::constellation::{operating_pmf, AskConstellation, CodeRate, ShapedSource, SymbolPmf};
use crate::error::{Error, Result};
use crate::lifting::SparseParityMatrix;
use crate::protograph::default_levels;

pub use ccdm::{ccdm_decode, ccdm_encode, composition_from_pmf, Composition};
pub use decoder::{bp_decode, demap_llrs, BpDecoder, DecodeOutcome, LLR_CLAMP};
pub use encoder::SystematicEncoder;
pub use trace::{FrameTrace, TraceHeader, TraceReader, TraceWriter};

const PRIOR_FLOOR: f64 = 1e-9;

/// One encoded frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PasFrame {
    pub dm_bits: Vec<u8>,
    pub extra_bits: Vec<u8>,
    pub amplitudes: Vec<usize>,
    pub codeword: Vec<u8>,
    /// Scaled channel inputs `Delta x`.
    pub symbols: Vec<f64>,
}

/// Result of one receive pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Reception {
    pub decode: DecodeOutcome,
    /// Recovered frame bits, or the dematching error.
    pub frame_bits: Result<Vec<u8>>,
}

/// Bit counts of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitAccounting {
    pub n: usize,
    pub n_c: usize,
    pub amplitude_bits: usize,
    pub extra_bits: usize,
    pub parity_bits: usize,
    pub dm_bits: usize,
}

#[derive(Debug, Clone)]
pub struct PasChain {
    h: SparseParityMatrix,
    constellation: AskConstellation,
    composition: Composition,
    sign_cols: Vec<usize>,
    /// `amp_cols[l - 2][j]`: column of level `l` in symbol `j`
    amp_cols: Vec<Vec<usize>>,
    encoder: SystematicEncoder,
    decoder: BpDecoder,
    relocated: Vec<usize>,
    sign_info: Vec<usize>,
}

impl PasChain {
    /// Chain for `h` with a matcher targeting the amplitude PMF `amplitude_pmf`.
    pub fn new(h: SparseParityMatrix, m: usize, amplitude_pmf: &[f64]) -> Result<Self> {
        let constellation = AskConstellation::new(m)?;
        let n = h.cols();
        if !n.is_multiple_of(m) {
            return Err(Error::InvalidConfig(format!(
                "block length {n} is not a multiple of m = {m}"
            )));
        }
        let n_c = n / m;
        if amplitude_pmf.len() != constellation.num_amplitudes() {
            return Err(Error::InvalidConfig(
                "amplitude PMF has the wrong size".into(),
            ));
        }
        if h.rows() > n_c {
            return Err(Error::InvalidConfig(format!(
                "{} parity bits do not fit on {n_c} sign bits",
                h.rows()
            )));
        }
        let levels: Vec<usize> = match h.column_levels() {
            Some(l) => l.to_vec(),
            None => default_levels(n_c, m),
        };
        let mut by_level: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (c, &l) in levels.iter().enumerate() {
            if l == 0 || l > m {
                return Err(Error::InvalidConfig(format!(
                    "column {c} has level {l} outside 1..={m}"
                )));
            }
            by_level[l - 1].push(c);
        }
        if by_level.iter().any(|cols| cols.len() != n_c) {
            return Err(Error::InvalidConfig(
                "every bit level needs exactly n/m columns".into(),
            ));
        }
        let sign_cols = by_level.remove(0);
        let encoder = SystematicEncoder::new(&h, &sign_cols)?;
        let mut relocated: Vec<usize> = encoder
            .parity_positions()
            .iter()
            .copied()
            .filter(|&c| levels[c] != 1)
            .collect();
        relocated.sort_unstable();
        let sign_info: Vec<usize> = sign_cols
            .iter()
            .copied()
            .filter(|&c| !encoder.is_parity(c))
            .collect();
        let composition = composition_from_pmf(amplitude_pmf, n_c)?;
        let decoder = BpDecoder::new(&h);
        Ok(PasChain {
            h,
            constellation,
            composition,
            sign_cols,
            amp_cols: by_level,
            encoder,
            decoder,
            relocated,
            sign_info,
        })
    }

    /// Chain whose matcher follows the MB operating PMF for spectral efficiency `se`.
    pub fn for_operating_point(
        h: SparseParityMatrix,
        rate: CodeRate,
        m: usize,
        se: f64,
    ) -> Result<Self> {
        let pmf = operating_pmf(se, rate, m)?;
        let c = AskConstellation::new(m)?;
        let code_rate = 1.0 - h.rows() as f64 / h.cols() as f64;
        if (code_rate - rate.value()).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "code has rate {code_rate}, configured {rate}"
            )));
        }
        Self::new(h, m, &pmf.amplitude_pmf(&c))
    }

    pub fn code(&self) -> &SparseParityMatrix {
        &self.h
    }

    pub fn constellation(&self) -> &AskConstellation {
        &self.constellation
    }

    pub fn composition(&self) -> &Composition {
        &self.composition
    }

    pub fn decoder(&self) -> &BpDecoder {
        &self.decoder
    }

    /// Amplitude parity columns whose matcher bits ride on sign slots.
    pub fn relocated_columns(&self) -> &[usize] {
        &self.relocated
    }

    pub fn accounting(&self) -> BitAccounting {
        let n_c = self.sign_cols.len();
        BitAccounting {
            n: self.h.cols(),
            n_c,
            amplitude_bits: (self.constellation.m() - 1) * n_c,
            extra_bits: self.sign_info.len() - self.relocated.len(),
            parity_bits: self.h.rows(),
            dm_bits: self.composition.input_bits(),
        }
    }

    /// Input bits per frame: matcher bits then extra sign bits.
    pub fn frame_len(&self) -> usize {
        let a = self.accounting();
        a.dm_bits + a.extra_bits
    }

    /// Realised spectral efficiency in bits per channel use.
    pub fn realized_se(&self) -> f64 {
        self.frame_len() as f64 / self.sign_cols.len() as f64
    }

    /// Channel input PMF used by the demapper: empirical amplitude
    /// composition with uniform signs, floored so relocated parity
    /// amplitudes outside the composition stay decodable.
    pub fn symbol_pmf(&self) -> SymbolPmf {
        let amp: Vec<f64> = self
            .composition
            .pmf()
            .iter()
            .map(|p| p.max(PRIOR_FLOOR))
            .collect();
        let probs = (0..self.constellation.size())
            .map(|i| amp[self.constellation.amplitude_index(i)] / 2.0)
            .collect::<Vec<_>>();
        let total: f64 = probs.iter().sum();
        SymbolPmf::new(probs.iter().map(|p| p / total).collect()).expect("normalised composition")
    }

    /// Source scaled to `snr_db` with unit noise variance.
    pub fn source_at_snr_db(&self, snr_db: f64) -> Result<ShapedSource> {
        ShapedSource::at_snr_db(self.constellation.clone(), self.symbol_pmf(), snr_db)
    }

    pub fn encode(&self, frame_bits: &[u8], source: &ShapedSource) -> Result<PasFrame> {
        let acc = self.accounting();
        if frame_bits.len() != self.frame_len() {
            return Err(Error::InvalidParameter(format!(
                "frame needs {} bits, got {}",
                self.frame_len(),
                frame_bits.len()
            )));
        }
        let (dm_bits, extra_bits) = frame_bits.split_at(acc.dm_bits);
        let amplitudes = ccdm_encode(dm_bits, &self.composition)?;
        let mut codeword = vec![0u8; acc.n];
        for (j, &a) in amplitudes.iter().enumerate() {
            for (cols, bit) in self
                .amp_cols
                .iter()
                .zip(self.constellation.amplitude_bits(a))
            {
                codeword[cols[j]] = bit;
            }
        }
        let carried: Vec<u8> = self
            .relocated
            .iter()
            .map(|&c| codeword[c])
            .chain(extra_bits.iter().copied())
            .collect();
        for (&slot, &bit) in self.sign_info.iter().zip(&carried) {
            codeword[slot] = bit;
        }
        self.encoder.encode_in_place(&mut codeword);
        let symbols = self.modulate(&codeword, source);
        Ok(PasFrame {
            dm_bits: dm_bits.to_vec(),
            extra_bits: extra_bits.to_vec(),
            amplitudes,
            codeword,
            symbols,
        })
    }

    /// Maps a codeword to scaled channel symbols.
    pub fn modulate(&self, codeword: &[u8], source: &ShapedSource) -> Vec<f64> {
        let m = self.constellation.m();
        let mut bits = vec![0u8; m - 1];
        (0..self.sign_cols.len())
            .map(|j| {
                for (b, cols) in bits.iter_mut().zip(&self.amp_cols) {
                    *b = codeword[cols[j]];
                }
                let amp = self.constellation.amplitude_from_bits(&bits);
                let point = self
                    .constellation
                    .point_index(codeword[self.sign_cols[j]], amp);
                source.delta * self.constellation.points()[point]
            })
            .collect()
    }

    /// Demapper output reordered to code columns.
    pub fn channel_llrs(&self, y: &[f64], source: &ShapedSource) -> Vec<f64> {
        let m = self.constellation.m();
        let per_symbol = demap_llrs(y, source);
        let mut llrs = vec![0.0; self.h.cols()];
        for j in 0..self.sign_cols.len() {
            llrs[self.sign_cols[j]] = per_symbol[j * m];
            for (l, cols) in self.amp_cols.iter().enumerate() {
                llrs[cols[j]] = per_symbol[j * m + l + 1];
            }
        }
        llrs
    }

    /// Recovers frame bits from a codeword estimate.
    pub fn dematch(&self, codeword: &[u8]) -> Result<Vec<u8>> {
        let mut word = codeword.to_vec();
        for (&c, &slot) in self.relocated.iter().zip(&self.sign_info) {
            word[c] = codeword[slot];
        }
        let m = self.constellation.m();
        let mut bits = vec![0u8; m - 1];
        let amplitudes: Vec<usize> = (0..self.sign_cols.len())
            .map(|j| {
                for (b, cols) in bits.iter_mut().zip(&self.amp_cols) {
                    *b = word[cols[j]];
                }
                self.constellation.amplitude_from_bits(&bits)
            })
            .collect();
        let mut out = ccdm_decode(&amplitudes, &self.composition)?;
        out.extend(
            self.sign_info[self.relocated.len()..]
                .iter()
                .map(|&c| word[c]),
        );
        Ok(out)
    }

    /// Demaps, decodes with at most `max_iter` BP iterations and dematches.
    pub fn receive(&self, y: &[f64], source: &ShapedSource, max_iter: usize) -> Reception {
        let llrs = self.channel_llrs(y, source);
        let decode = self.decoder.decode(&llrs, max_iter);
        let frame_bits = self.dematch(&decode.bits);
        Reception { decode, frame_bits }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifting::lift;
    use crate::protograph::robust_base_matrix;
    use crate::rng::stream;
    use rand::Rng;

    #[test]
    fn small_chain_noiseless_roundtrip() {
        let h = lift(&robust_base_matrix(), 3, 8, 5).unwrap();
        let rate = CodeRate::new(13, 16).unwrap();
        let chain = PasChain::for_operating_point(h, rate, 4, 2.1).unwrap();
        let acc = chain.accounting();
        assert_eq!(acc.n, 384);
        assert_eq!(acc.amplitude_bits + acc.extra_bits + acc.parity_bits, acc.n);
        let source = chain.source_at_snr_db(60.0).unwrap();
        let mut rng = stream(1, &[]);
        for _ in 0..5 {
            let bits: Vec<u8> = (0..chain.frame_len())
                .map(|_| rng.gen_range(0..2))
                .collect();
            let frame = chain.encode(&bits, &source).unwrap();
            assert!(chain.code().is_codeword(&frame.codeword));
            let rx = chain.receive(&frame.symbols, &source, 100);
            assert_eq!(rx.decode.iterations, 0);
            assert_eq!(rx.frame_bits.unwrap(), bits);
        }
    }
}
