//! Systematic GF(2) encoding of a sparse parity-check matrix.

use crate::error::{Error, Result};
use crate::lifting::SparseParityMatrix;

/// Bit-packed GF(2) row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct BitRow(Vec<u64>);

impl BitRow {
    pub(crate) fn zeros(len: usize) -> Self {
        BitRow(vec![0; len.div_ceil(64)])
    }

    pub(crate) fn get(&self, i: usize) -> bool {
        (self.0[i / 64] >> (i % 64)) & 1 == 1
    }

    pub(crate) fn set(&mut self, i: usize, v: bool) {
        let mask = 1u64 << (i % 64);
        if v {
            self.0[i / 64] |= mask;
        } else {
            self.0[i / 64] &= !mask;
        }
    }

    fn xor_assign(&mut self, other: &BitRow) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a ^= b;
        }
    }

    fn dot(&self, other: &BitRow) -> bool {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a & b).count_ones())
            .sum::<u32>()
            & 1
            == 1
    }
}

/// Encoder from a reduced row echelon form of `H`.
///
/// Parity positions are chosen among `preferred` columns first and only then
/// among the rest; `pivots[i]` is the parity column solved by reduced row `i`.
#[derive(Debug, Clone)]
pub struct SystematicEncoder {
    n: usize,
    pivots: Vec<usize>,
    is_pivot: Vec<bool>,
    reduced: Vec<BitRow>,
}

impl SystematicEncoder {
    pub fn new(h: &SparseParityMatrix, preferred: &[usize]) -> Result<Self> {
        let n = h.cols();
        let mut rows: Vec<BitRow> = (0..h.rows())
            .map(|r| {
                let mut row = BitRow::zeros(n);
                for &c in h.row(r) {
                    row.set(c as usize, true);
                }
                row
            })
            .collect();
        let mut in_preferred = vec![false; n];
        for &c in preferred {
            in_preferred[c] = true;
        }
        let order = preferred
            .iter()
            .copied()
            .chain((0..n).filter(|&c| !in_preferred[c]));
        let mut pivots = Vec::with_capacity(rows.len());
        let mut done = 0;
        for col in order {
            if done == rows.len() {
                break;
            }
            let Some(p) = (done..rows.len()).find(|&r| rows[r].get(col)) else {
                continue;
            };
            rows.swap(done, p);
            let pivot_row = rows[done].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != done && row.get(col) {
                    row.xor_assign(&pivot_row);
                }
            }
            pivots.push(col);
            done += 1;
        }
        if done < rows.len() {
            return Err(Error::EncoderConstruction(format!(
                "parity-check matrix has rank {done} < {} rows",
                rows.len()
            )));
        }
        let mut is_pivot = vec![false; n];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        // clear pivot bits so a row dotted with the information part gives its parity
        for (row, &p) in rows.iter_mut().zip(&pivots) {
            row.set(p, false);
        }
        Ok(SystematicEncoder {
            n,
            pivots,
            is_pivot,
            reduced: rows,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Parity columns, in reduced-row order.
    pub fn parity_positions(&self) -> &[usize] {
        &self.pivots
    }

    pub fn is_parity(&self, col: usize) -> bool {
        self.is_pivot[col]
    }

    /// Fills the parity positions of `word`; information positions are read as given.
    pub fn encode_in_place(&self, word: &mut [u8]) {
        let mut info = BitRow::zeros(self.n);
        for (i, &b) in word.iter().enumerate() {
            if b & 1 == 1 && !self.is_pivot[i] {
                info.set(i, true);
            }
        }
        for (row, &p) in self.reduced.iter().zip(&self.pivots) {
            word[p] = u8::from(row.dot(&info));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hamming_code() {
        let h = SparseParityMatrix::from_dense(
            3,
            7,
            &[
                1, 0, 1, 0, 1, 0, 1, 0, 1, 1, 0, 0, 1, 1, 0, 0, 0, 1, 1, 1, 1,
            ],
        )
        .unwrap();
        let enc = SystematicEncoder::new(&h, &[0, 1, 3]).unwrap();
        assert_eq!(enc.parity_positions(), &[0, 1, 3]);
        for v in 0u8..16 {
            let mut w = vec![0u8; 7];
            for (i, &c) in [2, 4, 5, 6].iter().enumerate() {
                w[c] = (v >> i) & 1;
            }
            enc.encode_in_place(&mut w);
            assert!(h.is_codeword(&w));
        }
    }

    #[test]
    fn rank_deficient_fails() {
        let h = SparseParityMatrix::from_dense(2, 3, &[1, 1, 0, 1, 1, 0]).unwrap();
        assert!(matches!(
            SystematicEncoder::new(&h, &[]),
            Err(Error::EncoderConstruction(_))
        ));
    }

    #[test]
    fn falls_back_outside_preferred() {
        let h = SparseParityMatrix::from_dense(2, 4, &[1, 0, 1, 0, 1, 0, 0, 1]).unwrap();
        let enc = SystematicEncoder::new(&h, &[0, 1]).unwrap();
        assert_eq!(enc.parity_positions()[0], 0);
        assert!(enc.parity_positions()[1] >= 2);
    }
}
