//! Bitwise soft demapping and sum-product belief propagation.

use crate::constellation::ShapedSource;
use crate::lifting::SparseParityMatrix;
use crate::quadrature::log_add_exp;

/// Magnitude limit of every LLR and check message.
pub const LLR_CLAMP: f64 = 50.0;

/// Per-symbol LLRs `log P(B_i = 0 | y) / P(B_i = 1 | y)` for levels `1..=m`,
/// flattened symbol-major. Noise has unit variance.
pub fn demap_llrs(y: &[f64], source: &ShapedSource) -> Vec<f64> {
    let c = &source.constellation;
    let m = c.m();
    let log_prior: Vec<f64> = source.pmf.probs().iter().map(|p| p.ln()).collect();
    let mut metric = vec![0.0; c.size()];
    let mut out = Vec::with_capacity(y.len() * m);
    for &yv in y {
        for (i, &x) in c.points().iter().enumerate() {
            let d = yv - source.delta * x;
            metric[i] = log_prior[i] - 0.5 * d * d;
        }
        for level in 1..=m {
            let (mut zero, mut one) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for (i, &v) in metric.iter().enumerate() {
                if c.bit(i, level) == 0 {
                    zero = log_add_exp(zero, v);
                } else {
                    one = log_add_exp(one, v);
                }
            }
            let llr = match (zero.is_finite(), one.is_finite()) {
                (true, true) => zero - one,
                (true, false) => LLR_CLAMP,
                (false, true) => -LLR_CLAMP,
                (false, false) => 0.0,
            };
            out.push(llr.clamp(-LLR_CLAMP, LLR_CLAMP));
        }
    }
    out
}

/// `phi(x) = -ln tanh(x / 2)`, its own inverse on `x > 0`.
fn phi(x: f64) -> f64 {
    if x <= 0.0 {
        return PHI_MAX;
    }
    // ln((1 + e) / (1 - e)) = ln1p(2e / (1 - e)), with 1 - e from expm1 near zero
    let e = (-x).exp();
    let one_minus = if x < 0.5 { -(-x).exp_m1() } else { 1.0 - e };
    (2.0 * e / one_minus).ln_1p().min(PHI_MAX)
}

const PHI_MAX: f64 = 60.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub bits: Vec<u8>,
    pub converged: bool,
    pub iterations: usize,
}

/// Flooding sum-product decoder with reusable message storage.
#[derive(Debug, Clone)]
pub struct BpDecoder {
    n: usize,
    /// edge -> variable, edges grouped by check
    edge_var: Vec<u32>,
    check_start: Vec<usize>,
    /// edges grouped by variable
    var_edges: Vec<u32>,
    var_start: Vec<usize>,
    early_stop: bool,
}

impl BpDecoder {
    pub fn new(h: &SparseParityMatrix) -> Self {
        let mut edge_var = Vec::with_capacity(h.edge_count());
        let mut check_start = vec![0];
        let mut per_var: Vec<Vec<u32>> = vec![Vec::new(); h.cols()];
        for r in 0..h.rows() {
            for &c in h.row(r) {
                per_var[c as usize].push(edge_var.len() as u32);
                edge_var.push(c);
            }
            check_start.push(edge_var.len());
        }
        let mut var_edges = Vec::with_capacity(edge_var.len());
        let mut var_start = vec![0];
        for list in per_var {
            var_edges.extend(list);
            var_start.push(var_edges.len());
        }
        BpDecoder {
            n: h.cols(),
            edge_var,
            check_start,
            var_edges,
            var_start,
            early_stop: true,
        }
    }

    /// Disables the zero-syndrome exit (always runs `max_iter` iterations).
    pub fn with_early_stop(mut self, enabled: bool) -> Self {
        self.early_stop = enabled;
        self
    }

    fn syndrome_ok(&self, bits: &[u8]) -> bool {
        self.check_start.windows(2).all(|w| {
            self.edge_var[w[0]..w[1]]
                .iter()
                .fold(0u8, |acc, &v| acc ^ bits[v as usize])
                == 0
        })
    }

    fn hard(&self, llrs: &[f64], c2v: &[f64], bits: &mut [u8]) {
        for v in 0..self.n {
            let total: f64 = llrs[v]
                + self.var_edges[self.var_start[v]..self.var_start[v + 1]]
                    .iter()
                    .map(|&e| c2v[e as usize])
                    .sum::<f64>();
            bits[v] = u8::from(total < 0.0);
        }
    }

    pub fn decode(&self, llrs: &[f64], max_iter: usize) -> DecodeOutcome {
        assert_eq!(
            llrs.len(),
            self.n,
            "LLR vector length must equal the block length"
        );
        let edges = self.edge_var.len();
        let mut c2v = vec![0.0; edges];
        let mut v2c = vec![0.0; edges];
        let mut bits = vec![0u8; self.n];
        self.hard(llrs, &c2v, &mut bits);
        let mut converged = self.syndrome_ok(&bits);
        let mut iterations = 0;
        if converged && self.early_stop {
            return DecodeOutcome {
                bits,
                converged,
                iterations,
            };
        }
        while iterations < max_iter {
            iterations += 1;
            for v in 0..self.n {
                let es = &self.var_edges[self.var_start[v]..self.var_start[v + 1]];
                let total: f64 = llrs[v] + es.iter().map(|&e| c2v[e as usize]).sum::<f64>();
                for &e in es {
                    v2c[e as usize] = (total - c2v[e as usize]).clamp(-LLR_CLAMP, LLR_CLAMP);
                }
            }
            for w in self.check_start.windows(2) {
                let range = w[0]..w[1];
                let mut sum = 0.0;
                let mut negative = false;
                for e in range.clone() {
                    let m = v2c[e];
                    c2v[e] = phi(m.abs());
                    sum += c2v[e];
                    negative ^= m < 0.0;
                }
                for e in range {
                    let m = v2c[e];
                    let mag = phi((sum - c2v[e]).max(0.0)).min(LLR_CLAMP);
                    c2v[e] = if negative ^ (m < 0.0) { -mag } else { mag };
                }
            }
            self.hard(llrs, &c2v, &mut bits);
            converged = self.syndrome_ok(&bits);
            if converged && self.early_stop {
                break;
            }
        }
        DecodeOutcome {
            bits,
            converged,
            iterations,
        }
    }
}

/// One-shot [`BpDecoder`] run.
pub fn bp_decode(h: &SparseParityMatrix, llrs: &[f64], max_iter: usize) -> DecodeOutcome {
    BpDecoder::new(h).decode(llrs, max_iter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{AskConstellation, SymbolPmf};

    #[test]
    fn phi_is_an_involution() {
        for &x in &[1e-6, 0.01, 0.5, 1.0, 3.0, 10.0, 25.0] {
            assert!((phi(phi(x)) - x).abs() < 1e-9 * x.max(1.0), "{x}");
        }
    }

    #[test]
    fn all_zero_converges_immediately() {
        let h = SparseParityMatrix::from_dense(2, 3, &[1, 1, 0, 0, 1, 1]).unwrap();
        let out = bp_decode(&h, &[20.0; 3], 100);
        assert_eq!(
            (out.bits, out.converged, out.iterations),
            (vec![0, 0, 0], true, 0)
        );
    }

    #[test]
    fn repetition_majority() {
        let h = SparseParityMatrix::from_dense(2, 3, &[1, 1, 0, 0, 1, 1]).unwrap();
        let out = bp_decode(&h, &[2.0, -1.0, 2.0], 100);
        assert_eq!(out.bits, vec![0, 0, 0]);
        assert!(out.converged);
    }

    #[test]
    fn demapper_symmetry_and_limits() {
        let c = AskConstellation::new(4).unwrap();
        let s = ShapedSource::new(c, SymbolPmf::uniform(16), 1.0).unwrap();
        let l = demap_llrs(&[0.0], &s);
        assert!(l[0].abs() < 1e-12);
        let l = demap_llrs(&[1e6], &s);
        assert_eq!(l[0], -LLR_CLAMP);
    }
}
