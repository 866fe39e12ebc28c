//! Protograph EXIT (PEXIT) recursion under the Gaussian LLR approximation.
//!
//! Messages are tracked per protograph edge type `(l, k)`; a bundle of
//! `a_lk` parallel edges shares one value.

use serde::{Deserialize, Serialize};

use super::{BaseMatrix, JFunction};
use crate::error::{Error, Result};
use crate::surrogate::SurrogateSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PexitConfig {
    pub max_iter: usize,
    /// Convergence requires every `I_app,k >= 1 - epsilon`.
    pub epsilon: f64,
}

impl Default for PexitConfig {
    fn default() -> Self {
        PexitConfig {
            max_iter: 500,
            epsilon: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PexitTrace {
    pub converged: bool,
    pub iterations_used: usize,
    /// A-posteriori mutual information per protograph column at termination.
    pub app_mi: Vec<f64>,
}

/// Runs PEXIT for `base` with per-level channel surrogates.
pub fn pexit_converges(
    base: &BaseMatrix,
    surrogates: &SurrogateSet,
    config: &PexitConfig,
) -> Result<PexitTrace> {
    if base.max_level() > surrogates.m() {
        return Err(Error::InvalidParameter(format!(
            "base matrix uses level {} but only {} surrogates are given",
            base.max_level(),
            surrogates.m()
        )));
    }
    let channel: Vec<f64> = base
        .levels()
        .iter()
        .map(|&l| surrogates.llr_std(l))
        .collect();
    Ok(run(base, &channel, config, JFunction::global()))
}

/// Core recursion on per-column channel LLR standard deviations.
pub(crate) fn run(
    base: &BaseMatrix,
    channel_std: &[f64],
    config: &PexitConfig,
    jf: &JFunction,
) -> PexitTrace {
    let (rows, cols) = (base.rows(), base.cols());
    let edges: Vec<(usize, usize, f64)> = (0..rows)
        .flat_map(|l| (0..cols).map(move |k| (l, k)))
        .filter(|&(l, k)| base.get(l, k) > 0)
        .map(|(l, k)| (l, k, f64::from(base.get(l, k))))
        .collect();
    let ch2: Vec<f64> = channel_std.iter().map(|s| s * s).collect();
    // check-to-variable MI per edge type
    let mut c2v = vec![0.0; edges.len()];
    let mut v2c = vec![0.0; edges.len()];
    let mut sq = vec![0.0; edges.len()];
    let mut col_acc = vec![0.0; cols];
    let mut row_acc = vec![0.0; rows];
    let mut app = vec![0.0; cols];
    let mut prev = vec![-1.0; edges.len()];

    for iter in 1..=config.max_iter {
        // variable node update
        col_acc.copy_from_slice(&ch2);
        for (e, &(_, k, a)) in edges.iter().enumerate() {
            let s = jf.inverse(c2v[e]);
            sq[e] = s * s;
            col_acc[k] += a * sq[e];
        }
        for (e, &(_, k, _)) in edges.iter().enumerate() {
            v2c[e] = jf.j((col_acc[k] - sq[e]).max(0.0).sqrt());
        }
        // check node update
        row_acc.iter_mut().for_each(|v| *v = 0.0);
        for (e, &(l, _, a)) in edges.iter().enumerate() {
            let s = jf.inverse(1.0 - v2c[e]);
            sq[e] = s * s;
            row_acc[l] += a * sq[e];
        }
        for (e, &(l, _, _)) in edges.iter().enumerate() {
            c2v[e] = 1.0 - jf.j((row_acc[l] - sq[e]).max(0.0).sqrt());
        }
        // a-posteriori MI
        col_acc.copy_from_slice(&ch2);
        for (e, &(_, k, a)) in edges.iter().enumerate() {
            let s = jf.inverse(c2v[e]);
            col_acc[k] += a * s * s;
        }
        for (k, v) in app.iter_mut().enumerate() {
            *v = jf.j(col_acc[k].sqrt());
        }
        if app.iter().all(|&v| v >= 1.0 - config.epsilon) {
            return PexitTrace {
                converged: true,
                iterations_used: iter,
                app_mi: app,
            };
        }
        // a fixed point below the target can never converge
        let moved = c2v.iter().zip(&prev).any(|(a, b)| (a - b).abs() > 1e-14);
        if !moved {
            return PexitTrace {
                converged: false,
                iterations_used: iter,
                app_mi: app,
            };
        }
        prev.copy_from_slice(&c2v);
    }
    PexitTrace {
        converged: false,
        iterations_used: config.max_iter,
        app_mi: app,
    }
}
