//! The J-function: mutual information between a bit and a consistent
//! Gaussian LLR with standard deviation `s` (mean `s^2 / 2`).

use std::sync::OnceLock;

use crate::surrogate::biawgn_cond_entropy;

const TABLE_SIZE: usize = 4096;
const S_MAX: f64 = 30.0;

/// Tabulated J-function with monotone cubic interpolation.
#[derive(Debug, Clone)]
pub struct JFunction {
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

/// Exact J-function by quadrature.
pub fn j_exact(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        1.0 - biawgn_cond_entropy(2.0 / s)
    }
}

impl JFunction {
    /// Builds the table from `size` quadrature evaluations on `[0, s_max]`.
    pub fn with_table(size: usize, s_max: f64) -> Self {
        assert!(size >= 3);
        let step = s_max / (size - 1) as f64;
        let mut values: Vec<f64> = (0..size).map(|i| j_exact(i as f64 * step)).collect();
        // enforce monotonicity against rounding noise near J = 1
        for i in 1..size {
            values[i] = values[i].clamp(values[i - 1], 1.0);
        }
        let secant: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]) / step).collect();
        let mut slopes = vec![0.0; size];
        slopes[0] = secant[0];
        slopes[size - 1] = secant[size - 2];
        for i in 1..size - 1 {
            slopes[i] = if secant[i - 1] * secant[i] <= 0.0 {
                0.0
            } else {
                0.5 * (secant[i - 1] + secant[i])
            };
        }
        // Fritsch-Carlson limiter
        for i in 0..size - 1 {
            if secant[i] == 0.0 {
                slopes[i] = 0.0;
                slopes[i + 1] = 0.0;
                continue;
            }
            let a = slopes[i] / secant[i];
            let b = slopes[i + 1] / secant[i];
            let r = a * a + b * b;
            if r > 9.0 {
                let tau = 3.0 / r.sqrt();
                slopes[i] = tau * a * secant[i];
                slopes[i + 1] = tau * b * secant[i];
            }
        }
        JFunction {
            step,
            values,
            slopes,
        }
    }

    /// Shared 4096-point table on `[0, 30]`.
    pub fn global() -> &'static JFunction {
        static TABLE: OnceLock<JFunction> = OnceLock::new();
        TABLE.get_or_init(|| JFunction::with_table(TABLE_SIZE, S_MAX))
    }

    pub fn s_max(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    fn segment(&self, i: usize, t: f64) -> f64 {
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * self.step, self.slopes[i + 1] * self.step);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }

    fn segment_slope(&self, i: usize, t: f64) -> f64 {
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * self.step, self.slopes[i + 1] * self.step);
        let t2 = t * t;
        (6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1
    }

    /// `J(s)`, clamped to `[0, 1]`.
    pub fn j(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if s >= self.s_max() {
            return 1.0;
        }
        let pos = s / self.step;
        let i = (pos as usize).min(self.values.len() - 2);
        self.segment(i, pos - i as f64).clamp(0.0, 1.0)
    }

    /// `J^-1(mi)`, clamped to `[0, s_max]`.
    pub fn inverse(&self, mi: f64) -> f64 {
        if mi <= 0.0 {
            return 0.0;
        }
        let last = *self.values.last().expect("non-empty table");
        if mi >= last {
            // first table point reaching the plateau
            let i = self.values.partition_point(|&v| v < last);
            return i as f64 * self.step;
        }
        // values[i] <= mi < values[i + 1]; safeguarded Newton on the segment
        let i = self.values.partition_point(|&v| v <= mi) - 1;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut t = if y1 > y0 { (mi - y0) / (y1 - y0) } else { 0.5 };
        for _ in 0..60 {
            let f = self.segment(i, t) - mi;
            if f.abs() <= 1e-16 {
                break;
            }
            if f < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let d = self.segment_slope(i, t);
            let newton = t - f / d;
            t = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo < 1e-15 {
                break;
            }
        }
        (i as f64 + t) * self.step
    }
}
