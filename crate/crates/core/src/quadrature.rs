//! Numerical integration helpers shared by the information-rate code.

use std::sync::OnceLock;

/// Gauss-Hermite rule normalised for expectations under a standard normal.
///
/// `expect(f)` approximates `E[f(Z)]` with `Z ~ N(0, 1)`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Builds an `n`-point rule by Newton iteration on the orthonormal
    /// Hermite recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "Gauss-Hermite needs at least two nodes");
        const PIM4: f64 = 0.751_125_544_464_942_5; // pi^(-1/4)
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let nf = n as f64;
        let mut z = 0.0;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = PIM4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        let sqrt_pi = std::f64::consts::PI.sqrt();
        GaussHermite {
            nodes: x.iter().map(|v| v * std::f64::consts::SQRT_2).collect(),
            weights: w.iter().map(|v| v / sqrt_pi).collect(),
        }
    }

    /// The 128-node rule used throughout the toolkit.
    pub fn standard() -> &'static GaussHermite {
        static RULE: OnceLock<GaussHermite> = OnceLock::new();
        RULE.get_or_init(|| GaussHermite::new(128))
    }

    /// A coarser rule used only to estimate the error of [`GaussHermite::standard`].
    pub fn check() -> &'static GaussHermite {
        static RULE: OnceLock<GaussHermite> = OnceLock::new();
        RULE.get_or_init(|| GaussHermite::new(96))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Iterates over `(z, weight)` pairs with weights summing to one.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn expect<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.points().map(|(z, w)| w * f(z)).sum()
    }
}

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p1, mut p2) = (1.0, 0.0);
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
                }
                dp = nf * (z * p1 - p2) / (z * z - 1.0);
                let z1 = z;
                z = z1 - p1 / dp;
                if (z - z1).abs() <= 1e-15 {
                    break;
                }
            }
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = 2.0 / ((1.0 - z * z) * dp * dp);
            weights[n - 1 - i] = weights[i];
        }
        GaussLegendre { nodes, weights }
    }

    /// The 24-node rule used for panel integration.
    pub fn standard() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(24))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
    }
}

/// `E[f(Z)]` with `Z ~ N(0, 1)` for an `f` that bends sharply over a width
/// `scale` around `kink`: composite Gauss-Legendre on `[-13, 13]` with
/// panels shrinking geometrically towards the kink.
pub fn normal_expect_near<F: FnMut(f64) -> f64>(kink: f64, scale: f64, mut f: F) -> f64 {
    const EDGE: f64 = 13.0;
    let mut cuts: Vec<f64> = (-13..=13).map(f64::from).collect();
    if kink.abs() < EDGE {
        cuts.push(kink);
        let mut w = scale.max(1e-6);
        while w < 2.0 {
            cuts.push(kink - w);
            cuts.push(kink + w);
            w *= 2.0;
        }
    }
    cuts.retain(|c| c.abs() <= EDGE);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let rule = GaussLegendre::standard();
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    cuts.windows(2)
        .map(|p| rule.integrate(p[0], p[1], |z| norm * (-0.5 * z * z).exp() * f(z)))
        .sum()
}

/// Composite trapezoid rule on `[a, b]` with `samples` equispaced points.
pub fn trapezoid<F: FnMut(f64) -> f64>(a: f64, b: f64, samples: usize, mut f: F) -> f64 {
    assert!(samples >= 2);
    let h = (b - a) / (samples - 1) as f64;
    let mut acc = 0.5 * (f(a) + f(b));
    for i in 1..samples - 1 {
        acc += f(a + i as f64 * h);
    }
    acc * h
}

/// Binary entropy of probability `p`, in bits.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// Entropy in bits of a probability vector; zero entries contribute nothing.
pub fn entropy_bits(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// `ln(exp(a) + exp(b))` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(1 + exp(x))`.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hermite_moments() {
        for rule in [
            GaussHermite::standard(),
            GaussHermite::check(),
            &GaussHermite::new(10),
        ] {
            assert_abs_diff_eq!(rule.expect(|_| 1.0), 1.0, epsilon = 1e-13);
            assert_abs_diff_eq!(rule.expect(|z| z), 0.0, epsilon = 1e-13);
            assert_abs_diff_eq!(rule.expect(|z| z * z), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(rule.expect(|z| z.powi(4)), 3.0, epsilon = 1e-11);
        }
    }

    #[test]
    fn hermite_matches_closed_form_mgf() {
        // E[exp(tZ)] = exp(t^2 / 2)
        let rule = GaussHermite::standard();
        for t in [0.5, 1.0, 2.0] {
            let got = rule.expect(|z| (t * z).exp());
            assert_abs_diff_eq!(got, (t * t / 2.0).exp(), epsilon = 1e-10);
        }
    }

    #[test]
    fn trapezoid_gaussian_density() {
        let pdf = |x: f64| (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert_abs_diff_eq!(trapezoid(-10.0, 10.0, 2001, pdf), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn entropy_helpers() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_abs_diff_eq!(binary_entropy(0.5), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(entropy_bits(&[0.25; 4]), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            log_add_exp(1000.0, 1000.0),
            1000.0 + 2f64.ln(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(softplus(-800.0), 0.0);
        assert_abs_diff_eq!(softplus(800.0), 800.0);
    }
}
