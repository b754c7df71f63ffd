//! Special functions: log-factorials, Dawson's integral and `erfi`.

use std::f64::consts::PI;

/// Table of `ln k!` for `k = 0..=n`.
#[derive(Debug, Clone)]
pub struct LnFactorial {
    table: Vec<f64>,
}

impl LnFactorial {
    pub fn new(n: usize) -> Self {
        let mut table = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        table.push(0.0);
        for k in 1..=n {
            acc += (k as f64).ln();
            table.push(acc);
        }
        LnFactorial { table }
    }

    #[inline]
    pub fn get(&self, k: usize) -> f64 {
        self.table[k]
    }

    pub fn max(&self) -> usize {
        self.table.len() - 1
    }
}

/// `ln P(n)` for a Poisson law of mean `mean`. `mean == 0` is the point mass at 0.
pub fn ln_poisson_pmf(n: usize, mean: f64, lnf: &LnFactorial) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    n as f64 * mean.ln() - mean - lnf.get(n)
}

const SERIES_LIMIT: f64 = 7.0;

/// Dawson's integral `D(x) = e^{-x²} ∫₀ˣ e^{t²} dt`.
///
/// Power series (all terms positive) below |x| = 7, asymptotic expansion
/// truncated at its smallest term above; both are accurate to ~1e-15.
pub fn dawson(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let sign = x.signum();
    let a = x.abs();
    if a == 0.0 {
        return 0.0;
    }
    if a.is_infinite() {
        return 0.0;
    }
    let v = if a <= SERIES_LIMIT {
        dawson_series(a)
    } else {
        dawson_asymptotic(a)
    };
    sign * v
}

fn dawson_series(a: f64) -> f64 {
    let x2 = a * a;
    let mut power = a; // x^{2n+1}/n!
    let mut sum = a;
    let mut n = 0.0;
    loop {
        n += 1.0;
        power *= x2 / n;
        let term = power / (2.0 * n + 1.0);
        sum += term;
        if term < 1e-17 * sum && n > x2 {
            break;
        }
    }
    (-x2).exp() * sum
}

fn dawson_asymptotic(a: f64) -> f64 {
    let inv = 1.0 / (2.0 * a * a);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        let next = term * (2.0 * k - 1.0) * inv;
        if next >= term || next < 1e-17 * sum {
            break;
        }
        term = next;
        sum += term;
    }
    sum / (2.0 * a)
}

/// Imaginary error function `erfi(x) = -i·erf(ix) = 2/√π ∫₀ˣ e^{t²} dt`.
/// Overflows to ±∞ beyond |x| ≈ 26.6.
pub fn erfi(x: f64) -> f64 {
    2.0 / PI.sqrt() * (x * x).exp() * dawson(x)
}

/// `e^{-x²}·erfi(x)`, finite for every real `x`.
pub fn erfi_scaled(x: f64) -> f64 {
    2.0 / PI.sqrt() * dawson(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Composite Gauss-Legendre (5-point) quadrature of e^{t²} on [0, x].
    fn erfi_by_quadrature(x: f64) -> f64 {
        const NODES: [f64; 5] = [
            0.0,
            -0.538_469_310_105_683_1,
            0.538_469_310_105_683_1,
            -0.906_179_845_938_664,
            0.906_179_845_938_664,
        ];
        const WEIGHTS: [f64; 5] = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_08,
            0.236_926_885_056_189_08,
        ];
        let panels = 4000;
        let h = x / panels as f64;
        let mut s = 0.0;
        for i in 0..panels {
            let mid = (i as f64 + 0.5) * h;
            for (n, w) in NODES.iter().zip(WEIGHTS) {
                let t = mid + 0.5 * h * n;
                s += w * (t * t).exp();
            }
        }
        2.0 / PI.sqrt() * s * 0.5 * h
    }

    #[test]
    fn erfi_matches_quadrature() {
        for &x in &[0.01, 0.3, 1.0, 2.5, 4.0, 6.9, 7.1, 9.0, 12.0, 20.0] {
            let exact = erfi_by_quadrature(x);
            let got = erfi(x);
            assert!(((got - exact) / exact).abs() < 1e-10, "x={x}: {got} vs {exact}");
        }
    }

    #[test]
    fn reference_values() {
        // Tabulated Dawson integral values.
        assert!((dawson(1.0) - 0.538_079_506_912_768_4).abs() < 1e-15);
        assert!((dawson(2.0) - 0.301_340_388_923_791_7).abs() < 1e-15);
        assert!((erfi(1.0) - 1.650_425_758_797_542_8).abs() < 1e-14);
        assert_eq!(dawson(0.0), 0.0);
        assert_eq!(dawson(-1.5), -dawson(1.5));
    }

    #[test]
    fn scaled_form_is_finite_at_large_argument() {
        for &x in &[30.0, 100.0, 1e4] {
            let v = erfi_scaled(x) * PI.sqrt() / 2.0 * 2.0 * x; // → 1
            assert!((v - 1.0).abs() < 1.0 / (x * x), "x={x}: {v}");
        }
        assert!(erfi(30.0).is_infinite());
    }

    #[test]
    fn series_and_asymptotic_agree_at_switch() {
        for x in [SERIES_LIMIT - 0.5, SERIES_LIMIT, SERIES_LIMIT + 0.5] {
            let s = dawson_series(x);
            let a = dawson_asymptotic(x);
            assert!(((s - a) / s).abs() < 1e-13, "x={x}: {s} vs {a}");
        }
    }

    #[test]
    fn ln_factorial_small() {
        let t = LnFactorial::new(20);
        assert!((t.get(5) - 120f64.ln()).abs() < 1e-14);
        assert!((t.get(20) - 2_432_902_008_176_640_000f64.ln()).abs() < 1e-12);
        assert_eq!(t.max(), 20);
    }
}
