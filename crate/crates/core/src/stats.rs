//! Distances and moments for weighted point sets `(x, p)`.

/// Mean of a weighted point set, normalized by its total weight.
pub fn mean(points: &[(f64, f64)]) -> f64 {
    let mass: f64 = points.iter().map(|p| p.1).sum();
    points.iter().map(|&(x, p)| x * p).sum::<f64>() / mass
}

/// Variance about the weighted mean, normalized by total weight.
pub fn variance(points: &[(f64, f64)]) -> f64 {
    let mass: f64 = points.iter().map(|p| p.1).sum();
    let mu = mean(points);
    points.iter().map(|&(x, p)| p * (x - mu).powi(2)).sum::<f64>() / mass
}

pub fn std_dev(points: &[(f64, f64)]) -> f64 {
    variance(points).sqrt()
}

fn merged_signed(a: &[(f64, f64)], b: &[(f64, f64)], tol: f64) -> Vec<(f64, f64)> {
    let mut all: Vec<(f64, f64)> = a.iter().copied().chain(b.iter().map(|&(x, p)| (x, -p))).collect();
    all.sort_by(|l, r| l.0.total_cmp(&r.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut anchor = f64::NEG_INFINITY;
    for (x, p) in all {
        match out.last_mut() {
            Some(last) if x - anchor <= tol => last.1 += p,
            _ => {
                anchor = x;
                out.push((x, p));
            }
        }
    }
    out
}

/// Kolmogorov distance `sup |F_a − F_b|` between two discrete laws.
/// Atoms closer than `tol` are treated as the same point.
pub fn kolmogorov_discrete(a: &[(f64, f64)], b: &[(f64, f64)], tol: f64) -> f64 {
    let mut cum = 0.0f64;
    let mut worst = 0.0f64;
    for (_, d) in merged_signed(a, b, tol) {
        cum += d;
        worst = worst.max(cum.abs());
    }
    worst
}

/// Kolmogorov distance between a discrete law and a continuous CDF, checking
/// both one-sided limits at every atom.
pub fn kolmogorov_to_cdf(points: &[(f64, f64)], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = points.to_vec();
    sorted.sort_by(|l, r| l.0.total_cmp(&r.0));
    let mut cum = 0.0f64;
    let mut worst = 0.0f64;
    for (x, p) in sorted {
        let f = cdf(x);
        worst = worst.max((cum - f).abs());
        cum += p;
        worst = worst.max((cum - f).abs());
    }
    worst
}

/// Total-variation distance `½ Σ |p_a − p_b|` between two discrete laws.
pub fn total_variation(a: &[(f64, f64)], b: &[(f64, f64)], tol: f64) -> f64 {
    0.5 * merged_signed(a, b, tol).iter().map(|&(_, d)| d.abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments() {
        let pts = [(0.0, 0.5), (2.0, 0.5)];
        assert_eq!(mean(&pts), 1.0);
        assert_eq!(variance(&pts), 1.0);
        // unnormalized weights are fine
        assert_eq!(std_dev(&[(0.0, 2.0), (2.0, 2.0)]), 1.0);
    }

    #[test]
    fn distances() {
        let a = [(0.0, 0.5), (1.0, 0.5)];
        let b = [(0.0, 0.25), (1.0 + 1e-12, 0.75)];
        assert!((kolmogorov_discrete(&a, &b, 1e-9) - 0.25).abs() < 1e-15);
        assert!((total_variation(&a, &b, 1e-9) - 0.25).abs() < 1e-15);
        assert_eq!(kolmogorov_discrete(&a, &a, 1e-9), 0.0);
        // point mass at 0 against uniform(0,1): the jump at 0 gives distance 1
        assert!((kolmogorov_to_cdf(&[(0.0, 1.0)], |x| x.clamp(0.0, 1.0)) - 1.0).abs() < 1e-15);
        let half = [(0.5, 1.0)];
        assert!((kolmogorov_to_cdf(&half, |x| x.clamp(0.0, 1.0)) - 0.5).abs() < 1e-15);
    }
}
