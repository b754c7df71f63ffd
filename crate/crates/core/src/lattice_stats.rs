//! Large-lattice frequency laws: central-limit Gaussians for the total and
//! even/odd atom numbers, the p-class law for rational spacings and the
//! Rayleigh random-walk limit.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use num_integer::Integer;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::geometry::root_of_unity;
use crate::io::{fmt_f64, write_csv};
use crate::rng::chunked_draws;
use crate::spectral::Spectrum;
use crate::states::{StateKind, DEFAULT_BUDGET};

/// Per-class grids extend this many standard deviations around the mean.
pub const CLASS_GRID_SIGMAS: f64 = 8.0;

/// Discrete Gaussian supports extend this many standard deviations.
const SUPPORT_SIGMAS: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawKind {
    GaussianTotal,
    FoldedDiffSf1,
    ConstrainedDiffSf2,
    EvenSiteNumber,
    PClass,
    RayleighWalk,
}

impl LawKind {
    pub fn name(&self) -> &'static str {
        match self {
            LawKind::GaussianTotal => "gaussian_total",
            LawKind::FoldedDiffSf1 => "folded_gaussian_diff_sf1",
            LawKind::ConstrainedDiffSf2 => "constrained_diff_sf2",
            LawKind::EvenSiteNumber => "even_site_number",
            LawKind::PClass => "p_class",
            LawKind::RayleighWalk => "rayleigh_walk",
        }
    }
}

/// A law on a finite set of points, renormalized to mass 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteLaw {
    pub kind: LawKind,
    /// `(x, probability)`, sorted by `x`.
    pub points: Vec<(f64, f64)>,
    /// Mass of the raw formula on the support before renormalization.
    pub pre_normalization_mass: f64,
}

impl DiscreteLaw {
    fn normalized(kind: LawKind, raw: Vec<(f64, f64)>) -> Self {
        let mass: f64 = raw.iter().map(|p| p.1).sum();
        DiscreteLaw {
            kind,
            points: raw.into_iter().map(|(x, p)| (x, p / mass)).collect(),
            pre_normalization_mass: mass,
        }
    }

    /// Probability at `x` (0 off the support).
    pub fn probability(&self, x: f64) -> f64 {
        self.points.iter().find(|p| (p.0 - x).abs() < 1e-9).map_or(0.0, |p| p.1)
    }

    pub fn mean(&self) -> f64 {
        crate::stats::mean(&self.points)
    }

    pub fn variance(&self) -> f64 {
        crate::stats::variance(&self.points)
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn to_spectrum(&self) -> Spectrum {
        Spectrum::from_pairs(self.points.iter().copied(), None)
    }

    /// A `# law=... support=discrete` line, then columns `x,probability`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# law={} support=discrete", self.kind.name())?;
        write_csv(
            w,
            &["x", "probability"],
            self.points.iter().map(|&(x, p)| vec![fmt_f64(x), fmt_f64(p)]),
        )
    }
}

fn gaussian(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn check_positive(field: &'static str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("{field} must be positive, got {x}")));
    }
    Ok(())
}

/// Gaussian law of the total atom number, mean and variance `mean_n`, on `N ≥ 0`.
pub fn gaussian_total_law(mean_n: f64) -> Result<DiscreteLaw> {
    check_positive("mean_n", mean_n)?;
    let sd = mean_n.sqrt();
    let lo = (mean_n - SUPPORT_SIGMAS * sd).floor().max(0.0) as u64;
    let hi = (mean_n + SUPPORT_SIGMAS * sd).ceil() as u64;
    let raw = (lo..=hi)
        .map(|n| (n as f64, gaussian(n as f64, mean_n, mean_n)))
        .collect();
    Ok(DiscreteLaw::normalized(LawKind::GaussianTotal, raw))
}

/// Raw formula value of the folded even/odd difference law at `|ΔN| = delta`.
///
/// SF1: `(2 − δ_{Δ,0}) (2π⟨N⟩)^{-1/2} e^{−Δ²/2⟨N⟩}`.
/// SF2: `(2 − δ_{Δ,0}) √(2/πN) e^{−Δ²/2N}` on `Δ ≡ N (mod 2)`, else 0.
pub fn even_odd_difference_weight(kind: StateKind, n: f64, delta: u64) -> Result<f64> {
    check_positive("n", n)?;
    let fold = if delta == 0 { 1.0 } else { 2.0 };
    let d = delta as f64;
    match kind {
        StateKind::CoherentSf => Ok(fold * gaussian(d, 0.0, n)),
        StateKind::NumberSf => {
            let atoms = integer_atoms(n)?;
            if delta % 2 != atoms % 2 || delta > atoms {
                return Ok(0.0);
            }
            Ok(fold * 2.0 * gaussian(d, 0.0, n))
        }
        StateKind::Mott => Err(Error::UnsupportedCombination(
            "even/odd difference law is defined for superfluid states".into(),
        )),
    }
}

fn integer_atoms(n: f64) -> Result<u64> {
    if n.fract() != 0.0 {
        return Err(Error::Domain(format!(
            "number-conserving state needs integer N, got {n}"
        )));
    }
    Ok(n as u64)
}

/// Law of `|N_e − N_o|` on a lattice at `d = λ/4`. `n` is `⟨N⟩` for SF1 and
/// the exact atom number for SF2.
pub fn even_odd_difference_law(kind: StateKind, n: f64) -> Result<DiscreteLaw> {
    check_positive("n", n)?;
    let reach = (SUPPORT_SIGMAS * n.sqrt()).ceil() as u64;
    let (law_kind, deltas): (LawKind, Vec<u64>) = match kind {
        StateKind::CoherentSf => (LawKind::FoldedDiffSf1, (0..=reach).collect()),
        StateKind::NumberSf => {
            let atoms = integer_atoms(n)?;
            let top = atoms.min(reach);
            (LawKind::ConstrainedDiffSf2, (atoms % 2..=top).step_by(2).collect())
        }
        StateKind::Mott => {
            return Err(Error::UnsupportedCombination(
                "even/odd difference law is defined for superfluid states".into(),
            ))
        }
    };
    let raw = deltas
        .into_iter()
        .map(|d| Ok((d as f64, even_odd_difference_weight(kind, n, d)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscreteLaw::normalized(law_kind, raw))
}

/// Law of the even-site atom number `N_e` implied by the difference laws:
/// independent sites give variance `⟨N⟩/2`; a fixed total `N` with
/// `N_e − N_o` of variance `N` gives variance `N/4`.
pub fn even_site_number_law(kind: StateKind, n: f64) -> Result<DiscreteLaw> {
    check_positive("n", n)?;
    let raw = match kind {
        StateKind::CoherentSf => {
            let (mean, var) = (n / 2.0, n / 2.0);
            let sd = var.sqrt();
            let lo = (mean - SUPPORT_SIGMAS * sd).floor().max(0.0) as u64;
            let hi = (mean + SUPPORT_SIGMAS * sd).ceil() as u64;
            (lo..=hi).map(|k| (k as f64, gaussian(k as f64, mean, var))).collect()
        }
        StateKind::NumberSf => {
            let atoms = integer_atoms(n)?;
            (0..=atoms)
                .map(|ne| {
                    let delta = 2.0 * ne as f64 - n;
                    (ne as f64, 2.0 * gaussian(delta, 0.0, n))
                })
                .collect()
        }
        StateKind::Mott => {
            return Err(Error::UnsupportedCombination(
                "even-site law is defined for superfluid states".into(),
            ))
        }
    };
    Ok(DiscreteLaw::normalized(LawKind::EvenSiteNumber, raw))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum PClassMethod {
    /// Sum over the product grid of per-class Gaussians.
    Exact { budget: u64 },
    /// Seeded draws: per-class rounded Gaussians (SF1) or a multinomial over
    /// classes (SF2).
    MonteCarlo { samples: usize, seed: u64 },
}

impl PClassMethod {
    pub fn exact() -> Self {
        PClassMethod::Exact { budget: DEFAULT_BUDGET }
    }
}

/// Continuity-corrected discrete Gaussian on `k ≥ 0`, cut at ±8σ.
fn class_weights(mean: f64, var: f64) -> Vec<(u64, f64)> {
    if mean == 0.0 {
        return vec![(0, 1.0)];
    }
    let sd = var.sqrt();
    let lo = (mean - CLASS_GRID_SIGMAS * sd).floor().max(0.0) as u64;
    let hi = (mean + CLASS_GRID_SIGMAS * sd).ceil() as u64;
    let cell = |k: u64| {
        let a = normal_cdf((k as f64 - 0.5 - mean) / sd);
        let b = normal_cdf((k as f64 + 0.5 - mean) / sd);
        b - a
    };
    let raw: Vec<(u64, f64)> = (lo..=hi).map(|k| (k, cell(k))).collect();
    let mass: f64 = raw.iter().map(|w| w.1).sum();
    raw.into_iter().map(|(k, w)| (k, w / mass)).collect()
}

/// Frequency law for `d = qλ/2p` from the `p` class occupations
/// `N_l`, `ω = |Σ_l N_l e^{2πilq/p}|`.
///
/// SF1 classes are independent Gaussians of mean and variance `⟨N⟩/p`. SF2
/// exact evaluation uses the same independent approximation with `⟨N⟩ = N`;
/// SF2 Monte-Carlo samples the correlated multinomial law over classes.
pub fn p_class_law(
    kind: StateKind,
    mean_n: f64,
    sites: usize,
    p: u64,
    q: u64,
    method: PClassMethod,
) -> Result<Spectrum> {
    if p < 3 {
        return Err(Error::Domain(format!(
            "p-class law needs p >= 3, got {p}; use the even/odd difference law for p = 2"
        )));
    }
    if q == 0 || q.gcd(&p) != 1 {
        return Err(Error::invalid("q", format!("{q}/{p} is not in lowest terms")));
    }
    if sites == 0 || !(sites as u64).is_multiple_of(p) {
        return Err(Error::invalid("sites", format!("{sites} is not a multiple of p = {p}")));
    }
    if !(mean_n >= 0.0 && mean_n.is_finite()) {
        return Err(Error::Domain(format!("mean_n must be non-negative, got {mean_n}")));
    }
    if kind == StateKind::Mott {
        return Err(Error::UnsupportedCombination(
            "p-class law is defined for superfluid states".into(),
        ));
    }
    let roots: Vec<Complex64> = (0..p).map(|l| root_of_unity(l * q % p, p)).collect();
    let class_mean = mean_n / p as f64;
    match method {
        PClassMethod::Exact { budget } => {
            if kind == StateKind::NumberSf {
                integer_atoms(mean_n)?;
            }
            let weights = class_weights(class_mean, class_mean);
            let required = (weights.len() as u128).saturating_pow(p as u32);
            if required > budget as u128 {
                return Err(Error::BudgetExceeded { required, budget });
            }
            Ok(grid_law(&weights, &roots))
        }
        PClassMethod::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::invalid("samples", String::from("must be positive")));
            }
            let draws: Vec<f64> = match kind {
                StateKind::CoherentSf => {
                    let sd = class_mean.sqrt();
                    chunked_draws(samples, seed, |rng| {
                        let s: Complex64 = roots
                            .iter()
                            .map(|r| r * rounded_gaussian(rng, class_mean, sd) as f64)
                            .sum();
                        s.norm()
                    })
                }
                _ => {
                    let atoms = integer_atoms(mean_n)?;
                    chunked_draws(samples, seed, |rng| {
                        let mut left = atoms;
                        let mut s = Complex64::new(0.0, 0.0);
                        for (l, r) in roots.iter().enumerate() {
                            let remaining = p as usize - l;
                            let k = if remaining == 1 {
                                left
                            } else {
                                Binomial::new(left, 1.0 / remaining as f64)
                                    .expect("valid binomial")
                                    .sample(rng)
                            };
                            left -= k;
                            s += r * k as f64;
                        }
                        s.norm()
                    })
                }
            };
            let w = 1.0 / samples as f64;
            Ok(Spectrum::from_pairs(draws.into_iter().map(|x| (x, w)), None))
        }
    }
}

fn rounded_gaussian<R: Rng>(rng: &mut R, mean: f64, sd: f64) -> u64 {
    if sd == 0.0 {
        return 0;
    }
    let normal = Normal::new(mean, sd).expect("finite parameters");
    loop {
        let k = normal.sample(rng).round();
        if k >= 0.0 {
            return k as u64;
        }
    }
}

fn grid_law(weights: &[(u64, f64)], roots: &[Complex64]) -> Spectrum {
    let p = roots.len();
    let mut index = vec![0usize; p];
    let mut acc: HashMap<u64, f64> = HashMap::new();
    loop {
        let mut prob = 1.0;
        let mut s = Complex64::new(0.0, 0.0);
        for (l, &i) in index.iter().enumerate() {
            let (k, w) = weights[i];
            prob *= w;
            s += roots[l] * k as f64;
        }
        *acc.entry((s.norm() + 0.0).to_bits()).or_default() += prob;
        let mut l = 0;
        loop {
            if l == p {
                return Spectrum::from_pairs(acc.into_iter().map(|(k, w)| (f64::from_bits(k), w)), None);
            }
            index[l] += 1;
            if index[l] < weights.len() {
                break;
            }
            index[l] = 0;
            l += 1;
        }
    }
}

/// Rayleigh law `P(ω) = (2ω/⟨N⟩) e^{−ω²/⟨N⟩}` in units of `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayleighLaw {
    pub mean_n: f64,
}

impl RayleighLaw {
    pub fn pdf(&self, omega: f64) -> f64 {
        if omega < 0.0 {
            return 0.0;
        }
        2.0 * omega / self.mean_n * (-omega * omega / self.mean_n).exp()
    }

    pub fn cdf(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        -(-omega * omega / self.mean_n).exp_m1()
    }

    pub fn mode(&self) -> f64 {
        (self.mean_n / 2.0).sqrt()
    }

    pub fn mean(&self) -> f64 {
        (PI * self.mean_n).sqrt() / 2.0
    }

    pub fn std_dev(&self) -> f64 {
        ((1.0 - PI / 4.0) * self.mean_n).sqrt()
    }

    /// Columns `x,density` on `steps + 1` equally spaced points of `[0, omega_max]`.
    pub fn write_csv<W: Write>(&self, mut w: W, omega_max: f64, steps: usize) -> io::Result<()> {
        writeln!(w, "# law={} support=continuous", LawKind::RayleighWalk.name())?;
        write_csv(
            w,
            &["x", "density"],
            (0..=steps).map(|i| {
                let x = omega_max * i as f64 / steps as f64;
                vec![fmt_f64(x), fmt_f64(self.pdf(x))]
            }),
        )
    }
}

pub fn rayleigh_walk_law(mean_n: f64) -> Result<RayleighLaw> {
    check_positive("mean_n", mean_n)?;
    Ok(RayleighLaw { mean_n })
}
