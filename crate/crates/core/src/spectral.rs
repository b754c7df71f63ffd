//! Eigenfrequencies of the mode-coupling operator and their spectra.
//!
//! On a Fock configuration the coupling operator `Ĝ(d) = g√(N̂(d)N̂(−d))` has
//! eigenvalue `g·|Σ_m n_m e^{imφ}|`: the length of the polygon obtained by
//! laying down segments of length `n_m` turned by `φ` at each step.

use std::collections::HashMap;
use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{root_of_unity, LatticeGeometry, PhaseFraction};
use crate::io::{fmt_f64, write_csv};
use crate::states::{enumerate_configurations, sample_occupations, AtomicState, EnumerationOptions};

/// Frequencies closer than this (units of g) are merged into one line.
pub const MERGE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralLine {
    pub omega: f64,
    pub probability: f64,
}

/// Left-closed bins `[origin + k·w, origin + (k+1)·w)`; each binned line sits
/// at its bin's left edge and carries the bin's mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub bin_width: f64,
    pub origin: f64,
}

impl Binning {
    pub fn new(bin_width: f64) -> Result<Self> {
        if !(bin_width > 0.0 && bin_width.is_finite()) {
            return Err(Error::invalid("bin_width", format!("{bin_width} is not positive")));
        }
        Ok(Binning { bin_width, origin: 0.0 })
    }

    fn left_edge(&self, omega: f64) -> f64 {
        self.origin + ((omega - self.origin) / self.bin_width).floor() * self.bin_width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Sorted ascending in `omega`.
    pub lines: Vec<SpectralLine>,
    pub binning: Option<Binning>,
    /// Mass before binning (equals the line mass; kept for reporting).
    pub mass: f64,
}

impl Spectrum {
    /// Builds a spectrum from raw `(ω, p)` pairs, merging lines within
    /// [`MERGE_TOLERANCE`] and then binning if requested.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>, binning: Option<Binning>) -> Self {
        let mut exact: HashMap<u64, f64> = HashMap::new();
        for (omega, p) in pairs {
            // +0.0 and -0.0 must share a key
            *exact.entry((omega + 0.0).to_bits()).or_default() += p;
        }
        let mut raw: Vec<(f64, f64)> = exact.into_iter().map(|(k, p)| (f64::from_bits(k), p)).collect();
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut lines: Vec<SpectralLine> = Vec::new();
        let mut group: Vec<(f64, f64)> = Vec::new();
        let flush = |group: &mut Vec<(f64, f64)>, lines: &mut Vec<SpectralLine>| {
            if group.is_empty() {
                return;
            }
            let mass: f64 = group.iter().map(|g| g.1).sum();
            let omega = if group.len() > 1 && mass > 0.0 {
                group.iter().map(|g| g.0 * g.1).sum::<f64>() / mass
            } else {
                group[0].0
            };
            lines.push(SpectralLine {
                omega,
                probability: mass,
            });
            group.clear();
        };
        for (omega, p) in raw {
            if let Some(first) = group.first() {
                if omega - first.0 > MERGE_TOLERANCE {
                    flush(&mut group, &mut lines);
                }
            }
            group.push((omega, p));
        }
        flush(&mut group, &mut lines);
        let mass = lines.iter().map(|l| l.probability).sum();
        let spectrum = Spectrum {
            lines,
            binning: None,
            mass,
        };
        match binning {
            Some(b) => spectrum.binned(b),
            None => spectrum,
        }
    }

    pub fn binned(&self, binning: Binning) -> Spectrum {
        let mut bins: Vec<SpectralLine> = Vec::new();
        for line in &self.lines {
            let edge = binning.left_edge(line.omega);
            match bins.last_mut() {
                Some(last) if (last.omega - edge).abs() < 0.5 * binning.bin_width => {
                    last.probability += line.probability
                }
                _ => bins.push(SpectralLine {
                    omega: edge,
                    probability: line.probability,
                }),
            }
        }
        Spectrum {
            lines: bins,
            binning: Some(binning),
            mass: self.mass,
        }
    }

    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.lines.iter().map(|l| (l.omega, l.probability)).collect()
    }

    pub fn mean(&self) -> f64 {
        crate::stats::mean(&self.pairs())
    }

    pub fn std_dev(&self) -> f64 {
        crate::stats::std_dev(&self.pairs())
    }

    /// Columns `omega,probability`.
    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        write_csv(
            w,
            &["omega", "probability"],
            self.lines
                .iter()
                .map(|l| vec![fmt_f64(l.omega), fmt_f64(l.probability)]),
        )
    }
}

/// Evaluates `Σ_m n_m e^{imφ}` for one geometry, exactly in the two special
/// spacing classes and through per-class sums for any rational spacing.
#[derive(Debug, Clone)]
pub struct CouplingEvaluator {
    kind: EvalKind,
}

#[derive(Debug, Clone)]
enum EvalKind {
    Classes {
        fraction: PhaseFraction,
        class_of: Vec<usize>,
        roots: Vec<Complex64>,
    },
    Phases(Vec<Complex64>),
}

impl CouplingEvaluator {
    pub fn new(geometry: &LatticeGeometry) -> Self {
        let kind = match geometry.phase_fraction() {
            Some(fraction) => EvalKind::Classes {
                fraction,
                class_of: (0..geometry.num_sites()).map(|m| fraction.class_of(m)).collect(),
                roots: (0..fraction.p).map(|l| root_of_unity(l, fraction.p)).collect(),
            },
            None => EvalKind::Phases(geometry.site_phases()),
        };
        CouplingEvaluator { kind }
    }

    /// Eigenvalue of `N̂(d)` on the configuration.
    pub fn amplitude(&self, occ: &[u32]) -> Complex64 {
        match &self.kind {
            EvalKind::Classes {
                fraction,
                class_of,
                roots,
            } => {
                let mut sums = vec![0u64; fraction.p as usize];
                for (&n, &c) in occ.iter().zip(class_of) {
                    sums[c] += n as u64;
                }
                match fraction.p {
                    1 => Complex64::new(sums[0] as f64, 0.0),
                    2 => Complex64::new(sums[0] as f64 - sums[1] as f64, 0.0),
                    _ => sums.iter().zip(roots).map(|(&n, r)| r * n as f64).sum(),
                }
            }
            EvalKind::Phases(ph) => occ.iter().zip(ph).map(|(&n, e)| e * n as f64).sum(),
        }
    }

    /// Eigenvalue of `Ĝ(d)/g`.
    pub fn frequency(&self, occ: &[u32]) -> f64 {
        match &self.kind {
            EvalKind::Classes { fraction, .. } if fraction.p <= 2 => self.amplitude(occ).re.abs(),
            _ => self.amplitude(occ).norm(),
        }
    }
}

/// `ω/g = |Σ_m n_m e^{imφ}|` for one occupation tuple.
pub fn configuration_frequency(occupations: &[u32], geometry: &LatticeGeometry) -> Result<f64> {
    if occupations.len() != geometry.num_sites() {
        return Err(Error::invalid(
            "occupations",
            format!("{} occupations for {} sites", occupations.len(), geometry.num_sites()),
        ));
    }
    Ok(CouplingEvaluator::new(geometry).frequency(occupations))
}

/// Exact probability-weighted spectrum of `Ĝ(d)/g` over the configuration law.
pub fn spectrum(
    state: &AtomicState,
    geometry: &LatticeGeometry,
    options: EnumerationOptions,
    binning: Option<Binning>,
) -> Result<Spectrum> {
    let stream = enumerate_configurations(state, geometry, options)?;
    let eval = CouplingEvaluator::new(geometry);
    let mut acc: HashMap<u64, f64> = HashMap::new();
    stream.for_each_ref(|occ, p| {
        *acc.entry((eval.frequency(occ) + 0.0).to_bits()).or_default() += p;
    });
    Ok(Spectrum::from_pairs(
        acc.into_iter().map(|(k, p)| (f64::from_bits(k), p)),
        binning,
    ))
}

/// Monte-Carlo estimate of the spectrum from `count` seeded draws.
pub fn sampled_spectrum(
    state: &AtomicState,
    geometry: &LatticeGeometry,
    count: usize,
    seed: u64,
    binning: Option<Binning>,
) -> Result<Spectrum> {
    let samples = sample_occupations(state, geometry, count, seed)?;
    let eval = CouplingEvaluator::new(geometry);
    let w = 1.0 / count as f64;
    Ok(Spectrum::from_pairs(
        samples.iter().map(|occ| (eval.frequency(occ), w)),
        binning,
    ))
}

/// `√((N/2)(1 − cos φ))` for a number-conserving double well.
///
/// This is the spread `√⟨|N̂(d) − ⟨N̂(d)⟩|²⟩` of the coupling amplitude; at
/// `d = λ/4` it is the standard deviation of `n₀ − n₁`. It describes the
/// width of the frequency distribution only while the mean frequency exceeds
/// the fluctuations; near `d = λ/4` the folded law `|n₀ − n₁|` is narrower.
pub fn sf2_number_difference_std(atoms: u32, geometry: &LatticeGeometry) -> Result<f64> {
    if geometry.num_sites() != 2 {
        return Err(Error::Domain(format!(
            "number-difference width is defined for two wells, got {}",
            geometry.num_sites()
        )));
    }
    Ok((atoms as f64 / 2.0 * (1.0 - geometry.cos_phase())).sqrt())
}

/// Mean and spread of the coupling amplitude `N(d)` over the configuration law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeMoments {
    pub mean: Complex64,
    /// `√⟨|N(d) − ⟨N(d)⟩|²⟩`.
    pub spread: f64,
}

pub fn amplitude_moments(
    state: &AtomicState,
    geometry: &LatticeGeometry,
    options: EnumerationOptions,
) -> Result<AmplitudeMoments> {
    let stream = enumerate_configurations(state, geometry, options)?;
    let eval = CouplingEvaluator::new(geometry);
    let mut mass = 0.0;
    let mut first = Complex64::new(0.0, 0.0);
    let mut second = 0.0;
    stream.for_each_ref(|occ, p| {
        let a = eval.amplitude(occ);
        mass += p;
        first += a * p;
        second += a.norm_sqr() * p;
    });
    let mean = first / mass;
    Ok(AmplitudeMoments {
        mean,
        spread: (second / mass - mean.norm_sqr()).max(0.0).sqrt(),
    })
}
