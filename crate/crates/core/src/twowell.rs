//! Exact atom-photon dynamics in a double well.
//!
//! `n̂₀`, `n̂₁` and `n̂ₖ + n̂₋ₖ = n_tot` are conserved, so each atomic sector
//! `(n₀, n₁)` evolves in the `(n_tot + 1)`-dimensional photon space spanned by
//! `|n₋ₖ = j⟩`. There the Hamiltonian is tridiagonal: diagonal
//! `(n₀ + n₁)·n_tot` and `⟨j+1|H|j⟩ = ν √((j+1)(n_tot−j))` with
//! `ν = n₀ + n₁ e^{iφ}`. Photons start in `|n₋ₖ = 0, n₊ₖ = n_tot⟩`.

use std::f64::consts::PI;
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::LatticeGeometry;
use crate::io::{fmt_f64, write_csv};
use crate::special::{ln_poisson_pmf, LnFactorial};
use crate::states::{enumerate_configurations, poisson_cutoff, AtomicState, EnumerationOptions};

/// Eigendecomposition of one sector Hamiltonian (units of `g`).
#[derive(Debug, Clone)]
pub struct SectorEvolution {
    pub n0: u32,
    pub n1: u32,
    pub n_tot: u32,
    /// `ν = n₀ + n₁ e^{iφ}`.
    pub nu: Complex64,
    diagonal: f64,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<Complex64>,
    /// `V† e₀`.
    initial: Vec<Complex64>,
}

impl SectorEvolution {
    pub fn new(n0: u32, n1: u32, n_tot: u32, geometry: &LatticeGeometry) -> Result<Self> {
        require_two_wells(geometry)?;
        let nu = Complex64::new(n0 as f64, 0.0) + geometry.site_phases()[1] * n1 as f64;
        let dim = n_tot as usize + 1;
        let mut h = DMatrix::<Complex64>::zeros(dim, dim);
        for j in 0..dim - 1 {
            let c = nu * (((j + 1) * (n_tot as usize - j)) as f64).sqrt();
            h[(j + 1, j)] = c;
            h[(j, j + 1)] = c.conj();
        }
        let eig = SymmetricEigen::new(h);
        let initial = (0..dim).map(|k| eig.eigenvectors[(0, k)].conj()).collect();
        Ok(SectorEvolution {
            n0,
            n1,
            n_tot,
            nu,
            diagonal: (n0 as f64 + n1 as f64) * n_tot as f64,
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
            initial,
        })
    }

    /// Photon amplitudes `⟨n₋ₖ = j|ψ(t)⟩`, `j = 0..=n_tot`.
    pub fn amplitudes(&self, t: f64) -> Vec<Complex64> {
        let dim = self.initial.len();
        let global = Complex64::from_polar(1.0, -self.diagonal * t);
        let rotated: Vec<Complex64> = (0..dim)
            .map(|k| self.initial[k] * Complex64::from_polar(1.0, -self.eigenvalues[k] * t))
            .collect();
        (0..dim)
            .map(|j| {
                global
                    * (0..dim)
                        .map(|k| self.eigenvectors[(j, k)] * rotated[k])
                        .sum::<Complex64>()
            })
            .collect()
    }

    pub fn probabilities(&self, t: f64) -> Vec<f64> {
        self.amplitudes(t).iter().map(|a| a.norm_sqr()).collect()
    }
}

fn require_two_wells(geometry: &LatticeGeometry) -> Result<()> {
    if geometry.num_sites() != 2 {
        return Err(Error::Domain(format!(
            "exact joint dynamics needs two wells, got {}",
            geometry.num_sites()
        )));
    }
    Ok(())
}

/// Photon amplitudes of one sector at each time.
pub fn evolve_sector(
    n0: u32,
    n1: u32,
    n_tot: u32,
    geometry: &LatticeGeometry,
    times: &[f64],
) -> Result<Vec<Vec<Complex64>>> {
    let s = SectorEvolution::new(n0, n1, n_tot, geometry)?;
    Ok(times.iter().map(|&t| s.amplitudes(t)).collect())
}

/// (n0, n1, amplitude) of one two-well Fock component.
type AtomicSector = (u32, u32, Complex64);

/// Atomic sectors `(n₀, n₁)` with amplitudes `⟨n₀, n₁|ψ_atoms⟩` and the mass
/// missing from truncation.
fn atomic_sectors(
    state: &AtomicState,
    geometry: &LatticeGeometry,
    options: EnumerationOptions,
) -> Result<(Vec<AtomicSector>, f64)> {
    let stream = enumerate_configurations(state, geometry, options)?;
    let bound = stream.truncation_bound();
    let phases: Vec<f64> = match state {
        AtomicState::CoherentSf { alphas } => alphas.iter().map(|a| a.arg()).collect(),
        _ => vec![0.0; 2],
    };
    let mut out = Vec::new();
    stream.for_each_ref(|occ, p| {
        let phase = occ[0] as f64 * phases[0] + occ[1] as f64 * phases[1];
        out.push((occ[0], occ[1], Complex64::from_polar(p.sqrt(), phase)));
    });
    Ok((out, bound))
}

/// Joint atom-photon amplitudes at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub n_tot: u32,
    pub time: f64,
    pub sectors: Vec<JointSector>,
    /// Atomic probability mass dropped before renormalization.
    pub truncation_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSector {
    pub n0: u32,
    pub n1: u32,
    /// `⟨n₀, n₁, n₋ₖ = j|Ψ⟩`, `j = 0..=n_tot`.
    pub amplitudes: Vec<Complex64>,
}

impl JointState {
    pub fn norm_sqr(&self) -> f64 {
        self.sectors
            .iter()
            .flat_map(|s| s.amplitudes.iter())
            .map(|a| a.norm_sqr())
            .sum()
    }
}

fn build_joint(
    sectors: Vec<(u32, u32, Complex64)>,
    truncation_bound: f64,
    geometry: &LatticeGeometry,
    n_tot: u32,
    t: f64,
) -> Result<JointState> {
    let mass: f64 = sectors.iter().map(|s| s.2.norm_sqr()).sum();
    let scale = 1.0 / mass.sqrt();
    let built: Result<Vec<JointSector>> = sectors
        .into_par_iter()
        .map(|(n0, n1, c)| {
            let ev = SectorEvolution::new(n0, n1, n_tot, geometry)?;
            Ok(JointSector {
                n0,
                n1,
                amplitudes: ev.amplitudes(t).into_iter().map(|a| a * c * scale).collect(),
            })
        })
        .collect();
    Ok(JointState {
        n_tot,
        time: t,
        sectors: built?,
        truncation_bound,
    })
}

pub fn joint_state(
    state: &AtomicState,
    geometry: &LatticeGeometry,
    n_tot: u32,
    t: f64,
    options: EnumerationOptions,
) -> Result<JointState> {
    require_two_wells(geometry)?;
    let (sectors, bound) = atomic_sectors(state, geometry, options)?;
    build_joint(sectors, bound, geometry, n_tot, t)
}

/// Initial state of the `−k` / `+k` photon pair; `−k` always starts empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhotonInput {
    /// `n_tot` photons in `+k`.
    Fock { n_tot: u32 },
    /// Coherent `+k` field with mean photon number `mean`, handled as a
    /// Poisson mixture of Fock sectors.
    Coherent { mean: f64 },
}

/// Photon-number law of the reflected `−k` mode over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonStatistics {
    pub times: Vec<f64>,
    /// `table[i][j] = P(n₋ₖ = j)` at `times[i]`.
    pub table: Vec<Vec<f64>>,
    /// `⟨n̂ₖ + n̂₋ₖ⟩` of the photon input.
    pub mean_total_photons: f64,
    pub truncation_bound: f64,
}

impl PhotonStatistics {
    /// `⟨n̂₋ₖ(t)⟩ / ⟨n_tot⟩` per time.
    pub fn normalized_intensity(&self) -> Vec<f64> {
        self.table
            .iter()
            .map(|row| {
                if self.mean_total_photons == 0.0 {
                    return 0.0;
                }
                row.iter().enumerate().map(|(j, p)| j as f64 * p).sum::<f64>() / self.mean_total_photons
            })
            .collect()
    }

    /// Long form, columns `t,n_minus_k,probability`.
    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        write_csv(
            w,
            &["t", "n_minus_k", "probability"],
            self.times.iter().zip(&self.table).flat_map(|(&t, row)| {
                row.iter()
                    .enumerate()
                    .map(move |(j, &p)| vec![fmt_f64(t), j.to_string(), fmt_f64(p)])
            }),
        )
    }
}

/// `P_{n₋ₖ}(t) = Σ P(n₀, n₁) · P^{(n₀,n₁)}_{n₋ₖ}(t)` from exact sector evolution.
pub fn photon_statistics(
    state: &AtomicState,
    geometry: &LatticeGeometry,
    input: PhotonInput,
    times: &[f64],
    options: EnumerationOptions,
) -> Result<PhotonStatistics> {
    require_two_wells(geometry)?;
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("times", "times must be finite"));
    }
    let (sectors, atomic_bound) = atomic_sectors(state, geometry, options)?;
    let atomic_mass: f64 = sectors.iter().map(|s| s.2.norm_sqr()).sum();
    let photon_law: Vec<(u32, f64)> = match input {
        PhotonInput::Fock { n_tot } => vec![(n_tot, 1.0)],
        PhotonInput::Coherent { mean } => {
            if !(mean >= 0.0 && mean.is_finite()) {
                return Err(Error::invalid(
                    "coherent_photons",
                    format!("{mean} is not a valid mean"),
                ));
            }
            let cut = poisson_cutoff(mean, options.epsilon);
            let lnf = LnFactorial::new(cut);
            (0..=cut)
                .map(|n| (n as u32, ln_poisson_pmf(n, mean, &lnf).exp()))
                .filter(|p| p.1 > 0.0)
                .collect()
        }
    };
    let photon_mass: f64 = photon_law.iter().map(|p| p.1).sum();
    let width = photon_law.iter().map(|p| p.0).max().unwrap_or(0) as usize + 1;
    let mean_total_photons = photon_law.iter().map(|&(n, p)| n as f64 * p).sum::<f64>() / photon_mass;

    // one table per (photon sector, atomic sector), summed in a fixed order
    let jobs: Vec<(u32, f64, u32, u32, f64)> = photon_law
        .iter()
        .flat_map(|&(n, pn)| sectors.iter().map(move |&(n0, n1, c)| (n, pn, n0, n1, c.norm_sqr())))
        .collect();
    let parts: Result<Vec<Vec<Vec<f64>>>> = jobs
        .par_iter()
        .map(|&(n, pn, n0, n1, pa)| {
            let ev = SectorEvolution::new(n0, n1, n, geometry)?;
            let w = pn * pa / (photon_mass * atomic_mass);
            Ok(times
                .iter()
                .map(|&t| ev.probabilities(t).into_iter().map(|p| p * w).collect())
                .collect())
        })
        .collect();
    let mut table = vec![vec![0.0; width]; times.len()];
    for part in parts? {
        for (row, add) in table.iter_mut().zip(part) {
            for (cell, v) in row.iter_mut().zip(add) {
                *cell += v;
            }
        }
    }
    Ok(PhotonStatistics {
        times: times.to_vec(),
        table,
        mean_total_photons,
        truncation_bound: atomic_bound,
    })
}

/// Rectangular grid of complex `α`, `re` varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QGrid {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl QGrid {
    pub fn square(half_width: f64, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && half_width >= 0.0) {
            return Err(Error::invalid("grid", "need positive spacing and non-negative extent"));
        }
        let n = (2.0 * half_width / spacing).round() as usize;
        let axis: Vec<f64> = (0..=n).map(|i| -half_width + i as f64 * spacing).collect();
        Ok(QGrid {
            re: axis.clone(),
            im: axis,
        })
    }

    /// `[−|α₀|−3, |α₀|+3]²` at spacing 0.1.
    pub fn default_for(alpha0: Complex64) -> Self {
        QGrid::square(alpha0.norm() + 3.0, 0.1).expect("valid default grid")
    }

    pub fn points(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.im
            .iter()
            .flat_map(move |&y| self.re.iter().map(move |&x| Complex64::new(x, y)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalAtoms {
    pub n_minus_k: u32,
    pub probability: f64,
    /// `Tr ρ²` of the two-well atomic state given this photon count.
    pub two_well_purity: f64,
    /// `Tr ρ₀²` of well 0 alone given this photon count.
    pub well0_purity: f64,
    /// Probabilities of even and odd `n₀ − n₁`.
    pub parity: [f64; 2],
    /// `(n₀ − n₁, probability)`, ascending.
    pub difference_distribution: Vec<(i64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatDiagnostics {
    pub grid: QGrid,
    /// `Q(α) = ⟨α|ρ₀|α⟩/π` on `grid.points()`.
    pub q: Vec<f64>,
    /// Outcomes `n₋ₖ = n_tot` and `n₋ₖ = 0`.
    pub photon_outcomes: [ConditionalAtoms; 2],
    /// Mass of all other photon outcomes.
    pub other_outcomes_mass: f64,
    /// `Tr ρ²` of the unconditional two-well atomic state.
    pub atomic_purity: f64,
    /// Atomic mass outside the per-well Fock cutoffs.
    pub truncation_bound: f64,
}

impl CatDiagnostics {
    /// Columns `re,im,q`.
    pub fn write_q_csv<W: Write>(&self, w: W) -> io::Result<()> {
        write_csv(
            w,
            &["re", "im", "q"],
            self.grid
                .points()
                .zip(&self.q)
                .map(|(a, &q)| vec![fmt_f64(a.re), fmt_f64(a.im), fmt_f64(q)]),
        )
    }
}

/// Time at which the cat diagnostics are taken (units of `1/g`).
pub const CAT_TIME: f64 = PI / 2.0;

/// Evolves per-well coherent states at `d = λ/4` to `t = π/2g` and reports
/// the atomic Q-function of well 0, the photon outcomes `{n_tot, 0}` and
/// the atomic state conditioned on each.
///
/// Each well's Fock space is cut at `⌈|α|² + 8|α|⌉`.
pub fn cat_state_diagnostics(
    state: &AtomicState,
    geometry: &LatticeGeometry,
    n_tot: u32,
    grid: Option<QGrid>,
) -> Result<CatDiagnostics> {
    require_two_wells(geometry)?;
    if geometry.phase_fraction().map(|f| f.p) != Some(2) {
        return Err(Error::Domain(format!(
            "cat diagnostics need d = λ/4 (mod λ/2), got d/λ = {}",
            geometry.spacing()
        )));
    }
    let alphas = match state {
        AtomicState::CoherentSf { alphas } if alphas.len() == 2 => alphas.clone(),
        AtomicState::CoherentSf { .. } => {
            return Err(Error::invalid("alphas", "need one amplitude per well"));
        }
        _ => {
            return Err(Error::UnsupportedCombination(
                "cat diagnostics are defined for per-well coherent states".into(),
            ))
        }
    };
    let cut: Vec<usize> = alphas
        .iter()
        .map(|a| (a.norm_sqr() + 8.0 * a.norm()).ceil() as usize)
        .collect();
    let lnf = LnFactorial::new(cut[0].max(cut[1]));
    let coherent = |a: Complex64, n: usize| -> Complex64 {
        if a.norm_sqr() == 0.0 {
            return if n == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        let ln_mag = -0.5 * a.norm_sqr() + n as f64 * a.norm().ln() - 0.5 * lnf.get(n);
        Complex64::from_polar(ln_mag.exp(), n as f64 * a.arg())
    };
    let mut sectors = Vec::new();
    for n0 in 0..=cut[0] {
        for n1 in 0..=cut[1] {
            sectors.push((n0 as u32, n1 as u32, coherent(alphas[0], n0) * coherent(alphas[1], n1)));
        }
    }
    let kept: f64 = sectors.iter().map(|s| s.2.norm_sqr()).sum();
    let joint = build_joint(sectors, (1.0 - kept).max(0.0), geometry, n_tot, CAT_TIME)?;

    let d0 = cut[0] + 1;
    let d1 = cut[1] + 1;
    let dp = n_tot as usize + 1;
    // psi[(n0 * d1 + n1) * dp + j]
    let mut psi = vec![Complex64::new(0.0, 0.0); d0 * d1 * dp];
    for s in &joint.sectors {
        let base = (s.n0 as usize * d1 + s.n1 as usize) * dp;
        psi[base..base + dp].copy_from_slice(&s.amplitudes);
    }
    let at = |n0: usize, n1: usize, j: usize| psi[(n0 * d1 + n1) * dp + j];

    // ρ₀ = Tr_{well 1, photons}
    let mut rho0 = DMatrix::<Complex64>::zeros(d0, d0);
    for a in 0..d0 {
        for b in 0..d0 {
            let mut acc = Complex64::new(0.0, 0.0);
            for n1 in 0..d1 {
                for j in 0..dp {
                    acc += at(a, n1, j) * at(b, n1, j).conj();
                }
            }
            rho0[(a, b)] = acc;
        }
    }
    let grid = grid.unwrap_or_else(|| QGrid::default_for(alphas[0]));
    let q = q_function(&rho0, &grid, &lnf);

    // Unconditional atomic state: ρ = Σ_j |χ_j⟩⟨χ_j| with χ_j(n₀,n₁) = Ψ(n₀,n₁,j),
    // so Tr ρ² = Σ_{j,k} |⟨χ_j|χ_k⟩|².
    let overlap =
        |j: usize, k: usize| -> Complex64 { (0..d0 * d1).map(|s| psi[s * dp + j].conj() * psi[s * dp + k]).sum() };
    let mut atomic_purity = 0.0;
    for j in 0..dp {
        for k in 0..dp {
            atomic_purity += overlap(j, k).norm_sqr();
        }
    }
    let outcome_mass: Vec<f64> = (0..dp).map(|j| overlap(j, j).re).collect();

    let conditional = |j: usize| -> ConditionalAtoms {
        let p = outcome_mass[j];
        let mut r0 = DMatrix::<Complex64>::zeros(d0, d0);
        let mut parity = [0.0; 2];
        let mut diff = std::collections::BTreeMap::<i64, f64>::new();
        if p > 0.0 {
            for a in 0..d0 {
                for n1 in 0..d1 {
                    let w = at(a, n1, j).norm_sqr() / p;
                    let delta = a as i64 - n1 as i64;
                    parity[delta.rem_euclid(2) as usize] += w;
                    *diff.entry(delta).or_default() += w;
                }
                for b in 0..d0 {
                    let acc: Complex64 = (0..d1).map(|n1| at(a, n1, j) * at(b, n1, j).conj()).sum();
                    r0[(a, b)] = acc / p;
                }
            }
        }
        ConditionalAtoms {
            n_minus_k: j as u32,
            probability: p,
            two_well_purity: if p > 0.0 { 1.0 } else { 0.0 },
            well0_purity: purity(&r0),
            parity,
            difference_distribution: diff.into_iter().collect(),
        }
    };
    let top = n_tot as usize;
    let outcomes = [conditional(top), conditional(0)];
    let other = if top == 0 {
        0.0
    } else {
        outcome_mass[1..top].iter().sum()
    };
    Ok(CatDiagnostics {
        grid,
        q,
        photon_outcomes: outcomes,
        other_outcomes_mass: other,
        atomic_purity,
        truncation_bound: joint.truncation_bound,
    })
}

fn purity(rho: &DMatrix<Complex64>) -> f64 {
    rho.iter().map(|z| z.norm_sqr()).sum()
}

/// `⟨α|ρ|α⟩/π` with `⟨n|α⟩ = e^{−|α|²/2} αⁿ/√n!`.
fn q_function(rho: &DMatrix<Complex64>, grid: &QGrid, lnf: &LnFactorial) -> Vec<f64> {
    let dim = rho.nrows();
    let pts: Vec<Complex64> = grid.points().collect();
    pts.par_iter()
        .map(|&alpha| {
            let r = alpha.norm();
            let ket: Vec<Complex64> = (0..dim)
                .map(|n| {
                    if r == 0.0 {
                        return if n == 0 {
                            Complex64::new(1.0, 0.0)
                        } else {
                            Complex64::new(0.0, 0.0)
                        };
                    }
                    let mag = (-0.5 * r * r + n as f64 * r.ln() - 0.5 * lnf.get(n)).exp();
                    Complex64::from_polar(mag, n as f64 * alpha.arg())
                })
                .collect();
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..dim {
                for b in 0..dim {
                    acc += ket[a].conj() * rho[(a, b)] * ket[b];
                }
            }
            acc.re / PI
        })
        .collect()
}

/// Two coherent peaks at `±α₀`: `(e^{−|α−α₀|²} + e^{−|α+α₀|²}) / 2π`.
pub fn two_peak_q(alpha: Complex64, alpha0: Complex64) -> f64 {
    ((-(alpha - alpha0).norm_sqr()).exp() + (-(alpha + alpha0).norm_sqr()).exp()) / (2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::reflected_intensity;
    use crate::geometry::Spacing;
    use crate::spectral::{configuration_frequency, spectrum};
    use proptest::prelude::*;

    fn geom(s: &str) -> LatticeGeometry {
        LatticeGeometry::new(2, s.parse().unwrap()).unwrap()
    }

    /// Binomial(n, p) by direct products.
    fn binomial(n: u32, p: f64) -> Vec<f64> {
        let mut c = 1.0f64;
        (0..=n)
            .map(|k| {
                if k > 0 {
                    c = c * (n - k + 1) as f64 / k as f64;
                }
                c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
            })
            .collect()
    }

    #[test]
    fn balanced_quarter_wavelength_stays_dark() {
        let amps = evolve_sector(9, 9, 6, &geom("1/4"), &[0.0, 0.3, 1.0, 2.7]).unwrap();
        for a in amps {
            assert!((a[0].norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn checkerboard_for_unit_difference() {
        let times = [0.0, PI / 4.0, PI / 2.0, PI, 3.0 * PI / 2.0];
        let ev = SectorEvolution::new(10, 9, 10, &geom("1/4")).unwrap();
        let full = ev.probabilities(PI / 2.0);
        assert!((full[10] - 1.0).abs() < 1e-10);
        let back = ev.probabilities(PI);
        assert!((back[0] - 1.0).abs() < 1e-10);
        for &t in &times {
            let p = ev.probabilities(t);
            let q = ev.probabilities(t + PI);
            for (a, b) in p.iter().zip(&q) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sector_matches_beam_splitter() {
        let g = geom("1/10");
        let omega = configuration_frequency(&[3, 4], &g).unwrap();
        let p = SectorEvolution::new(3, 4, 5, &g).unwrap().probabilities(0.1);
        let oracle = binomial(5, (omega * 0.1).sin().powi(2));
        for (a, b) in p.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_photons_is_trivial() {
        let a = evolve_sector(2, 3, 0, &geom("0.17"), &[1.0]).unwrap();
        assert_eq!(a[0].len(), 1);
        assert!((a[0][0].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn requires_two_wells() {
        let g3 = LatticeGeometry::new(3, Spacing::rational(1, 4).unwrap()).unwrap();
        assert!(matches!(SectorEvolution::new(1, 1, 1, &g3), Err(Error::Domain(_))));
        assert!(matches!(
            photon_statistics(
                &AtomicState::number_sf(4),
                &g3,
                PhotonInput::Fock { n_tot: 2 },
                &[0.0],
                Default::default()
            ),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn mott_balanced_quarter_wavelength_is_dark() {
        let ps = photon_statistics(
            &AtomicState::mott(vec![9, 9]),
            &geom("1/4"),
            PhotonInput::Fock { n_tot: 10 },
            &[0.0, 0.5, 1.3, 2.0],
            Default::default(),
        )
        .unwrap();
        for row in &ps.table {
            assert!((row[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn number_sf_concentrates_at_extremes_at_quarter_period() {
        let ps = photon_statistics(
            &AtomicState::number_sf(18),
            &geom("1/4"),
            PhotonInput::Fock { n_tot: 10 },
            &[PI / 4.0],
            Default::default(),
        )
        .unwrap();
        let row = &ps.table[0];
        let ends = row[0] + row[10];
        let middle: f64 = row[1..10].iter().sum();
        // differences ≡ 2 (mod 4) transfer fully, multiples of 4 not at all
        assert!(ends > 0.9, "{ends} vs {middle}");
    }

    #[test]
    fn rows_sum_to_one_and_match_intensity() {
        let times: Vec<f64> = (0..40).map(|i| i as f64 * 0.05).collect();
        let cases = [
            (AtomicState::number_sf(18), "1/4"),
            (AtomicState::number_sf(17), "1/10"),
            (
                AtomicState::coherent(vec![Complex64::new(2.0, 0.0), Complex64::new(1.0, 1.0)]),
                "1/2",
            ),
            (AtomicState::mott(vec![3, 4]), "0.21"),
        ];
        for (st, d) in cases {
            let g = geom(d);
            let ps = photon_statistics(&st, &g, PhotonInput::Fock { n_tot: 6 }, &times, Default::default()).unwrap();
            for row in &ps.table {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                assert!(row.iter().all(|&p| p >= -1e-15));
            }
            let sp = spectrum(&st, &g, Default::default(), None).unwrap();
            let i = reflected_intensity(&sp, &times).unwrap();
            for (a, b) in ps.normalized_intensity().iter().zip(&i.values) {
                assert!((a - b).abs() < 1e-9, "{d}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn coherent_input_intensity_matches_fock() {
        let times: Vec<f64> = (0..25).map(|i| i as f64 * 0.1).collect();
        let st = AtomicState::number_sf(9);
        let g = geom("1/10");
        let fock = photon_statistics(&st, &g, PhotonInput::Fock { n_tot: 4 }, &times, Default::default()).unwrap();
        let coh = photon_statistics(&st, &g, PhotonInput::Coherent { mean: 4.0 }, &times, Default::default()).unwrap();
        for (a, b) in fock.normalized_intensity().iter().zip(coh.normalized_intensity()) {
            assert!((a - b).abs() < 1e-9);
        }
        // photon-number fluctuations of the input broaden the reflected law
        let var = |row: &Vec<f64>| {
            let m: f64 = row.iter().enumerate().map(|(j, p)| j as f64 * p).sum();
            row.iter()
                .enumerate()
                .map(|(j, p)| (j as f64 - m).powi(2) * p)
                .sum::<f64>()
        };
        assert!(var(&coh.table[10]) > var(&fock.table[10]));
    }

    #[test]
    fn joint_state_is_normalized_and_conserves_photons() {
        let st = AtomicState::coherent(vec![Complex64::new(1.5, 0.5), Complex64::new(1.0, 0.0)]);
        for t in [0.0, 0.4, 1.7, 10.0] {
            let js = joint_state(&st, &geom("0.13"), 7, t, Default::default()).unwrap();
            assert!((js.norm_sqr() - 1.0).abs() < 1e-10);
            assert!(js.sectors.iter().all(|s| s.amplitudes.len() == 8));
        }
    }

    #[test]
    fn cat_state_at_quarter_period() {
        let st = AtomicState::coherent(vec![Complex64::new(3.0, 0.0); 2]);
        for n_tot in [10u32, 11] {
            let cat = cat_state_diagnostics(&st, &geom("1/4"), n_tot, None).unwrap();
            let alpha0 = Complex64::new(3.0, 0.0);
            let worst = cat
                .grid
                .points()
                .zip(&cat.q)
                .map(|(a, &q)| (q - two_peak_q(a, alpha0)).abs())
                .fold(0.0, f64::max);
            assert!(worst < 1e-3, "n_tot={n_tot}: {worst}");
            let [lit, dark] = &cat.photon_outcomes;
            assert!((lit.probability - 0.5).abs() < 1e-12);
            assert!((dark.probability - 0.5).abs() < 1e-12);
            assert!(cat.other_outcomes_mass < 1e-12);
            assert!((lit.parity[1] - 1.0).abs() < 1e-12);
            assert!((dark.parity[0] - 1.0).abs() < 1e-12);
            // each conditional state is a cat: well 0 alone is an even mixture
            assert!((lit.well0_purity - 0.5).abs() < 1e-6);
            assert!((cat.atomic_purity - 0.5).abs() < 1e-6);
            // fringes: every other number difference is missing
            assert!(dark
                .difference_distribution
                .iter()
                .all(|&(d, p)| d % 2 == 0 || p < 1e-12));
        }
    }

    #[test]
    fn vacuum_gives_single_peak() {
        let st = AtomicState::coherent(vec![Complex64::new(0.0, 0.0); 2]);
        let cat = cat_state_diagnostics(&st, &geom("1/4"), 4, None).unwrap();
        let origin = cat.grid.points().zip(&cat.q).find(|(a, _)| a.norm() < 1e-9).unwrap();
        assert!((origin.1 - 1.0 / PI).abs() < 1e-12);
        assert!((cat.photon_outcomes[1].probability - 1.0).abs() < 1e-12);
        assert!((cat.atomic_purity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cat_domain() {
        let st = AtomicState::coherent(vec![Complex64::new(1.0, 0.0); 2]);
        assert!(matches!(
            cat_state_diagnostics(&st, &geom("1/10"), 4, None),
            Err(Error::Domain(_))
        ));
        assert!(cat_state_diagnostics(&AtomicState::number_sf(4), &geom("1/4"), 4, None).is_err());
    }

    #[test]
    fn q_csv_layout() {
        let st = AtomicState::coherent(vec![Complex64::new(0.5, 0.0); 2]);
        let grid = QGrid::square(1.0, 0.5).unwrap();
        let cat = cat_state_diagnostics(&st, &geom("1/4"), 2, Some(grid)).unwrap();
        let mut buf = Vec::new();
        cat.write_q_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 25);
        assert!(text.starts_with("re,im,q\n-1.0000000000000000e0,-1.0000000000000000e0,"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn sectors_are_binomial(n0 in 0u32..=20, n1 in 0u32..=20, n_tot in 0u32..=20, x in 0.01f64..1.0, t in 0.0f64..5.0) {
            let g = LatticeGeometry::new(2, Spacing::real(x).unwrap()).unwrap();
            let ev = SectorEvolution::new(n0, n1, n_tot, &g).unwrap();
            let amps = ev.amplitudes(t);
            prop_assert_eq!(amps.len(), n_tot as usize + 1);
            let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
            prop_assert!((norm - 1.0).abs() < 1e-10);
            let oracle = binomial(n_tot, (ev.nu.norm() * t).sin().powi(2));
            for (a, b) in amps.iter().zip(&oracle) {
                prop_assert!((a.norm_sqr() - b).abs() < 1e-8);
            }
        }
    }
}
