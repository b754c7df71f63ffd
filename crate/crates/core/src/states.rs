//! Atomic states and their occupation-number statistics.
//!
//! Three families are supported: Mott insulators (a single Fock
//! configuration), per-well coherent states (product of Poisson laws) and the
//! number-conserving superfluid (multinomial law over `M` sites). Exact
//! enumeration is offered up to a configuration budget; beyond it the
//! samplers are the supported path.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::LatticeGeometry;
use crate::rng::chunked_draws;
use crate::special::{ln_poisson_pmf, LnFactorial};

pub const DEFAULT_BUDGET: u64 = 10_000_000;
pub const DEFAULT_EPSILON: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AtomicState {
    /// Fock product state `|n₀, …, n_{M-1}⟩`.
    Mott { occupations: Vec<u32> },
    /// Per-well coherent states `|α₀, …, α_{M-1}⟩` (mean-field superfluid).
    CoherentSf { alphas: Vec<Complex64> },
    /// `(Σ c_m†)^N |0⟩ / √(N! M^N)`.
    NumberSf { atoms: u32 },
}

/// Short tag used in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Mott,
    CoherentSf,
    NumberSf,
}

impl AtomicState {
    pub fn mott(occupations: impl Into<Vec<u32>>) -> Self {
        AtomicState::Mott {
            occupations: occupations.into(),
        }
    }

    pub fn coherent(alphas: impl Into<Vec<Complex64>>) -> Self {
        AtomicState::CoherentSf { alphas: alphas.into() }
    }

    /// Equal real amplitudes with `Σ|α_m|² = mean_total` over `sites` wells.
    pub fn coherent_uniform(mean_total: f64, sites: usize) -> Self {
        let a = (mean_total / sites as f64).sqrt();
        AtomicState::coherent(vec![Complex64::new(a, 0.0); sites])
    }

    pub fn number_sf(atoms: u32) -> Self {
        AtomicState::NumberSf { atoms }
    }

    pub fn kind(&self) -> StateKind {
        match self {
            AtomicState::Mott { .. } => StateKind::Mott,
            AtomicState::CoherentSf { .. } => StateKind::CoherentSf,
            AtomicState::NumberSf { .. } => StateKind::NumberSf,
        }
    }

    pub fn validate(&self, geometry: &LatticeGeometry) -> Result<()> {
        let m = geometry.num_sites();
        match self {
            AtomicState::Mott { occupations } => {
                if occupations.len() != m {
                    return Err(Error::invalid(
                        "occupations",
                        format!("{} occupations for {m} sites", occupations.len()),
                    ));
                }
                if occupations.iter().all(|&n| n == 0) {
                    return Err(Error::invalid("occupations", "Mott state holds no atoms"));
                }
            }
            AtomicState::CoherentSf { alphas } => {
                if alphas.len() != m {
                    return Err(Error::invalid(
                        "alphas",
                        format!("{} amplitudes for {m} sites", alphas.len()),
                    ));
                }
                if alphas.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
                    return Err(Error::invalid("alphas", "amplitudes must be finite"));
                }
            }
            AtomicState::NumberSf { atoms } => {
                if *atoms == 0 {
                    return Err(Error::invalid("atoms", "need at least one atom"));
                }
            }
        }
        Ok(())
    }

    /// `⟨n̂_m⟩` per site.
    pub fn mean_occupations(&self, geometry: &LatticeGeometry) -> Vec<f64> {
        let m = geometry.num_sites();
        match self {
            AtomicState::Mott { occupations } => occupations.iter().map(|&n| n as f64).collect(),
            AtomicState::CoherentSf { alphas } => alphas.iter().map(|a| a.norm_sqr()).collect(),
            AtomicState::NumberSf { atoms } => vec![*atoms as f64 / m as f64; m],
        }
    }

    pub fn mean_total(&self) -> f64 {
        match self {
            AtomicState::Mott { occupations } => occupations.iter().map(|&n| n as f64).sum(),
            AtomicState::CoherentSf { alphas } => alphas.iter().map(|a| a.norm_sqr()).sum(),
            AtomicState::NumberSf { atoms } => *atoms as f64,
        }
    }
}

/// One occupation tuple and its probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub occupations: Vec<u32>,
    pub probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnumerationOptions {
    /// Upper bound on the probability mass left out by truncation.
    pub epsilon: f64,
    /// Maximum number of configurations exact enumeration may visit.
    pub budget: u64,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions {
            epsilon: DEFAULT_EPSILON,
            budget: DEFAULT_BUDGET,
        }
    }
}

impl EnumerationOptions {
    pub fn with_epsilon(epsilon: f64) -> Self {
        EnumerationOptions {
            epsilon,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid("epsilon", format!("{} is outside (0, 1)", self.epsilon)));
        }
        Ok(())
    }
}

/// Smallest `n_max` such that `P(n > n_max) < tail` for a Poisson law.
pub fn poisson_cutoff(mean: f64, tail: f64) -> usize {
    if mean == 0.0 {
        return 0;
    }
    let far = (mean + 40.0 * mean.sqrt() + 40.0).ceil() as usize;
    let lnf = LnFactorial::new(far);
    let pmf: Vec<f64> = (0..=far).map(|n| ln_poisson_pmf(n, mean, &lnf).exp()).collect();
    // walk down from the far tail; `above` holds P(N > n) on entry
    let mut above = 0.0;
    let mut cutoff = far;
    for n in (0..=far).rev() {
        if above >= tail {
            break;
        }
        cutoff = n;
        above += pmf[n];
    }
    cutoff
}

/// Number of weak compositions of `n` into `m` parts, saturating.
pub fn composition_count(n: u64, m: u64) -> u128 {
    // C(n + m - 1, m - 1)
    let k = m - 1;
    let mut c: u128 = 1;
    for i in 1..=k as u128 {
        c = match c.checked_mul(n as u128 + i) {
            Some(v) => v / i,
            None => return u128::MAX,
        };
    }
    c
}

enum Walker {
    /// Weak compositions of `N` in reverse-lexicographic order.
    Compositions {
        current: Vec<u32>,
        done: bool,
        ln_norm: f64,
        lnf: LnFactorial,
    },
    /// Odometer over `0..=cutoff` per well; empty `cutoffs` means one point.
    Product {
        current: Vec<u32>,
        cutoffs: Vec<u32>,
        ln_pmf: Vec<Vec<f64>>,
        done: bool,
    },
}

/// Exact configuration stream. Iterates as owned [`Configuration`]s, or
/// without allocation through [`ConfigurationStream::for_each_ref`].
pub struct ConfigurationStream {
    walker: Walker,
    count: u128,
    truncation_bound: f64,
}

impl ConfigurationStream {
    /// Number of configurations this stream yields.
    pub fn len(&self) -> u128 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Upper bound on the probability mass not covered.
    pub fn truncation_bound(&self) -> f64 {
        self.truncation_bound
    }

    // Returns the current item and marks it consumed; `advance` moves on.
    fn step(&mut self) -> Option<(&[u32], f64)> {
        match &mut self.walker {
            Walker::Compositions {
                current,
                done,
                ln_norm,
                lnf,
            } => {
                if *done {
                    return None;
                }
                let lp = *ln_norm - current.iter().map(|&n| lnf.get(n as usize)).sum::<f64>();
                *done = true;
                Some((current.as_slice(), lp.exp()))
            }
            Walker::Product {
                current, ln_pmf, done, ..
            } => {
                if *done {
                    return None;
                }
                let lp: f64 = current.iter().zip(ln_pmf.iter()).map(|(&n, t)| t[n as usize]).sum();
                *done = true;
                Some((current.as_slice(), lp.exp()))
            }
        }
    }

    fn advance(&mut self) {
        match &mut self.walker {
            Walker::Compositions { current, done, .. } => {
                let m = current.len();
                let tail = current[m - 1];
                current[m - 1] = 0;
                match (0..m - 1).rev().find(|&i| current[i] > 0) {
                    Some(i) => {
                        current[i] -= 1;
                        current[i + 1] = tail + 1;
                        *done = false;
                    }
                    None => *done = true,
                }
            }
            Walker::Product {
                current, cutoffs, done, ..
            } => {
                let mut i = cutoffs.len();
                loop {
                    if i == 0 {
                        *done = true;
                        return;
                    }
                    i -= 1;
                    if current[i] < cutoffs[i] {
                        current[i] += 1;
                        *done = false;
                        return;
                    }
                    current[i] = 0;
                }
            }
        }
    }

    /// Visits every configuration without allocating per item.
    pub fn for_each_ref(mut self, mut f: impl FnMut(&[u32], f64)) {
        while let Some((occ, p)) = self.step() {
            f(occ, p);
            self.advance();
        }
    }
}

impl Iterator for ConfigurationStream {
    type Item = Configuration;

    fn next(&mut self) -> Option<Configuration> {
        let item = self.step().map(|(occ, p)| Configuration {
            occupations: occ.to_vec(),
            probability: p,
        });
        if item.is_some() {
            self.advance();
        }
        item
    }
}

/// Exact enumeration of the configuration law of `state`.
///
/// Coherent states are truncated per well at the smallest `n_max` whose
/// Poisson tail is below `ε/M`, which bounds the total truncated mass by `ε`.
pub fn enumerate_configurations(
    state: &AtomicState,
    geometry: &LatticeGeometry,
    options: EnumerationOptions,
) -> Result<ConfigurationStream> {
    state.validate(geometry)?;
    options.validate()?;
    let m = geometry.num_sites();
    let (walker, count, bound) = match state {
        AtomicState::Mott { occupations } => (
            Walker::Product {
                current: occupations.clone(),
                cutoffs: Vec::new(),
                ln_pmf: Vec::new(),
                done: false,
            },
            1,
            0.0,
        ),
        AtomicState::NumberSf { atoms } => {
            let n = *atoms as usize;
            let count = composition_count(n as u64, m as u64);
            check_budget(count, options.budget)?;
            let lnf = LnFactorial::new(n);
            let ln_norm = lnf.get(n) - n as f64 * (m as f64).ln();
            let mut current = vec![0u32; m];
            current[0] = *atoms;
            (
                Walker::Compositions {
                    current,
                    done: false,
                    ln_norm,
                    lnf,
                },
                count,
                0.0,
            )
        }
        AtomicState::CoherentSf { alphas } => {
            let tail = options.epsilon / m as f64;
            let means: Vec<f64> = alphas.iter().map(|a| a.norm_sqr()).collect();
            let cutoffs: Vec<u32> = means.iter().map(|&mu| poisson_cutoff(mu, tail) as u32).collect();
            let count = cutoffs
                .iter()
                .try_fold(1u128, |acc, &c| acc.checked_mul(c as u128 + 1))
                .unwrap_or(u128::MAX);
            check_budget(count, options.budget)?;
            let top = cutoffs.iter().copied().max().unwrap_or(0) as usize;
            let lnf = LnFactorial::new(top);
            let ln_pmf = means
                .iter()
                .zip(&cutoffs)
                .map(|(&mu, &c)| (0..=c as usize).map(|n| ln_poisson_pmf(n, mu, &lnf)).collect())
                .collect();
            let bound = means
                .iter()
                .zip(&cutoffs)
                .map(|(&mu, &c)| poisson_upper_tail(mu, c as usize))
                .sum::<f64>();
            let cutoffs = if cutoffs.iter().all(|&c| c == 0) {
                Vec::new()
            } else {
                cutoffs
            };
            (
                Walker::Product {
                    current: vec![0; m],
                    cutoffs,
                    ln_pmf,
                    done: false,
                },
                count,
                bound,
            )
        }
    };
    Ok(ConfigurationStream {
        walker,
        count,
        truncation_bound: bound,
    })
}

fn check_budget(count: u128, budget: u64) -> Result<()> {
    if count > budget as u128 {
        return Err(Error::BudgetExceeded {
            required: count,
            budget,
        });
    }
    Ok(())
}

/// `P(N > n)` for a Poisson law, summed directly.
fn poisson_upper_tail(mean: f64, n: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let far = (mean + 40.0 * mean.sqrt() + 40.0).ceil() as usize;
    if n >= far {
        return 0.0;
    }
    let lnf = LnFactorial::new(far);
    (n + 1..=far).rev().map(|k| ln_poisson_pmf(k, mean, &lnf).exp()).sum()
}

/// Draws `count` i.i.d. occupation tuples from the exact configuration law.
pub fn sample_occupations(
    state: &AtomicState,
    geometry: &LatticeGeometry,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<u32>>> {
    state.validate(geometry)?;
    if count == 0 {
        return Err(Error::invalid("count", "need at least one sample"));
    }
    let m = geometry.num_sites();
    let out = match state {
        AtomicState::Mott { occupations } => vec![occupations.clone(); count],
        AtomicState::CoherentSf { alphas } => {
            let laws: Vec<Option<Poisson<f64>>> = alphas
                .iter()
                .map(|a| {
                    let mu = a.norm_sqr();
                    (mu > 0.0).then(|| Poisson::new(mu).expect("positive finite mean"))
                })
                .collect();
            chunked_draws(count, seed, |rng| {
                laws.iter()
                    .map(|law| law.as_ref().map_or(0, |d| d.sample(rng) as u32))
                    .collect()
            })
        }
        AtomicState::NumberSf { atoms } => {
            let atoms = *atoms;
            chunked_draws(count, seed, |rng| sample_multinomial_uniform(rng, atoms, m))
        }
    };
    Ok(out)
}

fn sample_multinomial_uniform<R: Rng>(rng: &mut R, atoms: u32, sites: usize) -> Vec<u32> {
    let mut occ = Vec::with_capacity(sites);
    let mut left = atoms as u64;
    for m in 0..sites - 1 {
        let x = if left == 0 {
            0
        } else {
            Binomial::new(left, 1.0 / (sites - m) as f64)
                .expect("valid binomial")
                .sample(rng)
        };
        occ.push(x as u32);
        left -= x;
    }
    occ.push(left as u32);
    occ
}

/// Samples with their exact probabilities attached.
pub fn sample_configurations(
    state: &AtomicState,
    geometry: &LatticeGeometry,
    count: usize,
    seed: u64,
) -> Result<Vec<Configuration>> {
    let samples = sample_occupations(state, geometry, count, seed)?;
    let top = samples
        .iter()
        .flat_map(|s| s.iter().copied())
        .max()
        .unwrap_or(0)
        .max(match state {
            AtomicState::NumberSf { atoms } => *atoms,
            _ => 0,
        });
    let lnf = LnFactorial::new(top as usize);
    Ok(samples
        .into_iter()
        .map(|occ| {
            let p = configuration_probability(state, &occ, &lnf);
            Configuration {
                occupations: occ,
                probability: p,
            }
        })
        .collect())
}

/// Exact probability of one occupation tuple (the tuple must match the lattice size).
pub fn configuration_probability(state: &AtomicState, occ: &[u32], lnf: &LnFactorial) -> f64 {
    match state {
        AtomicState::Mott { occupations } => {
            if occupations.as_slice() == occ {
                1.0
            } else {
                0.0
            }
        }
        AtomicState::CoherentSf { alphas } => alphas
            .iter()
            .zip(occ)
            .map(|(a, &n)| ln_poisson_pmf(n as usize, a.norm_sqr(), lnf))
            .sum::<f64>()
            .exp(),
        AtomicState::NumberSf { atoms } => {
            if occ.iter().map(|&n| n as u64).sum::<u64>() != *atoms as u64 {
                return 0.0;
            }
            let n = *atoms as usize;
            let m = occ.len() as f64;
            (lnf.get(n) - occ.iter().map(|&k| lnf.get(k as usize)).sum::<f64>() - n as f64 * m.ln()).exp()
        }
    }
}

/// Law of the total atom number `Σ n_m`.
///
/// Exact point masses for Mott and number-conserving states; for coherent
/// states the Poisson law of mean `Σ|α_m|²`, listed until its upper tail
/// drops below 1e-16.
pub fn total_number_distribution(state: &AtomicState) -> BTreeMap<u64, f64> {
    let mut out = BTreeMap::new();
    match state {
        AtomicState::Mott { occupations } => {
            out.insert(occupations.iter().map(|&n| n as u64).sum(), 1.0);
        }
        AtomicState::NumberSf { atoms } => {
            out.insert(*atoms as u64, 1.0);
        }
        AtomicState::CoherentSf { .. } => {
            let mean = state.mean_total();
            let top = poisson_cutoff(mean, 1e-16);
            let lnf = LnFactorial::new(top);
            for n in 0..=top {
                let p = ln_poisson_pmf(n, mean, &lnf).exp();
                if p > 0.0 {
                    out.insert(n as u64, p);
                }
            }
        }
    }
    out
}
