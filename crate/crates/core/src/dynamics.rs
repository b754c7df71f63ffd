//! Reflected intensity in time, collapse/revival predictions and the
//! large-lattice closed form. Times are in units of `1/g`, frequencies in `g`.

use std::f64::consts::PI;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{LatticeGeometry, SpacingClass};
use crate::io::{fmt_f64, write_csv};
use crate::special::dawson;
use crate::spectral::Spectrum;
use crate::states::{AtomicState, StateKind};

/// Envelope level, relative to the initial amplitude 1/2, that marks the
/// collapse. A Gaussian spread σ of frequencies damps `cos 2ωt` as
/// `e^{−2σ²t²}`, which equals this level at `t = 1/2σ`.
pub const COLLAPSE_LEVEL: f64 = 0.606_530_659_712_633_4; // e^{-1/2}

/// Normalized reflected intensity `⟨n̂₋ₖ(t)⟩ / n_tot` on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_times(&times)?;
        if times.len() != values.len() {
            return Err(Error::Dimension(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        Ok(TimeSeries { times, values })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Columns `t,intensity`.
    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        write_csv(
            w,
            &["t", "intensity"],
            self.times
                .iter()
                .zip(&self.values)
                .map(|(&t, &v)| vec![fmt_f64(t), fmt_f64(v)]),
        )
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("times", "times must be finite"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("times", "times must be strictly increasing"));
    }
    Ok(())
}

/// `steps + 1` equally spaced times on `[0, t_max]`.
pub fn time_grid(t_max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::invalid("t_max", format!("{t_max} is not positive")));
    }
    if steps == 0 {
        return Err(Error::invalid("steps", "need at least one step"));
    }
    Ok((0..=steps).map(|i| t_max * i as f64 / steps as f64).collect())
}

/// `I(t)/n_tot = Σ P(ω) sin²(ωt) / Σ P(ω)`, i.e. `½ − ½ Σ P cos 2ωt` for unit mass.
pub fn reflected_intensity(spectrum: &Spectrum, times: &[f64]) -> Result<TimeSeries> {
    check_times(times)?;
    let mass: f64 = spectrum.lines.iter().map(|l| l.probability).sum();
    if mass.is_nan() || mass <= 0.0 {
        return Err(Error::invalid("spectrum", "spectrum carries no probability"));
    }
    let values = times
        .iter()
        .map(|&t| {
            spectrum
                .lines
                .iter()
                .map(|l| l.probability * (l.omega * t).sin().powi(2))
                .sum::<f64>()
                / mass
        })
        .collect();
    Ok(TimeSeries {
        times: times.to_vec(),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    TwoWell,
    Lattice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseRevivalPrediction {
    /// `1/T_collapse` in units of `g`; 0 means no collapse.
    pub collapse_rate: f64,
    pub collapse_time: Option<f64>,
    /// Present only for integer spectra.
    pub revival_time: Option<f64>,
    pub regime: Regime,
    pub state: StateKind,
    pub spacing_class: SpacingClass,
    pub note: Option<String>,
}

/// Collapse rate and revival time for the state and spacing, from the
/// table of `1/T_collapse` per spacing class, state and regime.
///
/// Two wells give the two-well column; more sites give the lattice column,
/// whose SF1 entries at `λ/4` and general `d` assume equal mean occupations.
pub fn predict_collapse_revival(state: &AtomicState, geometry: &LatticeGeometry) -> Result<CollapseRevivalPrediction> {
    state.validate(geometry)?;
    let m = geometry.num_sites();
    let regime = if m == 2 { Regime::TwoWell } else { Regime::Lattice };
    let class = geometry.class();
    let total = state.mean_total();
    let mut note = None;
    let rate = match (state, class, regime) {
        (AtomicState::Mott { .. }, _, _) => 0.0,
        (AtomicState::NumberSf { .. }, SpacingClass::HalfWavelength, _) => 0.0,

        (AtomicState::CoherentSf { .. }, SpacingClass::HalfWavelength, _) => 2.0 * total.sqrt(),
        (AtomicState::CoherentSf { .. }, SpacingClass::General, Regime::TwoWell) => 2.0 * total.sqrt(),
        (AtomicState::CoherentSf { .. }, SpacingClass::QuarterWavelength, Regime::TwoWell) => total.sqrt(),
        (AtomicState::CoherentSf { alphas }, _, Regime::Lattice) => {
            let first = alphas[0].norm_sqr();
            if alphas
                .iter()
                .any(|a| (a.norm_sqr() - first).abs() > 1e-12 * first.max(1.0))
            {
                return Err(Error::UnsupportedCombination(
                    "lattice collapse rates at this spacing assume equal mean occupations".into(),
                ));
            }
            match class {
                SpacingClass::QuarterWavelength => (1.0 - 2.0 / PI).sqrt() * total.sqrt(),
                _ => (1.0 - PI / 4.0).sqrt() * total / (m as f64).sqrt(),
            }
        }

        (AtomicState::NumberSf { atoms }, SpacingClass::QuarterWavelength, regime) => {
            note = Some(if atoms % 2 == 0 {
                "even atom number: intensity also returns to 0 at t = pi/2".to_string()
            } else {
                "odd atom number: intensity reaches 1 (anti-revival) at t = pi/2".to_string()
            });
            match regime {
                Regime::TwoWell => total.sqrt(),
                Regime::Lattice => (1.0 - 2.0 / PI).sqrt() * total.sqrt(),
            }
        }
        (AtomicState::NumberSf { .. }, SpacingClass::General, Regime::TwoWell) => {
            2.0 * (total / 2.0 * (1.0 - geometry.cos_phase())).sqrt()
        }
        (AtomicState::NumberSf { .. }, SpacingClass::General, Regime::Lattice) => {
            (1.0 - PI / 4.0).sqrt() * total / (m as f64).sqrt()
        }
    };
    let revival_time = match class {
        SpacingClass::HalfWavelength | SpacingClass::QuarterWavelength => Some(PI),
        SpacingClass::General => None,
    };
    Ok(CollapseRevivalPrediction {
        collapse_rate: rate,
        collapse_time: (rate > 0.0).then(|| 1.0 / rate),
        revival_time,
        regime,
        state: state.kind(),
        spacing_class: class,
        note,
    })
}

/// Large-lattice intensity `y·D(y)` with `y = ⟨N⟩|t|/√M` and `D` Dawson's
/// integral; equivalently `(√π/2)·y·e^{−y²}·erfi(y)`. Rises from 0 and
/// tends to 1/2.
pub fn closed_form_lattice_intensity(mean_n: f64, sites: usize, times: &[f64]) -> Result<TimeSeries> {
    if !(mean_n > 0.0 && mean_n.is_finite()) {
        return Err(Error::Domain(format!("mean_n must be positive, got {mean_n}")));
    }
    if sites == 0 {
        return Err(Error::Domain("need at least one site".into()));
    }
    check_times(times)?;
    let scale = mean_n / (sites as f64).sqrt();
    let values = times
        .iter()
        .map(|&t| {
            let y = scale * t.abs();
            y * dawson(y)
        })
        .collect();
    Ok(TimeSeries {
        times: times.to_vec(),
        values,
    })
}

/// Earliest time at which the envelope of `|I(t) − ½|` falls to
/// [`COLLAPSE_LEVEL`]`·½`.
///
/// Envelope peaks are local maxima that dominate a window of one extremum
/// spacing `π/(2ω̄)`; the envelope is log-linear between peaks. Returns `None`
/// if the envelope never drops that far on the grid.
pub fn measure_collapse_time(series: &TimeSeries, mean_frequency: f64) -> Option<f64> {
    if series.len() < 3 || mean_frequency.is_nan() || mean_frequency <= 0.0 {
        return None;
    }
    let t = &series.times;
    let a: Vec<f64> = series.values.iter().map(|v| (v - 0.5).abs()).collect();
    let half_window = PI / (4.0 * mean_frequency);
    let mut peaks: Vec<(f64, f64)> = vec![(t[0], a[0])];
    let mut lo = 0usize;
    let mut hi = 0usize;
    for i in 1..a.len() - 1 {
        if !(a[i] >= a[i - 1] && a[i] >= a[i + 1]) {
            continue;
        }
        while t[i] - t[lo] > half_window {
            lo += 1;
        }
        hi = hi.max(i);
        while hi + 1 < a.len() && t[hi + 1] - t[i] <= half_window {
            hi += 1;
        }
        if a[lo..=hi].iter().all(|&x| x <= a[i]) && peaks.last().is_none_or(|p| p.0 < t[i]) {
            peaks.push((t[i], a[i]));
        }
    }
    let threshold = COLLAPSE_LEVEL * 0.5;
    for w in peaks.windows(2) {
        let ((t0, a0), (t1, a1)) = (w[0], w[1]);
        if a0 >= threshold && a1 < threshold {
            if a1 <= 0.0 {
                return Some(t1);
            }
            let frac = (a0 / threshold).ln() / (a0 / a1).ln();
            return Some(t0 + (t1 - t0) * frac);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Spacing;
    use crate::lattice_stats::rayleigh_walk_law;
    use crate::spectral::{sampled_spectrum, spectrum, SpectralLine};
    use crate::states::EnumerationOptions;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn geom(m: usize, s: &str) -> LatticeGeometry {
        LatticeGeometry::new(m, s.parse().unwrap()).unwrap()
    }

    fn single(omega: f64) -> Spectrum {
        Spectrum::from_pairs([(omega, 1.0)], None)
    }

    #[test]
    fn single_line_is_sine_squared() {
        let times = time_grid(3.0, 300).unwrap();
        let s = reflected_intensity(&single(18.0), &times).unwrap();
        assert_eq!(s.values[0], 0.0);
        for (t, v) in s.times.iter().zip(&s.values) {
            assert!((v - (18.0 * t).sin().powi(2)).abs() < 1e-15);
        }
        let zero = reflected_intensity(&single(0.0), &times).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn number_sf_quarter_wavelength_half_revival() {
        let s = spectrum(&AtomicState::number_sf(18), &geom(2, "1/4"), Default::default(), None).unwrap();
        let i = reflected_intensity(&s, &[0.1, PI / 2.0]).unwrap();
        assert!(i.values[0] > 0.1);
        assert!(i.values[1].abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_time_grids() {
        assert!(reflected_intensity(&single(1.0), &[0.0, 0.0]).is_err());
        assert!(reflected_intensity(&single(1.0), &[1.0, 0.5]).is_err());
        assert!(time_grid(0.0, 10).is_err());
        assert!(time_grid(1.0, 0).is_err());
        assert!(TimeSeries::new(vec![0.0, 1.0], vec![0.0]).is_err());
    }

    #[test]
    fn predictions_from_table() {
        let sf1 = AtomicState::coherent(vec![Complex64::new(3.0, 0.0); 2]);
        let p = predict_collapse_revival(&sf1, &geom(2, "1/2")).unwrap();
        assert!((p.collapse_rate - 2.0 * 18f64.sqrt()).abs() < 1e-12);
        assert!((p.collapse_rate - 8.485).abs() < 1e-3);
        assert_eq!(p.revival_time, Some(PI));
        assert_eq!(p.regime, Regime::TwoWell);

        for d in ["1/2", "1/4", "1/10", "0.3"] {
            for m in [2usize, 6] {
                let p = predict_collapse_revival(&AtomicState::mott(vec![3; m]), &geom(m, d)).unwrap();
                assert_eq!(p.collapse_rate, 0.0);
                assert_eq!(p.collapse_time, None);
            }
        }

        let p = predict_collapse_revival(&AtomicState::number_sf(100), &geom(100, "1/10")).unwrap();
        assert!((p.collapse_rate - 10.0 * (1.0 - PI / 4.0).sqrt()).abs() < 1e-12);
        assert!((p.collapse_rate - 4.633).abs() < 1e-3);
        assert_eq!(p.revival_time, None);
        assert_eq!(p.regime, Regime::Lattice);

        let p = predict_collapse_revival(&AtomicState::number_sf(18), &geom(2, "1/4")).unwrap();
        assert!((p.collapse_rate - 18f64.sqrt()).abs() < 1e-12);
        assert!(p.note.unwrap().contains("even"));
        let p = predict_collapse_revival(&AtomicState::number_sf(17), &geom(10, "1/4")).unwrap();
        assert!((p.collapse_rate - (1.0 - 2.0 / PI).sqrt() * 17f64.sqrt()).abs() < 1e-12);
        assert!(p.note.unwrap().contains("odd"));

        let p = predict_collapse_revival(&AtomicState::number_sf(18), &geom(2, "1/10")).unwrap();
        assert!((p.collapse_rate - 2.0 * (9.0 * (1.0 - (2.0 * PI / 5.0).cos())).sqrt()).abs() < 1e-12);

        let uneven = AtomicState::coherent(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(1.0, 0.0),
        ]);
        assert!(matches!(
            predict_collapse_revival(&uneven, &geom(3, "1/4")),
            Err(Error::UnsupportedCombination(_))
        ));
        assert!(predict_collapse_revival(&uneven, &geom(3, "1/2")).is_ok());
    }

    #[test]
    fn closed_form_limits() {
        let s = closed_form_lattice_intensity(10.0, 10, &[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(s.values[1], 0.0);
        assert_eq!(s.values[0], s.values[2]);
        // y = ⟨N⟩t/√M = 20
        let t = 20.0 * 10f64.sqrt() / 10.0;
        let s = closed_form_lattice_intensity(10.0, 10, &[t]).unwrap();
        assert!((s.values[0] - 0.5).abs() < 1e-3);
        assert!(closed_form_lattice_intensity(0.0, 10, &[1.0]).is_err());
    }

    #[test]
    fn closed_form_matches_rayleigh_quadrature() {
        // ∫ P(ω) sin²(ωt) dω by composite Simpson over [0, 30] (P ~ e^{-90} there).
        let law = rayleigh_walk_law(10.0).unwrap();
        let times = time_grid(3.0, 60).unwrap();
        let s = closed_form_lattice_intensity(10.0, 10, &times).unwrap();
        let n = 60_000;
        let h = 30.0 / n as f64;
        for (&t, &v) in s.times.iter().zip(&s.values) {
            let f = |w: f64| law.pdf(w) * (w * t).sin().powi(2);
            let mut acc = f(0.0) + f(30.0);
            for i in 1..n {
                acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            let oracle = acc * h / 3.0;
            assert!((oracle - v).abs() < 1e-6, "t={t}: {oracle} vs {v}");
        }
    }

    #[test]
    fn closed_form_tracks_sampled_transient() {
        let st = AtomicState::coherent_uniform(10.0, 10);
        let g = geom(10, "1/10");
        let sp = sampled_spectrum(&st, &g, 100_000, 11, None).unwrap();
        let times = time_grid(5.0, 500).unwrap();
        let exact = reflected_intensity(&sp, &times).unwrap();
        let closed = closed_form_lattice_intensity(10.0, 10, &times).unwrap();
        for (a, b) in exact.values.iter().zip(&closed.values) {
            assert!((a - b).abs() < 0.05);
        }
    }

    #[test]
    fn measured_collapse_matches_prediction() {
        for n in [18.0, 50.0, 100.0] {
            let a = (n / 2.0f64).sqrt();
            let st = AtomicState::coherent(vec![Complex64::new(a, 0.0); 2]);
            let g = geom(2, "1/2");
            let sp = spectrum(&st, &g, EnumerationOptions::with_epsilon(1e-12), None).unwrap();
            let pred = predict_collapse_revival(&st, &g).unwrap();
            let t_c = pred.collapse_time.unwrap();
            let dt = PI / (2.0 * sp.mean()) / 50.0;
            let steps = (4.0 * t_c / dt).ceil() as usize;
            let series = reflected_intensity(&sp, &time_grid(4.0 * t_c, steps).unwrap()).unwrap();
            let measured = measure_collapse_time(&series, sp.mean()).unwrap();
            assert!((measured / t_c - 1.0).abs() < 0.25, "N={n}: {measured} vs {t_c}");
        }
    }

    #[test]
    fn no_collapse_for_single_line() {
        let series = reflected_intensity(&single(5.0), &time_grid(10.0, 5000).unwrap()).unwrap();
        assert_eq!(measure_collapse_time(&series, 5.0), None);
    }

    #[test]
    fn csv_columns() {
        let s = TimeSeries::new(vec![0.0, 1.0], vec![0.0, 0.25]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("t,intensity\n0.0000000000000000e0,"));
    }

    proptest! {
        #[test]
        fn intensity_in_unit_interval(
            lines in prop::collection::vec((0.0f64..50.0, 0.001f64..1.0), 1..12),
            t in 0.0f64..100.0,
        ) {
            let mass: f64 = lines.iter().map(|l| l.1).sum();
            let s = Spectrum::from_pairs(lines.iter().map(|&(w, p)| (w, p / mass)), None);
            let v = reflected_intensity(&s, &[t]).unwrap().values[0];
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn integer_spectra_revive_at_pi(
            lines in prop::collection::vec((0u32..60, 0.001f64..1.0), 1..12),
            t in 0.0f64..10.0,
        ) {
            let s = Spectrum {
                lines: lines.iter().map(|&(w, p)| SpectralLine { omega: w as f64, probability: p }).collect(),
                binning: None,
                mass: lines.iter().map(|l| l.1).sum(),
            };
            let v = reflected_intensity(&s, &[t, t + PI]).unwrap().values;
            prop_assert!((v[0] - v[1]).abs() < 1e-12);
        }

        #[test]
        fn quarter_wavelength_spectra_are_pi_periodic(a in 0.5f64..3.0, b in 0.5f64..3.0, t in 0.0f64..5.0) {
            let st = AtomicState::coherent(vec![Complex64::new(a, 0.0), Complex64::new(0.0, b)]);
            let g = LatticeGeometry::new(2, Spacing::rational(1, 4).unwrap()).unwrap();
            let s = spectrum(&st, &g, Default::default(), None).unwrap();
            let v = reflected_intensity(&s, &[t, t + PI]).unwrap().values;
            prop_assert!((v[0] - v[1]).abs() < 1e-12);
        }
    }
}
