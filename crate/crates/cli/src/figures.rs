//! Preset scenarios that regenerate the data behind each figure.

use std::f64::consts::PI;

use cavity_bragg::states::{DEFAULT_BUDGET, DEFAULT_EPSILON};
use cavity_bragg::twowell::PhotonInput;
use cavity_bragg::{AtomicState, Spacing};

use crate::{Law, Method, Mode, RunError, RunResult, Scenario, SweepSpec, TimeSpec};

pub const FIGURES: [u32; 11] = [2, 3, 5, 6, 7, 8, 9, 10, 11, 12, 13];

fn base(mode: Mode, state: AtomicState, sites: usize, spacing: &str) -> Scenario {
    Scenario {
        mode,
        state,
        sites,
        spacing: spacing.parse().expect("preset spacing"),
        photons: None,
        time: None,
        method: match mode {
            Mode::Collapse | Mode::Laws => Method::Analytic,
            _ => Method::Exact,
        },
        epsilon: DEFAULT_EPSILON,
        budget: DEFAULT_BUDGET,
        bin_width: None,
        law: None,
        sweep: None,
        grid: None,
    }
}

fn sf1_two_wells(per_well: f64) -> AtomicState {
    AtomicState::coherent_uniform(2.0 * per_well, 2)
}

fn intensity(state: AtomicState, spacing: &str, t_max: f64) -> Scenario {
    Scenario {
        time: Some(TimeSpec { t_max, steps: 4000 }),
        ..base(Mode::Intensity, state, 2, spacing)
    }
}

fn photon_stats(state: AtomicState, t_max: f64, steps: usize) -> Scenario {
    Scenario {
        photons: Some(PhotonInput::Fock { n_tot: 10 }),
        time: Some(TimeSpec { t_max, steps }),
        ..base(Mode::PhotonStats, state, 2, "1/4")
    }
}

fn sweep(state: AtomicState) -> Scenario {
    Scenario {
        sweep: Some(SweepSpec {
            d_min: 0.0025,
            d_max: 0.5,
            d_steps: 199,
        }),
        ..base(Mode::Sweep, state, 2, "1/2")
    }
}

fn law(law: Law, state: AtomicState, sites: usize, spacing: &str) -> Scenario {
    Scenario {
        law: Some(law),
        ..base(Mode::Laws, state, sites, spacing)
    }
}

/// Named scenarios for figure `n`; output stems are `fig<n>_<panel>`.
pub fn scenarios(n: u32) -> RunResult<Vec<(String, Scenario)>> {
    let named = |panels: Vec<(&str, Scenario)>| {
        panels
            .into_iter()
            .map(|(p, s)| (format!("fig{n}_{p}"), s))
            .collect::<Vec<_>>()
    };
    Ok(match n {
        2 => named(vec![
            ("a_mott", intensity(AtomicState::mott(vec![9, 9]), "1/2", 4.0)),
            ("b_sf1", intensity(sf1_two_wells(9.0), "1/2", 4.0)),
            ("c_sf2", intensity(AtomicState::number_sf(18), "1/2", 4.0)),
        ]),
        3 => named(vec![
            ("a_mott", intensity(AtomicState::mott(vec![9, 9]), "1/4", 4.0)),
            ("b_sf1", intensity(sf1_two_wells(9.0), "1/4", 4.0)),
            ("c_sf2_n18", intensity(AtomicState::number_sf(18), "1/4", 4.0)),
            ("c_sf2_n17", intensity(AtomicState::number_sf(17), "1/4", 4.0)),
        ]),
        5 => named(vec![("sf1", intensity(sf1_two_wells(9.0), "1/10", 10.0))]),
        6 => named(vec![("sf1", sweep(sf1_two_wells(9.0)))]),
        7 => named(vec![("sf2", sweep(AtomicState::number_sf(18)))]),
        8 => named(vec![(
            "mott",
            photon_stats(AtomicState::mott(vec![10, 9]), 2.0 * PI, 400),
        )]),
        9 => named(vec![("sf2", photon_stats(AtomicState::number_sf(18), 2.0 * PI, 400))]),
        10 => named(vec![("sf1", photon_stats(sf1_two_wells(9.0), PI / 2.0, 2))]),
        11 => named(vec![
            (
                "exact",
                Scenario {
                    budget: 20_000_000,
                    ..base(Mode::Spectrum, AtomicState::number_sf(20), 10, "1/4")
                },
            ),
            ("law", law(Law::EvenOdd, AtomicState::number_sf(20), 10, "1/4")),
        ]),
        12 => named(vec![
            (
                "sampled",
                Scenario {
                    method: Method::Sampled {
                        count: 100_000,
                        seed: 1,
                    },
                    bin_width: Some(0.25),
                    ..base(Mode::Spectrum, AtomicState::coherent_uniform(10.0, 10), 10, "1/10")
                },
            ),
            (
                "law",
                law(Law::Rayleigh, AtomicState::coherent_uniform(10.0, 10), 10, "1/10"),
            ),
        ]),
        13 => {
            let mut inset = Scenario {
                bin_width: Some(0.25),
                ..base(Mode::Spectrum, AtomicState::number_sf(18), 10, "1/10")
            };
            inset.spacing = Spacing::real(2f64.sqrt() / 10.0)?;
            named(vec![
                (
                    "exact",
                    Scenario {
                        bin_width: Some(0.25),
                        ..base(Mode::Spectrum, AtomicState::number_sf(18), 10, "1/10")
                    },
                ),
                ("inset", inset),
                ("law", law(Law::Rayleigh, AtomicState::number_sf(18), 10, "1/10")),
            ])
        }
        other => {
            return Err(RunError::invalid(
                "figure",
                format!("no preset for figure {other}; available: {FIGURES:?}"),
            ))
        }
    })
}
