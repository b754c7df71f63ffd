//! Scenario description, execution and run manifests for the `cavity-bragg`
//! command-line tool.

use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use cavity_bragg::dynamics::{closed_form_lattice_intensity, predict_collapse_revival, reflected_intensity, time_grid};
use cavity_bragg::io::{fmt_f64, to_json};
use cavity_bragg::lattice_stats::{
    even_odd_difference_law, even_site_number_law, gaussian_total_law, p_class_law, rayleigh_walk_law, PClassMethod,
};
use cavity_bragg::spectral::{sampled_spectrum, spectrum, Binning, Spectrum};
use cavity_bragg::twowell::{cat_state_diagnostics, photon_statistics, PhotonInput, QGrid};
use cavity_bragg::{AtomicState, EnumerationOptions, LatticeGeometry, Spacing, StateKind};
use serde::{Deserialize, Serialize};

pub mod figures;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Spectrum,
    Intensity,
    PhotonStats,
    Collapse,
    Laws,
    Sweep,
    Cat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    Exact,
    Sampled { count: usize, seed: u64 },
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    GaussianTotal,
    EvenOdd,
    EvenSite,
    PClass,
    Rayleigh,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSpec {
    pub t_max: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub d_min: f64,
    pub d_max: f64,
    pub d_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub spacing: f64,
}

/// Fully resolved run description; the manifest stores it verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub mode: Mode,
    pub state: AtomicState,
    pub sites: usize,
    pub spacing: Spacing,
    pub photons: Option<PhotonInput>,
    pub time: Option<TimeSpec>,
    pub method: Method,
    pub epsilon: f64,
    pub budget: u64,
    pub bin_width: Option<f64>,
    pub law: Option<Law>,
    pub sweep: Option<SweepSpec>,
    pub grid: Option<GridSpec>,
}

/// Why a run failed, mapped to the process exit code.
#[derive(Debug)]
pub enum RunError {
    /// Exit code 2.
    Invalid { field: String, reason: String },
    /// Exit code 3.
    Budget(String),
    /// Exit code 1.
    Io(io::Error),
}

impl RunError {
    pub fn invalid(field: &str, reason: impl Into<String>) -> Self {
        RunError::Invalid {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Invalid { .. } => 2,
            RunError::Budget(_) => 3,
            RunError::Io(_) => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Invalid { field, reason } => write!(f, "invalid {field}: {reason}"),
            RunError::Budget(msg) => write!(f, "{msg} (hint: pass --method sampled --samples N)"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        RunError::Io(e)
    }
}

impl From<cavity_bragg::Error> for RunError {
    fn from(e: cavity_bragg::Error) -> Self {
        use cavity_bragg::Error as E;
        match e {
            E::BudgetExceeded { .. } => RunError::Budget(e.to_string()),
            E::InvalidArgument { field, reason } => RunError::invalid(&flag_name(field), reason),
            E::Domain(r) => RunError::invalid("scenario", r),
            E::UnsupportedCombination(r) => RunError::invalid("scenario", r),
            E::Dimension(r) => RunError::invalid("scenario", r),
        }
    }
}

/// `mean_n` → `--mean-n`.
pub fn flag_name(field: &str) -> String {
    format!("--{}", field.replace('_', "-"))
}

pub type RunResult<T> = std::result::Result<T, RunError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub name: String,
    pub scenario: Scenario,
    pub outputs: Vec<String>,
    pub wall_time_seconds: f64,
}

impl Scenario {
    pub fn geometry(&self) -> RunResult<LatticeGeometry> {
        LatticeGeometry::new(self.sites, self.spacing).map_err(|e| match e {
            cavity_bragg::Error::InvalidArgument { reason, .. } => RunError::invalid("--sites", reason),
            other => other.into(),
        })
    }

    fn options(&self) -> EnumerationOptions {
        EnumerationOptions {
            epsilon: self.epsilon,
            budget: self.budget,
        }
    }

    fn times(&self) -> RunResult<Vec<f64>> {
        let spec = self
            .time
            .ok_or_else(|| RunError::invalid("--t-max", "a time grid is required for this mode"))?;
        Ok(time_grid(spec.t_max, spec.steps)?)
    }

    fn binning(&self) -> RunResult<Option<Binning>> {
        Ok(match self.bin_width {
            Some(w) => Some(Binning::new(w).map_err(|_| RunError::invalid("--bin-width", "must be positive"))?),
            None => None,
        })
    }

    fn spectrum_for(&self, geometry: &LatticeGeometry) -> RunResult<Spectrum> {
        let binning = self.binning()?;
        match self.method {
            Method::Exact => Ok(spectrum(&self.state, geometry, self.options(), binning)?),
            Method::Sampled { count, seed } => Ok(sampled_spectrum(&self.state, geometry, count, seed, binning)?),
            Method::Analytic => Err(RunError::invalid(
                "--method",
                "spectra are computed exactly or by sampling; use `laws` for analytic laws",
            )),
        }
    }

    /// Checks mode/method combinations before any computation.
    pub fn validate(&self) -> RunResult<()> {
        let geometry = self.geometry()?;
        self.state.validate(&geometry)?;
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(RunError::invalid("--epsilon", "must lie in (0, 1)"));
        }
        if let Method::Sampled { count, .. } = self.method {
            if count == 0 {
                return Err(RunError::invalid("--samples", "must be positive"));
            }
        }
        let allowed: &[&str] = match self.mode {
            Mode::Spectrum | Mode::Sweep => &["exact", "sampled"],
            Mode::Intensity => &["exact", "sampled", "analytic"],
            Mode::PhotonStats | Mode::Cat => &["exact"],
            Mode::Collapse => &["analytic"],
            Mode::Laws => match self.law {
                Some(Law::PClass) => &["exact", "sampled"],
                _ => &["analytic"],
            },
        };
        let name = match self.method {
            Method::Exact => "exact",
            Method::Sampled { .. } => "sampled",
            Method::Analytic => "analytic",
        };
        if !allowed.contains(&name) {
            return Err(RunError::invalid(
                "--method",
                format!("`{name}` is not available here (allowed: {})", allowed.join(", ")),
            ));
        }
        match self.mode {
            Mode::PhotonStats | Mode::Cat if self.sites != 2 => {
                return Err(RunError::invalid(
                    "--sites",
                    "exact photon dynamics needs exactly 2 sites",
                ));
            }
            Mode::PhotonStats if self.photons.is_none() => {
                return Err(RunError::invalid("--n-tot", "give --n-tot or --coherent-photons"));
            }
            Mode::Cat if !matches!(self.photons, Some(PhotonInput::Fock { .. })) => {
                return Err(RunError::invalid(
                    "--n-tot",
                    "cat diagnostics need a Fock photon number",
                ));
            }
            Mode::Intensity | Mode::PhotonStats if self.time.is_none() => {
                return Err(RunError::invalid("--t-max", "a time grid is required for this mode"));
            }
            Mode::Laws if self.law.is_none() => {
                return Err(RunError::invalid("--law", "choose a law"));
            }
            Mode::Sweep if self.sweep.is_none() => {
                return Err(RunError::invalid("--d-min", "a spacing range is required"));
            }
            _ => {}
        }
        if let Some(s) = self.sweep {
            if !(s.d_min > 0.0 && s.d_max > s.d_min && s.d_steps > 0) {
                return Err(RunError::invalid("--d-min", "need 0 < d_min < d_max and d_steps > 0"));
            }
        }
        Ok(())
    }
}

fn create(dir: &Path, file: &str) -> RunResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(file))?))
}

/// Runs `scenario`, writing `<name>.csv`/`<name>.json` artifacts and
/// `<name>.manifest.json` into `dir`. Returns the manifest.
pub fn run(scenario: &Scenario, dir: &Path, name: &str) -> RunResult<Manifest> {
    scenario.validate()?;
    fs::create_dir_all(dir)?;
    let start = Instant::now();
    let geometry = scenario.geometry()?;
    let mut outputs = Vec::new();
    match scenario.mode {
        Mode::Spectrum => {
            let s = scenario.spectrum_for(&geometry)?;
            let file = format!("{name}.csv");
            s.write_csv(create(dir, &file)?)?;
            outputs.push(file);
        }
        Mode::Intensity => {
            let times = scenario.times()?;
            let series = match scenario.method {
                Method::Analytic => {
                    if scenario.state.kind() == StateKind::Mott {
                        return Err(RunError::invalid(
                            "--state",
                            "the closed form describes superfluid states",
                        ));
                    }
                    closed_form_lattice_intensity(scenario.state.mean_total(), scenario.sites, &times)?
                }
                _ => reflected_intensity(&scenario.spectrum_for(&geometry)?, &times)?,
            };
            let file = format!("{name}.csv");
            series.write_csv(create(dir, &file)?)?;
            outputs.push(file);
        }
        Mode::PhotonStats => {
            let times = scenario.times()?;
            let photons = scenario.photons.expect("validated");
            let ps = photon_statistics(&scenario.state, &geometry, photons, &times, scenario.options())?;
            let file = format!("{name}.csv");
            ps.write_csv(create(dir, &file)?)?;
            outputs.push(file);
        }
        Mode::Collapse => {
            let p = predict_collapse_revival(&scenario.state, &geometry)?;
            let file = format!("{name}.json");
            let mut w = create(dir, &file)?;
            writeln!(w, "{}", to_json(&p))?;
            w.flush()?;
            outputs.push(file);
        }
        Mode::Laws => {
            let file = format!("{name}.csv");
            let law = scenario.law.expect("validated");
            let kind = scenario.state.kind();
            let mean = scenario.state.mean_total();
            match law {
                Law::GaussianTotal => gaussian_total_law(mean)?.write_csv(create(dir, &file)?)?,
                Law::EvenOdd => even_odd_difference_law(kind, mean)?.write_csv(create(dir, &file)?)?,
                Law::EvenSite => even_site_number_law(kind, mean)?.write_csv(create(dir, &file)?)?,
                Law::Rayleigh => {
                    let steps = scenario.time.map_or(400, |t| t.steps);
                    let omega_max = 4.0 * mean.sqrt();
                    rayleigh_walk_law(mean)?.write_csv(create(dir, &file)?, omega_max, steps)?
                }
                Law::PClass => {
                    let fraction = geometry
                        .phase_fraction()
                        .ok_or_else(|| RunError::invalid("--spacing", "the p-class law needs a rational spacing"))?;
                    let method = match scenario.method {
                        Method::Sampled { count, seed } => PClassMethod::MonteCarlo { samples: count, seed },
                        _ => PClassMethod::Exact {
                            budget: scenario.budget,
                        },
                    };
                    let s = p_class_law(kind, mean, scenario.sites, fraction.p, fraction.q, method)?;
                    let mut w = create(dir, &file)?;
                    writeln!(w, "# law=p_class support=discrete")?;
                    s.write_csv(w)?;
                }
            }
            outputs.push(file);
        }
        Mode::Sweep => {
            let sweep = scenario.sweep.expect("validated");
            let file = format!("{name}.csv");
            let mut w = create(dir, &file)?;
            writeln!(w, "d,omega,probability")?;
            for i in 0..=sweep.d_steps {
                let d = sweep.d_min + (sweep.d_max - sweep.d_min) * i as f64 / sweep.d_steps as f64;
                let g = LatticeGeometry::new(scenario.sites, Spacing::real(d)?)?;
                let s = scenario.spectrum_for(&g)?;
                for l in &s.lines {
                    writeln!(w, "{},{},{}", fmt_f64(d), fmt_f64(l.omega), fmt_f64(l.probability))?;
                }
            }
            w.flush()?;
            outputs.push(file);
        }
        Mode::Cat => {
            let n_tot = match scenario.photons {
                Some(PhotonInput::Fock { n_tot }) => n_tot,
                _ => unreachable!("validated"),
            };
            let grid = match scenario.grid {
                Some(g) => Some(QGrid::square(g.half_width, g.spacing)?),
                None => None,
            };
            let cat = cat_state_diagnostics(&scenario.state, &geometry, n_tot, grid)?;
            let q_file = format!("{name}_q.csv");
            cat.write_q_csv(create(dir, &q_file)?)?;
            let summary = CatSummary {
                photon_outcomes: &cat.photon_outcomes,
                other_outcomes_mass: cat.other_outcomes_mass,
                atomic_purity: cat.atomic_purity,
                truncation_bound: cat.truncation_bound,
            };
            let json_file = format!("{name}.json");
            let mut w = create(dir, &json_file)?;
            writeln!(w, "{}", to_json(&summary))?;
            w.flush()?;
            outputs.push(q_file);
            outputs.push(json_file);
        }
    }
    let manifest = Manifest {
        tool: "cavity-bragg".into(),
        version: VERSION.into(),
        name: name.into(),
        scenario: scenario.clone(),
        outputs,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    let mut w = create(dir, &format!("{name}.manifest.json"))?;
    writeln!(w, "{}", to_json(&manifest))?;
    w.flush()?;
    Ok(manifest)
}

#[derive(Serialize)]
struct CatSummary<'a> {
    photon_outcomes: &'a [cavity_bragg::twowell::ConditionalAtoms; 2],
    other_outcomes_mass: f64,
    atomic_purity: f64,
    truncation_bound: f64,
}

/// Re-runs the scenario recorded in a manifest.
pub fn replay(manifest_path: &Path, dir: &Path) -> RunResult<Manifest> {
    let text = fs::read_to_string(manifest_path)?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| RunError::invalid("manifest", format!("{}: {e}", manifest_path.display())))?;
    run(&manifest.scenario, dir, &manifest.name)
}

pub fn output_paths(dir: &Path, manifest: &Manifest) -> Vec<PathBuf> {
    manifest.outputs.iter().map(|f| dir.join(f)).collect()
}
