use std::path::PathBuf;
use std::process::ExitCode;

use cavity_bragg::states::{DEFAULT_BUDGET, DEFAULT_EPSILON};
use cavity_bragg::twowell::PhotonInput;
use cavity_bragg::{AtomicState, Spacing};
use cavity_bragg_cli::{
    figures, replay, run, GridSpec, Law, Manifest, Method, Mode, RunError, RunResult, Scenario, SweepSpec, TimeSpec,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

#[derive(Parser)]
#[command(
    name = "cavity-bragg",
    version,
    about = "Bragg reflection of cavity light off lattice atoms"
)]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "CAVITY_BRAGG_OUT", default_value = ".")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Probability-weighted eigenfrequencies of the coupling operator.
    Spectrum(Common),
    /// Normalized reflected intensity over time.
    Intensity(Common),
    /// Reflected photon-number law over time (two wells).
    PhotonStats(Common),
    /// Predicted collapse rate and revival time.
    Collapse(Common),
    /// Analytic large-lattice laws.
    Laws(Common),
    /// Spectrum as a function of the lattice spacing.
    Sweep(Common),
    /// Atomic Q-function and photon outcomes at t = pi/2 for d = 1/4.
    Cat(Common),
    /// Regenerate the data for one figure.
    Figure { number: u32 },
    /// Re-run the scenario stored in a manifest.
    Replay { manifest: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum StateArg {
    Mott,
    Sf1,
    Sf2,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    Sampled,
    Analytic,
}

#[derive(Clone, Copy, ValueEnum)]
enum LawArg {
    GaussianTotal,
    EvenOdd,
    EvenSite,
    PClass,
    Rayleigh,
}

#[derive(Args)]
struct Common {
    #[arg(long, value_enum)]
    state: StateArg,
    /// Mott occupations, comma separated.
    #[arg(long, value_delimiter = ',')]
    occupations: Option<Vec<u32>>,
    /// Per-well coherent amplitudes such as `3,3` or `1+2i,0.5`.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<String>>,
    /// Total mean atom number of a uniform coherent state.
    #[arg(long)]
    mean_n: Option<f64>,
    /// Atom number of the number-conserving state.
    #[arg(long)]
    atoms: Option<u32>,
    #[arg(long)]
    sites: Option<usize>,
    /// Spacing in wavelengths, `q/2p` or a decimal.
    #[arg(long, default_value = "1/2")]
    spacing: String,
    #[arg(long, allow_negative_numbers = true)]
    n_tot: Option<i64>,
    /// Mean photon number of a coherent +k input.
    #[arg(long)]
    coherent_photons: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    #[arg(long)]
    bin_width: Option<f64>,
    #[arg(long, value_enum)]
    law: Option<LawArg>,
    #[arg(long)]
    d_min: Option<f64>,
    #[arg(long)]
    d_max: Option<f64>,
    #[arg(long, default_value_t = 200)]
    d_steps: usize,
    /// Half width of the square Q-function grid.
    #[arg(long)]
    grid_half_width: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    grid_spacing: f64,
    /// Output file stem; defaults to the subcommand name.
    #[arg(long)]
    name: Option<String>,
}

impl Common {
    fn state(&self) -> RunResult<AtomicState> {
        match self.state {
            StateArg::Mott => {
                let occ = self
                    .occupations
                    .clone()
                    .ok_or_else(|| RunError::invalid("--occupations", "required for --state mott"))?;
                Ok(AtomicState::mott(occ))
            }
            StateArg::Sf1 => match (&self.alphas, self.mean_n) {
                (Some(a), None) => {
                    let alphas = a
                        .iter()
                        .map(|s| {
                            s.trim()
                                .parse::<Complex64>()
                                .map_err(|_| RunError::invalid("--alphas", format!("cannot parse `{s}`")))
                        })
                        .collect::<RunResult<Vec<_>>>()?;
                    Ok(AtomicState::coherent(alphas))
                }
                (None, Some(n)) => {
                    if !(n >= 0.0 && n.is_finite()) {
                        return Err(RunError::invalid("--mean-n", "must be a non-negative number"));
                    }
                    Ok(AtomicState::coherent_uniform(n, self.sites.unwrap_or(2)))
                }
                _ => Err(RunError::invalid(
                    "--alphas",
                    "give exactly one of --alphas or --mean-n",
                )),
            },
            StateArg::Sf2 => {
                let atoms = self
                    .atoms
                    .ok_or_else(|| RunError::invalid("--atoms", "required for --state sf2"))?;
                Ok(AtomicState::number_sf(atoms))
            }
        }
    }

    fn sites(&self, state: &AtomicState) -> RunResult<usize> {
        let implied = match state {
            AtomicState::Mott { occupations } => Some(occupations.len()),
            AtomicState::CoherentSf { alphas } if self.alphas.is_some() => Some(alphas.len()),
            _ => None,
        };
        match (implied, self.sites) {
            (Some(i), Some(s)) if i != s => Err(RunError::invalid(
                "--sites",
                format!("{s} sites but the state lists {i} wells"),
            )),
            (Some(i), _) => Ok(i),
            (None, s) => Ok(s.unwrap_or(2)),
        }
    }

    fn scenario(&self, mode: Mode) -> RunResult<Scenario> {
        let state = self.state()?;
        let sites = self.sites(&state)?;
        let spacing: Spacing = self.spacing.parse().map_err(|e: cavity_bragg::Error| match e {
            cavity_bragg::Error::InvalidArgument { reason, .. } => RunError::invalid("--spacing", reason),
            other => RunError::invalid("--spacing", other.to_string()),
        })?;
        let photons = match (self.n_tot, self.coherent_photons) {
            (Some(_), Some(_)) => {
                return Err(RunError::invalid(
                    "--n-tot",
                    "give --n-tot or --coherent-photons, not both",
                ))
            }
            (Some(n), None) => {
                let n_tot = u32::try_from(n)
                    .map_err(|_| RunError::invalid("--n-tot", format!("{n} is negative or too large")))?;
                Some(PhotonInput::Fock { n_tot })
            }
            (None, Some(m)) => Some(PhotonInput::Coherent { mean: m }),
            (None, None) => None,
        };
        let default_method = match mode {
            Mode::Collapse => MethodArg::Analytic,
            Mode::Laws if !matches!(self.law, Some(LawArg::PClass)) => MethodArg::Analytic,
            _ => MethodArg::Exact,
        };
        let method = match self.method.unwrap_or(default_method) {
            MethodArg::Exact => Method::Exact,
            MethodArg::Sampled => Method::Sampled {
                count: self.samples,
                seed: self.seed,
            },
            MethodArg::Analytic => Method::Analytic,
        };
        let sweep = match (self.d_min, self.d_max) {
            (Some(d_min), Some(d_max)) => Some(SweepSpec {
                d_min,
                d_max,
                d_steps: self.d_steps,
            }),
            (None, None) => None,
            _ => return Err(RunError::invalid("--d-max", "give both --d-min and --d-max")),
        };
        let scenario = Scenario {
            mode,
            state,
            sites,
            spacing,
            photons,
            time: self.t_max.map(|t_max| TimeSpec {
                t_max,
                steps: self.steps,
            }),
            method,
            epsilon: self.epsilon,
            budget: self.budget,
            bin_width: self.bin_width,
            law: self.law.map(|l| match l {
                LawArg::GaussianTotal => Law::GaussianTotal,
                LawArg::EvenOdd => Law::EvenOdd,
                LawArg::EvenSite => Law::EvenSite,
                LawArg::PClass => Law::PClass,
                LawArg::Rayleigh => Law::Rayleigh,
            }),
            sweep,
            grid: self.grid_half_width.map(|half_width| GridSpec {
                half_width,
                spacing: self.grid_spacing,
            }),
        };
        Ok(scenario)
    }
}

fn report(manifest: &Manifest, out: &std::path::Path) {
    for f in &manifest.outputs {
        println!("{}", out.join(f).display());
    }
}

fn execute(cli: Cli) -> RunResult<()> {
    let out = cli.out;
    let (mode, common) = match cli.command {
        Command::Spectrum(c) => (Mode::Spectrum, c),
        Command::Intensity(c) => (Mode::Intensity, c),
        Command::PhotonStats(c) => (Mode::PhotonStats, c),
        Command::Collapse(c) => (Mode::Collapse, c),
        Command::Laws(c) => (Mode::Laws, c),
        Command::Sweep(c) => (Mode::Sweep, c),
        Command::Cat(c) => (Mode::Cat, c),
        Command::Figure { number } => {
            for (name, scenario) in figures::scenarios(number)? {
                let m = run(&scenario, &out, &name)?;
                report(&m, &out);
            }
            return Ok(());
        }
        Command::Replay { manifest } => {
            let m = replay(&manifest, &out)?;
            report(&m, &out);
            return Ok(());
        }
    };
    let scenario = common.scenario(mode)?;
    let default_name = match mode {
        Mode::Spectrum => "spectrum",
        Mode::Intensity => "intensity",
        Mode::PhotonStats => "photon_stats",
        Mode::Collapse => "collapse",
        Mode::Laws => "law",
        Mode::Sweep => "sweep",
        Mode::Cat => "cat",
    };
    let name = common.name.clone().unwrap_or_else(|| default_name.to_string());
    let m = run(&scenario, &out, &name)?;
    if mode == Mode::Collapse {
        print!("{}", std::fs::read_to_string(out.join(&m.outputs[0]))?);
    } else {
        report(&m, &out);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
