use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dioph_cli::config::EngineKind;
use dioph_cli::run::{self, RunReport, Timing};
use dioph_cli::RunConfig;
use dioph_core::stochastic::NoiseDistribution;
use dioph_core::{Error, ScheduleShape};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "dioph", version, about = "Adiabatic evolution on truncated Fock spaces for Diophantine equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML config file; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Equation, e.g. "x^2 - 2*y^2" or "x^2 = 2*y^2"
    #[arg(short, long, global = true)]
    equation: Option<String>,
    /// Levels per mode (one value applies to all)
    #[arg(long, global = true, value_delimiter = ',')]
    cutoffs: Option<Vec<usize>>,
    /// Symmetry-breaking strength (default: derived from the spectrum)
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Run times to try, in order
    #[arg(long = "t", global = true, value_delimiter = ',')]
    t_ladder: Option<Vec<f64>>,
    #[arg(long, global = true)]
    schedule: Option<Shape>,
    /// Fixed RK4 step (default: derived from T and the largest diagonal)
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Step bound numerator: dt <= step_scale / max|diag H|
    #[arg(long, global = true)]
    step_scale: Option<f64>,
    /// Probability the top outcome must exceed
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Seed for the noise draws (clt)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the JSON report here instead of stdout
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,
    /// Also write CSV data (flow, hubbard, clt samples)
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Record wall-clock time in the report
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Linear,
    Smoothstep,
}

#[derive(Clone, Copy, ValueEnum)]
enum Engine {
    Oracle,
    Adiabatic,
}

#[derive(Clone, Copy, ValueEnum)]
enum Noise {
    Gaussian,
    Uniform,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve along the T-ladder and emit a verdict
    Solve {
        /// Run every T instead of stopping at the first identification
        #[arg(long)]
        full_ladder: bool,
        /// Check the verdict at ε, ε/2, ε/4
        #[arg(long)]
        epsilon_series: bool,
    },
    /// Lowest levels of H(s) on an even grid
    Flow {
        #[arg(long)]
        grid_points: Option<usize>,
        #[arg(long)]
        levels: Option<usize>,
        /// Add the ground-state overlap of an evolution at this T
        #[arg(long)]
        overlap_time: Option<f64>,
    },
    /// Noisy-coefficient averaging experiment
    Clt {
        #[arg(long, value_delimiter = ',')]
        n_values: Option<Vec<usize>>,
        #[arg(long)]
        batches: Option<usize>,
        #[arg(long)]
        sigma: Option<f64>,
        /// σ per monomial, highest degree first
        #[arg(long, value_delimiter = ',')]
        sigmas: Option<Vec<f64>>,
        #[arg(long)]
        distribution: Option<Noise>,
        #[arg(long)]
        engine: Option<Engine>,
    },
    /// Bose-Hubbard limits and mean-field sweeps
    Hubbard {
        #[arg(long, value_delimiter = ',')]
        fillings: Option<Vec<usize>>,
        /// Ascending U/J grid
        #[arg(long, value_delimiter = ',')]
        ratios: Option<Vec<f64>>,
        #[arg(long)]
        sites: Option<usize>,
        #[arg(long)]
        atoms: Option<usize>,
    },
    /// Exhaustive search of D² over a box
    Oracle {
        /// Inclusive upper bound per variable
        #[arg(long = "box", value_delimiter = ',')]
        bounds: Option<Vec<u64>>,
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Compare runs over a cutoff ladder
    Stability {
        #[arg(long, value_delimiter = ',')]
        ladder: Option<Vec<usize>>,
        #[arg(long)]
        time: Option<f64>,
    },
}

fn load(common: &Common, command: &Command) -> Result<RunConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_toml(&text)?
        }
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($field:expr, $value:expr) => {
            if let Some(v) = $value.clone() {
                $field = v;
            }
        };
    }
    set!(cfg.equation, common.equation);
    set!(cfg.cutoffs, common.cutoffs);
    set!(cfg.t_ladder, common.t_ladder);
    set!(cfg.step_scale, common.step_scale);
    set!(cfg.threshold, common.threshold);
    set!(cfg.seed, common.seed);
    if common.epsilon.is_some() {
        cfg.epsilon = common.epsilon;
    }
    if common.dt.is_some() {
        cfg.dt = common.dt;
    }
    if let Some(s) = common.schedule {
        cfg.schedule = match s {
            Shape::Linear => ScheduleShape::Linear,
            Shape::Smoothstep => ScheduleShape::Smoothstep,
        };
    }
    match command {
        Command::Solve { full_ladder, epsilon_series } => {
            cfg.full_ladder |= full_ladder;
            cfg.epsilon_series |= epsilon_series;
        }
        Command::Flow { grid_points, levels, overlap_time } => {
            set!(cfg.flow.grid_points, grid_points);
            set!(cfg.flow.levels, levels);
            if overlap_time.is_some() {
                cfg.flow.overlap_time = *overlap_time;
            }
        }
        Command::Clt { n_values, batches, sigma, sigmas, distribution, engine } => {
            set!(cfg.clt.n_values, n_values);
            set!(cfg.clt.batches, batches);
            set!(cfg.clt.sigma, sigma);
            cfg.clt.keep_samples |= common.csv.is_some();
            if sigmas.is_some() {
                cfg.clt.sigmas = sigmas.clone();
            }
            if let Some(d) = distribution {
                cfg.clt.distribution = match d {
                    Noise::Gaussian => NoiseDistribution::Gaussian,
                    Noise::Uniform => NoiseDistribution::Uniform,
                };
            }
            if let Some(e) = engine {
                cfg.clt.engine = match e {
                    Engine::Oracle => EngineKind::Oracle,
                    Engine::Adiabatic => EngineKind::Adiabatic,
                };
            }
        }
        Command::Hubbard { fillings, ratios, sites, atoms } => {
            set!(cfg.hubbard.fillings, fillings);
            set!(cfg.hubbard.ratios, ratios);
            set!(cfg.hubbard.sites, sites);
            set!(cfg.hubbard.atoms, atoms);
        }
        Command::Oracle { bounds, budget } => {
            if bounds.is_some() {
                cfg.oracle.bounds = bounds.clone();
            }
            set!(cfg.oracle.budget, budget);
        }
        Command::Stability { ladder, time } => {
            set!(cfg.stability.cutoffs, ladder);
            set!(cfg.stability.total_time, time);
        }
    }
    Ok(cfg)
}

fn emit<T: Serialize>(
    common: &Common,
    command: &'static str,
    cfg: &RunConfig,
    result: T,
    started: Instant,
) -> Result<(), Error> {
    let mut report = RunReport::new(command, cfg, result);
    if common.timing {
        report.timing = Some(Timing { seconds: started.elapsed().as_secs_f64() });
    }
    let json = report.to_json();
    match &common.out {
        Some(path) => write(path, &json),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn write(path: &PathBuf, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn execute(cli: &Cli) -> Result<(), Error> {
    let cfg = load(&cli.common, &cli.command)?;
    let started = Instant::now();
    let common = &cli.common;
    match &cli.command {
        Command::Solve { .. } => emit(common, "solve", &cfg, run::solve(&cfg)?, started),
        Command::Flow { .. } => {
            let report = run::flow(&cfg)?;
            if let Some(path) = &common.csv {
                write(path, &report.to_csv())?;
            }
            emit(common, "flow", &cfg, report, started)
        }
        Command::Clt { .. } => {
            let report = run::clt(&cfg)?;
            if let Some(path) = &common.csv {
                let variables = cfg.polynomial()?.variables().to_vec();
                write(path, &report.samples_csv(&variables))?;
            }
            emit(common, "clt", &cfg, report, started)
        }
        Command::Hubbard { .. } => {
            let report = run::hubbard(&cfg)?;
            if let Some(path) = &common.csv {
                write(path, &report.sweeps_csv())?;
            }
            emit(common, "hubbard", &cfg, report, started)
        }
        Command::Oracle { .. } => emit(common, "oracle", &cfg, run::oracle(&cfg)?, started),
        Command::Stability { .. } => emit(common, "stability", &cfg, run::stability(&cfg)?, started),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.module());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
