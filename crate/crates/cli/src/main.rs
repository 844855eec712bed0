use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qdd::metrics::BathKind;
use qdd::model::{SymmetryClass, Topology};
use qdd::scaling::{FitWindow, TauGrid};
use qdd_cli::{run, Command, ConfigError, Format, PulseRange, RunConfig};

#[derive(Parser)]
#[command(
    name = "qdd",
    version,
    about = "Quadratic dynamical decoupling of a qubit in a spin bath"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Draw a seeded coupling set and print it as JSON
    Couplings,
    /// Print the pulse schedule of one cell as JSON
    Schedule,
    /// Distance series d(τ) for one cell
    Simulate,
    /// Distance series for every cell of a grid
    Sweep,
    /// Fitted scaling exponents for every cell of a grid
    Table,
    /// Nested switching-function integrals for one cell
    Magnus,
    /// Bath coefficients, parity defects and T-sum residual for one cell
    SymmetryCheck,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Couplings => Command::Couplings,
            Cmd::Schedule => Command::Schedule,
            Cmd::Simulate => Command::Simulate,
            Cmd::Sweep => Command::Sweep,
            Cmd::Table => Command::Table,
            Cmd::Magnus => Command::Magnus,
            Cmd::SymmetryCheck => Command::SymmetryCheck,
        }
    }
}

#[derive(Args)]
struct Opts {
    /// JSON run configuration; flags override its fields
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the effective configuration to this path
    #[arg(long, global = true)]
    save_config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of bath spins
    #[arg(long = "M", visible_alias = "m", global = true,
          value_parser = clap::value_parser!(u64).range(1..=qdd::model::MAX_BATH_SPINS as u64))]
    m: Option<u64>,
    /// anisotropic or isotropic
    #[arg(long, global = true)]
    class: Option<SymmetryClass>,
    /// central-spin or chain
    #[arg(long, global = true)]
    topology: Option<Topology>,
    /// Load couplings from a JSON file instead of drawing them
    #[arg(long, global = true)]
    couplings_file: Option<PathBuf>,
    /// product or mixed
    #[arg(long, global = true)]
    bath: Option<BathKind>,
    /// Seed for random product-bath directions
    #[arg(long, global = true)]
    direction_seed: Option<u64>,
    /// Outer X pulse count or inclusive range (e.g. 2 or 0:3)
    #[arg(long, global = true)]
    nx: Option<PulseRange>,
    /// Inner Z pulse count or inclusive range
    #[arg(long, global = true)]
    nz: Option<PulseRange>,
    /// Total sequence duration
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// Use a geometric τ grid from this value (with --tau-max and --points)
    #[arg(long, global = true, requires_all = ["tau_max", "points"])]
    tau_min: Option<f64>,
    #[arg(long, global = true, requires = "tau_min")]
    tau_max: Option<f64>,
    #[arg(long, global = true, requires = "tau_min")]
    points: Option<usize>,
    /// Lower edge of the fit window in d
    #[arg(long, global = true)]
    d_lo: Option<f64>,
    /// Upper edge of the fit window in d
    #[arg(long, global = true)]
    d_hi: Option<f64>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true, env = "QDD_WORKERS", value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    /// Output file (default: stdout)
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// csv or json
    #[arg(long, global = true)]
    format: Option<Format>,
}

impl Opts {
    fn flags(&self, base: &RunConfig) -> RunConfig {
        let tau_grid = self.tau_min.map(|tau_min| TauGrid::Geometric {
            tau_min,
            tau_max: self.tau_max.expect("clap requires tau-max"),
            points: self.points.expect("clap requires points"),
        });
        let window = (self.d_lo.is_some() || self.d_hi.is_some()).then(|| {
            let w = base.window.unwrap_or_default();
            FitWindow {
                d_lo: self.d_lo.unwrap_or(w.d_lo),
                d_hi: self.d_hi.unwrap_or(w.d_hi),
                ..w
            }
        });
        RunConfig {
            seed: self.seed,
            m: self.m.map(|m| m as usize),
            class: self.class,
            topology: self.topology,
            couplings_file: self.couplings_file.clone(),
            bath: self.bath,
            directions: None,
            direction_seed: self.direction_seed,
            n_x: self.nx,
            n_z: self.nz,
            tau: self.tau,
            tau_grid,
            window,
            workers: self.workers.map(|w| w as usize),
            output: self.output.clone(),
            format: self.format,
        }
    }
}

fn execute(cli: &Cli) -> Result<ExitCode, ConfigError> {
    let base = match &cli.opts.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let cfg = base.clone().overlay(cli.opts.flags(&base));
    if let Some(path) = &cli.opts.save_config {
        write(path, &cfg.to_json())?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| ConfigError::Usage(format!("cannot start worker pool: {e}")))?;
    let out = pool.install(|| run(cli.command.into(), &cfg))?;
    match &cfg.output {
        Some(path) => write(path, &out.text)?,
        None => print!("{}", out.text),
    }
    if out.failures.is_empty() {
        return Ok(ExitCode::SUCCESS);
    }
    eprintln!("{} cell(s) failed:", out.failures.len());
    for f in &out.failures {
        eprintln!("  {f}");
    }
    Ok(ExitCode::from(2))
}

fn write(path: &std::path::Path, text: &str) -> Result<(), ConfigError> {
    std::fs::write(path, text).map_err(|source| ConfigError::Io {
        path: path.to_owned(),
        source,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                ConfigError::Usage(_) | ConfigError::Json(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
