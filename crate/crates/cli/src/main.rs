use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

/// Disentangled evolution of two coupled, driven bosonic modes.
#[derive(Parser, Debug)]
#[command(name = "twomode", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate the factors Λ, Ω, Γ.
    Factors(RunArgs),
    /// Tabulate the 2×2 propagator.
    Smatrix(RunArgs),
    /// Displacement amplitudes and phase of the driven evolution.
    Evolve(RunArgs),
    /// Coherent-state amplitudes and ladder eigenvalue residuals.
    Coherent(RunArgs),
    /// Compare against brute-force time-ordered products.
    Verify(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Closed forms where the scenario has one, numeric otherwise.
    Auto,
    Closed,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    /// Flip the sign of Γ before reconstructing S.
    GammaSign,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    t_end: f64,
    /// Number of output times, endpoints included.
    #[arg(long, default_value_t = 101)]
    grid: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Fock cutoff per mode.
    #[arg(long, default_value_t = 8)]
    nmax: usize,
    /// Steps of the brute-force products.
    #[arg(long, default_value_t = 4096)]
    steps: usize,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, value_enum, default_value_t = Method::Auto)]
    method: Method,
    #[arg(long, value_enum, hide = true)]
    inject_fault: Option<Fault>,
}

/// Validated run settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: twomode::scenario::CoefficientScenario,
    pub grid: Vec<f64>,
    pub t_end: f64,
    pub tol: f64,
    pub n_max: usize,
    pub steps: usize,
    pub out: PathBuf,
    pub format: Format,
    pub method: Method,
    pub fault: Option<Fault>,
}

impl RunArgs {
    fn config(&self) -> anyhow::Result<RunConfig> {
        if !(self.tol > 0.0 && self.tol <= 1e-2) {
            anyhow::bail!("--tol must lie in (0, 1e-2], got {}", self.tol);
        }
        if self.grid < 2 {
            anyhow::bail!("--grid must be at least 2");
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            anyhow::bail!("--t-end must be a finite non-negative number");
        }
        if self.steps == 0 {
            anyhow::bail!("--steps must be positive");
        }
        let scenario = twomode::scenario::load(&self.scenario)?;
        scenario.check_time(self.t_end)?;
        std::fs::create_dir_all(&self.out)?;
        Ok(RunConfig {
            scenario,
            grid: twomode::uniform_grid(self.t_end, self.grid),
            t_end: self.t_end,
            tol: self.tol,
            n_max: self.nmax,
            steps: self.steps,
            out: self.out.clone(),
            format: self.format,
            method: self.method,
            fault: self.inject_fault,
        })
    }
}

/// What a command reports back to `main`.
pub enum Outcome {
    Success,
    /// Output written up to a chart singularity.
    Partial(String),
    Failed(Vec<String>),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run): (&RunArgs, fn(&RunConfig) -> anyhow::Result<Outcome>) = match &cli.command {
        Command::Factors(a) => (a, commands::factors),
        Command::Smatrix(a) => (a, commands::smatrix),
        Command::Evolve(a) => (a, commands::evolve),
        Command::Coherent(a) => (a, commands::coherent),
        Command::Verify(a) => (a, commands::verify),
    };
    match args.config().and_then(|cfg| run(&cfg)) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Partial(msg)) => {
            eprintln!("warning: {msg}");
            ExitCode::from(2)
        }
        Ok(Outcome::Failed(checks)) => {
            for c in checks {
                eprintln!("failed check: {c}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
