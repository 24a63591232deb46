use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod reference;
mod report;
mod svg;

use commands::{Anchor, Components, Function, Model, RhsKind};

/// Fractional oscillators: collocation solves, equivalent dissipation fits
/// and van der Pol stability.
#[derive(Debug, Parser)]
#[command(name = "fracdyn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Svg,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// L2 precision of D^α x = -x, x(0) = 1 on [0, 1] against the exact
    /// Mittag-Leffler solution, n ∈ {5, 10, 20, 40}, α ∈ {0.1, 0.5, 0.9}.
    Table1,
    /// D^{1/2} x = sin x with x(1) = 5/2 on [0, 1]: recovered x(0), its
    /// relative change between rows and the residual, n ∈ {5, 10, 20, 30, 40}.
    Table2,
    /// Damping p* that best matches the linear oscillator of order
    /// 1 < α ≤ 2 over [0, T], for the tabulated orders.
    Table3 {
        #[arg(long, default_value_t = 20.0)]
        t_end: f64,
        /// Simpson panels on [0, T]
        #[arg(long, default_value_t = 2000)]
        panels: usize,
    },
    /// Damping p* that best matches the fractional pendulum of order
    /// 0 < α ≤ 1 over [0, T], for the tabulated orders.
    Table4 {
        #[arg(long, default_value_t = 20.0)]
        t_end: f64,
        #[arg(long, default_value_t = 50)]
        n: usize,
        /// RK4 steps for the damped pendulum
        #[arg(long, default_value_t = 20_000)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = Components::Position)]
        components: Components,
    },
    /// Without --alpha: quadratic fit of p*(α) for the linear oscillator.
    /// With --alpha: fractional and fitted classical trajectories side by side.
    FitP {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, value_enum, default_value_t = Model::Linear)]
        model: Model,
        /// van der Pol nonlinearity (model vdp)
        #[arg(long, default_value_t = 0.1)]
        mu: f64,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Critical van der Pol parameter μ_c(α) = 2 cos(απ/2) on an interior
    /// grid of (0, 1).
    MuCurve {
        #[arg(long, default_value_t = 99)]
        points: usize,
    },
    /// Fractional van der Pol: linear stability and simulated attractor for
    /// μ = factor · μ_c(α). With --mu: fractional and classical trajectories.
    VdpScan {
        #[arg(long, default_value_t = 0.9)]
        alpha: f64,
        #[arg(long)]
        mu: Option<f64>,
        /// extra damping of the classical system (with --mu)
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.8,1.2,1.5,2")]
        factors: Vec<f64>,
        #[arg(long, default_value_t = 200.0)]
        t_end: f64,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 200_000)]
        steps: usize,
    },
    /// Collocation solve of D^α x = f(t, x) on [0, T] with one anchored node.
    Solve {
        #[arg(long)]
        alpha: f64,
        #[arg(long, value_enum)]
        rhs: RhsKind,
        /// node:value, or node:v1,v2 for two-component fields
        #[arg(long)]
        anchor: Anchor,
        #[arg(long, default_value_t = 40)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        /// trajectory CSV (t,x1..xm) on the same grid used as Newton start
        #[arg(long)]
        initial_guess: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
    },
    /// Discrete Caputo derivative of a sampled function against its exact
    /// value at the grid nodes.
    Caputo {
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        #[arg(long, value_enum, default_value_t = Function::T2)]
        function: Function,
    },
}

/// Invalid combination of otherwise well-formed arguments.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn run(cli: Cli) -> Result<()> {
    let report = match cli.command {
        Command::Table1 => commands::table1()?,
        Command::Table2 => commands::table2()?,
        Command::Table3 { t_end, panels } => commands::table3(t_end, panels)?,
        Command::Table4 { t_end, n, steps, components } => commands::table4(t_end, n, steps, components)?,
        Command::FitP { alpha, model, mu, t_end, n, steps } => commands::fit_p(alpha, model, mu, t_end, n, steps)?,
        Command::MuCurve { points } => commands::mu_curve(points)?,
        Command::VdpScan { alpha, mu, beta, factors, t_end, n, steps } => {
            commands::vdp_scan(alpha, mu, beta, &factors, t_end, n, steps)?
        }
        Command::Solve { alpha, rhs, anchor, n, t_end, mu, beta, initial_guess, max_iter } => {
            commands::solve(alpha, rhs, &anchor, n, t_end, mu, beta, initial_guess.as_deref(), max_iter)?
        }
        Command::Caputo { alpha, n, t_end, function } => commands::caputo(alpha, n, t_end, function)?,
    };
    let sink: Box<dyn Write> = match &cli.out {
        Some(p) => Box::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut sink = BufWriter::new(sink);
    match cli.format {
        Format::Csv => report.write_csv(&mut sink)?,
        Format::Svg => sink.write_all(svg::render(&report.plot)?.as_bytes())?,
    }
    sink.flush()?;
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    use fracdyn::error::Error as E;
    if e.is::<Usage>() {
        return 2;
    }
    match e.downcast_ref::<E>() {
        Some(E::Domain(_) | E::Dimension { .. } | E::GridMismatch(_) | E::Parse(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
