use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use psiwork_cli::{run, Command, Flags};

#[derive(Parser)]
#[command(name = "psiwork", version, about = "Workbench for principal-type operators and condition (Psi)")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for artifacts (default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Size of the worker pool.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for randomized steps; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long = "tau-min", global = true)]
    tau_min: Option<f64>,
    #[arg(long = "tau-max", global = true)]
    tau_max: Option<f64>,
    /// Zero tolerance for signs and coefficients.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sign changes of Im p along a family of curves.
    PsiScan {
        #[arg(long)]
        fixture: Option<String>,
    },
    /// Minimal interval, L estimate, rho certificate and approximating sequence.
    Minimal {
        #[arg(long)]
        fixture: Option<String>,
    },
    /// Factor Q = P E + R at a point and report the first nonvanishing coefficient of R.
    Factor,
    /// Eiconal phase, transport amplitude and residual order.
    Wkb,
    /// Pairings I_tau, decay fit and predicted limit.
    Itau,
    /// Sign grids of Im p for the fixtures as CSV and SVG.
    Fixtures {
        /// Fixture name; repeatable. Defaults to p1 and p2.
        #[arg(long = "name")]
        names: Vec<String>,
    },
    /// Proportionality factor mu with Q* = mu P* at a point.
    Proportionality,
    /// Iterated Hamilton derivatives and the transport identity for mu.
    Commutator,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut flags = Flags {
        config: cli.config,
        out: cli.out,
        workers: cli.workers,
        seed: cli.seed,
        tau_min: cli.tau_min,
        tau_max: cli.tau_max,
        tol: cli.tol,
        ..Default::default()
    };
    let cmd = match cli.command {
        Cmd::PsiScan { fixture } => {
            flags.fixture = fixture;
            Command::PsiScan
        }
        Cmd::Minimal { fixture } => {
            flags.fixture = fixture;
            Command::Minimal
        }
        Cmd::Factor => Command::Factor,
        Cmd::Wkb => Command::Wkb,
        Cmd::Itau => Command::Itau,
        Cmd::Fixtures { names } => {
            flags.names = names;
            Command::Fixtures
        }
        Cmd::Proportionality => Command::Proportionality,
        Cmd::Commutator => Command::Commutator,
    };
    match run(cmd, &flags) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for a in &outcome.artifacts {
                println!("wrote {}", a.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
