use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use finsler_cli::{execute, Command, Format, GeodesicConfig, RunConfig};

#[derive(Parser)]
#[command(name = "finsler", version, about = "Numerical verification of concurrent fields and the energy beta-change")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Metric data, connection identities and probe coefficients.
    Analyze(Common),
    /// Concurrency of zeta and the identity suite it implies.
    VerifyConcurrent(Common),
    /// Transformation laws of the energy beta-change.
    BetaChange(Common),
    /// Special-space verdicts and the implication audit.
    Classify(Common),
    /// RK4 integration of the spray.
    Geodesic(GeodesicArgs),
}

#[derive(Args)]
struct Common {
    /// Model file, or `fixture:NAME` for a built-in model.
    #[arg(long)]
    model: String,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Defaults depend on the command.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct GeodesicArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    x0: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    y0: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    t_end: f64,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
}

fn config(c: Common, command: Command, geodesic: Option<GeodesicConfig>) -> RunConfig {
    RunConfig {
        model: c.model,
        command,
        samples: c.samples,
        seed: c.seed,
        tol: c.tol.unwrap_or(command.default_tol()),
        out: c.out,
        format: c.format,
        geodesic,
    }
}

fn main() -> ExitCode {
    let cfg = match Cli::parse().command {
        Cmd::Analyze(c) => config(c, Command::Analyze, None),
        Cmd::VerifyConcurrent(c) => config(c, Command::VerifyConcurrent, None),
        Cmd::BetaChange(c) => config(c, Command::BetaChange, None),
        Cmd::Classify(c) => config(c, Command::Classify, None),
        Cmd::Geodesic(g) => {
            let gc = GeodesicConfig { x0: g.x0, y0: g.y0, t_end: g.t_end, steps: g.steps };
            config(g.common, Command::Geodesic, Some(gc))
        }
    };
    ExitCode::from(execute(&cfg) as u8)
}
