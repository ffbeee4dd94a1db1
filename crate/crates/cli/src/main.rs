mod commands;
mod error;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use streamplan_core::Point;

use commands::RunContext;

/// Boundary-fitted grid generation, planning-space A* and MPC tracking.
#[derive(Debug, Parser)]
#[command(name = "streamplan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Environment JSON file. Defaults to the bundled benchmark.
    #[arg(long)]
    env: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Recorded in manifest.json. Every subcommand is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct Query {
    /// Start point `x,y` in meters.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    start: Option<Point>,
    /// Goal point `x,y` in meters.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    goal: Option<Point>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the channel grids; writes grid.csv, diagnostics.json, grid.svg.
    Grid {
        #[command(flatten)]
        common: Common,
        /// Solver settings JSON: {max_iterations, tolerance, omega}.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Plan on the planning-space lattice; writes path.csv, comparison.json, plan.svg.
    Plan {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        query: Query,
        /// Also run the occupancy-grid baseline.
        #[arg(long)]
        baseline: bool,
    },
    /// Track a planned path; writes trajectory.csv, track.svg, controls.svg.
    Track {
        #[command(flatten)]
        common: Common,
        /// Path CSV as written by `plan`.
        #[arg(long)]
        path: PathBuf,
        /// Controller settings JSON.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// `plan --baseline`.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        query: Query,
    },
}

fn parse_point(s: &str) -> Result<Point, String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected `x,y`, got `{s}`"))?;
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("`{t}` is not a finite number"))
    };
    Ok(Point::new(num(x)?, num(y)?))
}

fn context(c: Common) -> RunContext {
    RunContext {
        env: c.env,
        out: c.out,
        seed: c.seed,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Grid { common, config } => commands::grid(&context(common), config.as_deref()),
        Command::Plan {
            common,
            query,
            baseline,
        } => commands::plan(&context(common), query.start, query.goal, baseline, "plan"),
        Command::Track { common, path, config } => commands::track(&context(common), &path, config.as_deref()),
        Command::Compare { common, query } => {
            commands::plan(&context(common), query.start, query.goal, true, "compare")
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
