use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use streamplan_core::atlas::{stitch_channels, InterfaceSide, DEFAULT_EPSILON};
use streamplan_core::benchmark::{benchmark_environment, benchmark_query};
use streamplan_core::control::{initial_state, run_tracking_sim, MpcConfig};
use streamplan_core::io;
use streamplan_core::meshgen::{generate_channel_grids, ChannelGrid, SolverConfig};
use streamplan_core::search::{
    astar_motion_space_baseline, astar_planning_space, rasterize_occupancy, ComparisonReport, PathQuery, PlannedPath,
    Waypoint,
};
use streamplan_core::{Environment, PlanningAtlas, Point};

use crate::error::CliError;
use crate::svg;

/// Slack below which a logged position counts as outside its quadrangle.
pub const SAFETY_TOLERANCE: f64 = -1e-8;

/// Flags shared by every subcommand.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub env: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    environment: String,
    output: String,
    seed: u64,
    parameters: serde_json::Value,
}

/// Solver settings accepted by `grid --config`; omitted fields keep their
/// defaults.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SolverConfigFile {
    max_iterations: usize,
    tolerance: f64,
    omega: f64,
}

impl Default for SolverConfigFile {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            max_iterations: d.max_iterations,
            tolerance: d.tolerance,
            omega: d.omega,
        }
    }
}

const BUNDLED: &str = "bundled benchmark";

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn load_environment(ctx: &RunContext) -> Result<(Environment, String), CliError> {
    match &ctx.env {
        None => Ok((benchmark_environment(), BUNDLED.to_string())),
        Some(path) => {
            let env = Environment::from_json(&read(path)?)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            Ok((env, path.display().to_string()))
        }
    }
}

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn prepare_out(ctx: &RunContext) -> Result<(), CliError> {
    fs::create_dir_all(&ctx.out).map_err(|e| CliError::Validation(format!("{}: {e}", ctx.out.display())))
}

fn write_manifest(
    ctx: &RunContext,
    command: &str,
    environment: String,
    parameters: serde_json::Value,
) -> Result<(), CliError> {
    let manifest = RunManifest {
        command,
        environment,
        output: ctx.out.display().to_string(),
        seed: ctx.seed,
        parameters,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write(&ctx.out, "manifest.json", text + "\n")
}

fn build_atlas(env: &Environment, config: &SolverConfig) -> Result<(Vec<ChannelGrid>, PlanningAtlas), CliError> {
    let grids = generate_channel_grids(env, config)?;
    let atlas = stitch_channels(&grids, DEFAULT_EPSILON)?;
    Ok((grids, atlas))
}

fn csv<F>(f: F) -> Result<Vec<u8>, CliError>
where
    F: FnOnce(&mut Vec<u8>) -> Result<(), io::IoError>,
{
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

pub fn grid(ctx: &RunContext, config: Option<&Path>) -> Result<(), CliError> {
    let (env, source) = load_environment(ctx)?;
    let file: SolverConfigFile = match config {
        Some(path) => {
            serde_json::from_str(&read(path)?).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
        }
        None => SolverConfigFile::default(),
    };
    let solver = SolverConfig {
        max_iterations: file.max_iterations,
        tolerance: file.tolerance,
        omega: file.omega,
    };
    let grids = generate_channel_grids(&env, &solver)?;
    prepare_out(ctx)?;
    write(
        &ctx.out,
        "grid.csv",
        csv(|b| io::write_grid_csv(b, &env.layout, &grids))?,
    )?;
    write(&ctx.out, "diagnostics.json", io::diagnostics_json(&grids) + "\n")?;
    write(&ctx.out, "grid.svg", svg::grid_svg(&env.space, &grids))?;
    write_manifest(
        ctx,
        "grid",
        source,
        serde_json::json!({
            "max_iterations": solver.max_iterations,
            "tolerance": solver.tolerance,
            "omega": solver.omega,
        }),
    )?;
    for g in &grids {
        let det = g
            .diagnostics
            .min_det_j
            .map_or("n/a".to_string(), |d| format!("{d:.6e}"));
        println!(
            "channel {}: {} sweeps, residual {:.3e}, min det J {det}",
            g.channel, g.diagnostics.iterations, g.diagnostics.residual
        );
    }
    Ok(())
}

fn resolve_query(source: &str, start: Option<Point>, goal: Option<Point>) -> Result<PathQuery, CliError> {
    match (start, goal) {
        (Some(s), Some(g)) => Ok(PathQuery::new(s, g)),
        (None, None) if source == BUNDLED => Ok(benchmark_query()),
        _ => Err(CliError::Validation(
            "--start and --goal are required unless planning on the bundled benchmark".into(),
        )),
    }
}

pub fn plan(
    ctx: &RunContext,
    start: Option<Point>,
    goal: Option<Point>,
    baseline: bool,
    command: &str,
) -> Result<(), CliError> {
    let (env, source) = load_environment(ctx)?;
    let query = resolve_query(&source, start, goal)?;
    query.validate(&env.space)?;
    let (_, atlas) = build_atlas(&env, &SolverConfig::default())?;
    let sandwich = astar_planning_space(&atlas, &query)?;
    let base: Option<PlannedPath> = if baseline {
        let grid = rasterize_occupancy(&env.space, atlas.min_node_spacing())?;
        Some(astar_motion_space_baseline(&grid, &query)?)
    } else {
        None
    };

    prepare_out(ctx)?;
    write(
        &ctx.out,
        "path.csv",
        csv(|b| io::write_path_csv(b, &sandwich.waypoints))?,
    )?;
    let report = match &base {
        Some(b) => {
            write(
                &ctx.out,
                "baseline_path.csv",
                csv(|buf| io::write_path_csv(buf, &b.waypoints))?,
            )?;
            let r = ComparisonReport::new(sandwich.length, b.length);
            println!(
                "sandwich {:.6} m, baseline {:.6} m, reduction {:.4}%",
                r.sandwich_length, r.baseline_length, r.reduction_percent
            );
            io::comparison_json(&r)
        }
        None => {
            println!(
                "sandwich {:.6} m, {} waypoints",
                sandwich.length,
                sandwich.waypoints.len()
            );
            io::sandwich_only_json(&sandwich)
        }
    };
    write(&ctx.out, "comparison.json", report + "\n")?;

    let forbidden: Vec<Point> = atlas
        .forbidden_nodes()
        .into_iter()
        .map(|id| {
            atlas
                .physical_position(id, InterfaceSide::Below)
                .expect("node in range")
        })
        .collect();
    let base_points = base.as_ref().map(|b| b.positions());
    write(
        &ctx.out,
        "plan.svg",
        svg::plan_svg(&env.space, &forbidden, &sandwich.positions(), base_points.as_deref()),
    )?;
    write_manifest(
        ctx,
        command,
        source,
        serde_json::json!({
            "start": query.start,
            "goal": query.goal,
            "baseline": baseline,
        }),
    )
}

/// Checks that every waypoint names an in-range, non-forbidden node at its
/// mapped position and that consecutive nodes are lattice neighbours.
fn check_path(atlas: &PlanningAtlas, path: &[Waypoint]) -> Result<(), CliError> {
    if path.is_empty() {
        return Err(CliError::Validation("path file has no waypoints".into()));
    }
    for (k, w) in path.iter().enumerate() {
        let fail = |msg: String| CliError::Validation(format!("path line {}: {msg}", k + 2));
        if !atlas.contains(w.node) {
            return Err(fail(format!(
                "node ({}, {}) is outside the atlas",
                w.node.row, w.node.col
            )));
        }
        if atlas.is_forbidden(w.node) {
            return Err(fail(format!("node ({}, {}) is forbidden", w.node.row, w.node.col)));
        }
        let near = [InterfaceSide::Below, InterfaceSide::Above].iter().any(|&side| {
            let p = atlas.physical_position(w.node, side).expect("node in range");
            p.distance(w.position) <= 1e-9 * p.norm().max(1.0)
        });
        if !near {
            return Err(fail(format!(
                "position ({}, {}) does not match node ({}, {})",
                w.position.x, w.position.y, w.node.row, w.node.col
            )));
        }
        if k > 0 {
            let prev = path[k - 1].node;
            if prev.row.abs_diff(w.node.row) > 1 || prev.col.abs_diff(w.node.col) > 1 {
                return Err(fail("consecutive waypoints are not lattice neighbours".into()));
            }
        }
    }
    Ok(())
}

pub fn track(ctx: &RunContext, path_file: &Path, config: Option<&Path>) -> Result<(), CliError> {
    let (env, source) = load_environment(ctx)?;
    let config = match config {
        Some(p) => {
            MpcConfig::from_json(&read(p)?).map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?
        }
        None => MpcConfig::default(),
    };
    config.validate()?;
    let path = io::parse_path_csv(&read(path_file)?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path_file.display())))?;
    let (_, atlas) = build_atlas(&env, &SolverConfig::default())?;
    check_path(&atlas, &path)?;

    let log = run_tracking_sim(&atlas, &path, &config, &initial_state(&path, &config)?)?;

    prepare_out(ctx)?;
    write(&ctx.out, "trajectory.csv", csv(|b| io::write_trajectory_csv(b, &log))?)?;
    let desired: Vec<Point> = path.iter().map(|w| w.position).collect();
    let quads: Vec<[Point; 4]> = log.quadrangles.iter().map(|q| q.vertices).collect();
    write(
        &ctx.out,
        "track.svg",
        svg::track_svg(&env.space, &quads, &desired, &log.positions()),
    )?;
    let series: Vec<(&str, Vec<f64>)> = ["ux", "uy", "uz"]
        .iter()
        .enumerate()
        .map(|(axis, &name)| (name, log.rows.iter().map(|r| r.control[axis]).collect()))
        .collect();
    write(&ctx.out, "controls.svg", svg::controls_svg(&series))?;
    write_manifest(
        ctx,
        "track",
        source,
        serde_json::json!({
            "path": path_file.display().to_string(),
            "config": serde_json::from_str::<serde_json::Value>(&config.to_json()).expect("config is JSON"),
        }),
    )?;

    let slack = log.min_slack();
    println!(
        "{} steps, reached {}, min slack {slack:.3e}, max |z - z0| {:.3e}",
        log.rows.len(),
        log.reached,
        log.max_altitude_error(config.z0)
    );
    if slack < SAFETY_TOLERANCE {
        let worst = log
            .rows
            .iter()
            .find(|r| r.slack_min < SAFETY_TOLERANCE)
            .expect("a violating row exists");
        return Err(CliError::Safety(format!(
            "position left its quadrangle at step {} (slack {:.3e})",
            worst.k, worst.slack_min
        )));
    }
    if !log.reached {
        return Err(CliError::Solver(format!(
            "final waypoint not reached within {} steps",
            config.max_steps
        )));
    }
    Ok(())
}
