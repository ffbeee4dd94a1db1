//! CSV and JSON dumps. Floats in CSV are written with 17 significant digits
//! so every value round-trips exactly.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::atlas::{InterfaceSide, NodeId, PlanningAtlas};
use crate::control::TrackingLog;
use crate::env::PlanningSpaceLayout;
use crate::geometry::Point;
use crate::meshgen::ChannelGrid;
use crate::search::{ComparisonReport, PlannedPath, Waypoint};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// 17 significant digits in scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub const GRID_HEADER: &str = "channel,i,k,phi,psi,x,y,on_obstacle";
pub const ATLAS_HEADER: &str = "row,col,x_below,y_below,x_above,y_above,forbidden";
pub const PATH_HEADER: &str = "k,row,col,x,y";
pub const TRAJECTORY_HEADER: &str = "k,x,y,z,vx,vy,vz,ux,uy,uz,psi,slack_min";

pub fn write_grid_csv<W: Write>(
    out: &mut W,
    layout: &PlanningSpaceLayout,
    grids: &[ChannelGrid],
) -> Result<(), IoError> {
    writeln!(out, "{GRID_HEADER}")?;
    for g in grids {
        for k in 0..g.rows() {
            for i in 0..g.columns() {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    g.channel,
                    i,
                    k,
                    fmt_f64(layout.phi(i)),
                    fmt_f64(layout.psi(g.channel, k)),
                    fmt_f64(g.x[[i, k]]),
                    fmt_f64(g.y[[i, k]]),
                    g.on_obstacle[[i, k]]
                )?;
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelDiagnostics {
    pub channel: usize,
    pub iterations: usize,
    pub residual: f64,
    pub min_det_j: Option<f64>,
}

pub fn diagnostics(grids: &[ChannelGrid]) -> Vec<ChannelDiagnostics> {
    grids
        .iter()
        .map(|g| ChannelDiagnostics {
            channel: g.channel,
            iterations: g.diagnostics.iterations,
            residual: g.diagnostics.residual,
            min_det_j: g.diagnostics.min_det_j,
        })
        .collect()
}

pub fn diagnostics_json(grids: &[ChannelGrid]) -> String {
    serde_json::to_string_pretty(&diagnostics(grids)).expect("diagnostics serialize")
}

pub fn write_atlas_csv<W: Write>(out: &mut W, atlas: &PlanningAtlas) -> Result<(), IoError> {
    writeln!(out, "{ATLAS_HEADER}")?;
    for id in atlas.node_ids() {
        let b = atlas
            .physical_position(id, InterfaceSide::Below)
            .expect("node in range");
        let a = atlas
            .physical_position(id, InterfaceSide::Above)
            .expect("node in range");
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            id.row,
            id.col,
            fmt_f64(b.x),
            fmt_f64(b.y),
            fmt_f64(a.x),
            fmt_f64(a.y),
            atlas.is_forbidden(id)
        )?;
    }
    Ok(())
}

pub fn write_path_csv<W: Write>(out: &mut W, waypoints: &[Waypoint]) -> Result<(), IoError> {
    writeln!(out, "{PATH_HEADER}")?;
    for (k, w) in waypoints.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{}",
            k,
            w.node.row,
            w.node.col,
            fmt_f64(w.position.x),
            fmt_f64(w.position.y)
        )?;
    }
    Ok(())
}

/// Parses a path dump. Line numbers in errors are 1-based and count the
/// header.
pub fn parse_path_csv(text: &str) -> Result<Vec<Waypoint>, IoError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == PATH_HEADER => {}
        Some((_, h)) => {
            return Err(IoError::Parse {
                line: 1,
                message: format!("expected header `{PATH_HEADER}`, found `{}`", h.trim()),
            })
        }
        None => {
            return Err(IoError::Parse {
                line: 1,
                message: "empty path file".into(),
            })
        }
    }
    let mut out = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(IoError::Parse {
                line,
                message: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        let int = |s: &str, name: &str| {
            s.parse::<usize>().map_err(|_| IoError::Parse {
                line,
                message: format!("{name} `{s}` is not a non-negative integer"),
            })
        };
        let float = |s: &str, name: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| IoError::Parse {
                    line,
                    message: format!("{name} `{s}` is not a finite number"),
                })
        };
        let k = int(fields[0], "k")?;
        if k != out.len() {
            return Err(IoError::Parse {
                line,
                message: format!("expected k = {}, found {k}", out.len()),
            });
        }
        out.push(Waypoint {
            node: NodeId::new(int(fields[1], "row")?, int(fields[2], "col")?),
            position: Point::new(float(fields[3], "x")?, float(fields[4], "y")?),
        });
    }
    Ok(out)
}

pub fn comparison_json(report: &ComparisonReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

/// Report for a sandwich-only run: the baseline fields are absent.
pub fn sandwich_only_json(path: &PlannedPath) -> String {
    serde_json::to_string_pretty(&serde_json::json!({ "sandwich_length": path.length })).expect("report serializes")
}

pub fn write_trajectory_csv<W: Write>(out: &mut W, log: &TrackingLog) -> Result<(), IoError> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    for r in &log.rows {
        let s = &r.state;
        let cols = [
            s[0],
            s[1],
            s[2],
            s[3],
            s[4],
            s[5],
            r.control[0],
            r.control[1],
            r.control[2],
            r.yaw[0],
            r.slack_min,
        ];
        let body: Vec<String> = cols.iter().map(|&v| fmt_f64(v)).collect();
        writeln!(out, "{},{}", r.k, body.join(","))?;
    }
    Ok(())
}
