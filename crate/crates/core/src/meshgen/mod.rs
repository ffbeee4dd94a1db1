//! Boundary-fitted grid generation.
//!
//! Each navigable channel is mapped onto a uniform `m_phi x m_j` index lattice
//! by solving the inverted Laplace equations
//!
//! ```text
//! a x_pp - 2 b x_pq + c x_qq = 0
//! a y_pp - 2 b y_pq + c y_qq = 0
//! a = x_q^2 + y_q^2,  b = x_p x_q + y_p y_q,  c = x_p^2 + y_p^2
//! ```
//!
//! (`p` = potential direction, `q` = stream direction) as a Dirichlet problem
//! whose boundary data are arc-length uniform nodes on the channel's four
//! boundary polylines.

mod boundary;
mod elliptic;
mod tfi;

pub use boundary::{distribute_boundary_nodes, interpolate_node, locate_on_segment, BoundaryNodeSet, BoundaryNodes};
pub use elliptic::{jacobian_field, metric_coefficients, solve_elliptic, MetricCoefficients, SolverConfig};
pub use tfi::tfi_initialize;

use crate::env::Environment;
use ndarray::Array2;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("need at least 2 boundary nodes, got {n}")]
    NodeCount { n: usize },
    #[error("zero-length polyline")]
    ZeroLength,
    #[error("degenerate segment with cumulative lengths [{start}, {end}]")]
    DegenerateSegment { start: f64, end: f64 },
    #[error("inconsistent boundary node counts: {0}")]
    InconsistentCounts(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(
        "channel {channel}: no convergence after {iterations} iterations (max update {max_update:e}, residual {residual:e})"
    )]
    NotConverged {
        channel: usize,
        iterations: usize,
        max_update: f64,
        residual: f64,
    },
    #[error("channel {channel}: folded grid, det J = {min_det_j:e} at node {node:?}")]
    FoldedGrid {
        channel: usize,
        min_det_j: f64,
        node: (usize, usize),
    },
}

impl MeshError {
    pub fn channel(&self) -> Option<usize> {
        match self {
            MeshError::NotConverged { channel, .. } | MeshError::FoldedGrid { channel, .. } => Some(*channel),
            _ => None,
        }
    }
}

/// Convergence record of one channel solve.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    /// Max absolute discretized residual over interior nodes.
    pub residual: f64,
    pub max_update: f64,
    /// Max nodal update of every sweep, in order.
    pub update_history: Vec<f64>,
    /// `None` when the grid has no interior nodes.
    pub min_det_j: Option<f64>,
}

/// Node positions of one channel over its index lattice; arrays are indexed
/// `[column, row]`, shape `m_phi x m_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelGrid {
    /// 1-based channel index.
    pub channel: usize,
    pub x: Array2<f64>,
    pub y: Array2<f64>,
    /// Boundary nodes lying on obstacle boundary segments.
    pub on_obstacle: Array2<bool>,
    pub diagnostics: SolveDiagnostics,
}

impl ChannelGrid {
    pub fn columns(&self) -> usize {
        self.x.nrows()
    }

    pub fn rows(&self) -> usize {
        self.x.ncols()
    }

    pub fn position(&self, column: usize, row: usize) -> crate::geometry::Point {
        crate::geometry::Point::new(self.x[[column, row]], self.y[[column, row]])
    }
}

/// Distributes boundary nodes, initializes and solves every channel of the
/// environment. Channels are solved in parallel; each solve is sequential so
/// the output does not depend on scheduling.
pub fn generate_channel_grids(env: &Environment, config: &SolverConfig) -> Result<Vec<ChannelGrid>, MeshError> {
    config.validate()?;
    env.space
        .channels
        .par_iter()
        .map(|channel| {
            let m_rows = env.layout.m_rows[channel.index - 1];
            let nodes = BoundaryNodeSet::for_channel(channel, env.layout.m_phi, m_rows)?;
            let init = tfi_initialize(channel.index, &nodes)?;
            solve_elliptic(init, config).map(|(grid, _)| grid)
        })
        .collect()
}
