//! Quadcopter tracking: linear external/internal dynamics, quadrangle safety
//! regions, condensed MPC and its QP.

mod dynamics;
mod mpc;
mod qp;
mod quadrangle;
mod sim;

pub use dynamics::{
    place_double_pole, spectral_radius, step_external, step_internal, ExternalDynamics, ExternalState,
    ExternalStateExt, InternalDynamics, Snap,
};
pub use mpc::{assemble_qp, build_prediction, Prediction};
pub use qp::{solve_qp, solve_qp_with, QpError, QpOptions, QpProblem, QpSolution, QpStatus};
pub use quadrangle::{build_quadrangle, safety_check, QuadrangleConstraint};
pub use sim::{initial_state, run_tracking_sim, TrackingLog, TrackingRow};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atlas::{AtlasError, NodeId};

#[derive(Debug, Error)]
pub enum ControlError {
    #[error("invalid control configuration: {0}")]
    InvalidConfig(String),
    #[error("yaw closed loop is not stable (spectral radius {spectral_radius})")]
    UnstableYaw { spectral_radius: f64 },
    #[error("cannot build quadrangle at ({}, {}): {reason}", node.row, node.col)]
    Quadrangle { node: NodeId, reason: String },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("path has no waypoints")]
    EmptyPath,
    #[error("QP infeasible at step {step} ({} row {row})", if *equality { "equality" } else { "inequality" })]
    Infeasible { step: usize, row: usize, equality: bool },
    #[error("QP iteration limit reached at step {step}")]
    IterationLimit { step: usize },
    #[error(transparent)]
    Qp(#[from] QpError),
    #[error(transparent)]
    Atlas(#[from] AtlasError),
    #[error("control config: {0}")]
    Schema(#[from] serde_json::Error),
}

/// Tracking controller settings. Optional fields fall back to their defaults
/// when absent from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpcConfig {
    /// Control period (s).
    pub dt: f64,
    /// Prediction horizon in steps.
    pub n_tau: usize,
    /// Tracking-error weight relative to control effort.
    pub beta: f64,
    /// Diagonal of `f_h`: either one `[fx, fy]` pair shared by every
    /// horizon step, or `2 * n_tau` entries.
    pub f_diag: Vec<f64>,
    /// Flight altitude (m).
    pub z0: f64,
    /// Yaw feedback gains.
    pub k_psi: [f64; 2],
    pub max_steps: usize,
    /// Control steps spent on each desired waypoint before advancing.
    #[serde(default = "default_steps_per_waypoint")]
    pub steps_per_waypoint: usize,
    /// Initial yaw angle and rate.
    #[serde(default)]
    pub yaw0: [f64; 2],
}

pub const DEFAULT_DT: f64 = 0.05;
pub const DEFAULT_YAW_POLE: f64 = 0.9;

fn default_steps_per_waypoint() -> usize {
    MpcConfig::default().steps_per_waypoint
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            n_tau: 10,
            beta: 50.0,
            f_diag: vec![1.0, 1.0],
            z0: 10.0,
            k_psi: place_double_pole(DEFAULT_DT, DEFAULT_YAW_POLE),
            max_steps: 20_000,
            steps_per_waypoint: 10,
            yaw0: [0.0, 0.0],
        }
    }
}

impl MpcConfig {
    pub fn from_json(text: &str) -> Result<Self, ControlError> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        let bad = |m: &str| Err(ControlError::InvalidConfig(m.into()));
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad("dt must be positive");
        }
        if self.n_tau == 0 {
            return bad("n_tau must be at least 1");
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return bad("beta must be positive");
        }
        if self.f_diag.len() != 2 && self.f_diag.len() != 2 * self.n_tau {
            return bad("f_diag needs 2 or 2*n_tau entries");
        }
        if !self.f_diag.iter().all(|f| *f >= 0.0 && f.is_finite()) {
            return bad("f_diag entries must be non-negative");
        }
        if !self.z0.is_finite() || !self.yaw0.iter().all(|v| v.is_finite()) {
            return bad("z0 and yaw0 must be finite");
        }
        if self.steps_per_waypoint == 0 {
            return bad("steps_per_waypoint must be at least 1");
        }
        InternalDynamics::new(self.dt, self.k_psi)?;
        Ok(())
    }

    /// `(fx, fy)` for horizon step `h`.
    pub fn weight(&self, h: usize) -> (f64, f64) {
        if self.f_diag.len() == 2 {
            (self.f_diag[0], self.f_diag[1])
        } else {
            (self.f_diag[2 * h], self.f_diag[2 * h + 1])
        }
    }
}
