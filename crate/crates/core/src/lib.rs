//! Motion planning over a boundary-fitted planning space and safe MPC
//! tracking for a quadcopter.
//!
//! The pipeline: an [`env::Environment`] is split into navigable channels,
//! each channel gets an elliptic grid ([`meshgen`]), the grids are stitched
//! into a [`atlas::PlanningAtlas`], A* runs on the atlas ([`search`]), and the
//! resulting waypoints are tracked by a constrained MPC ([`control`]).

// `!(x > 0.0)` style guards are used deliberately so NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atlas;
pub mod benchmark;
pub mod control;
pub mod env;
pub mod geometry;
pub mod io;
pub mod meshgen;
pub mod search;

pub use atlas::{stitch_channels, InterfaceSide, NodeId, PlanningAtlas};
pub use control::{MpcConfig, TrackingLog};
pub use env::{Environment, MotionSpace, PlanningSpaceLayout};
pub use geometry::{Point, Rect};
pub use meshgen::{generate_channel_grids, ChannelGrid, SolverConfig};
pub use search::{ComparisonReport, PathQuery, PlannedPath, Waypoint};
