//! Shortest paths on the planning atlas and on a rasterized motion space.

mod astar;
mod occupancy;

pub use occupancy::{
    astar_cells, astar_motion_space_baseline, rasterize_occupancy, LatticeSteps, OccupancyGrid, BASELINE_SOLVER,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atlas::{AtlasError, InterfaceSide, NodeId, PlanningAtlas};
use crate::env::MotionSpace;
use crate::geometry::Point;
use astar::{astar, Outcome, SearchSpace};

pub const SANDWICH_SOLVER: &str = "planning-space-astar";

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("{which} point ({x}, {y}) is outside the navigable space")]
    NotNavigable { which: &'static str, x: f64, y: f64 },
    #[error("no path found by {solver} after expanding {expanded} nodes")]
    NoPath { solver: &'static str, expanded: usize },
    #[error("atlas has no non-forbidden node")]
    NoFreeNode,
    #[error("start cell is blocked")]
    StartBlocked,
    #[error("goal cell is blocked")]
    GoalBlocked,
    #[error("cell size must be positive and finite, got {0}")]
    InvalidCellSize(f64),
    #[error("invalid occupancy grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Atlas(#[from] AtlasError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathQuery {
    pub start: Point,
    pub goal: Point,
}

impl PathQuery {
    pub fn new(start: Point, goal: Point) -> Self {
        Self { start, goal }
    }

    /// Both endpoints must lie in the free part of the motion space.
    pub fn validate(&self, space: &MotionSpace) -> Result<(), SearchError> {
        for (which, p) in [("start", self.start), ("goal", self.goal)] {
            if !p.is_finite() || !space.is_navigable(p) {
                return Err(SearchError::NotNavigable { which, x: p.x, y: p.y });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub node: NodeId,
    pub position: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedPath {
    pub waypoints: Vec<Waypoint>,
    /// Sum of Euclidean distances between consecutive waypoint positions.
    pub length: f64,
    /// Cost the search minimized; equals `length` up to interface mismatch.
    pub cost: f64,
    pub expanded: usize,
    pub solver: &'static str,
}

impl PlannedPath {
    pub(crate) fn new(waypoints: Vec<Waypoint>, cost: f64, expanded: usize, solver: &'static str) -> Self {
        let positions: Vec<Point> = waypoints.iter().map(|w| w.position).collect();
        Self {
            length: path_length(&positions),
            waypoints,
            cost,
            expanded,
            solver,
        }
    }

    pub fn positions(&self) -> Vec<Point> {
        self.waypoints.iter().map(|w| w.position).collect()
    }

    /// Smallest gap between consecutive waypoints; infinite for a single point.
    pub fn min_spacing(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| w[0].position.distance(w[1].position))
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn path_length(points: &[Point]) -> f64 {
    points
        .windows(2)
        .map(|w| w[0].distance(w[1]))
        .fold(0.0, |acc, d| acc + d)
}

/// Nearest non-forbidden node by physical distance (either copy of an
/// interface node). Ties go to the smaller `(row, col)`.
pub fn snap_to_node(atlas: &PlanningAtlas, p: Point) -> Result<NodeId, SearchError> {
    let mut best: Option<(f64, NodeId)> = None;
    for id in atlas.node_ids() {
        if atlas.is_forbidden(id) {
            continue;
        }
        let below = atlas.physical_position(id, InterfaceSide::Below)?;
        let above = atlas.physical_position(id, InterfaceSide::Above)?;
        let d = below.distance(p).min(above.distance(p));
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, id));
        }
    }
    best.map(|(_, id)| id).ok_or(SearchError::NoFreeNode)
}

struct AtlasSpace<'a> {
    atlas: &'a PlanningAtlas,
    goal: Point,
}

impl SearchSpace for AtlasSpace<'_> {
    type Cost = f64;

    fn node_count(&self) -> usize {
        self.atlas.len()
    }

    fn index(&self, node: NodeId) -> usize {
        node.row * self.atlas.cols() + node.col
    }

    fn successors(&self, node: NodeId, out: &mut Vec<(NodeId, f64)>) {
        // callers only push non-forbidden, in-range nodes
        let _ = self.atlas.for_each_neighbor(node, |n, c| out.push((n, c)));
    }

    fn extend(&self, cost: f64, step: f64) -> f64 {
        cost + step
    }

    fn cost_value(&self, cost: f64) -> f64 {
        cost
    }

    fn heuristic(&self, node: NodeId) -> f64 {
        self.atlas
            .physical_position(node, InterfaceSide::Below)
            .map(|p| p.distance(self.goal))
            .unwrap_or(0.0)
    }
}

/// A* on the planning atlas between two lattice nodes.
pub fn astar_between(atlas: &PlanningAtlas, start: NodeId, goal: NodeId) -> Result<PlannedPath, SearchError> {
    for id in [start, goal] {
        if !atlas.contains(id) {
            return Err(AtlasError::OutOfRange {
                row: id.row,
                col: id.col,
                rows: atlas.rows(),
                cols: atlas.cols(),
            }
            .into());
        }
        if atlas.is_forbidden(id) {
            return Err(AtlasError::Forbidden {
                row: id.row,
                col: id.col,
            }
            .into());
        }
    }
    let space = AtlasSpace {
        atlas,
        goal: atlas.physical_position(goal, InterfaceSide::Below)?,
    };
    match astar(&space, start, goal) {
        Outcome::Found(found) => {
            let waypoints = found
                .nodes
                .iter()
                .map(|&node| {
                    atlas
                        .physical_position(node, InterfaceSide::Below)
                        .map(|position| Waypoint { node, position })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(PlannedPath::new(waypoints, found.cost, found.expanded, SANDWICH_SOLVER))
        }
        Outcome::Unreachable { expanded } => Err(SearchError::NoPath {
            solver: SANDWICH_SOLVER,
            expanded,
        }),
    }
}

/// Snaps the query endpoints to atlas nodes and searches between them.
pub fn astar_planning_space(atlas: &PlanningAtlas, query: &PathQuery) -> Result<PlannedPath, SearchError> {
    let start = snap_to_node(atlas, query.start)?;
    let goal = snap_to_node(atlas, query.goal)?;
    astar_between(atlas, start, goal)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub sandwich_length: f64,
    pub baseline_length: f64,
    pub reduction_percent: f64,
}

impl ComparisonReport {
    /// The reduction is 0 when the baseline path has zero length.
    pub fn new(sandwich_length: f64, baseline_length: f64) -> Self {
        let reduction_percent = if baseline_length > 0.0 {
            100.0 * (baseline_length - sandwich_length) / baseline_length
        } else {
            0.0
        };
        Self {
            sandwich_length,
            baseline_length,
            reduction_percent,
        }
    }
}

/// Plans the same query on the atlas and on an occupancy grid whose cell
/// size is the atlas's smallest node spacing.
pub fn compare_planners(
    atlas: &PlanningAtlas,
    space: &MotionSpace,
    query: &PathQuery,
) -> Result<(PlannedPath, PlannedPath, ComparisonReport), SearchError> {
    query.validate(space)?;
    let sandwich = astar_planning_space(atlas, query)?;
    let grid = rasterize_occupancy(space, atlas.min_node_spacing())?;
    let baseline = astar_motion_space_baseline(&grid, query)?;
    let report = ComparisonReport::new(sandwich.length, baseline.length);
    Ok((sandwich, baseline, report))
}
