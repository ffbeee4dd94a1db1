//! Rasterized motion space and the regular 8-connected A* baseline.

use super::astar::{astar, Outcome, SearchSpace};
use super::{PathQuery, PlannedPath, SearchError, Waypoint};
use crate::atlas::NodeId;
use crate::env::MotionSpace;
use crate::geometry::{point_in_polygon, Point};
use std::f64::consts::SQRT_2;

pub const BASELINE_SOLVER: &str = "motion-space-astar";

/// Square cells over the bounds rectangle; `NodeId` rows count up from the
/// bottom edge.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub origin: Point,
    pub cell_size: f64,
    pub rows: usize,
    pub cols: usize,
    blocked: Vec<bool>,
}

impl OccupancyGrid {
    /// Builds a grid directly from a row-major blocked mask.
    pub fn from_mask(
        origin: Point,
        cell_size: f64,
        rows: usize,
        cols: usize,
        blocked: Vec<bool>,
    ) -> Result<Self, SearchError> {
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(SearchError::InvalidCellSize(cell_size));
        }
        if blocked.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(SearchError::InvalidGrid(
                "mask length does not match rows x cols".into(),
            ));
        }
        Ok(Self {
            origin,
            cell_size,
            rows,
            cols,
            blocked,
        })
    }

    pub fn center(&self, id: NodeId) -> Point {
        Point::new(
            self.origin.x + (id.col as f64 + 0.5) * self.cell_size,
            self.origin.y + (id.row as f64 + 0.5) * self.cell_size,
        )
    }

    /// Cell containing `p`, clamped to the grid.
    pub fn cell_of(&self, p: Point) -> NodeId {
        let clamp = |v: f64, n: usize| (v.floor().max(0.0) as usize).min(n - 1);
        NodeId::new(
            clamp((p.y - self.origin.y) / self.cell_size, self.rows),
            clamp((p.x - self.origin.x) / self.cell_size, self.cols),
        )
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.row < self.rows && id.col < self.cols
    }

    /// Out-of-range cells count as blocked.
    pub fn is_blocked(&self, id: NodeId) -> bool {
        !self.contains(id) || self.blocked[id.row * self.cols + id.col]
    }

    pub fn blocked_count(&self) -> usize {
        self.blocked.iter().filter(|&&b| b).count()
    }

    /// Free 8-connected neighbours; diagonals may not squeeze between two
    /// cells when either is blocked.
    pub fn neighbors(&self, id: NodeId) -> Vec<(NodeId, LatticeSteps)> {
        let mut out = Vec::with_capacity(8);
        self.push_neighbors(id, &mut out);
        out
    }

    fn push_neighbors(&self, id: NodeId, out: &mut Vec<(NodeId, LatticeSteps)>) {
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let (r, c) = (id.row as i64 + dr, id.col as i64 + dc);
                if r < 0 || c < 0 {
                    continue;
                }
                let n = NodeId::new(r as usize, c as usize);
                if self.is_blocked(n) {
                    continue;
                }
                let step = if dr != 0 && dc != 0 {
                    if self.is_blocked(NodeId::new(n.row, id.col)) || self.is_blocked(NodeId::new(id.row, n.col)) {
                        continue;
                    }
                    LatticeSteps {
                        straight: 0,
                        diagonal: 1,
                    }
                } else {
                    LatticeSteps {
                        straight: 1,
                        diagonal: 0,
                    }
                };
                out.push((n, step));
            }
        }
    }

    /// Exact length of a step-count path in meters.
    pub fn steps_length(&self, steps: LatticeSteps) -> f64 {
        self.cell_size * (steps.straight as f64 + steps.diagonal as f64 * SQRT_2)
    }
}

/// Path cost on the square lattice kept as step counts, so equal-length
/// routes compare bit-identically regardless of summation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LatticeSteps {
    pub straight: u32,
    pub diagonal: u32,
}

/// A cell is blocked iff its center lies in (or on) some obstacle polygon.
pub fn rasterize_occupancy(space: &MotionSpace, cell_size: f64) -> Result<OccupancyGrid, SearchError> {
    if !(cell_size > 0.0) || !cell_size.is_finite() {
        return Err(SearchError::InvalidCellSize(cell_size));
    }
    let b = space.bounds;
    let cols = ((b.width() / cell_size) - 1e-9).ceil().max(1.0) as usize;
    let rows = ((b.height() / cell_size) - 1e-9).ceil().max(1.0) as usize;
    let mut grid = OccupancyGrid {
        origin: Point::new(b.xmin, b.ymin),
        cell_size,
        rows,
        cols,
        blocked: vec![false; rows * cols],
    };
    for obstacle in &space.obstacles {
        let bb = obstacle.bounding_box();
        let lo = grid.cell_of(Point::new(bb.xmin, bb.ymin));
        let hi = grid.cell_of(Point::new(bb.xmax, bb.ymax));
        for r in lo.row..=hi.row {
            for c in lo.col..=hi.col {
                let id = NodeId::new(r, c);
                if point_in_polygon(grid.center(id), &obstacle.polygon, 1e-12) {
                    grid.blocked[r * cols + c] = true;
                }
            }
        }
    }
    Ok(grid)
}

struct BaselineSpace<'a> {
    grid: &'a OccupancyGrid,
    goal: Point,
}

impl SearchSpace for BaselineSpace<'_> {
    type Cost = LatticeSteps;

    fn node_count(&self) -> usize {
        self.grid.rows * self.grid.cols
    }

    fn index(&self, node: NodeId) -> usize {
        node.row * self.grid.cols + node.col
    }

    fn successors(&self, node: NodeId, out: &mut Vec<(NodeId, LatticeSteps)>) {
        self.grid.push_neighbors(node, out);
    }

    fn extend(&self, cost: LatticeSteps, step: LatticeSteps) -> LatticeSteps {
        LatticeSteps {
            straight: cost.straight + step.straight,
            diagonal: cost.diagonal + step.diagonal,
        }
    }

    fn cost_value(&self, cost: LatticeSteps) -> f64 {
        self.grid.steps_length(cost)
    }

    fn heuristic(&self, node: NodeId) -> f64 {
        self.grid.center(node).distance(self.goal)
    }
}

/// Regular A* between the cells containing the query's start and goal.
pub fn astar_motion_space_baseline(grid: &OccupancyGrid, query: &PathQuery) -> Result<PlannedPath, SearchError> {
    let start = grid.cell_of(query.start);
    let goal = grid.cell_of(query.goal);
    if grid.is_blocked(start) {
        return Err(SearchError::StartBlocked);
    }
    if grid.is_blocked(goal) {
        return Err(SearchError::GoalBlocked);
    }
    astar_cells(grid, start, goal)
}

/// Baseline search between two explicit cells.
pub fn astar_cells(grid: &OccupancyGrid, start: NodeId, goal: NodeId) -> Result<PlannedPath, SearchError> {
    let space = BaselineSpace {
        grid,
        goal: grid.center(goal),
    };
    match astar(&space, start, goal) {
        Outcome::Found(found) => {
            let waypoints = found
                .nodes
                .iter()
                .map(|&node| Waypoint {
                    node,
                    position: grid.center(node),
                })
                .collect();
            Ok(PlannedPath::new(
                waypoints,
                grid.steps_length(found.cost),
                found.expanded,
                BASELINE_SOLVER,
            ))
        }
        Outcome::Unreachable { expanded } => Err(SearchError::NoPath {
            solver: BASELINE_SOLVER,
            expanded,
        }),
    }
}
