use nalgebra::{Matrix4x2, Vector2, Vector4};

use super::ControlError;
use crate::atlas::{InterfaceSide, NodeId, PlanningAtlas};
use crate::geometry::{signed_area, Point};

/// Quadrangle spanned by the four diagonal neighbours of a
/// waypoint, written as `lambda * p <= gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadrangleConstraint {
    pub node: NodeId,
    /// Counterclockwise.
    pub vertices: [Point; 4],
    pub lambda: Matrix4x2<f64>,
    pub gamma: Vector4<f64>,
    /// True when the waypoint sits on the lattice rim and neighbour indices
    /// were clamped, so the waypoint lies on the quadrangle's edge.
    pub clamped: bool,
}

impl QuadrangleConstraint {
    pub fn from_vertices(node: NodeId, vertices: [Point; 4], clamped: bool) -> Self {
        let mut lambda = Matrix4x2::zeros();
        let mut gamma = Vector4::zeros();
        for j in 0..4 {
            let (a, b) = (vertices[j], vertices[(j + 1) % 4]);
            lambda[(j, 0)] = b.y - a.y;
            lambda[(j, 1)] = a.x - b.x;
            gamma[j] = a.x * (b.y - a.y) - a.y * (b.x - a.x);
        }
        Self {
            node,
            vertices,
            lambda,
            gamma,
            clamped,
        }
    }

    /// `gamma - lambda * p`; non-negative entries mean the edge is satisfied.
    pub fn slacks(&self, p: Point) -> Vector4<f64> {
        self.gamma - self.lambda * Vector2::new(p.x, p.y)
    }

    pub fn min_slack(&self, p: Point) -> f64 {
        self.slacks(p).min()
    }

    pub fn centroid(&self) -> Point {
        let s = self.vertices.iter().fold(Point::new(0.0, 0.0), |acc, &v| acc + v);
        0.25 * s
    }
}

/// Closed-region membership test.
pub fn safety_check(constraint: &QuadrangleConstraint, position: Point) -> bool {
    let lp = constraint.lambda * Vector2::new(position.x, position.y);
    (0..4).all(|j| lp[j] <= constraint.gamma[j])
}

/// Quadrangle with vertices at `(r-1, c-1)`, `(r-1, c+1)`, `(r+1, c+1)`,
/// `(r+1, c-1)`. Vertices on the row above the waypoint use their lower copy
/// and those below use their upper copy, so the region stays on the
/// waypoint's side of any interface.
pub fn build_quadrangle(atlas: &PlanningAtlas, node: NodeId) -> Result<QuadrangleConstraint, ControlError> {
    if !atlas.contains(node) {
        return Err(ControlError::Quadrangle {
            node,
            reason: "waypoint outside the atlas".into(),
        });
    }
    if atlas.rows() < 2 || atlas.cols() < 2 {
        return Err(ControlError::Quadrangle {
            node,
            reason: "atlas too small to enclose a waypoint".into(),
        });
    }
    let (r, c) = (node.row, node.col);
    let lo_r = r.saturating_sub(1);
    let hi_r = (r + 1).min(atlas.rows() - 1);
    let lo_c = c.saturating_sub(1);
    let hi_c = (c + 1).min(atlas.cols() - 1);
    let clamped = lo_r == r || hi_r == r || lo_c == c || hi_c == c;

    let vertex = |row: usize, col: usize| {
        let side = if row < r {
            InterfaceSide::Above
        } else {
            InterfaceSide::Below
        };
        atlas.physical_position(NodeId::new(row, col), side)
    };
    let vertices = [
        vertex(lo_r, lo_c)?,
        vertex(lo_r, hi_c)?,
        vertex(hi_r, hi_c)?,
        vertex(hi_r, lo_c)?,
    ];
    if !(signed_area(&vertices) > 0.0) {
        return Err(ControlError::Quadrangle {
            node,
            reason: "vertices are not counterclockwise".into(),
        });
    }
    Ok(QuadrangleConstraint::from_vertices(node, vertices, clamped))
}
