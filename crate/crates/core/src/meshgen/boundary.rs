//! Uniform arc-length node distribution along channel boundary polylines.

use super::MeshError;
use crate::env::{BoundaryPolyline, NavigableChannel};
use crate::geometry::Point;

/// Nodes distributed along one boundary side.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryNodes {
    pub positions: Vec<Point>,
    /// Inherited from the segment each node lies on.
    pub obstacle_flags: Vec<bool>,
    /// Cumulative arc length at each polyline vertex, starting at 0.
    pub cumulative: Vec<f64>,
    pub length: f64,
    pub spacing: f64,
}

impl BoundaryNodes {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Boundary nodes of all four sides of one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryNodeSet {
    pub bottom: BoundaryNodes,
    pub right: BoundaryNodes,
    pub top: BoundaryNodes,
    pub left: BoundaryNodes,
}

impl BoundaryNodeSet {
    /// `m_phi` nodes on bottom/top, `m_rows` nodes on left/right.
    pub fn for_channel(channel: &NavigableChannel, m_phi: usize, m_rows: usize) -> Result<Self, MeshError> {
        Ok(Self {
            bottom: distribute_boundary_nodes(&channel.bottom, m_phi)?,
            right: distribute_boundary_nodes(&channel.right, m_rows)?,
            top: distribute_boundary_nodes(&channel.top, m_phi)?,
            left: distribute_boundary_nodes(&channel.left, m_rows)?,
        })
    }
}

/// Barycentric pair `(alpha, beta)` with `alpha * start + beta * end = s` and
/// `alpha + beta = 1`, where `start`/`end` are the cumulative arc lengths at the
/// segment's endpoints. Both components are non-negative iff `s` lies on the
/// segment.
pub fn locate_on_segment(s: f64, start: f64, end: f64) -> Result<[f64; 2], MeshError> {
    let len = end - start;
    if !(len > 0.0) {
        return Err(MeshError::DegenerateSegment { start, end });
    }
    let beta = (s - start) / len;
    Ok([1.0 - beta, beta])
}

/// Convex combination of the segment endpoints.
pub fn interpolate_node(omega: [f64; 2], a: Point, b: Point) -> Point {
    Point::new(omega[0] * a.x + omega[1] * b.x, omega[0] * a.y + omega[1] * b.y)
}

/// Places `n` nodes at uniform arc-length increments along `polyline`, the
/// first and last exactly on its endpoints. A node landing on a vertex (within
/// `1e-9` of the total length) snaps to that vertex; it is flagged only when
/// both adjacent segments are.
pub fn distribute_boundary_nodes(polyline: &BoundaryPolyline, n: usize) -> Result<BoundaryNodes, MeshError> {
    if n < 2 {
        return Err(MeshError::NodeCount { n });
    }
    let points = polyline.points();
    let flags = polyline.obstacle_flags();
    let gamma = polyline.segment_count();

    let mut cumulative = Vec::with_capacity(gamma + 1);
    cumulative.push(0.0);
    let mut length = 0.0;
    for w in points.windows(2) {
        length += w[0].distance(w[1]);
        cumulative.push(length);
    }
    if !(length > 0.0) {
        return Err(MeshError::ZeroLength);
    }
    let spacing = length / (n - 1) as f64;
    let snap = 1e-9 * length.max(1.0);

    let mut positions = Vec::with_capacity(n);
    let mut node_flags = Vec::with_capacity(n);
    for i in 0..n {
        let s = if i == n - 1 { length } else { i as f64 * spacing };
        if let Some(h) = cumulative.iter().position(|&c| (c - s).abs() <= snap) {
            let flag = match h {
                0 => flags[0],
                h if h == gamma => flags[gamma - 1],
                h => flags[h - 1] && flags[h],
            };
            positions.push(points[h]);
            node_flags.push(flag);
            continue;
        }
        let mut placed = None;
        for h in 0..gamma {
            let omega = locate_on_segment(s, cumulative[h], cumulative[h + 1])?;
            if omega[0] >= 0.0 && omega[1] >= 0.0 {
                placed = Some((interpolate_node(omega, points[h], points[h + 1]), flags[h]));
                break;
            }
        }
        let (p, flag) = placed.expect("arc length within [0, L] lies on some segment");
        positions.push(p);
        node_flags.push(flag);
    }

    Ok(BoundaryNodes {
        positions,
        obstacle_flags: node_flags,
        cumulative,
        length,
        spacing,
    })
}
