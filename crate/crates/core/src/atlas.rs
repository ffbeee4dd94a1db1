//! The planning-space lattice: channel grids stacked bottom-to-top, with
//! interface rows shared between neighbouring channels.
//!
//! An interface row keeps both mapped positions (the lower channel's top
//! boundary node and the upper channel's bottom boundary node). Where an
//! obstacle sits between the channels these differ, and the node is
//! forbidden: no path may stop on it or cut a diagonal past it.

use crate::geometry::Point;
use crate::meshgen::ChannelGrid;
use thiserror::Error;

/// Default coincidence tolerance for interface positions, in meters.
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AtlasError {
    #[error("no channel grids to stitch")]
    MissingChannel,
    #[error("channel {channel} has {got} columns, expected {expected}")]
    ColumnMismatch {
        channel: usize,
        expected: usize,
        got: usize,
    },
    #[error("channel grids out of order: expected channel {expected}, got {got}")]
    ChannelOrder { expected: usize, got: usize },
    #[error("node ({row}, {col}) outside the {rows} x {cols} lattice")]
    OutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("node ({row}, {col}) is forbidden")]
    Forbidden { row: usize, col: usize },
    #[error("inconsistent atlas data: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    pub row: usize,
    pub col: usize,
}

impl NodeId {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

/// Which channel's copy of an interface node to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterfaceSide {
    Below,
    Above,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanningAtlas {
    rows: usize,
    cols: usize,
    below: Vec<Point>,
    above: Vec<Point>,
    flagged: Vec<bool>,
    forbidden: Vec<bool>,
    interface: Vec<bool>,
    /// 1-based channel owning each row; interface rows report the lower channel.
    channel_of_row: Vec<usize>,
    epsilon: f64,
}

/// Stacks channel grids into one lattice. Channel `j`'s top row and channel
/// `j + 1`'s bottom row become a single interface row.
pub fn stitch_channels(grids: &[ChannelGrid], epsilon: f64) -> Result<PlanningAtlas, AtlasError> {
    let first = grids.first().ok_or(AtlasError::MissingChannel)?;
    let cols = first.columns();
    for (j, g) in grids.iter().enumerate() {
        if g.channel != j + 1 {
            return Err(AtlasError::ChannelOrder {
                expected: j + 1,
                got: g.channel,
            });
        }
        if g.columns() != cols {
            return Err(AtlasError::ColumnMismatch {
                channel: g.channel,
                expected: cols,
                got: g.columns(),
            });
        }
    }
    let p = grids.len();
    let rows = grids.iter().map(|g| g.rows()).sum::<usize>() + 1 - p;

    let mut below = vec![Point::default(); rows * cols];
    let mut above = vec![Point::default(); rows * cols];
    let mut flagged = vec![false; rows * cols];
    let mut interface = vec![false; rows];
    let mut channel_of_row = vec![0; rows];
    let mut offset = 0;
    for (j, g) in grids.iter().enumerate() {
        let m = g.rows();
        for k in 0..m {
            let r = offset + k;
            let lower_interface = k == 0 && j > 0;
            let upper_interface = k == m - 1 && j + 1 < p;
            if !lower_interface {
                channel_of_row[r] = g.channel;
            }
            interface[r] |= lower_interface || upper_interface;
            for c in 0..cols {
                let idx = r * cols + c;
                let pos = g.position(c, k);
                flagged[idx] |= g.on_obstacle[[c, k]];
                if lower_interface {
                    above[idx] = pos;
                } else if upper_interface {
                    below[idx] = pos;
                } else {
                    below[idx] = pos;
                    above[idx] = pos;
                }
            }
        }
        offset += m - 1;
    }
    PlanningAtlas::from_nodes(rows, cols, interface, below, above, flagged, channel_of_row, epsilon)
}

impl PlanningAtlas {
    /// Builds an atlas from raw row-major node data. For non-interface rows
    /// `below` and `above` must agree exactly.
    #[allow(clippy::too_many_arguments)]
    pub fn from_nodes(
        rows: usize,
        cols: usize,
        interface: Vec<bool>,
        below: Vec<Point>,
        above: Vec<Point>,
        flagged: Vec<bool>,
        channel_of_row: Vec<usize>,
        epsilon: f64,
    ) -> Result<Self, AtlasError> {
        let n = rows * cols;
        if rows == 0 || cols == 0 {
            return Err(AtlasError::Inconsistent("empty lattice".into()));
        }
        if below.len() != n
            || above.len() != n
            || flagged.len() != n
            || interface.len() != rows
            || channel_of_row.len() != rows
        {
            return Err(AtlasError::Inconsistent(
                "array lengths do not match the lattice".into(),
            ));
        }
        if !(epsilon >= 0.0) {
            return Err(AtlasError::Inconsistent("epsilon must be non-negative".into()));
        }
        let mut forbidden = flagged.clone();
        for (r, &is_interface) in interface.iter().enumerate() {
            for c in 0..cols {
                let idx = r * cols + c;
                if is_interface {
                    forbidden[idx] |= below[idx].distance(above[idx]) > epsilon;
                } else if below[idx] != above[idx] {
                    return Err(AtlasError::Inconsistent(format!(
                        "non-interface node ({r}, {c}) has two positions"
                    )));
                }
            }
        }
        Ok(Self {
            rows,
            cols,
            below,
            above,
            flagged,
            forbidden,
            interface,
            channel_of_row,
            epsilon,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn index(&self, id: NodeId) -> Result<usize, AtlasError> {
        if id.row < self.rows && id.col < self.cols {
            Ok(id.row * self.cols + id.col)
        } else {
            Err(AtlasError::OutOfRange {
                row: id.row,
                col: id.col,
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.row < self.rows && id.col < self.cols
    }

    pub fn is_interface_row(&self, row: usize) -> bool {
        self.interface.get(row).copied().unwrap_or(false)
    }

    pub fn channel_of_row(&self, row: usize) -> usize {
        self.channel_of_row[row]
    }

    /// Out-of-range nodes count as forbidden.
    pub fn is_forbidden(&self, id: NodeId) -> bool {
        self.index(id).map(|i| self.forbidden[i]).unwrap_or(true)
    }

    pub fn is_flagged(&self, id: NodeId) -> bool {
        self.index(id).map(|i| self.flagged[i]).unwrap_or(false)
    }

    pub fn forbidden_nodes(&self) -> Vec<NodeId> {
        self.node_ids().filter(|&id| self.is_forbidden(id)).collect()
    }

    /// Row-major iteration over every node.
    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.rows).flat_map(move |r| (0..self.cols).map(move |c| NodeId::new(r, c)))
    }

    /// Mapped motion-space position. Non-interface nodes return the same
    /// point for both sides.
    pub fn physical_position(&self, id: NodeId, side: InterfaceSide) -> Result<Point, AtlasError> {
        let i = self.index(id)?;
        Ok(match side {
            InterfaceSide::Below => self.below[i],
            InterfaceSide::Above => self.above[i],
        })
    }

    /// Positions used for the edge between two lattice nodes: the lower node's
    /// upper copy and the upper node's lower copy, i.e. both endpoints are read
    /// in the channel the edge runs through.
    pub fn edge_positions(&self, a: NodeId, b: NodeId) -> (Point, Point) {
        let ia = a.row * self.cols + a.col;
        let ib = b.row * self.cols + b.col;
        match a.row.cmp(&b.row) {
            std::cmp::Ordering::Less => (self.above[ia], self.below[ib]),
            std::cmp::Ordering::Greater => (self.below[ia], self.above[ib]),
            std::cmp::Ordering::Equal => (self.below[ia], self.below[ib]),
        }
    }

    /// 8-connected neighbours with chordal edge costs. Forbidden nodes are
    /// excluded, and a diagonal move is blocked when either of the two axis
    /// nodes it passes between is forbidden.
    pub fn neighbors(&self, id: NodeId) -> Result<Vec<(NodeId, f64)>, AtlasError> {
        let mut out = Vec::with_capacity(8);
        self.for_each_neighbor(id, |n, cost| out.push((n, cost)))?;
        Ok(out)
    }

    pub(crate) fn for_each_neighbor(&self, id: NodeId, mut f: impl FnMut(NodeId, f64)) -> Result<(), AtlasError> {
        let i = self.index(id)?;
        if self.forbidden[i] {
            return Err(AtlasError::Forbidden {
                row: id.row,
                col: id.col,
            });
        }
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let (r, c) = (id.row as i64 + dr, id.col as i64 + dc);
                if r < 0 || c < 0 || r >= self.rows as i64 || c >= self.cols as i64 {
                    continue;
                }
                let n = NodeId::new(r as usize, c as usize);
                if self.is_forbidden(n) {
                    continue;
                }
                if dr != 0
                    && dc != 0
                    && (self.is_forbidden(NodeId::new(n.row, id.col)) || self.is_forbidden(NodeId::new(id.row, n.col)))
                {
                    continue;
                }
                let (pa, pb) = self.edge_positions(id, n);
                f(n, pa.distance(pb));
            }
        }
        Ok(())
    }

    /// Smallest distance between horizontally or vertically adjacent nodes.
    pub fn min_node_spacing(&self) -> f64 {
        let mut best = f64::INFINITY;
        for id in self.node_ids() {
            for n in [NodeId::new(id.row + 1, id.col), NodeId::new(id.row, id.col + 1)] {
                if self.contains(n) {
                    let (a, b) = self.edge_positions(id, n);
                    let d = a.distance(b);
                    if d > 0.0 {
                        best = best.min(d);
                    }
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshgen::SolveDiagnostics;
    use ndarray::Array2;

    fn rect_grid(channel: usize, cols: usize, rows: usize, y0: f64) -> ChannelGrid {
        ChannelGrid {
            channel,
            x: Array2::from_shape_fn((cols, rows), |(i, _)| i as f64),
            y: Array2::from_shape_fn((cols, rows), |(_, k)| y0 + k as f64),
            on_obstacle: Array2::from_elem((cols, rows), false),
            diagnostics: SolveDiagnostics::default(),
        }
    }

    #[test]
    fn two_empty_channels_share_an_unforbidden_interface() {
        let atlas = stitch_channels(&[rect_grid(1, 6, 4, 0.0), rect_grid(2, 6, 3, 3.0)], DEFAULT_EPSILON).unwrap();
        assert_eq!(atlas.rows(), 6);
        assert!(atlas.is_interface_row(3));
        assert!(atlas.forbidden_nodes().is_empty());
        for c in 0..6 {
            let id = NodeId::new(3, c);
            assert_eq!(
                atlas.physical_position(id, InterfaceSide::Below).unwrap(),
                atlas.physical_position(id, InterfaceSide::Above).unwrap()
            );
        }
        // exact coincidence with zero tolerance
        let strict = stitch_channels(&[rect_grid(1, 6, 4, 0.0), rect_grid(2, 6, 3, 3.0)], 0.0).unwrap();
        assert!(strict.forbidden_nodes().is_empty());
    }

    #[test]
    fn interior_node_has_eight_unit_and_diagonal_neighbors() {
        let atlas = stitch_channels(&[rect_grid(1, 5, 5, 0.0)], DEFAULT_EPSILON).unwrap();
        let mut costs: Vec<f64> = atlas
            .neighbors(NodeId::new(2, 2))
            .unwrap()
            .into_iter()
            .map(|(_, c)| c)
            .collect();
        costs.sort_by(f64::total_cmp);
        let s2 = std::f64::consts::SQRT_2;
        assert_eq!(costs, vec![1.0, 1.0, 1.0, 1.0, s2, s2, s2, s2]);
        assert_eq!(
            atlas
                .physical_position(NodeId::new(0, 0), InterfaceSide::Below)
                .unwrap(),
            Point::new(0.0, 0.0)
        );
    }

    #[test]
    fn forbidden_interface_node_blocks_vertical_and_cut_corner_moves() {
        let lower = rect_grid(1, 5, 3, 0.0);
        let mut upper = rect_grid(2, 5, 3, 2.0);
        upper.y[[2, 0]] += 0.5; // detour: positions disagree at column 2
        upper.on_obstacle[[2, 0]] = true;
        let atlas = stitch_channels(&[lower, upper], DEFAULT_EPSILON).unwrap();
        assert_eq!(atlas.forbidden_nodes(), vec![NodeId::new(2, 2)]);
        let below = atlas
            .physical_position(NodeId::new(2, 2), InterfaceSide::Below)
            .unwrap();
        let above = atlas
            .physical_position(NodeId::new(2, 2), InterfaceSide::Above)
            .unwrap();
        assert!(below.distance(above) > DEFAULT_EPSILON);

        let from = NodeId::new(1, 2);
        let ns: Vec<NodeId> = atlas.neighbors(from).unwrap().into_iter().map(|(n, _)| n).collect();
        assert!(!ns.contains(&NodeId::new(2, 2)));
        // diagonals up-left/up-right pass beside the forbidden node
        assert!(!ns.contains(&NodeId::new(2, 1)));
        assert!(!ns.contains(&NodeId::new(2, 3)));
        assert_eq!(ns.len(), 5);
        let side = NodeId::new(2, 1);
        let side_ns: Vec<NodeId> = atlas.neighbors(side).unwrap().into_iter().map(|(n, _)| n).collect();
        assert!(!side_ns.contains(&NodeId::new(3, 2)));
        assert!(!side_ns.contains(&NodeId::new(1, 2)));
        assert!(matches!(
            atlas.neighbors(NodeId::new(2, 2)),
            Err(AtlasError::Forbidden { row: 2, col: 2 })
        ));
    }

    #[test]
    fn mismatched_columns_are_rejected() {
        let err = stitch_channels(&[rect_grid(1, 5, 3, 0.0), rect_grid(2, 6, 3, 2.0)], DEFAULT_EPSILON).unwrap_err();
        assert!(matches!(err, AtlasError::ColumnMismatch { channel: 2, .. }));
        assert_eq!(
            stitch_channels(&[], DEFAULT_EPSILON).unwrap_err(),
            AtlasError::MissingChannel
        );
    }

    #[test]
    fn out_of_range_queries_fail() {
        let atlas = stitch_channels(&[rect_grid(1, 3, 3, 0.0)], DEFAULT_EPSILON).unwrap();
        assert!(matches!(
            atlas.physical_position(NodeId::new(3, 0), InterfaceSide::Below),
            Err(AtlasError::OutOfRange { .. })
        ));
        assert!(atlas.neighbors(NodeId::new(0, 7)).is_err());
    }
}
