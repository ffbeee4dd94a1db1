//! Obstacle-laden motion space, its decomposition into obstacle groups and
//! navigable channels, and the planning-space layout the channels map onto.
//!
//! Channels are numbered bottom-to-top starting at 1. Obstacle group `j`
//! (1-based) is sandwiched by channels `j` and `j + 1`, so a space with `p`
//! channels has `p - 1` groups (some may be empty).

mod builder;
mod document;

pub use builder::build_channel_boundaries;
pub use document::{ChannelDocument, EnvironmentDocument, GridDocument, ObstacleDocument, PolylineDocument};

use crate::geometry::{is_simple_polygon, signed_area, Point, Rect};
use thiserror::Error;

/// Tolerance for coincident polyline endpoints, in meters.
pub const LOOP_TOLERANCE: f64 = 1e-9;

/// Relative tolerance for the channel/obstacle area tiling check.
pub const TILING_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("schema violation: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("obstacle {obstacle}: group index {group} out of range (expected 1..={max})")]
    GroupOutOfRange { obstacle: usize, group: usize, max: usize },
    #[error("obstacle {index}: {reason}")]
    Obstacle { index: usize, reason: String },
    #[error("channel {index}: {reason}")]
    Channel { index: usize, reason: String },
    #[error("layout: {0}")]
    Layout(String),
    #[error("bounds: {0}")]
    Bounds(String),
    #[error("obstacles {first} and {second} overlap within group {group}")]
    OverlappingInGroup { group: usize, first: usize, second: usize },
    #[error("obstacle {index} is not an axis-aligned rectangle")]
    NotRectangular { index: usize },
    #[error("obstacle {index} does not straddle exactly its own channel interface line")]
    CrossesInterface { index: usize },
    #[error("obstacles {first} and {second} of adjacent groups overlap vertically")]
    AdjacentGroupsOverlap { first: usize, second: usize },
    #[error("channels and obstacles do not tile the bounds (relative area error {relative_error:e})")]
    Tiling { relative_error: f64 },
}

/// A simple, closed, counterclockwise obstacle polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle {
    pub polygon: Vec<Point>,
    /// 1-based obstacle group index.
    pub group: usize,
}

impl Obstacle {
    pub fn area(&self) -> f64 {
        signed_area(&self.polygon)
    }

    /// Axis-aligned bounding box.
    pub fn bounding_box(&self) -> Rect {
        let mut r = Rect {
            xmin: f64::INFINITY,
            xmax: f64::NEG_INFINITY,
            ymin: f64::INFINITY,
            ymax: f64::NEG_INFINITY,
        };
        for p in &self.polygon {
            r.xmin = r.xmin.min(p.x);
            r.xmax = r.xmax.max(p.x);
            r.ymin = r.ymin.min(p.y);
            r.ymax = r.ymax.max(p.y);
        }
        r
    }

    fn validate(&self, index: usize) -> Result<(), EnvError> {
        let fail = |reason: &str| EnvError::Obstacle {
            index,
            reason: reason.to_string(),
        };
        if self.polygon.len() < 3 {
            return Err(fail("polygon needs at least 3 vertices"));
        }
        if !self.polygon.iter().all(|p| p.is_finite()) {
            return Err(fail("non-finite vertex"));
        }
        if !is_simple_polygon(&self.polygon) {
            return Err(fail("polygon is not simple"));
        }
        if self.area() <= 0.0 {
            return Err(fail("polygon must be counterclockwise"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleGroup {
    /// 1-based; sandwiched by channels `index` and `index + 1`.
    pub index: usize,
    /// Indices into [`MotionSpace::obstacles`].
    pub members: Vec<usize>,
}

/// One side of a navigable channel: `gamma` serially connected segments.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPolyline {
    points: Vec<Point>,
    obstacle_flags: Vec<bool>,
}

impl BoundaryPolyline {
    pub fn new(points: Vec<Point>, obstacle_flags: Vec<bool>) -> Result<Self, String> {
        if points.len() < 2 {
            return Err("polyline needs at least one segment".into());
        }
        if obstacle_flags.len() != points.len() - 1 {
            return Err(format!(
                "{} obstacle flags for {} segments",
                obstacle_flags.len(),
                points.len() - 1
            ));
        }
        if !points.iter().all(|p| p.is_finite()) {
            return Err("non-finite vertex".into());
        }
        if let Some(h) = points.windows(2).position(|w| w[0].distance(w[1]) <= 0.0) {
            return Err(format!("segment {h} has zero length"));
        }
        Ok(Self { points, obstacle_flags })
    }

    /// A single unflagged straight segment.
    pub fn straight(from: Point, to: Point) -> Result<Self, String> {
        Self::new(vec![from, to], vec![false])
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn obstacle_flags(&self) -> &[bool] {
        &self.obstacle_flags
    }

    pub fn segment_count(&self) -> usize {
        self.obstacle_flags.len()
    }

    pub fn first(&self) -> Point {
        self.points[0]
    }

    pub fn last(&self) -> Point {
        self.points[self.points.len() - 1]
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].distance(w[1])).sum()
    }
}

/// Boundary sides of a channel. Bottom and top run left-to-right, left and
/// right run bottom-to-top.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavigableChannel {
    /// 1-based, bottom-to-top.
    pub index: usize,
    pub bottom: BoundaryPolyline,
    pub right: BoundaryPolyline,
    pub top: BoundaryPolyline,
    pub left: BoundaryPolyline,
}

impl NavigableChannel {
    pub fn side(&self, side: Side) -> &BoundaryPolyline {
        match side {
            Side::Bottom => &self.bottom,
            Side::Right => &self.right,
            Side::Top => &self.top,
            Side::Left => &self.left,
        }
    }

    /// The channel outline as a counterclockwise polygon.
    pub fn outline(&self) -> Vec<Point> {
        let mut ring: Vec<Point> = self.bottom.points().to_vec();
        ring.extend_from_slice(&self.right.points()[1..]);
        ring.extend(self.top.points().iter().rev().skip(1));
        let left = self.left.points();
        ring.extend(left.iter().rev().skip(1).take(left.len() - 2));
        ring
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.outline())
    }

    fn validate(&self) -> Result<(), EnvError> {
        let fail = |reason: String| EnvError::Channel {
            index: self.index,
            reason,
        };
        let close = |a: Point, b: Point| a.distance(b) <= LOOP_TOLERANCE;
        if !close(self.bottom.first(), self.left.first()) {
            return Err(fail("bottom and left boundaries do not meet".into()));
        }
        if !close(self.bottom.last(), self.right.first()) {
            return Err(fail("bottom and right boundaries do not meet".into()));
        }
        if !close(self.top.last(), self.right.last()) {
            return Err(fail("top and right boundaries do not meet".into()));
        }
        if !close(self.top.first(), self.left.last()) {
            return Err(fail("top and left boundaries do not meet".into()));
        }
        if self.bottom.last().x <= self.bottom.first().x || self.top.last().x <= self.top.first().x {
            return Err(fail("bottom and top boundaries must run left-to-right".into()));
        }
        if self.left.last().y <= self.left.first().y || self.right.last().y <= self.right.first().y {
            return Err(fail("left and right boundaries must run bottom-to-top".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionSpace {
    pub bounds: Rect,
    pub obstacles: Vec<Obstacle>,
    pub groups: Vec<ObstacleGroup>,
    /// Ordered bottom-to-top.
    pub channels: Vec<NavigableChannel>,
}

impl MotionSpace {
    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    /// True when `p` lies inside (or on the boundary of) any obstacle.
    pub fn is_blocked(&self, p: Point) -> bool {
        self.obstacles
            .iter()
            .any(|o| crate::geometry::point_in_polygon(p, &o.polygon, 1e-12))
    }

    /// True when `p` is inside the bounds and outside every obstacle.
    pub fn is_navigable(&self, p: Point) -> bool {
        self.bounds.contains(p) && !self.is_blocked(p)
    }

    /// Relative error of (channel areas + obstacle areas) against the bounds area.
    pub fn tiling_error(&self) -> f64 {
        let channels: f64 = self.channels.iter().map(NavigableChannel::area).sum();
        let obstacles: f64 = self.obstacles.iter().map(Obstacle::area).sum();
        let total = self.bounds.area();
        ((channels + obstacles) - total).abs() / total
    }
}

/// Uniform lattice layout of the planning space.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanningSpaceLayout {
    pub phi_min: f64,
    pub phi_max: f64,
    /// `Psi_1 < ... < Psi_{p+1}`.
    pub psi_levels: Vec<f64>,
    /// Columns per channel.
    pub m_phi: usize,
    /// Rows per channel, boundaries included.
    pub m_rows: Vec<usize>,
}

impl PlanningSpaceLayout {
    pub fn channel_count(&self) -> usize {
        self.m_rows.len()
    }

    /// Distinct lattice rows once interface rows are shared.
    pub fn total_rows(&self) -> usize {
        self.m_rows.iter().sum::<usize>() + 1 - self.m_rows.len()
    }

    pub fn phi(&self, column: usize) -> f64 {
        self.phi_min + (self.phi_max - self.phi_min) * column as f64 / (self.m_phi - 1) as f64
    }

    /// Stream value of row `k` within channel `j` (1-based channel).
    pub fn psi(&self, channel: usize, k: usize) -> f64 {
        let lo = self.psi_levels[channel - 1];
        let hi = self.psi_levels[channel];
        lo + (hi - lo) * k as f64 / (self.m_rows[channel - 1] - 1) as f64
    }

    fn validate(&self) -> Result<(), EnvError> {
        let fail = |s: &str| Err(EnvError::Layout(s.to_string()));
        if !(self.phi_min < self.phi_max) {
            return fail("phi_range must satisfy min < max");
        }
        if self.psi_levels.len() < 2 {
            return fail("need at least two psi levels");
        }
        if self.psi_levels.windows(2).any(|w| !(w[0] < w[1])) {
            return fail("psi_levels must be strictly increasing");
        }
        if self.m_rows.len() + 1 != self.psi_levels.len() {
            return fail("grid.m_rows must have one entry per channel (len(psi_levels) - 1)");
        }
        if self.m_phi < 2 {
            return fail("grid.m_phi must be at least 2");
        }
        if self.m_rows.iter().any(|&m| m < 2) {
            return fail("every grid.m_rows entry must be at least 2");
        }
        Ok(())
    }
}

/// A validated motion space together with its planning-space layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub space: MotionSpace,
    pub layout: PlanningSpaceLayout,
}

impl Environment {
    /// Parses and validates an environment JSON document.
    pub fn from_json(text: &str) -> Result<Self, EnvError> {
        let doc: EnvironmentDocument = serde_json::from_str(text)?;
        load_environment(doc)
    }

    /// Serializes back to a document with explicit channel polylines.
    pub fn to_document(&self) -> EnvironmentDocument {
        document::to_document(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("document serializes")
    }
}

/// Validates a parsed document. When the document carries no channel
/// polylines they are derived with [`build_channel_boundaries`].
pub fn load_environment(doc: EnvironmentDocument) -> Result<Environment, EnvError> {
    let bounds = doc.bounds;
    if !(bounds.xmin < bounds.xmax && bounds.ymin < bounds.ymax) {
        return Err(EnvError::Bounds("expected xmin < xmax and ymin < ymax".into()));
    }
    let layout = PlanningSpaceLayout {
        phi_min: doc.phi_range[0],
        phi_max: doc.phi_range[1],
        psi_levels: doc.psi_levels,
        m_phi: doc.grid.m_phi,
        m_rows: doc.grid.m_rows,
    };
    layout.validate()?;
    let p = layout.channel_count();

    let obstacles: Vec<Obstacle> = doc
        .obstacles
        .into_iter()
        .map(|o| Obstacle {
            polygon: o.polygon,
            group: o.group,
        })
        .collect();
    for (index, obstacle) in obstacles.iter().enumerate() {
        if obstacle.group < 1 || obstacle.group >= p {
            return Err(EnvError::GroupOutOfRange {
                obstacle: index,
                group: obstacle.group,
                max: p.saturating_sub(1),
            });
        }
        obstacle.validate(index)?;
        if obstacle.polygon.iter().any(|&v| !bounds.contains(v)) {
            return Err(EnvError::Obstacle {
                index,
                reason: "polygon leaves the bounds".into(),
            });
        }
    }
    let groups = (1..p)
        .map(|index| ObstacleGroup {
            index,
            members: (0..obstacles.len()).filter(|&o| obstacles[o].group == index).collect(),
        })
        .collect();

    let channels = match doc.channels {
        Some(channels) => {
            if channels.len() != p {
                return Err(EnvError::Layout(format!(
                    "{} channels given but psi_levels describe {p}",
                    channels.len()
                )));
            }
            channels
                .into_iter()
                .enumerate()
                .map(|(i, c)| c.into_channel(i + 1))
                .collect::<Result<Vec<_>, _>>()?
        }
        None => build_channel_boundaries(&bounds, &obstacles, &layout.psi_levels)?,
    };

    let space = MotionSpace {
        bounds,
        obstacles,
        groups,
        channels,
    };
    validate_channels(&space)?;
    Ok(Environment { space, layout })
}

fn validate_channels(space: &MotionSpace) -> Result<(), EnvError> {
    let close = |a: Point, b: Point| a.distance(b) <= LOOP_TOLERANCE;
    let [bl, br, tr, tl] = space.bounds.corners();
    let channels = &space.channels;
    for channel in channels {
        channel.validate()?;
    }
    let first = &channels[0];
    if !close(first.bottom.first(), bl) || !close(first.bottom.last(), br) {
        return Err(EnvError::Channel {
            index: first.index,
            reason: "bottom boundary must start and end at the bounds' bottom corners".into(),
        });
    }
    let last = &channels[channels.len() - 1];
    if !close(last.top.first(), tl) || !close(last.top.last(), tr) {
        return Err(EnvError::Channel {
            index: last.index,
            reason: "top boundary must start and end at the bounds' top corners".into(),
        });
    }
    for pair in channels.windows(2) {
        let (below, above) = (&pair[0], &pair[1]);
        if !close(below.top.first(), above.bottom.first()) || !close(below.top.last(), above.bottom.last()) {
            return Err(EnvError::Channel {
                index: above.index,
                reason: "bottom boundary does not share its endpoints with the channel below".into(),
            });
        }
        if !(above.bottom.first().y > below.bottom.first().y) {
            return Err(EnvError::Channel {
                index: above.index,
                reason: "channels must be ordered bottom-to-top".into(),
            });
        }
    }
    let relative_error = space.tiling_error();
    if !(relative_error <= TILING_TOLERANCE) {
        return Err(EnvError::Tiling { relative_error });
    }
    Ok(())
}
