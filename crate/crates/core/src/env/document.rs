//! JSON schema of the environment file.

use super::{BoundaryPolyline, EnvError, Environment, NavigableChannel};
use crate::geometry::{Point, Rect};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentDocument {
    pub bounds: Rect,
    pub obstacles: Vec<ObstacleDocument>,
    pub psi_levels: Vec<f64>,
    pub phi_range: [f64; 2],
    pub grid: GridDocument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<Vec<ChannelDocument>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleDocument {
    pub polygon: Vec<Point>,
    pub group: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDocument {
    pub m_phi: usize,
    pub m_rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolylineDocument {
    pub points: Vec<Point>,
    pub obstacle_flags: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDocument {
    pub bottom: PolylineDocument,
    pub right: PolylineDocument,
    pub top: PolylineDocument,
    pub left: PolylineDocument,
}

impl ChannelDocument {
    pub(super) fn into_channel(self, index: usize) -> Result<NavigableChannel, EnvError> {
        let side = |name: &str, doc: PolylineDocument| {
            BoundaryPolyline::new(doc.points, doc.obstacle_flags).map_err(|reason| EnvError::Channel {
                index,
                reason: format!("{name} boundary: {reason}"),
            })
        };
        Ok(NavigableChannel {
            index,
            bottom: side("bottom", self.bottom)?,
            right: side("right", self.right)?,
            top: side("top", self.top)?,
            left: side("left", self.left)?,
        })
    }
}

impl From<&BoundaryPolyline> for PolylineDocument {
    fn from(p: &BoundaryPolyline) -> Self {
        Self {
            points: p.points().to_vec(),
            obstacle_flags: p.obstacle_flags().to_vec(),
        }
    }
}

pub(super) fn to_document(env: &Environment) -> EnvironmentDocument {
    EnvironmentDocument {
        bounds: env.space.bounds,
        obstacles: env
            .space
            .obstacles
            .iter()
            .map(|o| ObstacleDocument {
                polygon: o.polygon.clone(),
                group: o.group,
            })
            .collect(),
        psi_levels: env.layout.psi_levels.clone(),
        phi_range: [env.layout.phi_min, env.layout.phi_max],
        grid: GridDocument {
            m_phi: env.layout.m_phi,
            m_rows: env.layout.m_rows.clone(),
        },
        channels: Some(
            env.space
                .channels
                .iter()
                .map(|c| ChannelDocument {
                    bottom: (&c.bottom).into(),
                    right: (&c.right).into(),
                    top: (&c.top).into(),
                    left: (&c.left).into(),
                })
                .collect(),
        ),
    }
}
