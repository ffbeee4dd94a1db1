use nalgebra::{Vector2, Vector3};

use super::dynamics::{step_external, step_internal, ExternalDynamics, ExternalState, InternalDynamics, Snap};
use super::mpc::{assemble_qp, build_prediction};
use super::qp::{solve_qp, QpStatus};
use super::quadrangle::{build_quadrangle, QuadrangleConstraint};
use super::{ControlError, MpcConfig};
use crate::atlas::PlanningAtlas;
use crate::geometry::Point;
use crate::search::Waypoint;

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingRow {
    pub k: usize,
    pub state: ExternalState,
    /// Snap applied at step `k`; zero on the final row.
    pub control: Snap,
    /// Yaw angle and rate.
    pub yaw: Vector2<f64>,
    /// Index of the desired waypoint scheduled for step `k`.
    pub desired: usize,
    /// Smallest edge slack of the position against that waypoint's quadrangle.
    pub slack_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingLog {
    pub rows: Vec<TrackingRow>,
    pub reached: bool,
    pub quadrangles: Vec<QuadrangleConstraint>,
}

impl TrackingLog {
    pub fn min_slack(&self) -> f64 {
        self.rows.iter().map(|r| r.slack_min).fold(f64::INFINITY, f64::min)
    }

    pub fn max_altitude_error(&self, z0: f64) -> f64 {
        self.rows.iter().map(|r| (r.state[2] - z0).abs()).fold(0.0, f64::max)
    }

    pub fn positions(&self) -> Vec<Point> {
        self.rows.iter().map(|r| Point::new(r.state[0], r.state[1])).collect()
    }
}

/// At rest over the first waypoint, at the configured altitude.
pub fn initial_state(path: &[Waypoint], config: &MpcConfig) -> Result<ExternalState, ControlError> {
    let first = path.first().ok_or(ControlError::EmptyPath)?;
    Ok(<ExternalState as super::ExternalStateExt>::from_position(Vector3::new(
        first.position.x,
        first.position.y,
        config.z0,
    )))
}

/// Receding-horizon tracking of `path`. Desired waypoint `i` is scheduled for
/// steps `[i * s, (i + 1) * s)` with `s = steps_per_waypoint`, and the last one
/// repeats afterwards. Stops once the position is within half the atlas's
/// smallest node spacing of the final waypoint, or after `max_steps`.
pub fn run_tracking_sim(
    atlas: &PlanningAtlas,
    path: &[Waypoint],
    config: &MpcConfig,
    initial: &ExternalState,
) -> Result<TrackingLog, ControlError> {
    config.validate()?;
    if path.is_empty() {
        return Err(ControlError::EmptyPath);
    }
    let external = ExternalDynamics::new(config.dt)?;
    let internal = InternalDynamics::new(config.dt, config.k_psi)?;
    let prediction = build_prediction(&external, config.n_tau)?;
    let quads = path
        .iter()
        .map(|w| build_quadrangle(atlas, w.node))
        .collect::<Result<Vec<_>, _>>()?;

    let last = path.len() - 1;
    let scheduled = |t: usize| (t / config.steps_per_waypoint).min(last);
    let goal = path[last].position;
    let arrive = 0.5 * atlas.min_node_spacing();

    let mut x = *initial;
    let mut yaw = Vector2::new(config.yaw0[0], config.yaw0[1]);
    let mut rows = Vec::new();
    let mut reached = false;

    for k in 0..=config.max_steps {
        let pos = Point::new(x[0], x[1]);
        let desired = scheduled(k);
        let mut row = TrackingRow {
            k,
            state: x,
            control: Snap::zeros(),
            yaw,
            desired,
            slack_min: quads[desired].min_slack(pos),
        };
        if pos.distance(goal) <= arrive && desired == last {
            reached = true;
            rows.push(row);
            break;
        }
        if k == config.max_steps {
            rows.push(row);
            break;
        }

        let idx: Vec<usize> = (1..=config.n_tau).map(|h| scheduled(k + h)).collect();
        let window: Vec<Point> = idx.iter().map(|&i| path[i].position).collect();
        let window_quads: Vec<QuadrangleConstraint> = idx.iter().map(|&i| quads[i].clone()).collect();
        let qp = assemble_qp(&prediction, config, &x, &window, &window_quads)?;
        let solution = solve_qp(&qp)?;
        match solution.status {
            QpStatus::Optimal => {}
            QpStatus::Infeasible { row, equality } => return Err(ControlError::Infeasible { step: k, row, equality }),
            QpStatus::IterationLimit => return Err(ControlError::IterationLimit { step: k }),
        }
        let u = Snap::new(solution.u[0], solution.u[1], solution.u[2]);
        row.control = u;
        rows.push(row);
        x = step_external(&external, &x, &u);
        yaw = step_internal(&internal, &yaw);
    }

    Ok(TrackingLog {
        rows,
        reached,
        quadrangles: quads,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::NodeId;

    fn lattice(rows: usize, cols: usize) -> PlanningAtlas {
        let n = rows * cols;
        let pos: Vec<Point> = (0..n)
            .map(|i| Point::new((i % cols) as f64, (i / cols) as f64))
            .collect();
        PlanningAtlas::from_nodes(
            rows,
            cols,
            vec![false; rows],
            pos.clone(),
            pos,
            vec![false; n],
            vec![1; rows],
            1e-6,
        )
        .unwrap()
    }

    fn waypoints(atlas: &PlanningAtlas, nodes: &[(usize, usize)]) -> Vec<Waypoint> {
        nodes
            .iter()
            .map(|&(r, c)| {
                let node = NodeId::new(r, c);
                Waypoint {
                    node,
                    position: atlas
                        .physical_position(node, crate::atlas::InterfaceSide::Below)
                        .unwrap(),
                }
            })
            .collect()
    }

    #[test]
    fn stationary_path_holds_position() {
        let atlas = lattice(5, 5);
        let path = waypoints(&atlas, &[(2, 2)]);
        let config = MpcConfig {
            max_steps: 50,
            ..MpcConfig::default()
        };
        let log = run_tracking_sim(&atlas, &path, &config, &initial_state(&path, &config).unwrap()).unwrap();
        assert!(log.reached);
        assert_eq!(log.rows.len(), 1);
        assert_eq!(log.rows[0].control, Snap::zeros());
        assert!(log.rows[0].slack_min > 0.0);
    }

    #[test]
    fn straight_line_stays_inside_every_quadrangle() {
        let atlas = lattice(3, 30);
        let nodes: Vec<(usize, usize)> = (1..29).map(|c| (1, c)).collect();
        let path = waypoints(&atlas, &nodes);
        let config = MpcConfig::default();
        let log = run_tracking_sim(&atlas, &path, &config, &initial_state(&path, &config).unwrap()).unwrap();
        assert!(log.reached, "stopped after {} rows", log.rows.len());
        for row in &log.rows {
            assert!(row.slack_min >= -1e-8, "step {} slack {}", row.k, row.slack_min);
        }
        assert!(log.max_altitude_error(config.z0) <= 1e-6);
    }

    #[test]
    fn empty_path_is_rejected() {
        let atlas = lattice(3, 3);
        let config = MpcConfig::default();
        assert!(matches!(
            run_tracking_sim(&atlas, &[], &config, &ExternalState::zeros()),
            Err(ControlError::EmptyPath)
        ));
    }
}
