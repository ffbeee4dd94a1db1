use nalgebra::{DMatrix, DVector};

use super::dynamics::{ExternalDynamics, ExternalState};
use super::qp::QpProblem;
use super::quadrangle::QuadrangleConstraint;
use super::{ControlError, MpcConfig};
use crate::geometry::Point;

const NX: usize = 12;
const NU: usize = 3;

/// Condensed prediction `Y = G x_k + H U` over `n_tau` steps, with
/// `Y = [x_{k+1}; ...; x_{k+n_tau}]` and `U = [u_k; ...; u_{k+n_tau-1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub n_tau: usize,
    pub g: DMatrix<f64>,
    pub h: DMatrix<f64>,
    /// Picks `(x, y)` out of every predicted state.
    pub c_p: DMatrix<f64>,
}

impl Prediction {
    pub fn predict(&self, x: &ExternalState, u: &DVector<f64>) -> DVector<f64> {
        &self.g * DVector::from_column_slice(x.as_slice()) + &self.h * u
    }
}

/// Block `i` of `G` is `A^(i+1)`; block `(i, j)` of `H` is `A^(i-j) B` for
/// `j <= i`, so the first predicted state already feels `u_k`.
pub fn build_prediction(dynamics: &ExternalDynamics, n_tau: usize) -> Result<Prediction, ControlError> {
    if n_tau == 0 {
        return Err(ControlError::InvalidConfig("n_tau must be at least 1".into()));
    }
    let a = DMatrix::from_column_slice(NX, NX, dynamics.a.as_slice());
    let b = DMatrix::from_column_slice(NX, NU, dynamics.b.as_slice());

    // powers A^0 .. A^n_tau
    let mut powers = vec![DMatrix::identity(NX, NX)];
    for i in 0..n_tau {
        let next = &a * &powers[i];
        powers.push(next);
    }
    let ab: Vec<DMatrix<f64>> = powers.iter().map(|p| p * &b).collect();

    let mut g = DMatrix::zeros(NX * n_tau, NX);
    let mut h = DMatrix::zeros(NX * n_tau, NU * n_tau);
    let mut c_p = DMatrix::zeros(2 * n_tau, NX * n_tau);
    for i in 0..n_tau {
        g.view_mut((NX * i, 0), (NX, NX)).copy_from(&powers[i + 1]);
        for j in 0..=i {
            h.view_mut((NX * i, NU * j), (NX, NU)).copy_from(&ab[i - j]);
        }
        c_p[(2 * i, NX * i)] = 1.0;
        c_p[(2 * i + 1, NX * i + 1)] = 1.0;
    }
    Ok(Prediction { n_tau, g, h, c_p })
}

/// QP in `U` for the horizon starting at `x_k`. `window[h]` and `quads[h]`
/// are the desired waypoint and safety region for predicted step `k+h+1`.
pub fn assemble_qp(
    prediction: &Prediction,
    config: &MpcConfig,
    x: &ExternalState,
    window: &[Point],
    quads: &[QuadrangleConstraint],
) -> Result<QpProblem, ControlError> {
    let n = prediction.n_tau;
    if window.len() != n || quads.len() != n || config.n_tau != n {
        return Err(ControlError::Dimension(format!(
            "horizon {n}, config {}, {} waypoints, {} quadrangles",
            config.n_tau,
            window.len(),
            quads.len()
        )));
    }
    let xk = DVector::from_column_slice(x.as_slice());
    let gx = &prediction.g * &xk;
    let ch = &prediction.c_p * &prediction.h;
    let cgx = &prediction.c_p * &gx;

    let mut f = DVector::zeros(2 * n);
    let mut p = DVector::zeros(2 * n);
    for h in 0..n {
        let (fx, fy) = config.weight(h);
        f[2 * h] = fx;
        f[2 * h + 1] = fy;
        p[2 * h] = window[h].x;
        p[2 * h + 1] = window[h].y;
    }

    let fch = DMatrix::from_fn(2 * n, NU * n, |r, c| f[r] * ch[(r, c)]);
    let mut w1 = DMatrix::identity(NU * n, NU * n) + config.beta * ch.transpose() * &fch;
    w1 = 0.5 * (&w1 + w1.transpose());
    let err = &cgx - &p;
    let w2 = config.beta * fch.transpose() * err;

    let mut a_ineq = DMatrix::zeros(4 * n, NU * n);
    let mut b_ineq = DVector::zeros(4 * n);
    for (h, q) in quads.iter().enumerate() {
        let rows = q.lambda.clone_owned();
        let lam = DMatrix::from_fn(4, 2, |r, c| rows[(r, c)]);
        let block = &lam * ch.rows(2 * h, 2);
        a_ineq.view_mut((4 * h, 0), (4, NU * n)).copy_from(&block);
        let pos = cgx.rows(2 * h, 2);
        for r in 0..4 {
            b_ineq[4 * h + r] = q.gamma[r] - (lam[(r, 0)] * pos[0] + lam[(r, 1)] * pos[1]);
        }
    }

    let mut a_eq = DMatrix::zeros(n, NU * n);
    let mut b_eq = DVector::zeros(n);
    for h in 0..n {
        a_eq.set_row(h, &prediction.h.row(NX * h + 2));
        b_eq[h] = config.z0 - gx[NX * h + 2];
    }

    Ok(QpProblem::new(w1, w2, a_ineq, b_ineq, a_eq, b_eq)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::NodeId;
    use crate::control::dynamics::{step_external, ExternalStateExt};
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square(cx: f64, cy: f64) -> QuadrangleConstraint {
        QuadrangleConstraint::from_vertices(
            NodeId::new(1, 1),
            [
                Point::new(cx - 1.0, cy - 1.0),
                Point::new(cx + 1.0, cy - 1.0),
                Point::new(cx + 1.0, cy + 1.0),
                Point::new(cx - 1.0, cy + 1.0),
            ],
            false,
        )
    }

    #[test]
    fn single_step_prediction_is_the_dynamics() {
        let d = ExternalDynamics::new(0.1).unwrap();
        let p = build_prediction(&d, 1).unwrap();
        assert_eq!(p.g.as_slice(), d.a.as_slice());
        assert_eq!(p.h.as_slice(), d.b.as_slice());
        assert_eq!(p.c_p.shape(), (2, 12));
    }

    #[test]
    fn prediction_matches_iterated_dynamics() {
        let d = ExternalDynamics::new(0.1).unwrap();
        let p = build_prediction(&d, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = ExternalState::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let u = DVector::from_fn(9, |_, _| rng.random_range(-1.0..1.0));
        let y = p.predict(&x, &u);
        let mut s = x;
        for i in 0..3 {
            s = step_external(&d, &s, &Vector3::new(u[3 * i], u[3 * i + 1], u[3 * i + 2]));
            for r in 0..12 {
                assert!((y[12 * i + r] - s[r]).abs() < 1e-12);
            }
        }
        let r = &p.c_p * &y;
        assert_eq!(r.len(), 6);
        assert_eq!(r[2], y[12]);
        assert_eq!(r[3], y[13]);
    }

    #[test]
    fn zero_beta_gives_identity_objective() {
        let d = ExternalDynamics::new(0.05).unwrap();
        let config = MpcConfig {
            beta: 0.0,
            n_tau: 2,
            ..MpcConfig::default()
        };
        let p = build_prediction(&d, 2).unwrap();
        let x = ExternalState::from_position(Vector3::new(0.0, 0.0, 10.0));
        let qp = assemble_qp(
            &p,
            &config,
            &x,
            &[Point::new(0.0, 0.0); 2],
            &[square(0.0, 0.0), square(0.0, 0.0)],
        )
        .unwrap();
        assert_eq!(qp.w1, DMatrix::identity(6, 6));
        assert_eq!(qp.w2.amax(), 0.0);
        // level flight at z0 with no vertical motion: U = 0 satisfies the equalities
        assert_eq!(qp.b_eq, DVector::zeros(2));
        assert!(qp.b_ineq.iter().all(|&b| b >= 0.0));
    }

    #[test]
    fn w1_is_exactly_symmetric() {
        let d = ExternalDynamics::new(0.05).unwrap();
        let config = MpcConfig::default();
        let p = build_prediction(&d, config.n_tau).unwrap();
        let x = ExternalState::from_position(Vector3::new(0.3, -0.2, 10.0));
        let window: Vec<Point> = (0..config.n_tau).map(|i| Point::new(0.1 * i as f64, 0.0)).collect();
        let quads: Vec<_> = window.iter().map(|w| square(w.x, w.y)).collect();
        let qp = assemble_qp(&p, &config, &x, &window, &quads).unwrap();
        assert_eq!((&qp.w1 - qp.w1.transpose()).amax(), 0.0);
        assert!(qp.w1.clone().cholesky().is_some());
    }

    #[test]
    fn gradient_matches_finite_differences_of_the_cost() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = ExternalDynamics::new(0.2).unwrap();
        for n in [1usize, 5] {
            let f_diag: Vec<f64> = (0..2 * n).map(|_| rng.random_range(0.1..2.0)).collect();
            let config = MpcConfig {
                dt: 0.2,
                n_tau: n,
                beta: 3.0,
                f_diag: f_diag.clone(),
                ..MpcConfig::default()
            };
            let p = build_prediction(&d, n).unwrap();
            for _ in 0..20 {
                let x = ExternalState::from_fn(|_, _| rng.random_range(-1.0..1.0));
                let window: Vec<Point> = (0..n)
                    .map(|_| Point::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect();
                let quads: Vec<_> = (0..n).map(|_| square(0.0, 0.0)).collect();
                let qp = assemble_qp(&p, &config, &x, &window, &quads).unwrap();
                // cost oracle straight from the tracking objective, by simulation
                let cost = |u: &DVector<f64>| {
                    let mut s = x;
                    let mut j = 0.0;
                    for h in 0..n {
                        let uh = Vector3::new(u[3 * h], u[3 * h + 1], u[3 * h + 2]);
                        s = step_external(&d, &s, &uh);
                        let (ex, ey) = (s[0] - window[h].x, s[1] - window[h].y);
                        j +=
                            0.5 * (uh.dot(&uh) + config.beta * (f_diag[2 * h] * ex * ex + f_diag[2 * h + 1] * ey * ey));
                    }
                    j
                };
                let u = DVector::from_fn(3 * n, |_, _| rng.random_range(-2.0..2.0));
                let grad = &qp.w1 * &u + &qp.w2;
                for i in 0..3 * n {
                    let mut up = u.clone();
                    let mut dn = u.clone();
                    up[i] += 1e-6;
                    dn[i] -= 1e-6;
                    let fd = (cost(&up) - cost(&dn)) / 2e-6;
                    assert!(
                        (fd - grad[i]).abs() < 1e-4,
                        "n {n} component {i}: fd {fd} vs {}",
                        grad[i]
                    );
                }
            }
        }
    }

    #[test]
    fn window_length_must_match() {
        let d = ExternalDynamics::new(0.05).unwrap();
        let p = build_prediction(&d, 2).unwrap();
        let config = MpcConfig {
            n_tau: 2,
            ..MpcConfig::default()
        };
        let err = assemble_qp(
            &p,
            &config,
            &ExternalState::zeros(),
            &[Point::new(0.0, 0.0)],
            &[square(0.0, 0.0)],
        );
        assert!(matches!(err, Err(ControlError::Dimension(_))));
    }
}
