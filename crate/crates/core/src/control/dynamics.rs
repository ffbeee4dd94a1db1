use nalgebra::{Matrix2, SMatrix, SVector, Vector2, Vector3};

use super::ControlError;

pub type ExternalState = SVector<f64, 12>;
pub type Snap = Vector3<f64>;

/// Slices of the stacked external state `[r, v, a, j]`.
pub trait ExternalStateExt {
    fn position(&self) -> Vector3<f64>;
    fn velocity(&self) -> Vector3<f64>;
    fn from_position(r: Vector3<f64>) -> Self;
}

impl ExternalStateExt for ExternalState {
    fn position(&self) -> Vector3<f64> {
        self.fixed_rows::<3>(0).into_owned()
    }

    fn velocity(&self) -> Vector3<f64> {
        self.fixed_rows::<3>(3).into_owned()
    }

    fn from_position(r: Vector3<f64>) -> Self {
        let mut x = Self::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&r);
        x
    }
}

/// Quadruple integrator per axis, snap input.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalDynamics {
    pub dt: f64,
    pub a: SMatrix<f64, 12, 12>,
    pub b: SMatrix<f64, 12, 3>,
}

impl ExternalDynamics {
    pub fn new(dt: f64) -> Result<Self, ControlError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(ControlError::InvalidConfig(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let mut a = SMatrix::<f64, 12, 12>::identity();
        for i in 0..9 {
            a[(i, i + 3)] = dt;
        }
        let mut b = SMatrix::<f64, 12, 3>::zeros();
        for i in 0..3 {
            b[(9 + i, i)] = dt;
        }
        Ok(Self { dt, a, b })
    }
}

/// `x_{k+1} = A x_k + B u_k`, evaluated block-wise.
pub fn step_external(dynamics: &ExternalDynamics, x: &ExternalState, u: &Snap) -> ExternalState {
    let dt = dynamics.dt;
    let mut next = *x;
    for i in 0..9 {
        next[i] = x[i] + dt * x[i + 3];
    }
    for i in 0..3 {
        next[9 + i] = x[9 + i] + dt * u[i];
    }
    next
}

/// Yaw and yaw rate under linear state feedback `v = k_psi z`.
#[derive(Debug, Clone, PartialEq)]
pub struct InternalDynamics {
    pub dt: f64,
    pub k_psi: [f64; 2],
    pub a: Matrix2<f64>,
    spectral_radius: f64,
}

impl InternalDynamics {
    /// Fails unless the closed loop is Schur stable.
    pub fn new(dt: f64, k_psi: [f64; 2]) -> Result<Self, ControlError> {
        if !(dt > 0.0) || !dt.is_finite() || !k_psi.iter().all(|k| k.is_finite()) {
            return Err(ControlError::InvalidConfig(
                "internal dynamics need a positive dt and finite gains".into(),
            ));
        }
        let a = Matrix2::new(1.0, dt, k_psi[0], 1.0 + k_psi[1]);
        let rho = spectral_radius(&a);
        if !(rho < 1.0) {
            return Err(ControlError::UnstableYaw { spectral_radius: rho });
        }
        Ok(Self {
            dt,
            k_psi,
            a,
            spectral_radius: rho,
        })
    }

    pub fn spectral_radius(&self) -> f64 {
        self.spectral_radius
    }
}

/// Gains giving a double closed-loop eigenvalue at `lambda`.
pub fn place_double_pole(dt: f64, lambda: f64) -> [f64; 2] {
    [-(1.0 - lambda).powi(2) / dt, 2.0 * lambda - 2.0]
}

/// Largest eigenvalue modulus of a real 2x2 matrix.
pub fn spectral_radius(a: &Matrix2<f64>) -> f64 {
    let tr = a.trace();
    let det = a.determinant();
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        ((tr + s) / 2.0).abs().max(((tr - s) / 2.0).abs())
    } else {
        // complex pair: |zeta|^2 = det
        det.sqrt()
    }
}

pub fn step_internal(dynamics: &InternalDynamics, z: &Vector2<f64>) -> Vector2<f64> {
    dynamics.a * z
}
