use super::{ChannelGrid, MeshError};
use ndarray::Array2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Stop once the largest nodal displacement of a sweep falls below this (meters).
    pub tolerance: f64,
    /// Over-relaxation factor in (0, 2).
    pub omega: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50_000,
            tolerance: 1e-8,
            omega: 1.5,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), MeshError> {
        if !(self.tolerance > 0.0) {
            return Err(MeshError::InvalidConfig("tolerance must be positive".into()));
        }
        if !(self.omega > 0.0 && self.omega < 2.0) {
            return Err(MeshError::InvalidConfig("relaxation factor must lie in (0, 2)".into()));
        }
        if self.max_iterations == 0 {
            return Err(MeshError::InvalidConfig("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// `a`, `b`, `c` over interior nodes, arrays shaped `(m_phi - 2) x (m_j - 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricCoefficients {
    pub a: Array2<f64>,
    pub b: Array2<f64>,
    pub c: Array2<f64>,
}

struct Stencil {
    a: f64,
    b: f64,
    c: f64,
}

#[inline]
fn stencil(x: &Array2<f64>, y: &Array2<f64>, i: usize, k: usize) -> Stencil {
    let x_p = 0.5 * (x[[i + 1, k]] - x[[i - 1, k]]);
    let y_p = 0.5 * (y[[i + 1, k]] - y[[i - 1, k]]);
    let x_q = 0.5 * (x[[i, k + 1]] - x[[i, k - 1]]);
    let y_q = 0.5 * (y[[i, k + 1]] - y[[i, k - 1]]);
    Stencil {
        a: x_q * x_q + y_q * y_q,
        b: x_p * x_q + y_p * y_q,
        c: x_p * x_p + y_p * y_p,
    }
}

#[inline]
fn cross_derivative(f: &Array2<f64>, i: usize, k: usize) -> f64 {
    0.25 * (f[[i + 1, k + 1]] - f[[i + 1, k - 1]] - f[[i - 1, k + 1]] + f[[i - 1, k - 1]])
}

#[inline]
fn operator(f: &Array2<f64>, s: &Stencil, i: usize, k: usize) -> f64 {
    let f_pp = f[[i + 1, k]] - 2.0 * f[[i, k]] + f[[i - 1, k]];
    let f_qq = f[[i, k + 1]] - 2.0 * f[[i, k]] + f[[i, k - 1]];
    s.a * f_pp - 2.0 * s.b * cross_derivative(f, i, k) + s.c * f_qq
}

/// Value of `f[i,k]` that zeroes the discretized operator with the other
/// stencil entries held fixed.
#[inline]
fn pointwise_target(f: &Array2<f64>, s: &Stencil, i: usize, k: usize) -> f64 {
    let num = s.a * (f[[i + 1, k]] + f[[i - 1, k]]) + s.c * (f[[i, k + 1]] + f[[i, k - 1]])
        - 2.0 * s.b * cross_derivative(f, i, k);
    num / (2.0 * (s.a + s.c))
}

/// Coefficients of the current iterate at every interior node.
pub fn metric_coefficients(grid: &ChannelGrid) -> MetricCoefficients {
    let (m_phi, m_rows) = grid.x.dim();
    let shape = (m_phi.saturating_sub(2), m_rows.saturating_sub(2));
    let mut out = MetricCoefficients {
        a: Array2::zeros(shape),
        b: Array2::zeros(shape),
        c: Array2::zeros(shape),
    };
    for k in 1..m_rows.saturating_sub(1) {
        for i in 1..m_phi.saturating_sub(1) {
            let s = stencil(&grid.x, &grid.y, i, k);
            out.a[[i - 1, k - 1]] = s.a;
            out.b[[i - 1, k - 1]] = s.b;
            out.c[[i - 1, k - 1]] = s.c;
        }
    }
    out
}

/// `det J = x_phi y_psi - x_psi y_phi` by central differences at interior nodes.
pub fn jacobian_field(grid: &ChannelGrid) -> Array2<f64> {
    let (m_phi, m_rows) = grid.x.dim();
    let mut det = Array2::zeros((m_phi.saturating_sub(2), m_rows.saturating_sub(2)));
    let (x, y) = (&grid.x, &grid.y);
    for k in 1..m_rows.saturating_sub(1) {
        for i in 1..m_phi.saturating_sub(1) {
            let x_p = 0.5 * (x[[i + 1, k]] - x[[i - 1, k]]);
            let y_p = 0.5 * (y[[i + 1, k]] - y[[i - 1, k]]);
            let x_q = 0.5 * (x[[i, k + 1]] - x[[i, k - 1]]);
            let y_q = 0.5 * (y[[i, k + 1]] - y[[i, k - 1]]);
            det[[i - 1, k - 1]] = x_p * y_q - x_q * y_p;
        }
    }
    det
}

fn max_residual(grid: &ChannelGrid) -> f64 {
    let (m_phi, m_rows) = grid.x.dim();
    let mut worst: f64 = 0.0;
    for k in 1..m_rows.saturating_sub(1) {
        for i in 1..m_phi.saturating_sub(1) {
            let s = stencil(&grid.x, &grid.y, i, k);
            worst = worst
                .max(operator(&grid.x, &s, i, k).abs())
                .max(operator(&grid.y, &s, i, k).abs());
        }
    }
    worst
}

/// Pointwise SOR on the interior nodes, sweeping row by row (rows outer,
/// columns inner). Coefficients are re-evaluated from the current iterate at
/// each node visit; boundary nodes are never touched.
pub fn solve_elliptic(
    init: ChannelGrid,
    config: &SolverConfig,
) -> Result<(ChannelGrid, MetricCoefficients), MeshError> {
    config.validate()?;
    let mut grid = init;
    let (m_phi, m_rows) = grid.x.dim();
    let mut history = Vec::new();

    if m_phi > 2 && m_rows > 2 {
        let omega = config.omega;
        let mut converged = false;
        for _ in 0..config.max_iterations {
            let mut max_update: f64 = 0.0;
            for k in 1..m_rows - 1 {
                for i in 1..m_phi - 1 {
                    let s = stencil(&grid.x, &grid.y, i, k);
                    if !(s.a + s.c > 0.0) {
                        continue;
                    }
                    let dx = omega * (pointwise_target(&grid.x, &s, i, k) - grid.x[[i, k]]);
                    let dy = omega * (pointwise_target(&grid.y, &s, i, k) - grid.y[[i, k]]);
                    grid.x[[i, k]] += dx;
                    grid.y[[i, k]] += dy;
                    max_update = max_update.max(dx.hypot(dy));
                }
            }
            history.push(max_update);
            if !max_update.is_finite() {
                break;
            }
            if max_update < config.tolerance {
                converged = true;
                break;
            }
        }
        let residual = max_residual(&grid);
        let last = history.last().copied().unwrap_or(0.0);
        if !converged {
            return Err(MeshError::NotConverged {
                channel: grid.channel,
                iterations: history.len(),
                max_update: last,
                residual,
            });
        }
        grid.diagnostics.residual = residual;
        grid.diagnostics.max_update = last;
    }

    grid.diagnostics.iterations = history.len();
    grid.diagnostics.update_history = history;

    let det = jacobian_field(&grid);
    let mut worst: Option<(f64, (usize, usize))> = None;
    for ((i, k), &d) in det.indexed_iter() {
        if worst.is_none_or(|(w, _)| d < w) {
            worst = Some((d, (i + 1, k + 1)));
        }
    }
    grid.diagnostics.min_det_j = worst.map(|(d, _)| d);
    if let Some((d, node)) = worst {
        if !(d > 0.0) {
            return Err(MeshError::FoldedGrid {
                channel: grid.channel,
                min_det_j: d,
                node,
            });
        }
    }
    let metric = metric_coefficients(&grid);
    Ok((grid, metric))
}
