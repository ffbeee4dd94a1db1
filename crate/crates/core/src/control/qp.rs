//! Dense strictly convex QP:
//! minimize `1/2 U'W U + w'U` subject to `A_in U <= b_in`, `A_eq U = b_eq`.
//!
//! Equalities are removed first by parametrizing `U = U_p + Z v` with `U_p`
//! the least-norm particular solution and `Z` an orthonormal null-space basis.
//! The reduced problem is solved with the Goldfarb-Idnani dual active-set
//! method, which needs no feasible starting point.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, QR};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("quadratic term is not positive definite on the feasible subspace")]
    NotPositiveDefinite,
    #[error("non-finite problem data")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub w1: DMatrix<f64>,
    pub w2: DVector<f64>,
    pub a_ineq: DMatrix<f64>,
    pub b_ineq: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
}

impl QpProblem {
    pub fn new(
        w1: DMatrix<f64>,
        w2: DVector<f64>,
        a_ineq: DMatrix<f64>,
        b_ineq: DVector<f64>,
        a_eq: DMatrix<f64>,
        b_eq: DVector<f64>,
    ) -> Result<Self, QpError> {
        let n = w2.len();
        if w1.shape() != (n, n) {
            return Err(QpError::Dimension(format!("W is {:?}, expected {n}x{n}", w1.shape())));
        }
        if a_ineq.ncols() != n || a_ineq.nrows() != b_ineq.len() {
            return Err(QpError::Dimension(format!(
                "inequality block {:?} with {} bounds",
                a_ineq.shape(),
                b_ineq.len()
            )));
        }
        if a_eq.ncols() != n || a_eq.nrows() != b_eq.len() {
            return Err(QpError::Dimension(format!(
                "equality block {:?} with {} bounds",
                a_eq.shape(),
                b_eq.len()
            )));
        }
        let finite = |m: &DMatrix<f64>| m.iter().all(|v| v.is_finite());
        if !(finite(&w1) && finite(&a_ineq) && finite(&a_eq))
            || !(w2.iter().chain(b_ineq.iter()).chain(b_eq.iter()).all(|v| v.is_finite()))
        {
            return Err(QpError::NonFinite);
        }
        Ok(Self {
            w1,
            w2,
            a_ineq,
            b_ineq,
            a_eq,
            b_eq,
        })
    }

    pub fn unconstrained(w1: DMatrix<f64>, w2: DVector<f64>) -> Result<Self, QpError> {
        let n = w2.len();
        Self::new(
            w1,
            w2,
            DMatrix::zeros(0, n),
            DVector::zeros(0),
            DMatrix::zeros(0, n),
            DVector::zeros(0),
        )
    }

    pub fn dim(&self) -> usize {
        self.w2.len()
    }

    pub fn objective(&self, u: &DVector<f64>) -> f64 {
        0.5 * u.dot(&(&self.w1 * u)) + self.w2.dot(u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpOptions {
    pub max_iterations: usize,
    /// Feasibility tolerance on unit-normalized constraint rows.
    pub tolerance: f64,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    /// `row` indexes `a_eq` when `equality`, otherwise `a_ineq`.
    Infeasible {
        row: usize,
        equality: bool,
    },
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub u: DVector<f64>,
    pub objective: f64,
    /// Inequality rows held with equality at the solution, ascending.
    pub active_set: Vec<usize>,
    /// Multipliers of `a_ineq` rows (zero off the active set).
    pub multipliers: DVector<f64>,
    pub eq_multipliers: DVector<f64>,
    pub status: QpStatus,
    pub iterations: usize,
    pub kkt_residual: f64,
}

pub fn solve_qp(problem: &QpProblem) -> Result<QpSolution, QpError> {
    solve_qp_with(problem, &QpOptions::default())
}

struct Normalized {
    rows: DMatrix<f64>,
    rhs: DVector<f64>,
    scale: Vec<f64>,
    origin: Vec<usize>,
}

/// Unit-normalizes rows and splits off the (numerically) zero ones. A zero
/// row whose bound is violated is returned as `Err(row)`.
fn normalize_rows(a: &DMatrix<f64>, b: &DVector<f64>, equality: bool, tol: f64) -> Result<Normalized, usize> {
    let norms: Vec<f64> = a.row_iter().map(|r| r.norm()).collect();
    let big = norms.iter().cloned().fold(0.0, f64::max);
    let zero = 1e-13 * big.max(1.0);
    let mut keep = Vec::new();
    for (i, &nrm) in norms.iter().enumerate() {
        if nrm <= zero {
            let bad = if equality { b[i].abs() > tol } else { b[i] < -tol };
            if bad {
                return Err(i);
            }
        } else {
            keep.push(i);
        }
    }
    let n = a.ncols();
    let mut rows = DMatrix::zeros(keep.len(), n);
    let mut rhs = DVector::zeros(keep.len());
    for (k, &i) in keep.iter().enumerate() {
        rows.set_row(k, &(a.row(i) / norms[i]));
        rhs[k] = b[i] / norms[i];
    }
    Ok(Normalized {
        rows,
        rhs,
        scale: keep.iter().map(|&i| norms[i]).collect(),
        origin: keep,
    })
}

fn infeasible(problem: &QpProblem, row: usize, equality: bool, iterations: usize) -> QpSolution {
    let n = problem.dim();
    QpSolution {
        u: DVector::zeros(n),
        objective: f64::NAN,
        active_set: Vec::new(),
        multipliers: DVector::zeros(problem.a_ineq.nrows()),
        eq_multipliers: DVector::zeros(problem.a_eq.nrows()),
        status: QpStatus::Infeasible { row, equality },
        iterations,
        kkt_residual: f64::NAN,
    }
}

pub fn solve_qp_with(problem: &QpProblem, options: &QpOptions) -> Result<QpSolution, QpError> {
    let n = problem.dim();
    let tol = options.tolerance;

    // equality elimination
    let eq = match normalize_rows(&problem.a_eq, &problem.b_eq, true, tol) {
        Ok(eq) => eq,
        Err(row) => return Ok(infeasible(problem, row, true, 0)),
    };
    let (u_p, z) = if eq.rows.nrows() == 0 {
        (DVector::zeros(n), DMatrix::identity(n, n))
    } else {
        let m = eq.rows.nrows();
        let padded = if m < n {
            let mut p = DMatrix::zeros(n, n);
            p.view_mut((0, 0), (m, n)).copy_from(&eq.rows);
            p
        } else {
            eq.rows.clone()
        };
        let padded_rows = padded.nrows();
        let svd = padded.svd(true, true);
        let (u_mat, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
        let smax = svd.singular_values.max();
        let cutoff = 1e-10 * smax.max(1e-300);
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let rank = order.iter().filter(|&&i| svd.singular_values[i] > cutoff).count();
        let mut rhs = DVector::zeros(padded_rows);
        rhs.rows_mut(0, m).copy_from(&eq.rhs);
        let mut u_p = DVector::zeros(n);
        for &i in &order[..rank] {
            let coeff = u_mat.column(i).dot(&rhs) / svd.singular_values[i];
            u_p += v_t.row(i).transpose() * coeff;
        }
        let resid = &eq.rows * &u_p - &eq.rhs;
        if let Some((k, r)) = resid.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())) {
            if r.abs() > 1e-9 {
                return Ok(infeasible(problem, eq.origin[k], true, 0));
            }
        }
        let mut z = DMatrix::zeros(n, n - rank);
        for (c, &i) in order[rank..].iter().enumerate() {
            z.set_column(c, &v_t.row(i).transpose());
        }
        (u_p, z)
    };

    let ineq = match normalize_rows(&problem.a_ineq, &problem.b_ineq, false, tol) {
        Ok(q) => q,
        Err(row) => return Ok(infeasible(problem, row, false, 0)),
    };
    let g = z.transpose() * &problem.w1 * &z;
    let g = 0.5 * (&g + g.transpose());
    let a = z.transpose() * (&problem.w1 * &u_p + &problem.w2);
    let c = &ineq.rows * &z;
    let d = &ineq.rhs - &ineq.rows * &u_p;

    let reduced = dual_active_set(&g, &a, &c, &d, options)?;
    let u = &u_p + &z * &reduced.x;

    let mut multipliers = DVector::zeros(problem.a_ineq.nrows());
    for (&k, &lam) in reduced.active.iter().zip(&reduced.multipliers) {
        multipliers[ineq.origin[k]] = lam / ineq.scale[k];
    }
    match reduced.status {
        GiStatus::Infeasible(k) => return Ok(infeasible(problem, ineq.origin[k], false, reduced.iterations)),
        GiStatus::IterationLimit => {
            let objective = problem.objective(&u);
            return Ok(QpSolution {
                u,
                objective,
                active_set: Vec::new(),
                multipliers,
                eq_multipliers: DVector::zeros(problem.a_eq.nrows()),
                status: QpStatus::IterationLimit,
                iterations: reduced.iterations,
                kkt_residual: f64::NAN,
            });
        }
        GiStatus::Optimal => {}
    }

    let mut active_set: Vec<usize> = reduced.active.iter().map(|&k| ineq.origin[k]).collect();
    active_set.sort_unstable();

    // stationarity: W U + w + A_in' lam + A_eq' mu = 0, mu by least squares
    let partial = &problem.w1 * &u + &problem.w2 + problem.a_ineq.transpose() * &multipliers;
    let eq_multipliers = if problem.a_eq.nrows() == 0 {
        DVector::zeros(0)
    } else {
        let at = problem.a_eq.transpose();
        at.clone()
            .svd(true, true)
            .solve(&(-&partial), 1e-12)
            .unwrap_or_else(|_| DVector::zeros(at.ncols()))
    };
    let grad = &partial + problem.a_eq.transpose() * &eq_multipliers;
    let kkt_residual = grad.amax();

    Ok(QpSolution {
        objective: problem.objective(&u),
        u,
        active_set,
        multipliers,
        eq_multipliers,
        status: QpStatus::Optimal,
        iterations: reduced.iterations,
        kkt_residual,
    })
}

enum GiStatus {
    Optimal,
    Infeasible(usize),
    IterationLimit,
}

struct GiResult {
    x: DVector<f64>,
    active: Vec<usize>,
    multipliers: Vec<f64>,
    status: GiStatus,
    iterations: usize,
}

/// Goldfarb-Idnani on `min 1/2 x'Gx + a'x` s.t. `c x <= d` (rows of unit
/// norm). The factorization of the active normals is rebuilt from scratch at
/// every step; problems here are small.
fn dual_active_set(
    g: &DMatrix<f64>,
    a: &DVector<f64>,
    c: &DMatrix<f64>,
    d: &DVector<f64>,
    options: &QpOptions,
) -> Result<GiResult, QpError> {
    let n = a.len();
    let tol = options.tolerance;
    if n == 0 {
        // fully pinned by the equalities
        let status = match (0..c.nrows()).find(|&i| d[i] < -tol) {
            Some(i) => GiStatus::Infeasible(i),
            None => GiStatus::Optimal,
        };
        return Ok(GiResult {
            x: DVector::zeros(0),
            active: Vec::new(),
            multipliers: Vec::new(),
            status,
            iterations: 0,
        });
    }
    let chol = Cholesky::new(g.clone()).ok_or(QpError::NotPositiveDefinite)?;
    let l = chol.l();
    let mut x = -chol.solve(a);
    let mut active: Vec<usize> = Vec::new();
    let mut u: Vec<f64> = Vec::new();
    let mut iterations = 0;

    let slack = |x: &DVector<f64>, i: usize| d[i] - c.row(i).dot(&x.transpose());

    loop {
        // most violated inactive constraint
        let mut pick: Option<(usize, f64)> = None;
        for i in 0..c.nrows() {
            if active.contains(&i) {
                continue;
            }
            let s = slack(&x, i);
            if s < -tol && pick.is_none_or(|(_, best)| s < best) {
                pick = Some((i, s));
            }
        }
        let Some((p, _)) = pick else {
            return Ok(GiResult {
                x,
                active,
                multipliers: u,
                status: GiStatus::Optimal,
                iterations,
            });
        };
        // normal in the ">=" convention
        let np: DVector<f64> = -c.row(p).transpose();
        let mut u_p = 0.0;

        loop {
            iterations += 1;
            if iterations > options.max_iterations {
                return Ok(GiResult {
                    x,
                    active,
                    multipliers: u,
                    status: GiStatus::IterationLimit,
                    iterations,
                });
            }
            let q = active.len();
            // [L^-1 N_A | I] = Q R gives a full orthogonal Q; with J = L^-T Q,
            // J1' N_A = R and J2 spans the complement.
            let mut m = DMatrix::zeros(n, q + n);
            for (k, &i) in active.iter().enumerate() {
                let col = l
                    .solve_lower_triangular(&(-c.row(i).transpose()))
                    .ok_or(QpError::NotPositiveDefinite)?;
                m.set_column(k, &col);
            }
            m.view_mut((0, q), (n, n)).fill_with_identity();
            let qr = QR::<f64, Dyn, Dyn>::new(m);
            let qm = qr.q();
            let r_q = qr.r().view((0, 0), (q, q)).into_owned();
            let linv_n = l.solve_lower_triangular(&np).ok_or(QpError::NotPositiveDefinite)?;
            let jt_n = qm.transpose() * linv_n;
            let j1n = jt_n.rows(0, q).into_owned();
            let j2n = jt_n.rows(q, n - q).into_owned();

            // primal direction z = J2 J2' n, dual direction r = R^-1 J1' n
            let z_norm2 = j2n.norm_squared();
            let independent = j2n.norm() > 1e-10 * jt_n.norm();
            let r = if q > 0 {
                r_q.solve_upper_triangular(&j1n).ok_or(QpError::NotPositiveDefinite)?
            } else {
                DVector::zeros(0)
            };

            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for k in 0..q {
                if r[k] > 0.0 {
                    let t = u[k] / r[k];
                    if t < t1 {
                        t1 = t;
                        drop = Some(k);
                    }
                }
            }
            let t2 = if independent {
                -slack(&x, p) / z_norm2
            } else {
                f64::INFINITY
            };

            if t1.is_infinite() && t2.is_infinite() {
                return Ok(GiResult {
                    x,
                    active,
                    multipliers: u,
                    status: GiStatus::Infeasible(p),
                    iterations,
                });
            }
            let t = t1.min(t2);
            if independent {
                let z = l
                    .tr_solve_lower_triangular(&(qm.columns(q, n - q) * &j2n))
                    .ok_or(QpError::NotPositiveDefinite)?;
                x += z * t;
            }
            for k in 0..q {
                u[k] -= t * r[k];
            }
            u_p += t;

            if independent && t2 <= t1 {
                active.push(p);
                u.push(u_p);
                break;
            }
            let k = drop.expect("partial step drops a constraint");
            active.remove(k);
            u.remove(k);
        }
    }
}
