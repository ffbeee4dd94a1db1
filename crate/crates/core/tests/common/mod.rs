//! Independent oracles and random instance generators shared by the
//! integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rand::Rng;
use streamplan_core::atlas::{NodeId, PlanningAtlas};
use streamplan_core::control::QpProblem;
use streamplan_core::env::{BoundaryPolyline, NavigableChannel};
use streamplan_core::meshgen::{tfi_initialize, BoundaryNodeSet, ChannelGrid};
use streamplan_core::search::OccupancyGrid;
use streamplan_core::{Environment, Point};

/// Min-heap entry keyed on a float distance.
#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Textbook Dijkstra over any successor function on `n` dense indices.
pub fn dijkstra(n: usize, start: usize, goal: usize, mut succ: impl FnMut(usize) -> Vec<(usize, f64)>) -> Option<f64> {
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    dist[start] = 0.0;
    heap.push(Entry(0.0, start));
    while let Some(Entry(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        if u == goal {
            return Some(d);
        }
        for (v, w) in succ(u) {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Entry(nd, v));
            }
        }
    }
    None
}

pub fn dijkstra_atlas(atlas: &PlanningAtlas, start: NodeId, goal: NodeId) -> Option<f64> {
    let cols = atlas.cols();
    let idx = |id: NodeId| id.row * cols + id.col;
    dijkstra(atlas.len(), idx(start), idx(goal), |u| {
        let id = NodeId::new(u / cols, u % cols);
        atlas
            .neighbors(id)
            .unwrap()
            .into_iter()
            .map(|(n, c)| (idx(n), c))
            .collect()
    })
}

/// Exact step-count Dijkstra on an occupancy grid; returns
/// `(straight, diagonal)` of a shortest route, compared by exact length.
pub fn dijkstra_grid(grid: &OccupancyGrid, start: NodeId, goal: NodeId) -> Option<(u32, u32)> {
    let cols = grid.cols;
    let n = grid.rows * cols;
    let idx = |id: NodeId| id.row * cols + id.col;
    let mut best: Vec<Option<(u32, u32)>> = vec![None; n];
    let len = |s: (u32, u32)| s.0 as f64 + s.1 as f64 * std::f64::consts::SQRT_2;
    let mut heap = BinaryHeap::new();
    best[idx(start)] = Some((0, 0));
    heap.push(Entry(0.0, idx(start)));
    while let Some(Entry(d, u)) = heap.pop() {
        let cur = best[u].unwrap();
        if d > len(cur) {
            continue;
        }
        if u == idx(goal) {
            return Some(cur);
        }
        let id = NodeId::new(u / cols, u % cols);
        for (nb, step) in grid.neighbors(id) {
            let cand = (cur.0 + step.straight, cur.1 + step.diagonal);
            let v = idx(nb);
            if best[v].is_none_or(|b| len(cand) < len(b)) {
                best[v] = Some(cand);
                heap.push(Entry(len(cand), v));
            }
        }
    }
    None
}

/// Perturbed lattice with random interface rows. Interface copies either
/// coincide or are pulled apart by more than epsilon, and some interface
/// nodes are flagged outright.
pub fn random_atlas<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> PlanningAtlas {
    let n = rows * cols;
    let interface: Vec<bool> = (0..rows)
        .map(|r| r > 0 && r + 1 < rows && rng.random_bool(0.3))
        .collect();
    let mut channel_of_row = Vec::with_capacity(rows);
    let mut ch = 1;
    for &i in &interface {
        channel_of_row.push(ch);
        if i {
            ch += 1;
        }
    }
    let below: Vec<Point> = (0..n)
        .map(|i| {
            Point::new(
                (i % cols) as f64 + rng.random_range(-0.3..0.3),
                (i / cols) as f64 + rng.random_range(-0.3..0.3),
            )
        })
        .collect();
    let mut above = below.clone();
    let mut flagged = vec![false; n];
    for (r, _) in interface.iter().enumerate().filter(|(_, &i)| i) {
        for c in 0..cols {
            let i = r * cols + c;
            match rng.random_range(0..10) {
                0..=2 => flagged[i] = true,
                3 => above[i] = Point::new(below[i].x + rng.random_range(0.01..0.2), below[i].y),
                _ => {}
            }
        }
    }
    PlanningAtlas::from_nodes(rows, cols, interface, below, above, flagged, channel_of_row, 1e-6).unwrap()
}

pub fn random_grid<R: Rng>(rng: &mut R, rows: usize, cols: usize, density: f64) -> OccupancyGrid {
    let blocked: Vec<bool> = (0..rows * cols).map(|_| rng.random_bool(density)).collect();
    OccupancyGrid::from_mask(Point::new(0.0, 0.0), 0.5, rows, cols, blocked).unwrap()
}

/// Jacobi iteration of the same discrete inverse-Laplace system: every node
/// is updated from the previous iterate only.
pub fn jacobi_oracle(init: &ChannelGrid, tolerance: f64, max_sweeps: usize) -> (Array2<f64>, Array2<f64>, usize) {
    let mut x = init.x.clone();
    let mut y = init.y.clone();
    let (mi, mk) = x.dim();
    for sweep in 1..=max_sweeps {
        let (ox, oy) = (x.clone(), y.clone());
        let mut worst: f64 = 0.0;
        for k in 1..mk - 1 {
            for i in 1..mi - 1 {
                let xp = 0.5 * (ox[[i + 1, k]] - ox[[i - 1, k]]);
                let yp = 0.5 * (oy[[i + 1, k]] - oy[[i - 1, k]]);
                let xq = 0.5 * (ox[[i, k + 1]] - ox[[i, k - 1]]);
                let yq = 0.5 * (oy[[i, k + 1]] - oy[[i, k - 1]]);
                let a = xq * xq + yq * yq;
                let b = xp * xq + yp * yq;
                let c = xp * xp + yp * yp;
                let solve = |f: &Array2<f64>| {
                    let cross = 0.25 * (f[[i + 1, k + 1]] - f[[i + 1, k - 1]] - f[[i - 1, k + 1]] + f[[i - 1, k - 1]]);
                    (a * (f[[i + 1, k]] + f[[i - 1, k]]) + c * (f[[i, k + 1]] + f[[i, k - 1]]) - 2.0 * b * cross)
                        / (2.0 * (a + c))
                };
                x[[i, k]] = solve(&ox);
                y[[i, k]] = solve(&oy);
                worst = worst.max((x[[i, k]] - ox[[i, k]]).hypot(y[[i, k]] - oy[[i, k]]));
            }
        }
        if worst < tolerance {
            return (x, y, sweep);
        }
    }
    panic!("Jacobi oracle did not settle within {max_sweeps} sweeps");
}

/// Rectangular channel `[0, 10] x [0, 5]` whose bottom boundary detours over
/// a box obstacle `[4, 6] x [0, 1]`.
pub fn detour_channel() -> NavigableChannel {
    let p = Point::new;
    NavigableChannel {
        index: 1,
        bottom: BoundaryPolyline::new(
            vec![
                p(0.0, 0.0),
                p(4.0, 0.0),
                p(4.0, 1.0),
                p(6.0, 1.0),
                p(6.0, 0.0),
                p(10.0, 0.0),
            ],
            vec![false, true, true, true, false],
        )
        .unwrap(),
        right: BoundaryPolyline::straight(p(10.0, 0.0), p(10.0, 5.0)).unwrap(),
        top: BoundaryPolyline::straight(p(0.0, 5.0), p(10.0, 5.0)).unwrap(),
        left: BoundaryPolyline::straight(p(0.0, 0.0), p(0.0, 5.0)).unwrap(),
    }
}

pub fn detour_initial_grid(m_phi: usize, m_rows: usize) -> ChannelGrid {
    let nodes = BoundaryNodeSet::for_channel(&detour_channel(), m_phi, m_rows).unwrap();
    tfi_initialize(1, &nodes).unwrap()
}

/// Obstacle-free single-channel environment over the given rectangle.
pub fn empty_rectangle(xmin: f64, xmax: f64, ymin: f64, ymax: f64, m_phi: usize, m_rows: usize) -> Environment {
    let doc = serde_json::json!({
        "bounds": {"xmin": xmin, "xmax": xmax, "ymin": ymin, "ymax": ymax},
        "obstacles": [],
        "psi_levels": [0.0, 1.0],
        "phi_range": [0.0, 1.0],
        "grid": {"m_phi": m_phi, "m_rows": [m_rows]}
    });
    Environment::from_json(&doc.to_string()).unwrap()
}

/// Random strictly convex QP with a known feasible point. Constraint counts
/// satisfy `n_eq < n` and `n_eq + n_in <= 8`.
pub fn random_qp<R: Rng>(rng: &mut R, n: usize, n_in: usize, n_eq: usize) -> QpProblem {
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let w1 = m.transpose() * &m + DMatrix::identity(n, n) * 0.1;
    let w1 = 0.5 * (&w1 + w1.transpose());
    let w2 = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
    let u0 = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let a_in = DMatrix::from_fn(n_in, n, |_, _| rng.random_range(-1.0..1.0));
    let slack = DVector::from_fn(n_in, |_, _| rng.random_range(0.0..0.5));
    let b_in = &a_in * &u0 + slack;
    let a_eq = DMatrix::from_fn(n_eq, n, |_, _| rng.random_range(-1.0..1.0));
    let b_eq = &a_eq * &u0;
    QpProblem::new(w1, w2, a_in, b_in, a_eq, b_eq).unwrap()
}

/// Global minimum by enumerating every subset of inequality rows held
/// tight, solving the equality-constrained KKT system for each and keeping
/// the best feasible candidate.
pub fn enumerate_qp(p: &QpProblem) -> Option<(DVector<f64>, f64)> {
    let n = p.dim();
    let m_in = p.a_ineq.nrows();
    let m_eq = p.a_eq.nrows();
    let mut best: Option<(DVector<f64>, f64)> = None;
    for mask in 0u32..(1 << m_in) {
        let active: Vec<usize> = (0..m_in).filter(|i| mask & (1 << i) != 0).collect();
        let k = m_eq + active.len();
        if k > n {
            continue;
        }
        let mut kkt = DMatrix::zeros(n + k, n + k);
        let mut rhs = DVector::zeros(n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(&p.w1);
        rhs.rows_mut(0, n).copy_from(&(-&p.w2));
        let rows: Vec<(nalgebra::RowDVector<f64>, f64)> = (0..m_eq)
            .map(|r| (p.a_eq.row(r).into_owned(), p.b_eq[r]))
            .chain(active.iter().map(|&r| (p.a_ineq.row(r).into_owned(), p.b_ineq[r])))
            .collect();
        for (j, (row, b)) in rows.iter().enumerate() {
            kkt.view_mut((n + j, 0), (1, n)).copy_from(row);
            kkt.view_mut((0, n + j), (n, 1)).copy_from(&row.transpose());
            rhs[n + j] = *b;
        }
        let Some(sol) = kkt.clone().lu().solve(&rhs) else {
            continue;
        };
        if !sol.iter().all(|v| v.is_finite()) || (&kkt * &sol - &rhs).amax() > 1e-9 {
            continue;
        }
        let u = sol.rows(0, n).into_owned();
        let feasible = (0..m_in).all(|r| (p.a_ineq.row(r) * &u)[0] <= p.b_ineq[r] + 1e-9);
        if !feasible {
            continue;
        }
        let f = p.objective(&u);
        if best.as_ref().is_none_or(|(_, bf)| f < *bf) {
            best = Some((u, f));
        }
    }
    best
}

/// Stationarity, primal and dual feasibility and complementarity residual of
/// a candidate solution, recomputed from scratch.
pub fn kkt_residual(p: &QpProblem, u: &DVector<f64>, lam: &DVector<f64>, mu: &DVector<f64>) -> f64 {
    let grad = &p.w1 * u + &p.w2 + p.a_ineq.transpose() * lam + p.a_eq.transpose() * mu;
    let slack = &p.b_ineq - &p.a_ineq * u;
    let eq = &p.a_eq * u - &p.b_eq;
    let mut r = grad.amax();
    for i in 0..slack.len() {
        r = r
            .max((-slack[i]).max(0.0))
            .max((-lam[i]).max(0.0))
            .max((lam[i] * slack[i]).abs());
    }
    if !eq.is_empty() {
        r = r.max(eq.amax());
    }
    r
}
