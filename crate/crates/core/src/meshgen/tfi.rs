use super::{BoundaryNodeSet, ChannelGrid, MeshError, SolveDiagnostics};
use ndarray::Array2;

/// Transfinite (bilinear blending) interpolation of the four boundary node
/// sequences. Boundary rows and columns are copied verbatim; bottom/top take
/// precedence at the corners.
pub fn tfi_initialize(channel: usize, nodes: &BoundaryNodeSet) -> Result<ChannelGrid, MeshError> {
    let m_phi = nodes.bottom.len();
    let m_rows = nodes.left.len();
    if nodes.top.len() != m_phi || nodes.right.len() != m_rows {
        return Err(MeshError::InconsistentCounts(format!(
            "bottom {}, top {}, left {}, right {}",
            nodes.bottom.len(),
            nodes.top.len(),
            nodes.left.len(),
            nodes.right.len()
        )));
    }
    if m_phi < 2 || m_rows < 2 {
        return Err(MeshError::InconsistentCounts(format!("{m_phi} x {m_rows} lattice")));
    }

    let (b, t, l, r) = (
        &nodes.bottom.positions,
        &nodes.top.positions,
        &nodes.left.positions,
        &nodes.right.positions,
    );
    let mut x = Array2::zeros((m_phi, m_rows));
    let mut y = Array2::zeros((m_phi, m_rows));
    for i in 0..m_phi {
        let s = i as f64 / (m_phi - 1) as f64;
        for k in 0..m_rows {
            let q = k as f64 / (m_rows - 1) as f64;
            let blend = |bv: f64, tv: f64, lv: f64, rv: f64, c00: f64, c10: f64, c01: f64, c11: f64| {
                (1.0 - q) * bv + q * tv + (1.0 - s) * lv + s * rv
                    - ((1.0 - s) * (1.0 - q) * c00 + s * (1.0 - q) * c10 + (1.0 - s) * q * c01 + s * q * c11)
            };
            x[[i, k]] = blend(
                b[i].x,
                t[i].x,
                l[k].x,
                r[k].x,
                b[0].x,
                b[m_phi - 1].x,
                t[0].x,
                t[m_phi - 1].x,
            );
            y[[i, k]] = blend(
                b[i].y,
                t[i].y,
                l[k].y,
                r[k].y,
                b[0].y,
                b[m_phi - 1].y,
                t[0].y,
                t[m_phi - 1].y,
            );
        }
    }

    let mut on_obstacle = Array2::from_elem((m_phi, m_rows), false);
    for k in 0..m_rows {
        x[[0, k]] = l[k].x;
        y[[0, k]] = l[k].y;
        x[[m_phi - 1, k]] = r[k].x;
        y[[m_phi - 1, k]] = r[k].y;
        on_obstacle[[0, k]] |= nodes.left.obstacle_flags[k];
        on_obstacle[[m_phi - 1, k]] |= nodes.right.obstacle_flags[k];
    }
    for i in 0..m_phi {
        x[[i, 0]] = b[i].x;
        y[[i, 0]] = b[i].y;
        x[[i, m_rows - 1]] = t[i].x;
        y[[i, m_rows - 1]] = t[i].y;
        on_obstacle[[i, 0]] |= nodes.bottom.obstacle_flags[i];
        on_obstacle[[i, m_rows - 1]] |= nodes.top.obstacle_flags[i];
    }

    Ok(ChannelGrid {
        channel,
        x,
        y,
        on_obstacle,
        diagnostics: SolveDiagnostics::default(),
    })
}
