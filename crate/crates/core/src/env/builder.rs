use super::{BoundaryPolyline, EnvError, NavigableChannel, Obstacle};
use crate::geometry::{Point, Rect};

/// Derives channel boundaries for environments whose obstacles are all
/// axis-aligned rectangles.
///
/// Interface `g` (between channels `g` and `g + 1`) is the horizontal line at
/// the height obtained by mapping `psi_levels[g]` affinely onto the bounds'
/// vertical extent. Every obstacle of group `g` must straddle that line and no
/// other. The lower channel's top boundary detours along the bottom half of each
/// obstacle, the upper channel's bottom boundary along the top half; detour
/// segments are flagged as obstacle boundary.
pub fn build_channel_boundaries(
    bounds: &Rect,
    obstacles: &[Obstacle],
    psi_levels: &[f64],
) -> Result<Vec<NavigableChannel>, EnvError> {
    if psi_levels.len() < 2 || psi_levels.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(EnvError::Layout("psi_levels must be strictly increasing".into()));
    }
    let p = psi_levels.len() - 1;
    let span = psi_levels[p] - psi_levels[0];
    let line_y: Vec<f64> = psi_levels
        .iter()
        .map(|psi| bounds.ymin + (psi - psi_levels[0]) / span * bounds.height())
        .collect();

    let mut boxes = Vec::with_capacity(obstacles.len());
    for (index, obstacle) in obstacles.iter().enumerate() {
        if obstacle.group < 1 || obstacle.group >= p {
            return Err(EnvError::GroupOutOfRange {
                obstacle: index,
                group: obstacle.group,
                max: p.saturating_sub(1),
            });
        }
        let rect = as_rectangle(obstacle).ok_or(EnvError::NotRectangular { index })?;
        let g = obstacle.group;
        let straddles =
            line_y[g - 1] < rect.ymin && rect.ymin < line_y[g] && line_y[g] < rect.ymax && rect.ymax < line_y[g + 1];
        let inside = bounds.xmin < rect.xmin && rect.xmax < bounds.xmax;
        if !straddles || !inside {
            return Err(EnvError::CrossesInterface { index });
        }
        boxes.push((index, g, rect));
    }

    // groups sorted left to right, x-projections strictly disjoint
    let mut by_group: Vec<Vec<(usize, Rect)>> = vec![Vec::new(); p];
    for &(index, g, rect) in &boxes {
        by_group[g].push((index, rect));
    }
    for (g, members) in by_group.iter_mut().enumerate() {
        members.sort_by(|a, b| a.1.xmin.total_cmp(&b.1.xmin));
        for pair in members.windows(2) {
            if pair[1].1.xmin <= pair[0].1.xmax {
                return Err(EnvError::OverlappingInGroup {
                    group: g,
                    first: pair[0].0,
                    second: pair[1].0,
                });
            }
        }
    }
    for g in 1..p.saturating_sub(1) {
        for &(lower, a) in &by_group[g] {
            for &(upper, b) in &by_group[g + 1] {
                let x_overlap = a.xmin < b.xmax && b.xmin < a.xmax;
                if x_overlap && a.ymax >= b.ymin {
                    return Err(EnvError::AdjacentGroupsOverlap {
                        first: lower,
                        second: upper,
                    });
                }
            }
        }
    }

    let to_channel_err = |index: usize| move |reason: String| EnvError::Channel { index, reason };
    let mut channels = Vec::with_capacity(p);
    for j in 1..=p {
        let bottom = if j == 1 {
            BoundaryPolyline::straight(
                Point::new(bounds.xmin, bounds.ymin),
                Point::new(bounds.xmax, bounds.ymin),
            )
        } else {
            detour(bounds, line_y[j - 1], &by_group[j - 1], Detour::OverTop)
        }
        .map_err(to_channel_err(j))?;
        let top = if j == p {
            BoundaryPolyline::straight(
                Point::new(bounds.xmin, bounds.ymax),
                Point::new(bounds.xmax, bounds.ymax),
            )
        } else {
            detour(bounds, line_y[j], &by_group[j], Detour::UnderBottom)
        }
        .map_err(to_channel_err(j))?;
        let left = BoundaryPolyline::straight(bottom.first(), top.first()).map_err(to_channel_err(j))?;
        let right = BoundaryPolyline::straight(bottom.last(), top.last()).map_err(to_channel_err(j))?;
        channels.push(NavigableChannel {
            index: j,
            bottom,
            right,
            top,
            left,
        });
    }
    Ok(channels)
}

#[derive(Clone, Copy)]
enum Detour {
    /// Upper channel's bottom boundary, hugging the obstacles' upper halves.
    OverTop,
    /// Lower channel's top boundary, hugging the obstacles' lower halves.
    UnderBottom,
}

fn detour(bounds: &Rect, y: f64, members: &[(usize, Rect)], kind: Detour) -> Result<BoundaryPolyline, String> {
    let mut points = vec![Point::new(bounds.xmin, y)];
    let mut flags = Vec::new();
    for (_, rect) in members {
        let edge_y = match kind {
            Detour::OverTop => rect.ymax,
            Detour::UnderBottom => rect.ymin,
        };
        points.push(Point::new(rect.xmin, y));
        flags.push(false);
        points.extend([
            Point::new(rect.xmin, edge_y),
            Point::new(rect.xmax, edge_y),
            Point::new(rect.xmax, y),
        ]);
        flags.extend([true; 3]);
    }
    points.push(Point::new(bounds.xmax, y));
    flags.push(false);
    BoundaryPolyline::new(points, flags)
}

fn as_rectangle(obstacle: &Obstacle) -> Option<Rect> {
    let poly = &obstacle.polygon;
    if poly.len() != 4 {
        return None;
    }
    let axis_aligned = (0..4).all(|i| {
        let (a, b) = (poly[i], poly[(i + 1) % 4]);
        (a.x == b.x) != (a.y == b.y)
    });
    if !axis_aligned {
        return None;
    }
    let rect = obstacle.bounding_box();
    (rect.width() > 0.0 && rect.height() > 0.0).then_some(rect)
}
