//! Clipped Voronoi diagrams, dual to the Delaunay triangulation.
//!
//! A cell is cut from the clip rectangle by the bisector half-planes
//! against the generator's Delaunay neighbors; constraints from
//! non-neighbors are redundant, so the dual adjacency is all we need.

use super::{clip_halfplane, ClipRect, Point2, Triangulation};
use crate::error::{Error, Result};

/// One clipped convex polygon per input point.
#[derive(Debug, Clone)]
pub struct VoronoiDiagram {
    pub cells: Vec<Vec<Point2>>,
    pub clip: ClipRect,
}

impl VoronoiDiagram {
    pub fn cell(&self, i: usize) -> &[Point2] {
        &self.cells[i]
    }
}

/// Voronoi cell of `points[i]` cut against the given constraint indices.
///
/// Passing the point's Delaunay neighbors yields the exact cell (other
/// bisectors are redundant); passing all indices gives a brute-force cell
/// useful as an oracle.
pub fn voronoi_cell_of(
    points: &[Point2],
    i: usize,
    neighbors: &[usize],
    clip: &ClipRect,
) -> Vec<Point2> {
    let mut poly: Vec<Point2> = clip.corners().to_vec();
    let p = points[i];
    for &j in neighbors {
        if j == i {
            continue;
        }
        let q = points[j];
        // Keep the side of the bisector closer to p: the bisector is the
        // line through mid(p,q) perpendicular to pq; directed so p is left.
        let m = p.mid(&q);
        let d = Point2::new(-(q.y - p.y), q.x - p.x);
        let b = Point2::new(m.x + d.x, m.y + d.y);
        poly = clip_halfplane(&poly, &m, &b);
        if poly.len() < 3 {
            return Vec::new();
        }
    }
    poly
}

/// The clipped Voronoi diagram dual to `tri`.
///
/// Every generator must lie inside the clip rectangle so that each cell
/// contains its generator and the cells tile the rectangle.
pub fn voronoi(tri: &Triangulation, clip: &ClipRect) -> Result<VoronoiDiagram> {
    let points = tri.points();
    for (i, p) in points.iter().enumerate() {
        if !clip.contains(p) {
            return Err(Error::DegenerateInput(format!(
                "point {i} lies outside the clip rectangle"
            )));
        }
    }
    let nbrs = tri.vertex_neighbors();
    let cells = (0..points.len())
        .map(|i| voronoi_cell_of(points, i, &nbrs[i], clip))
        .collect();
    Ok(VoronoiDiagram { cells, clip: *clip })
}
