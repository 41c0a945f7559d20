//! Incremental Bowyer-Watson Delaunay triangulation.
//!
//! Points are inserted in input order into a super-triangle; each insertion
//! digs the cavity of circumcircle-violating triangles and re-triangulates
//! its boundary. After the build the super vertices are dropped and the
//! structure supports further incremental insertion of interior points,
//! which is what the interpolation layer leans on.

use super::{in_circle, orient, Point2, Tolerances};
use crate::error::{Error, Result};

const SUPER_SCALE: f64 = 1024.0;

#[derive(Debug, Clone)]
struct Tri {
    /// CCW vertex indices.
    v: [usize; 3],
    /// nbr[i] is the triangle sharing edge (v[i], v[(i+1)%3]).
    nbr: [Option<usize>; 3],
    alive: bool,
}

/// A Delaunay triangulation with per-edge neighbor adjacency.
#[derive(Debug, Clone)]
pub struct Triangulation {
    points: Vec<Point2>,
    tris: Vec<Tri>,
    tol: Tolerances,
    last_tri: usize,
    alive_count: usize,
}

impl Triangulation {
    /// Build the triangulation of `points` (at least 3, not all collinear,
    /// no duplicates within the adaptive threshold).
    pub fn build(points: &[Point2]) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::DegenerateInput(format!(
                "triangulation needs at least 3 points, got {}",
                points.len()
            )));
        }
        for p in points {
            if !p.is_finite() {
                return Err(Error::DegenerateInput("non-finite coordinate".into()));
            }
        }
        let tol = Tolerances::for_points(points)?;
        check_duplicates(points, tol.dup_threshold)?;
        check_not_collinear(points, &tol)?;

        // Super-triangle far outside the data.
        let cx = points.iter().map(|p| p.x).sum::<f64>() / points.len() as f64;
        let cy = points.iter().map(|p| p.y).sum::<f64>() / points.len() as f64;
        let r = SUPER_SCALE * tol.diag;
        let n = points.len();
        let mut all = points.to_vec();
        for k in 0..3 {
            let t = std::f64::consts::FRAC_PI_2 + 2.0 * std::f64::consts::PI * k as f64 / 3.0;
            all.push(Point2::new(cx + 2.0 * r * t.cos(), cy + 2.0 * r * t.sin()));
        }

        let mut tri = Triangulation {
            points: all,
            tris: vec![Tri { v: [n, n + 1, n + 2], nbr: [None; 3], alive: true }],
            tol,
            last_tri: 0,
            alive_count: 1,
        };
        for i in 0..n {
            tri.insert_index(i)?;
        }
        tri.finalize(n)?;
        Ok(tri)
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    /// Triangles as CCW vertex-index triples.
    pub fn triangles(&self) -> Vec<[usize; 3]> {
        self.tris.iter().filter(|t| t.alive).map(|t| t.v).collect()
    }

    /// Neighbor triangle indices aligned with [`Self::triangles`]: entry k of
    /// a triangle is the triangle sharing edge (v[k], v[(k+1)%3]).
    pub fn neighbors(&self) -> Vec<[Option<usize>; 3]> {
        // After finalize the alive set is compact, so indices line up.
        self.tris.iter().filter(|t| t.alive).map(|t| t.nbr).collect()
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    /// Delaunay neighbors of every vertex, each list sorted ascending.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut sets: Vec<Vec<usize>> = vec![Vec::new(); self.points.len()];
        for t in self.tris.iter().filter(|t| t.alive) {
            for i in 0..3 {
                let a = t.v[i];
                let b = t.v[(i + 1) % 3];
                sets[a].push(b);
                sets[b].push(a);
            }
        }
        for s in &mut sets {
            s.sort_unstable();
            s.dedup();
        }
        sets
    }

    /// Insert one additional point that lies strictly inside the convex
    /// hull of the current vertex set. Returns the new vertex index.
    pub fn insert(&mut self, p: Point2) -> Result<usize> {
        if !p.is_finite() {
            return Err(Error::DegenerateInput("non-finite coordinate".into()));
        }
        let idx = self.points.len();
        self.points.push(p);
        match self.insert_index(idx) {
            Ok(()) => Ok(idx),
            Err(e) => {
                self.points.pop();
                Err(e)
            }
        }
    }

    fn insert_index(&mut self, pi: usize) -> Result<()> {
        let p = self.points[pi];
        let t0 = self.locate(&p)?;

        // Cavity: the containing triangle plus every reachable triangle
        // whose circumcircle strictly contains p.
        let mut bad = vec![false; self.tris.len()];
        let mut cavity = vec![t0];
        bad[t0] = true;
        let mut queue = vec![t0];
        while let Some(t) = queue.pop() {
            for k in 0..3 {
                if let Some(nb) = self.tris[t].nbr[k] {
                    if !bad[nb] && self.in_circumcircle(nb, &p) {
                        bad[nb] = true;
                        cavity.push(nb);
                        queue.push(nb);
                    }
                }
            }
        }

        // Expand across boundary edges the new point is (nearly) collinear
        // with, so no inverted or sliver triangle is created.
        loop {
            let boundary = self.cavity_boundary(&cavity, &bad);
            let mut grew = false;
            for &(a, b, outside) in &boundary {
                if orient(&self.points[a], &self.points[b], &p) <= self.tol.orient_eps {
                    match outside {
                        Some(nb) if !bad[nb] => {
                            bad[nb] = true;
                            cavity.push(nb);
                            grew = true;
                        }
                        _ => {
                            return Err(Error::DegenerateInput(
                                "insertion point on or outside the hull".into(),
                            ))
                        }
                    }
                }
            }
            if !grew {
                break;
            }
        }
        let boundary = self.cavity_boundary(&cavity, &bad);

        for &t in &cavity {
            self.tris[t].alive = false;
        }
        self.alive_count -= cavity.len();

        // Fan of new triangles (a, b, p), linked to each other around p and
        // to the surviving outside neighbors across the boundary edges.
        let mut ring: std::collections::HashMap<(usize, usize), usize> =
            std::collections::HashMap::with_capacity(2 * boundary.len());
        let mut created = Vec::with_capacity(boundary.len());
        for &(a, b, outside) in &boundary {
            let ti = self.tris.len();
            self.tris.push(Tri { v: [a, b, pi], nbr: [outside, None, None], alive: true });
            if let Some(o) = outside {
                let ot = &mut self.tris[o];
                for k in 0..3 {
                    if ot.v[k] == b && ot.v[(k + 1) % 3] == a {
                        ot.nbr[k] = Some(ti);
                    }
                }
            }
            ring.insert((b, pi), ti); // edge index 1 of ti
            ring.insert((pi, a), ti); // edge index 2 of ti
            created.push(ti);
        }
        self.alive_count += created.len();
        for &ti in &created {
            let (a, b) = (self.tris[ti].v[0], self.tris[ti].v[1]);
            self.tris[ti].nbr[1] = ring.get(&(pi, b)).copied();
            self.tris[ti].nbr[2] = ring.get(&(a, pi)).copied();
        }
        self.last_tri = created[0];
        Ok(())
    }

    /// Directed boundary edges (a, b, outside-neighbor) of the cavity,
    /// oriented as they appear in their cavity triangle (interior left).
    fn cavity_boundary(
        &self,
        cavity: &[usize],
        bad: &[bool],
    ) -> Vec<(usize, usize, Option<usize>)> {
        let mut edges = Vec::with_capacity(cavity.len() + 2);
        for &t in cavity {
            for k in 0..3 {
                let nb = self.tris[t].nbr[k];
                let outside = match nb {
                    Some(x) if bad[x] => continue,
                    other => other,
                };
                edges.push((self.tris[t].v[k], self.tris[t].v[(k + 1) % 3], outside));
            }
        }
        edges
    }

    fn in_circumcircle(&self, t: usize, p: &Point2) -> bool {
        let [a, b, c] = self.tris[t].v;
        in_circle(&self.points[a], &self.points[b], &self.points[c], p) > self.tol.incircle_eps
    }

    /// Walk toward `p` from the last created triangle; falls back to a
    /// linear scan when the walk cycles on degenerate data.
    fn locate(&self, p: &Point2) -> Result<usize> {
        let mut t = self.last_tri;
        if !self.tris[t].alive {
            t = self
                .tris
                .iter()
                .position(|x| x.alive)
                .ok_or_else(|| Error::DegenerateInput("empty triangulation".into()))?;
        }
        let max_steps = 3 * self.tris.len() + 16;
        let mut steps = 0usize;
        'walk: loop {
            steps += 1;
            if steps > max_steps {
                break;
            }
            let tri = &self.tris[t];
            for k in 0..3 {
                let a = &self.points[tri.v[k]];
                let b = &self.points[tri.v[(k + 1) % 3]];
                if orient(a, b, p) < -self.tol.orient_eps {
                    match tri.nbr[k] {
                        Some(nb) => {
                            t = nb;
                            continue 'walk;
                        }
                        None => {
                            return Err(Error::DegenerateInput(
                                "point outside the triangulated domain".into(),
                            ))
                        }
                    }
                }
            }
            return Ok(t);
        }
        // Exhaustive fallback.
        for (i, tri) in self.tris.iter().enumerate() {
            if !tri.alive {
                continue;
            }
            let inside = (0..3).all(|k| {
                orient(
                    &self.points[tri.v[k]],
                    &self.points[tri.v[(k + 1) % 3]],
                    p,
                ) >= -self.tol.orient_eps
            });
            if inside {
                return Ok(i);
            }
        }
        Err(Error::DegenerateInput("point location failed".into()))
    }

    /// Drop super-triangle vertices and compact storage.
    fn finalize(&mut self, n_real: usize) -> Result<()> {
        let mut kept: Vec<Tri> = Vec::with_capacity(self.tris.len());
        for t in &self.tris {
            if t.alive && t.v.iter().all(|&v| v < n_real) {
                kept.push(Tri { v: t.v, nbr: [None; 3], alive: true });
            }
        }
        if kept.is_empty() {
            return Err(Error::DegenerateInput("no real triangles survived".into()));
        }
        // Rebuild adjacency from shared directed edges.
        let mut edge_map: std::collections::HashMap<(usize, usize), usize> =
            std::collections::HashMap::with_capacity(3 * kept.len());
        for (i, t) in kept.iter().enumerate() {
            for k in 0..3 {
                edge_map.insert((t.v[k], t.v[(k + 1) % 3]), i);
            }
        }
        for i in 0..kept.len() {
            for k in 0..3 {
                let a = kept[i].v[k];
                let b = kept[i].v[(k + 1) % 3];
                kept[i].nbr[k] = edge_map.get(&(b, a)).copied();
            }
        }
        self.points.truncate(n_real);
        self.alive_count = kept.len();
        self.tris = kept;
        self.last_tri = 0;
        Ok(())
    }
}

fn check_duplicates(points: &[Point2], threshold: f64) -> Result<()> {
    use std::collections::HashMap;
    let cell = threshold.max(f64::MIN_POSITIVE);
    let key = |p: &Point2| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let (kx, ky) = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(bucket) = grid.get(&(kx + dx, ky + dy)) {
                    for &j in bucket {
                        if points[j].dist(p) <= threshold {
                            return Err(Error::DegenerateInput(format!(
                                "duplicate points at indices {j} and {i}"
                            )));
                        }
                    }
                }
            }
        }
        grid.entry((kx, ky)).or_default().push(i);
    }
    Ok(())
}

fn check_not_collinear(points: &[Point2], tol: &Tolerances) -> Result<()> {
    let p0 = &points[0];
    let p1 = points
        .iter()
        .max_by(|a, b| a.dist2(p0).partial_cmp(&b.dist2(p0)).unwrap())
        .unwrap();
    if points
        .iter()
        .all(|q| orient(p0, p1, q).abs() <= tol.orient_eps)
    {
        return Err(Error::DegenerateInput("all points collinear".into()));
    }
    Ok(())
}

/// Convenience: build a triangulation (spec-level `delaunay` operation).
pub fn delaunay(points: &[Point2]) -> Result<Triangulation> {
    Triangulation::build(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::circumcircle;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn three_points_one_triangle() {
        let pts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(0.5, 1.5),
        ];
        let tri = Triangulation::build(&pts).unwrap();
        assert_eq!(tri.triangles().len(), 1);
    }

    #[test]
    fn unit_square_two_triangles_with_empty_circumcircles() {
        let pts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        let tri = Triangulation::build(&pts).unwrap();
        let tris = tri.triangles();
        assert_eq!(tris.len(), 2);
        // Both triangles share a diagonal.
        let mut edge_count = std::collections::HashMap::new();
        for t in &tris {
            for k in 0..3 {
                let (a, b) = (t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3]));
                *edge_count.entry((a, b)).or_insert(0) += 1;
            }
        }
        assert_eq!(edge_count.values().filter(|&&c| c == 2).count(), 1);
        // All 4 circumcircle tests pass (cocircular: determinant ~ 0).
        for t in &tris {
            for (i, p) in pts.iter().enumerate() {
                if t.contains(&i) {
                    continue;
                }
                let v = in_circle(&pts[t[0]], &pts[t[1]], &pts[t[2]], p);
                assert!(v <= 1e-9, "in-circle violation: {v}");
            }
        }
    }

    #[test]
    fn random_cloud_satisfies_empty_circumcircle() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let pts: Vec<Point2> = (0..30)
            .map(|_| Point2::new(rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)))
            .collect();
        let tri = Triangulation::build(&pts).unwrap();
        assert_delaunay(&pts, &tri);
    }

    #[test]
    fn cocircular_ring_builds() {
        let n = 64;
        let pts: Vec<Point2> = (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                Point2::new(t.cos(), t.sin())
            })
            .collect();
        let tri = Triangulation::build(&pts).unwrap();
        assert_delaunay(&pts, &tri);
        // A triangulation of an n-gon has n-2 triangles.
        assert_eq!(tri.triangles().len(), n - 2);
    }

    #[test]
    fn rejects_duplicates_and_collinear() {
        let dup = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ];
        assert!(Triangulation::build(&dup).is_err());
        let col: Vec<Point2> = (0..6).map(|i| Point2::new(i as f64, i as f64)).collect();
        assert!(Triangulation::build(&col).is_err());
    }

    #[test]
    fn incremental_insert_preserves_delaunay() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let pts: Vec<Point2> = (0..25)
            .map(|_| Point2::new(rng.gen_range(0.0..4.0), rng.gen_range(0.0..4.0)))
            .collect();
        let mut tri = Triangulation::build(&pts).unwrap();
        // Insert well-interior points.
        for _ in 0..10 {
            let p = Point2::new(rng.gen_range(1.5..2.5), rng.gen_range(1.5..2.5));
            tri.insert(p).unwrap();
        }
        let all = tri.points().to_vec();
        assert_delaunay(&all, &tri);
    }

    #[test]
    fn triangles_cover_hull_area() {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let pts: Vec<Point2> = (0..40)
            .map(|_| Point2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)))
            .collect();
        let tri = Triangulation::build(&pts).unwrap();
        let hull = crate::geometry::convex_hull(&pts).unwrap();
        let hull_area = crate::geometry::polygon_area(&hull);
        let tri_area: f64 = tri
            .triangles()
            .iter()
            .map(|t| {
                crate::geometry::polygon_area(&[pts[t[0]], pts[t[1]], pts[t[2]]])
            })
            .sum();
        assert!(
            (tri_area - hull_area).abs() <= 1e-9 * hull_area,
            "triangle area {tri_area} vs hull {hull_area}"
        );
    }

    fn assert_delaunay(pts: &[Point2], tri: &Triangulation) {
        let tol = Tolerances::for_points(pts).unwrap();
        let scale = tol.diag.powi(4);
        for t in tri.triangles() {
            let (a, b, c) = (&pts[t[0]], &pts[t[1]], &pts[t[2]]);
            assert!(orient(a, b, c) > 0.0, "triangle not CCW");
            for (i, p) in pts.iter().enumerate() {
                if t.contains(&i) {
                    continue;
                }
                let v = in_circle(a, b, c, p) / scale;
                assert!(v <= 1e-9, "empty-circumcircle violated by {v}");
            }
            // circumcircle exists (non-degenerate triangle)
            circumcircle(a, b, c).unwrap();
        }
    }
}
