//! Filtered simplicial complexes over planar point clouds.
//!
//! Four builders share one output currency, [`FilteredComplex`]: a closed,
//! monotone list of simplices with birth values, sorted by
//! (value, dimension, lexicographic vertices) so downstream reduction is
//! deterministic.
//!
//! * Vietoris-Rips: edge value = distance, higher simplices = max edge.
//! * Čech: value = minimum enclosing ball radius (combinatorial; capped
//!   at 64 points).
//! * Alpha: the Delaunay triangulation with circumradius-based values.
//! * Strong witness over MaxMin landmarks: a simplex enters at the
//!   smallest over witnesses of its largest vertex distance.
//!
//! Simplices are generated up to dimension 3 so that H2 deaths are seen;
//! diagrams downstream report dimensions 0 to 2.

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::geometry::{circumcircle, min_enclosing_ball, Point2, Triangulation};

/// Maximum simplex dimension any builder will emit.
pub const MAX_SIMPLEX_DIM: usize = 3;

/// Point cap for the combinatorial Čech construction.
pub const CECH_MAX_POINTS: usize = 64;

/// A simplex as a strictly increasing list of vertex indices (1 to 4
/// vertices, dimensions 0 to 3).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Simplex {
    verts: Vec<usize>,
}

impl Simplex {
    pub fn new(mut verts: Vec<usize>) -> Result<Self> {
        verts.sort_unstable();
        let before = verts.len();
        verts.dedup();
        if verts.is_empty() || verts.len() != before || verts.len() > MAX_SIMPLEX_DIM + 1 {
            return Err(Error::InvalidFiltration(format!(
                "bad simplex vertex list {verts:?}"
            )));
        }
        Ok(Simplex { verts })
    }

    pub fn vertex(v: usize) -> Self {
        Simplex { verts: vec![v] }
    }

    pub fn edge(a: usize, b: usize) -> Self {
        Simplex::new(vec![a, b]).expect("distinct edge endpoints")
    }

    pub fn vertices(&self) -> &[usize] {
        &self.verts
    }

    pub fn dim(&self) -> usize {
        self.verts.len() - 1
    }

    /// Codimension-1 faces (empty for vertices).
    pub fn facets(&self) -> Vec<Simplex> {
        if self.verts.len() == 1 {
            return Vec::new();
        }
        (0..self.verts.len())
            .map(|skip| {
                let verts: Vec<usize> = self
                    .verts
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &v)| v)
                    .collect();
                Simplex { verts }
            })
            .collect()
    }
}

/// What produced a filtration; carried into diagrams as metadata.
#[derive(Debug, Clone, PartialEq)]
pub enum ComplexKind {
    Rips,
    Cech,
    Alpha,
    Witness,
    Custom(String),
}

impl std::fmt::Display for ComplexKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ComplexKind::Rips => write!(f, "rips"),
            ComplexKind::Cech => write!(f, "cech"),
            ComplexKind::Alpha => write!(f, "alpha"),
            ComplexKind::Witness => write!(f, "witness"),
            ComplexKind::Custom(s) => write!(f, "{s}"),
        }
    }
}

/// Simplices with filtration values in face-before-coface order.
#[derive(Debug, Clone)]
pub struct FilteredComplex {
    entries: Vec<(Simplex, f64)>,
    pub kind: ComplexKind,
    pub params: String,
}

impl FilteredComplex {
    /// Assemble and canonically sort; fails if the closure or monotonicity
    /// invariants do not hold.
    pub fn new(
        mut entries: Vec<(Simplex, f64)>,
        kind: ComplexKind,
        params: impl Into<String>,
    ) -> Result<Self> {
        entries.sort_by(|(sa, va), (sb, vb)| {
            va.partial_cmp(vb)
                .unwrap()
                .then(sa.dim().cmp(&sb.dim()))
                .then(sa.verts.cmp(&sb.verts))
        });
        let fc = FilteredComplex { entries, kind, params: params.into() };
        fc.validate()?;
        Ok(fc)
    }

    pub fn entries(&self) -> &[(Simplex, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Simplices with value <= r (the sub-level complex as a set).
    pub fn sublevel(&self, r: f64) -> Vec<&Simplex> {
        self.entries
            .iter()
            .take_while(|(_, v)| *v <= r)
            .map(|(s, _)| s)
            .collect()
    }

    /// Closure, monotonicity, uniqueness and value sanity.
    pub fn validate(&self) -> Result<()> {
        let mut value_of: std::collections::HashMap<&[usize], f64> =
            std::collections::HashMap::with_capacity(self.entries.len());
        for (s, v) in &self.entries {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::InvalidFiltration(format!(
                    "simplex {:?} has bad value {v}",
                    s.verts
                )));
            }
            if value_of.insert(s.verts.as_slice(), *v).is_some() {
                return Err(Error::InvalidFiltration(format!(
                    "duplicate simplex {:?}",
                    s.verts
                )));
            }
        }
        for (s, v) in &self.entries {
            for f in s.facets() {
                match value_of.get(f.vertices()) {
                    None => {
                        return Err(Error::InvalidFiltration(format!(
                            "face {:?} of {:?} missing",
                            f.verts, s.verts
                        )))
                    }
                    Some(&fv) if fv > *v => {
                        return Err(Error::InvalidFiltration(format!(
                            "face {:?} (value {fv}) after coface {:?} (value {v})",
                            f.verts, s.verts
                        )))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

fn distance_matrix(points: &[Point2]) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = points[i].dist(&points[j]);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

/// Vietoris-Rips filtration: vertices at 0, edges at their length, higher
/// simplices at their largest edge; everything above `r_max` is dropped.
pub fn rips_filtration(points: &[Point2], r_max: f64, max_dim: usize) -> Result<FilteredComplex> {
    if points.is_empty() || r_max <= 0.0 {
        return Err(Error::DegenerateInput(
            "rips needs at least one point and r_max > 0".into(),
        ));
    }
    let max_dim = max_dim.min(MAX_SIMPLEX_DIM);
    let n = points.len();
    let d = distance_matrix(points);
    let mut entries: Vec<(Simplex, f64)> = Vec::new();
    for i in 0..n {
        entries.push((Simplex::vertex(i), 0.0));
    }
    if max_dim >= 1 {
        for i in 0..n {
            for j in (i + 1)..n {
                if d[i][j] <= r_max {
                    entries.push((Simplex::edge(i, j), d[i][j]));
                }
            }
        }
    }
    if max_dim >= 2 {
        for i in 0..n {
            for j in (i + 1)..n {
                if d[i][j] > r_max {
                    continue;
                }
                for k in (j + 1)..n {
                    let v = d[i][j].max(d[i][k]).max(d[j][k]);
                    if v <= r_max {
                        entries.push((Simplex::new(vec![i, j, k])?, v));
                    }
                }
            }
        }
    }
    if max_dim >= 3 {
        for i in 0..n {
            for j in (i + 1)..n {
                if d[i][j] > r_max {
                    continue;
                }
                for k in (j + 1)..n {
                    let vijk = d[i][j].max(d[i][k]).max(d[j][k]);
                    if vijk > r_max {
                        continue;
                    }
                    for l in (k + 1)..n {
                        let v = vijk.max(d[i][l]).max(d[j][l]).max(d[k][l]);
                        if v <= r_max {
                            entries.push((Simplex::new(vec![i, j, k, l])?, v));
                        }
                    }
                }
            }
        }
    }
    FilteredComplex::new(entries, ComplexKind::Rips, format!("r_max={r_max}"))
}

/// Čech filtration: a simplex enters when balls of radius r around its
/// vertices first share a point, i.e. at the minimum enclosing ball
/// radius of the vertex set. Combinatorial, so capped at
/// [`CECH_MAX_POINTS`] points.
pub fn cech_filtration(points: &[Point2], r_max: f64, max_dim: usize) -> Result<FilteredComplex> {
    if points.is_empty() || r_max <= 0.0 {
        return Err(Error::DegenerateInput(
            "cech needs at least one point and r_max > 0".into(),
        ));
    }
    if points.len() > CECH_MAX_POINTS {
        return Err(Error::TooLarge { n: points.len(), cap: CECH_MAX_POINTS });
    }
    let max_dim = max_dim.min(MAX_SIMPLEX_DIM);
    let n = points.len();
    let mut entries: Vec<(Simplex, f64)> = Vec::new();
    for i in 0..n {
        entries.push((Simplex::vertex(i), 0.0));
    }
    let add = |verts: Vec<usize>, entries: &mut Vec<(Simplex, f64)>| -> Result<f64> {
        let pts: Vec<Point2> = verts.iter().map(|&v| points[v]).collect();
        let (_, r) = min_enclosing_ball(&pts)?;
        if r <= r_max {
            entries.push((Simplex::new(verts)?, r));
        }
        Ok(r)
    };
    if max_dim >= 1 {
        for i in 0..n {
            for j in (i + 1)..n {
                add(vec![i, j], &mut entries)?;
            }
        }
    }
    if max_dim >= 2 {
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    add(vec![i, j, k], &mut entries)?;
                }
            }
        }
    }
    if max_dim >= 3 {
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    for l in (k + 1)..n {
                        add(vec![i, j, k, l], &mut entries)?;
                    }
                }
            }
        }
    }
    FilteredComplex::new(entries, ComplexKind::Cech, format!("r_max={r_max}"))
}

/// Alpha filtration: the Delaunay triangulation filtered by the smallest
/// radius at which the Voronoi-restricted balls of a simplex's vertices
/// meet. Triangles carry their circumradius; an edge carries half its
/// length when its diametral disk is empty (Gabriel), otherwise it
/// inherits the smallest incident circumradius.
pub fn alpha_filtration(points: &[Point2]) -> Result<FilteredComplex> {
    let mut entries: Vec<(Simplex, f64)> = Vec::new();
    match points.len() {
        0 => {
            return Err(Error::DegenerateInput("alpha of an empty cloud".into()));
        }
        1 => {
            entries.push((Simplex::vertex(0), 0.0));
            return FilteredComplex::new(entries, ComplexKind::Alpha, "");
        }
        2 => {
            entries.push((Simplex::vertex(0), 0.0));
            entries.push((Simplex::vertex(1), 0.0));
            entries.push((Simplex::edge(0, 1), 0.5 * points[0].dist(&points[1])));
            return FilteredComplex::new(entries, ComplexKind::Alpha, "");
        }
        _ => {}
    }

    let tri = Triangulation::build(points)?;
    let tris = tri.triangles();
    for i in 0..points.len() {
        entries.push((Simplex::vertex(i), 0.0));
    }

    // Circumradius per triangle, then per-edge incidence.
    let mut radius = Vec::with_capacity(tris.len());
    let mut edge_tris: std::collections::HashMap<(usize, usize), Vec<usize>> =
        std::collections::HashMap::new();
    for (t_idx, t) in tris.iter().enumerate() {
        let (_, r) = circumcircle(&points[t[0]], &points[t[1]], &points[t[2]])?;
        radius.push(r);
        for k in 0..3 {
            let (a, b) = ordered(t[k], t[(k + 1) % 3]);
            edge_tris.entry((a, b)).or_default().push(t_idx);
        }
        entries.push((Simplex::new(t.to_vec())?, r));
    }

    for (&(a, b), incident) in &edge_tris {
        let half = 0.5 * points[a].dist(&points[b]);
        let mid = points[a].mid(&points[b]);
        // Gabriel test: the diametral disk is empty iff the opposite
        // vertices of the incident triangles lie outside it.
        let gabriel = incident.iter().all(|&t_idx| {
            let t = tris[t_idx];
            let opp = t.iter().copied().find(|&v| v != a && v != b).unwrap();
            mid.dist(&points[opp]) >= half
        });
        let value = if gabriel {
            half
        } else {
            incident
                .iter()
                .map(|&t_idx| radius[t_idx])
                .fold(f64::INFINITY, f64::min)
        };
        entries.push((Simplex::edge(a, b), value));
    }

    FilteredComplex::new(entries, ComplexKind::Alpha, "")
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Sequential MaxMin landmark selection: a seeded uniform first pick, then
/// repeatedly the point farthest from the chosen set (ties: lowest index).
pub fn maxmin_landmarks(points: &[Point2], k: usize, seed: u64) -> Vec<usize> {
    let n = points.len();
    if k == 0 || n == 0 {
        return Vec::new();
    }
    let k = k.min(n);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let first = rng.gen_range(0..n);
    let mut chosen = Vec::with_capacity(k);
    chosen.push(first);
    let mut min_dist: Vec<f64> = points.iter().map(|p| p.dist(&points[first])).collect();
    while chosen.len() < k {
        let mut best = 0usize;
        let mut best_d = f64::NEG_INFINITY;
        for (i, &d) in min_dist.iter().enumerate() {
            if d > best_d {
                best_d = d;
                best = i;
            }
        }
        chosen.push(best);
        for (i, d) in min_dist.iter_mut().enumerate() {
            *d = d.min(points[i].dist(&points[best]));
        }
    }
    chosen
}

/// Strong witness filtration with relaxation: a simplex over the landmark
/// set enters at the smallest over witnesses of its largest
/// witness-to-vertex distance, truncated at `r_max`. Vertices are indexed
/// by their position in `landmark_indices`.
pub fn witness_filtration(
    witnesses: &[Point2],
    landmark_indices: &[usize],
    r_max: f64,
    max_dim: usize,
) -> Result<FilteredComplex> {
    let k = landmark_indices.len();
    if k == 0 {
        return Err(Error::DegenerateInput("no landmarks".into()));
    }
    for &l in landmark_indices {
        if l >= witnesses.len() {
            return Err(Error::DegenerateInput(format!(
                "landmark index {l} out of range"
            )));
        }
    }
    let max_dim = max_dim.min(MAX_SIMPLEX_DIM);
    let nw = witnesses.len();
    // dist[w][j] = distance from witness w to landmark j.
    let dist: Vec<Vec<f64>> = witnesses
        .iter()
        .map(|w| landmark_indices.iter().map(|&l| w.dist(&witnesses[l])).collect())
        .collect();

    let value_of = |verts: &[usize]| -> f64 {
        (0..nw)
            .map(|w| {
                verts
                    .iter()
                    .map(|&v| dist[w][v])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .fold(f64::INFINITY, f64::min)
    };

    let mut entries: Vec<(Simplex, f64)> = Vec::new();
    for j in 0..k {
        entries.push((Simplex::vertex(j), value_of(&[j])));
    }
    let mut edges: std::collections::HashSet<(usize, usize)> = std::collections::HashSet::new();
    if max_dim >= 1 {
        for i in 0..k {
            for j in (i + 1)..k {
                let v = value_of(&[i, j]);
                if v <= r_max {
                    edges.insert((i, j));
                    entries.push((Simplex::edge(i, j), v));
                }
            }
        }
    }
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    if max_dim >= 2 {
        for i in 0..k {
            for j in (i + 1)..k {
                if !edges.contains(&(i, j)) {
                    continue;
                }
                for l in (j + 1)..k {
                    if !edges.contains(&(i, l)) || !edges.contains(&(j, l)) {
                        continue;
                    }
                    let v = value_of(&[i, j, l]);
                    if v <= r_max {
                        triangles.push([i, j, l]);
                        entries.push((Simplex::new(vec![i, j, l])?, v));
                    }
                }
            }
        }
    }
    if max_dim >= 3 {
        let tri_set: std::collections::HashSet<[usize; 3]> =
            triangles.iter().copied().collect();
        for t in &triangles {
            let [i, j, l] = *t;
            for m in (l + 1)..k {
                if tri_set.contains(&[i, j, m])
                    && tri_set.contains(&[i, l, m])
                    && tri_set.contains(&[j, l, m])
                {
                    let v = value_of(&[i, j, l, m]);
                    if v <= r_max {
                        entries.push((Simplex::new(vec![i, j, l, m])?, v));
                    }
                }
            }
        }
    }
    FilteredComplex::new(
        entries,
        ComplexKind::Witness,
        format!("landmarks={k},r_max={r_max}"),
    )
}

/// Largest pairwise distance; the default Rips/witness scale.
pub fn max_pairwise_distance(points: &[Point2]) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            best = best.max(points[i].dist(&points[j]));
        }
    }
    best
}

/// Mean pairwise distance; the alternative scale preset.
pub fn mean_pairwise_distance(points: &[Point2]) -> f64 {
    let n = points.len();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += points[i].dist(&points[j]);
        }
    }
    sum / (n * (n - 1) / 2) as f64
}
