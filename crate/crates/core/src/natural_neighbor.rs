//! Sibson natural-neighbor interpolation by Voronoi area stealing.
//!
//! Inserting a query point into the Voronoi diagram carves a new cell out
//! of its neighbors' cells; the fraction of the new cell stolen from each
//! old cell is that neighbor's weight. Weights are non-negative, sum to
//! one, and reproduce affine functions exactly as long as the stolen
//! region is not cut by the clip rectangle.

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    clip_polygon, convex_hull, point_in_convex_polygon, polygon_area, voronoi, voronoi_cell_of,
    ClipRect, Point2, Triangulation, VoronoiDiagram,
};

/// A named per-point attribute (time, pressure, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub name: String,
    pub values: Vec<f64>,
}

/// An ordered 2D point cloud with optional attribute channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub points: Vec<Point2>,
    pub channels: Vec<Channel>,
}

impl Sample {
    pub fn new(id: impl Into<String>, points: Vec<Point2>, channels: Vec<Channel>) -> Result<Self> {
        let s = Sample { id: id.into(), points, channels };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for p in &self.points {
            if !p.is_finite() {
                return Err(Error::DegenerateInput("non-finite coordinate".into()));
            }
        }
        for ch in &self.channels {
            if ch.values.len() != self.points.len() {
                return Err(Error::DegenerateInput(format!(
                    "channel '{}' has {} values for {} points",
                    ch.name,
                    ch.values.len(),
                    self.points.len()
                )));
            }
            if ch.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::DegenerateInput(format!(
                    "channel '{}' contains a non-finite value",
                    ch.name
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Sibson weights of a query point: natural-neighbor indices with their
/// area-stealing fractions (non-negative, summing to one).
#[derive(Debug, Clone)]
pub struct SibsonWeights {
    pub neighbor_indices: Vec<usize>,
    pub lambdas: Vec<f64>,
}

/// Record of one augmentation step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AugmentationStep {
    /// Inserted locations with their interpolated channel values, in
    /// channel order of the parent sample.
    pub inserted: Vec<(Point2, Vec<f64>)>,
    pub rng_seed: u64,
    pub parent_id: String,
}

/// Reusable state for many queries against one sample: the parent
/// triangulation, its clipped Voronoi diagram and the convex hull.
pub struct SibsonContext {
    sample: Sample,
    tri: Triangulation,
    vor: VoronoiDiagram,
    hull: Vec<Point2>,
    clip: ClipRect,
}

impl SibsonContext {
    pub fn new(sample: &Sample, clip: &ClipRect) -> Result<Self> {
        sample.validate()?;
        if sample.len() < 3 {
            return Err(Error::TooFewPoints { found: sample.len(), min: 3 });
        }
        let tri = Triangulation::build(&sample.points)?;
        let vor = voronoi(&tri, clip)?;
        let hull = convex_hull(&sample.points)?;
        Ok(SibsonContext { sample: sample.clone(), tri, vor, hull, clip: *clip })
    }

    pub fn hull(&self) -> &[Point2] {
        &self.hull
    }

    pub fn sample(&self) -> &Sample {
        &self.sample
    }

    pub fn voronoi(&self) -> &VoronoiDiagram {
        &self.vor
    }

    fn check_query(&self, query: &Point2) -> Result<()> {
        if !query.is_finite() {
            return Err(Error::DegenerateInput("non-finite query".into()));
        }
        let tol = self.tri.tolerances();
        if self
            .sample
            .points
            .iter()
            .any(|p| p.dist(query) <= tol.dup_threshold)
        {
            return Err(Error::CoincidentPoint);
        }
        if !point_in_convex_polygon(query, &self.hull, tol.dup_threshold) {
            return Err(Error::OutsideHull);
        }
        Ok(())
    }

    /// The clipped Voronoi cell the query would claim (its stolen region).
    pub fn stolen_region(&self, query: &Point2) -> Result<Vec<Point2>> {
        self.check_query(query)?;
        Ok(self.new_cell(query)?.1)
    }

    fn new_cell(&self, query: &Point2) -> Result<(Vec<usize>, Vec<Point2>)> {
        let mut tri = self.tri.clone();
        let qi = tri.insert(*query)?;
        let neighbors: Vec<usize> = tri.vertex_neighbors()[qi].clone();
        let cell = voronoi_cell_of(tri.points(), qi, &neighbors, &self.clip);
        Ok((neighbors, cell))
    }

    pub fn weights(&self, query: &Point2) -> Result<SibsonWeights> {
        self.check_query(query)?;
        let (neighbors, new_cell) = self.new_cell(query)?;
        let total = polygon_area(&new_cell);
        if !(total > 0.0) {
            return Err(Error::DegenerateInput("query cell has zero area".into()));
        }

        let mut indices = Vec::new();
        let mut lambdas = Vec::new();
        let accumulate = |cands: &[usize], indices: &mut Vec<usize>, lambdas: &mut Vec<f64>| {
            indices.clear();
            lambdas.clear();
            for &l in cands {
                let stolen = polygon_area(&clip_polygon(&new_cell, self.vor.cell(l)));
                let lambda = stolen / total;
                if lambda > 0.0 {
                    indices.push(l);
                    lambdas.push(lambda);
                }
            }
            lambdas.iter().sum::<f64>()
        };

        let sum = accumulate(&neighbors, &mut indices, &mut lambdas);
        if (sum - 1.0).abs() > 1e-10 {
            // The natural neighbors should tile the stolen region exactly;
            // fall back to all cells if numerics disagree.
            let all: Vec<usize> = (0..self.sample.len()).collect();
            accumulate(&all, &mut indices, &mut lambdas);
        }
        let sum: f64 = lambdas.iter().sum();
        for l in &mut lambdas {
            *l /= sum;
        }
        Ok(SibsonWeights { neighbor_indices: indices, lambdas })
    }

    /// Interpolated channel values at `query`, in the sample's channel order.
    pub fn interpolate(&self, query: &Point2) -> Result<Vec<f64>> {
        let w = self.weights(query)?;
        Ok(self
            .sample
            .channels
            .iter()
            .map(|ch| {
                w.neighbor_indices
                    .iter()
                    .zip(&w.lambdas)
                    .map(|(&l, &lam)| lam * ch.values[l])
                    .sum()
            })
            .collect())
    }
}

/// Sibson weights of `query` against `sample` under the given clip
/// (spec-level operation; builds a [`SibsonContext`] internally).
pub fn sibson_weights(sample: &Sample, query: &Point2, clip: &ClipRect) -> Result<SibsonWeights> {
    SibsonContext::new(sample, clip)?.weights(query)
}

/// Channel values interpolated at `query`.
pub fn interpolate(sample: &Sample, query: &Point2, clip: &ClipRect) -> Result<Vec<f64>> {
    SibsonContext::new(sample, clip)?.interpolate(query)
}

const MAX_REJECTION_DRAWS: u64 = 1_000_000;

/// Append `n_new` points drawn uniformly in the convex hull of `sample`,
/// with channels filled by natural-neighbor interpolation against the
/// parent cloud. Deterministic for a fixed seed.
pub fn augment(
    sample: &Sample,
    n_new: usize,
    seed: u64,
    clip: &ClipRect,
) -> Result<(Sample, AugmentationStep)> {
    let step0 = AugmentationStep {
        inserted: Vec::new(),
        rng_seed: seed,
        parent_id: sample.id.clone(),
    };
    if n_new == 0 {
        return Ok((sample.clone(), step0));
    }
    let ctx = SibsonContext::new(sample, clip)?;
    let hull = ctx.hull().to_vec();
    let (lo, hi) = hull_bbox(&hull);
    let margin = ctx.tri.tolerances().dup_threshold;

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut inserted: Vec<(Point2, Vec<f64>)> = Vec::with_capacity(n_new);
    let mut draws: u64 = 0;
    while inserted.len() < n_new {
        if draws >= MAX_REJECTION_DRAWS {
            return Err(Error::SamplingFailed { attempts: draws });
        }
        draws += 1;
        let q = Point2::new(rng.gen_range(lo.x..=hi.x), rng.gen_range(lo.y..=hi.y));
        if !point_in_convex_polygon(&q, &hull, margin) {
            continue;
        }
        if sample.points.iter().any(|p| p.dist(&q) <= margin) {
            continue;
        }
        let values = ctx.interpolate(&q)?;
        inserted.push((q, values));
    }

    let mut out = sample.clone();
    for (p, vals) in &inserted {
        out.points.push(*p);
        for (ch, v) in out.channels.iter_mut().zip(vals) {
            ch.values.push(*v);
        }
    }
    out.validate()?;
    let step = AugmentationStep { inserted, rng_seed: seed, parent_id: sample.id.clone() };
    Ok((out, step))
}

fn hull_bbox(hull: &[Point2]) -> (Point2, Point2) {
    let mut lo = hull[0];
    let mut hi = hull[0];
    for p in hull {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    use rand_chacha::ChaCha12Rng;

    fn plain(points: Vec<Point2>) -> Sample {
        Sample::new("test", points, vec![]).unwrap()
    }

    fn square_sample() -> Sample {
        plain(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ])
    }

    fn default_clip(s: &Sample) -> ClipRect {
        ClipRect::from_points_with_margin(&s.points, 0.1).unwrap()
    }

    #[test]
    fn square_center_weights_are_quarters() {
        let s = square_sample();
        let w = sibson_weights(&s, &Point2::new(0.5, 0.5), &default_clip(&s)).unwrap();
        assert_eq!(w.neighbor_indices.len(), 4);
        for l in &w.lambdas {
            assert!((l - 0.25).abs() <= 1e-9, "lambda {l}");
        }
    }

    #[test]
    fn equilateral_centroid_weights_are_thirds() {
        let h = 3.0f64.sqrt() / 2.0;
        let s = plain(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.5, h),
        ]);
        let centroid = Point2::new(0.5, h / 3.0);
        // The centroid's cell reaches below the triangle's bounding box; a
        // roomier clip keeps the stolen region intact so the 3-fold
        // symmetry survives the axis-aligned rectangle.
        let clip = ClipRect::from_points_with_margin(&s.points, 1.0).unwrap();
        let w = sibson_weights(&s, &centroid, &clip).unwrap();
        assert_eq!(w.neighbor_indices.len(), 3);
        for l in &w.lambdas {
            assert!((l - 1.0 / 3.0).abs() <= 1e-9, "lambda {l}");
        }
    }

    #[test]
    fn weights_match_brute_force_area_ratios() {
        // Oracle: clipped cells recomputed from scratch with bisectors
        // against *all* points, no Delaunay adjacency involved.
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let pts: Vec<Point2> = (0..12)
            .map(|_| Point2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)))
            .collect();
        let s = plain(pts.clone());
        let clip = default_clip(&s);
        let hull = convex_hull(&pts).unwrap();
        let mut tested = 0;
        while tested < 5 {
            let q = Point2::new(rng.gen_range(0.2..0.8), rng.gen_range(0.2..0.8));
            if !point_in_convex_polygon(&q, &hull, 1e-6) {
                continue;
            }
            tested += 1;
            let w = sibson_weights(&s, &q, &clip).unwrap();

            let mut everything = pts.clone();
            everything.push(q);
            let qi = everything.len() - 1;
            let all: Vec<usize> = (0..everything.len()).collect();
            let new_cell = voronoi_cell_of(&everything, qi, &all, &clip);
            let total = polygon_area(&new_cell);
            for i in 0..pts.len() {
                let old_cell = voronoi_cell_of(&pts, i, &(0..pts.len()).collect::<Vec<_>>(), &clip);
                let expect = polygon_area(&clip_polygon(&new_cell, &old_cell)) / total;
                let got = w
                    .neighbor_indices
                    .iter()
                    .position(|&n| n == i)
                    .map(|k| w.lambdas[k])
                    .unwrap_or(0.0);
                assert!(
                    (got - expect).abs() <= 1e-8,
                    "lambda[{i}] = {got}, oracle {expect}"
                );
            }
        }
    }

    #[test]
    fn partition_of_unity_and_nonnegativity() {
        let mut rng = ChaCha12Rng::seed_from_u64(37);
        let pts: Vec<Point2> = (0..20)
            .map(|_| Point2::new(rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0)))
            .collect();
        let s = plain(pts.clone());
        let clip = default_clip(&s);
        let ctx = SibsonContext::new(&s, &clip).unwrap();
        let hull = ctx.hull().to_vec();
        let mut tested = 0;
        while tested < 100 {
            let q = Point2::new(rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0));
            if !point_in_convex_polygon(&q, &hull, 1e-9) {
                continue;
            }
            let w = match ctx.weights(&q) {
                Ok(w) => w,
                Err(Error::CoincidentPoint) => continue,
                Err(e) => panic!("{e}"),
            };
            tested += 1;
            let sum: f64 = w.lambdas.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-9);
            assert!(w.lambdas.iter().all(|&l| l >= -1e-12));
        }
    }

    #[test]
    fn constant_channel_is_reproduced() {
        let mut s = square_sample();
        s.channels.push(Channel { name: "c".into(), values: vec![3.25; 4] });
        let clip = default_clip(&s);
        let v = interpolate(&s, &Point2::new(0.3, 0.6), &clip).unwrap();
        assert!((v[0] - 3.25).abs() <= 1e-12);
    }

    #[test]
    fn square_corner_channel_midpoint() {
        let mut s = square_sample();
        // Values follow the y coordinate: (0,0,1,1).
        s.channels.push(Channel { name: "v".into(), values: vec![0.0, 0.0, 1.0, 1.0] });
        let clip = default_clip(&s);
        let v = interpolate(&s, &Point2::new(0.5, 0.5), &clip).unwrap();
        assert!((v[0] - 0.5).abs() <= 1e-9);
    }

    #[test]
    fn linear_precision_on_random_cloud() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        let pts: Vec<Point2> = (0..20)
            .map(|_| Point2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)))
            .collect();
        let f = |p: &Point2| 2.0 * p.x + 3.0 * p.y - 1.0;
        let mut s = plain(pts.clone());
        s.channels.push(Channel { name: "f".into(), values: pts.iter().map(f).collect() });
        let clip = default_clip(&s);
        let ctx = SibsonContext::new(&s, &clip).unwrap();
        let hull = ctx.hull().to_vec();
        let range = 4.0; // |f| spread over the unit square
        let mut tested = 0;
        while tested < 50 {
            let q = Point2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            if !point_in_convex_polygon(&q, &hull, 1e-6) {
                continue;
            }
            // Linear precision holds when the stolen region is unclipped.
            let region = ctx.stolen_region(&q).unwrap();
            if region.iter().any(|v| on_rect_boundary(v, &clip)) {
                continue;
            }
            tested += 1;
            let got = ctx.interpolate(&q).unwrap()[0];
            assert!(
                (got - f(&q)).abs() <= 1e-6 * range,
                "interp {got} vs affine {}",
                f(&q)
            );
        }
    }

    fn on_rect_boundary(p: &Point2, r: &ClipRect) -> bool {
        let eps = 1e-9 * (r.width() + r.height());
        (p.x - r.xmin).abs() < eps
            || (p.x - r.xmax).abs() < eps
            || (p.y - r.ymin).abs() < eps
            || (p.y - r.ymax).abs() < eps
    }

    #[test]
    fn locality_reported_neighbors_touch_the_stolen_region() {
        let mut rng = ChaCha12Rng::seed_from_u64(47);
        let pts: Vec<Point2> = (0..30)
            .map(|_| Point2::new(rng.gen_range(0.0..4.0), rng.gen_range(0.0..4.0)))
            .collect();
        let s = plain(pts.clone());
        let clip = default_clip(&s);
        let ctx = SibsonContext::new(&s, &clip).unwrap();
        let q = Point2::new(2.0, 2.0);
        let w = ctx.weights(&q).unwrap();
        let region = ctx.stolen_region(&q).unwrap();
        for (k, &i) in w.neighbor_indices.iter().enumerate() {
            let inter = clip_polygon(&region, ctx.voronoi().cell(i));
            assert!(polygon_area(&inter) > 0.0, "neighbor {i} lambda {}", w.lambdas[k]);
        }
        // Points far from the query must receive nothing.
        for i in 0..pts.len() {
            if pts[i].dist(&q) > 3.0 {
                assert!(!w.neighbor_indices.contains(&i));
            }
        }
    }

    #[test]
    fn clip_independence_for_interior_queries() {
        let mut rng = ChaCha12Rng::seed_from_u64(53);
        let pts: Vec<Point2> = (0..16)
            .map(|_| Point2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)))
            .collect();
        let s = plain(pts.clone());
        let clip1 = ClipRect::from_points_with_margin(&pts, 0.5).unwrap();
        let clip2 = ClipRect::from_points_with_margin(&pts, 5.0).unwrap();
        let ctx1 = SibsonContext::new(&s, &clip1).unwrap();
        let ctx2 = SibsonContext::new(&s, &clip2).unwrap();
        let hull = ctx1.hull().to_vec();
        let mut tested = 0;
        while tested < 20 {
            let q = Point2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            if !point_in_convex_polygon(&q, &hull, 1e-6) {
                continue;
            }
            let region = ctx1.stolen_region(&q).unwrap();
            if region.iter().any(|v| on_rect_boundary(v, &clip1)) {
                continue; // only unclipped stolen regions are comparable
            }
            tested += 1;
            let w1 = ctx1.weights(&q).unwrap();
            let w2 = ctx2.weights(&q).unwrap();
            let lookup = |w: &SibsonWeights, i: usize| {
                w.neighbor_indices
                    .iter()
                    .position(|&n| n == i)
                    .map(|k| w.lambdas[k])
                    .unwrap_or(0.0)
            };
            for i in 0..pts.len() {
                assert!((lookup(&w1, i) - lookup(&w2, i)).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn rejects_outside_and_coincident_queries() {
        let s = square_sample();
        let clip = default_clip(&s);
        assert!(matches!(
            sibson_weights(&s, &Point2::new(2.0, 2.0), &clip),
            Err(Error::OutsideHull)
        ));
        assert!(matches!(
            sibson_weights(&s, &Point2::new(0.0, 0.0), &clip),
            Err(Error::CoincidentPoint)
        ));
        // On the hull boundary: rejected, not special-cased.
        assert!(matches!(
            sibson_weights(&s, &Point2::new(0.5, 0.0), &clip),
            Err(Error::OutsideHull)
        ));
    }

    #[test]
    fn augment_zero_is_identity() {
        let s = square_sample();
        let clip = default_clip(&s);
        let (out, step) = augment(&s, 0, 99, &clip).unwrap();
        assert_eq!(out, s);
        assert!(step.inserted.is_empty());
    }

    #[test]
    fn augment_is_deterministic() {
        let mut rng = ChaCha12Rng::seed_from_u64(59);
        let pts: Vec<Point2> = (0..15)
            .map(|_| Point2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)))
            .collect();
        let mut s = plain(pts.clone());
        s.channels.push(Channel {
            name: "t".into(),
            values: (0..15).map(|i| i as f64).collect(),
        });
        let clip = default_clip(&s);
        let (a, step_a) = augment(&s, 15, 1234, &clip).unwrap();
        let (b, step_b) = augment(&s, 15, 1234, &clip).unwrap();
        assert_eq!(a, b);
        assert_eq!(step_a.inserted.len(), step_b.inserted.len());
        for (x, y) in step_a.inserted.iter().zip(&step_b.inserted) {
            assert_eq!(x.0, y.0);
            assert_eq!(x.1, y.1);
        }
    }

    #[test]
    fn augmented_points_lie_in_parent_hull() {
        let mut rng = ChaCha12Rng::seed_from_u64(61);
        let pts: Vec<Point2> = (0..100)
            .map(|_| Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let s = plain(pts.clone());
        let clip = default_clip(&s);
        let hull = convex_hull(&pts).unwrap();
        let (out, step) = augment(&s, 100, 7, &clip).unwrap();
        assert_eq!(out.len(), 200);
        assert_eq!(step.inserted.len(), 100);
        for (p, _) in &step.inserted {
            assert!(point_in_convex_polygon(p, &hull, 0.0));
        }
    }
}
