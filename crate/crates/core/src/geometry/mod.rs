//! Exact-enough planar geometry: points, predicates, convex hulls,
//! polygon clipping and areas, circumcircles and minimum enclosing balls.
//!
//! All constructions use `f64` with adaptive tolerances derived from the
//! bounding box of the input; exact arithmetic is out of scope. Failures
//! surface as [`Error::DegenerateInput`](crate::Error::DegenerateInput).

mod delaunay;
mod voronoi;

pub use delaunay::{delaunay, Triangulation};
pub use voronoi::{voronoi, voronoi_cell_of, VoronoiDiagram};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the plane. Both coordinates must be finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn sub(&self, o: &Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }

    pub fn dot(&self, o: &Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn dist(&self, o: &Point2) -> f64 {
        self.dist2(o).sqrt()
    }

    pub fn dist2(&self, o: &Point2) -> f64 {
        let dx = self.x - o.x;
        let dy = self.y - o.y;
        dx * dx + dy * dy
    }

    pub fn mid(&self, o: &Point2) -> Point2 {
        Point2::new(0.5 * (self.x + o.x), 0.5 * (self.y + o.y))
    }
}

/// Axis-aligned clipping rectangle with `xmin < xmax`, `ymin < ymax`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipRect {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl ClipRect {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<Self> {
        if !(xmin < xmax && ymin < ymax)
            || !xmin.is_finite()
            || !xmax.is_finite()
            || !ymin.is_finite()
            || !ymax.is_finite()
        {
            return Err(Error::DegenerateInput(format!(
                "invalid clip rectangle [{xmin},{xmax}]x[{ymin},{ymax}]"
            )));
        }
        Ok(ClipRect { xmin, xmax, ymin, ymax })
    }

    /// Bounding box of `points`, expanded by `margin` times the box extent
    /// on every side. Degenerate (zero-extent) boxes are padded so that the
    /// rectangle stays valid.
    pub fn from_points_with_margin(points: &[Point2], margin: f64) -> Result<Self> {
        let (lo, hi) = bounding_box(points)?;
        let wx = (hi.x - lo.x).max(f64::MIN_POSITIVE);
        let wy = (hi.y - lo.y).max(f64::MIN_POSITIVE);
        let pad_x = (wx * margin).max(1e-9 * wx.max(wy)).max(1e-300);
        let pad_y = (wy * margin).max(1e-9 * wx.max(wy)).max(1e-300);
        ClipRect::new(lo.x - pad_x, hi.x + pad_x, lo.y - pad_y, hi.y + pad_y)
    }

    pub fn contains(&self, p: &Point2) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Corners as a CCW polygon loop.
    pub fn corners(&self) -> [Point2; 4] {
        [
            Point2::new(self.xmin, self.ymin),
            Point2::new(self.xmax, self.ymin),
            Point2::new(self.xmax, self.ymax),
            Point2::new(self.xmin, self.ymax),
        ]
    }
}

/// Adaptive tolerances scaled to the bounding box of the data.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Bounding-box diagonal.
    pub diag: f64,
    /// Orientation predicate threshold: 1e-12 * diag^2.
    pub orient_eps: f64,
    /// In-circle predicate threshold; the lifted determinant scales with
    /// the fourth power of length, so the orientation threshold picks up
    /// another diag^2 factor.
    pub incircle_eps: f64,
    /// Two points closer than this are duplicates: 1e-9 * diag.
    pub dup_threshold: f64,
}

impl Tolerances {
    pub fn for_points(points: &[Point2]) -> Result<Self> {
        let (lo, hi) = bounding_box(points)?;
        Ok(Self::for_diag(lo.dist(&hi)))
    }

    pub fn for_diag(diag: f64) -> Self {
        let diag = diag.max(f64::MIN_POSITIVE);
        let d2 = diag * diag;
        Tolerances {
            diag,
            orient_eps: 1e-12 * d2,
            incircle_eps: 1e-12 * d2 * d2,
            dup_threshold: 1e-9 * diag,
        }
    }
}

/// Twice the signed area of triangle (a, b, c); positive when c lies to
/// the left of the directed line a -> b.
pub fn orient(a: &Point2, b: &Point2, c: &Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Lifted in-circle determinant: positive when `d` is strictly inside the
/// circumcircle of the CCW triangle (a, b, c).
pub fn in_circle(a: &Point2, b: &Point2, c: &Point2, d: &Point2) -> f64 {
    let adx = a.x - d.x;
    let ady = a.y - d.y;
    let bdx = b.x - d.x;
    let bdy = b.y - d.y;
    let cdx = c.x - d.x;
    let cdy = c.y - d.y;
    let ad2 = adx * adx + ady * ady;
    let bd2 = bdx * bdx + bdy * bdy;
    let cd2 = cdx * cdx + cdy * cdy;
    adx * (bdy * cd2 - cdy * bd2) - ady * (bdx * cd2 - cdx * bd2)
        + ad2 * (bdx * cdy - cdx * bdy)
}

fn bounding_box(points: &[Point2]) -> Result<(Point2, Point2)> {
    if points.is_empty() {
        return Err(Error::DegenerateInput("empty point set".into()));
    }
    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        if !p.is_finite() {
            return Err(Error::DegenerateInput("non-finite coordinate".into()));
        }
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    Ok((lo, hi))
}

/// Convex hull by monotone chain: CCW loop of extreme points only
/// (collinear boundary points excluded).
pub fn convex_hull(points: &[Point2]) -> Result<Vec<Point2>> {
    if points.len() < 3 {
        return Err(Error::DegenerateInput(format!(
            "convex hull needs at least 3 points, got {}",
            points.len()
        )));
    }
    let tol = Tolerances::for_points(points)?;
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&i, &j| {
        points[i]
            .x
            .partial_cmp(&points[j].x)
            .unwrap()
            .then(points[i].y.partial_cmp(&points[j].y).unwrap())
    });

    let build = |order: &[usize]| -> Vec<usize> {
        let mut chain: Vec<usize> = Vec::with_capacity(order.len());
        for &i in order {
            while chain.len() >= 2 {
                let a = &points[chain[chain.len() - 2]];
                let b = &points[chain[chain.len() - 1]];
                if orient(a, b, &points[i]) <= tol.orient_eps {
                    chain.pop();
                } else {
                    break;
                }
            }
            chain.push(i);
        }
        chain
    };

    let lower = build(&idx);
    let rev: Vec<usize> = idx.iter().rev().copied().collect();
    let upper = build(&rev);

    let mut hull: Vec<usize> = lower;
    hull.pop();
    hull.extend_from_slice(&upper[..upper.len().saturating_sub(1)]);
    if hull.len() < 3 {
        return Err(Error::DegenerateInput("all points collinear".into()));
    }
    Ok(hull.into_iter().map(|i| points[i]).collect())
}

/// Strict membership test for a CCW convex polygon: the point must clear
/// every edge line by more than `margin`.
pub fn point_in_convex_polygon(p: &Point2, poly: &[Point2], margin: f64) -> bool {
    if poly.len() < 3 {
        return false;
    }
    for i in 0..poly.len() {
        let a = &poly[i];
        let b = &poly[(i + 1) % poly.len()];
        let len = a.dist(b);
        if len == 0.0 {
            continue;
        }
        // orient / |ab| is the signed distance from p to the edge line.
        if orient(a, b, p) / len <= margin {
            return false;
        }
    }
    true
}

/// Absolute shoelace area of a polygon loop. Degenerate loops give 0.
pub fn polygon_area(poly: &[Point2]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..poly.len() {
        let a = &poly[i];
        let b = &poly[(i + 1) % poly.len()];
        twice += a.x * b.y - b.x * a.y;
    }
    0.5 * twice.abs()
}

/// Keep the part of `poly` on the left of the directed line a -> b
/// (Sutherland-Hodgman half-plane step).
pub fn clip_halfplane(poly: &[Point2], a: &Point2, b: &Point2) -> Vec<Point2> {
    if poly.len() < 2 {
        return Vec::new();
    }
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let s = poly[i];
        let e = poly[(i + 1) % n];
        let sc = orient(a, b, &s);
        let ec = orient(a, b, &e);
        let s_in = sc >= 0.0;
        let e_in = ec >= 0.0;
        match (s_in, e_in) {
            (true, true) => out.push(e),
            (true, false) | (false, true) => {
                let denom = sc - ec;
                if denom.abs() > 1e-300 {
                    let t = sc / denom;
                    out.push(Point2::new(s.x + (e.x - s.x) * t, s.y + (e.y - s.y) * t));
                }
                if e_in {
                    out.push(e);
                }
            }
            (false, false) => {}
        }
    }
    out
}

/// Intersection of `subject` with a convex CCW clip polygon. Returns an
/// empty loop when the polygons are disjoint.
pub fn clip_polygon(subject: &[Point2], clip: &[Point2]) -> Vec<Point2> {
    if clip.len() < 3 || subject.len() < 3 {
        return Vec::new();
    }
    let mut result = subject.to_vec();
    for i in 0..clip.len() {
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        result = clip_halfplane(&result, &a, &b);
        if result.len() < 3 {
            return Vec::new();
        }
    }
    result
}

/// Intersection of `subject` with an axis-aligned rectangle.
pub fn clip_to_rect(subject: &[Point2], rect: &ClipRect) -> Vec<Point2> {
    clip_polygon(subject, &rect.corners())
}

/// Circumcircle of a non-collinear triple.
pub fn circumcircle(a: &Point2, b: &Point2, c: &Point2) -> Result<(Point2, f64)> {
    let d = 2.0 * orient(a, b, c);
    let tol = Tolerances::for_points(&[*a, *b, *c])?;
    if d.abs() <= 2.0 * tol.orient_eps {
        return Err(Error::DegenerateInput(
            "circumcircle of collinear points".into(),
        ));
    }
    let a2 = a.x * a.x + a.y * a.y;
    let b2 = b.x * b.x + b.y * b.y;
    let c2 = c.x * c.x + c.y * c.y;
    let ux = (a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d;
    let uy = (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d;
    let center = Point2::new(ux, uy);
    Ok((center, center.dist(a)))
}

/// Minimum enclosing ball of up to four points (exact, by candidate
/// enumeration over pair-diametral and triple-circumscribed balls).
pub fn min_enclosing_ball(points: &[Point2]) -> Result<(Point2, f64)> {
    match points.len() {
        0 => Err(Error::DegenerateInput("min enclosing ball of nothing".into())),
        1 => Ok((points[0], 0.0)),
        2 => Ok((points[0].mid(&points[1]), 0.5 * points[0].dist(&points[1]))),
        n if n <= 4 => {
            let covers = |c: &Point2, r: f64| {
                let slack = r + 1e-12 * r.max(1.0);
                points.iter().all(|p| c.dist(p) <= slack)
            };
            let mut best: Option<(Point2, f64)> = None;
            let mut consider = |c: Point2, r: f64| {
                if covers(&c, r) && best.map_or(true, |(_, br)| r < br) {
                    best = Some((c, r));
                }
            };
            for i in 0..n {
                for j in (i + 1)..n {
                    let c = points[i].mid(&points[j]);
                    consider(c, 0.5 * points[i].dist(&points[j]));
                }
            }
            for i in 0..n {
                for j in (i + 1)..n {
                    for k in (j + 1)..n {
                        if let Ok((c, r)) = circumcircle(&points[i], &points[j], &points[k]) {
                            consider(c, r);
                        }
                    }
                }
            }
            best.ok_or_else(|| Error::DegenerateInput("no enclosing ball found".into()))
        }
        n => Err(Error::TooLarge { n, cap: 4 }),
    }
}
