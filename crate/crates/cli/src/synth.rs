//! Synthetic point clouds with known topology, standing in for real
//! handwriting data at desk scale.
//!
//! Reference features at the documented scales (unit radius, noise 0):
//!
//! * `circle` / `annulus` — one dominant H1 class; the circle fills at
//!   alpha radius 1.
//! * `two_clusters` — β0 = 2 for radii between the within-cluster closing
//!   scale and half the separation (disks of radius 1 at x = ±5).
//! * `figure_eight` — exactly two dominant H1 classes (unit circles
//!   centered at x = ±1, phase-shifted so the shared tangent point is not
//!   sampled twice).
//! * `signature_like` — a looping pen stroke with `t` and `pressure`
//!   channels.

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use topo_guard_core::geometry::Point2;
use topo_guard_core::natural_neighbor::{Channel, Sample};
use topo_guard_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Circle,
    Annulus,
    TwoClusters,
    FigureEight,
    SignatureLike,
}

impl std::str::FromStr for ShapeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circle" => Ok(ShapeKind::Circle),
            "annulus" => Ok(ShapeKind::Annulus),
            "two_clusters" => Ok(ShapeKind::TwoClusters),
            "figure_eight" => Ok(ShapeKind::FigureEight),
            "signature_like" => Ok(ShapeKind::SignatureLike),
            other => Err(Error::ParseError {
                line: 0,
                msg: format!("unknown shape '{other}'"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticShape {
    pub kind: ShapeKind,
    pub n: usize,
    /// Gaussian jitter applied to both coordinates.
    pub noise: f64,
    pub seed: u64,
}

fn gaussian(rng: &mut ChaCha12Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Generate a deterministic sample for the shape (n >= 8).
pub fn generate(shape: &SyntheticShape) -> Result<Sample> {
    if shape.n < 8 {
        return Err(Error::TooFewPoints { found: shape.n, min: 8 });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(shape.seed);
    let n = shape.n;
    let tau = 2.0 * std::f64::consts::PI;
    let jitter = |p: Point2, rng: &mut ChaCha12Rng| {
        Point2::new(p.x + shape.noise * gaussian(rng), p.y + shape.noise * gaussian(rng))
    };
    let mut channels: Vec<Channel> = Vec::new();
    let points: Vec<Point2> = match shape.kind {
        ShapeKind::Circle => (0..n)
            .map(|k| {
                let t = tau * k as f64 / n as f64;
                jitter(Point2::new(t.cos(), t.sin()), &mut rng)
            })
            .collect(),
        ShapeKind::Annulus => (0..n)
            .map(|_| {
                let r = (rng.gen_range(0.25f64..1.0)).sqrt();
                let t = rng.gen_range(0.0..tau);
                jitter(Point2::new(r * t.cos(), r * t.sin()), &mut rng)
            })
            .collect(),
        ShapeKind::TwoClusters => (0..n)
            .map(|k| {
                let cx = if k % 2 == 0 { -5.0 } else { 5.0 };
                loop {
                    let x: f64 = rng.gen_range(-1.0..1.0);
                    let y: f64 = rng.gen_range(-1.0..1.0);
                    if x * x + y * y <= 1.0 {
                        return jitter(Point2::new(cx + x, y), &mut rng);
                    }
                }
            })
            .collect(),
        ShapeKind::FigureEight => (0..n)
            .map(|k| {
                let half = n / 2;
                let (center, idx, m) = if k < half {
                    (-1.0, k, half)
                } else {
                    (1.0, k - half, n - half)
                };
                // Phase offset keeps the tangent point at the origin from
                // being sampled by both circles.
                let phase = if center > 0.0 { 0.5 * tau / m as f64 } else { 0.0 };
                let t = tau * idx as f64 / m as f64 + phase;
                jitter(Point2::new(center + t.cos(), t.sin()), &mut rng)
            })
            .collect(),
        ShapeKind::SignatureLike => {
            let mut pts = Vec::with_capacity(n);
            let mut times = Vec::with_capacity(n);
            let mut pressure = Vec::with_capacity(n);
            for k in 0..n {
                let s = k as f64 / (n - 1) as f64;
                let x = 3.0 * s + 0.4 * (3.0 * tau * s).sin();
                let y = 0.6 * (1.5 * tau * s).sin() + 0.25 * (4.5 * tau * s + 1.2).sin();
                pts.push(jitter(Point2::new(x, y), &mut rng));
                times.push(s);
                pressure.push(0.55 + 0.35 * (tau * s * 0.5).sin().abs());
            }
            channels.push(Channel { name: "t".into(), values: times });
            channels.push(Channel { name: "pressure".into(), values: pressure });
            pts
        }
    };
    let id = format!(
        "{}_n{}_s{}",
        match shape.kind {
            ShapeKind::Circle => "circle",
            ShapeKind::Annulus => "annulus",
            ShapeKind::TwoClusters => "two_clusters",
            ShapeKind::FigureEight => "figure_eight",
            ShapeKind::SignatureLike => "signature_like",
        },
        n,
        shape.seed
    );
    Sample::new(id, points, channels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use topo_guard_core::complexes::alpha_filtration;
    use topo_guard_core::persistence::{betti_numbers, diagrams_up_to_dim2};

    fn gen(kind: ShapeKind, n: usize, noise: f64, seed: u64) -> Sample {
        generate(&SyntheticShape { kind, n, noise, seed }).unwrap()
    }

    #[test]
    fn rejects_tiny_n() {
        let r = generate(&SyntheticShape { kind: ShapeKind::Circle, n: 4, noise: 0.0, seed: 0 });
        assert!(matches!(r, Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let a = gen(ShapeKind::Annulus, 64, 0.05, 7);
        let b = gen(ShapeKind::Annulus, 64, 0.05, 7);
        assert_eq!(a, b);
    }

    #[test]
    fn circle_betti_at_mid_scale() {
        let s = gen(ShapeKind::Circle, 64, 0.0, 1);
        let fc = alpha_filtration(&s.points).unwrap();
        // Between the gap-closing scale (~pi/64) and the fill scale (~1).
        assert_eq!(betti_numbers(&fc, 0.5).unwrap(), (1, 1, 0));
    }

    #[test]
    fn two_clusters_betti_in_documented_interval() {
        let s = gen(ShapeKind::TwoClusters, 60, 0.0, 2);
        let fc = alpha_filtration(&s.points).unwrap();
        let (b0, _, _) = betti_numbers(&fc, 1.0).unwrap();
        assert_eq!(b0, 2, "two separated disks at radius 1");
        let (b0_big, _, _) = betti_numbers(&fc, 6.0).unwrap();
        assert_eq!(b0_big, 1, "merged past half the separation");
    }

    #[test]
    fn figure_eight_has_two_dominant_loops() {
        let s = gen(ShapeKind::FigureEight, 128, 0.0, 3);
        let fc = alpha_filtration(&s.points).unwrap();
        let dgm = diagrams_up_to_dim2(&fc).unwrap();
        let mut pers: Vec<f64> = dgm
            .points
            .iter()
            .filter(|p| p.dim == 1 && !p.is_essential())
            .map(|p| p.persistence())
            .collect();
        pers.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!(pers.len() >= 2);
        let third = pers.get(2).copied().unwrap_or(0.0);
        assert!(
            pers[1] > 5.0 * third.max(1e-12),
            "second loop {} vs third {}",
            pers[1],
            third
        );
    }

    #[test]
    fn signature_like_has_time_and_pressure_channels() {
        let s = gen(ShapeKind::SignatureLike, 100, 0.01, 4);
        assert_eq!(s.channels.len(), 2);
        assert_eq!(s.channels[0].name, "t");
        assert_eq!(s.channels[1].name, "pressure");
        assert_eq!(s.len(), 100);
        // Loops exist in the stroke.
        let fc = alpha_filtration(&s.points).unwrap();
        let dgm = diagrams_up_to_dim2(&fc).unwrap();
        assert!(dgm.points.iter().any(|p| p.dim == 1));
    }
}
