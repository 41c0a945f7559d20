//! Topology-guarded natural-neighbor augmentation for 2D point clouds.
//!
//! The crate grows a point cloud by Sibson natural-neighbor interpolation
//! and watches its persistent homology while doing so: each augmentation
//! step is compared with the previous one through persistence-diagram
//! distances, and a trimmed-Wasserstein two-sample test decides whether
//! the topology is still the same. When it is not, augmentation stops.
//!
//! Layers, bottom to top:
//!
//! * [`geometry`] — Delaunay/Voronoi machinery, hulls, polygon clipping.
//! * [`natural_neighbor`] — Sibson weights by area stealing, interpolation
//!   and the point-insertion augmentation step.
//! * [`complexes`] — Vietoris-Rips, Čech, alpha and witness filtrations.
//! * [`persistence`] — boundary-matrix reduction over Z/2, persistence
//!   diagrams and Betti numbers.
//! * [`diagram_distances`] — bottleneck, p-Wasserstein and Hausdorff
//!   distances with exact matchings.
//! * [`stopping`] — the trimmed-Wasserstein statistic, its critical-region
//!   test and the augmentation loop.

pub mod complexes;
pub mod diagram_distances;
mod error;
pub mod geometry;
pub mod natural_neighbor;
pub mod persistence;
pub mod stopping;

pub use error::{Error, Result};
