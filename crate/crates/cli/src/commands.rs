//! One-shot subcommands: diagram distances, persistence of a single
//! cloud, interpolation, and synthetic generation.

use std::path::Path;

use topo_guard_core::diagram_distances::{bottleneck, wasserstein};
use topo_guard_core::geometry::ClipRect;
use topo_guard_core::natural_neighbor::augment;
use topo_guard_core::persistence::{read_diagram_csv, write_diagram_csv, PersistenceDiagram};
use topo_guard_core::stopping::{build_filtration, StopConfig};
use topo_guard_core::{Error, Result};

use crate::ingest::{ingest, write_sample_csv};
use crate::run::atomic_write;
use crate::synth::{generate, SyntheticShape};

fn read_diagram(path: &Path) -> Result<PersistenceDiagram> {
    let f = std::fs::File::open(path)?;
    read_diagram_csv(std::io::BufReader::new(f))
}

fn single_dim(d: &PersistenceDiagram, dim: usize) -> PersistenceDiagram {
    PersistenceDiagram::new(
        d.points.iter().filter(|p| p.dim == dim).copied().collect(),
        d.kind.clone(),
        d.params.clone(),
    )
}

/// Per-dimension bottleneck and p-Wasserstein distances between two
/// diagram files, written to `w`. Dimensions whose essential-point counts
/// differ are listed instead of aborting the rest.
pub fn cmd_distance<W: std::io::Write>(
    a: &Path,
    b: &Path,
    p: f64,
    w: &mut W,
) -> Result<()> {
    let da = read_diagram(a)?;
    let db = read_diagram(b)?;
    let mut dims = da.dims();
    dims.extend(db.dims());
    dims.sort_unstable();
    dims.dedup();

    let mut mismatched: Vec<usize> = Vec::new();
    let mut b_total: f64 = 0.0;
    let mut w_total_pow: f64 = 0.0;
    for &dim in &dims {
        let sa = single_dim(&da, dim);
        let sb = single_dim(&db, dim);
        match (bottleneck(&sa, &sb), wasserstein(&sa, &sb, p)) {
            (Ok(bd), Ok(wd)) => {
                writeln!(
                    w,
                    "dim {dim}: d_b = {:.9}  d_w{p} = {:.9}",
                    bd.aggregate, wd.aggregate
                )?;
                b_total = b_total.max(bd.aggregate);
                w_total_pow += wd.aggregate.powf(p);
            }
            _ => mismatched.push(dim),
        }
    }
    if !mismatched.is_empty() {
        return Err(Error::InfiniteMismatch { dim: mismatched[0] });
    }
    writeln!(
        w,
        "aggregate: d_b = {:.9}  d_w{p} = {:.9}",
        b_total,
        w_total_pow.powf(1.0 / p)
    )?;
    Ok(())
}

/// Build the configured filtration of an input cloud and write its
/// diagrams (dims 0..2) as CSVs into `out_dir`.
pub fn cmd_persistence(input: &Path, cfg: &StopConfig, out_dir: &Path) -> Result<()> {
    let sample = ingest(input)?;
    let fc = build_filtration(&sample.points, cfg, cfg.seed)?;
    let dgm = topo_guard_core::persistence::diagrams_up_to_dim2(&fc)?;
    for dim in 0..=2usize {
        let sub = single_dim(&dgm, dim);
        let mut buf = Vec::new();
        write_diagram_csv(&sub, &mut buf)?;
        atomic_write(&out_dir.join(format!("dgm_dim{dim}.csv")), &buf)?;
    }
    Ok(())
}

/// Augment an input cloud by `n_new` interpolated points (defaults to the
/// current point count) and write the result in the ingestion format.
pub fn cmd_interpolate(
    input: &Path,
    n_new: Option<usize>,
    seed: u64,
    clip_margin: f64,
    out: &Path,
) -> Result<()> {
    let sample = ingest(input)?;
    let clip = ClipRect::from_points_with_margin(&sample.points, clip_margin)?;
    let n_new = n_new.unwrap_or(sample.len());
    let (augmented, _) = augment(&sample, n_new, seed, &clip)?;
    let mut buf = Vec::new();
    write_sample_csv(&augmented, &mut buf)?;
    atomic_write(out, &buf)
}

/// Generate a synthetic cloud and write it in the ingestion format.
pub fn cmd_generate(shape: &SyntheticShape, out: &Path) -> Result<()> {
    let sample = generate(shape)?;
    let mut buf = Vec::new();
    write_sample_csv(&sample, &mut buf)?;
    atomic_write(out, &buf)
}
