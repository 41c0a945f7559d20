//! Persistent homology over Z/2 by boundary-matrix column reduction.
//!
//! The boundary matrix lists, per simplex in filtration order, the
//! positions of its codimension-1 faces. Standard left-to-right reduction
//! pairs each death column with the birth it kills; unpaired positive
//! simplices become essential classes with infinite death. A clearing
//! ("twist") variant is available and kept equivalent by test.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::complexes::{FilteredComplex, Simplex};
use crate::error::{Error, Result};

/// Sparse Z/2 boundary matrix in filtration order.
#[derive(Debug, Clone)]
pub struct BoundaryMatrix {
    /// columns[j] = sorted positions of the codim-1 faces of simplex j.
    pub columns: Vec<Vec<usize>>,
    /// Dimension of each simplex.
    pub dims: Vec<usize>,
}

/// A birth/death pairing of simplex indices. `death` of `None` marks an
/// essential class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PersistencePair {
    pub birth_index: usize,
    pub death_index: Option<usize>,
    pub dim: usize,
}

/// One off-diagonal diagram point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagramPoint {
    pub birth: f64,
    /// `f64::INFINITY` for essential classes.
    pub death: f64,
    pub dim: usize,
}

impl DiagramPoint {
    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    pub fn is_essential(&self) -> bool {
        self.death.is_infinite()
    }
}

/// A multiset of (birth, death, dim) points with provenance metadata.
/// Zero-persistence points are dropped at construction.
#[derive(Debug, Clone)]
pub struct PersistenceDiagram {
    pub points: Vec<DiagramPoint>,
    pub kind: String,
    pub params: String,
}

impl PersistenceDiagram {
    pub fn new(mut points: Vec<DiagramPoint>, kind: String, params: String) -> Self {
        points.retain(|p| p.death > p.birth);
        points.sort_by(|a, b| {
            a.dim
                .cmp(&b.dim)
                .then(a.birth.partial_cmp(&b.birth).unwrap())
                .then(a.death.partial_cmp(&b.death).unwrap())
        });
        PersistenceDiagram { points, kind, params }
    }

    pub fn points_of_dim(&self, dim: usize) -> Vec<DiagramPoint> {
        self.points.iter().filter(|p| p.dim == dim).copied().collect()
    }

    /// Dimensions that actually carry points.
    pub fn dims(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.points.iter().map(|p| p.dim).collect();
        d.sort_unstable();
        d.dedup();
        d
    }
}

/// Build the Z/2 boundary matrix of a valid filtration.
pub fn boundary_matrix(fc: &FilteredComplex) -> Result<BoundaryMatrix> {
    let mut index_of: HashMap<&[usize], usize> = HashMap::with_capacity(fc.len());
    for (j, (s, _)) in fc.entries().iter().enumerate() {
        index_of.insert(s.vertices(), j);
    }
    let mut columns = Vec::with_capacity(fc.len());
    let mut dims = Vec::with_capacity(fc.len());
    for (j, (s, _)) in fc.entries().iter().enumerate() {
        let mut col = Vec::with_capacity(s.vertices().len());
        for f in s.facets() {
            match index_of.get(f.vertices()) {
                Some(&i) if i < j => col.push(i),
                Some(&i) => {
                    return Err(Error::InvalidFiltration(format!(
                        "face {:?} at {i} does not precede coface at {j}",
                        f.vertices()
                    )))
                }
                None => {
                    return Err(Error::InvalidFiltration(format!(
                        "face {:?} missing",
                        f.vertices()
                    )))
                }
            }
        }
        col.sort_unstable();
        columns.push(col);
        dims.push(s.dim());
    }
    Ok(BoundaryMatrix { columns, dims })
}

/// Symmetric difference of two sorted index lists (Z/2 column addition).
fn add_column(target: &mut Vec<usize>, other: &[usize]) {
    let mut merged = Vec::with_capacity(target.len() + other.len());
    let (mut i, mut j) = (0, 0);
    while i < target.len() && j < other.len() {
        match target[i].cmp(&other[j]) {
            std::cmp::Ordering::Less => {
                merged.push(target[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                merged.push(other[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    merged.extend_from_slice(&target[i..]);
    merged.extend_from_slice(&other[j..]);
    *target = merged;
}

/// Standard left-to-right column reduction. Deterministic: pairs
/// (low(j), j) for every column that remains non-zero, essentials for the
/// rest of the positive simplices.
pub fn reduce(bm: &BoundaryMatrix) -> Vec<PersistencePair> {
    let m = bm.columns.len();
    let mut cols = bm.columns.clone();
    let mut owner_of_low: Vec<Option<usize>> = vec![None; m];
    for j in 0..m {
        while let Some(&low) = cols[j].last() {
            match owner_of_low[low] {
                None => {
                    owner_of_low[low] = Some(j);
                    break;
                }
                Some(k) => {
                    let (a, b) = split_two(&mut cols, j, k);
                    add_column(a, b);
                }
            }
        }
    }
    pairs_from_reduced(&cols, &bm.dims)
}

/// Reduction with the clearing optimization: columns are processed by
/// decreasing dimension and every paired birth column is zeroed without
/// being reduced itself.
pub fn reduce_twist(bm: &BoundaryMatrix) -> Vec<PersistencePair> {
    let m = bm.columns.len();
    let mut cols = bm.columns.clone();
    let mut owner_of_low: Vec<Option<usize>> = vec![None; m];
    let max_dim = bm.dims.iter().copied().max().unwrap_or(0);
    let mut cleared = vec![false; m];
    for d in (1..=max_dim).rev() {
        for j in 0..m {
            if bm.dims[j] != d || cleared[j] {
                if cleared[j] {
                    cols[j].clear();
                }
                continue;
            }
            while let Some(&low) = cols[j].last() {
                match owner_of_low[low] {
                    None => {
                        owner_of_low[low] = Some(j);
                        cleared[low] = true;
                        break;
                    }
                    Some(k) => {
                        let (a, b) = split_two(&mut cols, j, k);
                        add_column(a, b);
                    }
                }
            }
        }
    }
    for j in 0..m {
        if cleared[j] {
            cols[j].clear();
        }
    }
    pairs_from_reduced(&cols, &bm.dims)
}

fn split_two<'a>(cols: &'a mut [Vec<usize>], j: usize, k: usize) -> (&'a mut Vec<usize>, &'a Vec<usize>) {
    assert!(k < j);
    let (left, right) = cols.split_at_mut(j);
    (&mut right[0], &left[k])
}

fn pairs_from_reduced(cols: &[Vec<usize>], dims: &[usize]) -> Vec<PersistencePair> {
    let m = cols.len();
    let mut killed = vec![false; m];
    let mut pairs = Vec::new();
    for j in 0..m {
        if let Some(&low) = cols[j].last() {
            killed[low] = true;
            killed[j] = true; // negative simplex, not a class of its own
            pairs.push(PersistencePair {
                birth_index: low,
                death_index: Some(j),
                dim: dims[low],
            });
        }
    }
    for j in 0..m {
        if cols[j].is_empty() && !killed[j] {
            pairs.push(PersistencePair { birth_index: j, death_index: None, dim: dims[j] });
        }
    }
    pairs.sort_by_key(|p| (p.birth_index, p.death_index));
    pairs
}

/// Extract the dimension-k diagram: simplex indices become filtration
/// values, zero-persistence points are dropped.
pub fn diagram(pairs: &[PersistencePair], fc: &FilteredComplex, dim: usize) -> PersistenceDiagram {
    let value = |i: usize| fc.entries()[i].1;
    let points = pairs
        .iter()
        .filter(|p| p.dim == dim)
        .map(|p| DiagramPoint {
            birth: value(p.birth_index),
            death: p.death_index.map_or(f64::INFINITY, value),
            dim,
        })
        .collect();
    PersistenceDiagram::new(points, fc.kind.to_string(), fc.params.clone())
}

/// Diagrams for dimensions 0..=2 pooled into one diagram.
pub fn diagrams_up_to_dim2(fc: &FilteredComplex) -> Result<PersistenceDiagram> {
    let bm = boundary_matrix(fc)?;
    let pairs = reduce(&bm);
    let mut points = Vec::new();
    for dim in 0..=2 {
        points.extend(diagram(&pairs, fc, dim).points);
    }
    Ok(PersistenceDiagram::new(
        points,
        fc.kind.to_string(),
        fc.params.clone(),
    ))
}

/// Betti numbers (β0, β1, β2) of the sub-level complex at `r`: classes
/// born at or before `r` that die strictly after it.
pub fn betti_numbers(fc: &FilteredComplex, r: f64) -> Result<(usize, usize, usize)> {
    let bm = boundary_matrix(fc)?;
    let pairs = reduce(&bm);
    let value = |i: usize| fc.entries()[i].1;
    let mut betti = [0usize; 3];
    for p in &pairs {
        if p.dim > 2 {
            continue;
        }
        let birth = value(p.birth_index);
        let death = p.death_index.map_or(f64::INFINITY, value);
        if birth <= r && r < death {
            betti[p.dim] += 1;
        }
    }
    Ok((betti[0], betti[1], betti[2]))
}

/// Multiplicity of the exact diagram point (birth, death) in dimension k.
pub fn multiplicity(dgm: &PersistenceDiagram, birth: f64, death: f64, dim: usize) -> usize {
    dgm.points
        .iter()
        .filter(|p| p.dim == dim && p.birth == birth && p.death == death)
        .count()
}

fn fmt_value(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        // 17 significant digits round-trip any f64 exactly.
        format!("{v:.16e}")
    }
}

fn parse_value(s: &str, line: usize) -> Result<f64> {
    if s == "inf" {
        return Ok(f64::INFINITY);
    }
    s.parse::<f64>().map_err(|_| Error::ParseError {
        line,
        msg: format!("bad value '{s}'"),
    })
}

/// Write the shared diagram CSV: header `dim,birth,death`, death `inf`
/// allowed, 17 significant digits.
pub fn write_diagram_csv<W: Write>(dgm: &PersistenceDiagram, w: &mut W) -> Result<()> {
    writeln!(w, "dim,birth,death")?;
    for p in &dgm.points {
        writeln!(w, "{},{},{}", p.dim, fmt_value(p.birth), fmt_value(p.death))?;
    }
    Ok(())
}

/// Read a diagram CSV produced by [`write_diagram_csv`].
pub fn read_diagram_csv<R: BufRead>(r: R) -> Result<PersistenceDiagram> {
    let mut points = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if i == 0 {
            if line != "dim,birth,death" {
                return Err(Error::ParseError {
                    line: 1,
                    msg: format!("expected header 'dim,birth,death', got '{line}'"),
                });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::ParseError {
                line: i + 1,
                msg: format!("expected 3 fields, got {}", parts.len()),
            });
        }
        let dim: usize = parts[0].parse().map_err(|_| Error::ParseError {
            line: i + 1,
            msg: format!("bad dim '{}'", parts[0]),
        })?;
        let birth = parse_value(parts[1], i + 1)?;
        let death = parse_value(parts[2], i + 1)?;
        points.push(DiagramPoint { birth, death, dim });
    }
    Ok(PersistenceDiagram::new(points, "file".into(), String::new()))
}

/// Brute-force Betti numbers by Z/2 Gaussian elimination on the chain
/// groups of the sub-level complex — an oracle independent of the
/// reduction path, usable for small complexes.
pub fn betti_by_gaussian_elimination(fc: &FilteredComplex, r: f64, max_dim: usize) -> Vec<usize> {
    let simplices: Vec<&Simplex> = fc.sublevel(r);
    let mut by_dim: Vec<Vec<&Simplex>> = vec![Vec::new(); max_dim + 2];
    for s in &simplices {
        if s.dim() < by_dim.len() {
            by_dim[s.dim()].push(s);
        }
    }
    // rank of the boundary map C_k -> C_{k-1} over Z/2
    let rank = |k: usize, by_dim: &[Vec<&Simplex>]| -> usize {
        if k == 0 || by_dim[k].is_empty() {
            return 0;
        }
        let rows: HashMap<&[usize], usize> = by_dim[k - 1]
            .iter()
            .enumerate()
            .map(|(i, s)| (s.vertices(), i))
            .collect();
        let mut mat: Vec<Vec<bool>> = by_dim[k]
            .iter()
            .map(|s| {
                let mut col = vec![false; rows.len()];
                for f in s.facets() {
                    col[rows[f.vertices()]] = true;
                }
                col
            })
            .collect();
        let ncols = mat.len();
        let nrows = rows.len();
        let mut rank = 0usize;
        let mut pivot_row = 0usize;
        for _col_sweep in 0..nrows {
            if pivot_row >= nrows || rank >= ncols {
                break;
            }
            // find a column with a true entry at pivot_row among cols >= rank
            if let Some(c) = (rank..ncols).find(|&c| mat[c][pivot_row]) {
                mat.swap(rank, c);
                for c2 in 0..ncols {
                    if c2 != rank && mat[c2][pivot_row] {
                        for rr in 0..nrows {
                            let v = mat[rank][rr];
                            mat[c2][rr] ^= v;
                        }
                    }
                }
                rank += 1;
            }
            pivot_row += 1;
        }
        rank
    };
    (0..=max_dim)
        .map(|k| {
            let n_k = by_dim[k].len();
            let rank_k = rank(k, &by_dim); // rank ∂_k
            let rank_k1 = rank(k + 1, &by_dim); // rank ∂_{k+1}
            n_k - rank_k - rank_k1
        })
        .collect()
}
