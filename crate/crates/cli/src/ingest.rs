//! CSV ingestion: header row with `x,y` required; every additional
//! numeric column becomes a named channel. Near-duplicate points are
//! dropped with a warning, malformed rows abort with their line number.

use std::path::Path;

use topo_guard_core::geometry::Point2;
use topo_guard_core::natural_neighbor::{Channel, Sample};
use topo_guard_core::{Error, Result};

pub fn ingest(path: &Path) -> Result<Sample> {
    let file = std::fs::File::open(path)?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| Error::ParseError { line: 1, msg: e.to_string() })?
        .clone();
    let x_col = headers.iter().position(|h| h == "x");
    let y_col = headers.iter().position(|h| h == "y");
    let (x_col, y_col) = match (x_col, y_col) {
        (Some(x), Some(y)) => (x, y),
        _ => {
            return Err(Error::ParseError {
                line: 1,
                msg: "header must contain columns 'x' and 'y'".into(),
            })
        }
    };
    let channel_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != x_col && *i != y_col)
        .map(|(i, h)| (i, h.to_string()))
        .collect();

    let mut points: Vec<Point2> = Vec::new();
    let mut channels: Vec<Channel> = channel_cols
        .iter()
        .map(|(_, name)| Channel { name: name.clone(), values: Vec::new() })
        .collect();

    for (rec_idx, record) in reader.records().enumerate() {
        let line = rec_idx + 2; // header is line 1
        let record = record.map_err(|e| Error::ParseError { line, msg: e.to_string() })?;
        let parse = |col: usize| -> Result<f64> {
            let raw = record.get(col).ok_or_else(|| Error::ParseError {
                line,
                msg: format!("missing column {col}"),
            })?;
            let v: f64 = raw.trim().parse().map_err(|_| Error::ParseError {
                line,
                msg: format!("'{raw}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::ParseError {
                    line,
                    msg: format!("non-finite value '{raw}'"),
                });
            }
            Ok(v)
        };
        points.push(Point2::new(parse(x_col)?, parse(y_col)?));
        for (ch, (col, _)) in channels.iter_mut().zip(&channel_cols) {
            ch.values.push(parse(*col)?);
        }
    }

    let (points, channels, dropped) = drop_duplicates(points, channels);
    if dropped > 0 {
        eprintln!(
            "warning: {}: dropped {dropped} duplicate point(s)",
            path.display()
        );
    }
    if points.len() < 3 {
        return Err(Error::TooFewPoints { found: points.len(), min: 3 });
    }

    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "sample".into());
    Sample::new(sanitize_id(&id), points, channels)
}

/// Keep the first of any group of points closer than 1e-9 x bbox diagonal.
fn drop_duplicates(
    points: Vec<Point2>,
    channels: Vec<Channel>,
) -> (Vec<Point2>, Vec<Channel>, usize) {
    if points.is_empty() {
        return (points, channels, 0);
    }
    let (mut lo, mut hi) = (points[0], points[0]);
    for p in &points {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    let threshold = 1e-9 * lo.dist(&hi).max(f64::MIN_POSITIVE);
    let mut keep: Vec<usize> = Vec::with_capacity(points.len());
    let cell = threshold;
    let key = |p: &Point2| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
    let mut grid: std::collections::HashMap<(i64, i64), Vec<usize>> =
        std::collections::HashMap::new();
    'outer: for (i, p) in points.iter().enumerate() {
        let (kx, ky) = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(bucket) = grid.get(&(kx + dx, ky + dy)) {
                    for &j in bucket {
                        if points[j].dist(p) <= threshold {
                            continue 'outer;
                        }
                    }
                }
            }
        }
        grid.entry((kx, ky)).or_default().push(i);
        keep.push(i);
    }
    let dropped = points.len() - keep.len();
    let new_points: Vec<Point2> = keep.iter().map(|&i| points[i]).collect();
    let new_channels: Vec<Channel> = channels
        .into_iter()
        .map(|ch| Channel {
            name: ch.name,
            values: keep.iter().map(|&i| ch.values[i]).collect(),
        })
        .collect();
    (new_points, new_channels, dropped)
}

fn sanitize_id(raw: &str) -> String {
    raw.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Write a sample in the ingestion format (`x,y` plus channel columns),
/// 17 significant digits so reading it back is exact.
pub fn write_sample_csv<W: std::io::Write>(sample: &Sample, w: &mut W) -> Result<()> {
    let mut header = String::from("x,y");
    for ch in &sample.channels {
        header.push(',');
        header.push_str(&ch.name);
    }
    writeln!(w, "{header}")?;
    for (i, p) in sample.points.iter().enumerate() {
        let mut row = format!("{:.16e},{:.16e}", p.x, p.y);
        for ch in &sample.channels {
            row.push_str(&format!(",{:.16e}", ch.values[i]));
        }
        writeln!(w, "{row}")?;
    }
    Ok(())
}
