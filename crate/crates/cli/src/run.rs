//! The batch pipeline: ingest every input, run the stopping loop, and
//! write the artifact tree.
//!
//! ```text
//! out/
//!   summary.json                  dataset statistics, stopped vs unstopped
//!   <sample_id>/
//!     trace.json                  the stopping trace
//!     series.csv                  iteration, d_b, d_w1, gamma_hat, decision
//!     iter_000/
//!       points.csv                cloud state after iteration 0 (= input)
//!       dgm_dim0.csv ...          persistence diagrams, dims 0..2
//!     iter_001/ ...
//! ```
//!
//! Files are written atomically (temp file + rename). Sample processing
//! runs on a worker pool; all emitted bytes are independent of scheduling.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use topo_guard_core::natural_neighbor::Sample;
use topo_guard_core::persistence::{write_diagram_csv, PersistenceDiagram};
use topo_guard_core::stopping::{run_loop_full, FullRun, StopTrace};
use topo_guard_core::{Error, Result};

use crate::config::RunConfig;
use crate::ingest::{ingest, write_sample_csv};
use crate::stats::{compute_summary, SampleRunData, SummaryStats};

/// Outcome of a batch run.
#[derive(Debug)]
pub struct RunReport {
    pub processed: Vec<String>,
    pub errors: Vec<(PathBuf, String)>,
    pub summary: Option<SummaryStats>,
}

/// Expand paths and globs, sorted and de-duplicated.
pub fn expand_inputs(inputs: &[String]) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = Vec::new();
    for pattern in inputs {
        let has_glob = pattern.contains(['*', '?', '[']);
        if has_glob {
            let matches = glob::glob(pattern).map_err(|e| Error::ParseError {
                line: 0,
                msg: format!("bad glob '{pattern}': {e}"),
            })?;
            for m in matches.flatten() {
                files.push(m);
            }
        } else {
            files.push(PathBuf::from(pattern));
        }
    }
    files.sort();
    files.dedup();
    Ok(files)
}

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

/// Render the plot-ready series of a trace: one row per recorded
/// iteration, aggregate distances (max over dimensions for d_b, sum for
/// d_w1, matching the breakdown aggregates at p = 1).
pub fn render_series(trace: &StopTrace) -> String {
    let mut out = String::from("iteration,d_b,d_w1,gamma_hat,decision\n");
    for r in &trace.iterations {
        let d_b = r.d_b.map(|d| d.dim0.max(d.dim1).max(d.dim2));
        let d_w1 = r.d_w1.map(|d| d.dim0 + d.dim1 + d.dim2);
        let decision = match r.decision {
            topo_guard_core::stopping::Decision::Continue => "CONTINUE",
            topo_guard_core::stopping::Decision::Stop => "STOP",
            topo_guard_core::stopping::Decision::MaxItersReached => "MaxItersReached",
        };
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.t,
            fmt_opt(d_b),
            fmt_opt(d_w1),
            fmt_opt(r.gamma_hat),
            decision
        ));
    }
    out
}

fn write_sample_artifacts(out_dir: &Path, sample: &Sample, full: &FullRun) -> Result<StopTrace> {
    let dir = out_dir.join(&sample.id);
    let trace = full.trace(&sample.id);
    atomic_write(
        &dir.join("trace.json"),
        serde_json::to_string_pretty(&trace)
            .expect("trace serializes")
            .as_bytes(),
    )?;
    atomic_write(&dir.join("series.csv"), render_series(&trace).as_bytes())?;
    for (t, (state, dgm)) in full.states.iter().zip(&full.diagrams).enumerate() {
        let iter_dir = dir.join(format!("iter_{t:03}"));
        let mut buf = Vec::new();
        write_sample_csv(state, &mut buf)?;
        atomic_write(&iter_dir.join("points.csv"), &buf)?;
        for dim in 0..=2usize {
            let sub = PersistenceDiagram::new(
                dgm.points.iter().filter(|p| p.dim == dim).copied().collect(),
                dgm.kind.clone(),
                dgm.params.clone(),
            );
            let mut buf = Vec::new();
            write_diagram_csv(&sub, &mut buf)?;
            atomic_write(&iter_dir.join(format!("dgm_dim{dim}.csv")), &buf)?;
        }
    }
    Ok(trace)
}

/// Run the batch pipeline. Per-file failures are collected, not fatal;
/// an empty input expansion is an input error.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let files = expand_inputs(&cfg.inputs)?;
    if files.is_empty() {
        return Err(Error::ParseError {
            line: 0,
            msg: "no input files matched".into(),
        });
    }
    std::fs::create_dir_all(&cfg.out_dir)?;

    let results: Vec<(PathBuf, Result<(Sample, FullRun)>)> = files
        .par_iter()
        .map(|path| {
            let outcome = (|| {
                let sample = ingest(path)?;
                let stop_cfg = cfg.stop_config_for(&sample.id);
                let full = run_loop_full(&sample, &stop_cfg)?;
                write_sample_artifacts(&cfg.out_dir, &sample, &full)?;
                Ok((sample, full))
            })();
            (path.clone(), outcome)
        })
        .collect();

    let mut processed = Vec::new();
    let mut errors = Vec::new();
    let mut runs: Vec<SampleRunData> = Vec::new();
    for (path, outcome) in results {
        match outcome {
            Ok((sample, full)) => {
                processed.push(sample.id.clone());
                runs.push(SampleRunData {
                    states: full.states,
                    diagrams: full.diagrams,
                    accepted_index: {
                        let full_like = full.records;
                        first_stop_index(&full_like)
                    },
                });
            }
            Err(e) => errors.push((path, e.to_string())),
        }
    }

    let summary = if runs.is_empty() {
        None
    } else {
        let summary = compute_summary(&runs, None)?;
        atomic_write(
            &cfg.out_dir.join("summary.json"),
            serde_json::to_string_pretty(&summary)
                .expect("summary serializes")
                .as_bytes(),
        )?;
        Some(summary)
    };

    Ok(RunReport { processed, errors, summary })
}

fn first_stop_index(records: &[topo_guard_core::stopping::IterationRecord]) -> usize {
    for r in records {
        if r.decision == topo_guard_core::stopping::Decision::Stop {
            return r.t.saturating_sub(1);
        }
    }
    records.last().map(|r| r.t).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, ShapeKind, SyntheticShape};

    fn tmpdir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("topo_guard_run_{tag}_{}", rand::random::<u64>()));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn empty_inputs_are_an_input_error() {
        let cfg = RunConfig {
            inputs: vec!["/nonexistent/nothing_*.csv".into()],
            out_dir: tmpdir("empty"),
            ..RunConfig::default()
        };
        match cmd_run(&cfg) {
            Err(Error::ParseError { .. }) => {}
            other => panic!("expected input error, got {other:?}"),
        }
    }

    #[test]
    fn run_writes_complete_artifact_tree() {
        let dir = tmpdir("tree");
        let sample = generate(&SyntheticShape {
            kind: ShapeKind::Annulus,
            n: 48,
            noise: 0.0,
            seed: 5,
        })
        .unwrap();
        let input = dir.join("annulus.csv");
        let mut buf = Vec::new();
        write_sample_csv(&sample, &mut buf).unwrap();
        std::fs::write(&input, &buf).unwrap();

        let out = dir.join("out");
        let cfg = RunConfig {
            inputs: vec![input.to_string_lossy().into_owned()],
            out_dir: out.clone(),
            max_iters: 1,
            seed: 3,
            ..RunConfig::default()
        };
        let report = cmd_run(&cfg).unwrap();
        assert!(report.errors.is_empty());
        assert_eq!(report.processed.len(), 1);
        let sdir = out.join("annulus");
        assert!(sdir.join("trace.json").is_file());
        assert!(sdir.join("series.csv").is_file());
        let trace: StopTrace =
            serde_json::from_str(&std::fs::read_to_string(sdir.join("trace.json")).unwrap())
                .unwrap();
        // every trace iteration has its three diagram CSVs
        for r in &trace.iterations {
            for dim in 0..=2 {
                let f = sdir.join(format!("iter_{:03}/dgm_dim{dim}.csv", r.t));
                assert!(f.is_file(), "missing {f:?}");
            }
            assert!(sdir.join(format!("iter_{:03}/points.csv", r.t)).is_file());
        }
        // series rows = iterations + header
        let series = std::fs::read_to_string(sdir.join("series.csv")).unwrap();
        assert_eq!(series.lines().count(), trace.iterations.len() + 1);
        assert!(out.join("summary.json").is_file());
    }

    #[test]
    fn identical_seeds_give_byte_identical_outputs() {
        let dir = tmpdir("det");
        let sample = generate(&SyntheticShape {
            kind: ShapeKind::Circle,
            n: 48,
            noise: 0.01,
            seed: 11,
        })
        .unwrap();
        let input = dir.join("c.csv");
        let mut buf = Vec::new();
        write_sample_csv(&sample, &mut buf).unwrap();
        std::fs::write(&input, &buf).unwrap();

        let run = |out: PathBuf| {
            let cfg = RunConfig {
                inputs: vec![input.to_string_lossy().into_owned()],
                out_dir: out.clone(),
                max_iters: 1,
                seed: 99,
                ..RunConfig::default()
            };
            cmd_run(&cfg).unwrap();
            (
                std::fs::read(out.join("c/series.csv")).unwrap(),
                std::fs::read(out.join("c/trace.json")).unwrap(),
                std::fs::read(out.join("summary.json")).unwrap(),
            )
        };
        let a = run(dir.join("out1"));
        let b = run(dir.join("out2"));
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        assert_eq!(a.2, b.2);
    }
}
