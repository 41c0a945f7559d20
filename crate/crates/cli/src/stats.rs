//! Dataset summary statistics over run artifacts: per-iteration mean,
//! standard deviation and variation of the pooled per-point coordinate
//! norms, plus the 1-Wasserstein drift from each sample's original
//! diagram. Everything is reported twice: for plain augmentation and for
//! the topologically stopped variant (samples frozen at their stop).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use topo_guard_core::natural_neighbor::Sample;
use topo_guard_core::persistence::{read_diagram_csv, PersistenceDiagram};
use topo_guard_core::stopping::{Decision, StopTrace};
use topo_guard_core::{Error, Result};

/// One iteration row of the dataset summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub t: usize,
    pub mu: f64,
    pub sigma: f64,
    pub variation: f64,
    pub w1: f64,
    pub stopped_mu: f64,
    pub stopped_sigma: f64,
    pub stopped_variation: f64,
    pub stopped_w1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n_samples: usize,
    /// Statistic domain: pooled coordinate norms or a named channel.
    pub domain: String,
    pub iterations: Vec<IterationStats>,
}

/// Per-sample inputs to the summary computation.
pub struct SampleRunData {
    pub states: Vec<Sample>,
    pub diagrams: Vec<PersistenceDiagram>,
    /// Last state index the stopping rule accepted.
    pub accepted_index: usize,
}

fn pooled_values(samples: &[&Sample], channel: Option<&str>) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for s in samples {
        match channel {
            None => values.extend(s.points.iter().map(|p| (p.x * p.x + p.y * p.y).sqrt())),
            Some(name) => {
                let ch = s
                    .channels
                    .iter()
                    .find(|c| c.name == name)
                    .ok_or_else(|| Error::ParseError {
                        line: 0,
                        msg: format!("sample '{}' has no channel '{name}'", s.id),
                    })?;
                values.extend(ch.values.iter().copied());
            }
        }
    }
    Ok(values)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / (values.len() - 1) as f64;
    (mean, var.sqrt())
}

/// Variation sigma/mu; 0 by convention when sigma or mu vanishes.
fn variation(mu: f64, sigma: f64) -> f64 {
    if sigma == 0.0 || mu == 0.0 {
        0.0
    } else {
        sigma / mu
    }
}

/// Pool the per-iteration statistics of a batch of runs. Iteration t uses
/// state min(t, available); the stopped variant freezes each sample at
/// its accepted index.
pub fn compute_summary(runs: &[SampleRunData], channel: Option<&str>) -> Result<SummaryStats> {
    if runs.is_empty() {
        return Err(Error::NoTraces);
    }
    let max_t = runs.iter().map(|r| r.states.len() - 1).max().unwrap_or(0);
    let mut iterations = Vec::with_capacity(max_t + 1);
    for t in 0..=max_t {
        let state_at = |r: &SampleRunData, idx: usize| -> usize { idx.min(r.states.len() - 1) };
        let plain: Vec<&Sample> = runs.iter().map(|r| &r.states[state_at(r, t)]).collect();
        let stopped: Vec<&Sample> = runs
            .iter()
            .map(|r| &r.states[state_at(r, t.min(r.accepted_index))])
            .collect();
        let (mu, sigma) = mean_std(&pooled_values(&plain, channel)?);
        let (smu, ssigma) = mean_std(&pooled_values(&stopped, channel)?);

        let mut w1 = 0.0;
        let mut sw1 = 0.0;
        for r in runs {
            let orig = &r.diagrams[0];
            let d_plain = topo_guard_core::diagram_distances::wasserstein(
                orig,
                &r.diagrams[state_at(r, t)],
                1.0,
            )?;
            let d_stop = topo_guard_core::diagram_distances::wasserstein(
                orig,
                &r.diagrams[state_at(r, t.min(r.accepted_index))],
                1.0,
            )?;
            w1 += d_plain.aggregate;
            sw1 += d_stop.aggregate;
        }
        w1 /= runs.len() as f64;
        sw1 /= runs.len() as f64;

        iterations.push(IterationStats {
            t,
            mu,
            sigma,
            variation: variation(mu, sigma),
            w1,
            stopped_mu: smu,
            stopped_sigma: ssigma,
            stopped_variation: variation(smu, ssigma),
            stopped_w1: sw1,
        });
    }
    Ok(SummaryStats {
        n_samples: runs.len(),
        domain: channel.map(|c| format!("channel:{c}")).unwrap_or_else(|| "norms".into()),
        iterations,
    })
}

/// Reload one sample's run data from its artifact directory.
fn load_run_dir(trace_path: &Path) -> Result<SampleRunData> {
    let dir = trace_path.parent().ok_or_else(|| Error::ParseError {
        line: 0,
        msg: format!("trace {} has no parent directory", trace_path.display()),
    })?;
    let trace: StopTrace = serde_json::from_str(&std::fs::read_to_string(trace_path)?)
        .map_err(|e| Error::ParseError { line: e.line(), msg: format!("trace: {e}") })?;

    let mut states = Vec::new();
    let mut diagrams = Vec::new();
    for t in 0.. {
        let iter_dir = dir.join(format!("iter_{t:03}"));
        if !iter_dir.is_dir() {
            break;
        }
        states.push(crate::ingest::ingest(&iter_dir.join("points.csv"))?);
        let mut points = Vec::new();
        for dim in 0..=2 {
            let f = iter_dir.join(format!("dgm_dim{dim}.csv"));
            let dgm = read_diagram_csv(std::io::BufReader::new(std::fs::File::open(&f)?))?;
            points.extend(dgm.points);
        }
        diagrams.push(PersistenceDiagram::new(points, "file".into(), String::new()));
    }
    if states.is_empty() {
        return Err(Error::ParseError {
            line: 0,
            msg: format!("no iter_* directories next to {}", trace_path.display()),
        });
    }
    let accepted_index = trace
        .iterations
        .iter()
        .find(|r| r.decision == Decision::Stop)
        .map(|r| r.t.saturating_sub(1))
        .unwrap_or(states.len() - 1);
    Ok(SampleRunData { states, diagrams, accepted_index })
}

/// Aggregate statistics from traces matched by a glob; writes
/// `stats.json` and `stats.csv` into `out_dir`.
pub fn cmd_stats(
    traces_glob: &str,
    out_dir: &Path,
    channel: Option<&str>,
) -> Result<SummaryStats> {
    let mut paths: Vec<PathBuf> = glob::glob(traces_glob)
        .map_err(|e| Error::ParseError { line: 0, msg: format!("bad glob: {e}") })?
        .flatten()
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::NoTraces);
    }
    let runs: Vec<SampleRunData> = paths
        .iter()
        .map(|p| load_run_dir(p))
        .collect::<Result<_>>()?;
    let summary = compute_summary(&runs, channel)?;

    std::fs::create_dir_all(out_dir)?;
    crate::run::atomic_write(
        &out_dir.join("stats.json"),
        serde_json::to_string_pretty(&summary).expect("stats serialize").as_bytes(),
    )?;
    crate::run::atomic_write(&out_dir.join("stats.csv"), render_csv(&summary).as_bytes())?;
    Ok(summary)
}

fn render_csv(s: &SummaryStats) -> String {
    let mut out = String::from(
        "t,mu,sigma,variation,w1,stopped_mu,stopped_sigma,stopped_variation,stopped_w1\n",
    );
    for r in &s.iterations {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.t,
            r.mu,
            r.sigma,
            r.variation,
            r.w1,
            r.stopped_mu,
            r.stopped_sigma,
            r.stopped_variation,
            r.stopped_w1
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use topo_guard_core::geometry::Point2;
    use topo_guard_core::natural_neighbor::Channel;
    use topo_guard_core::persistence::DiagramPoint;

    fn dummy_sample(id: &str, norm: f64, channel_value: f64, n: usize) -> Sample {
        // Points on a circle of radius `norm`, so every norm is equal.
        let pts: Vec<Point2> = (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                Point2::new(norm * t.cos(), norm * t.sin())
            })
            .collect();
        Sample::new(
            id,
            pts,
            vec![Channel { name: "c".into(), values: vec![channel_value; n] }],
        )
        .unwrap()
    }

    fn dummy_dgm(death: f64) -> PersistenceDiagram {
        PersistenceDiagram::new(
            vec![DiagramPoint { birth: 0.0, death, dim: 0 }],
            "test".into(),
            String::new(),
        )
    }

    #[test]
    fn constant_values_have_zero_sigma_and_variation() {
        let runs = vec![SampleRunData {
            states: vec![dummy_sample("a", 2.0, 7.0, 10), dummy_sample("a", 2.0, 7.0, 20)],
            diagrams: vec![dummy_dgm(1.0), dummy_dgm(1.0)],
            accepted_index: 1,
        }];
        let s = compute_summary(&runs, Some("c")).unwrap();
        assert_eq!(s.iterations.len(), 2);
        for row in &s.iterations {
            assert_eq!(row.sigma, 0.0);
            assert_eq!(row.variation, 0.0);
            assert_eq!(row.mu, 7.0);
        }
    }

    #[test]
    fn w1_tracks_diagram_drift_from_original() {
        let runs = vec![SampleRunData {
            states: vec![dummy_sample("a", 1.0, 0.0, 8), dummy_sample("a", 1.0, 0.0, 8)],
            diagrams: vec![dummy_dgm(1.0), dummy_dgm(1.5)],
            accepted_index: 0,
        }];
        let s = compute_summary(&runs, None).unwrap();
        assert_eq!(s.iterations[0].w1, 0.0);
        assert!((s.iterations[1].w1 - 0.5).abs() < 1e-12);
        // stopped variant frozen at iteration 0
        assert_eq!(s.iterations[1].stopped_w1, 0.0);
    }

    #[test]
    fn missing_channel_is_an_error() {
        let runs = vec![SampleRunData {
            states: vec![dummy_sample("a", 1.0, 0.0, 8)],
            diagrams: vec![dummy_dgm(1.0)],
            accepted_index: 0,
        }];
        assert!(compute_summary(&runs, Some("nope")).is_err());
    }
}
