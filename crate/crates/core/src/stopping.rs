//! The topological stopping rule: trimmed-Wasserstein two-sample
//! statistic, its critical-region decision, and the augmentation loop
//! that halts when the persistence diagrams drift.
//!
//! Per iteration the current cloud is augmented, filtered, reduced, and
//! its diagram compared with the previous one. The matched transport
//! costs, symmetrically trimmed at fraction gamma, feed
//!
//! ```text
//! statistic = (nm/(n+m))^(1/p) * (gamma_hat - alpha^p) / sigma_hat
//! ```
//!
//! which is held against the gamma-quantile of the standard normal:
//! statistic <= z_gamma means the diagrams still look like draws from one
//! distribution (continue), anything larger is a topological change
//! (stop).

use serde::{Deserialize, Serialize};

use crate::complexes::{
    alpha_filtration, cech_filtration, max_pairwise_distance, maxmin_landmarks,
    mean_pairwise_distance, rips_filtration, witness_filtration, FilteredComplex,
};
use crate::diagram_distances::{bottleneck, wasserstein, wasserstein_matching};
use crate::error::{Error, Result};
use crate::geometry::{ClipRect, Point2};
use crate::natural_neighbor::{augment, Sample};
use crate::persistence::{diagrams_up_to_dim2, PersistenceDiagram};

/// Which filtration the loop builds each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComplexChoice {
    Alpha,
    Rips,
    Cech,
    Witness,
}

/// How the Rips/Čech/witness scale is derived from the cloud.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RMaxPolicy {
    /// Largest pairwise distance (default heuristic).
    Max,
    /// Mean pairwise distance.
    Mean,
}

/// Stopping-loop configuration. Defaults follow the reference pipeline:
/// alpha 0.01, gamma 0.1, p = 1, 5% landmarks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StopConfig {
    /// Tolerance for topological change.
    pub alpha: f64,
    /// Symmetric trimming fraction, in [0, 0.5).
    pub gamma: f64,
    /// Wasserstein order, >= 1.
    pub p: f64,
    /// Augmentation budget.
    pub max_iters: usize,
    pub complex: ComplexChoice,
    pub r_max: RMaxPolicy,
    /// Landmark fraction for the witness complex.
    pub landmark_fraction: f64,
    /// Clip rectangle margin as a fraction of the bounding box extent.
    pub clip_margin: f64,
    pub seed: u64,
}

impl Default for StopConfig {
    fn default() -> Self {
        StopConfig {
            alpha: 0.01,
            gamma: 0.1,
            p: 1.0,
            max_iters: 3,
            complex: ComplexChoice::Alpha,
            r_max: RMaxPolicy::Max,
            landmark_fraction: 0.05,
            clip_margin: 0.1,
            seed: 0,
        }
    }
}

impl StopConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::DegenerateInput("alpha must be positive".into()));
        }
        if !(0.0..0.5).contains(&self.gamma) {
            return Err(Error::DegenerateInput("gamma must lie in [0, 0.5)".into()));
        }
        if self.p < 1.0 {
            return Err(Error::DegenerateInput("p must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.landmark_fraction) || self.landmark_fraction <= 0.0 {
            return Err(Error::DegenerateInput(
                "landmark fraction must lie in (0, 1]".into(),
            ));
        }
        if !(self.clip_margin > 0.0) {
            return Err(Error::DegenerateInput("clip margin must be positive".into()));
        }
        Ok(())
    }

    /// FNV-1a over the canonical JSON encoding; stable provenance tag.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut h: u64 = 0xcbf29ce484222325;
        for b in json.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

/// Outcome of one critical-region evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    #[serde(rename = "CONTINUE")]
    Continue,
    #[serde(rename = "STOP")]
    Stop,
    MaxItersReached,
}

/// The trimmed statistic with its decision context.
#[derive(Debug, Clone)]
pub struct TestResult {
    /// Left side of the critical inequality; +/- infinity under zero
    /// dispersion (the forced-decision branch).
    pub statistic: f64,
    /// z_gamma, the gamma-quantile of the standard normal.
    pub threshold: f64,
    pub decision: Decision,
    pub gamma_hat: f64,
    pub sigma_hat: f64,
    pub n: usize,
    pub m: usize,
}

/// Distances split by homology dimension, as serialized in traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerDim {
    #[serde(rename = "0")]
    pub dim0: f64,
    #[serde(rename = "1")]
    pub dim1: f64,
    #[serde(rename = "2")]
    pub dim2: f64,
}

/// One row of a [`StopTrace`]. The initial record (t = 0) carries no
/// distances; a failed iteration carries the error text and closes the
/// trace with decision STOP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: usize,
    pub d_b: Option<PerDim>,
    pub d_w1: Option<PerDim>,
    pub gamma_hat: Option<f64>,
    pub sigma_hat: Option<f64>,
    /// Absent when the statistic is not finite (zero dispersion).
    pub statistic: Option<f64>,
    pub threshold: Option<f64>,
    pub decision: Decision,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

/// Per-iteration record of the stopping loop, the pipeline's main output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopTrace {
    pub sample_id: String,
    pub config: StopConfig,
    pub config_hash: String,
    pub iterations: Vec<IterationRecord>,
}

impl StopTrace {
    /// The terminal decision (STOP or MaxItersReached).
    pub fn outcome(&self) -> Decision {
        self.iterations.last().map(|r| r.decision).unwrap_or(Decision::MaxItersReached)
    }
}

/// Standard normal quantile (inverse CDF), Wichura's AS 241 / PPND16
/// rational approximation; absolute error well under 1e-8.
pub fn normal_quantile(prob: f64) -> f64 {
    assert!(prob > 0.0 && prob < 1.0, "quantile needs p in (0,1)");
    const A: [f64; 8] = [
        3.387_132_872_796_366_608,
        1.331_416_678_917_843_774_5e2,
        1.971_590_950_306_551_442_7e3,
        1.373_169_376_550_946_112_5e4,
        4.592_195_393_154_987_145_7e4,
        6.726_577_092_700_870_085_3e4,
        3.343_057_558_358_812_810_5e4,
        2.509_080_928_730_122_672_7e3,
    ];
    const B: [f64; 8] = [
        1.0,
        4.231_333_070_160_091_125_2e1,
        6.871_870_074_920_579_083e2,
        5.394_196_021_424_751_107_7e3,
        2.121_379_430_158_659_586_7e4,
        3.930_789_580_009_271_061e4,
        2.872_908_573_572_194_267_4e4,
        5.226_495_278_852_545_561e3,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_577_34,
        4.630_337_846_156_545_295_9,
        5.769_497_221_460_691_405_5,
        3.647_848_324_763_204_605_04,
        1.270_458_252_452_368_382_58,
        2.417_807_251_774_506_117_7e-1,
        2.272_384_498_926_918_458_33e-2,
        7.745_450_142_783_414_076_4e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_821_87,
        1.676_384_830_183_803_849_4,
        6.897_673_349_851_000_045_5e-1,
        1.481_039_764_274_800_745_9e-1,
        1.519_866_656_361_645_719_66e-2,
        5.475_938_084_995_344_946e-4,
        1.050_750_071_644_416_843_24e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_777_2,
        5.463_784_911_164_114_369_9,
        1.784_826_539_917_291_335_8,
        2.965_605_718_285_048_912_3e-1,
        2.653_218_952_657_612_309_3e-2,
        1.242_660_947_388_078_438_6e-3,
        2.711_555_568_743_487_578_15e-5,
        2.010_334_399_292_288_132_65e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        5.998_322_065_558_879_376_9e-1,
        1.369_298_809_227_358_053_1e-1,
        1.487_536_129_085_061_485_25e-2,
        7.868_691_311_456_132_591e-4,
        1.846_318_317_510_054_681_8e-5,
        1.421_511_758_316_445_888_7e-7,
        2.044_263_103_389_939_785_64e-15,
    ];
    let q = prob - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * horner(r, &A) / horner(r, &B);
    }
    let r = if q < 0.0 { prob } else { 1.0 - prob };
    let r = (-r.ln()).sqrt();
    let v = if r <= 5.0 {
        let r = r - 1.6;
        horner(r, &C) / horner(r, &D)
    } else {
        let r = r - 5.0;
        horner(r, &E) / horner(r, &F)
    };
    if q < 0.0 {
        -v
    } else {
        v
    }
}

fn horner(x: f64, coeffs: &[f64]) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Costs of the optimal p-Wasserstein matchings between two diagrams,
/// pooled over dimensions 0..=2 and sorted ascending. Diagonal pairs,
/// including the zero-cost diagonal-diagonal padding, are included.
pub fn matched_costs(
    d_t: &PersistenceDiagram,
    d_t1: &PersistenceDiagram,
    p: f64,
) -> Result<Vec<f64>> {
    let mut dims = d_t.dims();
    dims.extend(d_t1.dims());
    dims.sort_unstable();
    dims.dedup();
    let mut costs = Vec::new();
    for dim in dims {
        let (matching, _) = wasserstein_matching(d_t, d_t1, dim, p)?;
        costs.extend(matching.costs());
    }
    costs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(costs)
}

fn trim_window(costs: &[f64], gamma: f64) -> Result<(Vec<f64>, usize)> {
    if !(0.0..0.5).contains(&gamma) {
        return Err(Error::DegenerateInput(format!(
            "trimming fraction gamma={gamma} outside [0, 0.5)"
        )));
    }
    let mut sorted = costs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = sorted.len();
    let k = (gamma * m as f64).floor() as usize;
    if m == 0 || 2 * k >= m {
        return Err(Error::EmptyAfterTrim { gamma, m });
    }
    Ok((sorted[k..m - k].to_vec(), m))
}

/// The trimmed Wasserstein statistic: drop the lowest and highest
/// floor(gamma*m) costs, average the p-th powers with uniform weight 1/m,
/// take the p-th root and normalize by 1/(1-2*gamma).
pub fn trimmed_wasserstein(costs: &[f64], gamma: f64, p: f64) -> Result<f64> {
    let (window, m) = trim_window(costs, gamma)?;
    let sum: f64 = window.iter().map(|c| c.powf(p)).sum();
    Ok((sum / m as f64).powf(1.0 / p) / (1.0 - 2.0 * gamma))
}

/// Dispersion estimate: Bessel-corrected standard deviation of the
/// trimmed cost^p values (the plug-in scale for the critical test).
pub fn trimmed_sigma(costs: &[f64], gamma: f64, p: f64) -> Result<f64> {
    let (window, _) = trim_window(costs, gamma)?;
    if window.len() < 2 {
        return Ok(0.0);
    }
    let pows: Vec<f64> = window.iter().map(|c| c.powf(p)).collect();
    let mean = pows.iter().sum::<f64>() / pows.len() as f64;
    let var = pows.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
        / (pows.len() - 1) as f64;
    Ok(var.sqrt())
}

/// Evaluate the critical region. The inequality holding (statistic at or
/// below z_gamma) keeps the loop running; zero dispersion forces the
/// decision by the sign of gamma_hat - alpha^p.
pub fn critical_test(
    gamma_hat: f64,
    sigma_hat: f64,
    n: usize,
    m: usize,
    cfg: &StopConfig,
) -> TestResult {
    let threshold = normal_quantile(cfg.gamma.max(1e-12));
    let alpha_pow = cfg.alpha.powf(cfg.p);
    let statistic = if sigma_hat > 0.0 {
        let factor = ((n * m) as f64 / (n + m) as f64).powf(1.0 / cfg.p);
        factor * (gamma_hat - alpha_pow) / sigma_hat
    } else if gamma_hat > alpha_pow {
        f64::INFINITY
    } else if gamma_hat < alpha_pow {
        f64::NEG_INFINITY
    } else {
        0.0
    };
    let decision = if statistic <= threshold {
        Decision::Continue
    } else {
        Decision::Stop
    };
    TestResult { statistic, threshold, decision, gamma_hat, sigma_hat, n, m }
}

/// Build the configured filtration over a cloud. `iter_seed` feeds the
/// witness landmark selection, which is redrawn every iteration.
pub fn build_filtration(
    points: &[Point2],
    cfg: &StopConfig,
    iter_seed: u64,
) -> Result<FilteredComplex> {
    let scale = match cfg.r_max {
        RMaxPolicy::Max => max_pairwise_distance(points),
        RMaxPolicy::Mean => mean_pairwise_distance(points),
    };
    match cfg.complex {
        ComplexChoice::Alpha => alpha_filtration(points),
        ComplexChoice::Rips => rips_filtration(points, scale, 3),
        ComplexChoice::Cech => cech_filtration(points, 0.5 * scale, 3),
        ComplexChoice::Witness => {
            let k = ((points.len() as f64 * cfg.landmark_fraction).ceil() as usize)
                .clamp(1, points.len());
            let landmarks = maxmin_landmarks(points, k, iter_seed);
            witness_filtration(points, &landmarks, scale, 3)
        }
    }
}

fn mix_seed(seed: u64, t: usize) -> u64 {
    // splitmix64 step
    let mut z = seed.wrapping_add((t as u64).wrapping_mul(0x9E3779B97F4A7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn per_dim(b: &crate::diagram_distances::DistanceBreakdown) -> PerDim {
    PerDim { dim0: b.dim(0), dim1: b.dim(1), dim2: b.dim(2) }
}

/// Everything one full run produces: the cloud after every iteration,
/// its persistence diagram, and the raw per-iteration records (no early
/// exit). Used by the batch pipeline to derive both the stopped and
/// unstopped views.
#[derive(Debug, Clone)]
pub struct FullRun {
    pub states: Vec<Sample>,
    /// Diagram of each state, aligned with `states`.
    pub diagrams: Vec<PersistenceDiagram>,
    pub records: Vec<IterationRecord>,
    pub config: StopConfig,
}

impl FullRun {
    /// Index of the last state the stopping rule accepts: the state just
    /// before the first STOP, or the final state if no STOP fires.
    pub fn accepted_index(&self) -> usize {
        for r in &self.records {
            if r.decision == Decision::Stop {
                return r.t - 1;
            }
        }
        self.states.len() - 1
    }

    /// The canonical trace: truncated after the first STOP; otherwise the
    /// last record is marked MaxItersReached.
    pub fn trace(&self, sample_id: &str) -> StopTrace {
        let mut iterations: Vec<IterationRecord> = Vec::new();
        for r in &self.records {
            iterations.push(r.clone());
            if r.decision == Decision::Stop {
                break;
            }
        }
        if iterations.last().map(|r| r.decision) != Some(Decision::Stop) {
            if let Some(last) = iterations.last_mut() {
                last.decision = Decision::MaxItersReached;
            }
        }
        StopTrace {
            sample_id: sample_id.to_string(),
            config: self.config.clone(),
            config_hash: self.config.hash(),
            iterations,
        }
    }
}

/// Run the augmentation loop to the full iteration budget, recording the
/// stopping rule's verdict at every step without acting on it. Iteration
/// failures close the record list with an error row.
pub fn run_loop_full(sample: &Sample, cfg: &StopConfig) -> Result<FullRun> {
    cfg.validate()?;
    sample.validate()?;
    if sample.len() < 3 {
        return Err(Error::TooFewPoints { found: sample.len(), min: 3 });
    }
    let clip = ClipRect::from_points_with_margin(&sample.points, cfg.clip_margin)?;

    let mut states = vec![sample.clone()];
    let mut records = vec![IterationRecord {
        t: 0,
        d_b: None,
        d_w1: None,
        gamma_hat: None,
        sigma_hat: None,
        statistic: None,
        threshold: None,
        decision: if cfg.max_iters == 0 { Decision::MaxItersReached } else { Decision::Continue },
        error: None,
    }];
    let dgm0 = diagrams_up_to_dim2(&build_filtration(&sample.points, cfg, mix_seed(cfg.seed, 0))?)?;
    let mut diagrams = vec![dgm0.clone()];
    if cfg.max_iters == 0 {
        return Ok(FullRun { states, diagrams, records, config: cfg.clone() });
    }

    let mut dgm_prev = dgm0;
    let mut current = sample.clone();

    for t in 1..=cfg.max_iters {
        let step = (|| -> Result<(Sample, PersistenceDiagram)> {
            let n_new = current.len();
            let (next, _) = augment(&current, n_new, mix_seed(cfg.seed, t), &clip)?;
            let dgm = diagrams_up_to_dim2(&build_filtration(&next.points, cfg, mix_seed(cfg.seed, t))?)?;
            Ok((next, dgm))
        })();
        let (next, dgm_next) = match step {
            Ok(v) => v,
            Err(e) => {
                records.push(IterationRecord {
                    t,
                    d_b: None,
                    d_w1: None,
                    gamma_hat: None,
                    sigma_hat: None,
                    statistic: None,
                    threshold: None,
                    decision: Decision::Stop,
                    error: Some(e.to_string()),
                });
                return Ok(FullRun { states, diagrams, records, config: cfg.clone() });
            }
        };

        let record = (|| -> Result<IterationRecord> {
            let d_b = bottleneck(&dgm_prev, &dgm_next)?;
            let d_w1 = wasserstein(&dgm_prev, &dgm_next, 1.0)?;
            let costs = matched_costs(&dgm_prev, &dgm_next, cfg.p)?;
            let gamma_hat = trimmed_wasserstein(&costs, cfg.gamma, cfg.p)?;
            let sigma_hat = trimmed_sigma(&costs, cfg.gamma, cfg.p)?;
            let test = critical_test(gamma_hat, sigma_hat, costs.len(), costs.len(), cfg);
            Ok(IterationRecord {
                t,
                d_b: Some(per_dim(&d_b)),
                d_w1: Some(per_dim(&d_w1)),
                gamma_hat: Some(gamma_hat),
                sigma_hat: Some(sigma_hat),
                statistic: test.statistic.is_finite().then_some(test.statistic),
                threshold: Some(test.threshold),
                decision: test.decision,
                error: None,
            })
        })();
        match record {
            Ok(r) => records.push(r),
            Err(e) => {
                records.push(IterationRecord {
                    t,
                    d_b: None,
                    d_w1: None,
                    gamma_hat: None,
                    sigma_hat: None,
                    statistic: None,
                    threshold: None,
                    decision: Decision::Stop,
                    error: Some(e.to_string()),
                });
                return Ok(FullRun { states, diagrams, records, config: cfg.clone() });
            }
        }
        states.push(next.clone());
        diagrams.push(dgm_next.clone());
        dgm_prev = dgm_next;
        current = next;
    }
    Ok(FullRun { states, diagrams, records, config: cfg.clone() })
}

/// Run the loop, halting at the first STOP. Returns the last sample the
/// rule accepted together with the trace.
pub fn run_stopping_loop(sample: &Sample, cfg: &StopConfig) -> Result<(Sample, StopTrace)> {
    cfg.validate()?;
    sample.validate()?;
    if sample.len() < 3 {
        return Err(Error::TooFewPoints { found: sample.len(), min: 3 });
    }
    let clip = ClipRect::from_points_with_margin(&sample.points, cfg.clip_margin)?;

    let mut iterations = vec![IterationRecord {
        t: 0,
        d_b: None,
        d_w1: None,
        gamma_hat: None,
        sigma_hat: None,
        statistic: None,
        threshold: None,
        decision: if cfg.max_iters == 0 { Decision::MaxItersReached } else { Decision::Continue },
        error: None,
    }];
    let finish = |iterations: Vec<IterationRecord>, accepted: Sample| {
        let trace = StopTrace {
            sample_id: accepted.id.clone(),
            config: cfg.clone(),
            config_hash: cfg.hash(),
            iterations,
        };
        Ok((accepted, trace))
    };
    if cfg.max_iters == 0 {
        return finish(iterations, sample.clone());
    }

    let mut dgm_prev = diagrams_up_to_dim2(&build_filtration(&sample.points, cfg, mix_seed(cfg.seed, 0))?)?;
    let mut current = sample.clone();

    for t in 1..=cfg.max_iters {
        let step = (|| -> Result<(Sample, PersistenceDiagram, IterationRecord)> {
            let n_new = current.len();
            let (next, _) = augment(&current, n_new, mix_seed(cfg.seed, t), &clip)?;
            let dgm_next =
                diagrams_up_to_dim2(&build_filtration(&next.points, cfg, mix_seed(cfg.seed, t))?)?;
            let d_b = bottleneck(&dgm_prev, &dgm_next)?;
            let d_w1 = wasserstein(&dgm_prev, &dgm_next, 1.0)?;
            let costs = matched_costs(&dgm_prev, &dgm_next, cfg.p)?;
            let gamma_hat = trimmed_wasserstein(&costs, cfg.gamma, cfg.p)?;
            let sigma_hat = trimmed_sigma(&costs, cfg.gamma, cfg.p)?;
            let test = critical_test(gamma_hat, sigma_hat, costs.len(), costs.len(), cfg);
            let record = IterationRecord {
                t,
                d_b: Some(per_dim(&d_b)),
                d_w1: Some(per_dim(&d_w1)),
                gamma_hat: Some(gamma_hat),
                sigma_hat: Some(sigma_hat),
                statistic: test.statistic.is_finite().then_some(test.statistic),
                threshold: Some(test.threshold),
                decision: test.decision,
                error: None,
            };
            Ok((next, dgm_next, record))
        })();
        match step {
            Err(e) => {
                iterations.push(IterationRecord {
                    t,
                    d_b: None,
                    d_w1: None,
                    gamma_hat: None,
                    sigma_hat: None,
                    statistic: None,
                    threshold: None,
                    decision: Decision::Stop,
                    error: Some(e.to_string()),
                });
                return finish(iterations, current);
            }
            Ok((next, dgm_next, mut record)) => {
                let stopping = record.decision == Decision::Stop;
                if !stopping && t == cfg.max_iters {
                    record.decision = Decision::MaxItersReached;
                }
                iterations.push(record);
                if stopping {
                    // `current` is the last sample that passed the test.
                    return finish(iterations, current);
                }
                dgm_prev = dgm_next;
                current = next;
            }
        }
    }
    finish(iterations, current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persistence::DiagramPoint;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn dgm(points: Vec<(f64, f64, usize)>) -> PersistenceDiagram {
        PersistenceDiagram::new(
            points
                .into_iter()
                .map(|(b, d, dim)| DiagramPoint { birth: b, death: d, dim })
                .collect(),
            "test".into(),
            String::new(),
        )
    }

    #[test]
    fn normal_quantile_reference_values() {
        assert!((normal_quantile(0.1) - (-1.2815515655)).abs() <= 1e-8);
        assert!((normal_quantile(0.5)).abs() <= 1e-12);
        assert!((normal_quantile(0.975) - 1.959963985).abs() <= 1e-8);
        assert!((normal_quantile(0.1) + normal_quantile(0.9)).abs() <= 1e-12);
    }

    #[test]
    fn matched_costs_identical_diagrams_are_zero() {
        let d = dgm(vec![(0.0, 1.0, 0), (0.2, 0.8, 1)]);
        let costs = matched_costs(&d, &d, 1.0).unwrap();
        assert!(costs.iter().all(|&c| c == 0.0));
        assert_eq!(trimmed_wasserstein(&costs, 0.1, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn matched_costs_single_point_against_empty() {
        let d1 = dgm(vec![(0.0, 2.0, 0)]);
        let d2 = dgm(vec![]);
        let costs = matched_costs(&d1, &d2, 1.0).unwrap();
        assert_eq!(costs, vec![1.0]);
    }

    #[test]
    fn matched_costs_agree_with_brute_force_total() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..50 {
            let mk = |rng: &mut ChaCha12Rng| {
                let n = rng.gen_range(0..5);
                dgm((0..n)
                    .map(|_| {
                        let b: f64 = rng.gen_range(0.0..1.0);
                        (b, b + rng.gen_range(0.05..1.0), 0)
                    })
                    .collect())
            };
            let d1 = mk(&mut rng);
            let d2 = mk(&mut rng);
            let costs = matched_costs(&d1, &d2, 1.0).unwrap();
            let total: f64 = costs.iter().sum();
            let w1 = crate::diagram_distances::wasserstein(&d1, &d2, 1.0)
                .unwrap()
                .aggregate;
            assert!((total - w1).abs() <= 1e-9, "costs sum {total} vs w1 {w1}");
            // padded matching size: n1 + n2 per dimension
            let expect_len = d1.points.len() + d2.points.len();
            assert_eq!(costs.len(), expect_len);
        }
    }

    #[test]
    fn trimmed_gamma_zero_is_plain_mean() {
        let costs = vec![0.3, 0.1, 0.4, 0.2];
        let g = trimmed_wasserstein(&costs, 0.0, 1.0).unwrap();
        assert_eq!(g, (0.1 + 0.2 + 0.3 + 0.4) / 4.0);
        let g2 = trimmed_wasserstein(&costs, 0.0, 2.0).unwrap();
        let expect = ((0.01f64 + 0.04 + 0.09 + 0.16) / 4.0).sqrt();
        assert!((g2 - expect).abs() < 1e-15);
    }

    #[test]
    fn trimmed_hand_computed_case() {
        let costs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let g = trimmed_wasserstein(&costs, 0.1, 1.0).unwrap();
        assert_eq!(g, 4.5);
    }

    #[test]
    fn trimmed_constant_costs_with_integral_trim_count() {
        // With gamma*m integral the uniform 1/m weighting makes the
        // normalization exact and the statistic reproduces the constant.
        let costs = vec![0.7; 10];
        let g = trimmed_wasserstein(&costs, 0.1, 1.0).unwrap();
        assert!((g - 0.7).abs() < 1e-15);
        let g0 = trimmed_wasserstein(&costs, 0.0, 1.0).unwrap();
        assert!((g0 - 0.7).abs() < 1e-15);
    }

    #[test]
    fn trimmed_rejects_bad_inputs() {
        // Below 0.5 the floor-trim always leaves something, so the
        // empty-after-trim error is the empty-cost-list case.
        assert!(matches!(
            trimmed_wasserstein(&[], 0.1, 1.0),
            Err(Error::EmptyAfterTrim { .. })
        ));
        assert!(matches!(
            trimmed_wasserstein(&[1.0], 0.5, 1.0),
            Err(Error::DegenerateInput(_))
        ));
        // One cost with maximal valid trimming survives.
        let g = trimmed_wasserstein(&[1.0], 0.49, 1.0).unwrap();
        assert!((g - 1.0 / (1.0 - 2.0 * 0.49)).abs() < 1e-12);
    }

    #[test]
    fn trimmed_is_scale_equivariant_and_permutation_invariant() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let mut costs: Vec<f64> = (0..25).map(|_| rng.gen_range(0.0..2.0)).collect();
        let g = trimmed_wasserstein(&costs, 0.1, 1.0).unwrap();
        let scaled: Vec<f64> = costs.iter().map(|c| 3.5 * c).collect();
        let gs = trimmed_wasserstein(&scaled, 0.1, 1.0).unwrap();
        assert!((gs - 3.5 * g).abs() <= 1e-12);
        // permutation invariance: the function sorts internally
        costs.reverse();
        costs.swap(0, 10);
        assert_eq!(trimmed_wasserstein(&costs, 0.1, 1.0).unwrap(), g);
    }

    #[test]
    fn trimming_the_largest_cost_never_raises_the_numerator() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        for _ in 0..20 {
            let mut costs: Vec<f64> = (0..20).map(|_| rng.gen_range(0.0..1.0)).collect();
            costs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let full: f64 = costs.iter().sum();
            let without_largest: f64 = costs[..costs.len() - 1].iter().sum();
            assert!(without_largest <= full);
        }
    }

    #[test]
    fn critical_test_decisions() {
        let cfg = StopConfig::default();
        // Identical diagrams: statistic strongly negative, continue.
        let r = critical_test(0.0, 0.01, 100, 100, &cfg);
        assert_eq!(r.decision, Decision::Continue);
        assert!(r.statistic < r.threshold);
        // Large drift with tight dispersion: stop.
        let r = critical_test(1.0, 0.01, 100, 100, &cfg);
        assert_eq!(r.decision, Decision::Stop);
        // Exactly at the tolerance the statistic vanishes and the negative
        // z-quantile forces a stop.
        let r = critical_test(cfg.alpha, 0.01, 100, 100, &cfg);
        assert!((r.statistic) .abs() < 1e-12);
        assert!(r.threshold < 0.0);
        assert_eq!(r.decision, Decision::Stop);
        // Zero dispersion forces the decision by sign.
        let r = critical_test(0.5, 0.0, 10, 10, &cfg);
        assert_eq!(r.decision, Decision::Stop);
        assert!(r.statistic.is_infinite());
        let r = critical_test(0.0, 0.0, 10, 10, &cfg);
        assert_eq!(r.decision, Decision::Continue);
    }

    #[test]
    fn defaults_match_reference_parameters() {
        let cfg = StopConfig::default();
        assert_eq!(cfg.alpha, 0.01);
        assert_eq!(cfg.gamma, 0.1);
        assert_eq!(cfg.p, 1.0);
        assert_eq!(cfg.landmark_fraction, 0.05);
        let json = serde_json::to_value(&cfg).unwrap();
        assert_eq!(json["alpha"], 0.01);
        assert_eq!(json["gamma"], 0.1);
        assert_eq!(json["p"], 1.0);
        assert_eq!(json["landmark_fraction"], 0.05);
        assert_eq!(json["complex"], "alpha");
    }

    fn disk_blob(n: usize, seed: u64) -> Sample {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let pts: Vec<Point2> = (0..n)
            .map(|_| loop {
                let x: f64 = rng.gen_range(-1.0..1.0);
                let y: f64 = rng.gen_range(-1.0..1.0);
                if x * x + y * y <= 1.0 {
                    return Point2::new(x, y);
                }
            })
            .collect();
        Sample::new("blob", pts, vec![]).unwrap()
    }

    #[test]
    fn zero_budget_leaves_the_sample_alone() {
        let s = disk_blob(30, 1);
        let cfg = StopConfig { max_iters: 0, ..StopConfig::default() };
        let (out, trace) = run_stopping_loop(&s, &cfg).unwrap();
        assert_eq!(out, s);
        assert_eq!(trace.iterations.len(), 1);
        assert_eq!(trace.iterations[0].decision, Decision::MaxItersReached);
    }

    #[test]
    fn dense_blob_runs_at_least_two_iterations() {
        let s = disk_blob(200, 2);
        let cfg = StopConfig { max_iters: 2, ..StopConfig::default() };
        let (_, trace) = run_stopping_loop(&s, &cfg).unwrap();
        assert!(trace.iterations.len() >= 3, "trace: {:?}", trace.iterations);
        assert_eq!(trace.iterations[1].decision, Decision::Continue);
        assert!(matches!(
            trace.iterations[2].decision,
            Decision::Continue | Decision::MaxItersReached
        ));
    }

    #[test]
    fn fixed_seed_reproduces_the_trace_bit_for_bit() {
        let s = disk_blob(60, 3);
        let cfg = StopConfig { max_iters: 2, seed: 42, ..StopConfig::default() };
        let (out1, t1) = run_stopping_loop(&s, &cfg).unwrap();
        let (out2, t2) = run_stopping_loop(&s, &cfg).unwrap();
        assert_eq!(out1, out2);
        assert_eq!(
            serde_json::to_string(&t1).unwrap(),
            serde_json::to_string(&t2).unwrap()
        );
    }

    #[test]
    fn full_run_matches_stopping_loop_up_to_the_stop() {
        let s = disk_blob(80, 4);
        let cfg = StopConfig { max_iters: 2, seed: 9, ..StopConfig::default() };
        let full = run_loop_full(&s, &cfg).unwrap();
        let (accepted, trace) = run_stopping_loop(&s, &cfg).unwrap();
        assert_eq!(full.trace(&s.id), trace);
        assert_eq!(full.states[full.accepted_index()], accepted);
        assert_eq!(full.states.len(), full.records.len());
        assert_eq!(full.diagrams.len(), full.states.len());
    }

    #[test]
    fn trace_has_exactly_one_terminal_record() {
        let s = disk_blob(50, 5);
        for max_iters in [0usize, 1, 2] {
            let cfg = StopConfig { max_iters, seed: 7, ..StopConfig::default() };
            let (_, trace) = run_stopping_loop(&s, &cfg).unwrap();
            let terminals = trace
                .iterations
                .iter()
                .filter(|r| {
                    matches!(r.decision, Decision::Stop | Decision::MaxItersReached)
                })
                .count();
            assert_eq!(terminals, 1);
            assert!(matches!(
                trace.outcome(),
                Decision::Stop | Decision::MaxItersReached
            ));
        }
    }

    #[test]
    fn trace_serializes_with_the_documented_shape() {
        let s = disk_blob(40, 6);
        let cfg = StopConfig { max_iters: 1, ..StopConfig::default() };
        let (_, trace) = run_stopping_loop(&s, &cfg).unwrap();
        let v = serde_json::to_value(&trace).unwrap();
        assert!(v["sample_id"].is_string());
        assert!(v["config"].is_object());
        assert!(v["config_hash"].is_string());
        let iters = v["iterations"].as_array().unwrap();
        assert_eq!(iters[0]["t"], 0);
        assert!(iters[0]["d_b"].is_null());
        let r1 = &iters[1];
        assert!(r1["d_b"]["0"].is_number());
        assert!(r1["d_w1"]["1"].is_number());
        assert!(r1["decision"].is_string());
    }
}
