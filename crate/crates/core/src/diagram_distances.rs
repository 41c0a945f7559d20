//! Distances between persistence diagrams: bottleneck, p-Wasserstein and
//! Hausdorff, all under the extended-plane L∞ ground distance with
//! diagonal projections.
//!
//! Diagrams are compared per homology dimension; infinite-death points
//! must agree in count per dimension (they are matched among themselves
//! by sorted birth) or the distance is rejected as [`Error::InfiniteMismatch`].
//! Reported values are a per-dimension vector plus an aggregate: max over
//! dimensions for bottleneck and Hausdorff, p-norm pooling for Wasserstein.
//!
//! Matchings are exact. The general path solves the diagonally padded
//! assignment problem (cubic Hungarian; bottleneck by binary search over
//! candidate values with bipartite feasibility). Diagrams whose points all
//! share one birth value — H0 diagrams of any filtration built here — take
//! a quadratic monotone-DP path instead, which is what keeps the stopping
//! loop tractable on large clouds.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::persistence::{DiagramPoint, PersistenceDiagram};

/// One side of a matched pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchEnd {
    /// Index into the dimension-filtered point list of the diagram.
    Point(usize),
    Diagonal,
}

/// A pair of the optimal matching with its L∞ ground cost.
#[derive(Debug, Clone, Copy)]
pub struct MatchedPair {
    pub left: MatchEnd,
    pub right: MatchEnd,
    pub cost: f64,
}

/// Partial bijection between two diagrams with diagonal projections.
#[derive(Debug, Clone)]
pub struct Matching {
    pub pairs: Vec<MatchedPair>,
}

impl Matching {
    pub fn costs(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.cost).collect()
    }
}

/// Per-dimension distances plus the aggregate.
#[derive(Debug, Clone)]
pub struct DistanceBreakdown {
    pub per_dim: BTreeMap<usize, f64>,
    pub aggregate: f64,
}

impl DistanceBreakdown {
    pub fn dim(&self, d: usize) -> f64 {
        self.per_dim.get(&d).copied().unwrap_or(0.0)
    }
}

/// Extended-plane L∞ ground distance. Two infinite deaths compare by
/// birth; a single infinite death is an error.
pub fn ground_distance(a: &DiagramPoint, b: &DiagramPoint) -> Result<f64> {
    match (a.death.is_infinite(), b.death.is_infinite()) {
        (true, true) => Ok((a.birth - b.birth).abs()),
        (false, false) => Ok((a.birth - b.birth).abs().max((a.death - b.death).abs())),
        _ => Err(Error::InfiniteMismatch { dim: a.dim }),
    }
}

/// L∞ distance from a point to its diagonal projection; infinite for
/// essential points.
pub fn diagonal_distance(p: &DiagramPoint) -> f64 {
    0.5 * (p.death - p.birth)
}

fn split_dim(d: &PersistenceDiagram, dim: usize) -> (Vec<(f64, f64)>, Vec<f64>) {
    let mut finite = Vec::new();
    let mut infinite = Vec::new();
    for p in d.points.iter().filter(|p| p.dim == dim) {
        if p.death.is_infinite() {
            infinite.push(p.birth);
        } else {
            finite.push((p.birth, p.death));
        }
    }
    infinite.sort_by(|a, b| a.partial_cmp(b).unwrap());
    (finite, infinite)
}

fn dims_union(d1: &PersistenceDiagram, d2: &PersistenceDiagram) -> Vec<usize> {
    let mut dims = d1.dims();
    dims.extend(d2.dims());
    dims.sort_unstable();
    dims.dedup();
    dims
}

/// Matched |Δbirth| costs of the infinite parts (sorted pairing, which is
/// optimal for both the max and any p-norm objective).
fn infinite_costs(inf1: &[f64], inf2: &[f64], dim: usize) -> Result<Vec<f64>> {
    if inf1.len() != inf2.len() {
        return Err(Error::InfiniteMismatch { dim });
    }
    Ok(inf1
        .iter()
        .zip(inf2.iter())
        .map(|(a, b)| (a - b).abs())
        .collect())
}

fn finite_gd(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

fn finite_diag(p: (f64, f64)) -> f64 {
    0.5 * (p.1 - p.0)
}

/// All points of both finite sets share one birth value.
fn common_birth(a: &[(f64, f64)], b: &[(f64, f64)]) -> Option<f64> {
    let first = a.first().or(b.first())?.0;
    if a.iter().chain(b.iter()).all(|p| p.0 == first) {
        Some(first)
    } else {
        None
    }
}

// ---------------------------------------------------------------------
// Monotone DP on the line (shared birth): exact for both the sum-of-powers
// and the min-max objective, because with a fixed diagonal set the optimal
// real-real matching between sorted death sequences never crosses.
// ---------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq)]
enum Objective {
    SumPow(f64),
    MinMax,
}

struct LineMatch {
    /// (index into sorted a, index into sorted b) real-real pairs.
    pairs: Vec<(usize, usize)>,
    skipped_a: Vec<usize>,
    skipped_b: Vec<usize>,
    /// Objective value over raw costs (sum of (c/scale)^p, or max c).
    value: f64,
}

fn line_dp(xs: &[f64], ys: &[f64], birth: f64, obj: Objective, scale: f64) -> LineMatch {
    let n = xs.len();
    let m = ys.len();
    let cost_rr = |i: usize, j: usize| (xs[i] - ys[j]).abs();
    let cost_dx = |i: usize| 0.5 * (xs[i] - birth);
    let cost_dy = |j: usize| 0.5 * (ys[j] - birth);
    let weigh = |c: f64| match obj {
        Objective::SumPow(p) => (c / scale).powf(p),
        Objective::MinMax => c,
    };
    let combine = |acc: f64, c: f64| match obj {
        Objective::SumPow(_) => acc + c,
        Objective::MinMax => acc.max(c),
    };

    let mut dp = vec![0.0f64; (n + 1) * (m + 1)];
    let mut choice = vec![0u8; (n + 1) * (m + 1)];
    let at = |i: usize, j: usize| i * (m + 1) + j;
    for i in 1..=n {
        dp[at(i, 0)] = combine(dp[at(i - 1, 0)], weigh(cost_dx(i - 1)));
        choice[at(i, 0)] = 1;
    }
    for j in 1..=m {
        dp[at(0, j)] = combine(dp[at(0, j - 1)], weigh(cost_dy(j - 1)));
        choice[at(0, j)] = 2;
    }
    for i in 1..=n {
        for j in 1..=m {
            let take = combine(dp[at(i - 1, j - 1)], weigh(cost_rr(i - 1, j - 1)));
            let skip_x = combine(dp[at(i - 1, j)], weigh(cost_dx(i - 1)));
            let skip_y = combine(dp[at(i, j - 1)], weigh(cost_dy(j - 1)));
            let (mut best, mut ch) = (take, 0u8);
            if skip_x < best {
                best = skip_x;
                ch = 1;
            }
            if skip_y < best {
                best = skip_y;
                ch = 2;
            }
            dp[at(i, j)] = best;
            choice[at(i, j)] = ch;
        }
    }

    let mut pairs = Vec::new();
    let mut skipped_a = Vec::new();
    let mut skipped_b = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        match choice[at(i, j)] {
            0 => {
                pairs.push((i - 1, j - 1));
                i -= 1;
                j -= 1;
            }
            1 => {
                skipped_a.push(i - 1);
                i -= 1;
            }
            _ => {
                skipped_b.push(j - 1);
                j -= 1;
            }
        }
    }
    LineMatch { pairs, skipped_a, skipped_b, value: dp[at(n, m)] }
}

// ---------------------------------------------------------------------
// Exact Hungarian assignment (Jonker-Volgenant style potentials, O(N^3)).
// ---------------------------------------------------------------------

/// Minimum-cost perfect assignment on a square cost matrix; returns the
/// column assigned to each row.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    const INF: f64 = f64::INFINITY;
    // 1-based potentials over rows (u) and columns (v).
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut match_col = vec![0usize; n + 1]; // column -> row (1-based, 0 = free)
    for i in 1..=n {
        match_col[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = match_col[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[match_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if match_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            match_col[j0] = match_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if match_col[j] != 0 {
            assignment[match_col[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Scale for cost normalization (avoids overflow at large p).
fn cost_scale(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut s: f64 = 0.0;
    for &x in a {
        s = s.max(finite_diag(x));
        for &y in b {
            s = s.max(finite_gd(x, y));
        }
    }
    for &y in b {
        s = s.max(finite_diag(y));
    }
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

/// Exact optimal matching of the finite parts under Σ cost^p, via the
/// diagonally padded assignment problem or the line DP when every point
/// shares one birth.
fn match_finite(a: &[(f64, f64)], b: &[(f64, f64)], p: f64) -> (Vec<MatchedPair>, f64) {
    let n = a.len();
    let m = b.len();
    if n == 0 && m == 0 {
        return (Vec::new(), 0.0);
    }
    let scale = cost_scale(a, b);

    if let Some(birth) = common_birth(a, b) {
        // Sort by death, remembering original indices.
        let mut ax: Vec<(f64, usize)> = a.iter().map(|p| p.1).zip(0..).collect();
        let mut by: Vec<(f64, usize)> = b.iter().map(|p| p.1).zip(0..).collect();
        ax.sort_by(|u, w| u.0.partial_cmp(&w.0).unwrap());
        by.sort_by(|u, w| u.0.partial_cmp(&w.0).unwrap());
        let xs: Vec<f64> = ax.iter().map(|t| t.0).collect();
        let ys: Vec<f64> = by.iter().map(|t| t.0).collect();
        let lm = line_dp(&xs, &ys, birth, Objective::SumPow(p), scale);
        let mut pairs = Vec::with_capacity(n + m);
        for &(i, j) in &lm.pairs {
            pairs.push(MatchedPair {
                left: MatchEnd::Point(ax[i].1),
                right: MatchEnd::Point(by[j].1),
                cost: (xs[i] - ys[j]).abs(),
            });
        }
        for &i in &lm.skipped_a {
            pairs.push(MatchedPair {
                left: MatchEnd::Point(ax[i].1),
                right: MatchEnd::Diagonal,
                cost: 0.5 * (xs[i] - birth),
            });
        }
        for &j in &lm.skipped_b {
            pairs.push(MatchedPair {
                left: MatchEnd::Diagonal,
                right: MatchEnd::Point(by[j].1),
                cost: 0.5 * (ys[j] - birth),
            });
        }
        // Padded formulation pairs one diagonal slot per real-real match.
        for _ in 0..lm.pairs.len() {
            pairs.push(MatchedPair { left: MatchEnd::Diagonal, right: MatchEnd::Diagonal, cost: 0.0 });
        }
        return (pairs, scale * lm.value.powf(1.0 / p));
    }

    // General path: (n+m) x (n+m) padded matrix.
    let size = n + m;
    let mut cost = vec![vec![0.0f64; size]; size];
    for (i, &pa) in a.iter().enumerate() {
        for (j, &pb) in b.iter().enumerate() {
            cost[i][j] = (finite_gd(pa, pb) / scale).powf(p);
        }
        let dc = (finite_diag(pa) / scale).powf(p);
        for j in m..size {
            cost[i][j] = dc;
        }
    }
    for i in n..size {
        for (j, &pb) in b.iter().enumerate() {
            cost[i][j] = (finite_diag(pb) / scale).powf(p);
        }
        // diagonal-to-diagonal is free
    }
    let assignment = hungarian(&cost);
    let mut pairs = Vec::with_capacity(size);
    let mut total = 0.0;
    for (i, &j) in assignment.iter().enumerate() {
        let (left, right, c) = match (i < n, j < m) {
            (true, true) => (
                MatchEnd::Point(i),
                MatchEnd::Point(j),
                finite_gd(a[i], b[j]),
            ),
            (true, false) => (MatchEnd::Point(i), MatchEnd::Diagonal, finite_diag(a[i])),
            (false, true) => (MatchEnd::Diagonal, MatchEnd::Point(j), finite_diag(b[j])),
            (false, false) => (MatchEnd::Diagonal, MatchEnd::Diagonal, 0.0),
        };
        total += (c / scale).powf(p);
        pairs.push(MatchedPair { left, right, cost: c });
    }
    (pairs, scale * total.powf(1.0 / p))
}

/// Optimal p-Wasserstein matching of one dimension of two diagrams,
/// including the sorted-birth matching of essential points and the
/// diagonal padding pairs.
pub fn wasserstein_matching(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
    dim: usize,
    p: f64,
) -> Result<(Matching, f64)> {
    if p < 1.0 {
        return Err(Error::DegenerateInput(format!("wasserstein order p={p} < 1")));
    }
    let (f1, i1) = split_dim(d1, dim);
    let (f2, i2) = split_dim(d2, dim);
    let inf_costs = infinite_costs(&i1, &i2, dim)?;
    let (mut pairs, finite_value) = match_finite(&f1, &f2, p);
    // Essential points matched among themselves (indices refer to the
    // dimension-filtered lists, finite first).
    for (k, &c) in inf_costs.iter().enumerate() {
        pairs.push(MatchedPair {
            left: MatchEnd::Point(f1.len() + k),
            right: MatchEnd::Point(f2.len() + k),
            cost: c,
        });
    }
    let total_pow: f64 =
        finite_value.powf(p) + inf_costs.iter().map(|c| c.powf(p)).sum::<f64>();
    Ok((Matching { pairs }, total_pow.powf(1.0 / p)))
}

fn bottleneck_dim(d1: &PersistenceDiagram, d2: &PersistenceDiagram, dim: usize) -> Result<f64> {
    let (f1, i1) = split_dim(d1, dim);
    let (f2, i2) = split_dim(d2, dim);
    let inf_costs = infinite_costs(&i1, &i2, dim)?;
    let inf_part = inf_costs.iter().fold(0.0f64, |a, &b| a.max(b));
    Ok(inf_part.max(bottleneck_finite(&f1, &f2)))
}

fn bottleneck_finite(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let n = a.len();
    let m = b.len();
    if n == 0 && m == 0 {
        return 0.0;
    }
    if let Some(birth) = common_birth(a, b) {
        let mut xs: Vec<f64> = a.iter().map(|p| p.1).collect();
        let mut ys: Vec<f64> = b.iter().map(|p| p.1).collect();
        xs.sort_by(|u, w| u.partial_cmp(w).unwrap());
        ys.sort_by(|u, w| u.partial_cmp(w).unwrap());
        return line_dp(&xs, &ys, birth, Objective::MinMax, 1.0).value;
    }

    // Candidate values: every pairwise ground distance and every diagonal
    // projection distance.
    let mut candidates: Vec<f64> = vec![0.0];
    for &x in a {
        candidates.push(finite_diag(x));
        for &y in b {
            candidates.push(finite_gd(x, y));
        }
    }
    for &y in b {
        candidates.push(finite_diag(y));
    }
    candidates.sort_by(|u, w| u.partial_cmp(w).unwrap());
    candidates.dedup();

    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    debug_assert!(bottleneck_feasible(a, b, candidates[hi]));
    while lo < hi {
        let mid = (lo + hi) / 2;
        if bottleneck_feasible(a, b, candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo]
}

/// Feasibility of bottleneck value `t`: every point with diagonal cost
/// above `t` must be matched to an opposing point within `t`, injectively.
/// By the Mendelsohn-Dulmage theorem it suffices that each side's
/// must-match set can be saturated on its own.
fn bottleneck_feasible(a: &[(f64, f64)], b: &[(f64, f64)], t: f64) -> bool {
    let must_a: Vec<usize> =
        (0..a.len()).filter(|&i| finite_diag(a[i]) > t).collect();
    let must_b: Vec<usize> =
        (0..b.len()).filter(|&j| finite_diag(b[j]) > t).collect();
    let adj_a: Vec<Vec<usize>> = must_a
        .iter()
        .map(|&i| (0..b.len()).filter(|&j| finite_gd(a[i], b[j]) <= t).collect())
        .collect();
    if hopcroft_karp(&adj_a, b.len()) != must_a.len() {
        return false;
    }
    let adj_b: Vec<Vec<usize>> = must_b
        .iter()
        .map(|&j| (0..a.len()).filter(|&i| finite_gd(a[i], b[j]) <= t).collect())
        .collect();
    hopcroft_karp(&adj_b, a.len()) == must_b.len()
}

/// Maximum bipartite matching size (Hopcroft-Karp).
fn hopcroft_karp(adj: &[Vec<usize>], n_right: usize) -> usize {
    let n_left = adj.len();
    const NIL: usize = usize::MAX;
    let mut match_l = vec![NIL; n_left];
    let mut match_r = vec![NIL; n_right];
    let mut dist = vec![0u32; n_left];
    let mut matching = 0usize;
    loop {
        // BFS from free left vertices.
        let mut queue: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
        let mut found = false;
        for u in 0..n_left {
            if match_l[u] == NIL {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = u32::MAX;
            }
        }
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                let w = match_r[v];
                if w == NIL {
                    found = true;
                } else if dist[w] == u32::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if !found {
            break;
        }
        fn dfs(
            u: usize,
            adj: &[Vec<usize>],
            match_l: &mut [usize],
            match_r: &mut [usize],
            dist: &mut [u32],
        ) -> bool {
            for k in 0..adj[u].len() {
                let v = adj[u][k];
                let w = match_r[v];
                if w == usize::MAX
                    || (dist[w] == dist[u] + 1 && dfs(w, adj, match_l, match_r, dist))
                {
                    match_l[u] = v;
                    match_r[v] = u;
                    return true;
                }
            }
            dist[u] = u32::MAX;
            false
        }
        for u in 0..n_left {
            if match_l[u] == NIL && dfs(u, adj, &mut match_l, &mut match_r, &mut dist) {
                matching += 1;
            }
        }
    }
    matching
}

/// Exact bottleneck distance, per dimension with the max aggregate.
pub fn bottleneck(d1: &PersistenceDiagram, d2: &PersistenceDiagram) -> Result<DistanceBreakdown> {
    let mut per_dim = BTreeMap::new();
    let mut aggregate: f64 = 0.0;
    for dim in dims_union(d1, d2) {
        let v = bottleneck_dim(d1, d2, dim)?;
        aggregate = aggregate.max(v);
        per_dim.insert(dim, v);
    }
    Ok(DistanceBreakdown { per_dim, aggregate })
}

/// Exact p-Wasserstein distance, per dimension, pooled across dimensions
/// by the p-norm of the per-dimension values.
pub fn wasserstein(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
    p: f64,
) -> Result<DistanceBreakdown> {
    let mut per_dim = BTreeMap::new();
    let mut pooled = 0.0f64;
    for dim in dims_union(d1, d2) {
        let (_, v) = wasserstein_matching(d1, d2, dim, p)?;
        pooled += v.powf(p);
        per_dim.insert(dim, v);
    }
    Ok(DistanceBreakdown { per_dim, aggregate: pooled.powf(1.0 / p) })
}

fn hausdorff_directed(from: &[DiagramPoint], to: &[DiagramPoint]) -> f64 {
    let mut sup: f64 = 0.0;
    for x in from {
        let mut best = diagonal_distance(x); // diagonal always available
        for y in to {
            let d = match (x.death.is_infinite(), y.death.is_infinite()) {
                (true, true) => (x.birth - y.birth).abs(),
                (false, false) => finite_gd((x.birth, x.death), (y.birth, y.death)),
                _ => f64::INFINITY,
            };
            best = best.min(d);
        }
        sup = sup.max(best);
    }
    sup
}

/// Hausdorff distance between diagrams (diagonal included as a target),
/// per dimension with the max aggregate. Never errors: a one-sided
/// essential point simply contributes an infinite directed distance.
pub fn hausdorff(d1: &PersistenceDiagram, d2: &PersistenceDiagram) -> DistanceBreakdown {
    let mut per_dim = BTreeMap::new();
    let mut aggregate: f64 = 0.0;
    for dim in dims_union(d1, d2) {
        let p1 = d1.points_of_dim(dim);
        let p2 = d2.points_of_dim(dim);
        let v = hausdorff_directed(&p1, &p2).max(hausdorff_directed(&p2, &p1));
        aggregate = aggregate.max(v);
        per_dim.insert(dim, v);
    }
    DistanceBreakdown { per_dim, aggregate }
}
