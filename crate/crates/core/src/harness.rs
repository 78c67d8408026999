//! Monte Carlo estimators. Sample `i` of a run with seed `s` draws all of
//! its randomness from `RandomSource::new(s, i)`, so results depend only on
//! `(seed, samples)` and never on the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arms::{ArmDetector, ArmQuery, ArmVariant};
use crate::cluster::{connected_in, crosses, Direction, Polarity, UnionFind};
use crate::error::{check_prob, domain, param, Error, Result};
use crate::grid::Grid;
use crate::lattice::{ball, overlay, sample_config, sample_uniforms, Adjacency, Coord, RandomSource, Rect};
use crate::sdp::{
    annulus_connection, check_config, sdp_sample, tilde_config, tilde_enhanced, OMEGA_TAG, SIGMA_TAG,
};
use crate::stats::{wilson, Estimate, Z95};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub seed: u64,
    pub samples: u64,
    /// Worker threads; 0 uses the rayon default.
    pub threads: usize,
}

impl McConfig {
    pub fn new(seed: u64, samples: u64, threads: usize) -> McConfig {
        McConfig { seed, samples, threads }
    }

    pub fn source(&self, index: u64) -> RandomSource {
        RandomSource::new(self.seed, index)
    }
}

/// Evaluates `f(0..count)` on a pool of `threads` workers and returns the
/// results in index order.
pub fn run_indexed<T, F>(count: u64, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
    pool.install(|| (0..count).into_par_iter().map(&f).collect())
}

/// `run_indexed` with per-worker scratch state built by `init`.
pub fn run_indexed_with<S, T, I, F>(count: u64, threads: usize, init: I, f: F) -> Result<Vec<T>>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, u64) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
    pool.install(|| (0..count).into_par_iter().map_init(&init, |s, i| f(s, i)).collect())
}

fn count_hits<F>(cfg: &McConfig, f: F) -> Result<u64>
where
    F: Fn(RandomSource) -> Result<bool> + Sync + Send,
{
    if cfg.samples == 0 {
        return param("at least one sample is required");
    }
    let v = run_indexed(cfg.samples, cfg.threads, |i| f(cfg.source(i)))?;
    Ok(v.into_iter().filter(|&b| b).count() as u64)
}

/// The value `p*` such that the rectangle is crossed left to right at `p`
/// exactly when `p > p*`, found by adding sites in increasing order of their
/// uniforms until the two sides join.
pub fn crossing_threshold(rect: Rect, rng: &RandomSource) -> Result<f64> {
    let u = sample_uniforms(rect, rng)?;
    let g = Grid::new(rect);
    let mut order: Vec<u32> = (0..g.len() as u32).collect();
    order.sort_unstable_by(|&a, &b| u[a as usize].total_cmp(&u[b as usize]));
    let (left, right) = (g.len(), g.len() + 1);
    let mut uf = UnionFind::new(g.len() + 2);
    let mut open = vec![false; g.len()];
    for &s in &order {
        let s = s as usize;
        open[s] = true;
        g.for_each_neighbor(s, Adjacency::Primal, |j| {
            if open[j] {
                uf.union(s, j);
            }
        });
        if s.is_multiple_of(g.w) {
            uf.union(s, left);
        }
        if s % g.w == g.w - 1 {
            uf.union(s, right);
        }
        if uf.find(left) == uf.find(right) {
            return Ok(u[s]);
        }
    }
    unreachable!("an all-open rectangle is crossed")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BisectionStep {
    pub p: f64,
    pub hits: u64,
    pub samples: u64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcBisection {
    pub n: u32,
    /// The half-crossing point with an order-statistic interval.
    pub estimate: Estimate,
    pub trace: Vec<BisectionStep>,
}

/// Bisection for the `p` at which the `Box(n, n)` horizontal crossing
/// probability is 1/2. Each sample contributes its exact crossing threshold,
/// so the empirical crossing frequency is monotone in `p` by construction.
pub fn bisect_pc(n: u32, tol: f64, cfg: &McConfig) -> Result<PcBisection> {
    if !(tol > 0.0) {
        return param("bisection tolerance must be positive");
    }
    if n == 0 || cfg.samples == 0 {
        return param("bisection needs n >= 1 and at least one sample");
    }
    let rect = Rect::box_mn(n, n);
    let mut t = run_indexed(cfg.samples, cfg.threads, |i| crossing_threshold(rect, &cfg.source(i)))?;
    t.sort_unstable_by(f64::total_cmp);
    let total = t.len() as u64;
    let below = |p: f64| t.partition_point(|&x| x < p) as u64;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut trace = Vec::new();
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let hits = below(mid);
        let (ci_lo, ci_hi) = wilson(hits, total, Z95);
        trace.push(BisectionStep { p: mid, hits, samples: total, ci_lo, ci_hi });
        if 2 * hits < total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let value = 0.5 * (lo + hi);
    // p-range on which 1/2 lies inside the Wilson interval of the frequency.
    let ks: Vec<u64> = (0..=total)
        .filter(|&k| {
            let (a, b) = wilson(k, total, Z95);
            a <= 0.5 && 0.5 <= b
        })
        .collect();
    let (ka, kb) = (ks[0], *ks.last().unwrap());
    let ci_lo = if ka == 0 { 0.0 } else { t[ka as usize - 1] };
    let ci_hi = if kb == total { 1.0 } else { t[kb as usize] };
    let estimate = Estimate {
        value,
        ci_lo: ci_lo.min(value),
        ci_hi: ci_hi.max(value),
        hits: below(value),
        samples: total,
        seed: cfg.seed,
        spec: format!("pc-bisect n={n} tol={tol}"),
    };
    Ok(PcBisection { n, estimate, trace })
}

/// `P_p` of a crossing of `rect` by open primal paths.
pub fn estimate_crossing(p: f64, rect: Rect, direction: Direction, cfg: &McConfig) -> Result<Estimate> {
    check_prob("p", p)?;
    let hits = count_hits(cfg, |src| {
        let c = sample_config(rect, p, &src)?;
        crosses(&c, rect, direction, Polarity::Open, Adjacency::Primal)
    })?;
    Ok(Estimate::from_counts(hits, cfg.samples, cfg.seed, format!("crossing p={p} rect={rect:?} {direction:?}")))
}

/// Crossing of `rect` in `ω̄^δ`, with burning decided inside `horizon`.
pub fn estimate_sdp_crossing(
    p: f64,
    delta: f64,
    rect: Rect,
    horizon: Rect,
    direction: Direction,
    cfg: &McConfig,
) -> Result<Estimate> {
    if !horizon.contains_rect(&rect) {
        return domain("crossing rectangle leaves the horizon");
    }
    let hits = count_hits(cfg, |src| {
        let s = sdp_sample(p, delta, horizon, &src)?;
        crosses(s.omega_bar_delta(), rect, direction, Polarity::Open, Adjacency::Primal)
    })?;
    Ok(Estimate::from_counts(
        hits,
        cfg.samples,
        cfg.seed,
        format!("sdp-crossing p={p} delta={delta} rect={rect:?} horizon={horizon:?} {direction:?}"),
    ))
}

/// Smallest configuration domain an arm query reads.
pub fn arm_domain(q: &ArmQuery) -> Rect {
    let (u, big) = (q.center, q.outer as i32);
    match q.variant {
        ArmVariant::FullPlane => ball(u, q.outer),
        ArmVariant::HalfPlaneAbove => Rect::new(u.x - big, u.x + big, u.y, u.y + big).unwrap(),
        ArmVariant::HalfPlaneBelow => Rect::new(u.x - big, u.x + big, u.y - big, u.y).unwrap(),
    }
}

/// `π_σ(n, N)` at `p` for the normalised query.
pub fn estimate_arm_probability(q: &ArmQuery, p: f64, cfg: &McConfig) -> Result<Estimate> {
    let est = estimate_arm_scaling(std::slice::from_ref(q), p, &[q.outer], cfg)?;
    Ok(est.into_iter().next().unwrap().into_iter().next().unwrap())
}

/// Arm probabilities of several queries (their `outer` is ignored) at every
/// outer radius of an increasing list, from shared samples. Each sample is
/// grown lazily: the box for the next radius is only drawn while some query
/// still holds, which is exact because the events decrease in `N` and the
/// canonical-plane RNG gives every sub-box the same sites.
pub fn estimate_arm_scaling(
    queries: &[ArmQuery],
    p: f64,
    outers: &[u32],
    cfg: &McConfig,
) -> Result<Vec<Vec<Estimate>>> {
    check_prob("p", p)?;
    if queries.is_empty() || outers.is_empty() || outers.windows(2).any(|w| w[0] >= w[1]) {
        return param("need at least one query and strictly increasing outer radii");
    }
    if cfg.samples == 0 {
        return param("at least one sample is required");
    }
    let qs: Vec<ArmQuery> = queries.iter().map(|q| q.normalized()).collect();
    // detectors[k][j]: query j at outer radius k.
    let mut detectors = Vec::new();
    let mut domains = Vec::new();
    for &big in outers {
        let sized: Vec<ArmQuery> = qs.iter().map(|q| ArmQuery { outer: big, ..q.clone() }).collect();
        let dom = sized
            .iter()
            .map(arm_domain)
            .reduce(|a, b| {
                Rect::new(
                    a.x_min().min(b.x_min()),
                    a.x_max().max(b.x_max()),
                    a.y_min().min(b.y_min()),
                    a.y_max().max(b.y_max()),
                )
                .unwrap()
            })
            .unwrap();
        domains.push(dom);
        detectors.push(sized.iter().map(ArmDetector::new).collect::<Result<Vec<_>>>()?);
    }
    let results = run_indexed_with(
        cfg.samples,
        cfg.threads,
        || detectors.clone(),
        |det, i| {
            let src = cfg.source(i);
            let mut alive = vec![true; qs.len()];
            let mut hits = vec![vec![false; outers.len()]; qs.len()];
            for k in 0..outers.len() {
                if !alive.iter().any(|&a| a) {
                    break;
                }
                let config = sample_config(domains[k], p, &src)?;
                for j in 0..qs.len() {
                    if alive[j] {
                        alive[j] = det[k][j].event(&config)?;
                        hits[j][k] = alive[j];
                    }
                }
            }
            Ok(hits)
        },
    )?;
    Ok(qs
        .iter()
        .enumerate()
        .map(|(j, q)| {
            outers
                .iter()
                .enumerate()
                .map(|(k, &big)| {
                    let h = results.iter().filter(|r| r[j][k]).count() as u64;
                    Estimate::from_counts(
                        h,
                        cfg.samples,
                        cfg.seed,
                        format!(
                            "arms sigma={} n={} N={big} variant={:?} defect={} p={p}",
                            q.sequence, q.inner, q.variant, q.allow_defect
                        ),
                    )
                })
                .collect()
        })
        .collect())
}

/// Joint event `ω ∈ Ch(S_n)` and `ω̃^δ ∈ Cv(R_n)`, with `ω` drawn on `S_n`
/// and `σ` on `R_n` as in the passage-point sampler.
pub fn theorem_cross_event(p: f64, delta: f64, n: u32, src: &RandomSource) -> Result<bool> {
    let s = Rect::strip_s(n);
    let omega = sample_config(s, p, &src.derive(OMEGA_TAG))?;
    if !crosses(&omega, s, Direction::Horizontal, Polarity::Open, Adjacency::Primal)? {
        return Ok(false);
    }
    let r = Rect::strip_r(n);
    let sigma = sample_config(r, delta, &src.derive(SIGMA_TAG))?;
    let otd = tilde_enhanced(&tilde_config(&omega, n)?, &sigma, n)?;
    crosses(&otd, r, Direction::Vertical, Polarity::Open, Adjacency::Primal)
}

pub fn estimate_theorem_cross(p: f64, delta: f64, n: u32, cfg: &McConfig) -> Result<Estimate> {
    check_prob("p", p)?;
    check_prob("delta", delta)?;
    if n == 0 {
        return param("strip scale must be positive");
    }
    let hits = count_hits(cfg, |src| theorem_cross_event(p, delta, n, &src))?;
    Ok(Estimate::from_counts(hits, cfg.samples, cfg.seed, format!("theorem-cross p={p} delta={delta} n={n}")))
}

/// `∂B_{n-1} ↔ ∂B_{2n}` in `ω̂^δ`, with `ω` drawn on `B_{halo·n}` (where
/// circuit clusters are traced) and `σ` on `B_{2n+1}`.
pub fn annulus_recovery_event(p: f64, delta: f64, n: u32, halo: u32, src: &RandomSource) -> Result<bool> {
    let inner = ball(Coord::ORIGIN, 2 * n + 1);
    let omega = sample_config(ball(Coord::ORIGIN, halo * n), p, &src.derive(OMEGA_TAG))?;
    let sigma = sample_config(inner, delta, &src.derive(SIGMA_TAG))?;
    let hat = check_config(&omega, n)?.restrict(inner)?;
    annulus_connection(&overlay(&hat, &sigma)?, n)
}

pub fn estimate_annulus_recovery(p: f64, delta: f64, n: u32, halo: u32, cfg: &McConfig) -> Result<Estimate> {
    check_prob("p", p)?;
    check_prob("delta", delta)?;
    if n == 0 || halo * n < 2 * n + 1 {
        return param("need n >= 1 and a halo of at least 3");
    }
    let hits = count_hits(cfg, |src| annulus_recovery_event(p, delta, n, halo, &src))?;
    Ok(Estimate::from_counts(
        hits,
        cfg.samples,
        cfg.seed,
        format!("annulus p={p} delta={delta} n={n} halo={halo}"),
    ))
}

/// Finite proxy for `θ(p, δ)`: `0 ↔ ∂B_m` in `ω̄^δ` with burning decided in
/// `horizon`.
pub fn estimate_theta(p: f64, delta: f64, m: u32, horizon: Rect, cfg: &McConfig) -> Result<Estimate> {
    let region = ball(Coord::ORIGIN, m);
    if !horizon.contains_rect(&region) {
        return domain(format!("B_{m} is not inside the horizon"));
    }
    let border = region.border();
    let hits = count_hits(cfg, |src| {
        let s = sdp_sample(p, delta, horizon, &src)?;
        connected_in(s.omega_bar_delta(), region, &[Coord::ORIGIN], &border, Polarity::Open, Adjacency::Primal)
    })?;
    Ok(Estimate::from_counts(
        hits,
        cfg.samples,
        cfg.seed,
        format!("theta p={p} delta={delta} m={m} horizon={horizon:?}"),
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaScanRow {
    pub p: f64,
    /// Smallest grid `δ` whose θ-proxy has a Wilson lower bound above 0.
    pub delta_hat: Option<f64>,
    /// `(p̂_c − p)/(1 − p)` for `p ≤ p̂_c`.
    pub closed_form: Option<f64>,
    /// `(p − p̂_c)/p` for `p > p̂_c`.
    pub linear_bound: Option<f64>,
    pub estimates: Vec<(f64, Estimate)>,
}

/// For each `p`, scans the increasing `δ` grid until the θ-proxy is
/// significantly positive. All cells share the seed, so the scan is a
/// coupled (pointwise monotone) family.
pub fn scan_delta_c(
    p_grid: &[f64],
    delta_grid: &[f64],
    m: u32,
    horizon: Rect,
    p_c: f64,
    cfg: &McConfig,
) -> Result<Vec<DeltaScanRow>> {
    if p_grid.is_empty() || delta_grid.is_empty() {
        return param("scan grids must be nonempty");
    }
    if delta_grid.windows(2).any(|w| w[0] >= w[1]) {
        return param("the delta grid must increase");
    }
    let mut rows = Vec::new();
    for &p in p_grid {
        let mut estimates = Vec::new();
        let mut delta_hat = None;
        for &d in delta_grid {
            let e = estimate_theta(p, d, m, horizon, cfg)?;
            let positive = e.ci_lo > 0.0;
            estimates.push((d, e));
            if positive {
                delta_hat = Some(d);
                break;
            }
        }
        rows.push(DeltaScanRow {
            p,
            delta_hat,
            closed_form: (p <= p_c).then(|| (p_c - p) / (1.0 - p)),
            linear_bound: (p > p_c).then(|| (p - p_c) / p),
            estimates,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_matches_direct_crossing() {
        let rect = Rect::box_mn(6, 6);
        for i in 0..50 {
            let src = RandomSource::new(4, i);
            let t = crossing_threshold(rect, &src).unwrap();
            for p in [0.3, 0.5, 0.6, 0.7, 0.9, t, t + 1e-9] {
                let c = sample_config(rect, p, &src).unwrap();
                let direct = crosses(&c, rect, Direction::Horizontal, Polarity::Open, Adjacency::Primal).unwrap();
                assert_eq!(direct, p > t, "i={i} p={p} t={t}");
            }
        }
    }

    #[test]
    fn indexed_runs_ignore_thread_count() {
        let f = |i: u64| RandomSource::new(1, i).uniform_at(Coord::ORIGIN);
        assert_eq!(run_indexed(100, 1, f).unwrap(), run_indexed(100, 3, f).unwrap());
    }
}
