//! Passage points: enhanced sites on the canonical minimal-enhancement
//! vertical crossing of the strip, and the arm structure around them.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use crate::arms::{canonical, has_defected_arm_event, ArmQuery, ArmVariant};
use crate::error::{domain, param, Result};
use crate::grid::Grid;
use crate::lattice::{ball, linf_dist, Coord, RandomSource, Rect, SiteConfig};
use crate::sdp::{chi_mask, tilde_enhanced, tilde_from_chi, OMEGA_TAG, SIGMA_TAG};

#[derive(Clone, Debug)]
pub struct PassageSample {
    pub n: u32,
    pub omega: SiteConfig,
    pub sigma: SiteConfig,
    pub omega_tilde: SiteConfig,
    pub omega_tilde_delta: SiteConfig,
    /// Sites of `R_n` closed in `ω̃` and open in `ω̃^δ`.
    pub enhanced: BTreeSet<Coord>,
    /// Canonical crossing, top to bottom.
    pub gamma: Option<Vec<Coord>>,
    pub cost: Option<u32>,
    /// Whether `ω` crosses `S_n` horizontally.
    pub horizontal: bool,
    pub passage_points: BTreeSet<Coord>,
}

#[derive(Serialize)]
struct PassageRecord {
    n: u32,
    seed: u64,
    size: usize,
    points: Vec<(i32, i32)>,
    cost: Option<u32>,
    gamma_len: Option<usize>,
}

impl PassageSample {
    pub fn is_empty(&self) -> bool {
        self.passage_points.is_empty()
    }

    /// One-line JSON record of the sample.
    pub fn to_json(&self, seed: u64) -> String {
        let rec = PassageRecord {
            n: self.n,
            seed,
            size: self.passage_points.len(),
            points: self.passage_points.iter().map(|c| (c.x, c.y)).collect(),
            cost: self.cost,
            gamma_len: self.gamma.as_ref().map(Vec::len),
        };
        serde_json::to_string(&rec).expect("record serializes")
    }
}

struct CrossingSearch {
    dist: Vec<u32>,
    parent: Vec<usize>,
    grid: Grid,
}

const UNSEEN: u32 = u32::MAX;

/// 0-1 BFS from the top row of `S_n` through open sites of `ω̃^δ`, where
/// entering an enhanced site costs one.
fn crossing_search(omega_tilde_delta: &SiteConfig, enhanced: &BTreeSet<Coord>, n: u32) -> Result<CrossingSearch> {
    if n == 0 {
        return param("strip scale must be positive");
    }
    let s = Rect::strip_s(n);
    if !omega_tilde_delta.domain().contains_rect(&s) {
        return domain(format!("S_{n} is not inside the configuration domain"));
    }
    let g = Grid::new(s);
    let w = g.w as isize;
    let open: Vec<bool> = s.iter().map(|c| omega_tilde_delta.get(c)).collect();
    let mut weight = vec![0u32; g.len()];
    for c in enhanced {
        if let Some(i) = s.index(*c) {
            weight[i] = 1;
        }
    }
    let mut dist = vec![UNSEEN; g.len()];
    let mut parent = vec![usize::MAX; g.len()];
    let mut done = vec![false; g.len()];
    let mut q = VecDeque::new();
    // Free sources first, each group left to right.
    let top = (g.h - 1) * g.w;
    for cost in [0, 1] {
        for i in top..g.len() {
            if open[i] && weight[i] == cost {
                dist[i] = cost;
                q.push_back(i);
            }
        }
    }
    // Left, down, up, right.
    let steps: [isize; 4] = [-1, -w, w, 1];
    while let Some(i) = q.pop_front() {
        if done[i] {
            continue;
        }
        done[i] = true;
        let (x, y) = ((i % g.w) as isize, (i / g.w) as isize);
        for (k, &st) in steps.iter().enumerate() {
            let (nx, ny) = match k {
                0 => (x - 1, y),
                1 => (x, y - 1),
                2 => (x, y + 1),
                _ => (x + 1, y),
            };
            if nx < 0 || ny < 0 || nx >= w || ny >= g.h as isize {
                continue;
            }
            let j = (i as isize + st) as usize;
            if !open[j] || done[j] {
                continue;
            }
            let nd = dist[i] + weight[j];
            if nd < dist[j] {
                dist[j] = nd;
                parent[j] = i;
                if weight[j] == 0 {
                    q.push_front(j);
                } else {
                    q.push_back(j);
                }
            }
        }
    }
    Ok(CrossingSearch { dist, parent, grid: g })
}

impl CrossingSearch {
    /// Leftmost bottom site of minimal cost.
    fn best_bottom(&self) -> Option<usize> {
        (0..self.grid.w).filter(|&i| self.dist[i] != UNSEEN).min_by_key(|&i| (self.dist[i], i))
    }
}

/// Minimal number of enhanced sites on an open vertical crossing of `S_n`
/// in `ω̃^δ`, or `None` without such a crossing.
pub fn min_enhanced_crossing_cost(
    omega_tilde_delta: &SiteConfig,
    enhanced: &BTreeSet<Coord>,
    n: u32,
) -> Result<Option<u32>> {
    let search = crossing_search(omega_tilde_delta, enhanced, n)?;
    Ok(search.best_bottom().map(|i| search.dist[i]))
}

/// The canonical minimal crossing: the shortest-path tree of the 0-1 search
/// traced back from the leftmost cheapest bottom site. Returned top to bottom.
pub fn leftmost_minimal_crossing(
    omega_tilde_delta: &SiteConfig,
    enhanced: &BTreeSet<Coord>,
    n: u32,
) -> Result<Option<Vec<Coord>>> {
    let search = crossing_search(omega_tilde_delta, enhanced, n)?;
    let Some(mut i) = search.best_bottom() else {
        return Ok(None);
    };
    let rect = search.grid.rect;
    let mut path = vec![rect.coord(i)];
    while search.parent[i] != usize::MAX {
        i = search.parent[i];
        path.push(rect.coord(i));
    }
    path.reverse();
    // Keep the segment between the last top visit and the first bottom visit.
    let first_bottom = path.iter().position(|c| c.y == 0).expect("path ends on the bottom row");
    let last_top = path[..=first_bottom].iter().rposition(|c| c.y == n as i32).expect("path starts on the top row");
    Ok(Some(path[last_top..=first_bottom].to_vec()))
}

/// Runs the crossing-killed pipeline on `(ω, σ)` and extracts the passage
/// points.
pub fn passage_set(omega: &SiteConfig, sigma: &SiteConfig, n: u32) -> Result<PassageSample> {
    let chi = chi_mask(omega, n)?;
    let horizontal = chi.count_open() > 0;
    let omega_tilde = tilde_from_chi(&chi).with_outside(false);
    let omega_tilde_delta = tilde_enhanced(&omega_tilde, sigma, n)?;
    let enhanced: BTreeSet<Coord> = Rect::strip_r(n)
        .iter()
        .filter(|&c| !omega_tilde.get(c) && omega_tilde_delta.get(c))
        .collect();
    let gamma = leftmost_minimal_crossing(&omega_tilde_delta, &enhanced, n)?;
    let cost = gamma.as_ref().map(|g| g.iter().filter(|c| enhanced.contains(c)).count() as u32);
    let passage_points = match (&gamma, horizontal) {
        (Some(g), true) => g.iter().copied().filter(|c| enhanced.contains(c)).collect(),
        _ => BTreeSet::new(),
    };
    Ok(PassageSample {
        n,
        omega: omega.clone(),
        sigma: sigma.clone(),
        omega_tilde,
        omega_tilde_delta,
        enhanced,
        gamma,
        cost,
        horizontal,
        passage_points,
    })
}

/// Draws `ω ~ P_p` on `S_n` and `σ ~ P_δ` on `R_n` and extracts the passage
/// points.
pub fn sample_passage_set(p: f64, delta: f64, n: u32, rng: &RandomSource) -> Result<PassageSample> {
    let omega = crate::lattice::sample_config(Rect::strip_s(n), p, &rng.derive(OMEGA_TAG))?;
    let sigma = crate::lattice::sample_config(Rect::strip_r(n), delta, &rng.derive(SIGMA_TAG))?;
    passage_set(&omega, &sigma, n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EventGeometry {
    pub u: Coord,
    pub v: Coord,
    pub r: u32,
    pub big_r: u32,
    pub r_prime: u32,
    pub big_r_prime: u32,
}

fn linf_diam(a: &BTreeSet<Coord>) -> u32 {
    let xs = a.iter().map(|c| c.x);
    let ys = a.iter().map(|c| c.y);
    let dx = xs.clone().max().unwrap() - xs.min().unwrap();
    let dy = ys.clone().max().unwrap() - ys.min().unwrap();
    dx.max(dy) as u32
}

/// Largest `s` with `B_s(c) ⊂ member`, or `None` when `c` itself is missing.
fn largest_ball(c: Coord, member: impl Fn(Coord) -> bool) -> Option<u32> {
    if !member(c) {
        return None;
    }
    let mut s = 0u32;
    loop {
        let t = s as i32 + 1;
        let ring_ok = (-t..=t).all(|k| {
            member(c.offset(k, t)) && member(c.offset(k, -t)) && member(c.offset(t, k)) && member(c.offset(-t, k))
        });
        if !ring_ok {
            return Some(s);
        }
        s += 1;
    }
}

/// Centres, radii and half-plane radii attached to a pair `A ⊂ B`. Radii
/// capped by half the strip height use `⌊n/2⌋`.
pub fn event_geometry(a: &BTreeSet<Coord>, b: &BTreeSet<Coord>, n: u32) -> Result<EventGeometry> {
    if n == 0 {
        return param("strip scale must be positive");
    }
    if a.is_empty() || !a.is_subset(b) {
        return param("A must be a nonempty subset of B");
    }
    let rn = Rect::strip_r(n);
    if !a.iter().any(|&c| rn.contains(c)) || !b.iter().any(|&c| rn.contains(c)) {
        return param("A and B must meet R_n");
    }
    let half = n / 2;
    let r = linf_diam(a).div_ceil(2);
    let max_x = a.iter().map(|c| c.x).max().unwrap();
    let max_y = a.iter().map(|c| c.y).max().unwrap();
    let u = Coord::new(max_x - r as i32, max_y - r as i32);
    let v = if 2 * u.y.unsigned_abs() <= n {
        Coord::new(u.x, 0)
    } else {
        Coord::new(u.x, n as i32)
    };
    let sn = Rect::strip_s(n);
    let big_r = largest_ball(u, |c| b.contains(&c) && sn.contains(c)).map_or(r, |s| s.max(r));
    let r_prime = ((u.y - v.y).unsigned_abs() + big_r).min(half);
    let big_r_prime = largest_ball(v, |c| b.contains(&c)).map_or(r_prime, |s| s.min(half).max(r_prime));
    Ok(EventGeometry { u, v, r, big_r, r_prime, big_r_prime })
}

fn arm_query(name: &str, u: Coord, r: u32, big: u32, variant: ArmVariant) -> ArmQuery {
    let seq = canonical(name).expect("canonical sequence");
    ArmQuery::new(u, r, big, seq, variant).with_defect(true).normalized()
}

/// Six arms with a defect around an interior centre, or four half-plane
/// arms with a defect around a centre on the top or bottom line of `S_n`.
pub fn verify_lemma_arms(sample: &PassageSample, u: Coord, r: u32, big: u32) -> Result<bool> {
    let n = sample.n;
    if r > big {
        return param("inner radius exceeds outer radius");
    }
    let sn = Rect::strip_s(n);
    let interior = sn.contains_rect(&ball(u, big));
    let on_line = u.y == 0 || u.y == n as i32;
    let half_ok = on_line && 2 * big <= n && u.x.unsigned_abs() + big <= 3 * n;
    if !interior && !half_ok {
        return param("the ball is neither inside S_n nor a half ball on its boundary");
    }
    let x = &sample.passage_points;
    if !x.iter().any(|&c| linf_dist(c, u) <= r) {
        return param("no passage point in the inner ball");
    }
    if x.iter().any(|&c| linf_dist(c, u) > r && linf_dist(c, u) <= big) {
        return param("passage point in the annulus");
    }
    if r == big {
        return Ok(true);
    }
    let q = if interior {
        arm_query("Arm6", u, r, big, ArmVariant::FullPlane)
    } else if u.y == 0 {
        arm_query("Arm4hp", u, r, big, ArmVariant::HalfPlaneAbove)
    } else {
        arm_query("Arm4hp", u, r, big, ArmVariant::HalfPlaneBelow)
    };
    if q.is_trivial() {
        return Ok(true);
    }
    has_defected_arm_event(&sample.omega, &q)
}

/// Whether `ω` lies in `Arm₆*(u; r, R) ∩ Arm₄ʰᵖ*(v; r′, R′)` for the
/// geometry of `(A, B)`.
pub fn composite_event(omega: &SiteConfig, geom: &EventGeometry) -> Result<bool> {
    if geom.r < geom.big_r {
        let q = arm_query("Arm6", geom.u, geom.r, geom.big_r, ArmVariant::FullPlane);
        if !q.is_trivial() && !has_defected_arm_event(omega, &q)? {
            return Ok(false);
        }
    }
    if geom.r_prime < geom.big_r_prime {
        let variant = if geom.v.y == 0 { ArmVariant::HalfPlaneAbove } else { ArmVariant::HalfPlaneBelow };
        let q = arm_query("Arm4hp", geom.v, geom.r_prime, geom.big_r_prime, variant);
        if !q.is_trivial() && !has_defected_arm_event(omega, &q)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Admissible `(u, r, R)` triples around passage points: centres within
/// distance 2 of a passage point and its projection on the nearer strip line, with
/// `r` ranging over distance levels of the passage set and `R` the largest
/// radius leaving the annulus empty.
pub fn lemma_instances(sample: &PassageSample) -> Vec<(Coord, u32, u32)> {
    let n = sample.n;
    let sn = Rect::strip_s(n);
    let mut centres = BTreeSet::new();
    for &x in &sample.passage_points {
        for dy in -2..=2 {
            for dx in -2..=2 {
                let c = x.offset(dx, dy);
                if sn.contains(c) {
                    centres.insert(c);
                }
            }
        }
        let y = if 2 * x.y <= n as i32 { 0 } else { n as i32 };
        centres.insert(Coord::new(x.x, y));
    }
    let mut out = Vec::new();
    for u in centres {
        let on_line = u.y == 0 || u.y == n as i32;
        let interior_cap = {
            let (x0, x1, y0, y1) = (u.x - sn.x_min(), sn.x_max() - u.x, u.y - sn.y_min(), sn.y_max() - u.y);
            x0.min(x1).min(y0).min(y1)
        };
        let cap = if interior_cap > 0 || !on_line {
            interior_cap
        } else {
            ((n / 2) as i32).min(3 * n as i32 - u.x.abs())
        };
        if cap < 0 {
            continue;
        }
        let mut levels: Vec<u32> = sample.passage_points.iter().map(|&c| linf_dist(c, u)).collect();
        levels.sort_unstable();
        levels.dedup();
        for (k, &r) in levels.iter().enumerate() {
            if r as i32 > cap {
                break;
            }
            let next = levels.get(k + 1).map_or(u32::MAX, |&d| d - 1);
            let big = next.min(cap as u32);
            out.push((u, r, big));
        }
    }
    out
}
