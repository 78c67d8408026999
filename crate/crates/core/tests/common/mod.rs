//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet, VecDeque};

use sdperc::arms::{ArmQuery, ArmVariant};
use sdperc::lattice::{linf_dist, Adjacency, Coord, Rect, SiteConfig};

/// Literal arm-event oracle: backtracking over systems of vertex-disjoint
/// paths whose inner endpoints are in counter-clockwise order. `wild` lists
/// local offsets whose sites either colour may use.
#[derive(Clone)]
pub struct ArmOracle {
    sites: Vec<(i32, i32)>,
    kind: Vec<u8>,
    nbr: [Vec<Vec<usize>>; 2],
    outer: Vec<bool>,
    inner_sorted: Vec<usize>,
    cyclic: bool,
}

const WILD: u8 = 2;

impl ArmOracle {
    pub fn new(cfg: &SiteConfig, q: &ArmQuery, wild: &BTreeSet<(i32, i32)>) -> ArmOracle {
        let (n, big) = (q.inner as i32, q.outer as i32);
        let half = q.variant != ArmVariant::FullPlane;
        let u = q.center;
        let mut sites = Vec::new();
        for y in -big..=big {
            for x in -big..=big {
                let r = x.abs().max(y.abs());
                if r > n && r <= big && (!half || y >= 0) {
                    sites.push((x, y));
                }
            }
        }
        let kind: Vec<u8> = sites
            .iter()
            .map(|&(x, y)| {
                if wild.contains(&(x, y)) {
                    return WILD;
                }
                let c = match q.variant {
                    ArmVariant::HalfPlaneBelow => Coord::new(u.x + x, u.y - y),
                    _ => Coord::new(u.x + x, u.y + y),
                };
                cfg.get(c) as u8
            })
            .collect();
        let mut nbr = [vec![Vec::new(); sites.len()], vec![Vec::new(); sites.len()]];
        for (i, a) in sites.iter().enumerate() {
            for (j, b) in sites.iter().enumerate() {
                let (dx, dy) = ((a.0 - b.0).abs(), (a.1 - b.1).abs());
                if dx.max(dy) == 1 {
                    nbr[0][i].push(j);
                    if dx + dy == 1 {
                        nbr[1][i].push(j);
                    }
                }
            }
        }
        let outer = sites.iter().map(|&(x, y)| x.abs().max(y.abs()) == big).collect();
        let d = n + 1;
        let mut inner: Vec<usize> = (0..sites.len())
            .filter(|&i| {
                let (x, y) = sites[i];
                x.abs().max(y.abs()) == d && !(x.abs() == d && y.abs() == d)
            })
            .collect();
        let angle = |i: usize| {
            let (x, y) = sites[i];
            let a = (y as f64).atan2(x as f64);
            if a < 0.0 {
                a + std::f64::consts::TAU
            } else {
                a
            }
        };
        inner.sort_by(|&a, &b| angle(a).partial_cmp(&angle(b)).unwrap());
        ArmOracle { sites, kind, nbr, outer, inner_sorted: inner, cyclic: !half }
    }

    fn ok(&self, s: usize, c: u8) -> bool {
        self.kind[s] == c || self.kind[s] == WILD
    }

    pub fn event(&self, seq: &[u8]) -> bool {
        let k = seq.len();
        let rotations = if self.cyclic { k } else { 1 };
        for r in 0..rotations {
            let colors: Vec<u8> = (0..k).map(|j| seq[(r + j) % k]).collect();
            let mut used = vec![false; self.sites.len()];
            let mut failed = HashSet::new();
            if self.place(&colors, 0, None, &mut used, &mut failed) {
                return true;
            }
        }
        false
    }

    fn place(
        &self,
        colors: &[u8],
        j: usize,
        last: Option<usize>,
        used: &mut Vec<bool>,
        failed: &mut HashSet<(usize, Option<usize>, Vec<bool>)>,
    ) -> bool {
        if j == colors.len() {
            return true;
        }
        let key = (j, last, used.clone());
        if failed.contains(&key) {
            return false;
        }
        let first = last.map_or(0, |e| e + 1);
        let remaining = colors.len() - j;
        // Each colour needs as many disjoint crossings as it has arms left.
        for col in [0u8, 1] {
            let need = colors[j..].iter().filter(|&&x| x == col).count();
            if need > 0 {
                let starts: Vec<usize> = self.inner_sorted[first..]
                    .iter()
                    .copied()
                    .filter(|&s| !used[s] && self.ok(s, col))
                    .collect();
                if self.disjoint_count(col, used, &starts, need) < need {
                    failed.insert(key);
                    return false;
                }
            }
        }
        let c = colors[j];
        for e in first..self.inner_sorted.len() {
            if self.inner_sorted.len() - e < remaining {
                break;
            }
            let s = self.inner_sorted[e];
            if used[s] || !self.ok(s, c) {
                continue;
            }
            let mut path = vec![s];
            let mut on = vec![false; self.sites.len()];
            on[s] = true;
            if self.extend(colors, j, e, c, &mut path, &mut on, used, failed) {
                return true;
            }
        }
        failed.insert(key);
        false
    }

    /// Enumerates chordless paths; shortcutting a path keeps a valid system,
    /// so chordless arms suffice.
    #[allow(clippy::too_many_arguments)]
    fn extend(
        &self,
        colors: &[u8],
        j: usize,
        e: usize,
        c: u8,
        path: &mut Vec<usize>,
        on: &mut Vec<bool>,
        used: &mut Vec<bool>,
        failed: &mut HashSet<(usize, Option<usize>, Vec<bool>)>,
    ) -> bool {
        let end = *path.last().unwrap();
        if self.outer[end] {
            for &s in path.iter() {
                used[s] = true;
            }
            let ok = self.place(colors, j + 1, Some(e), used, failed);
            for &s in path.iter() {
                used[s] = false;
            }
            return ok;
        }
        if !self.reaches_outer(end, c, used, on) {
            return false;
        }
        let nb = &self.nbr[c as usize];
        for &t in &nb[end] {
            if used[t] || on[t] || !self.ok(t, c) {
                continue;
            }
            if nb[t].iter().any(|&z| on[z] && z != end) {
                continue;
            }
            path.push(t);
            on[t] = true;
            if self.extend(colors, j, e, c, path, on, used, failed) {
                return true;
            }
            on[t] = false;
            path.pop();
        }
        false
    }

    /// Vertex-disjoint crossings from `starts` to the outer ring avoiding
    /// `used`, counted by augmenting paths up to `limit`.
    fn disjoint_count(&self, c: u8, used: &[bool], starts: &[usize], limit: usize) -> usize {
        let m = self.sites.len();
        let ok = |s: usize| !used[s] && self.ok(s, c);
        let mut src_flow = vec![false; m];
        let mut through = vec![false; m];
        let mut sink_flow = vec![false; m];
        let mut edge: HashSet<(usize, usize)> = HashSet::new();
        // Nodes: 2s = in(s), 2s+1 = out(s), 2m = sink.
        let sink = 2 * m;
        let mut count = 0;
        while count < limit {
            let mut parent = vec![usize::MAX; 2 * m + 1];
            let mut q = VecDeque::new();
            for &s in starts {
                if ok(s) && !src_flow[s] {
                    parent[2 * s] = 2 * m + 1;
                    q.push_back(2 * s);
                }
            }
            let mut found = false;
            while let Some(v) = q.pop_front() {
                let s = v / 2;
                let push = |to: usize, q: &mut VecDeque<usize>, parent: &mut Vec<usize>| {
                    if parent[to] == usize::MAX {
                        parent[to] = v;
                        q.push_back(to);
                    }
                };
                if v % 2 == 0 {
                    if !through[s] {
                        push(2 * s + 1, &mut q, &mut parent);
                    }
                    for &p in &self.nbr[c as usize][s] {
                        if edge.contains(&(p, s)) {
                            push(2 * p + 1, &mut q, &mut parent);
                        }
                    }
                } else {
                    if through[s] {
                        push(2 * s, &mut q, &mut parent);
                    }
                    if self.outer[s] && !sink_flow[s] {
                        parent[sink] = v;
                        found = true;
                        break;
                    }
                    for &t in &self.nbr[c as usize][s] {
                        if ok(t) && !edge.contains(&(s, t)) {
                            push(2 * t, &mut q, &mut parent);
                        }
                    }
                }
            }
            if !found {
                break;
            }
            let mut v = sink;
            while v != 2 * m + 1 {
                let p = parent[v];
                if v == sink {
                    sink_flow[p / 2] = true;
                } else if p == 2 * m + 1 {
                    src_flow[v / 2] = true;
                } else if p / 2 == v / 2 {
                    through[v / 2] = p % 2 == 0;
                } else if p % 2 == 1 {
                    if !edge.remove(&(v / 2, p / 2)) {
                        edge.insert((p / 2, v / 2));
                    }
                } else {
                    edge.remove(&(v / 2, p / 2));
                }
                v = p;
            }
            count += 1;
        }
        count
    }

    fn reaches_outer(&self, from: usize, c: u8, used: &[bool], on: &[bool]) -> bool {
        let mut seen = vec![false; self.sites.len()];
        let mut q = VecDeque::from([from]);
        seen[from] = true;
        while let Some(v) = q.pop_front() {
            if self.outer[v] {
                return true;
            }
            for &t in &self.nbr[c as usize][v] {
                if !seen[t] && !used[t] && !on[t] && self.ok(t, c) {
                    seen[t] = true;
                    q.push_back(t);
                }
            }
        }
        false
    }

    pub fn sites(&self) -> &[(i32, i32)] {
        &self.sites
    }
}

pub fn oracle_arm_event(cfg: &SiteConfig, q: &ArmQuery) -> bool {
    if q.inner >= q.outer {
        return true;
    }
    ArmOracle::new(cfg, q, &BTreeSet::new()).event(q.sequence.colors())
}

/// Tries every defect centre whose ball meets the region.
pub fn oracle_defected_arm_event(cfg: &SiteConfig, q: &ArmQuery) -> bool {
    if q.inner >= q.outer {
        return true;
    }
    let seq = q.sequence.colors();
    let plain = ArmOracle::new(cfg, q, &BTreeSet::new());
    if plain.event(seq) {
        return true;
    }
    let big = q.outer as i32;
    let lo = if q.variant == ArmVariant::FullPlane { -big - 3 } else { -3 };
    let mut sets: BTreeSet<Vec<usize>> = BTreeSet::new();
    for vy in lo..=big + 3 {
        for vx in -big - 3..=big + 3 {
            let wild: Vec<usize> = (0..plain.sites.len())
                .filter(|&i| {
                    let (x, y) = plain.sites[i];
                    (x - vx).abs() <= 3 && (y - vy).abs() <= 3
                })
                .collect();
            if !wild.is_empty() {
                sets.insert(wild);
            }
        }
    }
    // Extra wildcards never hurt, so only maximal sets matter.
    let sets: Vec<&Vec<usize>> = sets.iter().collect();
    for (k, w) in sets.iter().enumerate() {
        let dominated = sets
            .iter()
            .enumerate()
            .any(|(j, o)| j != k && o.len() > w.len() && w.iter().all(|i| o.contains(i)));
        if dominated {
            continue;
        }
        let mut alt = plain.clone();
        for &i in w.iter() {
            alt.kind[i] = WILD;
        }
        if alt.event(seq) {
            return true;
        }
    }
    false
}

/// Exhaustive simple-path search for a crossing between two site sets.
pub fn dfs_connected(cfg: &SiteConfig, region: Rect, value: bool, adj: Adjacency, from: &[Coord], to: &[Coord]) -> bool {
    let targets: HashSet<Coord> = to.iter().copied().collect();
    let mut seen = HashSet::new();
    let mut stack: Vec<Coord> = from
        .iter()
        .copied()
        .filter(|&c| region.contains(c) && cfg.get(c) == value)
        .collect();
    while let Some(c) = stack.pop() {
        if !seen.insert(c) {
            continue;
        }
        if targets.contains(&c) {
            return true;
        }
        for &(dx, dy) in adj.steps() {
            let t = c.offset(dx, dy);
            if region.contains(t) && cfg.get(t) == value && !seen.contains(&t) {
                stack.push(t);
            }
        }
    }
    false
}

/// Open circuit around `B_{n-1}` inside `Ann(n, 2n)`, found as a closed walk
/// of winding one in the open subgraph (lifted through the angle cut along
/// the positive x-axis).
pub fn oracle_circuit(cfg: &SiteConfig, n: u32, member: impl Fn(Coord) -> bool) -> bool {
    let n = n as i32;
    let inside = |c: Coord| {
        let r = linf_dist(c, Coord::ORIGIN) as i32;
        r >= n && r <= 2 * n && cfg.get(c) && member(c)
    };
    let crossing = |a: Coord, b: Coord| -> i32 {
        // Winding change when stepping across the cut {y = 1/2, x > 0}.
        if a.x > 0 && b.x > 0 {
            if a.y == 0 && b.y == 1 {
                return 1;
            }
            if a.y == 1 && b.y == 0 {
                return -1;
            }
        }
        0
    };
    let sites: Vec<Coord> = Rect::new(-2 * n, 2 * n, -2 * n, 2 * n)
        .unwrap()
        .iter()
        .filter(|&c| inside(c))
        .collect();
    let mut label: std::collections::HashMap<Coord, i32> = Default::default();
    for &s in &sites {
        if label.contains_key(&s) {
            continue;
        }
        label.insert(s, 0);
        let mut q = VecDeque::from([s]);
        while let Some(c) = q.pop_front() {
            let w = label[&c];
            for &(dx, dy) in &sdperc::lattice::PRIMAL_STEPS {
                let t = c.offset(dx, dy);
                if !inside(t) {
                    continue;
                }
                let wt = w + crossing(c, t);
                match label.get(&t) {
                    None => {
                        label.insert(t, wt);
                        q.push_back(t);
                    }
                    Some(&old) if old != wt => return true,
                    _ => {}
                }
            }
        }
    }
    false
}
