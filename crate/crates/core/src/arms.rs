//! Arm events: detection of disjoint coloured crossings of an annulus or
//! half-annulus, with and without a single `B_3` defect.
//!
//! Open arms are primal paths of open sites, closed arms are matching paths
//! of closed sites, all arms pairwise vertex-disjoint, with inner endpoints
//! on `∂B_n(u)` in counter-clockwise order and outer endpoints on `∂ᵢB_N(u)`.
//!
//! Detection works on the universal cover of the annulus (the half-annulus
//! needs no cover). Arms are found one at a time as the extremal crossing of
//! the next colour lying counter-clockwise of the previous arm, using a
//! depth-first search that always tries the most clockwise continuation
//! first. Iterating a full round of arms gives a monotone map on crossings of
//! the first colour; it becomes periodic, and the event holds iff the
//! periodic orbit advances by at most one turn per round.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, param, Error, Result};
use crate::flow::FlowGraph;
use crate::lattice::{Coord, SiteConfig};

/// Arm colours: 1 is an open primal arm, 0 a closed matching arm.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColorSequence(Vec<u8>);

impl ColorSequence {
    pub fn new(colors: Vec<u8>) -> Result<ColorSequence> {
        if colors.is_empty() {
            return param("colour sequence must be non-empty");
        }
        if colors.iter().any(|&c| c > 1) {
            return param("colours are 0 (closed) or 1 (open)");
        }
        Ok(ColorSequence(colors))
    }

    pub fn colors(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn reversed(&self) -> ColorSequence {
        ColorSequence(self.0.iter().rev().copied().collect())
    }
}

impl FromStr for ColorSequence {
    type Err = Error;

    /// Accepts digit strings such as `"010010"`, with optional commas.
    fn from_str(s: &str) -> Result<ColorSequence> {
        let colors: Option<Vec<u8>> = s
            .chars()
            .filter(|c| !matches!(c, ',' | ' ' | '(' | ')'))
            .map(|c| c.to_digit(2).map(|d| d as u8))
            .collect();
        match colors {
            Some(c) => ColorSequence::new(c),
            None => match canonical(s) {
                Some(c) => Ok(c),
                None => param(format!("cannot parse colour sequence {s:?}")),
            },
        }
    }
}

impl fmt::Display for ColorSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.0 {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// The named sequences used throughout. `Arm5` is the five-arm sequence
/// `(1,0,0,1,0)`.
pub fn canonical_sequences() -> Vec<(&'static str, ColorSequence)> {
    [
        ("Arm1", vec![1]),
        ("Arm3hp", vec![1, 0, 1]),
        ("Arm4hp", vec![1, 0, 0, 1]),
        ("Arm5", vec![1, 0, 0, 1, 0]),
        ("Arm6", vec![0, 1, 0, 0, 1, 0]),
    ]
    .into_iter()
    .map(|(name, c)| (name, ColorSequence(c)))
    .collect()
}

pub fn canonical(name: &str) -> Option<ColorSequence> {
    canonical_sequences().into_iter().find(|(n, _)| *n == name).map(|(_, c)| c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArmVariant {
    FullPlane,
    /// Arms in `{y ≥ u.y}`; the first arm is the right-most.
    HalfPlaneAbove,
    /// Mirror image of `HalfPlaneAbove` in the line `y = u.y`.
    HalfPlaneBelow,
}

impl FromStr for ArmVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<ArmVariant> {
        match s {
            "full" | "full-plane" => Ok(ArmVariant::FullPlane),
            "above" | "half-plane-above" | "hp" => Ok(ArmVariant::HalfPlaneAbove),
            "below" | "half-plane-below" => Ok(ArmVariant::HalfPlaneBelow),
            _ => param(format!("unknown arm variant {s:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmQuery {
    pub center: Coord,
    pub inner: u32,
    pub outer: u32,
    pub sequence: ColorSequence,
    pub variant: ArmVariant,
    pub allow_defect: bool,
}

impl ArmQuery {
    pub fn new(
        center: Coord,
        inner: u32,
        outer: u32,
        sequence: ColorSequence,
        variant: ArmVariant,
    ) -> ArmQuery {
        ArmQuery { center, inner, outer, sequence, variant, allow_defect: false }
    }

    pub fn with_defect(mut self, allow: bool) -> ArmQuery {
        self.allow_defect = allow;
        self
    }

    /// Raises the inner radius to the sequence length when it is smaller.
    pub fn normalized(&self) -> ArmQuery {
        let mut q = self.clone();
        q.inner = q.inner.max(q.sequence.len() as u32);
        q
    }

    /// `n ≥ N`: the event is the full space.
    pub fn is_trivial(&self) -> bool {
        self.inner >= self.outer
    }
}

const NONE: u32 = u32::MAX;
const CLOSED: u8 = 0;
const OPEN: u8 = 1;
const WILD: u8 = 2;

/// Ring of a local offset.
fn ring(x: i32, y: i32) -> u32 {
    x.unsigned_abs().max(y.unsigned_abs())
}

/// Position of a site on its ring `d ≥ 1`, counter-clockwise, starting at
/// `(d, 1)` and ending at `(d, 0)`.
fn ring_pos(x: i32, y: i32, d: i32) -> i64 {
    let d64 = d as i64;
    let (x, y) = (x as i64, y as i64);
    if x == d64 && y >= 1 {
        y - 1
    } else if y == d64 {
        d64 - 1 + (d64 - x)
    } else if x == -d64 {
        3 * d64 - 1 + (d64 - y)
    } else if y == -d64 {
        5 * d64 - 1 + (x + d64)
    } else {
        7 * d64 - 1 + (y + d64)
    }
}

/// Direction index of each step, counter-clockwise from east.
const DIRS: [(i32, i32); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

/// The (half-)annulus `B_N(u) \ B_n(u)` in local coordinates.
#[derive(Clone, Debug)]
pub(crate) struct Annulus {
    cyclic: bool,
    period: i64,
    pub coords: Vec<(i32, i32)>,
    pub kind: Vec<u8>,
    nbr: Vec<[u32; 8]>,
    seam: Vec<[i8; 8]>,
    /// Inner endpoints: `∂B_n(u)`, the ring `n+1` without its corners.
    pub inner: Vec<bool>,
    /// Sites of ring `n+1`, corners included.
    inner_ring: Vec<bool>,
    /// Outer endpoints: `∂ᵢB_N(u)`, the ring `N`.
    pub outer: Vec<bool>,
    /// Angular key on ring `n+1`.
    pos: Vec<i64>,
    back: Vec<u8>,
    /// Inner endpoints in angular order.
    pub starts: Vec<u32>,
    /// Dense site ids over `[-N, N] × [y_lo, N]`.
    index: Vec<u32>,
    big: i32,
    y_lo: i32,
    center: Coord,
    variant: ArmVariant,
}

impl Annulus {
    pub fn new(config: &SiteConfig, q: &ArmQuery) -> Result<Annulus> {
        let mut a = Annulus::shape(q)?;
        a.load(config)?;
        Ok(a)
    }

    /// Absolute position of a local offset.
    fn map(&self, x: i32, y: i32) -> Coord {
        let u = self.center;
        match self.variant {
            ArmVariant::HalfPlaneBelow => Coord::new(u.x + x, u.y - y),
            _ => Coord::new(u.x + x, u.y + y),
        }
    }

    /// Reads the site kinds of a configuration.
    pub fn load(&mut self, config: &SiteConfig) -> Result<()> {
        let (big, y_lo) = (self.big, self.y_lo);
        let dom = config.domain();
        for (x, y) in [(-big, y_lo), (big, y_lo), (-big, big), (big, big)] {
            if !dom.contains(self.map(x, y)) {
                return domain("annulus leaves the configuration domain");
            }
        }
        for s in 0..self.coords.len() {
            let (x, y) = self.coords[s];
            self.kind[s] = if config.get(self.map(x, y)) { OPEN } else { CLOSED };
        }
        Ok(())
    }

    /// Geometry of the query's annulus with every site closed.
    pub fn shape(q: &ArmQuery) -> Result<Annulus> {
        let (n, big) = (q.inner as i32, q.outer as i32);
        if n >= big {
            return param("empty annulus");
        }
        let y_lo = if q.variant == ArmVariant::FullPlane { -big } else { 0 };
        let cyclic = q.variant == ArmVariant::FullPlane;
        let d = n + 1;
        let period = 8 * d as i64;
        let mut a = Annulus {
            cyclic,
            period,
            coords: Vec::new(),
            kind: Vec::new(),
            nbr: Vec::new(),
            seam: Vec::new(),
            inner: Vec::new(),
            inner_ring: Vec::new(),
            outer: Vec::new(),
            pos: Vec::new(),
            back: Vec::new(),
            starts: Vec::new(),
            index: vec![NONE; ((2 * big + 1) * (big - y_lo + 1)) as usize],
            big,
            y_lo,
            center: q.center,
            variant: q.variant,
        };
        for y in y_lo..=big {
            for x in -big..=big {
                let r = ring(x, y) as i32;
                if r <= n {
                    continue;
                }
                let k = a.slot(x, y).unwrap();
                a.index[k] = a.coords.len() as u32;
                a.coords.push((x, y));
                a.kind.push(CLOSED);
                let on_inner = r == d;
                let corner = x.abs() == d && y.abs() == d;
                a.inner_ring.push(on_inner);
                a.inner.push(on_inner && !corner);
                a.outer.push(r == big);
                let p = if !on_inner {
                    0
                } else if cyclic {
                    ring_pos(x, y, d)
                } else {
                    (ring_pos(x, y, d) + 1) % period
                };
                a.pos.push(p);
                a.back.push(if !on_inner || corner {
                    0
                } else if x == d {
                    4
                } else if y == d {
                    6
                } else if x == -d {
                    0
                } else {
                    2
                });
            }
        }
        for &(x, y) in &a.coords {
            let mut nb = [NONE; 8];
            let mut sm = [0i8; 8];
            for (k, &(dx, dy)) in DIRS.iter().enumerate() {
                if let Some(j) = a.site(x + dx, y + dy) {
                    nb[k] = j;
                    if cyclic && 2 * x + dx > 0 {
                        if y == 0 && dy == 1 {
                            sm[k] = 1;
                        } else if y == 1 && dy == -1 {
                            sm[k] = -1;
                        }
                    }
                }
            }
            a.nbr.push(nb);
            a.seam.push(sm);
        }
        let mut starts: Vec<u32> = (0..a.coords.len() as u32).filter(|&s| a.inner[s as usize]).collect();
        starts.sort_by_key(|&s| a.pos[s as usize]);
        a.starts = starts;
        Ok(a)
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn site(&self, x: i32, y: i32) -> Option<u32> {
        self.slot(x, y).map(|k| self.index[k]).filter(|&s| s != NONE)
    }

    fn slot(&self, x: i32, y: i32) -> Option<usize> {
        let (b, lo) = (self.big, self.y_lo);
        if x < -b || x > b || y < lo || y > b {
            return None;
        }
        Some(((y - lo) * (2 * b + 1) + (x + b)) as usize)
    }

    /// Neighbour ids of a site in the colour's graph.
    pub fn neighbours(&self, s: u32, color: u8) -> impl Iterator<Item = u32> + '_ {
        let step = if color == OPEN { 2 } else { 1 };
        (0..8).step_by(step).map(move |k| self.nbr[s as usize][k]).filter(|&t| t != NONE)
    }
}

#[inline]
fn avail(kind: u8, color: u8) -> bool {
    kind == color || kind == WILD
}

type Path = Vec<(u32, i32)>;

struct Frame {
    s: u32,
    w: i32,
    back: u8,
    k: u8,
}

/// Greedy arm search over one assignment of site kinds.
struct Solver<'a> {
    a: &'a Annulus,
    kind: Vec<u8>,
    reach: [Vec<bool>; 2],
    span: [Option<i32>; 2],
    stamp: Vec<u32>,
    wall_gen: Vec<u32>,
    wall_pos: Vec<u32>,
    gen: u32,
}

impl<'a> Solver<'a> {
    fn new(a: &'a Annulus, kind: Vec<u8>) -> Solver<'a> {
        let mut s = Solver {
            a,
            kind,
            reach: [Vec::new(), Vec::new()],
            span: [None, None],
            stamp: Vec::new(),
            wall_gen: Vec::new(),
            wall_pos: Vec::new(),
            gen: 0,
        };
        for c in [CLOSED, OPEN] {
            s.reach[c as usize] = s.reach_outer(c);
            s.span[c as usize] = s.crossing_span(c);
        }
        s
    }

    /// Sites from which the outer ring is reachable in the projection.
    fn reach_outer(&self, color: u8) -> Vec<bool> {
        let a = self.a;
        let mut seen = vec![false; a.len()];
        let mut q: VecDeque<u32> = VecDeque::new();
        for s in 0..a.len() {
            if a.outer[s] && avail(self.kind[s], color) {
                seen[s] = true;
                q.push_back(s as u32);
            }
        }
        while let Some(s) = q.pop_front() {
            for t in a.neighbours(s, color) {
                if !seen[t as usize] && avail(self.kind[t as usize], color) {
                    seen[t as usize] = true;
                    q.push_back(t);
                }
            }
        }
        seen
    }

    /// Winding span of some crossing of the colour, if one exists.
    fn crossing_span(&self, color: u8) -> Option<i32> {
        let a = self.a;
        let reach = &self.reach[color as usize];
        let mut parent = vec![NONE; a.len()];
        let mut q: VecDeque<u32> = VecDeque::new();
        for &s in &a.starts {
            if reach[s as usize] && avail(self.kind[s as usize], color) {
                parent[s as usize] = s;
                q.push_back(s);
            }
        }
        let mut end = NONE;
        'bfs: while let Some(s) = q.pop_front() {
            if a.outer[s as usize] {
                end = s;
                break;
            }
            for t in a.neighbours(s, color) {
                if parent[t as usize] == NONE && reach[t as usize] {
                    parent[t as usize] = s;
                    if a.outer[t as usize] {
                        end = t;
                        break 'bfs;
                    }
                    q.push_back(t);
                }
            }
        }
        if end == NONE {
            return None;
        }
        let mut path = vec![end];
        while parent[*path.last().unwrap() as usize] != *path.last().unwrap() {
            path.push(parent[*path.last().unwrap() as usize]);
        }
        path.reverse();
        let (mut w, mut lo, mut hi) = (0i32, 0i32, 0i32);
        for pair in path.windows(2) {
            let k = (0..8).find(|&k| a.nbr[pair[0] as usize][k] == pair[1]).unwrap();
            w += a.seam[pair[0] as usize][k] as i32;
            lo = lo.min(w);
            hi = hi.max(w);
        }
        Some(hi - lo)
    }

    fn key(&self, s: u32, w: i32) -> i64 {
        w as i64 * self.a.period + self.a.pos[s as usize]
    }

    /// The extremal crossing of `color` counter-clockwise of `wall`
    /// (or of the reference seam when there is no wall).
    fn search(&mut self, color: u8, wall: Option<&Path>) -> Option<Path> {
        let span = self.span[color as usize]?;
        let a = self.a;
        let n_sites = a.len();
        let (wlo, whi, threshold) = match wall {
            Some(p) => {
                let lo = p.iter().map(|x| x.1).min().unwrap();
                let hi = p.iter().map(|x| x.1).max().unwrap();
                let th = p
                    .iter()
                    .filter(|&&(s, _)| a.inner_ring[s as usize])
                    .map(|&(s, w)| self.key(s, w))
                    .max()
                    .unwrap_or(i64::MIN);
                let cap = if a.cyclic { hi + 2 + span } else { hi };
                (lo, cap, th)
            }
            None => (0, if a.cyclic { 2 + span } else { 0 }, -1),
        };
        let sheets = (whi - wlo + 1) as usize;
        let need = sheets * n_sites;
        if self.stamp.len() < need {
            self.stamp.resize(need, 0);
            self.wall_gen.resize(need, 0);
            self.wall_pos.resize(need, 0);
        }
        self.gen = self.gen.wrapping_add(1);
        if self.gen == 0 {
            self.stamp.iter_mut().for_each(|v| *v = 0);
            self.wall_gen.iter_mut().for_each(|v| *v = 0);
            self.gen = 1;
        }
        let gen = self.gen;
        let idx = |s: u32, w: i32| (w - wlo) as usize * n_sites + s as usize;
        if let Some(p) = wall {
            for (k, &(s, w)) in p.iter().enumerate() {
                let i = idx(s, w);
                self.wall_gen[i] = gen;
                self.wall_pos[i] = k as u32 + 1;
            }
        }
        let reach = &self.reach[color as usize];
        for w in wlo..=whi {
            for &st in &a.starts {
                if self.key(st, w) <= threshold {
                    continue;
                }
                let si = idx(st, w);
                if self.stamp[si] == gen
                    || self.wall_gen[si] == gen
                    || !avail(self.kind[st as usize], color)
                    || !reach[st as usize]
                {
                    continue;
                }
                self.stamp[si] = gen;
                if a.outer[st as usize] {
                    return Some(vec![(st, w)]);
                }
                let mut stack = vec![Frame { s: st, w, back: a.back[st as usize], k: 0 }];
                while let Some(top) = stack.last_mut() {
                    if top.k >= 7 {
                        stack.pop();
                        continue;
                    }
                    top.k += 1;
                    let d = ((top.back + top.k) % 8) as usize;
                    let (s, sw) = (top.s, top.w);
                    if color == OPEN && d % 2 == 1 {
                        continue;
                    }
                    let t = a.nbr[s as usize][d];
                    if t == NONE {
                        continue;
                    }
                    let tw = sw + a.seam[s as usize][d] as i32;
                    if tw < wlo || tw > whi {
                        continue;
                    }
                    let ti = idx(t, tw);
                    if self.stamp[ti] == gen
                        || self.wall_gen[ti] == gen
                        || !avail(self.kind[t as usize], color)
                        || !reach[t as usize]
                    {
                        continue;
                    }
                    if d % 2 == 1 {
                        // Do not cross a diagonal step of the wall.
                        let (d1, d2) = (d - 1, (d + 1) % 8);
                        let (c1, c2) = (a.nbr[s as usize][d1], a.nbr[s as usize][d2]);
                        if c1 != NONE && c2 != NONE {
                            let w1 = sw + a.seam[s as usize][d1] as i32;
                            let w2 = sw + a.seam[s as usize][d2] as i32;
                            if (wlo..=whi).contains(&w1) && (wlo..=whi).contains(&w2) {
                                let (i1, i2) = (idx(c1, w1), idx(c2, w2));
                                if self.wall_gen[i1] == gen
                                    && self.wall_gen[i2] == gen
                                    && self.wall_pos[i1].abs_diff(self.wall_pos[i2]) == 1
                                {
                                    continue;
                                }
                            }
                        }
                    }
                    self.stamp[ti] = gen;
                    if a.outer[t as usize] {
                        let mut path: Path = stack.iter().map(|f| (f.s, f.w)).collect();
                        path.push((t, tw));
                        return Some(path);
                    }
                    stack.push(Frame { s: t, w: tw, back: ((d + 4) % 8) as u8, k: 0 });
                }
            }
        }
        None
    }

    fn event(&mut self, seq: &[u8]) -> bool {
        if seq.iter().any(|&c| self.span[c as usize].is_none()) {
            return false;
        }
        if !self.a.cyclic {
            let mut cur: Option<Path> = None;
            for &c in seq {
                match self.search(c, cur.as_ref()) {
                    Some(p) => cur = Some(p),
                    None => return false,
                }
            }
            return true;
        }
        if seq.len() == 1 {
            return true;
        }
        let Some(mut x) = self.search(seq[0], None) else {
            return false;
        };
        let mut seen: HashMap<Path, (usize, i32)> = HashMap::new();
        for round in 0.. {
            let w0 = x[0].1;
            let shape: Path = x.iter().map(|&(s, w)| (s, w - w0)).collect();
            if let Some(&(j, wj)) = seen.get(&shape) {
                return w0 - wj <= (round - j) as i32;
            }
            seen.insert(shape, (round, w0));
            let mut cur = x;
            for &c in &seq[1..] {
                match self.search(c, Some(&cur)) {
                    Some(p) => cur = p,
                    None => return false,
                }
            }
            match self.search(seq[0], Some(&cur)) {
                Some(p) => x = p,
                None => return false,
            }
        }
        unreachable!()
    }
}

/// Arm event for an explicit assignment of site kinds, including wildcards.
pub(crate) fn event_with_kinds(a: &Annulus, kind: Vec<u8>, seq: &[u8]) -> bool {
    Solver::new(a, kind).event(seq)
}

/// A query with its annulus geometry (and defect sets) built once, for
/// evaluating many configurations.
#[derive(Clone, Debug)]
pub struct ArmDetector {
    query: ArmQuery,
    annulus: Option<Annulus>,
    defects: Vec<Vec<u32>>,
}

impl ArmDetector {
    pub fn new(q: &ArmQuery) -> Result<ArmDetector> {
        if q.is_trivial() {
            return Ok(ArmDetector { query: q.clone(), annulus: None, defects: Vec::new() });
        }
        let a = Annulus::shape(q)?;
        let defects = if q.allow_defect { defect_sets(&a, q.outer as i32) } else { Vec::new() };
        Ok(ArmDetector { query: q.clone(), annulus: Some(a), defects })
    }

    pub fn query(&self) -> &ArmQuery {
        &self.query
    }

    /// The plain event, or the defected one when the query allows it.
    pub fn event(&mut self, config: &SiteConfig) -> Result<bool> {
        let Some(a) = self.annulus.as_mut() else {
            return Ok(true);
        };
        a.load(config)?;
        let a = &*a;
        let seq = self.query.sequence.colors();
        if event_with_kinds(a, a.kind.clone(), seq) {
            return Ok(true);
        }
        for wild in &self.defects {
            let mut kind = a.kind.clone();
            for &s in wild {
                kind[s as usize] = WILD;
            }
            if event_with_kinds(a, kind, seq) {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Whether the plain arm event holds for the query's literal radii.
pub fn has_arm_event(config: &SiteConfig, q: &ArmQuery) -> Result<bool> {
    ArmDetector::new(&q.clone().with_defect(false))?.event(config)
}

/// Whether changing the configuration inside a single ball `B_3(v)` can
/// realise the arm event. Sites of the ball become wildcards that either
/// colour may use once.
pub fn has_defected_arm_event(config: &SiteConfig, q: &ArmQuery) -> Result<bool> {
    ArmDetector::new(&q.clone().with_defect(true))?.event(config)
}

/// Dispatches on `allow_defect`.
pub fn arm_event(config: &SiteConfig, q: &ArmQuery) -> Result<bool> {
    ArmDetector::new(q)?.event(config)
}

/// The event for each outer radius of an increasing list, stopping at the
/// first failure (the events are nested).
pub fn arm_events_nested(config: &SiteConfig, q: &ArmQuery, outers: &[u32]) -> Result<Vec<bool>> {
    let mut out = vec![false; outers.len()];
    for (k, &big) in outers.iter().enumerate() {
        if k > 0 && outers[k - 1] > big {
            return param("outer radii must increase");
        }
        let mut qq = q.clone();
        qq.outer = big;
        if !arm_event(config, &qq)? {
            break;
        }
        out[k] = true;
    }
    Ok(out)
}

/// Distinct wildcard sets `B_3(v) ∩ annulus`, skipping sets contained in a
/// neighbouring centre's set.
pub(crate) fn defect_sets(a: &Annulus, big: i32) -> Vec<Vec<u32>> {
    let lo_y = if a.cyclic { -big - 3 } else { -3 };
    let set_at = |vx: i32, vy: i32| -> Vec<u32> {
        let mut v = Vec::new();
        for y in vy - 3..=vy + 3 {
            for x in vx - 3..=vx + 3 {
                if let Some(s) = a.site(x, y) {
                    v.push(s);
                }
            }
        }
        v.sort_unstable();
        v
    };
    let subset = |x: &[u32], y: &[u32]| x.iter().all(|s| y.binary_search(s).is_ok());
    let mut out = Vec::new();
    for vy in lo_y..=big + 3 {
        for vx in -big - 3..=big + 3 {
            let w = set_at(vx, vy);
            if w.is_empty() {
                continue;
            }
            let dominated = DIRS.iter().any(|&(dx, dy)| {
                let o = set_at(vx + dx, vy + dy);
                if o.len() > w.len() {
                    subset(&w, &o)
                } else {
                    o == w && (vx + dx, vy + dy) < (vx, vy)
                }
            });
            if !dominated {
                out.push(w);
            }
        }
    }
    out
}

/// Maximum number of vertex-disjoint crossings of the (half-)annulus
/// `B_N(u) \ B_n(u)` by paths of the given colour.
pub fn max_disjoint_crossings(
    config: &SiteConfig,
    center: Coord,
    inner: u32,
    outer: u32,
    color: u8,
    variant: ArmVariant,
) -> Result<usize> {
    if color > 1 {
        return param("colour must be 0 or 1");
    }
    if inner >= outer {
        return param("empty annulus");
    }
    let seq = ColorSequence(vec![color]);
    let a = Annulus::new(config, &ArmQuery::new(center, inner, outer, seq, variant))?;
    let m = a.len();
    let (src, sink) = (2 * m, 2 * m + 1);
    let mut g = FlowGraph::new(2 * m + 2);
    for s in 0..m {
        if !avail(a.kind[s], color) {
            continue;
        }
        g.add_edge(2 * s, 2 * s + 1, 1);
        if a.inner[s] {
            g.add_edge(src, 2 * s, 1);
        }
        if a.outer[s] {
            g.add_edge(2 * s + 1, sink, 1);
        }
        for t in a.neighbours(s as u32, color) {
            if avail(a.kind[t as usize], color) {
                g.add_edge(2 * s + 1, 2 * t as usize, 1);
            }
        }
    }
    Ok(g.max_flow(src, sink) as usize)
}
