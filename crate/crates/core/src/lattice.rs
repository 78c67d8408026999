//! Lattice geometry, site configurations and seeded randomness.

use std::collections::BTreeSet;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_prob, domain, param, Error, Result};

/// A site of Z². The derived order is lexicographic: x first, then y.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coord {
    pub x: i32,
    pub y: i32,
}

impl Coord {
    pub const ORIGIN: Coord = Coord { x: 0, y: 0 };

    pub const fn new(x: i32, y: i32) -> Coord {
        Coord { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Coord {
        Coord::new(self.x + dx, self.y + dy)
    }
}

impl From<(i32, i32)> for Coord {
    fn from((x, y): (i32, i32)) -> Coord {
        Coord::new(x, y)
    }
}

pub fn linf_dist(a: Coord, b: Coord) -> u32 {
    let dx = (a.x as i64 - b.x as i64).unsigned_abs();
    let dy = (a.y as i64 - b.y as i64).unsigned_abs();
    dx.max(dy) as u32
}

/// Inclusive integer rectangle `[x_min, x_max] × [y_min, y_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    x_min: i32,
    x_max: i32,
    y_min: i32,
    y_max: i32,
}

impl Rect {
    pub fn new(x_min: i32, x_max: i32, y_min: i32, y_max: i32) -> Result<Rect> {
        if x_min > x_max || y_min > y_max {
            return param(format!(
                "empty rectangle [{x_min},{x_max}]x[{y_min},{y_max}]"
            ));
        }
        Ok(Rect { x_min, x_max, y_min, y_max })
    }

    /// `Box(m, n) = [0, m] × [0, n]`.
    pub fn box_mn(m: u32, n: u32) -> Rect {
        Rect { x_min: 0, x_max: m as i32, y_min: 0, y_max: n as i32 }
    }

    /// `S_n = [-3n, 3n] × [0, n]`.
    pub fn strip_s(n: u32) -> Rect {
        let n = n as i32;
        Rect { x_min: -3 * n, x_max: 3 * n, y_min: 0, y_max: n }
    }

    /// `R_n = [-2n, 2n] × [0, n]`.
    pub fn strip_r(n: u32) -> Rect {
        let n = n as i32;
        Rect { x_min: -2 * n, x_max: 2 * n, y_min: 0, y_max: n }
    }

    pub fn x_min(&self) -> i32 {
        self.x_min
    }
    pub fn x_max(&self) -> i32 {
        self.x_max
    }
    pub fn y_min(&self) -> i32 {
        self.y_min
    }
    pub fn y_max(&self) -> i32 {
        self.y_max
    }

    pub fn width(&self) -> usize {
        (self.x_max as i64 - self.x_min as i64 + 1) as usize
    }

    pub fn height(&self) -> usize {
        (self.y_max as i64 - self.y_min as i64 + 1) as usize
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn contains(&self, c: Coord) -> bool {
        c.x >= self.x_min && c.x <= self.x_max && c.y >= self.y_min && c.y <= self.y_max
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x_min >= self.x_min
            && other.x_max <= self.x_max
            && other.y_min >= self.y_min
            && other.y_max <= self.y_max
    }

    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        Rect::new(
            self.x_min.max(other.x_min),
            self.x_max.min(other.x_max),
            self.y_min.max(other.y_min),
            self.y_max.min(other.y_max),
        )
        .ok()
    }

    /// Grows the rectangle by `k` sites on every side.
    pub fn expand(&self, k: i32) -> Rect {
        Rect {
            x_min: self.x_min - k,
            x_max: self.x_max + k,
            y_min: self.y_min - k,
            y_max: self.y_max + k,
        }
    }

    /// Row-major index relative to `(x_min, y_min)`.
    pub fn index(&self, c: Coord) -> Option<usize> {
        if self.contains(c) {
            Some(self.index_unchecked(c))
        } else {
            None
        }
    }

    #[inline]
    pub(crate) fn index_unchecked(&self, c: Coord) -> usize {
        (c.y - self.y_min) as usize * self.width() + (c.x - self.x_min) as usize
    }

    #[inline]
    pub fn coord(&self, i: usize) -> Coord {
        let w = self.width();
        Coord::new(self.x_min + (i % w) as i32, self.y_min + (i / w) as i32)
    }

    pub fn iter(&self) -> impl Iterator<Item = Coord> + '_ {
        (self.y_min..=self.y_max)
            .flat_map(move |y| (self.x_min..=self.x_max).map(move |x| Coord::new(x, y)))
    }

    /// Sites of the rectangle with a primal neighbour outside it.
    pub fn border(&self) -> Vec<Coord> {
        self.iter()
            .filter(|c| {
                c.x == self.x_min || c.x == self.x_max || c.y == self.y_min || c.y == self.y_max
            })
            .collect()
    }
}

/// `B_r(center)`: the sites within L∞ distance `r`.
pub fn ball(center: Coord, radius: u32) -> Rect {
    let r = radius as i32;
    Rect {
        x_min: center.x - r,
        x_max: center.x + r,
        y_min: center.y - r,
        y_max: center.y + r,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Adjacency {
    Primal,
    Matching,
}

pub const PRIMAL_STEPS: [(i32, i32); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
pub const MATCHING_STEPS: [(i32, i32); 8] =
    [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

impl Adjacency {
    pub fn steps(self) -> &'static [(i32, i32)] {
        match self {
            Adjacency::Primal => &PRIMAL_STEPS,
            Adjacency::Matching => &MATCHING_STEPS,
        }
    }

    pub fn adjacent(self, a: Coord, b: Coord) -> bool {
        let dx = (a.x - b.x).abs();
        let dy = (a.y - b.y).abs();
        match self {
            Adjacency::Primal => dx + dy == 1,
            Adjacency::Matching => dx.max(dy) == 1,
        }
    }
}

pub fn neighbors(c: Coord, adjacency: Adjacency) -> Vec<Coord> {
    adjacency.steps().iter().map(|&(dx, dy)| c.offset(dx, dy)).collect()
}

/// `∂A`: sites outside `A` with a primal neighbour in `A`.
pub fn outer_boundary(a: &BTreeSet<Coord>) -> BTreeSet<Coord> {
    a.iter()
        .flat_map(|&c| neighbors(c, Adjacency::Primal))
        .filter(|c| !a.contains(c))
        .collect()
}

/// `∂ᵢA = ∂(Aᶜ)`: sites of `A` with a primal neighbour outside `A`.
pub fn internal_boundary(a: &BTreeSet<Coord>) -> BTreeSet<Coord> {
    a.iter()
        .copied()
        .filter(|&c| neighbors(c, Adjacency::Primal).iter().any(|n| !a.contains(n)))
        .collect()
}

/// Open/closed assignment over a rectangle, one bit per site (1 = open).
/// Sites outside the domain read as `outside`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SiteConfig {
    domain: Rect,
    bits: Vec<u64>,
    outside: bool,
}

impl SiteConfig {
    pub fn filled(domain: Rect, value: bool) -> SiteConfig {
        let area = domain.area();
        let mut bits = vec![if value { u64::MAX } else { 0 }; area.div_ceil(64)];
        if value && !area.is_multiple_of(64) {
            *bits.last_mut().unwrap() = (1u64 << (area % 64)) - 1;
        }
        SiteConfig { domain, bits, outside: false }
    }

    pub fn from_fn(domain: Rect, mut f: impl FnMut(Coord) -> bool) -> SiteConfig {
        let mut cfg = SiteConfig::filled(domain, false);
        for (i, c) in domain.iter().enumerate() {
            if f(c) {
                cfg.set_index(i, true);
            }
        }
        cfg
    }

    pub fn from_bools(domain: Rect, values: &[bool]) -> Result<SiteConfig> {
        if values.len() != domain.area() {
            return param(format!(
                "{} values for a domain of {} sites",
                values.len(),
                domain.area()
            ));
        }
        Ok(SiteConfig::from_fn(domain, |c| values[domain.index_unchecked(c)]))
    }

    /// Same sites, different value outside the domain.
    pub fn with_outside(mut self, outside: bool) -> SiteConfig {
        self.outside = outside;
        self
    }

    pub fn domain(&self) -> Rect {
        self.domain
    }

    pub fn outside(&self) -> bool {
        self.outside
    }

    #[inline]
    pub fn get(&self, c: Coord) -> bool {
        match self.domain.index(c) {
            Some(i) => self.get_index(i),
            None => self.outside,
        }
    }

    #[inline]
    pub fn get_index(&self, i: usize) -> bool {
        (self.bits[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub(crate) fn set_index(&mut self, i: usize, v: bool) {
        if v {
            self.bits[i >> 6] |= 1 << (i & 63);
        } else {
            self.bits[i >> 6] &= !(1 << (i & 63));
        }
    }

    pub(crate) fn set(&mut self, c: Coord, v: bool) {
        let i = self.domain.index(c).expect("site outside domain");
        self.set_index(i, v);
    }

    pub fn count_open(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn open_sites(&self) -> impl Iterator<Item = Coord> + '_ {
        (0..self.domain.area())
            .filter(|&i| self.get_index(i))
            .map(|i| self.domain.coord(i))
    }

    /// Copy of the sites in `rect`, which must lie inside the domain.
    pub fn restrict(&self, rect: Rect) -> Result<SiteConfig> {
        if !self.domain.contains_rect(&rect) {
            return domain("restriction rectangle leaves the domain");
        }
        Ok(SiteConfig::from_fn(rect, |c| self.get(c)).with_outside(self.outside))
    }

    /// A copy with the listed sites forced to `value`; sites outside the domain are ignored.
    pub fn with_sites(&self, sites: impl IntoIterator<Item = Coord>, value: bool) -> SiteConfig {
        let mut out = self.clone();
        for c in sites {
            if let Some(i) = self.domain.index(c) {
                out.set_index(i, value);
            }
        }
        out
    }

    /// Values of the whole domain in row-major order.
    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.domain.area()).map(|i| self.get_index(i)).collect()
    }

    /// Raw bitmap format: `b"SDPC"`, version, outside value, two zero bytes,
    /// the four bounds as little-endian i32, then the sites row-major from
    /// `(x_min, y_min)` packed LSB-first into bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let area = self.domain.area();
        let mut out = Vec::with_capacity(24 + area.div_ceil(8));
        out.extend_from_slice(b"SDPC");
        out.push(1);
        out.push(self.outside as u8);
        out.extend_from_slice(&[0, 0]);
        for v in [self.domain.x_min, self.domain.x_max, self.domain.y_min, self.domain.y_max] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for byte in 0..area.div_ceil(8) {
            let word = self.bits[byte / 8];
            out.push((word >> ((byte % 8) * 8)) as u8);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<SiteConfig> {
        let bad = |m: &str| Err(Error::Format(m.to_string()));
        if bytes.len() < 24 || &bytes[..4] != b"SDPC" {
            return bad("missing SDPC header");
        }
        if bytes[4] != 1 {
            return bad("unsupported version");
        }
        let rd = |k: usize| i32::from_le_bytes(bytes[8 + 4 * k..12 + 4 * k].try_into().unwrap());
        let domain = Rect::new(rd(0), rd(1), rd(2), rd(3))
            .map_err(|_| Error::Format("empty domain".into()))?;
        let area = domain.area();
        let body = &bytes[24..];
        if body.len() != area.div_ceil(8) {
            return bad("bitmap length does not match domain");
        }
        let mut cfg = SiteConfig::filled(domain, false).with_outside(bytes[5] != 0);
        for i in 0..area {
            if (body[i / 8] >> (i % 8)) & 1 == 1 {
                cfg.set_index(i, true);
            }
        }
        Ok(cfg)
    }
}

/// Pointwise OR of `mask` onto `base`, over the base domain.
pub fn overlay(base: &SiteConfig, mask: &SiteConfig) -> Result<SiteConfig> {
    if base.domain.intersect(&mask.domain).is_none() && !mask.outside {
        return domain("overlay mask does not meet the base domain");
    }
    let mut out = base.clone();
    if base.domain == mask.domain {
        for (w, m) in out.bits.iter_mut().zip(&mask.bits) {
            *w |= m;
        }
    } else {
        for (i, c) in base.domain.iter().enumerate() {
            if mask.get(c) {
                out.set_index(i, true);
            }
        }
    }
    out.outside = base.outside || mask.outside;
    Ok(out)
}

const PLANE_OFFSET: i64 = 1 << 15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded source of site variables. Every `(seed, stream_id)` pair keys an
/// independent ChaCha8 stream in which each site of the plane owns a fixed
/// word position, so any rectangle reads the same uniforms no matter which
/// enclosing domain is sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomSource {
    pub seed: u64,
    pub stream_id: u64,
}

impl RandomSource {
    pub fn new(seed: u64, stream_id: u64) -> RandomSource {
        RandomSource { seed, stream_id }
    }

    pub fn with_stream(self, stream_id: u64) -> RandomSource {
        RandomSource { stream_id, ..self }
    }

    /// An independent source for a different field (e.g. the enhancement mask).
    pub fn derive(self, tag: u64) -> RandomSource {
        let mut s = self.seed ^ tag.wrapping_mul(0xD6E8_FEB8_6659_FD93);
        RandomSource { seed: splitmix64(&mut s), stream_id: self.stream_id }
    }

    /// Sequential generator for non-spatial randomness.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut s = self.seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut s).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream_id);
        rng
    }

    fn plane_pos(c: Coord) -> Result<u128> {
        let x = c.x as i64 + PLANE_OFFSET;
        let y = c.y as i64 + PLANE_OFFSET;
        if !(0..1 << 16).contains(&x) || !(0..1 << 16).contains(&y) {
            return domain(format!("site {c:?} outside the sampling plane"));
        }
        Ok((((y as u128) << 16) | x as u128) * 2)
    }

    /// Raw 64-bit site variables of one row segment starting at `start`.
    pub(crate) fn fill_row(rng: &mut ChaCha8Rng, start: Coord, out: &mut [u64]) -> Result<()> {
        let pos = Self::plane_pos(start)?;
        Self::plane_pos(start.offset(out.len() as i32 - 1, 0))?;
        rng.set_word_pos(pos);
        for v in out.iter_mut() {
            *v = rng.next_u64();
        }
        Ok(())
    }

    /// The uniform variable attached to one site.
    pub fn uniform_at(&self, c: Coord) -> Result<f64> {
        let mut rng = self.rng();
        let mut v = [0u64];
        Self::fill_row(&mut rng, c, &mut v)?;
        Ok(to_unit(v[0]))
    }
}

#[inline]
fn to_unit(v: u64) -> f64 {
    (v >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn threshold(p: f64) -> f64 {
    p * (1u64 << 53) as f64
}

/// Independent Bernoulli(p) sites; site `c` is open iff its uniform is `< p`,
/// which couples all values of `p` monotonically.
pub fn sample_config(domain: Rect, p: f64, rng: &RandomSource) -> Result<SiteConfig> {
    check_prob("p", p)?;
    let t = threshold(p);
    let mut cfg = SiteConfig::filled(domain, false);
    let w = domain.width();
    let mut row = vec![0u64; w];
    let mut gen = rng.rng();
    for (r, y) in (domain.y_min..=domain.y_max).enumerate() {
        RandomSource::fill_row(&mut gen, Coord::new(domain.x_min, y), &mut row)?;
        for (k, &v) in row.iter().enumerate() {
            if ((v >> 11) as f64) < t {
                cfg.set_index(r * w + k, true);
            }
        }
    }
    Ok(cfg)
}

/// Per-site uniforms of a domain, row-major.
pub fn sample_uniforms(domain: Rect, rng: &RandomSource) -> Result<Vec<f64>> {
    let w = domain.width();
    let mut out = Vec::with_capacity(domain.area());
    let mut row = vec![0u64; w];
    let mut gen = rng.rng();
    for y in domain.y_min..=domain.y_max {
        RandomSource::fill_row(&mut gen, Coord::new(domain.x_min, y), &mut row)?;
        out.extend(row.iter().map(|&v| to_unit(v)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linf_examples() {
        assert_eq!(linf_dist(Coord::ORIGIN, Coord::ORIGIN), 0);
        assert_eq!(linf_dist(Coord::ORIGIN, Coord::new(3, -5)), 5);
    }

    #[test]
    fn ball_examples() {
        let b = ball(Coord::ORIGIN, 0);
        assert_eq!(b.area(), 1);
        assert!(b.contains(Coord::ORIGIN));
        let b = ball(Coord::new(2, 3), 1);
        assert_eq!(b, Rect::new(1, 3, 2, 4).unwrap());
        assert_eq!(b.area(), 9);
        let c = Coord::new(1, -2);
        for x in -10..=10 {
            for y in -10..=10 {
                let q = Coord::new(x, y);
                assert_eq!(ball(c, 4).contains(q), linf_dist(c, q) <= 4);
            }
        }
    }

    #[test]
    fn neighbour_sets() {
        let p: BTreeSet<_> = neighbors(Coord::ORIGIN, Adjacency::Primal).into_iter().collect();
        let m: BTreeSet<_> = neighbors(Coord::ORIGIN, Adjacency::Matching).into_iter().collect();
        assert_eq!(p.len(), 4);
        assert_eq!(m.len(), 8);
        assert!(p.is_subset(&m));
        assert!(!m.contains(&Coord::ORIGIN));
        assert!(m.iter().all(|&c| linf_dist(c, Coord::ORIGIN) == 1));
    }

    #[test]
    fn boundaries_of_small_sets() {
        let single: BTreeSet<_> = [Coord::ORIGIN].into_iter().collect();
        assert_eq!(outer_boundary(&single).len(), 4);
        assert!(outer_boundary(&BTreeSet::new()).is_empty());
        assert_eq!(internal_boundary(&single), single);
    }

    #[test]
    fn degenerate_measures() {
        let d = Rect::new(-3, 4, 0, 5).unwrap();
        let rng = RandomSource::new(7, 0);
        assert_eq!(sample_config(d, 0.0, &rng).unwrap().count_open(), 0);
        assert_eq!(sample_config(d, 1.0, &rng).unwrap().count_open(), d.area());
        assert!(sample_config(d, 1.5, &rng).is_err());
    }

    #[test]
    fn sub_rectangles_read_the_same_sites() {
        let rng = RandomSource::new(11, 3);
        let big = sample_config(Rect::new(-20, 20, -20, 20).unwrap(), 0.5, &rng).unwrap();
        let small_rect = Rect::new(-3, 7, 2, 9).unwrap();
        let small = sample_config(small_rect, 0.5, &rng).unwrap();
        for c in small_rect.iter() {
            assert_eq!(big.get(c), small.get(c));
        }
        let other = sample_config(small_rect, 0.5, &rng.with_stream(4)).unwrap();
        assert_ne!(small, other);
    }

    #[test]
    fn bitmap_round_trip() {
        let d = Rect::new(-2, 8, -1, 3).unwrap();
        let cfg = sample_config(d, 0.4, &RandomSource::new(1, 1)).unwrap().with_outside(true);
        let bytes = cfg.to_bytes();
        assert_eq!(bytes.len(), 24 + d.area().div_ceil(8));
        assert_eq!(SiteConfig::from_bytes(&bytes).unwrap(), cfg);
        assert!(SiteConfig::from_bytes(&bytes[..30]).is_err());
    }

    #[test]
    fn bitmap_layout_is_fixed() {
        let d = Rect::new(0, 2, 0, 2).unwrap();
        let cfg = SiteConfig::from_fn(d, |c| c == Coord::new(0, 0) || c == Coord::new(2, 2));
        let bytes = cfg.to_bytes();
        assert_eq!(&bytes[..8], b"SDPC\x01\x00\x00\x00");
        assert_eq!(&bytes[8..12], &0i32.to_le_bytes());
        assert_eq!(&bytes[12..16], &2i32.to_le_bytes());
        assert_eq!(&bytes[24..], &[0b0000_0001, 0b0000_0001]);
    }

    #[test]
    fn overlay_identities() {
        let d = Rect::new(0, 9, 0, 9).unwrap();
        let x = sample_config(d, 0.5, &RandomSource::new(2, 0)).unwrap();
        let y = sample_config(d, 0.3, &RandomSource::new(3, 0)).unwrap();
        let zero = SiteConfig::filled(d, false);
        assert_eq!(overlay(&x, &zero).unwrap(), x);
        assert_eq!(overlay(&zero, &y).unwrap(), y);
        assert_eq!(overlay(&x, &y).unwrap(), overlay(&y, &x).unwrap());
        let xy = overlay(&x, &y).unwrap();
        assert_eq!(overlay(&x, &xy).unwrap(), xy);
        let far = SiteConfig::filled(Rect::new(50, 60, 50, 60).unwrap(), true);
        assert!(overlay(&x, &far).is_err());
    }
}
