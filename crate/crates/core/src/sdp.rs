//! Configuration transforms: burning, enhancement, crossing-killed and
//! circuit-killed configurations.

use std::collections::BTreeSet;
use std::io;
use std::path::Path;

use serde::Serialize;

use crate::cluster::{annulus_mask, radial_dual_crossing, UnionFind};
use crate::error::{check_prob, domain, param, Result};
use crate::grid::{value_mask, Grid};
use crate::lattice::{
    ball, linf_dist, overlay, sample_config, Adjacency, Coord, RandomSource, Rect, SiteConfig,
};

/// Stream tags separating the base field from the enhancement mask.
pub const OMEGA_TAG: u64 = 0x006f_6d65_6761;
pub const SIGMA_TAG: u64 = 0x0073_6967_6d61;

/// One draw of `(ω, σ)` with the burned and enhanced configurations.
#[derive(Clone, Debug)]
pub struct SdpSample {
    p: f64,
    delta: f64,
    horizon: Rect,
    source: RandomSource,
    omega: SiteConfig,
    sigma: SiteConfig,
    omega_bar: SiteConfig,
    omega_bar_delta: SiteConfig,
}

#[derive(Serialize)]
struct SdpSidecar<'a> {
    p: f64,
    delta: f64,
    horizon: Rect,
    seed: u64,
    stream: u64,
    files: [&'a str; 4],
}

impl SdpSample {
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn horizon(&self) -> Rect {
        self.horizon
    }
    pub fn source(&self) -> RandomSource {
        self.source
    }
    pub fn omega(&self) -> &SiteConfig {
        &self.omega
    }
    pub fn sigma(&self) -> &SiteConfig {
        &self.sigma
    }
    pub fn omega_bar(&self) -> &SiteConfig {
        &self.omega_bar
    }
    pub fn omega_bar_delta(&self) -> &SiteConfig {
        &self.omega_bar_delta
    }

    /// Writes `<stem>.{omega,sigma,omega_bar,omega_bar_delta}.bin` and a
    /// `<stem>.json` sidecar into `dir`.
    pub fn dump(&self, dir: &Path, stem: &str) -> io::Result<()> {
        let names = ["omega", "sigma", "omega_bar", "omega_bar_delta"];
        let cfgs = [&self.omega, &self.sigma, &self.omega_bar, &self.omega_bar_delta];
        let files: Vec<String> = names.iter().map(|n| format!("{stem}.{n}.bin")).collect();
        for (f, c) in files.iter().zip(cfgs) {
            std::fs::write(dir.join(f), c.to_bytes())?;
        }
        let side = SdpSidecar {
            p: self.p,
            delta: self.delta,
            horizon: self.horizon,
            seed: self.source.seed,
            stream: self.source.stream_id,
            files: [&files[0], &files[1], &files[2], &files[3]],
        };
        let json = serde_json::to_string_pretty(&side).map_err(io::Error::other)?;
        std::fs::write(dir.join(format!("{stem}.json")), json)
    }
}

/// Closes every open site whose primal cluster inside `horizon` reaches the
/// internal boundary of `horizon`.
pub fn burn_boundary_clusters(config: &SiteConfig, horizon: Rect) -> Result<SiteConfig> {
    if !config.domain().contains_rect(&horizon) {
        return domain("horizon leaves the configuration domain");
    }
    let g = Grid::new(horizon);
    let open = value_mask(config, horizon, true);
    let border: Vec<usize> = (0..g.len())
        .filter(|&i| {
            let (x, y) = (i % g.w, i / g.w);
            x == 0 || y == 0 || x == g.w - 1 || y == g.h - 1
        })
        .collect();
    let burned = g.flood(&open, Adjacency::Primal, border);
    Ok(config.with_sites(
        (0..g.len()).filter(|&i| burned[i]).map(|i| horizon.coord(i)),
        false,
    ))
}

/// Draws `ω ~ P_p` and `σ ~ P_δ` on `horizon` and derives `ω̄`, `ω̄^δ`.
pub fn sdp_sample(p: f64, delta: f64, horizon: Rect, rng: &RandomSource) -> Result<SdpSample> {
    check_prob("p", p)?;
    check_prob("delta", delta)?;
    let omega = sample_config(horizon, p, &rng.derive(OMEGA_TAG))?;
    let sigma = sample_config(horizon, delta, &rng.derive(SIGMA_TAG))?;
    let omega_bar = burn_boundary_clusters(&omega, horizon)?;
    let omega_bar_delta = overlay(&omega_bar, &sigma)?;
    Ok(SdpSample { p, delta, horizon, source: *rng, omega, sigma, omega_bar, omega_bar_delta })
}

fn check_strip(omega: &SiteConfig, n: u32) -> Result<Rect> {
    if n == 0 {
        return param("strip scale must be positive");
    }
    let s = Rect::strip_s(n);
    if !omega.domain().contains_rect(&s) {
        return domain(format!("S_{n} is not inside the configuration domain"));
    }
    Ok(s)
}

/// `χ` as a mask over `S_n`: open sites joined inside `S_n` to both the left
/// and the right side of `S_n`.
pub fn chi_mask(omega: &SiteConfig, n: u32) -> Result<SiteConfig> {
    let s = check_strip(omega, n)?;
    let g = Grid::new(s);
    let open = value_mask(omega, s, true);
    let left = g.flood(&open, Adjacency::Primal, g.left_column());
    let w = g.w;
    let mut chi = SiteConfig::filled(s, false);
    if (0..g.h).any(|y| left[y * w + w - 1]) {
        let right = g.flood(&open, Adjacency::Primal, g.right_column());
        for i in 0..g.len() {
            if left[i] && right[i] {
                chi.set_index(i, true);
            }
        }
    }
    Ok(chi)
}

pub fn chi_set(omega: &SiteConfig, n: u32) -> Result<BTreeSet<Coord>> {
    Ok(chi_mask(omega, n)?.open_sites().collect())
}

/// `ω̃` on `S_n`: closed on `χ ∪ ∂χ`, open elsewhere in `S_n`, closed outside.
pub fn tilde_config(omega: &SiteConfig, n: u32) -> Result<SiteConfig> {
    let chi = chi_mask(omega, n)?;
    Ok(tilde_from_chi(&chi))
}

pub(crate) fn tilde_from_chi(chi: &SiteConfig) -> SiteConfig {
    let s = chi.domain();
    let g = Grid::new(s);
    let mut out = SiteConfig::filled(s, true);
    for i in 0..g.len() {
        if chi.get_index(i) {
            out.set_index(i, false);
            g.for_each_neighbor(i, Adjacency::Primal, |j| out.set_index(j, false));
        }
    }
    out
}

/// `ω̃^δ`: `ω̃` with `σ` OR-ed in on `R_n` only.
pub fn tilde_enhanced(omega_tilde: &SiteConfig, sigma: &SiteConfig, n: u32) -> Result<SiteConfig> {
    let s = check_strip(omega_tilde, n)?;
    let r = Rect::strip_r(n);
    if !sigma.domain().contains_rect(&r) {
        return domain(format!("the enhancement mask does not cover R_{n}"));
    }
    let mut out = omega_tilde.restrict(s)?.with_outside(false);
    for c in r.iter() {
        if sigma.get(c) {
            out.set(c, true);
        }
    }
    Ok(out)
}

/// `ω̂`: `ω` with every site closed whose open cluster (inside the domain)
/// contains an open circuit of `Ann(n, 2n)` surrounding `B_{n-1}`.
pub fn check_config(omega: &SiteConfig, n: u32) -> Result<SiteConfig> {
    if n == 0 {
        return param("annulus scale must be positive");
    }
    let outer = ball(Coord::ORIGIN, 2 * n);
    let dom = omega.domain();
    if !dom.contains_rect(&outer) {
        return domain(format!("B_{} is not inside the configuration domain", 2 * n));
    }
    let seeds = circuit_cluster_sites(omega, n, outer);
    if seeds.is_empty() {
        return Ok(omega.clone());
    }
    let g = Grid::new(dom);
    let open = value_mask(omega, dom, true);
    let burned = g.flood(&open, Adjacency::Primal, seeds.into_iter().map(|c| dom.index_unchecked(c)));
    Ok(omega.with_sites((0..g.len()).filter(|&i| burned[i]).map(|i| dom.coord(i)), false))
}

/// One site from each annulus cluster that carries a circuit.
fn circuit_cluster_sites(omega: &SiteConfig, n: u32, outer: Rect) -> Vec<Coord> {
    let g = Grid::new(outer);
    let ann = annulus_mask(outer, n);
    let member: Vec<bool> = outer.iter().zip(&ann).map(|(c, &a)| a && omega.get(c)).collect();
    let mut uf = UnionFind::new(g.len());
    for i in 0..g.len() {
        if member[i] {
            g.for_each_neighbor(i, Adjacency::Primal, |j| {
                if j < i && member[j] {
                    uf.union(i, j);
                }
            });
        }
    }
    // A surrounding circuit meets all four half-axes.
    let k = 2 * n as i32;
    let mut axis_hits: std::collections::BTreeMap<usize, u8> = Default::default();
    for (bit, (dx, dy)) in [(1, 0), (0, 1), (-1, 0), (0, -1)].into_iter().enumerate() {
        for t in n as i32..=k {
            let c = Coord::new(dx * t, dy * t);
            let i = outer.index_unchecked(c);
            if member[i] {
                *axis_hits.entry(uf.find(i)).or_default() |= 1 << bit;
            }
        }
    }
    let mut out = Vec::new();
    for (root, hits) in axis_hits {
        if hits != 0b1111 {
            continue;
        }
        let blockers: Vec<bool> = (0..g.len())
            .map(|i| ann[i] && !(member[i] && uf.find(i) == root))
            .collect();
        if !radial_dual_crossing(outer, n, &blockers) {
            out.push(outer.coord(root));
        }
    }
    out
}

/// `∂B_{n-1} ↔ ∂B_{2n}` in `config`: an open primal path from the ring at
/// distance `n` to the ring at distance `2n + 1`.
pub fn annulus_connection(config: &SiteConfig, n: u32) -> Result<bool> {
    let r = ball(Coord::ORIGIN, 2 * n + 1);
    if !config.domain().contains_rect(&r) {
        return domain("annulus connection needs B_{2n+1}");
    }
    let g = Grid::new(r);
    let member: Vec<bool> = r
        .iter()
        .map(|c| linf_dist(c, Coord::ORIGIN) >= n && config.get(c))
        .collect();
    let seeds: Vec<usize> = (0..g.len())
        .filter(|&i| linf_dist(r.coord(i), Coord::ORIGIN) == n)
        .collect();
    Ok(g.reaches(&member, Adjacency::Primal, seeds, |j| {
        linf_dist(r.coord(j), Coord::ORIGIN) == 2 * n + 1
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::has_open_circuit;

    #[test]
    fn burning_extremes() {
        let h = Rect::box_mn(9, 9);
        let open = SiteConfig::filled(h, true);
        assert_eq!(burn_boundary_clusters(&open, h).unwrap().count_open(), 0);
        let single = SiteConfig::from_fn(h, |c| c == Coord::new(4, 4));
        assert_eq!(burn_boundary_clusters(&single, h).unwrap(), single);
    }

    #[test]
    fn zero_delta_and_zero_p() {
        let h = ball(Coord::ORIGIN, 10);
        let s = sdp_sample(0.6, 0.0, h, &RandomSource::new(1, 2)).unwrap();
        assert_eq!(s.omega_bar_delta(), s.omega_bar());
        let s = sdp_sample(0.0, 0.3, h, &RandomSource::new(1, 2)).unwrap();
        assert_eq!(s.omega_bar_delta(), s.sigma());
        assert!(sdp_sample(0.5, -0.1, h, &RandomSource::new(1, 2)).is_err());
    }

    #[test]
    fn chi_extremes() {
        let n = 4;
        let s = Rect::strip_s(n);
        assert!(chi_set(&SiteConfig::filled(s, false), n).unwrap().is_empty());
        assert_eq!(chi_set(&SiteConfig::filled(s, true), n).unwrap().len(), s.area());
        let t = tilde_config(&SiteConfig::filled(s, true), n).unwrap();
        assert_eq!(t.count_open(), 0);
        let t = tilde_config(&SiteConfig::filled(s, false), n).unwrap();
        assert_eq!(t.count_open(), s.area());
    }

    #[test]
    fn single_crossing_is_killed_with_its_boundary() {
        let n = 3;
        let s = Rect::strip_s(n);
        // The row y = 1 plus a dangling open site above it.
        let omega = SiteConfig::from_fn(s, |c| c.y == 1 || c == Coord::new(0, 2));
        let t = tilde_config(&omega, n).unwrap();
        for c in s.iter() {
            let in_chi = c.y == 1 || c == Coord::new(0, 2);
            let near = c.y == 0 || c.y == 2 || c == Coord::new(0, 3);
            assert_eq!(t.get(c), !(in_chi || near), "{c:?}");
        }
    }

    #[test]
    fn enhancement_touches_only_r() {
        let n = 3;
        let s = Rect::strip_s(n);
        let t = SiteConfig::filled(s, false);
        let ones = SiteConfig::filled(s, true);
        let e = tilde_enhanced(&t, &ones, n).unwrap();
        for c in s.iter() {
            assert_eq!(e.get(c), Rect::strip_r(n).contains(c));
        }
        let zeros = SiteConfig::filled(s, false);
        assert_eq!(tilde_enhanced(&t, &zeros, n).unwrap(), t);
    }

    #[test]
    fn check_config_extremes() {
        let d = ball(Coord::ORIGIN, 12);
        let open = SiteConfig::filled(d, true);
        assert_eq!(check_config(&open, 2).unwrap().count_open(), 0);
        let ring = SiteConfig::from_fn(d, |c| linf_dist(c, Coord::ORIGIN) == 3 || c.y == 0);
        let hat = check_config(&ring, 2).unwrap();
        assert!(has_open_circuit(&ring, 2).unwrap());
        assert_eq!(hat.count_open(), 0);
        let no_circuit = SiteConfig::from_fn(d, |c| c.y == 0);
        assert_eq!(check_config(&no_circuit, 2).unwrap(), no_circuit);
    }
}
