//! N-parameter forest fires on a finite box.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::cluster::UnionFind;
use crate::error::{domain, param, Error, Result};
use crate::grid::Grid;
use crate::lattice::{ball, linf_dist, Adjacency, Coord, RandomSource, Rect, SiteConfig};

/// How the size of a cluster is measured against the threshold.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeMetric {
    /// Number of sites.
    #[default]
    Sites,
    /// L∞ diameter of the site set.
    Diameter,
}

impl FromStr for SizeMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<SizeMetric> {
        match s {
            "sites" => Ok(SizeMetric::Sites),
            "diameter" => Ok(SizeMetric::Diameter),
            _ => param(format!("unknown size metric {s:?} (sites, diameter)")),
        }
    }
}

impl fmt::Display for SizeMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SizeMetric::Sites => "sites",
            SizeMetric::Diameter => "diameter",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FireEvent {
    pub time: f64,
    /// Size in the run's metric; at least the threshold.
    pub cluster_size: u32,
    pub sites: u32,
    pub bbox: Rect,
    /// L∞ distance from the origin to the nearest burned site, so the
    /// cluster meets `B_m` iff `min_dist <= m`.
    pub min_dist: u32,
}

impl FireEvent {
    pub fn touches(&self, m: u32) -> bool {
        self.min_dist <= m
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FireLog {
    pub domain: Rect,
    pub threshold: u32,
    pub metric: SizeMetric,
    pub t_max: f64,
    pub events: Vec<FireEvent>,
    /// Configuration at `t_max`.
    pub final_config: SiteConfig,
    /// Number of clock rings processed.
    pub rings: u64,
    /// Largest site count of any cluster present at any time.
    pub max_cluster_sites: u32,
}

impl FireLog {
    pub fn first_fire(&self) -> Option<f64> {
        self.events.first().map(|e| e.time)
    }

    /// One JSON object per event with `touches` flags for the given radii.
    pub fn to_json_lines(&self, radii: &[u32]) -> String {
        let mut out = String::new();
        for e in &self.events {
            let touches: BTreeMap<String, bool> =
                radii.iter().map(|&m| (m.to_string(), e.touches(m))).collect();
            let line = serde_json::json!({
                "time": e.time,
                "size": e.cluster_size,
                "sites": e.sites,
                "bbox": [e.bbox.x_min(), e.bbox.x_max(), e.bbox.y_min(), e.bbox.y_max()],
                "min_dist": e.min_dist,
                "touches": touches,
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }
}

/// Largest possible site count after one opening: the new site joins at
/// most four clusters, each below the threshold.
pub fn overshoot_bound(threshold: u32) -> u32 {
    4 * (threshold - 1) + 1
}

/// Runs the process on `domain` (free boundary, all sites closed at time 0)
/// up to `t_max`. Every site carries a rate-1 Poisson clock; a ring opens a
/// closed site and is ignored on an open one, which by memorylessness is the
/// same as restarting an exponential clock after each burn. A cluster whose
/// size reaches `threshold` burns at once.
pub fn simulate(
    domain: Rect,
    threshold: u32,
    t_max: f64,
    metric: SizeMetric,
    rng: &RandomSource,
) -> Result<FireLog> {
    if threshold < 2 {
        return param("fire threshold must be at least 2");
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return param("t_max must be positive and finite");
    }
    let g = Grid::new(domain);
    let len = g.len();
    let mut gen = rng.rng();
    let clock = Exp::new(len as f64).expect("positive rate");
    let mut open = vec![false; len];
    let mut uf = UnionFind::new(len);
    // Bounding boxes in grid coordinates, valid at class roots.
    let mut bbox: Vec<[u32; 4]> = (0..len)
        .map(|i| {
            let (x, y) = ((i % g.w) as u32, (i / g.w) as u32);
            [x, x, y, y]
        })
        .collect();
    let mut events = Vec::new();
    let mut rings = 0u64;
    let mut max_sites = 0u32;
    let mut t = 0.0;
    let mut stack = Vec::new();
    loop {
        t += clock.sample(&mut gen);
        let i = gen.gen_range(0..len);
        if t > t_max {
            break;
        }
        rings += 1;
        if open[i] {
            continue;
        }
        open[i] = true;
        let mut nbrs = [usize::MAX; 4];
        let mut k = 0;
        g.for_each_neighbor(i, Adjacency::Primal, |j| {
            if open[j] {
                nbrs[k] = j;
                k += 1;
            }
        });
        let mut root = i;
        for &j in &nbrs[..k] {
            let (ra, rb) = (uf.find(root), uf.find(j));
            if ra == rb {
                continue;
            }
            let (ba, bb) = (bbox[ra], bbox[rb]);
            root = uf.union(ra, rb);
            bbox[root] = [ba[0].min(bb[0]), ba[1].max(bb[1]), ba[2].min(bb[2]), ba[3].max(bb[3])];
        }
        let root = uf.find(root);
        let sites = uf.size_of(root) as u32;
        max_sites = max_sites.max(sites);
        let b = bbox[root];
        let size = match metric {
            SizeMetric::Sites => sites,
            SizeMetric::Diameter => (b[1] - b[0]).max(b[3] - b[2]),
        };
        if size < threshold {
            continue;
        }
        // Burn: close the cluster and detach its members.
        let mut min_dist = u32::MAX;
        open[i] = false;
        stack.push(i);
        while let Some(s) = stack.pop() {
            uf.reset(s);
            let c = domain.coord(s);
            bbox[s] = {
                let (x, y) = ((s % g.w) as u32, (s / g.w) as u32);
                [x, x, y, y]
            };
            min_dist = min_dist.min(linf_dist(c, Coord::ORIGIN));
            g.for_each_neighbor(s, Adjacency::Primal, |j| {
                if open[j] {
                    open[j] = false;
                    stack.push(j);
                }
            });
        }
        let x0 = domain.x_min() + b[0] as i32;
        let y0 = domain.y_min() + b[2] as i32;
        events.push(FireEvent {
            time: t,
            cluster_size: size,
            sites,
            bbox: Rect::new(x0, domain.x_min() + b[1] as i32, y0, domain.y_min() + b[3] as i32)?,
            min_dist,
        });
    }
    let final_config = SiteConfig::from_bools(domain, &open)?;
    Ok(FireLog {
        domain,
        threshold,
        metric,
        t_max,
        events,
        final_config,
        rings,
        max_cluster_sites: max_sites,
    })
}

/// Number of fires up to time `t` whose cluster meets `B_m`.
pub fn fires_in_ball(log: &FireLog, m: u32, t: f64) -> Result<usize> {
    if !log.domain.contains_rect(&ball(Coord::ORIGIN, m)) {
        return domain(format!("B_{m} is not inside the fire box"));
    }
    Ok(log.events.iter().take_while(|e| e.time <= t).filter(|e| e.touches(m)).count())
}

/// `t_c` with `1 - e^{-t_c} = p_c`.
pub fn critical_time(p_c: f64) -> Result<f64> {
    if !(p_c > 0.0 && p_c < 1.0) {
        return param(format!("critical value {p_c} must lie in (0, 1)"));
    }
    Ok(-(-p_c).ln_1p())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_time_inverts() {
        let p = 1.0 - (-1.0f64).exp();
        assert!((critical_time(p).unwrap() - 1.0).abs() < 1e-12);
        assert!(critical_time(1e-12).unwrap() < 1e-11);
        assert!((critical_time(0.592746).unwrap() + 0.407254f64.ln()).abs() < 1e-12);
        assert!(critical_time(0.0).is_err() && critical_time(1.0).is_err());
    }

    #[test]
    fn unreachable_threshold_never_burns() {
        let b = Rect::box_mn(3, 3);
        let log = simulate(b, 50, 5.0, SizeMetric::Sites, &RandomSource::new(1, 0)).unwrap();
        assert!(log.events.is_empty());
        assert!(log.rings > 0);
    }

    #[test]
    fn rejects_bad_parameters() {
        let b = Rect::box_mn(2, 2);
        let s = RandomSource::new(0, 0);
        assert!(simulate(b, 1, 1.0, SizeMetric::Sites, &s).is_err());
        assert!(simulate(b, 2, 0.0, SizeMetric::Sites, &s).is_err());
        assert!("area".parse::<SizeMetric>().is_err());
    }
}
