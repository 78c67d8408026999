//! Cluster labelling, crossings and annulus circuits.

use serde::{Deserialize, Serialize};

use crate::error::{domain, param, Result};
use crate::grid::{value_mask, Grid};
use crate::lattice::{ball, linf_dist, Adjacency, Coord, Rect, SiteConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Open,
    Closed,
}

impl Polarity {
    pub fn value(self) -> bool {
        self == Polarity::Open
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Horizontal,
    Vertical,
}

/// Union-find with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> UnionFind {
        UnionFind { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    #[inline]
    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let gp = self.parent[self.parent[x] as usize];
            self.parent[x] = gp;
            x = gp as usize;
        }
        x
    }

    /// Merges the two classes and returns the new root.
    pub fn union(&mut self, a: usize, b: usize) -> usize {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return ra;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        ra
    }

    pub fn size_of(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r] as usize
    }

    /// Detaches `x` into a singleton. Only valid when no other element
    /// points at `x`, e.g. when resetting every member of a class.
    pub fn reset(&mut self, x: usize) {
        self.parent[x] = x as u32;
        self.size[x] = 1;
    }
}

/// Connected components of one polarity inside a region.
#[derive(Clone, Debug)]
pub struct ClusterLabels {
    region: Rect,
    adjacency: Adjacency,
    polarity: Polarity,
    labels: Vec<u32>,
    sizes: Vec<usize>,
    bboxes: Vec<Rect>,
}

const NO_LABEL: u32 = u32::MAX;

impl ClusterLabels {
    pub fn region(&self) -> Rect {
        self.region
    }
    pub fn adjacency(&self) -> Adjacency {
        self.adjacency
    }
    pub fn polarity(&self) -> Polarity {
        self.polarity
    }

    pub fn label(&self, c: Coord) -> Option<usize> {
        let i = self.region.index(c)?;
        match self.labels[i] {
            NO_LABEL => None,
            l => Some(l as usize),
        }
    }

    pub fn num_clusters(&self) -> usize {
        self.sizes.len()
    }

    pub fn size(&self, label: usize) -> usize {
        self.sizes[label]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn bbox(&self, label: usize) -> Rect {
        self.bboxes[label]
    }

    pub fn connected(&self, a: Coord, b: Coord) -> bool {
        matches!((self.label(a), self.label(b)), (Some(x), Some(y)) if x == y)
    }

    /// One row per cluster: `label,size,x_min,x_max,y_min,y_max`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("label,size,x_min,x_max,y_min,y_max\n");
        for (l, (size, b)) in self.sizes.iter().zip(&self.bboxes).enumerate() {
            s.push_str(&format!(
                "{l},{size},{},{},{},{}\n",
                b.x_min(),
                b.x_max(),
                b.y_min(),
                b.y_max()
            ));
        }
        s
    }
}

/// Labels are numbered by first appearance in row-major order.
pub fn label_clusters(
    config: &SiteConfig,
    region: Rect,
    adjacency: Adjacency,
    polarity: Polarity,
) -> Result<ClusterLabels> {
    if !config.domain().contains_rect(&region) {
        return domain("labelling region leaves the configuration domain");
    }
    let g = Grid::new(region);
    let member = value_mask(config, region, polarity.value());
    let mut uf = UnionFind::new(g.len());
    // Scan neighbours that precede the site in row-major order.
    let back: &[(isize, isize)] = match adjacency {
        Adjacency::Primal => &[(-1, 0), (0, -1)],
        Adjacency::Matching => &[(-1, 0), (-1, -1), (0, -1), (1, -1)],
    };
    for i in 0..g.len() {
        if !member[i] {
            continue;
        }
        let (x, y) = ((i % g.w) as isize, (i / g.w) as isize);
        for &(dx, dy) in back {
            let (nx, ny) = (x + dx, y + dy);
            if nx >= 0 && ny >= 0 && (nx as usize) < g.w {
                let j = ny as usize * g.w + nx as usize;
                if member[j] {
                    uf.union(i, j);
                }
            }
        }
    }
    let mut labels = vec![NO_LABEL; g.len()];
    let mut root_label = vec![NO_LABEL; g.len()];
    let mut sizes = Vec::new();
    let mut bboxes: Vec<Rect> = Vec::new();
    for i in 0..g.len() {
        if !member[i] {
            continue;
        }
        let r = uf.find(i);
        if root_label[r] == NO_LABEL {
            root_label[r] = sizes.len() as u32;
            sizes.push(0);
            let c = region.coord(i);
            bboxes.push(Rect::new(c.x, c.x, c.y, c.y).unwrap());
        }
        let l = root_label[r];
        labels[i] = l;
        sizes[l as usize] += 1;
        let c = region.coord(i);
        let b = bboxes[l as usize];
        bboxes[l as usize] = Rect::new(
            b.x_min().min(c.x),
            b.x_max().max(c.x),
            b.y_min().min(c.y),
            b.y_max().max(c.y),
        )
        .unwrap();
    }
    Ok(ClusterLabels { region, adjacency, polarity, labels, sizes, bboxes })
}

/// Whether a path of the given polarity inside `rect` joins the two sides
/// (left/right columns for horizontal, bottom/top rows for vertical).
pub fn crosses(
    config: &SiteConfig,
    rect: Rect,
    direction: Direction,
    polarity: Polarity,
    adjacency: Adjacency,
) -> Result<bool> {
    if !config.domain().contains_rect(&rect) {
        return domain("crossing rectangle leaves the configuration domain");
    }
    let member = value_mask(config, rect, polarity.value());
    Ok(crosses_mask(&Grid::new(rect), &member, direction, adjacency))
}

pub(crate) fn crosses_mask(g: &Grid, member: &[bool], direction: Direction, adj: Adjacency) -> bool {
    match direction {
        Direction::Horizontal => {
            let w = g.w;
            g.reaches(member, adj, g.left_column(), |j| j % w == w - 1)
        }
        Direction::Vertical => {
            let top = (g.h - 1) * g.w;
            g.reaches(member, adj, g.bottom_row(), |j| j >= top)
        }
    }
}

/// Whether some site of `a` joins some site of `b` by a path of the given
/// polarity inside `region`.
pub fn connected_in(
    config: &SiteConfig,
    region: Rect,
    a: &[Coord],
    b: &[Coord],
    polarity: Polarity,
    adjacency: Adjacency,
) -> Result<bool> {
    if !config.domain().contains_rect(&region) {
        return domain("region leaves the configuration domain");
    }
    let g = Grid::new(region);
    let member = value_mask(config, region, polarity.value());
    let mut target = vec![false; g.len()];
    for &c in b {
        if let Some(i) = region.index(c) {
            target[i] = true;
        }
    }
    let seeds: Vec<usize> = a.iter().filter_map(|&c| region.index(c)).collect();
    Ok(g.reaches(&member, adjacency, seeds, |j| target[j]))
}

fn check_annulus(config: &SiteConfig, n: u32) -> Result<Rect> {
    if n == 0 {
        return param("annulus scale must be positive");
    }
    let outer = ball(Coord::ORIGIN, 2 * n);
    if !config.domain().contains_rect(&outer) {
        return domain(format!("B_{} is not inside the configuration domain", 2 * n));
    }
    Ok(outer)
}

/// Sites of `B_{2n}` that lie in `Ann(n, 2n) = B_{2n} \ B_{n-1}`.
pub(crate) fn annulus_mask(outer: Rect, n: u32) -> Vec<bool> {
    outer.iter().map(|c| linf_dist(c, Coord::ORIGIN) >= n).collect()
}

/// Whether `blockers` (sites allowed on a closed matching path) connect the
/// inner ring of `Ann(n, 2n)` to its outer ring inside the annulus.
pub(crate) fn radial_dual_crossing(outer: Rect, n: u32, blockers: &[bool]) -> bool {
    let g = Grid::new(outer);
    let seeds: Vec<usize> = (0..g.len())
        .filter(|&i| linf_dist(outer.coord(i), Coord::ORIGIN) == n)
        .collect();
    g.reaches(blockers, Adjacency::Matching, seeds, |j| {
        linf_dist(outer.coord(j), Coord::ORIGIN) == 2 * n
    })
}

/// Whether an open primal circuit inside `Ann(n, 2n)` surrounds `B_{n-1}`,
/// decided through the absence of a closed radial matching crossing.
pub fn has_open_circuit(config: &SiteConfig, n: u32) -> Result<bool> {
    let outer = check_annulus(config, n)?;
    let ann = annulus_mask(outer, n);
    let blockers: Vec<bool> = outer
        .iter()
        .zip(&ann)
        .map(|(c, &a)| a && !config.get(c))
        .collect();
    Ok(!radial_dual_crossing(outer, n, &blockers))
}

/// `Ch(S_B) ∩ Ch(S_T) ∩ Cv(S_L) ∩ Cv(S_R)` for the four `6n × n` rectangles
/// framing `Ann(n, 2n)`.
pub fn framed_circuit_event(config: &SiteConfig, n: u32) -> Result<bool> {
    if n == 0 {
        return param("frame scale must be positive");
    }
    let k = n as i32;
    let rects = [
        (Rect::new(-3 * k, 3 * k, -2 * k, -k)?, Direction::Horizontal),
        (Rect::new(-3 * k, 3 * k, k, 2 * k)?, Direction::Horizontal),
        (Rect::new(-2 * k, -k, -3 * k, 3 * k)?, Direction::Vertical),
        (Rect::new(k, 2 * k, -3 * k, 3 * k)?, Direction::Vertical),
    ];
    for (r, _) in &rects {
        if !config.domain().contains_rect(r) {
            return domain("frame rectangles leave the configuration domain");
        }
    }
    for (r, d) in rects {
        if !crosses(config, r, d, Polarity::Open, Adjacency::Primal)? {
            return Ok(false);
        }
    }
    Ok(true)
}
