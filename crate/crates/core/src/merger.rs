//! Merger trees of finite point sets, their coalescence trees, and the
//! counting bounds that go with them.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::cluster::UnionFind;
use crate::error::{param, Result};
use crate::lattice::{linf_dist, Coord, Rect};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MergerEdge {
    /// Lexicographically smaller endpoint.
    pub a: Coord,
    pub b: Coord,
    pub dist: u32,
    /// Merger time `⌊dist / 2⌋`.
    pub time: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MergerTree {
    /// Sorted vertex set.
    pub vertices: Vec<Coord>,
    /// Edges in construction order.
    pub edges: Vec<MergerEdge>,
    pub root: Coord,
}

impl MergerTree {
    pub fn total_length(&self) -> u64 {
        self.edges.iter().map(|e| e.dist as u64).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tree serializes")
    }
}

/// Greedy spanning tree adding, for each distance in turn, every edge of that
/// length that closes no cycle, in lexicographic order of `(a, b)`.
pub fn build_merger_tree(points: &[Coord]) -> Result<MergerTree> {
    let vertices: Vec<Coord> = points.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if vertices.is_empty() {
        return param("merger tree of an empty set");
    }
    let k = vertices.len();
    let mut cand = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            cand.push((linf_dist(vertices[i], vertices[j]), i, j));
        }
    }
    // Vertices are sorted, so index order is lexicographic order.
    cand.sort_unstable();
    let mut uf = UnionFind::new(k);
    let mut edges = Vec::with_capacity(k - 1);
    for (dist, i, j) in cand {
        if uf.find(i) != uf.find(j) {
            uf.union(i, j);
            edges.push(MergerEdge { a: vertices[i], b: vertices[j], dist, time: dist / 2 });
            if edges.len() == k - 1 {
                break;
            }
        }
    }
    Ok(MergerTree { root: vertices[0], vertices, edges })
}

/// The multiset of merger times, sorted ascending.
pub fn merger_times(tree: &MergerTree) -> Vec<u32> {
    let mut d: Vec<u32> = tree.edges.iter().map(|e| e.time).collect();
    d.sort_unstable();
    d
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoalescenceNode {
    pub members: Vec<Coord>,
    /// Half the longest tree edge inside the node, rounded down.
    pub time: u32,
    /// Half the diameter, rounded down.
    pub half_diam: u32,
    pub children: Option<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoalescenceTree {
    /// Leaves first, in vertex order, then one node per merger.
    pub nodes: Vec<CoalescenceNode>,
    pub root: usize,
}

fn half_diam(members: &[Coord]) -> u32 {
    let (mut x0, mut x1, mut y0, mut y1) = (i32::MAX, i32::MIN, i32::MAX, i32::MIN);
    for c in members {
        x0 = x0.min(c.x);
        x1 = x1.max(c.x);
        y0 = y0.min(c.y);
        y1 = y1.max(c.y);
    }
    ((x1 - x0).max(y1 - y0) / 2) as u32
}

/// Replays the tree edges in construction order, recording each pairwise
/// merger of components.
pub fn coalescence_tree(tree: &MergerTree) -> CoalescenceTree {
    let k = tree.vertices.len();
    let index: BTreeMap<Coord, usize> = tree.vertices.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut nodes: Vec<CoalescenceNode> = tree
        .vertices
        .iter()
        .map(|&c| CoalescenceNode { members: vec![c], time: 0, half_diam: 0, children: None })
        .collect();
    let mut uf = UnionFind::new(k);
    // Current node of each component root.
    let mut node_of: Vec<usize> = (0..k).collect();
    for e in &tree.edges {
        let (i, j) = (uf.find(index[&e.a]), uf.find(index[&e.b]));
        let (v, w) = (node_of[i], node_of[j]);
        let mut members: Vec<Coord> = nodes[v].members.iter().chain(&nodes[w].members).copied().collect();
        members.sort_unstable();
        let time = e.time.max(nodes[v].time).max(nodes[w].time);
        let half_diam = half_diam(&members);
        nodes.push(CoalescenceNode { members, time, half_diam, children: Some((v, w)) });
        let r = uf.union(i, j);
        node_of[r] = nodes.len() - 1;
    }
    CoalescenceTree { root: nodes.len() - 1, nodes }
}

/// Number of distinct orderings of a multiset.
pub fn permutations(d: &[u32]) -> u128 {
    let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
    for &x in d {
        *counts.entry(x).or_default() += 1;
    }
    // Multinomial built one factor at a time so intermediates stay integral.
    let mut out: u128 = 1;
    let mut placed: u128 = 0;
    for &c in counts.values() {
        for i in 1..=c as u128 {
            placed += 1;
            out = out * placed / i;
        }
    }
    out
}

pub const COUNTING_CONSTANT: u128 = 32;

/// Upper bound on `#{X ⊂ R_n : D(X) = D}`: `permut(D) · 32^{k+1} · n² · ∏ max(d, 1)`.
pub fn prop_x_bound(n: u32, d: &[u32]) -> u128 {
    let prod: u128 = d.iter().map(|&x| x.max(1) as u128).product();
    permutations(d) * COUNTING_CONSTANT.pow(d.len() as u32 + 1) * (n as u128).pow(2) * prod
}

/// Merger-time multisets of every `(k+1)`-subset of `R_n`, with multiplicity.
pub fn merger_time_census(n: u32, k: usize) -> Result<BTreeMap<Vec<u32>, u64>> {
    if n == 0 || n > 3 || k > 2 {
        return param(format!("exhaustive census needs 1 <= n <= 3 and |D| <= 2, got n={n}, |D|={k}"));
    }
    let sites: Vec<Coord> = Rect::strip_r(n).iter().collect();
    let mut census = BTreeMap::new();
    let mut pick = Vec::with_capacity(k + 1);
    fn rec(
        sites: &[Coord],
        start: usize,
        size: usize,
        pick: &mut Vec<Coord>,
        census: &mut BTreeMap<Vec<u32>, u64>,
    ) {
        if pick.len() == size {
            let t = build_merger_tree(pick).expect("nonempty");
            *census.entry(merger_times(&t)).or_default() += 1;
            return;
        }
        for i in start..sites.len() {
            pick.push(sites[i]);
            rec(sites, i + 1, size, pick, census);
            pick.pop();
        }
    }
    rec(&sites, 0, k + 1, &mut pick, &mut census);
    Ok(census)
}

/// Exact `#{X ⊂ R_n : D(X) = D}` by enumeration.
pub fn enumerate_sets_with_times(n: u32, d: &[u32]) -> Result<u64> {
    let mut key = d.to_vec();
    key.sort_unstable();
    Ok(merger_time_census(n, d.len())?.get(&key).copied().unwrap_or(0))
}

/// CSV rows `n,D,exact_count,bound` for every multiset realized at
/// `n ≤ max_n`, `|D| ≤ 2`.
pub fn census_csv(max_n: u32) -> Result<String> {
    let mut out = String::from("n,D,exact_count,bound\n");
    for n in 1..=max_n {
        for k in 0..=2 {
            for (d, count) in merger_time_census(n, k)? {
                let ds: Vec<String> = d.iter().map(u32::to_string).collect();
                out.push_str(&format!("{n},[{}],{count},{}\n", ds.join(" "), prop_x_bound(n, &d)));
            }
        }
    }
    Ok(out)
}

/// `C_k = binom(2k, k) / (k + 1)`.
pub fn catalan(k: u32) -> u128 {
    let mut c: u128 = 1;
    for i in 0..k as u128 {
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    c
}

/// Unlabeled rooted trees on `k` vertices, counted by growing every tree of
/// size `k - 1` by one leaf and deduplicating canonical forms.
pub fn count_rooted_trees(k: u32) -> Result<u64> {
    if k > 12 {
        return param("rooted tree enumeration is limited to 12 vertices");
    }
    if k == 0 {
        return Ok(0);
    }
    // A tree is a parent array with parent[v] < v; vertex 0 is the root.
    let mut layer: BTreeSet<String> = BTreeSet::from([canonical_form(&[usize::MAX])]);
    let mut trees: Vec<Vec<usize>> = vec![vec![usize::MAX]];
    for _ in 1..k {
        let mut next_layer = BTreeSet::new();
        let mut next = Vec::new();
        for t in &trees {
            for v in 0..t.len() {
                let mut grown = t.clone();
                grown.push(v);
                if next_layer.insert(canonical_form(&grown)) {
                    next.push(grown);
                }
            }
        }
        layer = next_layer;
        trees = next;
    }
    Ok(layer.len() as u64)
}

fn canonical_form(parent: &[usize]) -> String {
    let mut children = vec![Vec::new(); parent.len()];
    for (v, &p) in parent.iter().enumerate().skip(1) {
        children[p].push(v);
    }
    fn enc(v: usize, children: &[Vec<usize>]) -> String {
        let mut parts: Vec<String> = children[v].iter().map(|&c| enc(c, children)).collect();
        parts.sort_unstable();
        format!("({})", parts.concat())
    }
    enc(0, &children)
}

/// The naive product bound `∏_{x∈X} δ · π₆(t(x))` with `t(x)` half the
/// distance to the nearest other point, rounded down. A singleton uses the
/// largest tabulated radius.
pub fn eq_bad_bound_diagnostic(points: &[Coord], pi6: &BTreeMap<u32, f64>, delta: f64) -> Result<f64> {
    if points.is_empty() {
        return param("empty point set");
    }
    let Some((&max_r, &max_pi)) = pi6.iter().next_back() else {
        return param("empty six-arm table");
    };
    let mut out = 1.0;
    for (i, &x) in points.iter().enumerate() {
        let near = points
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &y)| linf_dist(x, y))
            .min();
        let pi = match near {
            None => max_pi,
            Some(d) => match pi6.get(&(d / 2)) {
                Some(&v) => v,
                None => return param(format!("no six-arm estimate at radius {} (table ends at {max_r})", d / 2)),
            },
        };
        out *= delta * pi;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(i32, i32)]) -> Vec<Coord> {
        v.iter().map(|&(x, y)| Coord::new(x, y)).collect()
    }

    #[test]
    fn singleton_and_empty() {
        let t = build_merger_tree(&pts(&[(2, 1)])).unwrap();
        assert!(t.edges.is_empty());
        assert!(merger_times(&t).is_empty());
        assert_eq!(coalescence_tree(&t).nodes.len(), 1);
        assert!(build_merger_tree(&[]).is_err());
    }

    #[test]
    fn three_collinear_points() {
        let t = build_merger_tree(&pts(&[(5, 0), (0, 0), (4, 0)])).unwrap();
        assert_eq!(t.root, Coord::new(0, 0));
        let e: Vec<(Coord, Coord, u32)> = t.edges.iter().map(|e| (e.a, e.b, e.time)).collect();
        assert_eq!(
            e,
            vec![(Coord::new(4, 0), Coord::new(5, 0), 0), (Coord::new(0, 0), Coord::new(4, 0), 2)]
        );
        assert_eq!(merger_times(&t), vec![0, 2]);
        let c = coalescence_tree(&t);
        assert_eq!(c.nodes.len(), 5);
        assert_eq!(c.nodes[3].members, pts(&[(4, 0), (5, 0)]));
        assert_eq!(c.nodes[4].members.len(), 3);
        assert_eq!(c.nodes[c.root].children, Some((0, 3)));
    }

    #[test]
    fn floors_break_the_plain_diameter_recursion() {
        let t = build_merger_tree(&pts(&[(0, 0), (1, 0), (3, 0), (4, 0)])).unwrap();
        let c = coalescence_tree(&t);
        let top = &c.nodes[c.root];
        let (v, w) = top.children.unwrap();
        assert_eq!((top.half_diam, top.time, c.nodes[v].half_diam, c.nodes[w].half_diam), (2, 1, 0, 0));
        assert!(top.half_diam > c.nodes[v].half_diam + c.nodes[w].half_diam + top.time);
    }

    #[test]
    fn multiset_permutations() {
        assert_eq!(permutations(&[]), 1);
        assert_eq!(permutations(&[2, 2]), 1);
        assert_eq!(permutations(&[1, 2]), 2);
        assert_eq!(permutations(&[1, 1, 2, 3]), 12);
    }

    #[test]
    fn bound_for_empty_multiset() {
        assert_eq!(prop_x_bound(3, &[]), 32 * 9);
        assert_eq!(enumerate_sets_with_times(3, &[]).unwrap(), 13 * 4);
        assert!(enumerate_sets_with_times(4, &[1]).is_err());
        assert!(enumerate_sets_with_times(2, &[1, 1, 1]).is_err());
    }

    #[test]
    fn catalan_values() {
        let c: Vec<u128> = (0..8).map(catalan).collect();
        assert_eq!(c, vec![1, 1, 2, 5, 14, 42, 132, 429]);
        for k in 1..=30 {
            assert!(catalan(k) < 4u128.pow(k));
        }
    }

    #[test]
    fn bad_bound_products() {
        let table: BTreeMap<u32, f64> = (0..=10).map(|r| (r, 1.0 / (1.0 + r as f64).powi(3))).collect();
        let one = eq_bad_bound_diagnostic(&pts(&[(0, 0)]), &table, 0.1).unwrap();
        assert!((one - 0.1 * table[&10]).abs() < 1e-15);
        let two = eq_bad_bound_diagnostic(&pts(&[(0, 0), (6, 2)]), &table, 0.1).unwrap();
        assert!((two - (0.1 * table[&3]).powi(2)).abs() < 1e-15);
        assert!(eq_bad_bound_diagnostic(&pts(&[(0, 0), (40, 0)]), &table, 0.1).is_err());
        let near = eq_bad_bound_diagnostic(&pts(&[(0, 0), (2, 0)]), &table, 0.1).unwrap();
        assert!(near > two);
    }
}
