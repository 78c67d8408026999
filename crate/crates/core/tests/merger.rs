use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use sdperc::lattice::{linf_dist, Coord, Rect};
use sdperc::merger::{
    build_merger_tree, catalan, census_csv, coalescence_tree, count_rooted_trees,
    enumerate_sets_with_times, merger_time_census, merger_times, prop_x_bound,
};

/// Step-by-step construction: at distance `j`, scan the length-`j` pairs in
/// lexicographic order and keep those joining different components, where
/// components are recomputed by graph search.
fn stepwise_tree(points: &[Coord]) -> Vec<(Coord, Coord)> {
    let v: Vec<Coord> = points.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let mut edges: Vec<(Coord, Coord)> = Vec::new();
    let connected = |edges: &[(Coord, Coord)], a: Coord, b: Coord| {
        let mut seen = BTreeSet::from([a]);
        let mut stack = vec![a];
        while let Some(c) = stack.pop() {
            for &(x, y) in edges {
                for (p, q) in [(x, y), (y, x)] {
                    if p == c && seen.insert(q) {
                        stack.push(q);
                    }
                }
            }
        }
        seen.contains(&b)
    };
    let max = v.iter().flat_map(|&a| v.iter().map(move |&b| linf_dist(a, b))).max().unwrap_or(0);
    for j in 0..=max {
        let mut layer: Vec<(Coord, Coord)> = Vec::new();
        for (i, &a) in v.iter().enumerate() {
            for &b in &v[i + 1..] {
                if linf_dist(a, b) == j {
                    layer.push((a, b));
                }
            }
        }
        layer.sort();
        for (a, b) in layer {
            if !connected(&edges, a, b) {
                edges.push((a, b));
            }
        }
    }
    edges
}

fn prim_weight(points: &[Coord]) -> u64 {
    let v: Vec<Coord> = points.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let mut best = vec![u32::MAX; v.len()];
    let mut inside = vec![false; v.len()];
    best[0] = 0;
    let mut total = 0u64;
    for _ in 0..v.len() {
        let i = (0..v.len()).filter(|&i| !inside[i]).min_by_key(|&i| best[i]).unwrap();
        inside[i] = true;
        total += best[i] as u64;
        for j in 0..v.len() {
            if !inside[j] {
                best[j] = best[j].min(linf_dist(v[i], v[j]));
            }
        }
    }
    total
}

fn point_set() -> impl Strategy<Value = Vec<Coord>> {
    prop::collection::vec((-20i32..=20, -20i32..=20), 1..=12)
        .prop_map(|v| v.into_iter().map(|(x, y)| Coord::new(x, y)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn matches_stepwise_construction(points in point_set()) {
        let t = build_merger_tree(&points).unwrap();
        let got: Vec<(Coord, Coord)> = t.edges.iter().map(|e| (e.a, e.b)).collect();
        prop_assert_eq!(got, stepwise_tree(&points));
    }

    #[test]
    fn spanning_tree_of_minimal_weight(points in point_set()) {
        let t = build_merger_tree(&points).unwrap();
        prop_assert_eq!(t.edges.len(), t.vertices.len() - 1);
        prop_assert_eq!(t.total_length(), prim_weight(&points));
        prop_assert_eq!(t.root, *t.vertices.iter().min().unwrap());
        for e in &t.edges {
            prop_assert!(e.a < e.b);
            prop_assert_eq!(e.time, linf_dist(e.a, e.b) / 2);
        }
        prop_assert_eq!(merger_times(&t).len(), t.vertices.len() - 1);
    }

    #[test]
    fn input_order_is_irrelevant(points in point_set(), rot in 0usize..12) {
        let mut shuffled = points.clone();
        shuffled.reverse();
        let r = rot % shuffled.len();
        shuffled.rotate_left(r);
        prop_assert_eq!(build_merger_tree(&points).unwrap(), build_merger_tree(&shuffled).unwrap());
    }

    #[test]
    fn coalescence_tree_structure(points in point_set()) {
        let t = build_merger_tree(&points).unwrap();
        let c = coalescence_tree(&t);
        let k = t.vertices.len();
        prop_assert_eq!(c.nodes.len(), 2 * k - 1);
        prop_assert_eq!(&c.nodes[c.root].members, &t.vertices);
        for node in &c.nodes {
            let Some((v, w)) = node.children else {
                prop_assert_eq!(node.members.len(), 1);
                prop_assert_eq!((node.time, node.half_diam), (0, 0));
                continue;
            };
            let (a, b) = (&c.nodes[v], &c.nodes[w]);
            let union: BTreeSet<Coord> = a.members.iter().chain(&b.members).copied().collect();
            prop_assert_eq!(union.len(), a.members.len() + b.members.len());
            prop_assert_eq!(union.into_iter().collect::<Vec<_>>(), node.members.clone());
            prop_assert!(node.time >= a.time && node.time >= b.time);
            // Rounding each half-diameter down costs at most one unit overall.
            prop_assert!(node.half_diam <= a.half_diam + b.half_diam + node.time + 1);
        }
    }
}

/// Pairs: the single tree edge is the pair itself.
#[test]
fn pair_census_matches_direct_count() {
    for n in 1..=3 {
        let sites: Vec<Coord> = Rect::strip_r(n).iter().collect();
        let mut direct: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
        for (i, &a) in sites.iter().enumerate() {
            for &b in &sites[i + 1..] {
                *direct.entry(vec![linf_dist(a, b) / 2]).or_default() += 1;
            }
        }
        assert_eq!(merger_time_census(n, 1).unwrap(), direct);
    }
    // Adjacent pairs in R_1 = [-2,2] x [0,1]: 4 horizontal per row, 5
    // vertical, 8 diagonal.
    assert_eq!(enumerate_sets_with_times(1, &[0]).unwrap(), 8 + 5 + 8);
}

/// Triples: the tree drops one longest side of the triangle.
#[test]
fn triple_census_matches_triangle_rule() {
    for n in 1..=3 {
        let sites: Vec<Coord> = Rect::strip_r(n).iter().collect();
        let mut direct: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
        for i in 0..sites.len() {
            for j in i + 1..sites.len() {
                for k in j + 1..sites.len() {
                    let mut d = [
                        linf_dist(sites[i], sites[j]),
                        linf_dist(sites[i], sites[k]),
                        linf_dist(sites[j], sites[k]),
                    ];
                    d.sort_unstable();
                    *direct.entry(vec![d[0] / 2, d[1] / 2]).or_default() += 1;
                }
            }
        }
        assert_eq!(merger_time_census(n, 2).unwrap(), direct);
    }
}

#[test]
fn counting_bound_dominates_every_census() {
    for n in 1..=3 {
        let total: u64 = (0..=2).map(|k| merger_time_census(n, k).unwrap().values().sum::<u64>()).sum();
        let m = Rect::strip_r(n).area() as u64;
        assert_eq!(total, m + m * (m - 1) / 2 + m * (m - 1) * (m - 2) / 6);
        for k in 0..=2 {
            for (d, count) in merger_time_census(n, k).unwrap() {
                assert!(count as u128 <= prop_x_bound(n, &d), "n={n} D={d:?}: {count}");
            }
        }
    }
    let csv = census_csv(2).unwrap();
    assert!(csv.starts_with("n,D,exact_count,bound\n"));
    assert!(csv.lines().any(|l| l == format!("1,[],10,{}", 32)));
}

/// `a(n+1) = (1/n) Σ_{k=1}^{n} (Σ_{d|k} d·a(d)) a(n−k+1)`.
fn rooted_tree_recurrence(max: usize) -> Vec<u64> {
    let mut a = vec![0u64; max + 1];
    a[1] = 1;
    for n in 1..max {
        let mut s = 0u64;
        for k in 1..=n {
            let inner: u64 = (1..=k).filter(|d| k % d == 0).map(|d| d as u64 * a[d]).sum();
            s += inner * a[n - k + 1];
        }
        a[n + 1] = s / n as u64;
    }
    a
}

#[test]
fn rooted_trees_against_recurrence_and_catalan() {
    let rec = rooted_tree_recurrence(9);
    for k in 1..=9u32 {
        let count = count_rooted_trees(k).unwrap();
        assert_eq!(count, rec[k as usize], "k={k}");
        assert!(count as u128 <= catalan(k - 1));
        assert!(count as u128 <= catalan(k) && catalan(k) < 4u128.pow(k));
    }
    let first: Vec<u64> = (1..=7).map(|k| count_rooted_trees(k).unwrap()).collect();
    assert_eq!(first, vec![1, 1, 2, 4, 9, 20, 48]);
}

#[test]
fn tree_json_round_trip() {
    let t = build_merger_tree(&[Coord::new(0, 0), Coord::new(3, 1)]).unwrap();
    let v: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
    assert_eq!(v["edges"][0]["time"], 1);
    assert_eq!(v["edges"][0]["dist"], 3);
}
