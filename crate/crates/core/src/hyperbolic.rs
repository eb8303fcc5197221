//! Geodesic ray segments, Gromov products and ray transport.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::floyd::ClusterChart;
use crate::graph::{Ball, LocallyFiniteGraph};
use crate::maps::VertexMap;
use crate::word::Word;

/// A finite geodesic segment `γ(0), …, γ(L)` standing in for a ray.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct RaySegment {
    pub vertices: Vec<Word>,
}

impl RaySegment {
    pub fn new(vertices: Vec<Word>) -> Self {
        assert!(!vertices.is_empty(), "a ray segment has a start");
        RaySegment { vertices }
    }

    pub fn start(&self) -> &Word {
        &self.vertices[0]
    }

    pub fn end(&self) -> &Word {
        self.vertices.last().unwrap()
    }

    pub fn length(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_geodesic(&self, g: &dyn LocallyFiniteGraph) -> bool {
        let s = self.start();
        self.vertices.windows(2).all(|w| g.neighbors(&w[0]).contains(&w[1]))
            && self.vertices.iter().enumerate().all(|(k, v)| g.distance(s, v) as usize == k)
    }
}

/// Visits geodesic segments of length `length` from `p` in lexicographic
/// order of their vertex sequences, until `visit` returns `false` or `budget`
/// segments have been seen. Returns the number visited.
pub fn for_each_ray(
    g: &dyn LocallyFiniteGraph,
    p: &Word,
    length: usize,
    budget: usize,
    mut visit: impl FnMut(&[Word]) -> bool,
) -> usize {
    let mut path = vec![p.clone()];
    let mut stack: Vec<Vec<Word>> = vec![extensions(g, p, p, 1)];
    let mut seen = 0;
    if length == 0 {
        visit(&path);
        return 1;
    }
    while let Some(options) = stack.last_mut() {
        match options.pop() {
            None => {
                stack.pop();
                path.pop();
            }
            Some(w) => {
                path.push(w);
                if path.len() == length + 1 {
                    seen += 1;
                    if !visit(&path) || seen >= budget {
                        return seen;
                    }
                    path.pop();
                } else {
                    let next = extensions(g, p, path.last().unwrap(), path.len() as u32);
                    stack.push(next);
                }
            }
        }
    }
    seen
}

/// Neighbours of `v` at distance `k` from `p`, reversed so that popping yields them in order.
fn extensions(g: &dyn LocallyFiniteGraph, p: &Word, v: &Word, k: u32) -> Vec<Word> {
    let mut n: Vec<Word> = g.neighbors(v).into_iter().filter(|w| g.distance(p, w) == k).collect();
    n.sort();
    n.reverse();
    n
}

/// Up to `budget` geodesic segments of length `length` from `p`.
pub fn rays_from(g: &dyn LocallyFiniteGraph, p: &Word, length: usize, budget: usize) -> Vec<RaySegment> {
    let mut out = Vec::new();
    for_each_ray(g, p, length, budget, |r| {
        out.push(RaySegment::new(r.to_vec()));
        true
    });
    out
}

/// One geodesic segment through each vertex of the sphere of radius
/// `radius` about `p`, extended outward to `length` where the graph allows.
/// Steps prefer the lexicographically smallest admissible neighbour.
pub fn sphere_rays(g: &dyn LocallyFiniteGraph, p: &Word, radius: u32, length: usize) -> Vec<RaySegment> {
    let ball = Ball::new(g, p, radius);
    ball.sphere(radius)
        .map(|q| {
            let mut back = vec![q.clone()];
            let mut cur = q.clone();
            for k in (0..radius).rev() {
                cur = g.neighbors(&cur).into_iter().filter(|w| g.distance(p, w) == k).min().unwrap();
                back.push(cur.clone());
            }
            back.reverse();
            while back.len() <= length {
                let k = back.len() as u32;
                match extensions(g, p, back.last().unwrap(), k).pop() {
                    Some(w) => back.push(w),
                    None => break,
                }
            }
            RaySegment::new(back)
        })
        .collect()
}

/// `(x|y)_p`, possibly a half-integer.
pub fn gromov_product(g: &dyn LocallyFiniteGraph, x: &Word, y: &Word, p: &Word) -> f64 {
    let (a, b, c) = (g.distance(p, x), g.distance(p, y), g.distance(x, y));
    (f64::from(a) + f64::from(b) - f64::from(c)) / 2.0
}

/// Four-point defect of a quadruple: half the gap between the two largest pair sums.
pub fn four_point(g: &dyn LocallyFiniteGraph, q: [&Word; 4]) -> f64 {
    let d = |i: usize, j: usize| g.distance(q[i], q[j]);
    let mut s = [d(0, 1) + d(2, 3), d(0, 2) + d(1, 3), d(0, 3) + d(1, 2)];
    s.sort_unstable();
    f64::from(s[2] - s[1]) / 2.0
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaEstimate {
    pub delta: f64,
    pub quadruples: usize,
    pub exhaustive: bool,
    pub witness: Option<[Word; 4]>,
}

/// Largest four-point defect over quadruples of `ball(center, radius)`:
/// every quadruple when there are at most `max_quadruples`, otherwise a
/// seeded sample of that many. This is a lower bound for the hyperbolicity
/// constant of the whole graph.
pub fn delta_estimate(
    g: &dyn LocallyFiniteGraph,
    center: &Word,
    radius: u32,
    max_quadruples: usize,
    seed: u64,
) -> DeltaEstimate {
    let ball = Ball::new(g, center, radius);
    let n = ball.len();
    let total = n.checked_pow(4).unwrap_or(usize::MAX);
    let mut best = DeltaEstimate { delta: 0.0, quadruples: 0, exhaustive: total <= max_quadruples, witness: None };
    let consider = |idx: [usize; 4], best: &mut DeltaEstimate| {
        let q = idx.map(|i| &ball.vertices[i]);
        let d = four_point(g, q);
        best.quadruples += 1;
        if d > best.delta {
            best.delta = d;
            best.witness = Some(q.map(Word::clone));
        }
    };
    if best.exhaustive {
        for a in 0..n {
            for b in a..n {
                for c in b..n {
                    for d in c..n {
                        consider([a, b, c, d], &mut best);
                    }
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..max_quadruples {
            let idx = [0; 4].map(|_| rng.gen_range(0..n));
            consider(idx, &mut best);
        }
    }
    best
}

/// Hausdorff distance between the vertex sets of two segments.
pub fn hausdorff(g: &dyn LocallyFiniteGraph, a: &[Word], b: &[Word]) -> u32 {
    let one_way = |x: &[Word], y: &[Word]| {
        x.iter().map(|p| y.iter().map(|q| g.distance(p, q)).min().unwrap_or(u32::MAX)).max().unwrap_or(0)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Images lie within Hausdorff distance `bound`.
pub fn ray_equivalent(g: &dyn LocallyFiniteGraph, a: &RaySegment, b: &RaySegment, bound: u32) -> bool {
    hausdorff(g, &a.vertices, &b.vertices) <= bound
}

/// Classes of the single-linkage closure of `ray_equivalent(·,·,k)`, each
/// sorted, ordered by smallest member.
pub fn ray_classes(g: &dyn LocallyFiniteGraph, rays: &[RaySegment], k: u32) -> Vec<Vec<usize>> {
    let mut class: Vec<usize> = (0..rays.len()).collect();
    for i in 0..rays.len() {
        for j in 0..i {
            if class[i] != class[j] && ray_equivalent(g, &rays[i], &rays[j], k) {
                let (keep, drop) = (class[i].min(class[j]), class[i].max(class[j]));
                class.iter_mut().filter(|c| **c == drop).for_each(|c| *c = keep);
            }
        }
    }
    let roots: BTreeSet<usize> = class.iter().copied().collect();
    roots.into_iter().map(|r| (0..rays.len()).filter(|&i| class[i] == r).collect()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Accessibility {
    pub basepoint: Word,
    pub ray_length: usize,
    /// One witness per cluster, `None` when the search found none.
    pub witnesses: Vec<Option<RaySegment>>,
    pub rays_examined: usize,
    /// Examined rays whose tail is not adherent to exactly one cluster.
    pub non_singleton: Vec<RaySegment>,
}

impl Accessibility {
    pub fn complete(&self) -> bool {
        self.witnesses.iter().all(Option::is_some) && self.non_singleton.is_empty()
    }

    pub fn missing(&self) -> Vec<usize> {
        (0..self.witnesses.len()).filter(|&c| self.witnesses[c].is_none()).collect()
    }
}

/// Number of final ray points used to read off a ray's cluster.
pub const TAIL_POINTS: usize = 3;

/// For each cluster, a geodesic segment from `p` whose last points are
/// adherent to that cluster alone. Segments have length
/// `d(p,v) + R + TAIL_POINTS`. The search stops once every cluster has a
/// witness or after `budget` segments.
pub fn accessibility_witnesses(chart: &ClusterChart, p: &Word, budget: usize) -> Accessibility {
    let g = chart.chart.graph().as_ref();
    let length = chart.chart.depth(p) as usize + chart.radius as usize + TAIL_POINTS;
    let mut witnesses: Vec<Option<RaySegment>> = vec![None; chart.clusters.len()];
    let mut non_singleton = Vec::new();
    let mut missing = witnesses.len();
    let examined = for_each_ray(g, p, length, budget, |ray| {
        let tail = &ray[ray.len() - TAIL_POINTS..];
        let assigned = chart.assignment(tail);
        if assigned.len() == 1 {
            let c = *assigned.iter().next().unwrap();
            if witnesses[c].is_none() {
                witnesses[c] = Some(RaySegment::new(ray.to_vec()));
                missing -= 1;
            }
        } else {
            non_singleton.push(RaySegment::new(ray.to_vec()));
        }
        missing > 0
    });
    Accessibility { basepoint: p.clone(), ray_length: length, witnesses, rays_examined: examined, non_singleton }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BasepointChange {
    pub from_p: Accessibility,
    pub from_q: Accessibility,
    /// Largest of `δ_p/δ_q` and `δ_q/δ_p` over pairs of a ball around the chart basepoint.
    pub max_ratio: f64,
    /// `k^{d(p,q)}` with `k = sup f(n)/f(n+1)`.
    pub ratio_bound: f64,
    pub holds: bool,
}

fn weighted_dijkstra(ball: &Ball, weight: impl Fn(usize, usize) -> f64, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; ball.len()];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::from([Reverse((0u64, source))]);
    while let Some(Reverse((bits, i))) = heap.pop() {
        let d = f64::from_bits(bits);
        if d > dist[i] {
            continue;
        }
        for &j in &ball.adj[i] {
            let nd = d + weight(i, j);
            if nd < dist[j] {
                dist[j] = nd;
                // non-negative floats order like their bit patterns
                heap.push(Reverse((nd.to_bits(), j)));
            }
        }
    }
    dist
}

/// Every cluster is reached by rays from both `p` and `q`, and the Floyd
/// metrics based at `p` and `q` agree up to `k^{d(p,q)}` on `ball(v, ball_radius)`.
pub fn basepoint_change_check(
    chart: &ClusterChart,
    p: &Word,
    q: &Word,
    ball_radius: u32,
    budget: usize,
) -> BasepointChange {
    let fc = &chart.chart;
    let g = fc.graph().as_ref();
    let from_p = accessibility_witnesses(chart, p, budget);
    let from_q = accessibility_witnesses(chart, q, budget);
    let ball = Ball::new(g, fc.basepoint(), ball_radius);
    let f = fc.function();
    let dp: Vec<u32> = ball.vertices.iter().map(|w| g.distance(p, w)).collect();
    let dq: Vec<u32> = ball.vertices.iter().map(|w| g.distance(q, w)).collect();
    let wp = |i: usize, j: usize| f.value(dp[i].min(dp[j]));
    let wq = |i: usize, j: usize| f.value(dq[i].min(dq[j]));
    let mut max_ratio: f64 = 1.0;
    for s in 0..ball.len() {
        let (a, b) = (weighted_dijkstra(&ball, wp, s), weighted_dijkstra(&ball, wq, s));
        for t in 0..ball.len() {
            if t != s {
                max_ratio = max_ratio.max(a[t] / b[t]).max(b[t] / a[t]);
            }
        }
    }
    let ratio_bound = f.ratio_bound().powi(g.distance(p, q) as i32);
    BasepointChange {
        holds: from_p.complete()
            && from_q.complete()
            && max_ratio <= ratio_bound * (1.0 + 1e-12),
        from_p,
        from_q,
        max_ratio,
        ratio_bound,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Transport {
    pub segment: RaySegment,
    /// Hausdorff distance between the image points and the segment.
    pub hausdorff: u32,
}

/// Pushes a ray through a quasi-isometry: a geodesic of the target from
/// `φ(γ(0))` to `φ(γ(L))` inside the width-`w` tube around the image points.
pub fn qi_ray_transport(
    target: &dyn LocallyFiniteGraph,
    phi: &VertexMap,
    ray: &RaySegment,
    width: u32,
) -> Result<Transport> {
    let image: Vec<Word> = ray.vertices.iter().map(|v| phi.apply(v)).collect();
    if let Some(bad) = image.iter().find(|w| !target.contains(w)) {
        return Err(Error::InvalidMap(format!("{} sends a ray vertex to {bad}, not a target vertex", phi.name())));
    }
    let mut tube: HashMap<Word, u32> = HashMap::new();
    for x in &image {
        let b = Ball::new(target, x, width);
        for (v, &d) in b.vertices.iter().zip(&b.dist) {
            tube.entry(v.clone()).and_modify(|e| *e = (*e).min(d)).or_insert(d);
        }
    }
    let (start, end) = (&image[0], image.last().unwrap());
    let total = target.distance(start, end);
    // backward search from the endpoint inside the tube
    let mut to_end: HashMap<Word, u32> = HashMap::from([(end.clone(), 0)]);
    let mut queue = VecDeque::from([end.clone()]);
    while let Some(v) = queue.pop_front() {
        let d = to_end[&v];
        for w in target.neighbors(&v) {
            if tube.contains_key(&w) && !to_end.contains_key(&w) {
                to_end.insert(w.clone(), d + 1);
                queue.push_back(w);
            }
        }
    }
    if to_end.get(start) != Some(&total) {
        return Err(Error::Inconclusive(format!(
            "no geodesic from {start} to {end} inside the width-{width} tube"
        )));
    }
    let mut path = vec![start.clone()];
    let mut cur = start.clone();
    while cur != *end {
        let d = to_end[&cur];
        cur = target
            .neighbors(&cur)
            .into_iter()
            .filter(|w| to_end.get(w) == Some(&(d - 1)))
            .min()
            .expect("a step towards the endpoint");
        path.push(cur.clone());
    }
    let on_path: HashSet<&Word> = path.iter().collect();
    let near = |x: &Word, set: &HashSet<&Word>| -> u32 {
        (0..).find(|&r| Ball::new(target, x, r).vertices.iter().any(|v| set.contains(v))).unwrap()
    };
    let image_set: HashSet<&Word> = image.iter().collect();
    let h1 = image.iter().map(|x| near(x, &on_path)).max().unwrap_or(0);
    let h2 = path.iter().map(|x| near(x, &image_set)).max().unwrap_or(0);
    Ok(Transport { segment: RaySegment::new(path), hausdorff: h1.max(h2) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floyd::{boundary_clusters, FloydChart, FloydFunction};
    use crate::graph::parse_graph;
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn ray_enumeration() {
        let line = parse_graph("line").unwrap();
        let rays = rays_from(line.as_ref(), &w("0"), 4, 100);
        assert_eq!(rays.len(), 2);
        assert!(rays.iter().all(|r| r.is_geodesic(line.as_ref())));
        let tree = parse_graph("tree:3").unwrap();
        assert_eq!(rays_from(tree.as_ref(), &Word::empty(), 4, 1000).len(), 3 * 8);
        assert_eq!(rays_from(tree.as_ref(), &Word::empty(), 4, 5).len(), 5);
        let grid = parse_graph("grid").unwrap();
        // geodesics from the origin to the sphere of radius 3: Σ over endpoints of path counts
        assert_eq!(rays_from(grid.as_ref(), &w("0,0"), 3, 10_000).len(), 4 + 8 * 3);
        let through = sphere_rays(grid.as_ref(), &w("0,0"), 3, 6);
        assert_eq!(through.len(), 12);
        assert!(through.iter().all(|r| r.length() == 6 && r.is_geodesic(grid.as_ref())));
        let cyc = parse_graph("cycle:6").unwrap();
        assert_eq!(sphere_rays(cyc.as_ref(), &w("0"), 3, 5)[0].length(), 3);
        assert!(rays_from(cyc.as_ref(), &w("0"), 4, 100).is_empty());
    }

    #[test]
    fn gromov_products() {
        let tree = parse_graph("tree:3").unwrap();
        assert_eq!(gromov_product(tree.as_ref(), &w("0,1,0"), &w("0,1,2"), &Word::empty()), 2.0);
        assert_eq!(gromov_product(tree.as_ref(), &w("0,1"), &w("1,0"), &Word::empty()), 0.0);
        let grid = parse_graph("grid").unwrap();
        assert_eq!(gromov_product(grid.as_ref(), &w("1,0"), &w("0,1"), &w("0,0")), 0.0);
    }

    #[test]
    fn delta_of_tree_grid_and_cycle() {
        let tree = parse_graph("tree:3").unwrap();
        assert_eq!(delta_estimate(tree.as_ref(), &Word::empty(), 2, 1 << 20, 1).delta, 0.0);
        let grid = parse_graph("grid").unwrap();
        let small = delta_estimate(grid.as_ref(), &w("0,0"), 2, 1 << 20, 1);
        let large = delta_estimate(grid.as_ref(), &w("0,0"), 4, 20_000, 1);
        assert!(small.exhaustive && !large.exhaustive);
        assert_eq!(small.delta, 2.0);
        assert!(large.delta >= 2.0);
        let cyc = parse_graph("cycle:8").unwrap();
        assert_eq!(delta_estimate(cyc.as_ref(), &w("0"), 4, 1 << 20, 1).delta, 2.0);
    }

    #[test]
    fn tree_ray_classes() {
        let tree = parse_graph("tree:3").unwrap();
        let rays = rays_from(tree.as_ref(), &Word::empty(), 5, 10_000);
        // Hausdorff distance L - j for rays splitting at depth j
        assert_eq!(ray_classes(tree.as_ref(), &rays, 2).len(), 3 * 4);
        assert!(rays.iter().all(|r| ray_equivalent(tree.as_ref(), r, r, 0)));
        assert_eq!(ray_classes(tree.as_ref(), &rays, 0).len(), rays.len());
        assert_eq!(ray_classes(tree.as_ref(), &rays, 10).len(), 1);
    }

    #[test]
    fn accessibility_and_basepoint_change() {
        let line = parse_graph("line").unwrap();
        let chart = FloydChart::new(line.clone(), FloydFunction::parse("geom:0.5").unwrap());
        let cc = boundary_clusters(&chart, rays_from(line.as_ref(), &w("0"), 10, 10), None, 8).unwrap();
        let acc = accessibility_witnesses(&cc, &w("3"), 100);
        assert!(acc.complete());
        let change = basepoint_change_check(&cc, &w("0"), &w("7"), 6, 100);
        assert!(change.holds, "{change:?}");
        assert!(change.max_ratio > 1.0);

        let tree = parse_graph("tree:3").unwrap();
        let chart = FloydChart::new(tree.clone(), FloydFunction::parse("geom:0.5").unwrap());
        let cc = boundary_clusters(&chart, rays_from(tree.as_ref(), &Word::empty(), 5, 10_000), None, 4).unwrap();
        let change = basepoint_change_check(&cc, &Word::empty(), &w("1"), 3, 100_000);
        assert_eq!(change.from_q.witnesses.len(), 3 * 4);
        assert!(change.holds);
    }

    #[test]
    fn transport_into_the_plane() {
        let line = parse_graph("line").unwrap();
        let grid = parse_graph("grid").unwrap();
        let ray = &rays_from(line.as_ref(), &w("0"), 6, 10)[1];
        let pad = VertexMap::new("pad", |v: &Word| v.as_slice().iter().copied().chain([0]).collect());
        let t = qi_ray_transport(grid.as_ref(), &pad, ray, 1).unwrap();
        assert!(t.segment.is_geodesic(grid.as_ref()));
        assert_eq!(t.hausdorff, 0);
        let double = VertexMap::parse("double").unwrap();
        let t = qi_ray_transport(line.as_ref(), &double, ray, 1).unwrap();
        assert_eq!(t.segment.length(), 12);
        assert_eq!(t.hausdorff, 1);
        let bad = VertexMap::parse("const:0").unwrap();
        let t = qi_ray_transport(line.as_ref(), &bad, ray, 0).unwrap();
        assert_eq!(t.segment.length(), 0);
    }

    proptest! {
        #[test]
        fn gromov_product_bounds(a in -9i32..9, b in -9i32..9, c in -9i32..9, d in -9i32..9) {
            let g = parse_graph("grid").unwrap();
            let (x, y, p) = (Word::new(&[a, b]), Word::new(&[c, d]), Word::new(&[0, 0]));
            let gp = gromov_product(g.as_ref(), &x, &y, &p);
            prop_assert!(gp >= 0.0);
            prop_assert!(gp <= f64::from(g.distance(&p, &x).min(g.distance(&p, &y))));
        }

        #[test]
        fn tree_is_zero_hyperbolic(seed in 0u64..1000) {
            let t = parse_graph("tree:3").unwrap();
            prop_assert_eq!(delta_estimate(t.as_ref(), &Word::empty(), 4, 300, seed).delta, 0.0);
        }
    }
}
