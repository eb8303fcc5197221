//! Floyd scaling functions, truncated Floyd metrics and boundary clusters.
//!
//! An edge `{a,b}` has length `f(min(d(v,a), d(v,b)))`. Every distance computed
//! here is the length of an actual path, hence an upper bound for `δ_v`.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Ball, LocallyFiniteGraph};
use crate::hyperbolic::RaySegment;
use crate::maps::VertexMap;
use crate::word::Word;

#[derive(Clone, Debug, PartialEq)]
pub enum FloydFunction {
    /// `λⁿ`, `0 < λ < 1`.
    Geometric { lambda: f64 },
    /// `(1+n)^{-a}`, `a > 1`.
    Power { a: f64 },
    /// Listed values, continued by `f(n) = f(m-1)·λ^{n-m+1}` past the table.
    Table { values: Vec<f64>, lambda: f64 },
    /// Constant `c`: not summable, used as a non-shrinking control.
    Constant { c: f64 },
}

impl FloydFunction {
    /// Parses `geom:λ`, `pow:a`, `table:v0,v1,...;λ` and `const:c`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, arg) = spec.trim().split_once(':').unwrap_or((spec.trim(), ""));
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number in `{spec}`")));
        let f = match kind {
            "geom" => FloydFunction::Geometric { lambda: num(arg)? },
            "pow" => FloydFunction::Power { a: num(arg)? },
            "const" => FloydFunction::Constant { c: num(arg)? },
            "table" => {
                let (vals, lambda) = arg
                    .split_once(';')
                    .ok_or_else(|| Error::Parse(format!("`{spec}`: expected table:v0,v1,...;λ")))?;
                let values = vals.split(',').map(num).collect::<Result<Vec<_>>>()?;
                FloydFunction::Table { values, lambda: num(lambda)? }
            }
            other => return Err(Error::Parse(format!("unknown Floyd function `{other}`"))),
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match self {
            FloydFunction::Geometric { lambda } if !(*lambda > 0.0 && *lambda < 1.0) => bad(format!("λ = {lambda} outside (0,1)")),
            FloydFunction::Power { a } if !(*a > 1.0 && a.is_finite()) => bad(format!("exponent {a} must exceed 1")),
            FloydFunction::Constant { c } if !(*c > 0.0 && c.is_finite()) => bad(format!("constant {c} must be positive")),
            FloydFunction::Table { values, lambda } => {
                if values.is_empty() || !(*lambda > 0.0 && *lambda < 1.0) {
                    return bad("table needs values and a tail ratio in (0,1)".into());
                }
                if values.iter().any(|&v| !(v > 0.0 && v.is_finite())) || values.windows(2).any(|w| w[1] > w[0]) {
                    return bad("table values must be positive and non-increasing".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, n: u32) -> f64 {
        match self {
            FloydFunction::Geometric { lambda } => lambda.powi(n as i32),
            FloydFunction::Power { a } => (1.0 + f64::from(n)).powf(-a),
            FloydFunction::Table { values, lambda } => {
                let m = values.len() as u32;
                if n < m {
                    values[n as usize]
                } else {
                    values[(m - 1) as usize] * lambda.powi((n - m + 1) as i32)
                }
            }
            FloydFunction::Constant { c } => *c,
        }
    }

    /// Certified upper bound for `Σ_{n≥R} f(n)`; infinite for the constant control.
    pub fn tail(&self, r: u32) -> f64 {
        match self {
            FloydFunction::Geometric { lambda } => lambda.powi(r as i32) / (1.0 - lambda),
            FloydFunction::Power { a } => {
                let x = 1.0 + f64::from(r);
                x.powf(-a) + x.powf(1.0 - a) / (a - 1.0)
            }
            FloydFunction::Table { values, lambda } => {
                let m = values.len() as u32;
                let listed: f64 = values.iter().skip(r as usize).sum();
                let first_tail = r.max(m);
                listed + self.value(first_tail) / (1.0 - lambda)
            }
            FloydFunction::Constant { .. } => f64::INFINITY,
        }
    }

    /// `sup f(n)/f(n+1)`.
    pub fn ratio_bound(&self) -> f64 {
        match self {
            FloydFunction::Geometric { lambda } => 1.0 / lambda,
            FloydFunction::Power { a } => 2f64.powf(*a),
            FloydFunction::Table { values, lambda } => {
                let m = values.len() as u32;
                (0..m).map(|n| self.value(n) / self.value(n + 1)).fold(1.0 / lambda, f64::max)
            }
            FloydFunction::Constant { .. } => 1.0,
        }
    }

    pub fn is_summable(&self) -> bool {
        !matches!(self, FloydFunction::Constant { .. })
    }

    /// Stability tolerance used by radius refinement and charts.
    pub fn default_tolerance(&self) -> f64 {
        match self {
            FloydFunction::Power { .. } => 1e-3,
            _ => 1e-6,
        }
    }

    /// Checks `1 ≤ f(n)/f(n+1) ≤ k` for `n < n_max` and summability.
    pub fn check_conditions(&self, n_max: u32) -> FloydConditions {
        let k = self.ratio_bound();
        let ratios: Vec<f64> = (0..n_max).map(|n| self.value(n) / self.value(n + 1)).collect();
        let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
        FloydConditions {
            k,
            min_ratio,
            max_ratio,
            ratios_ok: min_ratio >= 1.0 - 1e-12 && max_ratio <= k * (1.0 + 1e-12),
            summable: self.is_summable(),
        }
    }
}

impl fmt::Display for FloydFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FloydFunction::Geometric { lambda } => write!(f, "geom:{lambda}"),
            FloydFunction::Power { a } => write!(f, "pow:{a}"),
            FloydFunction::Table { values, lambda } => {
                let v: Vec<String> = values.iter().map(|x| x.to_string()).collect();
                write!(f, "table:{};{lambda}", v.join(","))
            }
            FloydFunction::Constant { c } => write!(f, "const:{c}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FloydConditions {
    pub k: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub ratios_ok: bool,
    pub summable: bool,
}

impl FloydConditions {
    pub fn holds(&self) -> bool {
        self.ratios_ok && self.summable
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Default depth allowance for excursions past the deeper endpoint.
pub const DEFAULT_EXCURSION: u32 = 6;

/// A graph with a Floyd function and basepoint.
#[derive(Clone)]
pub struct FloydChart {
    graph: Arc<dyn LocallyFiniteGraph>,
    f: FloydFunction,
    basepoint: Word,
    excursion: u32,
}

impl fmt::Debug for FloydChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FloydChart({}, {}, v={})", self.graph.name(), self.f, self.basepoint)
    }
}

impl FloydChart {
    pub fn new(graph: Arc<dyn LocallyFiniteGraph>, f: FloydFunction) -> Self {
        let basepoint = graph.basepoint();
        FloydChart { graph, f, basepoint, excursion: DEFAULT_EXCURSION }
    }

    pub fn with_basepoint(mut self, v: Word) -> Self {
        self.basepoint = v;
        self
    }

    pub fn with_excursion(mut self, excursion: u32) -> Self {
        self.excursion = excursion;
        self
    }

    pub fn graph(&self) -> &Arc<dyn LocallyFiniteGraph> {
        &self.graph
    }

    pub fn function(&self) -> &FloydFunction {
        &self.f
    }

    pub fn basepoint(&self) -> &Word {
        &self.basepoint
    }

    pub fn depth(&self, v: &Word) -> u32 {
        self.graph.distance(&self.basepoint, v)
    }

    pub fn edge_weight(&self, depth_a: u32, depth_b: u32) -> f64 {
        self.f.value(depth_a.min(depth_b))
    }

    /// Floyd length of one graph geodesic from `a` to `b`, stepping to the
    /// lexicographically smallest neighbour that gets closer.
    pub fn geodesic_length(&self, a: &Word, b: &Word) -> f64 {
        let g = self.graph.as_ref();
        let mut cur = a.clone();
        let mut d = g.distance(a, b);
        let mut total = 0.0;
        while d > 0 {
            let next = g
                .neighbors(&cur)
                .into_iter()
                .filter(|w| g.distance(w, b) + 1 == d)
                .min()
                .expect("a neighbour on a geodesic");
            total += self.edge_weight(self.depth(&cur), self.depth(&next));
            cur = next;
            d -= 1;
        }
        total
    }

    /// Shortest path from `a` over vertices of depth at most
    /// `max(depth a, depth b) + excursion`, exploring only distances up to
    /// `cutoff`. Without a cutoff the geodesic length is used. Returns `None`
    /// when `b` is not reached within the cutoff.
    pub fn upper_bound(&self, a: &Word, b: &Word, cutoff: Option<f64>) -> Option<f64> {
        if a == b {
            return Some(0.0);
        }
        let (cutoff, fallback) = match cutoff {
            Some(c) => (c, None),
            None => {
                let g = self.geodesic_length(a, b);
                (g, Some(g))
            }
        };
        let cap = self.depth(a).max(self.depth(b)) + self.excursion;
        let found = self.search(a, cap, cutoff, |v| v == b).map(|(_, d)| d);
        match (found, fallback) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        }
    }

    /// Dijkstra from `a` returning the first settled vertex accepted by `stop`.
    fn search(&self, a: &Word, cap: u32, cutoff: f64, mut stop: impl FnMut(&Word) -> bool) -> Option<(Word, f64)> {
        let slack = cutoff.abs() * 1e-12 + 1e-300;
        let mut best: HashMap<Word, f64> = HashMap::from([(a.clone(), 0.0)]);
        let mut depth: HashMap<Word, u32> = HashMap::from([(a.clone(), self.depth(a))]);
        let mut settled: HashSet<Word> = HashSet::new();
        let mut heap = BinaryHeap::from([Reverse((Dist(0.0), a.clone()))]);
        while let Some(Reverse((Dist(d), v))) = heap.pop() {
            if d > cutoff + slack {
                break;
            }
            if !settled.insert(v.clone()) {
                continue;
            }
            if stop(&v) {
                return Some((v, d));
            }
            let dv = depth[&v];
            for w in self.graph.neighbors(&v) {
                if settled.contains(&w) {
                    continue;
                }
                let dw = *depth.entry(w.clone()).or_insert_with(|| self.depth(&w));
                if dw > cap {
                    continue;
                }
                let nd = d + self.edge_weight(dv, dw);
                if nd <= cutoff + slack && best.get(&w).map_or(true, |&old| nd < old) {
                    best.insert(w.clone(), nd);
                    heap.push(Reverse((Dist(nd), w)));
                }
            }
        }
        None
    }

    /// Nearest vertex (by the bounded search above) among `targets`, within `cutoff`.
    pub fn nearest(&self, a: &Word, targets: &HashMap<Word, usize>, cutoff: f64) -> Option<(usize, f64)> {
        let cap = self.depth(a) + self.excursion;
        let cap = targets.keys().map(|t| self.depth(t)).max().map_or(cap, |m| cap.max(m + self.excursion));
        self.search(a, cap, cutoff, |v| targets.contains_key(v)).map(|(v, d)| (targets[&v], d))
    }
}

/// Exact shortest-path value inside `ball(v, R)` and the tail `T(R)`.
pub fn floyd_distance(chart: &FloydChart, x: &Word, y: &Word, radius: u32) -> Result<(f64, f64)> {
    if radius < 1 {
        return Err(Error::InvalidParameter("radius must be at least 1".into()));
    }
    let ball = Ball::new(chart.graph.as_ref(), &chart.basepoint, radius);
    let value = ball_distance(chart, &ball, x, y)?;
    Ok((value, chart.f.tail(radius)))
}

fn ball_distance(chart: &FloydChart, ball: &Ball, x: &Word, y: &Word) -> Result<f64> {
    let src = *ball.index.get(x).ok_or_else(|| Error::OutsideBall(x.to_string()))?;
    let dst = *ball.index.get(y).ok_or_else(|| Error::OutsideBall(y.to_string()))?;
    Ok(dijkstra_in_ball(chart, ball, src)[dst])
}

/// Single-source distances over the ball's induced subgraph. Ties in the
/// queue are broken by lexicographic vertex id.
pub fn dijkstra_in_ball(chart: &FloydChart, ball: &Ball, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; ball.len()];
    let mut done = vec![false; ball.len()];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::from([Reverse((Dist(0.0), ball.vertices[source].clone(), source))]);
    while let Some(Reverse((Dist(d), _, i))) = heap.pop() {
        if done[i] {
            continue;
        }
        done[i] = true;
        for &j in &ball.adj[i] {
            let nd = d + chart.edge_weight(ball.dist[i], ball.dist[j]);
            if nd < dist[j] {
                dist[j] = nd;
                heap.push(Reverse((Dist(nd), ball.vertices[j].clone(), j)));
            }
        }
    }
    dist
}

/// All-pairs truncated Floyd distances on `ball(v, R)`.
#[derive(Clone, Debug, Serialize)]
pub struct FloydTable {
    pub radius: u32,
    pub tail: f64,
    pub vertices: Vec<Word>,
    pub values: Vec<Vec<f64>>,
}

pub fn distance_table(chart: &FloydChart, radius: u32) -> FloydTable {
    let ball = Ball::new(chart.graph.as_ref(), &chart.basepoint, radius);
    let values = (0..ball.len()).map(|i| dijkstra_in_ball(chart, &ball, i)).collect();
    FloydTable { radius, tail: chart.f.tail(radius), vertices: ball.vertices, values }
}

#[derive(Clone, Debug, Serialize)]
pub struct Refinement {
    pub value: f64,
    pub radius: u32,
    /// `value − slack ≤ δ_v(x,y) ≤ value`.
    pub slack: f64,
    pub history: Vec<(u32, f64)>,
}

/// Doubles `R` until consecutive values agree within `tol` and `T(R) < tol`.
pub fn refine_radius(chart: &FloydChart, x: &Word, y: &Word, tol: f64, max_vertices: usize) -> Result<Refinement> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let g = chart.graph.as_ref();
    let mut r = chart.depth(x).max(chart.depth(y)).max(1);
    let mut history: Vec<(u32, f64)> = Vec::new();
    let mut previous_size = 0;
    loop {
        let ball = match Ball::bounded(g, &chart.basepoint, r, max_vertices) {
            Ok(b) => b,
            Err(_) => {
                return Err(Error::Inconclusive(format!(
                    "ball budget of {max_vertices} vertices reached at R = {r}; values {history:?}"
                )))
            }
        };
        let value = ball_distance(chart, &ball, x, y)?;
        history.push((r, value));
        if g.is_finite() && ball.len() == previous_size {
            return Ok(Refinement { value, radius: r, slack: 0.0, history });
        }
        previous_size = ball.len();
        if let [.., (r0, v0), (_, v1)] = history.as_slice() {
            let tail = chart.f.tail(*r0);
            if (v0 - v1).abs() < tol && tail < tol {
                let slack = (v0 - v1).abs() + tail;
                return Ok(Refinement { value: *v1, radius: r, slack, history });
            }
        }
        r *= 2;
    }
}

/// `2·Σ_{n≥R−1} f(n)`.
pub fn karlsson_bound(f: &FloydFunction, radius: u32) -> f64 {
    2.0 * f.tail(radius.saturating_sub(1))
}

/// Whether some geodesic from `a` to `b` avoids `ball(v, R)`: a search over
/// the geodesic interval restricted to vertices of depth above `R`.
pub fn geodesic_avoids_ball(chart: &FloydChart, a: &Word, b: &Word, radius: u32) -> bool {
    let g = chart.graph.as_ref();
    if chart.depth(a) <= radius || chart.depth(b) <= radius {
        return false;
    }
    let total = g.distance(a, b);
    let mut seen = HashSet::from([a.clone()]);
    let mut queue = VecDeque::from([(a.clone(), 0u32)]);
    while let Some((v, k)) = queue.pop_front() {
        if v == *b {
            return true;
        }
        for w in g.neighbors(&v) {
            if chart.depth(&w) > radius && g.distance(&w, b) + k + 1 == total && seen.insert(w.clone()) {
                queue.push_back((w, k + 1));
            }
        }
    }
    false
}

/// Endpoint pairs in the annulus `R < depth ≤ R + window` joined by a
/// geodesic avoiding `ball(v, R)`, each within `2·window + 2` of the other.
/// At most `max_pairs`, chosen by a seeded shuffle of the first endpoints.
pub fn sample_avoiding_geodesics(
    chart: &FloydChart,
    radius: u32,
    window: u32,
    max_pairs: usize,
    seed: u64,
) -> Vec<(Word, Word)> {
    let g = chart.graph.as_ref();
    let ball = Ball::new(g, &chart.basepoint, radius + window);
    let mut annulus: Vec<Word> = ball
        .vertices
        .iter()
        .zip(&ball.dist)
        .filter(|(_, &d)| d > radius)
        .map(|(v, _)| v.clone())
        .collect();
    annulus.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut pairs = Vec::new();
    for a in &annulus {
        let local = Ball::new(g, a, 2 * window + 2);
        for b in &local.vertices {
            let d = chart.depth(b);
            if b > a && d > radius && d <= radius + window && geodesic_avoids_ball(chart, a, b, radius) {
                pairs.push((a.clone(), b.clone()));
                if pairs.len() >= max_pairs {
                    return pairs;
                }
            }
        }
    }
    pairs
}

/// Largest endpoint Floyd distance (upper bound) over the sampled geodesics.
pub fn karlsson_defect(chart: &FloydChart, pairs: &[(Word, Word)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptySample("no geodesic avoids the ball".into()));
    }
    Ok(pairs
        .iter()
        .map(|(a, b)| chart.upper_bound(a, b, None).expect("geodesic bound"))
        .fold(0.0, f64::max))
}

/// Sup of `δ_v(p,q)` upper bounds over `(p,q) ∈ e` with `min(d(v,p), d(v,q)) ≥ R`,
/// scanning `p` in the annulus `R ≤ depth ≤ R + window`. `related(p)` lists the
/// `q` with `(p,q) ∈ e`.
pub fn perspectivity_defect(
    chart: &FloydChart,
    related: &dyn Fn(&Word) -> Vec<Word>,
    radius: u32,
    window: u32,
) -> Result<f64> {
    let ball = Ball::new(chart.graph.as_ref(), &chart.basepoint, radius + window);
    let mut defect: Option<f64> = None;
    for (p, &dp) in ball.vertices.iter().zip(&ball.dist) {
        if dp < radius {
            continue;
        }
        for q in related(p) {
            if chart.depth(&q) < radius {
                continue;
            }
            let d = chart.upper_bound(p, &q, None).expect("geodesic bound");
            defect = Some(defect.map_or(d, |x: f64| x.max(d)));
        }
    }
    defect.ok_or_else(|| Error::Inconclusive(format!("no pairs of the relation beyond radius {radius}")))
}

/// Width-`w` metric entourage as a neighbour enumerator.
pub fn width_relation(graph: Arc<dyn LocallyFiniteGraph>, width: u32) -> impl Fn(&Word) -> Vec<Word> {
    move |p| Ball::new(graph.as_ref(), p, width).vertices
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryCluster {
    pub cluster_id: usize,
    /// Indices into the chart's ray list.
    pub rays: Vec<usize>,
    /// Distinct depth-`R` points of the member rays.
    pub points: Vec<Word>,
    pub internal_diameter: f64,
    /// Smallest distance bound to another cluster; `None` for a lone cluster.
    pub separation: Option<f64>,
}

/// Single-linkage clusters of ray points at depth `R` under `δ_v`.
#[derive(Clone, Debug)]
pub struct ClusterChart {
    pub chart: FloydChart,
    pub radius: u32,
    pub threshold: f64,
    pub rays: Vec<RaySegment>,
    pub clusters: Vec<BoundaryCluster>,
    /// Cap used when searching for separations.
    pub separation_cutoff: f64,
    pub flag: Option<String>,
    point_cluster: HashMap<Word, usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterReport {
    pub graph: String,
    pub floyd: String,
    pub radius: u32,
    pub threshold: f64,
    pub separation_cutoff: f64,
    pub flag: Option<String>,
    pub clusters: Vec<ClusterJson>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterJson {
    pub cluster_id: usize,
    pub rays: Vec<Vec<Word>>,
    pub internal_diameter: f64,
    pub separation: Option<f64>,
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut j = i;
    while parent[j] != r {
        let next = parent[j];
        parent[j] = r;
        j = next;
    }
    r
}

/// Clusters the depth-`R` points of `rays`. The default threshold is `4·T(R)`.
pub fn boundary_clusters(
    chart: &FloydChart,
    rays: Vec<RaySegment>,
    threshold: Option<f64>,
    radius: u32,
) -> Result<ClusterChart> {
    let threshold = threshold.unwrap_or_else(|| 4.0 * chart.f.tail(radius));
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::InvalidParameter(format!("cluster threshold {threshold} must be positive and finite")));
    }
    if let Some(r) = rays.iter().find(|r| r.length() < radius as usize) {
        return Err(Error::InvalidParameter(format!("ray of length {} is shorter than R = {radius}", r.length())));
    }
    let mut points: Vec<Word> = Vec::new();
    let mut index: HashMap<Word, usize> = HashMap::new();
    let mut ray_point = Vec::with_capacity(rays.len());
    for ray in &rays {
        let p = ray.vertices[radius as usize].clone();
        let i = *index.entry(p.clone()).or_insert_with(|| {
            points.push(p);
            points.len() - 1
        });
        ray_point.push(i);
    }
    let mut parent: Vec<usize> = (0..points.len()).collect();
    for (i, p) in points.iter().enumerate() {
        let cap = chart.depth(p) + chart.excursion;
        let mut found = Vec::new();
        chart.search(p, cap, threshold, |v| {
            if let Some(&j) = index.get(v) {
                if j != i {
                    found.push(j);
                }
            }
            false
        });
        for j in found {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    // clusters ordered by their first ray
    let mut root_cluster: BTreeMap<usize, usize> = BTreeMap::new();
    let mut members: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for (ray, &pi) in ray_point.iter().enumerate() {
        let root = find(&mut parent, pi);
        let id = *root_cluster.entry(root).or_insert_with(|| {
            members.push((Vec::new(), Vec::new()));
            members.len() - 1
        });
        members[id].0.push(ray);
        if !members[id].1.contains(&pi) {
            members[id].1.push(pi);
        }
    }
    let separation_cutoff = 16.0 * threshold;
    let mut point_cluster = HashMap::new();
    for (id, (_, pts)) in members.iter().enumerate() {
        for &p in pts {
            point_cluster.insert(points[p].clone(), id);
        }
    }
    let clusters = members
        .iter()
        .enumerate()
        .map(|(id, (ray_ids, pts))| {
            let mut diameter: f64 = 0.0;
            for (a, &i) in pts.iter().enumerate() {
                for &j in &pts[a + 1..] {
                    let d = chart.upper_bound(&points[i], &points[j], None).expect("geodesic bound");
                    diameter = diameter.max(d);
                }
            }
            let separation = if members.len() < 2 {
                None
            } else {
                let others: HashMap<Word, usize> = point_cluster
                    .iter()
                    .filter(|(_, &c)| c != id)
                    .map(|(w, &c)| (w.clone(), c))
                    .collect();
                let best = pts
                    .iter()
                    .filter_map(|&i| chart.nearest(&points[i], &others, separation_cutoff).map(|(_, d)| d))
                    .fold(f64::INFINITY, f64::min);
                Some(best.min(separation_cutoff))
            };
            BoundaryCluster {
                cluster_id: id,
                rays: ray_ids.clone(),
                points: pts.iter().map(|&i| points[i].clone()).collect(),
                internal_diameter: diameter,
                separation,
            }
        })
        .collect();
    let flag = (threshold >= chart.f.value(0)).then(|| format!("threshold {threshold} is not below f(0)"));
    Ok(ClusterChart { chart: chart.clone(), radius, threshold, rays, clusters, separation_cutoff, flag, point_cluster })
}

impl ClusterChart {
    pub fn cluster_of_ray(&self, ray: usize) -> usize {
        self.point_cluster[&self.rays[ray].vertices[self.radius as usize]]
    }

    /// Nearest cluster point within the threshold, for a vertex of depth at least `R`.
    pub fn assign_point(&self, a: &Word) -> Option<usize> {
        if self.chart.depth(a) < self.radius {
            return None;
        }
        self.chart.nearest(a, &self.point_cluster, self.threshold).map(|(c, _)| c)
    }

    /// Clusters adherent to a sampled vertex set.
    pub fn assignment(&self, set: &[Word]) -> BTreeSet<usize> {
        set.iter().filter_map(|a| self.assign_point(a)).collect()
    }

    pub fn report(&self) -> ClusterReport {
        ClusterReport {
            graph: self.chart.graph.name(),
            floyd: self.chart.f.to_string(),
            radius: self.radius,
            threshold: self.threshold,
            separation_cutoff: self.separation_cutoff,
            flag: self.flag.clone(),
            clusters: self
                .clusters
                .iter()
                .map(|c| ClusterJson {
                    cluster_id: c.cluster_id,
                    rays: c.rays.iter().map(|&r| self.rays[r].vertices.clone()).collect(),
                    internal_diameter: c.internal_diameter,
                    separation: c.separation,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CompactnessReport {
    pub holds: bool,
    /// `(set name, assigned clusters)`; sets inside the ball get an empty assignment and are excluded.
    pub assignments: Vec<(String, Vec<usize>)>,
    pub excluded: Vec<String>,
}

/// Every sampled set reaching past radius `R` is adherent to some cluster.
pub fn compactness_criterion(clusters: &ClusterChart, sets: &[(String, Vec<Word>)]) -> CompactnessReport {
    let mut holds = true;
    let mut assignments = Vec::new();
    let mut excluded = Vec::new();
    for (name, set) in sets {
        if set.iter().all(|a| clusters.chart.depth(a) < clusters.radius) {
            excluded.push(name.clone());
            continue;
        }
        let a = clusters.assignment(set);
        holds &= !a.is_empty();
        assignments.push((name.clone(), a.into_iter().collect()));
    }
    CompactnessReport { holds, assignments, excluded }
}

/// With `A ⊆ 𝔅(B, e)` on the sample, the clusters adherent to `A` are among those of `B`.
pub fn close_same_boundary(
    clusters: &ClusterChart,
    a: &[Word],
    b: &[Word],
    related: &dyn Fn(&Word) -> Vec<Word>,
) -> Result<bool> {
    let b_set: HashSet<&Word> = b.iter().collect();
    if let Some(x) = a.iter().find(|x| !related(x).iter().any(|y| b_set.contains(y))) {
        return Err(Error::Precondition(format!("{x} is not within the entourage of B")));
    }
    Ok(clusters.assignment(a).is_subset(&clusters.assignment(b)))
}

/// `α(n) = ⌊num·n/den⌋ + offset`, clamped at 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Affine {
    pub num: u32,
    pub den: u32,
    pub offset: i32,
}

impl Affine {
    pub const IDENTITY: Affine = Affine { num: 1, den: 1, offset: 0 };

    /// Parses `n`, `2n`, `n/2`, `3n/2`, each optionally followed by `+c` or `-c`.
    pub fn parse(spec: &str) -> Result<Self> {
        let s: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::Parse(format!("bad affine map `{spec}`"));
        let split = s[1..].find(['+', '-']).map(|i| i + 1);
        let (lin, off) = match split {
            Some(i) => (&s[..i], s[i..].trim_start_matches('+').parse::<i32>().map_err(|_| bad())?),
            None => (&s[..], 0),
        };
        let (head, den) = match lin.split_once('/') {
            Some((h, d)) => (h, d.parse::<u32>().map_err(|_| bad())?),
            None => (lin, 1),
        };
        let num = head.strip_suffix('n').ok_or_else(bad)?;
        let num = if num.is_empty() { 1 } else { num.parse::<u32>().map_err(|_| bad())? };
        if den == 0 {
            return Err(bad());
        }
        Ok(Affine { num, den, offset: off })
    }

    pub fn apply(&self, n: u32) -> u32 {
        let v = i64::from(self.num) * i64::from(n) / i64::from(self.den) + i64::from(self.offset);
        v.max(0) as u32
    }

    fn slope(&self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioCheck {
    /// `max_{n ≤ n_max} numerator(n) / denominator(α(n))`.
    pub numeric_max: f64,
    pub numeric_ok: bool,
    /// Closed-form supremum bound over all `n`, when available; `Some(None)` means unbounded.
    pub analytic_sup: Option<Option<f64>>,
    pub analytic_ok: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QiReport {
    /// `f₂(n)/f₁(α(n)) ≤ D`.
    pub extension: RatioCheck,
    /// `f₁(n)/f₂(α(n)) ≤ D`.
    pub symmetric: RatioCheck,
    pub extension_holds: bool,
    pub homeomorphism_holds: bool,
}

/// Closed-form bound for `sup_n p(n)/q(α(n))` over geometric and power families.
fn analytic_sup(p: &FloydFunction, q: &FloydFunction, alpha: &Affine) -> Option<Option<f64>> {
    use FloydFunction::{Geometric, Power};
    let c = alpha.slope();
    let o = f64::from(alpha.offset.max(0));
    let m = (1.0 + o).max(c);
    Some(match (p, q) {
        (Geometric { lambda: lp }, Geometric { lambda: lq }) => {
            let slope = lp.ln() - c * lq.ln();
            (slope <= 1e-15).then(|| lq.powf(-o))
        }
        (Power { a }, Power { a: b }) => {
            if c == 0.0 {
                Some((1.0 + o).powf(*b))
            } else {
                (b <= a).then(|| m.powf(*b))
            }
        }
        (Geometric { lambda }, Power { a: b }) => {
            let x = (-b / lambda.ln()).max(1.0);
            Some(m.powf(*b) * lambda.powf(x - 1.0) * x.powf(*b))
        }
        (Power { .. }, Geometric { lambda }) => (c == 0.0).then(|| lambda.powf(-o)),
        _ => return None,
    })
}

fn ratio_check(p: &FloydFunction, q: &FloydFunction, alpha: &Affine, d: f64, n_max: u32) -> RatioCheck {
    let numeric_max = (0..=n_max).map(|n| p.value(n) / q.value(alpha.apply(n))).fold(0.0, f64::max);
    let analytic = analytic_sup(p, q, alpha);
    RatioCheck {
        numeric_max,
        numeric_ok: numeric_max <= d * (1.0 + 1e-12),
        analytic_ok: analytic.map(|s| s.is_some_and(|v| v <= d * (1.0 + 1e-12))),
        analytic_sup: analytic,
    }
}

/// Ratio conditions for `α`: the extension condition `f₂(n)/f₁(α(n)) ≤ D`
/// and the symmetric one `f₁(n)/f₂(α(n)) ≤ D`, numerically for `n ≤ n_max`
/// and in closed form for geometric and power families.
pub fn qi_condition_check(alpha: &Affine, f1: &FloydFunction, f2: &FloydFunction, d: f64, n_max: u32) -> QiReport {
    let extension = ratio_check(f2, f1, alpha, d, n_max);
    let symmetric = ratio_check(f1, f2, alpha, d, n_max);
    let holds = |r: &RatioCheck| r.numeric_ok && r.analytic_ok.unwrap_or(true);
    QiReport {
        extension_holds: holds(&extension),
        homeomorphism_holds: holds(&extension) && holds(&symmetric),
        extension,
        symmetric,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InducedMap {
    /// Source cluster `i` goes to target cluster `mapping[i]`.
    pub mapping: Vec<usize>,
    pub injective: bool,
    pub surjective: bool,
}

/// Sends each cluster of `source` to the cluster of `target` adherent to the
/// `π`-images of its rays. The image of a ray must be adherent to exactly
/// one cluster, the same for every ray of the cluster.
pub fn induced_boundary_map(pi: &VertexMap, source: &ClusterChart, target: &ClusterChart) -> Result<InducedMap> {
    let mut mapping = Vec::new();
    for cluster in &source.clusters {
        let mut image: Option<usize> = None;
        for &r in &cluster.rays {
            let ray = &source.rays[r];
            let tail: Vec<Word> = ray.vertices.iter().skip(source.radius as usize).map(|v| pi.apply(v)).collect();
            let assigned = target.assignment(&tail);
            if assigned.len() != 1 {
                return Err(Error::Inconclusive(format!(
                    "image of ray {r} of cluster {} is adherent to {} target clusters",
                    cluster.cluster_id,
                    assigned.len()
                )));
            }
            let c = *assigned.iter().next().unwrap();
            if image.is_some_and(|i| i != c) {
                return Err(Error::Inconclusive(format!(
                    "rays of cluster {} map to different target clusters",
                    cluster.cluster_id
                )));
            }
            image = Some(c);
        }
        mapping.push(image.expect("clusters are non-empty"));
    }
    let distinct: BTreeSet<usize> = mapping.iter().copied().collect();
    Ok(InducedMap {
        injective: distinct.len() == mapping.len(),
        surjective: distinct.len() == target.clusters.len(),
        mapping,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjectionReport {
    /// Floyd cluster hit by each hyperbolic class.
    pub class_cluster: Vec<Option<usize>>,
    /// Classes whose rays fall into different Floyd clusters.
    pub split_classes: Vec<usize>,
    pub surjective: bool,
}

/// Each class is a list of ray indices of the cluster chart.
pub fn hyperbolic_to_floyd_projection(classes: &[Vec<usize>], clusters: &ClusterChart) -> ProjectionReport {
    let mut split = Vec::new();
    let mut hit = BTreeSet::new();
    let class_cluster = classes
        .iter()
        .enumerate()
        .map(|(i, class)| {
            let targets: BTreeSet<usize> = class.iter().map(|&r| clusters.cluster_of_ray(r)).collect();
            hit.extend(targets.iter().copied());
            if targets.len() == 1 {
                targets.into_iter().next()
            } else {
                split.push(i);
                None
            }
        })
        .collect();
    ProjectionReport { class_cluster, surjective: hit.len() == clusters.clusters.len(), split_classes: split }
}
