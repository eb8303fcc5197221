use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::json;

use super::{Context, SuiteDef};
use crate::action::Saturation;
use crate::error::{Error, Result};
use crate::floyd::{
    boundary_clusters, close_same_boundary, compactness_criterion, floyd_distance, induced_boundary_map,
    karlsson_bound, karlsson_defect, perspectivity_defect, qi_condition_check, refine_radius,
    sample_avoiding_geodesics, width_relation, Affine, ClusterChart, FloydChart, FloydFunction,
};
use crate::graph::{parse_graph, Ball, FiniteGraph, LocallyFiniteGraph};
use crate::hyperbolic::{rays_from, sphere_rays};
use crate::maps::VertexMap;
use crate::report::Tally;
use crate::word::Word;

pub(super) fn suites() -> Vec<SuiteDef> {
    vec![
        SuiteDef {
            id: "floyd-oracle",
            group: "floyd",
            about: "truncated Floyd distances equal exhaustive simple-path minimisation on random graphs",
            run: oracle,
        },
        SuiteDef {
            id: "floyd-function-conditions",
            group: "floyd",
            about: "built-in functions are summable with bounded ratios and their tails bound the sums",
            run: function_conditions,
        },
        SuiteDef {
            id: "floyd-refinement",
            group: "floyd",
            about: "radius doubling brackets the Floyd distance and values only decrease",
            run: refinement,
        },
        SuiteDef {
            id: "floyd-karlsson",
            group: "floyd",
            about: "geodesics avoiding ball(R) have Floyd length at most 2·T(R−1), decreasing in R",
            run: karlsson,
        },
        SuiteDef {
            id: "floyd-perspectivity",
            group: "floyd",
            about: "width-1 and Sat(K) entourages shrink near the Floyd boundary; a flat chart does not",
            run: perspectivity,
        },
        SuiteDef {
            id: "floyd-compactness",
            group: "floyd",
            about: "every sampled set reaching past R is adherent to a boundary cluster",
            run: compactness,
        },
        SuiteDef {
            id: "close-same-boundary",
            group: "floyd",
            about: "a set inside a bounded neighbourhood of B meets only clusters of B",
            run: close_sets,
        },
        SuiteDef {
            id: "floyd-qi-transfer",
            group: "floyd",
            about: "ratio conditions hold for Z and 2Z and the induced boundary maps are inverse bijections",
            run: qi_transfer,
        },
    ]
}

/// Minimum over all simple paths inside `ball(v, R)` of the Floyd length,
/// from `source` to every vertex of the ball, by exhaustive search.
pub fn simple_path_oracle(chart: &FloydChart, radius: u32, source: &Word) -> Vec<(Word, f64)> {
    let g = chart.graph().as_ref();
    let ball = Ball::new(g, chart.basepoint(), radius);
    let n = ball.len();
    let depth: Vec<u32> = ball.vertices.iter().map(|v| chart.depth(v)).collect();
    let f = chart.function();
    let Some(&s) = ball.index.get(source) else {
        return Vec::new();
    };
    let mut best = vec![f64::INFINITY; n];
    let mut on_path = vec![false; n];
    fn walk(
        i: usize,
        len: f64,
        adj: &[Vec<usize>],
        weight: &dyn Fn(usize, usize) -> f64,
        on_path: &mut [bool],
        best: &mut [f64],
    ) {
        best[i] = best[i].min(len);
        on_path[i] = true;
        for &j in &adj[i] {
            if !on_path[j] {
                walk(j, len + weight(i, j), adj, weight, on_path, best);
            }
        }
        on_path[i] = false;
    }
    let weight = |i: usize, j: usize| f.value(depth[i].min(depth[j]));
    walk(s, 0.0, &ball.adj, &weight, &mut on_path, &mut best);
    ball.vertices.into_iter().zip(best).collect()
}

fn random_graph(rng: &mut impl Rng, max_vertices: usize) -> FiniteGraph {
    let n = rng.gen_range(3..=max_vertices);
    let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (rng.gen_range(0..i), i)).collect();
    for _ in 0..rng.gen_range(0..=n.min(6)) {
        edges.push((rng.gen_range(0..n), rng.gen_range(0..n)));
    }
    let labels = (0..n).map(|i| format!("v{i}")).collect();
    FiniteGraph::new("random", labels, &edges).expect("spanning tree keeps it connected")
}

fn oracle(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let mut rng = ctx.rng("floyd-oracle");
    let mut worst: f64 = 0.0;
    let mut pairs = 0u64;
    for _ in 0..ctx.params.floyd_graphs {
        let g = random_graph(&mut rng, ctx.params.floyd_max_vertices);
        let text = g.to_adjacency_text();
        let g: Arc<dyn LocallyFiniteGraph> = Arc::new(g);
        let eccentricity = Ball::new(g.as_ref(), &g.basepoint(), u32::MAX).dist.iter().copied().max().unwrap_or(0);
        let functions = [
            FloydFunction::Geometric { lambda: rng.gen_range(0.2..0.9) },
            FloydFunction::Power { a: rng.gen_range(1.2..3.0) },
        ];
        for f in functions {
            let chart = FloydChart::new(g.clone(), f.clone());
            let radii = [eccentricity.max(1), rng.gen_range(1..=eccentricity.max(1))];
            for r in radii {
                let ball = Ball::new(g.as_ref(), &g.basepoint(), r);
                let mut ok = true;
                for x in &ball.vertices {
                    for (y, want) in simple_path_oracle(&chart, r, x) {
                        let got = floyd_distance(&chart, x, &y, r).map(|(v, _)| v).unwrap_or(f64::NAN);
                        let err = (got - want).abs();
                        worst = worst.max(err);
                        pairs += 1;
                        ok &= err <= 1e-12;
                    }
                }
                t.check(ok, || json!({"graph": text, "floyd": f.to_string(), "radius": r}));
            }
        }
    }
    t.detail("pairs", pairs);
    t.detail("max_abs_error", worst);
    t
}

fn function_conditions(_ctx: &Context) -> Tally {
    let mut t = Tally::new();
    for spec in ["geom:0.5", "geom:0.25", "geom:0.9", "pow:2", "pow:1.5", "pow:3"] {
        let f = FloydFunction::parse(spec).expect("builtin");
        let conditions = f.check_conditions(500);
        t.check(conditions.holds(), || json!({"floyd": spec, "conditions": conditions}));
        for r in [1u32, 4, 8, 16] {
            let partial: f64 = (r..r + 200_000).map(|n| f.value(n)).sum();
            let tail = f.tail(r);
            let ok = match f {
                FloydFunction::Geometric { .. } => (partial - tail).abs() <= 1e-12 * tail.max(1e-300) + 1e-15,
                _ => partial <= tail,
            };
            t.check(ok, || json!({"floyd": spec, "radius": r, "partial": partial, "tail": tail}));
        }
    }
    let flat = FloydFunction::parse("const:1").expect("builtin");
    t.check(!flat.check_conditions(500).holds() && flat.tail(4).is_infinite(), || json!({"floyd": "const:1"}));
    t
}

fn refinement(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let mut rng = ctx.rng("floyd-refinement");
    for (name, c) in &ctx.resolved.manifest.charts {
        let chart = chart_of(ctx, name);
        let f = &ctx.resolved.floyd[&c.floyd];
        if !f.is_summable() {
            continue;
        }
        let g = chart.graph().clone();
        let ball = Ball::new(g.as_ref(), &g.basepoint(), 3).vertices;
        for _ in 0..3 {
            let (x, y) = (ball.choose(&mut rng).unwrap().clone(), ball.choose(&mut rng).unwrap().clone());
            let tol = reachable_tolerance(&chart, &x, &y, REFINE_VERTICES);
            match refine_radius(&chart, &x, &y, tol, REFINE_VERTICES) {
                Ok(r) => {
                    let decreasing = r.history.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-15);
                    let bracketed = r.history.iter().all(|&(_, v)| v >= r.value - r.slack - 1e-15);
                    t.check(decreasing && bracketed && r.slack <= 2.0 * tol, || {
                        json!({"chart": name, "x": x, "y": y, "refinement": r})
                    });
                }
                Err(e) => t.undecided(|| json!({"chart": name, "x": x, "y": y, "error": e.to_string()})),
            }
        }
    }
    t
}

const REFINE_VERTICES: usize = 200_000;

/// The default tolerance, loosened to what the doubling radii can certify
/// before the ball outgrows `max_vertices` (trees reach only small radii).
fn reachable_tolerance(chart: &FloydChart, x: &Word, y: &Word, max_vertices: usize) -> f64 {
    let g = chart.graph().as_ref();
    let mut r = chart.depth(x).max(chart.depth(y)).max(1);
    let mut fitting = Vec::new();
    while fitting.len() < 64 && Ball::bounded(g, chart.basepoint(), r, max_vertices).is_ok() {
        fitting.push(r);
        if g.is_finite() && Ball::new(g, chart.basepoint(), r + 1).len() == Ball::new(g, chart.basepoint(), r).len() {
            break;
        }
        r *= 2;
    }
    let f = chart.function();
    match fitting.len() {
        0 | 1 => f.default_tolerance(),
        n => f.default_tolerance().max(1.01 * f.tail(fitting[n - 2])),
    }
}

pub(super) fn chart_of(ctx: &Context, name: &str) -> FloydChart {
    let c = &ctx.resolved.manifest.charts[name];
    FloydChart::new(ctx.resolved.graphs[&c.graph].clone(), ctx.resolved.floyd[&c.floyd].clone())
}

/// Searches past the deeper endpoint stay this shallow in cluster charts.
/// Deeper edges are cheap, so wide excursions make branching graphs explode.
pub(super) const CLUSTER_EXCURSION: u32 = 2;

/// Clusters of the sphere-ray endpoints at depth `R`.
pub(super) fn cluster_chart(chart: &FloydChart, radius: u32) -> Result<ClusterChart> {
    let chart = &chart.clone().with_excursion(CLUSTER_EXCURSION);
    let g = chart.graph().clone();
    let rays = sphere_rays(g.as_ref(), chart.basepoint(), radius, radius as usize + 3);
    if rays.is_empty() {
        return Err(Error::EmptySample(format!("no geodesic rays of length {radius}")));
    }
    boundary_clusters(chart, rays, None, radius)
}

fn karlsson(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let radii = &ctx.params.karlsson_radii;
    let mut rows = Vec::new();
    for (name, c) in &ctx.resolved.manifest.charts {
        let f = &ctx.resolved.floyd[&c.floyd];
        if !f.is_summable() {
            continue;
        }
        let chart = chart_of(ctx, name);
        let mut values = Vec::new();
        for (i, &r) in radii.iter().enumerate() {
            let pairs = sample_avoiding_geodesics(&chart, r, 2, ctx.params.karlsson_pairs, ctx.resolved.manifest.seed + i as u64);
            match karlsson_defect(&chart, &pairs) {
                Ok(d) => {
                    let bound = karlsson_bound(f, r);
                    t.check(d <= bound, || json!({"chart": name, "radius": r, "defect": d, "bound": bound}));
                    values.push(d);
                    rows.push(json!({"chart": name, "radius": r, "pairs": pairs.len(), "defect": d, "bound": bound}));
                }
                Err(e) => t.undecided(|| json!({"chart": name, "radius": r, "error": e.to_string()})),
            }
        }
        if values.len() == radii.len() {
            let decreasing = values.windows(2).all(|w| w[1] < w[0]);
            t.check(decreasing, || json!({"chart": name, "radii": radii, "defects": values}));
        }
    }
    t.detail("rows", rows);
    t
}

/// Entourages to test on a chart: width 1, and `Sat(ball(x₀,1))` for every
/// manifest action on the chart's graph.
fn entourages(ctx: &Context, graph_name: &str) -> Vec<(String, Box<dyn Fn(&Word) -> Vec<Word> + Send + Sync>)> {
    let g = ctx.resolved.graphs[graph_name].clone();
    let mut out: Vec<(String, Box<dyn Fn(&Word) -> Vec<Word> + Send + Sync>)> =
        vec![("width-1".into(), Box::new(width_relation(g, 1)))];
    for (name, spec) in &ctx.resolved.manifest.actions {
        if spec.graph != graph_name {
            continue;
        }
        let (action, x0) = &ctx.resolved.actions[name];
        let k = Ball::new(action.graph().as_ref(), x0, 1).vertices;
        let sat = Saturation::new(action.clone(), &k).expect("non-empty base");
        out.push((format!("sat:{name}"), Box::new(move |p: &Word| sat.related(p))));
    }
    out
}

fn perspectivity(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let radii = &ctx.params.perspectivity_radii;
    let mut rows = Vec::new();
    for (name, c) in &ctx.resolved.manifest.charts {
        if !ctx.resolved.floyd[&c.floyd].is_summable() {
            continue;
        }
        let chart = chart_of(ctx, name);
        let flat = FloydChart::new(chart.graph().clone(), FloydFunction::Constant { c: 1.0 });
        for (label, related) in entourages(ctx, &c.graph) {
            let mut values = Vec::new();
            for &r in radii {
                match perspectivity_defect(&chart, related.as_ref(), r, 1) {
                    Ok(d) => values.push(d),
                    Err(e) => t.undecided(|| json!({"chart": name, "entourage": label, "radius": r, "error": e.to_string()})),
                }
            }
            if values.len() == radii.len() {
                let monotone = values.windows(2).all(|w| w[1] <= w[0] + 1e-15);
                // defects must head to zero, not just stop growing
                let decays = values[values.len() - 1] <= values[0] / 4.0;
                t.check(monotone && decays, || json!({"chart": name, "entourage": label, "radii": radii, "defects": values}));
            }
            let control = perspectivity_defect(&flat, related.as_ref(), *radii.last().unwrap(), 1);
            t.check(control.as_ref().is_ok_and(|&d| d > 0.5), || {
                json!({"chart": name, "entourage": label, "control": format!("{control:?}")})
            });
            rows.push(json!({"chart": name, "entourage": label, "defects": values, "control": control.ok()}));
        }
    }
    t.detail("rows", rows);
    t
}

/// Sample sets: geodesic segments from random points near the basepoint,
/// single far vertices, and pairs of far vertices.
fn sample_sets(rng: &mut impl Rng, g: &dyn LocallyFiniteGraph, radius: u32, count: usize) -> Vec<(String, Vec<Word>)> {
    let near = Ball::new(g, &g.basepoint(), 2).vertices;
    let far = Ball::new(g, &g.basepoint(), radius + 3).vertices;
    let mut sets = Vec::new();
    for i in 0..count {
        let p = near.choose(rng).unwrap();
        let rays = rays_from(g, p, radius as usize + 4, 64);
        if let Some(ray) = rays.choose(rng) {
            sets.push((format!("segment-{i}"), ray.vertices.clone()));
        }
        let a = far.choose(rng).unwrap().clone();
        let b = far.choose(rng).unwrap().clone();
        sets.push((format!("pair-{i}"), vec![a.clone(), b]));
        sets.push((format!("point-{i}"), vec![a]));
    }
    sets
}

fn compactness(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let mut rng = ctx.rng("floyd-compactness");
    let radius = 5;
    for name in &ctx.resolved.manifest.charts.keys().cloned().collect::<Vec<_>>() {
        let chart = chart_of(ctx, name);
        if !chart.function().is_summable() {
            continue;
        }
        let cc = match cluster_chart(&chart, radius) {
            Ok(cc) => cc,
            Err(e) => {
                t.undecided(|| json!({"chart": name, "error": e.to_string()}));
                continue;
            }
        };
        let sets = sample_sets(&mut rng, chart.graph().as_ref(), radius, ctx.params.rays_per_action);
        let report = compactness_criterion(&cc, &sets);
        t.check(report.holds, || json!({"chart": name, "radius": radius, "report": report}));
        let inside = vec![("inside".to_string(), Ball::new(chart.graph().as_ref(), chart.basepoint(), radius - 1).vertices)];
        let excluded = compactness_criterion(&cc, &inside);
        t.check(excluded.excluded == vec!["inside".to_string()], || json!({"chart": name, "inside": excluded}));
    }
    t
}

fn close_sets(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let mut rng = ctx.rng("close-same-boundary");
    let radius = 5;
    for name in ctx.resolved.manifest.charts.keys() {
        let chart = chart_of(ctx, name);
        if !chart.function().is_summable() {
            continue;
        }
        let Ok(cc) = cluster_chart(&chart, radius) else { continue };
        let g = chart.graph().clone();
        let related = width_relation(g.clone(), 1);
        for _ in 0..ctx.params.rays_per_action {
            let ray = &cc.rays[rng.gen_range(0..cc.rays.len())];
            let b: Vec<Word> = ray.vertices.clone();
            // A: one neighbour of each point of B
            let a: Vec<Word> = b
                .iter()
                .map(|v| g.neighbors(v).choose(&mut rng).cloned().unwrap_or_else(|| v.clone()))
                .collect();
            match close_same_boundary(&cc, &a, &b, &related) {
                Ok(ok) => {
                    t.check(ok, || json!({"chart": name, "a": a, "b": b}));
                }
                Err(e) => {
                    t.check(false, || json!({"chart": name, "a": a, "b": b, "error": e.to_string()}));
                }
            }
        }
        // the precondition is enforced
        let far = vec![Word::scalar(1000)];
        if g.contains(&far[0]) {
            let r = close_same_boundary(&cc, &far, &cc.rays[0].vertices, &related);
            t.check(matches!(r, Err(Error::Precondition(_))), || json!({"chart": name, "precondition": format!("{r:?}")}));
        }
    }
    t
}

fn qi_transfer(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let f1 = FloydFunction::Geometric { lambda: 0.5 };
    let f2 = FloydFunction::Geometric { lambda: 0.25 };
    let forward = qi_condition_check(&Affine::parse("2n").expect("affine"), &f1, &f2, 1.0, 400);
    let backward = qi_condition_check(&Affine::parse("n/2").expect("affine"), &f2, &f1, 1.0, 400);
    for (label, r) in [("forward", &forward), ("backward", &backward)] {
        t.check(r.extension_holds && r.extension.analytic_ok == Some(true), || json!({"direction": label, "report": r}));
    }
    t.detail("forward", &forward);
    t.detail("backward", &backward);

    // graph 2 is the line whose vertex k stands for 2k
    let line = parse_graph("line").expect("builtin");
    let double = VertexMap::parse("double").expect("builtin");
    let halve = VertexMap::parse("halve").expect("builtin");
    let pairs: &[(u32, u32)] = if ctx.params.pullback_radii.len() > 1 && ctx.params.msvarc_radius > 4 {
        &[(8, 4), (12, 6)]
    } else {
        &[(8, 4)]
    };
    let mut maps = Vec::new();
    for &(r1, r2) in pairs {
        let c1 = cluster_chart(&FloydChart::new(line.clone(), f1.clone()), r1);
        let c2 = cluster_chart(&FloydChart::new(line.clone(), f2.clone()), r2);
        let (Ok(c1), Ok(c2)) = (c1, c2) else {
            t.undecided(|| json!({"radii": [r1, r2], "error": "cluster charts"}));
            continue;
        };
        let there = induced_boundary_map(&halve, &c1, &c2);
        let back = induced_boundary_map(&double, &c2, &c1);
        match (&there, &back) {
            (Ok(a), Ok(b)) => {
                let bijective = a.injective && a.surjective && b.injective && b.surjective;
                let inverse = (0..a.mapping.len()).all(|i| b.mapping[a.mapping[i]] == i)
                    && (0..b.mapping.len()).all(|j| a.mapping[b.mapping[j]] == j);
                let two_ends = c1.clusters.len() == 2 && c2.clusters.len() == 2;
                t.check(bijective && inverse && two_ends, || json!({"radii": [r1, r2], "there": a, "back": b}));
                maps.push(json!({"radii": [r1, r2], "there": a.mapping, "back": b.mapping}));
            }
            _ => t.undecided(|| json!({"radii": [r1, r2], "there": format!("{there:?}"), "back": format!("{back:?}")})),
        }
    }
    t.detail("maps", maps);
    t
}
