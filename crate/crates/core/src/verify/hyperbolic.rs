use std::sync::Arc;

use serde_json::json;

use super::floyd::{chart_of, cluster_chart};
use super::{Context, SuiteDef};
use crate::floyd::hyperbolic_to_floyd_projection;
use crate::graph::{parse_graph, Ball, LocallyFiniteGraph};
use crate::hyperbolic::{basepoint_change_check, delta_estimate, qi_ray_transport, ray_classes, rays_from};
use crate::maps::VertexMap;
use crate::report::Tally;

pub(super) fn suites() -> Vec<SuiteDef> {
    vec![
        SuiteDef {
            id: "hyperbolic-accessibility",
            group: "hyperbolic",
            about: "every Floyd cluster is reached by geodesics from two basepoints, with metrics comparable",
            run: accessibility,
        },
        SuiteDef {
            id: "hyperbolic-projection",
            group: "hyperbolic",
            about: "classes of close rays land in single Floyd clusters and cover all of them",
            run: projection,
        },
        SuiteDef {
            id: "hyperbolic-delta",
            group: "hyperbolic",
            about: "four-point defects vanish on trees and grow on the grid",
            run: delta,
        },
        SuiteDef {
            id: "ray-transport",
            group: "hyperbolic",
            about: "rays pushed through quasi-isometries stay uniformly close to target geodesics",
            run: transport,
        },
    ]
}

fn radius(ctx: &Context) -> u32 {
    ctx.params.pullback_radii.iter().copied().max().unwrap_or(4)
}

fn accessibility(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let r = radius(ctx);
    let mut rows = Vec::new();
    for name in &ctx.resolved.manifest.hyperbolic_charts {
        let chart = chart_of(ctx, name);
        let cc = match cluster_chart(&chart, r) {
            Ok(cc) => cc,
            Err(e) => {
                t.undecided(|| json!({"chart": name, "error": e.to_string()}));
                continue;
            }
        };
        let p = chart.basepoint().clone();
        let g = chart.graph();
        let ball = Ball::new(g.as_ref(), &p, 2);
        for q in ball.sphere(1).take(1).chain(ball.sphere(2).take(1)) {
            let b = basepoint_change_check(&cc, &p, q, 3, ctx.params.ray_budget);
            rows.push(json!({
                "chart": name,
                "q": q,
                "clusters": cc.clusters.len(),
                "max_ratio": b.max_ratio,
                "ratio_bound": b.ratio_bound,
                "missing_from_p": b.from_p.missing(),
                "missing_from_q": b.from_q.missing(),
            }));
            t.check(b.holds, || {
                json!({
                    "chart": name,
                    "q": q,
                    "max_ratio": b.max_ratio,
                    "ratio_bound": b.ratio_bound,
                    "missing_from_p": b.from_p.missing(),
                    "missing_from_q": b.from_q.missing(),
                    "non_singleton": b.from_p.non_singleton.len() + b.from_q.non_singleton.len(),
                })
            });
        }
    }
    t.detail("rows", rows);
    t
}

fn projection(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let mut rows = Vec::new();
    for name in &ctx.resolved.manifest.hyperbolic_charts {
        let chart = chart_of(ctx, name);
        for r in [radius(ctx) - 1, radius(ctx)] {
            let cc = match cluster_chart(&chart, r) {
                Ok(cc) => cc,
                Err(e) => {
                    t.undecided(|| json!({"chart": name, "radius": r, "error": e.to_string()}));
                    continue;
                }
            };
            let classes = ray_classes(chart.graph().as_ref(), &cc.rays, 2);
            let p = hyperbolic_to_floyd_projection(&classes, &cc);
            rows.push(json!({"chart": name, "radius": r, "rays": cc.rays.len(), "classes": classes.len(), "clusters": cc.clusters.len()}));
            t.check(p.surjective && p.split_classes.is_empty(), || json!({"chart": name, "radius": r, "report": p}));
        }
    }
    t.detail("rows", rows);
    t
}

fn delta(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let samples = ctx.params.ray_budget;
    let mut rows = Vec::new();
    for (name, g) in &ctx.resolved.graphs {
        let p = g.basepoint();
        let d = delta_estimate(g.as_ref(), &p, 3, samples, ctx.resolved.manifest.seed);
        rows.push(json!({"graph": name, "radius": 3, "delta": d.delta, "quadruples": d.quadruples}));
        // trees and the line are 0-hyperbolic; the grid is not hyperbolic
        let spec = ctx.resolved.manifest.graphs[name].as_str();
        if spec.starts_with("tree") || spec == "line" || spec.starts_with("cayley:free") {
            t.check(d.delta == 0.0, || json!({"graph": name, "estimate": d}));
        } else if spec == "grid" {
            let wider = delta_estimate(g.as_ref(), &p, 5, samples, ctx.resolved.manifest.seed);
            t.check(wider.delta >= d.delta && wider.delta >= 2.0, || json!({"graph": name, "r3": d, "r5": wider}));
        }
    }
    t.detail("rows", rows);
    t
}

struct TransportCase {
    source: &'static str,
    target: &'static str,
    map: &'static str,
    bound: u32,
}

const CASES: [TransportCase; 3] = [
    TransportCase { source: "line", target: "line", map: "double", bound: 1 },
    TransportCase { source: "line", target: "grid", map: "pad", bound: 0 },
    TransportCase { source: "tree:3", target: "tree:3", map: "parent", bound: 1 },
];

fn transport(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let mut rows = Vec::new();
    for c in &CASES {
        let (source, target): (Arc<dyn LocallyFiniteGraph>, Arc<dyn LocallyFiniteGraph>) =
            (parse_graph(c.source).expect("builtin graph"), parse_graph(c.target).expect("builtin graph"));
        let phi = VertexMap::parse(c.map).expect("builtin map");
        let mut worst = 0;
        let mut count = 0;
        let starts = Ball::new(source.as_ref(), &source.basepoint(), 2).vertices;
        for s in &starts {
            for ray in rays_from(source.as_ref(), s, 8, ctx.params.rays_per_action) {
                count += 1;
                match qi_ray_transport(target.as_ref(), &phi, &ray, 2) {
                    Ok(tr) => {
                        worst = worst.max(tr.hausdorff);
                        t.check(tr.hausdorff <= c.bound && tr.segment.is_geodesic(target.as_ref()), || {
                            json!({"map": c.map, "ray": ray.vertices, "segment": tr.segment.vertices, "hausdorff": tr.hausdorff})
                        });
                    }
                    Err(e) => t.undecided(|| json!({"map": c.map, "ray": ray.vertices, "error": e.to_string()})),
                }
            }
        }
        rows.push(json!({"source": c.source, "target": c.target, "map": c.map, "rays": count, "max_hausdorff": worst}));
    }
    t.detail("rows", rows);
    t
}
