use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde_json::json;

use super::floyd::{cluster_chart, CLUSTER_EXCURSION};
use super::{Context, SuiteDef};
use crate::action::{
    compare_pullbacks, cover_witness, eps_phi_member, find_fundamental_domain, group_perspectivity_defect,
    group_rays, is_properly_discontinuous, lambda_k, milnor_svarc_map, pi_k, tuple_finiteness, GraphAction,
    Membership, Saturation, SearchBudget,
};
use crate::floyd::{FloydChart, FloydFunction};
use crate::graph::{Ball, LocallyFiniteGraph};
use crate::report::Tally;
use crate::word::Word;

pub(super) fn suites() -> Vec<SuiteDef> {
    vec![
        SuiteDef {
            id: "saturation-basis",
            group: "action",
            about: "saturations are symmetric and invariant, and restricted saturations are found as members",
            run: saturation_basis,
        },
        SuiteDef {
            id: "tuple-finiteness",
            group: "action",
            about: "backward construction of meeting tuples matches a brute-force scan",
            run: tuples,
        },
        SuiteDef {
            id: "proper-discontinuity",
            group: "action",
            about: "return sets match a brute-force scan of a group ball",
            run: properness,
        },
        SuiteDef {
            id: "fundamental-domain",
            group: "action",
            about: "translates of the greedy domain cover a ball",
            run: fundamental_domain,
        },
        SuiteDef {
            id: "transfer-maps",
            group: "action",
            about: "S ⊆ Λ_K(Π_K(S)) and F ⊆ Π_K(Λ_K(F))",
            run: transfer_maps,
        },
        SuiteDef {
            id: "milnor-svarc",
            group: "action",
            about: "the orbit map has complete coarse certificates on truncations",
            run: milnor_svarc,
        },
        SuiteDef {
            id: "pullback-agreement",
            group: "action",
            about: "clusters adherent to F·x₀ and to F·K agree along group rays",
            run: pullback_agreement,
        },
        SuiteDef {
            id: "group-perspectivity",
            group: "action",
            about: "Floyd diameters of far translates of K do not grow with R",
            run: group_perspectivity,
        },
    ]
}

fn actions<'a>(ctx: &'a Context) -> impl Iterator<Item = (&'a String, &'a Arc<dyn GraphAction>, &'a Word)> {
    ctx.resolved.actions.iter().map(|(n, (a, x0))| (n, a, x0))
}

fn k_of(action: &dyn GraphAction, x0: &Word) -> Vec<Word> {
    Ball::new(action.graph().as_ref(), x0, 1).vertices
}

fn saturation_basis(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    for (name, action, x0) in actions(ctx) {
        let k = k_of(action.as_ref(), x0);
        let sat = Saturation::new(action.clone(), &k).expect("non-empty");
        let near = Ball::new(action.graph().as_ref(), x0, 3).vertices;
        let gens = action.group().symmetric_generators();
        let mut ok = true;
        for (p, q) in sat.restrict(&near) {
            ok &= sat.contains(&q, &p);
            for g in &gens {
                ok &= sat.contains(&action.act(g, &p), &action.act(g, &q));
            }
        }
        t.check(ok, || json!({"action": name, "base": k}));
        let e = sat.restrict(&Ball::new(action.graph().as_ref(), x0, 2).vertices);
        let budget = SearchBudget { depth: 1, max_size: k.len(), radius: 1 };
        let m = eps_phi_member(action, &e, budget);
        t.check(matches!(m, Ok(Membership::Yes { .. })), || json!({"action": name, "membership": format!("{m:?}")}));
    }
    t
}

fn tuples(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    for (name, action, x0) in actions(ctx) {
        let g = action.graph().as_ref();
        let ball = Ball::new(g, x0, 2);
        let b1 = k_of(action.as_ref(), x0);
        let b2 = vec![x0.clone(), ball.sphere(2).next().expect("sphere of radius 2").clone()];
        let b3 = vec![ball.sphere(1).last().expect("sphere of radius 1").clone()];
        let got = tuple_finiteness(action.as_ref(), &[b1.clone(), b2.clone(), b3.clone()]);
        let group = action.group();
        let meets = |a: &[Word], b: &[Word]| a.iter().any(|x| b.contains(x));
        // g₂ moves a point of B₂ into B₃, g₁ a point of B₁ next to g₂·B₂
        let second: Vec<Word> = group.ball(6).into_iter().filter(|h| meets(&action.translate(h, &b2), &b3)).collect();
        let firsts = group.ball(8);
        let mut scan = Vec::new();
        for h2 in &second {
            let t2 = action.translate(h2, &b2);
            for h1 in &firsts {
                if meets(&action.translate(h1, &b1), &t2) {
                    scan.push(vec![h1.clone(), h2.clone()]);
                }
            }
        }
        scan.sort();
        scan.dedup();
        let ok = got.as_ref().is_ok_and(|v| *v == scan && !v.is_empty());
        t.check(ok, || json!({"action": name, "sets": [b1, b2, b3], "got": format!("{got:?}"), "scan": scan}));
    }
    t
}

fn properness(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    for (name, action, x0) in actions(ctx) {
        for r in [0u32, 1, 2] {
            let k = Ball::new(action.graph().as_ref(), x0, r).vertices;
            let (flag, ret) = is_properly_discontinuous(action.as_ref(), &k);
            let scan: Vec<Word> = action
                .group()
                .ball(2 * r + 4)
                .into_iter()
                .filter(|g| action.translate(g, &k).iter().any(|y| k.contains(y)))
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            t.check(flag && ret == scan, || json!({"action": name, "radius": r, "return_set": ret, "scan": scan}));
        }
    }
    t
}

fn fundamental_domain(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    for (name, action, _) in actions(ctx) {
        match find_fundamental_domain(action.as_ref(), 3) {
            Ok(d) => {
                let g = action.graph();
                let wider = Ball::new(g.as_ref(), &g.basepoint(), 5).vertices;
                let covered = wider.iter().all(|v| cover_witness(action.as_ref(), &d.vertices, v).is_some());
                t.check(covered, || json!({"action": name, "domain": d}));
            }
            Err(e) => t.undecided(|| json!({"action": name, "error": e.to_string()})),
        }
    }
    t
}

fn transfer_maps(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let mut rng = ctx.rng("transfer-maps");
    for (name, action, x0) in actions(ctx) {
        let k = k_of(action.as_ref(), x0);
        let near = Ball::new(action.graph().as_ref(), x0, 3).vertices;
        let elements = action.group().ball(3);
        for _ in 0..ctx.params.rays_per_action {
            let s: Vec<Word> = near.choose_multiple(&mut rng, 4).cloned().collect();
            let back = lambda_k(action.as_ref(), &k, &pi_k(action.as_ref(), &k, &s));
            t.check(s.iter().all(|x| back.contains(x)), || json!({"action": name, "s": s}));
            let f: Vec<Word> = elements.choose_multiple(&mut rng, 3).cloned().collect();
            let back = pi_k(action.as_ref(), &k, &lambda_k(action.as_ref(), &k, &f));
            t.check(f.iter().all(|g| back.contains(g)), || json!({"action": name, "f": f}));
        }
    }
    t
}

fn milnor_svarc(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let mut rows = Vec::new();
    for (name, action, x0) in actions(ctx) {
        let gens = action.group().symmetric_generators();
        match milnor_svarc_map(action, x0, ctx.params.msvarc_radius, &gens) {
            Ok(c) => {
                rows.push(json!({
                    "action": name,
                    "radius": c.radius,
                    "domain": c.domain,
                    "quasi_dense_checked": c.quasi_dense_checked,
                    "properness_samples": c.properness.len(),
                }));
                t.check(c.complete, || json!({"action": name, "certificate": c}));
            }
            Err(e) => t.undecided(|| json!({"action": name, "error": e.to_string()})),
        }
    }
    t.detail("certificates", rows);
    t
}

fn pullback_agreement(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let mut rows = Vec::new();
    for (name, action, x0) in actions(ctx) {
        let chart = FloydChart::new(action.graph().clone(), FloydFunction::Geometric { lambda: 0.5 }).with_basepoint(x0.clone());
        let k = k_of(action.as_ref(), x0);
        for &r in &ctx.params.pullback_radii {
            let cc = match cluster_chart(&chart, r) {
                Ok(cc) => cc,
                Err(e) => {
                    t.undecided(|| json!({"action": name, "radius": r, "error": e.to_string()}));
                    continue;
                }
            };
            let rays = group_rays(action.group().as_ref(), ctx.params.rays_per_action, r as usize + 4, ctx.resolved.manifest.seed + u64::from(r));
            let report = compare_pullbacks(action.as_ref(), x0, &k, &cc, &rays);
            for row in &report.rows {
                if !row.resolved {
                    t.undecided(|| json!({"action": name, "radius": r, "row": row}));
                } else {
                    t.check(row.agree, || json!({"action": name, "radius": r, "row": row}));
                }
            }
            rows.push(json!({
                "action": name,
                "radius": r,
                "clusters": cc.clusters.len(),
                "rays": report.rows.len(),
                "mismatches": report.mismatches,
                "unresolved": report.unresolved,
            }));
        }
    }
    t.detail("rows", rows);
    t
}

fn group_perspectivity(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let mut rows = Vec::new();
    for (name, action, x0) in actions(ctx) {
        let chart = FloydChart::new(action.graph().clone(), FloydFunction::Geometric { lambda: 0.5 })
            .with_basepoint(x0.clone())
            .with_excursion(CLUSTER_EXCURSION);
        let k = k_of(action.as_ref(), x0);
        let radii = affordable_radii(action.graph().as_ref(), x0, &ctx.params.karlsson_radii);
        if radii.len() < 2 {
            t.undecided(|| json!({"action": name, "error": "fewer than two radii fit the vertex budget"}));
            continue;
        }
        let mut values = Vec::new();
        for &r in &radii {
            match group_perspectivity_defect(action.as_ref(), &k, &chart, r, 1) {
                Ok(d) => values.push(d),
                Err(e) => t.undecided(|| json!({"action": name, "radius": r, "error": e.to_string()})),
            }
        }
        let ok = values.windows(2).all(|w| w[1] <= w[0] + 1e-15);
        t.check(ok, || json!({"action": name, "radii": radii, "defects": values}));
        rows.push(json!({"action": name, "radii": radii, "defects": values}));
    }
    t.detail("rows", rows);
    t
}

const PERSPECTIVITY_VERTICES: usize = 2_000;

/// The requested radii whose annulus ball stays under the vertex budget, and
/// if that leaves fewer than three, the largest affordable smaller radii.
fn affordable_radii(g: &dyn LocallyFiniteGraph, x0: &Word, wanted: &[u32]) -> Vec<u32> {
    let fits = |r: u32| Ball::bounded(g, x0, r + 1, PERSPECTIVITY_VERTICES).is_ok();
    let mut radii: Vec<u32> = wanted.iter().copied().filter(|&r| fits(r)).collect();
    let mut r = wanted.iter().copied().min().unwrap_or(4);
    while radii.len() < 3 && r > 2 {
        r -= 1;
        if fits(r) {
            radii.insert(0, r);
        }
    }
    radii
}
