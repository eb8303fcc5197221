use rand::Rng;
use serde_json::{json, Value};

use super::{Context, SuiteDef};
use crate::coarse::metric::{self, Verdict};
use crate::coarse::{
    all_relations, basis_conditions, check_axioms, full_set, is_bornologous, is_bornologous_by_members,
    is_coarse_equivalence, is_coarse_map, quasi_density_witness, quasi_inverse, CarrierMap, CoarseStructure,
    Relation, RelationJson,
};
use crate::graph::parse_graph;
use crate::maps::VertexMap;
use crate::report::Tally;
use crate::word::Word;

pub(super) fn suites() -> Vec<SuiteDef> {
    vec![
        SuiteDef {
            id: "coarse-closure-fixpoint",
            group: "coarse",
            about: "generated bases have exactly the members of a brute-force closure over all relations",
            run: closure_fixpoint,
        },
        SuiteDef {
            id: "coarse-axioms",
            group: "coarse",
            about: "generated structures satisfy the five axioms; the largest basis element is an equivalence",
            run: axioms,
        },
        SuiteDef {
            id: "bounded-set-equivalence",
            group: "coarse",
            about: "B×B is an entourage iff some B×{b} is, on coarsely connected structures",
            run: bounded_sets,
        },
        SuiteDef {
            id: "coarse-intersection",
            group: "coarse",
            about: "membership in an intersection of structures is membership in both",
            run: intersection,
        },
        SuiteDef {
            id: "bornologous-basis",
            group: "coarse",
            about: "checking bornology on a basis agrees with checking every member",
            run: bornologous_basis,
        },
        SuiteDef {
            id: "subspace-embedding",
            group: "coarse",
            about: "the subspace structure is the restriction and its inclusion is a coarse map",
            run: subspace_embedding,
        },
        SuiteDef {
            id: "quasi-dense-equivalence",
            group: "coarse",
            about: "a coarse embedding with quasi-dense image has a coarse quasi-inverse",
            run: quasi_dense_equivalence,
        },
        SuiteDef {
            id: "metric-coarse-maps",
            group: "coarse",
            about: "bornologous, proper, close and quasi-dense verdicts for integer maps on truncations",
            run: metric_maps,
        },
    ]
}

/// Relations on `n ≤ 3` points as `n·n`-bit codes, bit `a·n + b` for `(a, b)`.
mod bitrel {
    pub fn has(n: usize, c: u32, a: usize, b: usize) -> bool {
        c >> (a * n + b) & 1 == 1
    }

    pub fn inverse(n: usize, c: u32) -> u32 {
        let mut out = 0;
        for a in 0..n {
            for b in 0..n {
                if has(n, c, a, b) {
                    out |= 1 << (b * n + a);
                }
            }
        }
        out
    }

    /// `{(a, b) : (a, m) ∈ first, (m, b) ∈ second}`.
    pub fn chain(n: usize, first: u32, second: u32) -> u32 {
        let mut out = 0;
        for a in 0..n {
            for b in 0..n {
                if (0..n).any(|m| has(n, first, a, m) && has(n, second, m, b)) {
                    out |= 1 << (a * n + b);
                }
            }
        }
        out
    }

    pub fn diagonal(n: usize) -> u32 {
        (0..n).fold(0, |acc, i| acc | 1 << (i * n + i))
    }
}

/// Members of the coarse structure generated by `gens` on `n ≤ 3` points,
/// by closing the full relation lattice under subsets, inverses,
/// compositions and unions until nothing changes.
fn brute_force_members(n: usize, gens: &[u32]) -> Vec<bool> {
    let size = 1usize << (n * n);
    let mut member = vec![false; size];
    member[bitrel::diagonal(n) as usize] = true;
    for &g in gens {
        member[g as usize] = true;
    }
    loop {
        let mut changed = false;
        let current: Vec<u32> = (0..size as u32).filter(|&c| member[c as usize]).collect();
        let mut add = |c: u32, member: &mut Vec<bool>| {
            if !member[c as usize] {
                member[c as usize] = true;
                changed = true;
            }
        };
        for &a in &current {
            add(bitrel::inverse(n, a), &mut member);
            for &b in &current {
                add(a | b, &mut member);
                add(bitrel::chain(n, a, b), &mut member);
            }
        }
        // subsets
        for c in 0..size as u32 {
            if member[c as usize] {
                continue;
            }
            if current.iter().any(|&m| c & !m == 0) {
                add(c, &mut member);
            }
        }
        if !changed {
            return member;
        }
    }
}

fn bits_to_relation(n: usize, c: u32) -> Relation {
    let mut r = Relation::empty(n);
    for a in 0..n {
        for b in 0..n {
            if bitrel::has(n, c, a, b) {
                r.insert(a, b);
            }
        }
    }
    r
}

fn rel_json(r: &Relation) -> Value {
    json!(RelationJson::from(r))
}

fn random_relation(rng: &mut impl Rng, n: usize, density: f64) -> Relation {
    let mut r = Relation::empty(n);
    for a in 0..n {
        for b in 0..n {
            if a != b && rng.gen_bool(density) {
                r.insert(a, b);
            }
        }
    }
    r
}

/// Random generators; with `connect` a path through every point is added.
fn random_generators(rng: &mut impl Rng, n: usize, connect: bool) -> Vec<Relation> {
    let k = rng.gen_range(1..=3);
    let density = rng.gen_range(0.05..0.3);
    let mut gens: Vec<Relation> = (0..k).map(|_| random_relation(rng, n, density)).collect();
    if connect && n > 1 {
        let mut path = Relation::empty(n);
        for i in 0..n - 1 {
            path.insert(i, i + 1);
        }
        gens.push(path);
    }
    gens
}

fn structures(ctx: &Context, suite: &str, max_n: usize) -> Vec<(Vec<Relation>, CoarseStructure)> {
    let mut rng = ctx.rng(suite);
    let mut out = Vec::new();
    for n in 1..=max_n {
        for i in 0..ctx.params.coarse_structures {
            let gens = random_generators(&mut rng, n, i % 2 == 0);
            let eps = CoarseStructure::generated(n, &gens).expect("small carrier");
            out.push((gens, eps));
        }
    }
    out
}

fn gens_json(gens: &[Relation]) -> Value {
    Value::Array(gens.iter().map(rel_json).collect())
}

/// All relations for `n ≤ 3`, else the basis, random relations and random
/// subsets of basis elements.
fn sample_relations(rng: &mut impl Rng, eps: &CoarseStructure, extra: usize) -> Vec<Relation> {
    let n = eps.carrier();
    if n <= 3 {
        return all_relations(n);
    }
    let mut out: Vec<Relation> = eps.basis().to_vec();
    for _ in 0..extra {
        let density = rng.gen_range(0.05..0.5);
        out.push(random_relation(rng, n, density));
        let b = &eps.basis()[rng.gen_range(0..eps.basis().len())];
        let mut sub = Relation::empty(n);
        for (x, y) in b.pairs() {
            if rng.gen_bool(0.6) {
                sub.insert(x, y);
            }
        }
        out.push(sub);
    }
    out
}

fn closure_fixpoint(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let mut rng = ctx.rng("coarse-closure-fixpoint");
    let compare = |t: &mut Tally, n: usize, gens: Vec<u32>| {
        let rels: Vec<Relation> = gens.iter().map(|&c| bits_to_relation(n, c)).collect();
        let basis = match crate::coarse::basis_closure(n, &rels) {
            Ok(b) => b,
            Err(e) => {
                t.check(false, || json!({"carrier": n, "generators": gens_json(&rels), "error": e.to_string()}));
                return;
            }
        };
        let eps = CoarseStructure::from_basis(n, basis.clone());
        let oracle = brute_force_members(n, &gens);
        let agree = eps.as_ref().is_ok_and(|eps| {
            (0..oracle.len() as u32).all(|c| eps.is_member(&bits_to_relation(n, c)).unwrap() == oracle[c as usize])
        });
        t.check(agree && basis_conditions(n, &basis).all(), || {
            json!({"carrier": n, "generators": gens_json(&rels), "basis": gens_json(&basis)})
        });
    };
    for n in 1..=ctx.params.closure_points {
        let size = 1u32 << (n * n);
        for c in 0..size {
            compare(&mut t, n, vec![c]);
        }
        for _ in 0..ctx.params.coarse_structures * 3 {
            let gens = vec![rng.gen_range(0..size), rng.gen_range(0..size)];
            compare(&mut t, n, gens);
        }
    }
    t.detail("full_relation", CoarseStructure::generated(2, &[Relation::full(2)]).map(|e| e.basis().len()).ok());
    t
}

fn is_equivalence(r: &Relation) -> bool {
    let n = r.carrier();
    Relation::diagonal(n).is_subset(r) && r.inverse() == *r && r.compose(r).is_subset(r)
}

fn axioms(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let mut rng = ctx.rng("coarse-axioms-sample");
    let mut members = 0;
    for (gens, eps) in structures(ctx, "coarse-axioms", ctx.params.coarse_max_points) {
        let sample = sample_relations(&mut rng, &eps, 60);
        let report = check_axioms(&eps, &sample);
        members += report.members_checked;
        let top = eps.basis().iter().find(|b| eps.basis().iter().all(|c| c.is_subset(b)));
        let top_ok = top.is_some_and(is_equivalence);
        t.check(report.all() && top_ok, || {
            json!({"carrier": eps.carrier(), "generators": gens_json(&gens), "axioms": report, "top_is_equivalence": top_ok})
        });
    }
    t.detail("members_checked", members);
    t
}

fn bounded_sets(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let mut connected = 0;
    for (gens, eps) in structures(ctx, "bounded-set-equivalence", ctx.params.coarse_max_points) {
        let n = eps.carrier();
        if !eps.is_coarsely_connected() {
            // one direction holds everywhere: B×B = (B×{b})∘({b}×B)
            for b in 0..=full_set(n) {
                if eps.bounded_by_point(b) && !eps.is_bounded(b) {
                    t.check(false, || json!({"carrier": n, "generators": gens_json(&gens), "set": b}));
                }
            }
            continue;
        }
        connected += 1;
        for b in 0..=full_set(n) {
            t.check(eps.is_bounded(b) == eps.bounded_by_point(b), || {
                json!({"carrier": n, "generators": gens_json(&gens), "set": b})
            });
        }
        t.check(eps.is_proper_space(|_| true), || json!({"carrier": n, "generators": gens_json(&gens), "proper": false}));
    }
    t.detail("connected_structures", connected);
    t
}

fn intersection(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let mut rng = ctx.rng("coarse-intersection");
    for n in 1..=ctx.params.coarse_max_points.min(4) {
        for _ in 0..ctx.params.coarse_structures {
            let (ca, cb) = (rng.gen_bool(0.5), rng.gen_bool(0.5));
            let (ga, gb) = (random_generators(&mut rng, n, ca), random_generators(&mut rng, n, cb));
            let a = CoarseStructure::generated(n, &ga).expect("small carrier");
            let b = CoarseStructure::generated(n, &gb).expect("small carrier");
            let both = a.intersection(&b).expect("same carrier");
            let mut sample = sample_relations(&mut rng, &a, 100);
            sample.extend(b.basis().iter().cloned());
            let ok = sample.iter().all(|e| {
                both.is_member(e).unwrap() == (a.is_member(e).unwrap() && b.is_member(e).unwrap())
            }) && basis_conditions(n, both.basis()).all();
            t.check(ok, || json!({"carrier": n, "first": gens_json(&ga), "second": gens_json(&gb)}));
        }
    }
    t
}

fn random_map(rng: &mut impl Rng, source: usize, target: usize) -> CarrierMap {
    CarrierMap::new(target, (0..source).map(|_| rng.gen_range(0..target)).collect()).expect("in range")
}

fn bornologous_basis(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let mut rng = ctx.rng("bornologous-basis");
    let max = if ctx.params.coarse_max_points >= 5 { 4 } else { 3 };
    for n in 1..=max {
        for _ in 0..ctx.params.coarse_structures {
            let m = rng.gen_range(1..=max);
            let (ce, cz) = (rng.gen_bool(0.5), rng.gen_bool(0.5));
            let (ge, gz) = (random_generators(&mut rng, n, ce), random_generators(&mut rng, m, cz));
            let eps = CoarseStructure::generated(n, &ge).expect("small carrier");
            let zeta = CoarseStructure::generated(m, &gz).expect("small carrier");
            let f = random_map(&mut rng, n, m);
            let by_basis = is_bornologous(&f, &eps, &zeta);
            let by_members = is_bornologous_by_members(&f, &eps, &zeta);
            t.check(by_basis.is_ok() && by_basis == by_members, || {
                json!({"source": gens_json(&ge), "target": gens_json(&gz), "map": f.assignment})
            });
        }
    }
    t
}

fn subspace_embedding(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let mut rng = ctx.rng("subspace-embedding-sets");
    for (gens, eps) in structures(ctx, "subspace-embedding", ctx.params.coarse_max_points) {
        let n = eps.carrier();
        let set = rng.gen_range(1..=full_set(n));
        let (sub, incl) = eps.subspace(set);
        let coarse = is_coarse_map(&incl, &sub, &eps).unwrap_or(false);
        let sample = sample_relations(&mut rng, &sub, 60);
        let restricted = sample.iter().all(|e| sub.is_member(e).unwrap() == eps.is_member(&e.image(&incl)).unwrap());
        t.check(coarse && restricted, || {
            json!({"carrier": n, "generators": gens_json(&gens), "set": set, "coarse": coarse, "restricted": restricted})
        });
    }
    t
}

/// Preimage of `e` under `f × f`.
fn pull(f: &CarrierMap, e: &Relation) -> Relation {
    let mut r = Relation::empty(f.source);
    for a in 0..f.source {
        for b in 0..f.source {
            if e.contains(f.assignment[a], f.assignment[b]) {
                r.insert(a, b);
            }
        }
    }
    r
}

fn quasi_dense_equivalence(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let mut rng = ctx.rng("quasi-dense-equivalence");
    let mut attempts = 0;
    for m in 1..=ctx.params.coarse_max_points {
        for i in 0..ctx.params.coarse_structures {
            attempts += 1;
            let gz = random_generators(&mut rng, m, i % 2 == 0);
            let zeta = CoarseStructure::generated(m, &gz).expect("small carrier");
            let n = rng.gen_range(1..=ctx.params.coarse_max_points);
            let f = random_map(&mut rng, n, m);
            // the structure induced from ζ makes f a coarse embedding
            let pulled: Vec<Relation> = zeta.basis().iter().map(|e| pull(&f, e)).collect();
            let eps = CoarseStructure::generated(n, &pulled).expect("small carrier");
            let embedding = is_coarse_map(&f, &eps, &zeta).unwrap_or(false)
                && zeta.basis().iter().all(|e| eps.is_member(&pull(&f, e)).unwrap());
            let image = f.assignment.iter().fold(0u64, |acc, &y| acc | 1 << y);
            let Some(witness) = quasi_density_witness(image, &zeta).cloned() else {
                continue;
            };
            if !embedding {
                continue;
            }
            let payload = || json!({"target": gens_json(&gz), "map": f.assignment, "witness": rel_json(&witness)});
            let ok = quasi_inverse(&f, &witness)
                .and_then(|g| is_coarse_equivalence(&f, &g, &eps, &zeta))
                .is_ok_and(|r| r.is_ok());
            t.check(ok, payload);
        }
    }
    t.detail("attempts", attempts);
    t
}

fn metric_maps(_ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let radii = [4, 8, 16];
    let line = parse_graph("line").expect("builtin");
    let grid = parse_graph("grid").expect("builtin");
    let (l, g) = (line.as_ref(), grid.as_ref());
    let map = |s: &str| VertexMap::parse(s).expect("builtin map");
    let mut expect = |name: &str, got: crate::Result<Verdict>, want: Verdict| match got {
        Ok(Verdict::Inconclusive) => t.undecided(|| json!({"case": name})),
        Ok(v) => {
            t.check(v == want, || json!({"case": name, "verdict": v}));
        }
        Err(e) => {
            t.check(false, || json!({"case": name, "error": e.to_string()}));
        }
    };
    expect("double bornologous", metric::is_bornologous(l, l, &map("double"), &[1, 2, 3], &radii).map(|r| r.0), Verdict::Yes);
    expect("halve proper", metric::is_proper_map(l, l, &map("halve"), &[0, 2], &radii).map(|r| r.0), Verdict::Yes);
    expect("constant proper", metric::is_proper_map(l, l, &map("const:0"), &[0], &radii).map(|r| r.0), Verdict::No);
    let id = VertexMap::identity();
    expect("id close to shift", metric::closeness(l, l, &id, &map("shift:1"), &radii).map(|j| j.verdict), Verdict::Yes);
    expect("id close to double", metric::closeness(l, l, &id, &map("double"), &radii).map(|j| j.verdict), Verdict::No);
    let evens = |v: &Word| v.first() % 2 == 0;
    expect("evens quasi-dense", metric::is_quasi_dense(l, &evens, &radii).map(|j| j.verdict), Verdict::Yes);
    let origin = |v: &Word| v.as_slice().iter().all(|&x| x == 0);
    expect("origin quasi-dense", metric::is_quasi_dense(g, &origin, &radii).map(|j| j.verdict), Verdict::No);
    expect(
        "evens equivalent",
        metric::coarse_equivalence(l, l, &map("double"), &map("halve"), &[1, 2], &radii).map(|c| c.verdict),
        Verdict::Yes,
    );
    expect(
        "point not equivalent",
        metric::coarse_equivalence(l, l, &map("const:0"), &map("const:0"), &[1], &radii).map(|c| c.verdict),
        Verdict::No,
    );
    expect(
        "line proper",
        metric::is_proper_space(l, metric::MetricStructure::Bounded, 2, &radii).map(|j| j.verdict),
        Verdict::Yes,
    );
    expect(
        "maximal structure proper",
        metric::is_proper_space(l, metric::MetricStructure::Maximal, 2, &radii).map(|j| j.verdict),
        Verdict::No,
    );
    t
}
