use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Value};

use super::{Context, SuiteDef};
use crate::error::Error;
use crate::report::Tally;
use crate::topo::{
    bits, check_eight_lemma, check_pullback_universal, composition_witness, enumerate_admissible_maps,
    enumerate_continuous_maps, enumerate_topologies, glue, glued_identity_continuous, pullback_sum_continuous,
    AdmissibleMap, AdmissibleMapJson, FinSpace, FinSpaceJson, Mask, PointMap,
};

pub(super) fn suites() -> Vec<SuiteDef> {
    vec![
        SuiteDef {
            id: "topology-count",
            group: "topo",
            about: "enumerated topologies match an independent count of lattices of closed sets",
            run: topology_count,
        },
        SuiteDef {
            id: "glue-topology",
            group: "topo",
            about: "every glueing along an admissible map is a topology with the stated closed sets",
            run: glue_topology,
        },
        SuiteDef {
            id: "glue-continuity-criterion",
            group: "topo",
            about: "id between two glueings is continuous iff the maps are pointwise included",
            run: continuity_criterion,
        },
        SuiteDef {
            id: "pullback-universal",
            group: "topo",
            about: "pullbacks make the sum map continuous and are universal for that",
            run: pullback_universal,
        },
        SuiteDef {
            id: "pullback-composition",
            group: "topo",
            about: "pulling back along a composite is below the iterated pullback",
            run: pullback_composition,
        },
        SuiteDef {
            id: "eight-lemma",
            group: "topo",
            about: "every arrow of the eight-lemma diagram is continuous",
            run: eight_lemma,
        },
    ]
}

const KNOWN_COUNTS: [usize; 5] = [1, 1, 4, 29, 355];
const KNOWN_CLASSES: [usize; 5] = [1, 1, 3, 9, 33];

/// Families of subsets of `0..n` containing `∅` and the whole set and closed
/// under union and intersection, counted by direct search.
pub fn brute_force_topology_count(n: usize) -> usize {
    let subsets = 1usize << n;
    let full = subsets - 1;
    // ∅ and the whole set are forced; choose the rest freely
    let free: Vec<usize> = (1..full).collect();
    let mut count = 0;
    for choice in 0u64..1 << free.len() {
        let mut member = vec![false; subsets];
        member[0] = true;
        member[full] = true;
        for (k, &s) in free.iter().enumerate() {
            member[s] = choice >> k & 1 == 1;
        }
        let closed = (0..subsets).all(|a| {
            !member[a] || (0..subsets).all(|b| !member[b] || (member[a | b] && member[a & b]))
        });
        count += usize::from(closed);
    }
    if n == 0 {
        1
    } else {
        count
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..n {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn canonical_form(space: &FinSpace) -> Vec<Mask> {
    permutations(space.len())
        .iter()
        .map(|p| {
            let mut v: Vec<Mask> = space
                .closed_sets()
                .iter()
                .map(|&c| bits(c).fold(0, |acc, i| acc | 1 << p[i]))
                .collect();
            v.sort_unstable();
            v
        })
        .min()
        .unwrap_or_default()
}

/// One topology per homeomorphism class on `0..=max` points.
fn representatives(max: usize) -> Vec<FinSpace> {
    let mut out = Vec::new();
    for n in 0..=max {
        let mut seen = BTreeSet::new();
        for s in enumerate_topologies(n).expect("small enumeration") {
            if seen.insert(canonical_form(&s)) {
                out.push(s);
            }
        }
    }
    out
}

fn labelled(max: usize) -> Vec<FinSpace> {
    (1..=max).flat_map(|n| enumerate_topologies(n).expect("small enumeration")).collect()
}

/// Distinct admissible maps, as functions.
fn admissible(x: &FinSpace, y: &FinSpace) -> Vec<AdmissibleMap> {
    let mut seen = BTreeSet::new();
    enumerate_admissible_maps(x, y)
        .expect("small enumeration")
        .into_iter()
        .filter(|f| seen.insert(f.canonical()))
        .collect()
}

fn continuous(x: &FinSpace, y: &FinSpace) -> Vec<PointMap> {
    enumerate_continuous_maps(x, y).expect("small enumeration")
}

fn small_spaces(budget_points: usize) -> Vec<FinSpace> {
    let point = FinSpace::discrete(vec!["0".into()]);
    let sierpinski = FinSpace::new(vec!["0".into(), "1".into()], [0, 0b10, 0b11]).expect("Sierpinski space");
    if budget_points < 3 {
        return vec![point, sierpinski];
    }
    let two = vec!["0".to_string(), "1".to_string()];
    vec![point, FinSpace::discrete(two.clone()), FinSpace::indiscrete(two), sierpinski]
}

fn space_json(s: &FinSpace) -> Value {
    json!(FinSpaceJson::from(s))
}

fn map_json(f: &AdmissibleMap) -> Value {
    json!(AdmissibleMapJson::from(f))
}

fn point_map_json(p: &PointMap) -> Value {
    json!({"source": space_json(p.source()), "target": space_json(p.target()), "assignment": p.assignment()})
}

fn random_admissible(rng: &mut impl Rng, x: &FinSpace, y: &FinSpace) -> AdmissibleMap {
    let choices = y.closed_sets();
    AdmissibleMap::from_fn(x, y, |_| choices[rng.gen_range(0..choices.len())]).expect("closed values")
}

fn topology_count(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let mut rows = Vec::new();
    for n in 0..=ctx.params.topo_count_points {
        let spaces = enumerate_topologies(n).expect("small enumeration");
        let brute = brute_force_topology_count(n);
        let classes = spaces.iter().map(canonical_form).collect::<BTreeSet<_>>().len();
        let ok = spaces.len() == brute && brute == KNOWN_COUNTS[n] && classes == KNOWN_CLASSES[n];
        t.check(ok, || json!({"points": n, "enumerated": spaces.len(), "brute_force": brute, "classes": classes}));
        rows.push(json!({"points": n, "topologies": spaces.len(), "classes": classes}));
    }
    t.detail("counts", rows);
    t
}

fn glue_topology(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let reps = representatives(ctx.params.topo_points);
    for x in &reps {
        for y in &reps {
            let (x, y) = (x.relabel("x"), y.relabel("y"));
            for f in admissible(&x, &y) {
                let glued = match glue(&x, &y, &f) {
                    Ok(g) => g,
                    Err(e) => {
                        t.check(false, || json!({"map": map_json(&f), "error": e.to_string()}));
                        continue;
                    }
                };
                let (bx, by) = (glued.base_mask(), glued.boundary_mask());
                let shift = x.len();
                let literal: BTreeSet<Mask> = (0..=(bx | by))
                    .filter(|&a| {
                        let (ax, ay) = (a & bx, (a & by) >> shift);
                        x.is_closed(ax) && y.is_closed(ay) && f.eval(ax) & !ay == 0
                    })
                    .collect();
                let got: BTreeSet<Mask> = glued.closed_sets().iter().copied().collect();
                let lattice = got.contains(&0)
                    && got.contains(&(bx | by))
                    && got.iter().all(|a| got.iter().all(|b| got.contains(&(a | b)) && got.contains(&(a & b))));
                t.check(lattice && got == literal, || json!({"map": map_json(&f)}));
            }
        }
    }
    t.detail("spaces", reps.len());
    t
}

fn continuity_criterion(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let reps = representatives(ctx.params.topo_points);
    let mut pairs_continuous = 0u64;
    for x in &reps {
        for y in &reps {
            let (x, y) = (x.relabel("x"), y.relabel("y"));
            let maps = admissible(&x, &y);
            let glued: Vec<_> = maps.iter().map(|f| glue(&x, &y, f).expect("glueing")).collect();
            for (f, gf) in maps.iter().zip(&glued) {
                for (g, gg) in maps.iter().zip(&glued) {
                    let cont = glued_identity_continuous(gf, gg).expect("same carrier");
                    pairs_continuous += u64::from(cont);
                    t.check(cont == f.is_below(g), || json!({"f": map_json(f), "g": map_json(g), "continuous": cont}));
                }
            }
        }
    }
    t.detail("continuous_pairs", pairs_continuous);
    t
}

/// `(f, π, ϖ)` with the base spaces `X, W` and sources `Y, Z`.
struct Square {
    f: AdmissibleMap,
    pi: PointMap,
    varpi: PointMap,
}

fn squares(x: &FinSpace, w: &FinSpace, y: &FinSpace, z: &FinSpace) -> Vec<Square> {
    let (pis, varpis) = (continuous(y, x), continuous(z, w));
    let mut out = Vec::new();
    for f in admissible(x, w) {
        for pi in &pis {
            for varpi in &varpis {
                out.push(Square { f: f.clone(), pi: pi.clone(), varpi: varpi.clone() });
            }
        }
    }
    out
}

fn square_json(s: &Square) -> Value {
    json!({"f": map_json(&s.f), "pi": point_map_json(&s.pi), "varpi": point_map_json(&s.varpi)})
}

fn named(spaces: &[FinSpace], prefixes: &[&str]) -> Vec<Vec<FinSpace>> {
    // every assignment of a space to each prefix
    let mut out: Vec<Vec<FinSpace>> = vec![vec![]];
    for p in prefixes {
        out = out
            .into_iter()
            .flat_map(|acc| {
                spaces.iter().map(move |s| {
                    let mut next = acc.clone();
                    next.push(s.relabel(p));
                    next
                })
            })
            .collect();
    }
    out
}

fn random_named(rng: &mut impl Rng, pool: &[FinSpace], prefixes: &[&str]) -> Vec<FinSpace> {
    prefixes.iter().map(|p| pool.choose(rng).expect("non-empty pool").relabel(p)).collect()
}

fn universal_instance(t: &mut Tally, s: &Square, fprime: &AdmissibleMap, skipped: &mut u64) {
    match check_pullback_universal(&s.f, &s.pi, &s.varpi, fprime) {
        Ok(ok) => {
            t.check(ok, || json!({"square": square_json(s), "fprime": map_json(fprime)}));
        }
        Err(Error::Precondition(_)) => *skipped += 1,
        Err(e) => {
            t.check(false, || json!({"square": square_json(s), "fprime": map_json(fprime), "error": e.to_string()}));
        }
    }
}

fn pullback_universal(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let mut skipped = 0;
    for sp in named(&small_spaces(ctx.params.topo_points), &["x", "w", "y", "z"]) {
        let (x, w, y, z) = (&sp[0], &sp[1], &sp[2], &sp[3]);
        let fprimes = admissible(y, z);
        for s in squares(x, w, y, z) {
            let sum = pullback_sum_continuous(&s.f, &s.pi, &s.varpi);
            t.check(sum == Ok(true), || json!({"square": square_json(&s), "sum_continuous": format!("{sum:?}")}));
            for fp in &fprimes {
                universal_instance(&mut t, &s, fp, &mut skipped);
            }
        }
    }
    let exhaustive = t.pass + t.fail;
    let mut rng = ctx.rng("pullback-universal");
    let pool = labelled(3);
    for _ in 0..ctx.params.topo_random {
        let sp = random_named(&mut rng, &pool, &["x", "w", "y", "z"]);
        let (pis, varpis) = (continuous(&sp[2], &sp[0]), continuous(&sp[3], &sp[1]));
        let s = Square {
            f: random_admissible(&mut rng, &sp[0], &sp[1]),
            pi: pis.choose(&mut rng).expect("constant maps exist").clone(),
            varpi: varpis.choose(&mut rng).expect("constant maps exist").clone(),
        };
        let sum = pullback_sum_continuous(&s.f, &s.pi, &s.varpi);
        t.check(sum == Ok(true), || json!({"square": square_json(&s), "sum_continuous": format!("{sum:?}")}));
        let fp = random_admissible(&mut rng, &sp[2], &sp[3]);
        universal_instance(&mut t, &s, &fp, &mut skipped);
    }
    t.detail("exhaustive_instances", exhaustive);
    t.detail("precondition_failed", skipped);
    t
}

fn composition_instance(t: &mut Tally, s: &Square, rho: &PointMap, varrho: &PointMap, strict: &mut u64) {
    match composition_witness(&s.f, &s.pi, &s.varpi, rho, varrho) {
        Ok((holds, witness)) => {
            *strict += u64::from(witness.is_some());
            t.check(holds, || {
                json!({"square": square_json(s), "rho": point_map_json(rho), "varrho": point_map_json(varrho)})
            });
        }
        Err(e) => {
            t.check(false, || json!({"square": square_json(s), "error": e.to_string()}));
        }
    }
}

fn pullback_composition(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let mut strict = 0;
    let spaces = small_spaces(2);
    for sp in named(&spaces, &["x", "w", "y", "z", "u", "v"]) {
        let (rhos, varrhos) = (continuous(&sp[4], &sp[2]), continuous(&sp[5], &sp[3]));
        for s in squares(&sp[0], &sp[1], &sp[2], &sp[3]) {
            for rho in &rhos {
                for varrho in &varrhos {
                    composition_instance(&mut t, &s, rho, varrho, &mut strict);
                }
            }
        }
    }
    let mut rng = ctx.rng("pullback-composition");
    let pool = labelled(3);
    for _ in 0..ctx.params.topo_random {
        let sp = random_named(&mut rng, &pool, &["x", "w", "y", "z", "u", "v"]);
        let pick = |rng: &mut _, a: &FinSpace, b: &FinSpace| continuous(a, b).choose(rng).expect("constant maps exist").clone();
        let s = Square {
            f: random_admissible(&mut rng, &sp[0], &sp[1]),
            pi: pick(&mut rng, &sp[2], &sp[0]),
            varpi: pick(&mut rng, &sp[3], &sp[1]),
        };
        let (rho, varrho) = (pick(&mut rng, &sp[4], &sp[2]), pick(&mut rng, &sp[5], &sp[3]));
        composition_instance(&mut t, &s, &rho, &varrho, &mut strict);
    }
    t.detail("strict_inclusions", strict);
    t
}

fn eight_lemma(ctx: &Context) -> Tally {
    let mut t = Tally::new();
    let instance = |t: &mut Tally, s: &Square| {
        let r = check_eight_lemma(&s.f, &s.pi, &s.varpi);
        t.check(r == Ok(true), || json!({"square": square_json(s), "result": format!("{r:?}")}));
    };
    for sp in named(&small_spaces(ctx.params.topo_points), &["x", "w", "y", "z"]) {
        for s in squares(&sp[0], &sp[1], &sp[2], &sp[3]) {
            instance(&mut t, &s);
        }
    }
    let mut rng = ctx.rng("eight-lemma");
    let pool = labelled(3);
    for _ in 0..ctx.params.topo_random / 4 {
        let sp = random_named(&mut rng, &pool, &["x", "w", "y", "z"]);
        let s = Square {
            f: random_admissible(&mut rng, &sp[0], &sp[1]),
            pi: continuous(&sp[2], &sp[0]).choose(&mut rng).expect("constant maps exist").clone(),
            varpi: continuous(&sp[3], &sp[1]).choose(&mut rng).expect("constant maps exist").clone(),
        };
        instance(&mut t, &s);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_agree() {
        for n in 0..=3 {
            assert_eq!(brute_force_topology_count(n), KNOWN_COUNTS[n]);
        }
        assert_eq!(representatives(3).len(), 1 + 1 + 3 + 9);
        assert_eq!(permutations(3).len(), 6);
    }
}
