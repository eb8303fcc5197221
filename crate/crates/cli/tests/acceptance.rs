//! The ten acceptance criteria. Each one prints a single PASS/FAIL line; the
//! test fails if any criterion does.
//!
//! Suites run once at the default budget through the library. Where the
//! criterion has a computable ground truth, an oracle written here (sharing no
//! code with the crate) is compared against it.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use persp_core::coarse::{CoarseStructure, Relation};
use persp_core::floyd::{floyd_distance, FloydChart, FloydFunction};
use persp_core::graph::{FiniteGraph, LocallyFiniteGraph};
use persp_core::manifest::{Budget, Manifest};
use persp_core::report::{Status, SuiteReport, VerifyReport};
use persp_core::verify;
use persp_core::word::Word;

struct Outcome {
    id: usize,
    name: &'static str,
    ok: bool,
    note: String,
}

fn suite<'a>(r: &'a VerifyReport, id: &str) -> &'a SuiteReport {
    r.suites.iter().find(|s| s.suite == id).unwrap_or_else(|| panic!("suite {id} missing"))
}

fn passed(r: &VerifyReport, ids: &[&str]) -> Result<(), String> {
    for id in ids {
        let s = suite(r, id);
        if s.status != Status::Pass {
            return Err(format!("{id}: {:?} ({} pass, {} fail, {} inconclusive)", s.status, s.pass, s.fail, s.inconclusive));
        }
    }
    Ok(())
}

fn rows<'a>(r: &'a VerifyReport, id: &str) -> &'a [Value] {
    suite(r, id).details["rows"].as_array().map(Vec::as_slice).unwrap_or(&[])
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

// ---- oracle: topologies as families of subsets closed under ∪ and ∩

fn count_topologies(n: usize) -> usize {
    let subsets = 1usize << n;
    let full = subsets - 1;
    let mut count = 0;
    // a family is a bitmask over the 2^n subsets
    for fam in 0u64..(1u64 << subsets) {
        let has = |s: usize| fam >> s & 1 == 1;
        if !has(0) || !has(full) {
            continue;
        }
        let members: Vec<usize> = (0..subsets).filter(|&s| has(s)).collect();
        if members.iter().all(|&a| members.iter().all(|&b| has(a | b) && has(a & b))) {
            count += 1;
        }
    }
    count
}

fn criterion_1(r: &VerifyReport) -> Result<String, String> {
    let oracle: Vec<usize> = (0..=4).map(count_topologies).collect();
    if oracle != [1, 1, 4, 29, 355] {
        return Err(format!("oracle counts {oracle:?}"));
    }
    let counts = suite(r, "topology-count").details["counts"].as_array().cloned().unwrap_or_default();
    for c in &counts {
        let n = c["points"].as_u64().unwrap() as usize;
        if c["topologies"].as_u64() != Some(oracle[n] as u64) {
            return Err(format!("suite reports {} topologies on {n} points", c["topologies"]));
        }
    }
    if counts.len() < 4 {
        return Err("topology counts stop below 3 points".into());
    }
    passed(
        r,
        &["topology-count", "glue-topology", "glue-continuity-criterion", "pullback-universal", "pullback-composition", "eight-lemma"],
    )?;
    let instances: u64 = ["glue-topology", "glue-continuity-criterion", "pullback-universal", "pullback-composition", "eight-lemma"]
        .iter()
        .map(|id| suite(r, id).instances)
        .sum();
    Ok(format!("29 topologies on 3 points, {instances} glueing instances, 0 counterexamples"))
}

// ---- oracle: minimum over all simple paths

fn simple_path_min(adj: &[Vec<usize>], weight: &dyn Fn(usize, usize) -> f64, s: usize, t: usize) -> f64 {
    fn go(adj: &[Vec<usize>], w: &dyn Fn(usize, usize) -> f64, v: usize, t: usize, seen: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if v == t {
            *best = best.min(acc);
            return;
        }
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                go(adj, w, u, t, seen, acc + w(v, u), best);
                seen[u] = false;
            }
        }
    }
    let mut seen = vec![false; adj.len()];
    seen[s] = true;
    let mut best = f64::INFINITY;
    go(adj, weight, s, t, &mut seen, 0.0, &mut best);
    best
}

fn bfs(adj: &[Vec<usize>], s: usize) -> Vec<usize> {
    let mut d = vec![usize::MAX; adj.len()];
    d[s] = 0;
    let mut q = VecDeque::from([s]);
    while let Some(v) = q.pop_front() {
        for &u in &adj[v] {
            if d[u] == usize::MAX {
                d[u] = d[v] + 1;
                q.push_back(u);
            }
        }
    }
    d
}

fn criterion_2(r: &VerifyReport) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut pairs = 0;
    for i in 0..20 {
        let n = rng.gen_range(3..=9);
        let mut edges: BTreeSet<(usize, usize)> = (1..n).map(|v| (rng.gen_range(0..v), v)).collect();
        for _ in 0..rng.gen_range(0..n) {
            let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if a != b {
                edges.insert((a.min(b), a.max(b)));
            }
        }
        let edges: Vec<(usize, usize)> = edges.into_iter().collect();
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let labels = (0..n).map(|i| format!("v{i}")).collect();
        let g: Arc<dyn LocallyFiniteGraph> = Arc::new(FiniteGraph::new(format!("random-{i}"), labels, &edges).unwrap());
        let depth = bfs(&adj, 0);
        let ecc = *depth.iter().max().unwrap() as u32;
        let fns = [
            (FloydFunction::Geometric { lambda: rng.gen_range(0.2..0.9) }),
            (FloydFunction::Power { a: rng.gen_range(1.2..3.0) }),
        ];
        for func in fns {
            let value = |k: usize| match func {
                FloydFunction::Geometric { lambda } => lambda.powi(k as i32),
                FloydFunction::Power { a } => (1.0 + k as f64).powf(-a),
                _ => unreachable!(),
            };
            let weight = |a: usize, b: usize| value(depth[a].min(depth[b]));
            let chart = FloydChart::new(g.clone(), func.clone()).with_basepoint(Word::new(&[0]));
            for s in 0..n {
                for t in s + 1..n {
                    let (got, _) = floyd_distance(&chart, &Word::new(&[s as i32]), &Word::new(&[t as i32]), ecc.max(1)).map_err(|e| e.to_string())?;
                    let want = simple_path_min(&adj, &weight, s, t);
                    if (got - want).abs() > 1e-12 {
                        return Err(format!("graph {i} {func}: δ({s},{t}) = {got}, simple paths give {want}"));
                    }
                    pairs += 1;
                }
            }
        }
    }
    passed(r, &["floyd-oracle"])?;
    let s = suite(r, "floyd-oracle");
    Ok(format!("{pairs} pairs against the local oracle, {} suite instances up to 12 vertices", s.instances))
}

fn criterion_3(r: &VerifyReport) -> Result<String, String> {
    passed(r, &["floyd-karlsson"])?;
    let rows = rows(r, "floyd-karlsson");
    let mut seen = BTreeSet::new();
    for chart in ["line-geom", "grid-geom", "tree3-geom"] {
        let mine: Vec<&Value> = rows.iter().filter(|x| x["chart"] == chart).collect();
        let radii: Vec<u64> = mine.iter().filter_map(|x| x["radius"].as_u64()).collect();
        if radii != [4, 6, 8] {
            return Err(format!("{chart}: radii {radii:?}"));
        }
        for x in &mine {
            let bound = 2f64.powi(3 - x["radius"].as_i64().unwrap() as i32);
            if f(&x["defect"]) > bound || (f(&x["bound"]) - bound).abs() > 1e-9 {
                return Err(format!("{chart}: {x}"));
            }
        }
        if !mine.windows(2).all(|w| f(&w[1]["defect"]) < f(&w[0]["defect"])) {
            return Err(format!("{chart}: defects not strictly decreasing"));
        }
        seen.insert(chart);
    }
    Ok(format!("{} charts at R = 4, 6, 8 under 2^(3-R)", seen.len()))
}

fn criterion_4(r: &VerifyReport) -> Result<String, String> {
    passed(r, &["floyd-perspectivity"])?;
    let mut checked = 0;
    for x in rows(r, "floyd-perspectivity") {
        let d: Vec<f64> = x["defects"].as_array().unwrap().iter().map(f).collect();
        if d.len() != 3 || !d.windows(2).all(|w| w[1] <= w[0]) || d[2] >= 1e-2 {
            return Err(format!("{} / {}: defects {d:?} at R = 4, 8, 12", x["chart"], x["entourage"]));
        }
        if !(f(&x["control"]) > 0.5) {
            return Err(format!("{} / {}: control {}", x["chart"], x["entourage"], x["control"]));
        }
        checked += 1;
    }
    if checked < 4 {
        return Err(format!("only {checked} chart/entourage rows"));
    }
    Ok(format!("{checked} chart/entourage rows decay below 1e-2, constant control stays above 0.5"))
}

fn criterion_5(r: &VerifyReport) -> Result<String, String> {
    passed(r, &["milnor-svarc"])?;
    let certs = suite(r, "milnor-svarc").details["certificates"].as_array().cloned().unwrap_or_default();
    for a in ["z-line", "z2-grid", "f2-tree"] {
        let c = certs.iter().find(|c| c["action"] == a).ok_or(format!("no certificate for {a}"))?;
        if c["radius"].as_u64() != Some(6) {
            return Err(format!("{a}: radius {}", c["radius"]));
        }
    }
    Ok("complete certificates at radius 6 for Z/line, Z^2/grid, F2/tree".into())
}

fn criterion_6(r: &VerifyReport) -> Result<String, String> {
    passed(r, &["pullback-agreement"])?;
    let rows = rows(r, "pullback-agreement");
    for a in ["z-line", "z2-grid", "f2-tree"] {
        let mine: Vec<&Value> = rows.iter().filter(|x| x["action"] == a).collect();
        if mine.len() < 2 {
            return Err(format!("{a}: {} radii", mine.len()));
        }
        for x in mine {
            let resolved = x["rays"].as_u64().unwrap() - x["unresolved"].as_u64().unwrap();
            if resolved < 10 || x["mismatches"].as_u64() != Some(0) {
                return Err(format!("{a}: {x}"));
            }
        }
    }
    Ok("≥10 resolved rays per pair at two radii, 0 mismatches".into())
}

fn criterion_7(r: &VerifyReport) -> Result<String, String> {
    passed(r, &["floyd-qi-transfer"])?;
    let d = &suite(r, "floyd-qi-transfer").details;
    for dir in ["forward", "backward"] {
        if d[dir]["extension_holds"] != true || d[dir]["extension"]["analytic_ok"] != true {
            return Err(format!("{dir}: {}", d[dir]));
        }
    }
    let maps = d["maps"].as_array().cloned().unwrap_or_default();
    for m in &maps {
        if m["there"] != serde_json::json!([0, 1]) && m["there"] != serde_json::json!([1, 0]) {
            return Err(format!("induced map {m}"));
        }
    }
    Ok(format!(
        "both directions analytic with their own α; induced maps bijective and mutually inverse at {} radius pairs",
        maps.len()
    ))
}

fn criterion_8(r: &VerifyReport) -> Result<String, String> {
    passed(r, &["hyperbolic-accessibility", "hyperbolic-projection"])?;
    let charts: HashSet<&str> = rows(r, "hyperbolic-accessibility").iter().filter_map(|x| x["chart"].as_str()).collect();
    if !charts.contains("line-geom") || !charts.contains("tree3-geom") {
        return Err(format!("charts {charts:?}"));
    }
    Ok("every cluster reached from two basepoints; projections surjective, no split classes".into())
}

// ---- oracle: closure over the whole relation lattice, relations as bitmasks

fn closure_members(n: usize, gens: &[u32]) -> HashSet<u32> {
    let bit = |a: usize, b: usize| 1u32 << (a * n + b);
    let diag: u32 = (0..n).map(|i| bit(i, i)).sum();
    let inverse = |r: u32| {
        let mut out = 0;
        for a in 0..n {
            for b in 0..n {
                if r & bit(a, b) != 0 {
                    out |= bit(b, a);
                }
            }
        }
        out
    };
    let compose = |r: u32, s: u32| {
        let mut out = 0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if r & bit(a, b) != 0 && s & bit(b, c) != 0 {
                        out |= bit(a, c);
                    }
                }
            }
        }
        out
    };
    let mut tops: HashSet<u32> = gens.iter().copied().chain([diag]).collect();
    loop {
        let list: Vec<u32> = tops.iter().copied().collect();
        let mut grown = tops.clone();
        for &r in &list {
            grown.insert(inverse(r));
            for &s in &list {
                grown.insert(r | s);
                grown.insert(compose(r, s));
            }
        }
        if grown.len() == tops.len() {
            break;
        }
        tops = grown;
    }
    // downward closure
    (0..1u32 << (n * n)).filter(|&r| tops.iter().any(|&t| r & t == r)).collect()
}

fn criterion_9(r: &VerifyReport) -> Result<String, String> {
    passed(r, &["coarse-axioms", "bounded-set-equivalence", "coarse-closure-fixpoint"])?;
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0a5e);
    let mut structures = 0;
    for n in 1..=3usize {
        for _ in 0..12 {
            let gens: Vec<u32> = (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(0..1u32 << (n * n))).collect();
            let rel = |mask: u32| {
                let pairs: Vec<(usize, usize)> =
                    (0..n * n).filter(|k| mask >> k & 1 == 1).map(|k| (k / n, k % n)).collect();
                Relation::from_pairs(n, &pairs).unwrap()
            };
            let eps = CoarseStructure::generated(n, &gens.iter().map(|&g| rel(g)).collect::<Vec<_>>()).map_err(|e| e.to_string())?;
            let members = closure_members(n, &gens);
            for mask in 0..1u32 << (n * n) {
                if eps.is_member(&rel(mask)).map_err(|e| e.to_string())? != members.contains(&mask) {
                    return Err(format!("n = {n}, generators {gens:?}: relation {mask:#b} disagrees"));
                }
            }
            structures += 1;
        }
    }
    let axioms = suite(r, "coarse-axioms").instances;
    Ok(format!("{structures} structures match the lattice closure; {axioms} axiom instances up to 5 points"))
}

fn criterion_10() -> Result<String, String> {
    let bin = env!("CARGO_BIN_EXE_persp");
    let base = std::env::temp_dir().join(format!("persp-acceptance-{}", std::process::id()));
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let dir: PathBuf = base.join(run);
        let out = Command::new(bin)
            .args(["verify", "all", "--budget", "tiny"])
            .env("PERSP_OUT", &dir)
            .output()
            .map_err(|e| e.to_string())?;
        if out.status.code() != Some(0) {
            return Err(format!("run {run} exited with {:?}", out.status.code()));
        }
        let file = std::fs::read(dir.join("report.json")).map_err(|e| e.to_string())?;
        if file != out.stdout {
            return Err("report.json differs from stdout".into());
        }
        outputs.push(file);
    }
    let _ = std::fs::remove_dir_all(&base);
    if outputs[0] != outputs[1] {
        return Err("two runs differ".into());
    }
    Ok(format!("two runs, {} identical bytes", outputs[0].len()))
}

#[test]
fn acceptance() {
    let resolved = Manifest::default().resolve().unwrap();
    let (report, _) = verify::run(&resolved, Budget::Default, "all").unwrap();

    let checks: [(&'static str, Box<dyn Fn() -> Result<String, String> + '_>); 10] = [
        ("exhaustive glueing suite on spaces of at most 3 points", Box::new(|| criterion_1(&report))),
        ("Floyd distance equals the simple-path minimum", Box::new(|| criterion_2(&report))),
        ("Karlsson bound and strict decrease", Box::new(|| criterion_3(&report))),
        ("perspectivity decay with non-Floyd control", Box::new(|| criterion_4(&report))),
        ("coarse orbit-map certificates", Box::new(|| criterion_5(&report))),
        ("pullback agreement along group rays", Box::new(|| criterion_6(&report))),
        ("Floyd quasi-isometry transfer", Box::new(|| criterion_7(&report))),
        ("hyperbolic accessibility and projection", Box::new(|| criterion_8(&report))),
        ("coarse axioms and lattice closure", Box::new(|| criterion_9(&report))),
        ("byte-identical reports", Box::new(criterion_10)),
    ];
    let outcomes: Vec<Outcome> = checks
        .iter()
        .enumerate()
        .map(|(i, (name, run))| {
            let (ok, note) = match run() {
                Ok(n) => (true, n),
                Err(e) => (false, e),
            };
            Outcome { id: i + 1, name, ok, note }
        })
        .collect();
    println!();
    for o in &outcomes {
        println!("criterion {:2} {} {}: {}", o.id, if o.ok { "PASS" } else { "FAIL" }, o.name, o.note);
    }
    let failed: Vec<usize> = outcomes.iter().filter(|o| !o.ok).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
