//! Verification suites. Each suite checks one claim over a family of
//! instances and reports pass/fail/inconclusive counts with counterexamples.

mod action;
mod coarse;
mod floyd;
mod hyperbolic;
mod topo;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::manifest::{Budget, Resolved};
use crate::report::{SuiteReport, Tally, VerifyReport};

pub use floyd::simple_path_oracle;
pub use topo::brute_force_topology_count;

/// Sizes of the instance families for each budget.
#[derive(Clone, Debug)]
pub struct Params {
    /// Largest space (up to homeomorphism) in the exhaustive glueing suites.
    pub topo_points: usize,
    /// Largest `n` for the topology count cross-check.
    pub topo_count_points: usize,
    /// Seeded instances over all spaces of at most 3 points.
    pub topo_random: usize,
    pub coarse_max_points: usize,
    pub coarse_structures: usize,
    pub closure_points: usize,
    pub floyd_graphs: usize,
    pub floyd_max_vertices: usize,
    pub karlsson_radii: Vec<u32>,
    pub karlsson_pairs: usize,
    pub perspectivity_radii: Vec<u32>,
    pub msvarc_radius: u32,
    pub pullback_radii: Vec<u32>,
    pub rays_per_action: usize,
    pub ray_budget: usize,
}

impl Params {
    pub fn for_budget(budget: Budget) -> Self {
        match budget {
            Budget::Tiny => Params {
                topo_points: 2,
                topo_count_points: 3,
                topo_random: 40,
                coarse_max_points: 4,
                coarse_structures: 8,
                closure_points: 2,
                floyd_graphs: 10,
                floyd_max_vertices: 9,
                karlsson_radii: vec![4, 6, 8],
                karlsson_pairs: 60,
                perspectivity_radii: vec![4, 6, 8],
                msvarc_radius: 4,
                pullback_radii: vec![4, 5],
                rays_per_action: 10,
                ray_budget: 20_000,
            },
            Budget::Default => Params {
                topo_points: 3,
                topo_count_points: 3,
                topo_random: 400,
                coarse_max_points: 5,
                coarse_structures: 40,
                closure_points: 3,
                floyd_graphs: 50,
                floyd_max_vertices: 12,
                karlsson_radii: vec![4, 6, 8],
                karlsson_pairs: 300,
                perspectivity_radii: vec![4, 8, 12],
                msvarc_radius: 6,
                pullback_radii: vec![4, 6],
                rays_per_action: 12,
                ray_budget: 200_000,
            },
            Budget::Full => Params {
                topo_points: 3,
                topo_count_points: 4,
                topo_random: 3000,
                coarse_max_points: 5,
                coarse_structures: 150,
                closure_points: 3,
                floyd_graphs: 150,
                floyd_max_vertices: 12,
                karlsson_radii: vec![4, 6, 8, 10],
                karlsson_pairs: 1000,
                perspectivity_radii: vec![4, 8, 12],
                msvarc_radius: 6,
                pullback_radii: vec![4, 6],
                rays_per_action: 24,
                ray_budget: 1_000_000,
            },
        }
    }

    fn with_overrides(mut self, r: &Resolved) -> Self {
        let o = &r.manifest.overrides;
        if let Some(v) = &o.karlsson_radii {
            self.karlsson_radii = v.clone();
        }
        if let Some(v) = &o.perspectivity_radii {
            self.perspectivity_radii = v.clone();
        }
        if let Some(v) = &o.pullback_radii {
            self.pullback_radii = v.clone();
        }
        if let Some(v) = o.msvarc_radius {
            self.msvarc_radius = v;
        }
        self
    }
}

pub struct Context<'a> {
    pub resolved: &'a Resolved,
    pub params: Params,
    seed: u64,
}

impl Context<'_> {
    /// A generator seeded from the manifest seed and the suite id, so results
    /// do not depend on the order suites run in.
    pub fn rng(&self, suite: &str) -> ChaCha8Rng {
        // FNV-1a over the id
        let h = suite.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x100_0000_01b3));
        ChaCha8Rng::seed_from_u64(self.seed ^ h)
    }
}

pub struct SuiteDef {
    pub id: &'static str,
    pub group: &'static str,
    pub about: &'static str,
    run: fn(&Context) -> Tally,
}

pub const GROUPS: [&str; 5] = ["topo", "coarse", "floyd", "action", "hyperbolic"];

pub fn suites() -> Vec<SuiteDef> {
    let mut all = Vec::new();
    all.extend(topo::suites());
    all.extend(coarse::suites());
    all.extend(floyd::suites());
    all.extend(action::suites());
    all.extend(hyperbolic::suites());
    all
}

/// Resolves `all`, a group name, a suite id, or a comma list of those.
pub fn select(selection: &str) -> Result<Vec<SuiteDef>> {
    let all = suites();
    let wanted: Vec<&str> = selection.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if wanted.is_empty() {
        return Err(Error::Parse("empty suite selection".into()));
    }
    for w in &wanted {
        if *w != "all" && !GROUPS.contains(w) && !all.iter().any(|s| s.id == *w) {
            return Err(Error::Parse(format!("unknown suite or group `{w}`")));
        }
    }
    Ok(all
        .into_iter()
        .filter(|s| wanted.iter().any(|w| *w == "all" || *w == s.group || *w == s.id))
        .collect())
}

pub fn run_suite(def: &SuiteDef, ctx: &Context) -> SuiteReport {
    (def.run)(ctx).finish(def.id, def.group)
}

/// Runs the selected suites (in parallel when enabled) and returns the report
/// together with per-suite wall-clock seconds.
pub fn run(resolved: &Resolved, budget: Budget, selection: &str) -> Result<(VerifyReport, Vec<(String, f64)>)> {
    let defs = select(selection)?;
    let ctx = Context {
        resolved,
        params: Params::for_budget(budget).with_overrides(resolved),
        seed: resolved.manifest.seed,
    };
    let timed = |d: &SuiteDef| {
        let start = Instant::now();
        let r = run_suite(d, &ctx);
        (r, start.elapsed().as_secs_f64())
    };
    #[cfg(feature = "parallel")]
    let results: Vec<(SuiteReport, f64)> = {
        use rayon::prelude::*;
        defs.par_iter().map(timed).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<(SuiteReport, f64)> = defs.iter().map(timed).collect();
    let mut timings: Vec<(String, f64)> = results.iter().map(|(r, t)| (r.suite.clone(), *t)).collect();
    timings.sort_by(|a, b| a.0.cmp(&b.0));
    let reports = results.into_iter().map(|(r, _)| r).collect();
    Ok((VerifyReport::new(resolved.manifest.seed, &budget.to_string(), selection, reports), timings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::Manifest;

    #[test]
    fn selection() {
        let all = select("all").unwrap();
        let mut ids: Vec<&str> = all.iter().map(|s| s.id).collect();
        let n = ids.len();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), n, "suite ids are unique");
        for g in GROUPS {
            assert!(!select(g).unwrap().is_empty(), "{g}");
        }
        assert_eq!(select("topology-count,floyd").unwrap().len(), 1 + select("floyd").unwrap().len());
        assert!(select("nope").is_err());
        assert!(select("").is_err());
    }

    #[test]
    fn suite_rngs_are_independent_of_order() {
        let r = Manifest::default().resolve().unwrap();
        let ctx = Context { resolved: &r, params: Params::for_budget(Budget::Tiny), seed: 7 };
        use rand::Rng;
        let a: u64 = ctx.rng("x").gen();
        let _: u64 = ctx.rng("y").gen();
        assert_eq!(a, ctx.rng("x").gen::<u64>());
    }
}
