use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use persp_core::action::{
    compare_pullbacks, group_perspectivity_defect, group_rays, milnor_svarc_map, GraphAction, Saturation,
};
use persp_core::coarse::{
    basis_closure, is_coarse_equivalence, CarrierMap, CoarseStructure, Relation, RelationJson,
};
use persp_core::error::Error;
use persp_core::floyd::{
    boundary_clusters, distance_table, floyd_distance, karlsson_bound, karlsson_defect, sample_avoiding_geodesics,
    FloydChart, FloydFunction,
};
use persp_core::graph::{parse_graph, Ball, FiniteGraph, LocallyFiniteGraph};
use persp_core::hyperbolic::{delta_estimate, qi_ray_transport, ray_classes, rays_from, sphere_rays};
use persp_core::manifest::{Budget, Manifest, Resolved};
use persp_core::maps::VertexMap;
use persp_core::report::{num, r6, round_floats};
use persp_core::svg::point_cloud;
use persp_core::verify;
use persp_core::word::Word;

/// Environment variable naming the artifact directory.
const OUT_ENV: &str = "PERSP_OUT";

#[derive(Parser)]
#[command(name = "persp", version, about = "Glueings, coarse structures, Floyd charts and group actions on graphs")]
struct Cli {
    /// JSON manifest; the built-in default is used when absent.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Overrides the manifest seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Artifact directory (default: $PERSP_OUT). Without one, nothing is written.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Materialises a ball of a graph as an adjacency list.
    #[command(subcommand)]
    Graph(GraphCmd),
    /// Floyd distances, boundary clusters and the Karlsson defect.
    #[command(subcommand)]
    Floyd(FloydCmd),
    /// Coarse structure closure and equivalence certificates.
    #[command(subcommand)]
    Coarse(CoarseCmd),
    /// Group actions on graphs.
    #[command(subcommand)]
    Action(ActionCmd),
    /// Hyperbolicity estimates, ray classes and transport.
    #[command(subcommand)]
    Hyperbolic(HyperbolicCmd),
    /// Prints the manifest in use, after --seed.
    Manifest,
    /// Runs verification suites: `all`, a group, a suite id, or a comma list.
    Verify {
        /// Defaults to the manifest's `suites`, or `all` when that is empty.
        selection: Option<String>,
        /// tiny, default or full; defaults to the manifest's `budget`.
        #[arg(long)]
        budget: Option<String>,
        /// Lists the suites instead of running them.
        #[arg(long)]
        list: bool,
    },
}

#[derive(Subcommand)]
enum GraphCmd {
    /// Writes a ball (or a whole finite graph) in adjacency-list form.
    Build {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        radius: Option<u32>,
    },
}

#[derive(Args)]
struct ChartArgs {
    /// Manifest graph name or graph spec (line, grid, tree:3, cayley:free:2, file:path, ...).
    #[arg(long)]
    graph: String,
    /// Manifest Floyd function name or spec (geom:0.5, pow:2, const:1).
    #[arg(long = "f", default_value = "geom:0.5")]
    f: String,
    /// Basepoint; defaults to the graph's own.
    #[arg(long)]
    base: Option<String>,
}

#[derive(Subcommand)]
enum FloydCmd {
    /// Truncated distance between two vertices, or the CSV table of the ball.
    Dist {
        #[command(flatten)]
        chart: ChartArgs,
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        y: Option<String>,
        #[arg(long = "R")]
        radius: u32,
    },
    /// Boundary clusters at depth R; optionally an SVG point cloud.
    Clusters {
        #[command(flatten)]
        chart: ChartArgs,
        #[arg(long = "R")]
        radius: u32,
        #[arg(long)]
        threshold: Option<f64>,
        /// Also write an SVG of the ball to this file (inside the artifact directory if relative).
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Karlsson defects against the analytic bound, as CSV.
    Karlsson {
        #[command(flatten)]
        chart: ChartArgs,
        #[arg(long, value_delimiter = ',', default_value = "4,6,8")]
        radii: Vec<u32>,
        #[arg(long, default_value_t = 300)]
        pairs: usize,
    },
}

#[derive(Subcommand)]
enum CoarseCmd {
    /// Basis of the structure generated by relations in a JSON file
    /// (`[{"carrier": n, "pairs": [[a, b], ...]}, ...]`).
    Closure { generators: PathBuf },
    /// Coarse-equivalence certificate for maps given in a JSON file
    /// (`{"eps": [...], "zeta": [...], "f": [...], "g": [...]}`).
    Certify { input: PathBuf },
}

#[derive(Args)]
struct ActionArgs {
    /// Manifest action name.
    #[arg(long)]
    action: String,
}

#[derive(Subcommand)]
enum ActionCmd {
    /// Pairs of Sat(ball(x0, 1)) inside ball(x0, radius), as CSV.
    Sat {
        #[command(flatten)]
        action: ActionArgs,
        #[arg(long, default_value_t = 2)]
        radius: u32,
    },
    /// Orbit-map certificate on truncations of the given radius.
    Msvarc {
        #[command(flatten)]
        action: ActionArgs,
        #[arg(long, default_value_t = 6)]
        radius: u32,
    },
    /// Cluster assignments of F·x0 and F·K along group rays, as CSV.
    Pullbacks {
        #[command(flatten)]
        action: ActionArgs,
        #[arg(long = "R", default_value_t = 4)]
        radius: u32,
        #[arg(long, default_value_t = 12)]
        rays: usize,
    },
    /// Floyd diameters of far translates of ball(x0, 1), as CSV.
    Defect {
        #[command(flatten)]
        action: ActionArgs,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        radii: Vec<u32>,
    },
}

#[derive(Subcommand)]
enum HyperbolicCmd {
    /// Four-point defect estimate on a ball.
    Delta {
        #[arg(long)]
        graph: String,
        #[arg(long, default_value_t = 3)]
        radius: u32,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
    },
    /// Sphere rays with their hyperbolic classes and Floyd clusters.
    Rays {
        #[command(flatten)]
        chart: ChartArgs,
        #[arg(long = "R", default_value_t = 4)]
        radius: u32,
        /// Hausdorff bound for ray classes.
        #[arg(long, default_value_t = 2)]
        k: u32,
    },
    /// Pushes rays through a vertex map (id, shift:k, scale:k, double, halve, pad, parent).
    Transport {
        #[arg(long)]
        source: String,
        #[arg(long)]
        target: String,
        #[arg(long)]
        map: String,
        #[arg(long, default_value_t = 8)]
        length: usize,
        #[arg(long, default_value_t = 2)]
        width: u32,
        #[arg(long, default_value_t = 16)]
        rays: usize,
    },
}

/// A failure with its exit code.
struct Fail(u8, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Budget(_) | Error::Inconclusive(_) | Error::EmptySample(_) => 2,
            _ => 3,
        };
        Fail(code, e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Fail {
    Fail(3, msg.into())
}

struct Env {
    resolved: Resolved,
    out: Option<PathBuf>,
}

impl Env {
    fn graph(&self, name: &str) -> Result<Arc<dyn LocallyFiniteGraph>, Fail> {
        match self.resolved.graphs.get(name) {
            Some(g) => Ok(g.clone()),
            None => Ok(parse_graph(name)?),
        }
    }

    fn function(&self, name: &str) -> Result<FloydFunction, Fail> {
        match self.resolved.floyd.get(name) {
            Some(f) => Ok(f.clone()),
            None => Ok(FloydFunction::parse(name)?),
        }
    }

    fn chart(&self, a: &ChartArgs) -> Result<FloydChart, Fail> {
        let g = self.graph(&a.graph)?;
        let mut chart = FloydChart::new(g.clone(), self.function(&a.f)?);
        if let Some(b) = &a.base {
            chart = chart.with_basepoint(vertex(g.as_ref(), b)?);
        }
        Ok(chart)
    }

    fn action(&self, name: &str) -> Result<(Arc<dyn GraphAction>, Word), Fail> {
        self.resolved
            .actions
            .get(name)
            .cloned()
            .ok_or_else(|| usage(format!("no action `{name}` in the manifest")))
    }

    /// Prints the artifact and writes it under the output directory when one is set.
    fn emit(&self, file: &str, body: &str) -> Result<(), Fail> {
        print!("{body}");
        if let Some(dir) = &self.out {
            write_file(&dir.join(file), body)?;
        }
        Ok(())
    }

    fn emit_json(&self, file: &str, v: Value) -> Result<(), Fail> {
        let mut s = serde_json::to_string_pretty(&round_floats(v)).expect("json");
        s.push('\n');
        self.emit(file, &s)
    }
}

fn write_file(path: &Path, body: &str) -> Result<(), Fail> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Fail(3, format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, body).map_err(|e| Fail(3, format!("cannot write {}: {e}", path.display())))
}

fn vertex(g: &dyn LocallyFiniteGraph, s: &str) -> Result<Word, Fail> {
    let v = g.parse_vertex(s)?;
    if !g.contains(&v) {
        return Err(usage(format!("`{s}` is not a vertex of {}", g.name())));
    }
    Ok(v)
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

/// Words of a ray in one CSV cell, space separated.
fn cell(words: &[Word]) -> String {
    words.iter().map(Word::to_string).collect::<Vec<_>>().join(" ")
}

fn csv_line(fields: &[String]) -> String {
    let quoted: Vec<String> = fields
        .iter()
        .map(|f| if f.contains([',', '"', '\n']) { format!("\"{}\"", f.replace('"', "\"\"")) } else { f.clone() })
        .collect();
    quoted.join(",") + "\n"
}

fn f6(x: f64) -> String {
    match num(x) {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s,
        other => other.to_string(),
    }
}

fn relations(v: &Value, what: &str) -> Result<Vec<Relation>, Fail> {
    let list: Vec<RelationJson> =
        serde_json::from_value(v.clone()).map_err(|e| usage(format!("{what}: expected relation list: {e}")))?;
    list.iter().map(|r| Relation::try_from(r).map_err(Fail::from)).collect()
}

fn carrier_of(rels: &[Relation], what: &str) -> Result<usize, Fail> {
    let n = rels.first().ok_or_else(|| usage(format!("{what}: no relations")))?.carrier();
    if rels.iter().any(|r| r.carrier() != n) {
        return Err(usage(format!("{what}: relations on different carriers")));
    }
    Ok(n)
}

fn run(cli: Cli) -> Result<u8, Fail> {
    let mut manifest = match &cli.manifest {
        Some(p) => Manifest::from_json(&read(p)?)?,
        None => Manifest::default(),
    };
    if let Some(s) = cli.seed {
        manifest.seed = s;
    }
    let out = cli.out.clone().or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from));
    let env = Env { resolved: manifest.resolve()?, out };

    match cli.command {
        Command::Manifest => {
            print!("{}", manifest.to_json());
        }
        Command::Graph(GraphCmd::Build { graph, radius }) => {
            let g = env.graph(&graph)?;
            let radius = match (radius, g.is_finite()) {
                (Some(r), _) => r,
                (None, true) => u32::MAX,
                (None, false) => return Err(usage("infinite graph: give --radius")),
            };
            let ball = Ball::bounded(g.as_ref(), &g.basepoint(), radius, 200_000)?;
            let labels: Vec<String> = ball.vertices.iter().map(|v| g.label(v)).collect();
            let mut edges = Vec::new();
            for (i, adj) in ball.adj.iter().enumerate() {
                edges.extend(adj.iter().filter(|&&j| i < j).map(|&j| (i, j)));
            }
            let fg = FiniteGraph::new(g.name(), labels, &edges)?;
            env.emit("graph.adj", &fg.to_adjacency_text())?;
        }

        Command::Floyd(FloydCmd::Dist { chart, x, y, radius }) => {
            let c = env.chart(&chart)?;
            let g = c.graph().clone();
            match (x, y) {
                (Some(x), Some(y)) => {
                    let (x, y) = (vertex(g.as_ref(), &x)?, vertex(g.as_ref(), &y)?);
                    let (value, tail) = floyd_distance(&c, &x, &y, radius)?;
                    env.emit_json(
                        "floyd-dist.json",
                        json!({
                            "graph": g.name(), "f": c.function().to_string(), "base": c.basepoint(),
                            "x": x, "y": y, "radius": radius, "value": num(value), "tail": num(tail),
                        }),
                    )?;
                }
                (None, None) => {
                    let t = distance_table(&c, radius);
                    let mut s = csv_line(&std::iter::once("vertex".to_string()).chain(t.vertices.iter().map(|v| g.label(v))).collect::<Vec<_>>());
                    for (v, row) in t.vertices.iter().zip(&t.values) {
                        s += &csv_line(&std::iter::once(g.label(v)).chain(row.iter().map(|&d| f6(d))).collect::<Vec<_>>());
                    }
                    env.emit("floyd-table.csv", &s)?;
                }
                _ => return Err(usage("give both --x and --y, or neither for the full table")),
            }
        }

        Command::Floyd(FloydCmd::Clusters { chart, radius, threshold, svg }) => {
            let c = env.chart(&chart)?;
            let rays = sphere_rays(c.graph().as_ref(), c.basepoint(), radius, radius as usize + 3);
            if rays.is_empty() {
                return Err(Fail(2, format!("no geodesic rays of length {radius}")));
            }
            let cc = boundary_clusters(&c, rays, threshold, radius)?;
            if let Some(path) = svg {
                let cloud = point_cloud(&c, radius + 2, 20_000)?;
                let path = match &env.out {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path,
                };
                write_file(&path, &cloud.to_svg(600.0))?;
            }
            env.emit_json("clusters.json", to_json(&cc.report()))?;
        }

        Command::Floyd(FloydCmd::Karlsson { chart, radii, pairs }) => {
            let c = env.chart(&chart)?;
            let mut s = csv_line(&["radius".into(), "pairs".into(), "defect".into(), "bound".into()]);
            let mut within = true;
            for (i, &r) in radii.iter().enumerate() {
                let sample = sample_avoiding_geodesics(&c, r, 2, pairs, env.resolved.manifest.seed + i as u64);
                let d = karlsson_defect(&c, &sample)?;
                let b = karlsson_bound(c.function(), r);
                within &= d <= b;
                s += &csv_line(&[r.to_string(), sample.len().to_string(), f6(d), f6(b)]);
            }
            env.emit("karlsson.csv", &s)?;
            return Ok(if within { 0 } else { 1 });
        }

        Command::Coarse(CoarseCmd::Closure { generators }) => {
            let v: Value = serde_json::from_str(&read(&generators)?).map_err(|e| usage(format!("{}: {e}", generators.display())))?;
            let gens = relations(&v, "generators")?;
            let n = carrier_of(&gens, "generators")?;
            let basis = basis_closure(n, &gens)?;
            let basis: Vec<RelationJson> = basis.iter().map(RelationJson::from).collect();
            env.emit_json("closure.json", json!({"carrier": n, "basis": basis}))?;
        }

        Command::Coarse(CoarseCmd::Certify { input }) => {
            let v: Value = serde_json::from_str(&read(&input)?).map_err(|e| usage(format!("{}: {e}", input.display())))?;
            let eps_gens = relations(&v["eps"], "eps")?;
            let zeta_gens = relations(&v["zeta"], "zeta")?;
            let (n, m) = (carrier_of(&eps_gens, "eps")?, carrier_of(&zeta_gens, "zeta")?);
            let assignment = |key: &str| -> Result<Vec<usize>, Fail> {
                serde_json::from_value(v[key].clone()).map_err(|e| usage(format!("{key}: expected a point list: {e}")))
            };
            let f = CarrierMap::new(m, assignment("f")?)?;
            let g = CarrierMap::new(n, assignment("g")?)?;
            let eps = CoarseStructure::generated(n, &eps_gens)?;
            let zeta = CoarseStructure::generated(m, &zeta_gens)?;
            let verdict = is_coarse_equivalence(&f, &g, &eps, &zeta)?;
            let ok = verdict.is_ok();
            let body = match verdict {
                Ok(cert) => json!({"equivalence": true, "certificate": cert}),
                Err(reason) => json!({"equivalence": false, "reason": reason}),
            };
            env.emit_json("certificate.json", body)?;
            return Ok(if ok { 0 } else { 1 });
        }

        Command::Action(ActionCmd::Sat { action, radius }) => {
            let (a, x0) = env.action(&action.action)?;
            let g = a.graph().clone();
            let k = Ball::new(g.as_ref(), &x0, 1).vertices;
            let sat = Saturation::new(a.clone(), &k)?;
            let mut s = csv_line(&["p".into(), "q".into()]);
            for (p, q) in sat.restrict(&Ball::new(g.as_ref(), &x0, radius).vertices) {
                s += &csv_line(&[g.label(&p), g.label(&q)]);
            }
            env.emit("sat.csv", &s)?;
        }

        Command::Action(ActionCmd::Msvarc { action, radius }) => {
            let (a, x0) = env.action(&action.action)?;
            let gens = a.group().symmetric_generators();
            let cert = milnor_svarc_map(&a, &x0, radius, &gens)?;
            let complete = cert.complete;
            env.emit_json("msvarc.json", to_json(&cert))?;
            return Ok(if complete { 0 } else { 1 });
        }

        Command::Action(ActionCmd::Pullbacks { action, radius, rays }) => {
            let (a, x0) = env.action(&action.action)?;
            let chart = FloydChart::new(a.graph().clone(), FloydFunction::Geometric { lambda: 0.5 })
                .with_basepoint(x0.clone())
                .with_excursion(2);
            let sphere = sphere_rays(chart.graph().as_ref(), &x0, radius, radius as usize + 3);
            let cc = boundary_clusters(&chart, sphere, None, radius)?;
            let k = Ball::new(a.graph().as_ref(), &x0, 1).vertices;
            let subsets = group_rays(a.group().as_ref(), rays, radius as usize + 4, env.resolved.manifest.seed);
            let report = compare_pullbacks(a.as_ref(), &x0, &k, &cc, &subsets);
            let ids = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
            let mut s = csv_line(&["ray".into(), "orbit_clusters".into(), "translate_clusters".into(), "agree".into(), "resolved".into()]);
            for row in &report.rows {
                s += &csv_line(&[cell(&row.ray), ids(&row.orbit), ids(&row.translates), row.agree.to_string(), row.resolved.to_string()]);
            }
            env.emit("pullbacks.csv", &s)?;
            return Ok(if report.mismatches > 0 {
                1
            } else if report.unresolved == report.rows.len() {
                2
            } else {
                0
            });
        }

        Command::Action(ActionCmd::Defect { action, radii }) => {
            let (a, x0) = env.action(&action.action)?;
            let chart = FloydChart::new(a.graph().clone(), FloydFunction::Geometric { lambda: 0.5 })
                .with_basepoint(x0.clone())
                .with_excursion(2);
            let k = Ball::new(a.graph().as_ref(), &x0, 1).vertices;
            let mut s = csv_line(&["radius".into(), "defect".into()]);
            for &r in &radii {
                let d = group_perspectivity_defect(a.as_ref(), &k, &chart, r, 1)?;
                s += &csv_line(&[r.to_string(), f6(d)]);
            }
            env.emit("defect.csv", &s)?;
        }

        Command::Hyperbolic(HyperbolicCmd::Delta { graph, radius, samples }) => {
            let g = env.graph(&graph)?;
            let d = delta_estimate(g.as_ref(), &g.basepoint(), radius, samples, env.resolved.manifest.seed);
            env.emit_json("delta.json", json!({"graph": g.name(), "radius": radius, "estimate": d}))?;
        }

        Command::Hyperbolic(HyperbolicCmd::Rays { chart, radius, k }) => {
            let c = env.chart(&chart)?.with_excursion(2);
            let rays = sphere_rays(c.graph().as_ref(), c.basepoint(), radius, radius as usize + 3);
            if rays.is_empty() {
                return Err(Fail(2, format!("no geodesic rays of length {radius}")));
            }
            let cc = boundary_clusters(&c, rays, None, radius)?;
            let classes = ray_classes(c.graph().as_ref(), &cc.rays, k);
            let mut class_of = vec![0; cc.rays.len()];
            for (i, class) in classes.iter().enumerate() {
                for &r in class {
                    class_of[r] = i;
                }
            }
            let rows: Vec<Value> = cc
                .rays
                .iter()
                .enumerate()
                .map(|(i, r)| json!({"vertices": r.vertices, "class": class_of[i], "cluster": cc.cluster_of_ray(i)}))
                .collect();
            let clusters: BTreeSet<usize> = (0..cc.rays.len()).map(|i| cc.cluster_of_ray(i)).collect();
            env.emit_json(
                "rays.json",
                json!({"graph": c.graph().name(), "radius": radius, "k": k, "classes": classes.len(), "clusters": clusters.len(), "rays": rows}),
            )?;
        }

        Command::Hyperbolic(HyperbolicCmd::Transport { source, target, map, length, width, rays }) => {
            let (s, t) = (env.graph(&source)?, env.graph(&target)?);
            let phi = VertexMap::parse(&map)?;
            let mut rows = Vec::new();
            let mut worst = 0;
            for ray in rays_from(s.as_ref(), &s.basepoint(), length, rays) {
                let tr = qi_ray_transport(t.as_ref(), &phi, &ray, width)?;
                worst = worst.max(tr.hausdorff);
                rows.push(json!({"ray": ray.vertices, "segment": tr.segment.vertices, "hausdorff": tr.hausdorff}));
            }
            env.emit_json("transport.json", json!({"map": map, "width": width, "max_hausdorff": worst, "rays": rows}))?;
        }

        Command::Verify { selection, budget, list } => {
            let budget: Budget = match budget {
                Some(b) => b.parse()?,
                None => manifest.budget,
            };
            let selection = selection.unwrap_or_else(|| match manifest.suites.is_empty() {
                true => "all".into(),
                false => manifest.suites.join(","),
            });
            if list {
                let mut s = String::new();
                for d in verify::select(&selection)? {
                    s += &format!("{:12} {:28} {}\n", d.group, d.id, d.about);
                }
                print!("{s}");
                return Ok(0);
            }
            let (report, timings) = verify::run(&env.resolved, budget, &selection)?;
            env.emit("report.json", &report.to_json())?;
            for s in &report.suites {
                eprintln!("{:10} {:12} {:28} {:>6} pass {:>3} fail {:>3} inconclusive", format!("{:?}", s.status).to_lowercase(), s.group, s.suite, s.pass, s.fail, s.inconclusive);
            }
            if let Some(dir) = &env.out {
                let t: serde_json::Map<String, Value> = timings.iter().map(|(k, v)| (k.clone(), json!(r6(*v)))).collect();
                write_file(&dir.join("timings.json"), &(serde_json::to_string_pretty(&t).expect("json") + "\n"))?;
            }
            return Ok(report.exit_code() as u8);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("persp: {msg}");
            ExitCode::from(code)
        }
    }
}
