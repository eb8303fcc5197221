//! Group actions on graphs: saturations, the orbit map and transfer maps
//! between group subsets and vertex sets.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::floyd::{ClusterChart, FloydChart};
use crate::graph::{parse_graph, Ball, CayleyGraph, LocallyFiniteGraph};
use crate::group::{parse_group, Group, PermGroup};
use crate::word::Word;

pub trait GraphAction: Send + Sync {
    fn name(&self) -> String;
    fn group(&self) -> &Arc<dyn Group>;
    fn graph(&self) -> &Arc<dyn LocallyFiniteGraph>;
    fn act(&self, g: &Word, x: &Word) -> Word;
    /// Every `g` with `g·x = y`, sorted. Finite for the actions here.
    fn transporter(&self, x: &Word, y: &Word) -> Vec<Word>;

    fn stabilizer(&self, x: &Word) -> Vec<Word> {
        self.transporter(x, x)
    }

    fn translate(&self, g: &Word, set: &[Word]) -> Vec<Word> {
        set.iter().map(|x| self.act(g, x)).collect()
    }
}

impl fmt::Debug for dyn GraphAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GraphAction({})", self.name())
    }
}

/// Left multiplication on the group's own Cayley graph.
pub struct LeftMultiplication {
    group: Arc<dyn Group>,
    graph: Arc<dyn LocallyFiniteGraph>,
}

impl LeftMultiplication {
    pub fn new(group: Arc<dyn Group>) -> Self {
        let graph = Arc::new(CayleyGraph::new(group.clone()));
        LeftMultiplication { group, graph }
    }

    /// Uses `graph` as the Cayley graph; `check_action` validates the pairing.
    pub fn on(group: Arc<dyn Group>, graph: Arc<dyn LocallyFiniteGraph>) -> Self {
        LeftMultiplication { group, graph }
    }
}

impl GraphAction for LeftMultiplication {
    fn name(&self) -> String {
        format!("left:{}", self.group.name())
    }

    fn group(&self) -> &Arc<dyn Group> {
        &self.group
    }

    fn graph(&self) -> &Arc<dyn LocallyFiniteGraph> {
        &self.graph
    }

    fn act(&self, g: &Word, x: &Word) -> Word {
        self.group.multiply(g, x)
    }

    fn transporter(&self, x: &Word, y: &Word) -> Vec<Word> {
        vec![self.group.multiply(y, &self.group.invert(x))]
    }
}

/// `ℤᵈ` acting on the lattice by `x ↦ x + step·g`.
pub struct Translation {
    group: Arc<dyn Group>,
    graph: Arc<dyn LocallyFiniteGraph>,
    step: i32,
}

impl Translation {
    pub fn new(dim: usize, step: i32) -> Result<Self> {
        if step == 0 {
            return Err(Error::InvalidParameter("translation step must be non-zero".into()));
        }
        let graph = match dim {
            1 => parse_graph("line")?,
            2 => parse_graph("grid")?,
            d => parse_graph(&format!("lattice:{d}"))?,
        };
        Ok(Translation { group: parse_group(&format!("zn:{dim}"))?, graph, step })
    }
}

impl GraphAction for Translation {
    fn name(&self) -> String {
        format!("translate:{}", self.step)
    }

    fn group(&self) -> &Arc<dyn Group> {
        &self.group
    }

    fn graph(&self) -> &Arc<dyn LocallyFiniteGraph> {
        &self.graph
    }

    fn act(&self, g: &Word, x: &Word) -> Word {
        x.as_slice().iter().zip(g.as_slice()).map(|(a, b)| a + self.step * b).collect()
    }

    fn transporter(&self, x: &Word, y: &Word) -> Vec<Word> {
        let diff: Vec<i32> = x.as_slice().iter().zip(y.as_slice()).map(|(a, b)| b - a).collect();
        if diff.iter().all(|d| d % self.step == 0) {
            vec![diff.iter().map(|d| d / self.step).collect()]
        } else {
            Vec::new()
        }
    }
}

/// The infinite dihedral group on the line, `[t,s]·x = s·x + t`.
pub struct DihedralLine {
    group: Arc<dyn Group>,
    graph: Arc<dyn LocallyFiniteGraph>,
}

impl DihedralLine {
    pub fn new() -> Result<Self> {
        Ok(DihedralLine { group: parse_group("dihedral")?, graph: parse_graph("line")? })
    }
}

impl GraphAction for DihedralLine {
    fn name(&self) -> String {
        "dihedral".into()
    }

    fn group(&self) -> &Arc<dyn Group> {
        &self.group
    }

    fn graph(&self) -> &Arc<dyn LocallyFiniteGraph> {
        &self.graph
    }

    fn act(&self, g: &Word, x: &Word) -> Word {
        let (t, s) = (g.as_slice()[0], g.as_slice()[1]);
        Word::scalar(s * x.first() + t)
    }

    fn transporter(&self, x: &Word, y: &Word) -> Vec<Word> {
        let (x, y) = (x.first(), y.first());
        let mut out = vec![Word::new(&[y - x, 1]), Word::new(&[y + x, -1])];
        out.sort();
        out
    }
}

/// A permutation group acting on a finite graph's vertex indices.
pub struct PermutationAction {
    perm: PermGroup,
    group: Arc<dyn Group>,
    graph: Arc<dyn LocallyFiniteGraph>,
}

impl PermutationAction {
    pub fn new(perm: PermGroup, graph: Arc<dyn LocallyFiniteGraph>) -> Result<Self> {
        let n = Ball::new(graph.as_ref(), &graph.basepoint(), u32::MAX).len();
        if !graph.is_finite() || n != perm.degree() {
            return Err(Error::Mismatch(format!("degree {} does not match the graph's {n} vertices", perm.degree())));
        }
        Ok(PermutationAction { group: Arc::new(perm.clone()), perm, graph })
    }
}

impl GraphAction for PermutationAction {
    fn name(&self) -> String {
        self.group.name()
    }

    fn group(&self) -> &Arc<dyn Group> {
        &self.group
    }

    fn graph(&self) -> &Arc<dyn LocallyFiniteGraph> {
        &self.graph
    }

    fn act(&self, g: &Word, x: &Word) -> Word {
        Word::scalar(self.perm.apply(g, x.first() as usize) as i32)
    }

    fn transporter(&self, x: &Word, y: &Word) -> Vec<Word> {
        self.group.elements().unwrap().into_iter().filter(|g| self.act(g, x) == *y).collect()
    }
}

/// The trivial group fixing every vertex.
pub struct TrivialAction {
    group: Arc<dyn Group>,
    graph: Arc<dyn LocallyFiniteGraph>,
}

impl TrivialAction {
    pub fn new(graph: Arc<dyn LocallyFiniteGraph>) -> Result<Self> {
        Ok(TrivialAction { group: parse_group("trivial")?, graph })
    }
}

impl GraphAction for TrivialAction {
    fn name(&self) -> String {
        "trivial".into()
    }

    fn group(&self) -> &Arc<dyn Group> {
        &self.group
    }

    fn graph(&self) -> &Arc<dyn LocallyFiniteGraph> {
        &self.graph
    }

    fn act(&self, _: &Word, x: &Word) -> Word {
        x.clone()
    }

    fn transporter(&self, x: &Word, y: &Word) -> Vec<Word> {
        if x == y {
            vec![Word::empty()]
        } else {
            Vec::new()
        }
    }
}

/// Builds an action from a kind (`left`, `translate:k`, `dihedral`, `perm`,
/// `trivial`), a group spec and a graph spec, then checks it on samples.
pub fn build_action(kind: &str, group: &str, graph: &str) -> Result<Arc<dyn GraphAction>> {
    let (k, arg) = kind.split_once(':').unwrap_or((kind, ""));
    let action: Arc<dyn GraphAction> = match k {
        "left" => {
            let g = parse_group(group)?;
            if graph.is_empty() {
                Arc::new(LeftMultiplication::new(g))
            } else {
                Arc::new(LeftMultiplication::on(g, parse_graph(graph)?))
            }
        }
        "translate" => {
            let step = arg.parse().map_err(|_| Error::Parse(format!("action `{kind}` needs an integer step")))?;
            let dim = group
                .strip_prefix("zn:")
                .and_then(|d| d.parse().ok())
                .ok_or_else(|| Error::Mismatch(format!("translations need a zn group, got `{group}`")))?;
            Arc::new(Translation::new(dim, step)?)
        }
        "dihedral" => Arc::new(DihedralLine::new()?),
        "perm" => {
            let rest = group
                .strip_prefix("perm:")
                .ok_or_else(|| Error::Mismatch(format!("permutation actions need a perm group, got `{group}`")))?;
            let (n, gens) = rest.split_once(':').unwrap_or((rest, ""));
            let degree: usize = n.parse().map_err(|_| Error::Parse(format!("bad degree in `{group}`")))?;
            let gens = gens
                .split(';')
                .filter(|p| !p.trim().is_empty())
                .map(|p| p.split(',').map(|x| x.trim().parse::<usize>()).collect::<std::result::Result<Vec<_>, _>>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::Parse(format!("bad permutation in `{group}`")))?;
            Arc::new(PermutationAction::new(PermGroup::new(degree, gens)?, parse_graph(graph)?)?)
        }
        "trivial" => Arc::new(TrivialAction::new(parse_graph(graph)?)?),
        other => return Err(Error::Parse(format!("unknown action kind `{other}`"))),
    };
    check_action(action.as_ref(), 2)?;
    Ok(action)
}

/// Identity, compatibility, edge preservation and transporter consistency on
/// group elements of length at most 2 and vertices within `radius` of the basepoint.
pub fn check_action(action: &dyn GraphAction, radius: u32) -> Result<()> {
    let group = action.group();
    let graph = action.graph();
    let elements = group.elements().unwrap_or_else(|| group.ball(2));
    let ball = Ball::new(graph.as_ref(), &graph.basepoint(), radius);
    let fail = |m: String| Err(Error::InvalidMap(format!("{}: {m}", action.name())));
    for v in &ball.vertices {
        if action.act(&group.identity(), v) != *v {
            return fail(format!("identity moves {v}"));
        }
        for g in &elements {
            let gv = action.act(g, v);
            if !graph.contains(&gv) {
                return fail(format!("{g}·{v} = {gv} is not a vertex"));
            }
            if !action.transporter(v, &gv).contains(&group.normal_form(g)) {
                return fail(format!("transporter({v}, {gv}) misses {g}"));
            }
            for h in &elements {
                if action.act(&group.multiply(g, h), v) != action.act(g, &action.act(h, v)) {
                    return fail(format!("({g}·{h})·{v} differs from {g}·({h}·{v})"));
                }
            }
            let image: BTreeSet<Word> = graph.neighbors(v).iter().map(|w| action.act(g, w)).collect();
            let target: BTreeSet<Word> = graph.neighbors(&gv).into_iter().collect();
            if image != target {
                return fail(format!("{g} does not carry the edges at {v} to edges"));
            }
        }
    }
    Ok(())
}

/// `Sat(A) = {(g·x, g·x') : g ∈ G, x, x' ∈ A}`.
#[derive(Clone)]
pub struct Saturation {
    action: Arc<dyn GraphAction>,
    base: Vec<Word>,
}

impl Saturation {
    pub fn new(action: Arc<dyn GraphAction>, base: &[Word]) -> Result<Self> {
        if base.is_empty() {
            return Err(Error::InvalidParameter("saturation of the empty set".into()));
        }
        let base: BTreeSet<Word> = base.iter().cloned().collect();
        Ok(Saturation { action, base: base.into_iter().collect() })
    }

    pub fn base(&self) -> &[Word] {
        &self.base
    }

    pub fn contains(&self, p: &Word, q: &Word) -> bool {
        self.base.iter().any(|x| {
            self.action
                .transporter(x, p)
                .iter()
                .any(|g| self.base.iter().any(|x2| self.action.act(g, x2) == *q))
        })
    }

    /// All `q` with `(p, q) ∈ Sat(A)`, sorted.
    pub fn related(&self, p: &Word) -> Vec<Word> {
        let mut out = BTreeSet::new();
        for x in &self.base {
            for g in self.action.transporter(x, p) {
                out.extend(self.base.iter().map(|x2| self.action.act(&g, x2)));
            }
        }
        out.into_iter().collect()
    }

    /// `(p,q)` pairs with both ends in `vertices`.
    pub fn restrict(&self, vertices: &[Word]) -> Vec<(Word, Word)> {
        let set: HashSet<&Word> = vertices.iter().collect();
        let mut out = Vec::new();
        for p in vertices {
            for q in self.related(p) {
                if set.contains(&q) {
                    out.push((p.clone(), q));
                }
            }
        }
        out
    }

    /// Smallest `k ≥ 1` with `(p,q) ∈ Sat(A)^k`, up to `max_depth`.
    pub fn hops(&self, p: &Word, q: &Word, max_depth: usize) -> Option<usize> {
        let mut frontier: BTreeSet<Word> = BTreeSet::from([p.clone()]);
        for k in 1..=max_depth {
            let next: BTreeSet<Word> = frontier.iter().flat_map(|s| self.related(s)).collect();
            if next.contains(q) {
                return Some(k);
            }
            if next == frontier {
                return None;
            }
            frontier = next;
        }
        None
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Membership {
    /// `e ⊆ Sat(base)^depth`.
    Yes { base: Vec<Word>, depth: usize },
    Inconclusive { candidates_searched: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SearchBudget {
    /// Largest composition length.
    pub depth: usize,
    /// Largest candidate base set.
    pub max_size: usize,
    /// Candidate bases lie in this ball about the basepoint.
    pub radius: u32,
}

/// Searches for a finite `U` and `k` with `e ⊆ Sat(U)^k`. Candidates are
/// taken by size, then in ball order. A witness for a chain of different
/// sets gives one for the power of their union, so powers suffice.
pub fn eps_phi_member(action: &Arc<dyn GraphAction>, e: &[(Word, Word)], budget: SearchBudget) -> Result<Membership> {
    if budget.depth == 0 || budget.max_size == 0 {
        return Err(Error::InvalidParameter("search budget must be positive".into()));
    }
    let graph = action.graph();
    let ball = Ball::new(graph.as_ref(), &graph.basepoint(), budget.radius);
    let n = ball.len();
    let mut searched = 0;
    for size in 1..=budget.max_size.min(n) {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            searched += 1;
            let base: Vec<Word> = idx.iter().map(|&i| ball.vertices[i].clone()).collect();
            let sat = Saturation::new(action.clone(), &base)?;
            let mut depth = 1;
            let ok = e.iter().all(|(p, q)| match sat.hops(p, q, budget.depth) {
                Some(k) => {
                    depth = depth.max(k);
                    true
                }
                None => false,
            });
            if ok {
                return Ok(Membership::Yes { base: sat.base().to_vec(), depth });
            }
            // next combination in lexicographic order
            let Some(i) = (0..size).rev().find(|&i| idx[i] < n - size + i) else { break };
            idx[i] += 1;
            for j in i + 1..size {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    Ok(Membership::Inconclusive { candidates_searched: searched })
}

/// `{g : g·K ∩ K ≠ ∅}`, sorted.
pub fn return_set(action: &dyn GraphAction, k: &[Word]) -> Vec<Word> {
    let mut out = BTreeSet::new();
    for x in k {
        for y in k {
            out.extend(action.transporter(x, y));
        }
    }
    out.into_iter().collect()
}

/// The return set is finite whenever transporters are; this reports it.
pub fn is_properly_discontinuous(action: &dyn GraphAction, k: &[Word]) -> (bool, Vec<Word>) {
    (true, return_set(action, k))
}

fn meeting(action: &dyn GraphAction, b: &[Word], target: &[Word]) -> Vec<Word> {
    let mut out = BTreeSet::new();
    for x in b {
        for y in target {
            out.extend(action.transporter(x, y));
        }
    }
    out.into_iter().collect()
}

/// Tuples `(g₁,…,gₙ)` with `gᵢ·Bᵢ ∩ gᵢ₊₁·Bᵢ₊₁ ≠ ∅` and `gₙ·Bₙ ∩ Bₙ₊₁ ≠ ∅`,
/// built from the last coordinate backwards. Sorted.
pub fn tuple_finiteness(action: &dyn GraphAction, sets: &[Vec<Word>]) -> Result<Vec<Vec<Word>>> {
    if sets.len() < 2 {
        return Err(Error::InvalidParameter("need at least two sets".into()));
    }
    let n = sets.len() - 1;
    // partial tuples (gᵢ,…,gₙ), stored reversed
    let mut partial: Vec<Vec<Word>> = meeting(action, &sets[n - 1], &sets[n]).into_iter().map(|g| vec![g]).collect();
    for i in (0..n - 1).rev() {
        let mut next = Vec::new();
        for t in &partial {
            let target = action.translate(t.last().unwrap(), &sets[i + 1]);
            for g in meeting(action, &sets[i], &target) {
                let mut u = t.clone();
                u.push(g);
                next.push(u);
            }
        }
        partial = next;
    }
    let mut out: Vec<Vec<Word>> = partial
        .into_iter()
        .map(|mut t| {
            t.reverse();
            t
        })
        .collect();
    out.sort();
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FundamentalDomain {
    pub vertices: Vec<Word>,
    pub radius: u32,
    /// Vertices of `ball(x₀, radius)` shown to lie in `G·K`.
    pub covered: usize,
}

/// The first `x ∈ K` and `g` with `g·x = v`.
pub fn cover_witness(action: &dyn GraphAction, k: &[Word], v: &Word) -> Option<(Word, Word)> {
    k.iter().find_map(|x| action.transporter(x, v).into_iter().next().map(|g| (x.clone(), g)))
}

/// Greedy orbit cover of `ball(x₀, radius)` in ball order. Fails when a
/// vertex on the outer sphere is needed, read as "not cocompact at this radius".
pub fn find_fundamental_domain(action: &dyn GraphAction, radius: u32) -> Result<FundamentalDomain> {
    let graph = action.graph();
    let ball = Ball::new(graph.as_ref(), &graph.basepoint(), radius);
    let exhausted = Ball::new(graph.as_ref(), &graph.basepoint(), radius + 1).len() == ball.len();
    let mut k: Vec<Word> = Vec::new();
    for (v, &d) in ball.vertices.iter().zip(&ball.dist) {
        if cover_witness(action, &k, v).is_none() {
            if d == radius && !exhausted {
                return Err(Error::Budget(format!("{} is not cocompact at radius {radius}: {v} needs its own orbit", action.name())));
            }
            k.push(v.clone());
        }
    }
    Ok(FundamentalDomain { vertices: k, radius, covered: ball.len() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeneratorImage {
    pub element: Word,
    pub pairs: usize,
    pub contained: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropernessSample {
    pub center: Word,
    pub radius: u32,
    pub preimage: Vec<Word>,
    pub matches_scan: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MsvarcCertificate {
    pub action: String,
    pub x0: Word,
    pub radius: u32,
    /// `φ_{x₀}(Δ_g) ⊆ Sat({x₀, g·x₀})` on the truncation.
    pub generator_images: Vec<GeneratorImage>,
    pub properness: Vec<PropernessSample>,
    pub domain: Vec<Word>,
    /// Every vertex of the ball is `Sat(K)`-close to the orbit.
    pub quasi_dense: bool,
    pub quasi_dense_checked: usize,
    /// The orbit-representative choice `f` is a section and `f∘φ_{x₀}` is close to the identity.
    pub quasi_inverse: bool,
    pub complete: bool,
    pub failed_step: Option<String>,
}

/// Orbit representative: the smallest element carrying `x₀` to `x`.
pub fn orbit_representative(action: &dyn GraphAction, x0: &Word, x: &Word) -> Option<Word> {
    action.transporter(x0, x).into_iter().next()
}

/// Certificates for the orbit map `g ↦ g·x₀` on the group ball and graph
/// ball of the given radius. `elements` are the `g` whose `Δ_g` is checked.
pub fn milnor_svarc_map(
    action: &Arc<dyn GraphAction>,
    x0: &Word,
    radius: u32,
    elements: &[Word],
) -> Result<MsvarcCertificate> {
    let group = action.group();
    let graph = action.graph();
    let hs = group.elements().unwrap_or_else(|| group.ball(radius));
    let mut generator_images = Vec::new();
    for g in elements {
        let gx0 = action.act(g, x0);
        let sat = Saturation::new(action.clone(), &[x0.clone(), gx0])?;
        let contained = hs.iter().all(|h| {
            let hg = group.multiply(h, g);
            sat.contains(&action.act(h, x0), &action.act(&hg, x0))
        });
        generator_images.push(GeneratorImage { element: g.clone(), pairs: hs.len(), contained });
    }

    let ball = Ball::new(graph.as_ref(), x0, radius);
    let mut properness = Vec::new();
    let centers: Vec<&Word> = ball.vertices.iter().step_by((ball.len() / 5).max(1)).collect();
    for c in centers {
        for r in [0, 1, 2] {
            let s = Ball::new(graph.as_ref(), c, r);
            let preimage: BTreeSet<Word> = s.vertices.iter().flat_map(|y| action.transporter(x0, y)).collect();
            let scan_radius = graph.distance(x0, c) + r + 2;
            let scan: BTreeSet<Word> = group
                .elements()
                .unwrap_or_else(|| group.ball(scan_radius))
                .into_iter()
                .filter(|g| s.contains(&action.act(g, x0)))
                .collect();
            properness.push(PropernessSample {
                center: c.clone(),
                radius: r,
                matches_scan: scan.is_subset(&preimage),
                preimage: preimage.into_iter().collect(),
            });
        }
    }

    let domain = find_fundamental_domain(action.as_ref(), radius)?.vertices;
    // a = g·x with x ∈ K is Sat(K)-close to g·x' for every x' ∈ K
    let quasi_dense = ball.vertices.iter().all(|a| {
        domain.iter().any(|x| {
            action.transporter(x, a).iter().any(|g| {
                domain.iter().any(|x2| !action.transporter(x0, &action.act(g, x2)).is_empty())
            })
        })
    });

    let stab: BTreeSet<Word> = action.stabilizer(x0).into_iter().collect();
    let section = ball.vertices.iter().all(|x| match orbit_representative(action.as_ref(), x0, x) {
        Some(g) => action.act(&g, x0) == *x,
        None => true,
    });
    let close = hs.iter().all(|g| {
        let f = orbit_representative(action.as_ref(), x0, &action.act(g, x0)).expect("orbit point");
        stab.contains(&group.multiply(&group.invert(g), &f))
    });

    let failed_step = if let Some(g) = generator_images.iter().find(|g| !g.contained) {
        Some(format!("image of Δ_{} leaves Sat({{x₀, g·x₀}})", g.element))
    } else if let Some(p) = properness.iter().find(|p| !p.matches_scan) {
        Some(format!("preimage of ball({}, {}) misses elements", p.center, p.radius))
    } else if !quasi_dense {
        Some("orbit is not Sat(K)-quasi-dense on the ball".into())
    } else if !(section && close) {
        Some("orbit representative choice is not a quasi-inverse".into())
    } else {
        None
    };
    Ok(MsvarcCertificate {
        action: action.name(),
        x0: x0.clone(),
        radius,
        generator_images,
        properness,
        domain,
        quasi_dense,
        quasi_dense_checked: ball.len(),
        quasi_inverse: section && close,
        complete: failed_step.is_none(),
        failed_step,
    })
}

/// `Π_K(S) = {g : g·K ∩ S ≠ ∅}`, sorted.
pub fn pi_k(action: &dyn GraphAction, k: &[Word], s: &[Word]) -> Vec<Word> {
    meeting(action, k, s)
}

/// `Λ_K(F) = F·K`, sorted.
pub fn lambda_k(action: &dyn GraphAction, k: &[Word], f: &[Word]) -> Vec<Word> {
    let out: BTreeSet<Word> = f.iter().flat_map(|g| action.translate(g, k)).collect();
    out.into_iter().collect()
}

/// Seeded geodesic rays in the group: a start in the radius-2 ball, then
/// random generator steps that increase the distance to the start.
pub fn group_rays(group: &dyn Group, count: usize, length: usize, seed: u64) -> Vec<Vec<Word>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts = group.ball(2);
    let gens = group.symmetric_generators();
    (0..count)
        .map(|_| {
            let start = starts.choose(&mut rng).unwrap().clone();
            let back = group.invert(&start);
            let mut ray = vec![start];
            for k in 1..=length {
                let cur = ray.last().unwrap();
                let options: Vec<Word> = gens
                    .iter()
                    .map(|s| group.multiply(cur, s))
                    .filter(|n| group.word_length(&group.multiply(&back, n)) as usize == k)
                    .collect();
                match options.choose(&mut rng) {
                    Some(n) => ray.push(n.clone()),
                    None => break,
                }
            }
            ray
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PullbackRow {
    pub ray: Vec<Word>,
    /// Clusters adherent to `φ(F, x₀)`.
    pub orbit: Vec<usize>,
    /// Clusters adherent to `φ(F, K)`.
    pub translates: Vec<usize>,
    pub agree: bool,
    pub resolved: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PullbackReport {
    pub radius: u32,
    pub rows: Vec<PullbackRow>,
    pub mismatches: usize,
    pub unresolved: usize,
}

/// For each group subset `F`, the clusters adherent to `F·x₀` against those
/// adherent to `F·K`. Rows whose orbit image never reaches the chart radius
/// are unresolved.
pub fn compare_pullbacks(
    action: &dyn GraphAction,
    x0: &Word,
    k: &[Word],
    chart: &ClusterChart,
    subsets: &[Vec<Word>],
) -> PullbackReport {
    let rows: Vec<PullbackRow> = subsets
        .iter()
        .map(|f| {
            let orbit: Vec<Word> = f.iter().map(|g| action.act(g, x0)).collect();
            let a = chart.assignment(&orbit);
            let b = chart.assignment(&lambda_k(action, k, f));
            PullbackRow {
                ray: f.clone(),
                agree: a == b,
                resolved: !a.is_empty(),
                orbit: a.into_iter().collect(),
                translates: b.into_iter().collect(),
            }
        })
        .collect();
    PullbackReport {
        radius: chart.radius,
        mismatches: rows.iter().filter(|r| r.resolved && !r.agree).count(),
        unresolved: rows.iter().filter(|r| !r.resolved).count(),
        rows,
    }
}

/// Largest chart diameter of a translate `g·K` reaching the annulus
/// `R < depth ≤ R + window`.
pub fn group_perspectivity_defect(
    action: &dyn GraphAction,
    k: &[Word],
    chart: &FloydChart,
    radius: u32,
    window: u32,
) -> Result<f64> {
    let ball = Ball::new(chart.graph().as_ref(), chart.basepoint(), radius + window);
    let annulus: Vec<Word> = ball.vertices.iter().zip(&ball.dist).filter(|(_, &d)| d > radius).map(|(v, _)| v.clone()).collect();
    let gs: BTreeSet<Word> = annulus.iter().flat_map(|a| meeting(action, k, std::slice::from_ref(a))).collect();
    if gs.is_empty() {
        return Err(Error::Inconclusive(format!("no translate reaches past radius {radius}")));
    }
    let gs: Vec<Word> = gs.into_iter().collect();
    let diameter = |g: &Word| -> f64 {
        let t = action.translate(g, k);
        let mut d: f64 = 0.0;
        for (i, a) in t.iter().enumerate() {
            for b in &t[i + 1..] {
                d = d.max(chart.upper_bound(a, b, None).expect("geodesic bound"));
            }
        }
        d
    };
    #[cfg(feature = "parallel")]
    let values: Vec<f64> = {
        use rayon::prelude::*;
        gs.par_iter().map(diameter).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let values: Vec<f64> = gs.iter().map(diameter).collect();
    Ok(values.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floyd::{boundary_clusters, FloydFunction};
    use crate::graph::FiniteGraph;
    use crate::hyperbolic::sphere_rays;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn ws(v: &[i32]) -> Vec<Word> {
        v.iter().map(|&x| Word::scalar(x)).collect()
    }

    fn line() -> Arc<dyn GraphAction> {
        build_action("translate:1", "zn:1", "line").unwrap()
    }

    fn swap() -> Arc<dyn GraphAction> {
        let g = FiniteGraph::parse("pair", "a: b\n").unwrap();
        Arc::new(PermutationAction::new(PermGroup::new(2, vec![vec![1, 0]]).unwrap(), Arc::new(g)).unwrap())
    }

    #[test]
    fn builtin_actions_are_actions() {
        for (kind, group, graph) in [
            ("translate:1", "zn:1", "line"),
            ("translate:2", "zn:1", "line"),
            ("translate:1", "zn:2", "grid"),
            ("left", "free:2", ""),
            ("left", "z2free:3", "tree:3"),
            ("dihedral", "dihedral", "line"),
            ("perm", "perm:6:1,2,3,4,5,0;5,4,3,2,1,0", "cycle:6"),
            ("trivial", "trivial", "grid"),
        ] {
            let a = build_action(kind, group, graph).unwrap();
            check_action(a.as_ref(), 3).unwrap();
        }
        assert!(build_action("perm", "perm:6:1,0,2,3,4,5", "cycle:6").is_err());
        assert!(build_action("translate:2", "free:2", "").is_err());
    }

    #[test]
    fn saturation_examples() {
        let s = swap();
        let sat = Saturation::new(s.clone(), &ws(&[0])).unwrap();
        assert_eq!(sat.restrict(&ws(&[0, 1])), vec![(w("0"), w("0")), (w("1"), w("1"))]);
        let l = line();
        assert_eq!(Saturation::new(l.clone(), &ws(&[0])).unwrap().related(&w("5")), ws(&[5]));
        let width1 = Saturation::new(l.clone(), &ws(&[0, 1])).unwrap();
        let pts = ws(&(-4..=4).collect::<Vec<_>>());
        for (p, q) in width1.restrict(&pts) {
            assert!((p.first() - q.first()).abs() <= 1);
        }
        assert_eq!(width1.restrict(&pts).len(), 9 + 2 * 8);
        assert!(Saturation::new(l, &[]).is_err());
    }

    #[test]
    fn saturation_is_symmetric_and_monotone() {
        let a = build_action("left", "free:2", "").unwrap();
        let ball = Ball::new(a.graph().as_ref(), &Word::empty(), 3).vertices;
        let small = Saturation::new(a.clone(), &ball[..3]).unwrap();
        let big = Saturation::new(a.clone(), &ball[..5]).unwrap();
        for (p, q) in small.restrict(&ball) {
            assert!(small.contains(&q, &p));
            assert!(big.contains(&p, &q));
        }
    }

    #[test]
    fn membership_search() {
        let l = line();
        let pts: Vec<i32> = (-5..=5).collect();
        let width2: Vec<(Word, Word)> = pts
            .iter()
            .flat_map(|&p| pts.iter().filter(move |&&q| (p - q).abs() <= 2).map(move |&q| (Word::scalar(p), Word::scalar(q))))
            .collect();
        let m = eps_phi_member(&l, &width2, SearchBudget { depth: 3, max_size: 2, radius: 2 }).unwrap();
        assert_eq!(m, Membership::Yes { base: ws(&[-1, 0]), depth: 2 });
        let in_domain = vec![(w("3"), w("3"))];
        let m = eps_phi_member(&l, &in_domain, SearchBudget { depth: 1, max_size: 1, radius: 0 }).unwrap();
        assert_eq!(m, Membership::Yes { base: ws(&[0]), depth: 1 });
        let t = build_action("trivial", "trivial", "line").unwrap();
        let far = vec![(w("0"), w("5"))];
        let m = eps_phi_member(&t, &far, SearchBudget { depth: 4, max_size: 3, radius: 2 }).unwrap();
        assert!(matches!(m, Membership::Inconclusive { .. }));
        assert!(eps_phi_member(&t, &far, SearchBudget { depth: 0, max_size: 3, radius: 2 }).is_err());
    }

    #[test]
    fn return_sets() {
        assert_eq!(return_set(line().as_ref(), &ws(&[0])), vec![w("0")]);
        assert_eq!(return_set(swap().as_ref(), &ws(&[0, 1])).len(), 2);
        let f2 = build_action("left", "free:2", "").unwrap();
        let k = Ball::new(f2.graph().as_ref(), &Word::empty(), 1).vertices;
        let ret = return_set(f2.as_ref(), &k);
        // brute force over a larger group ball
        let scan: Vec<Word> = f2
            .group()
            .ball(4)
            .into_iter()
            .filter(|g| k.iter().any(|x| k.contains(&f2.act(g, x))))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        assert_eq!(ret, scan);
        assert_eq!(ret.len(), 17);
    }

    #[test]
    fn tuples() {
        let l = line();
        assert_eq!(tuple_finiteness(l.as_ref(), &[ws(&[0]), ws(&[0])]).unwrap(), vec![vec![w("0")]]);
        let t = tuple_finiteness(l.as_ref(), &[ws(&[0, 1]), ws(&[0, 1])]).unwrap();
        assert_eq!(t, vec![vec![w("-1")], vec![w("0")], vec![w("1")]]);
        let f2 = build_action("left", "free:2", "").unwrap();
        let b1 = Ball::new(f2.graph().as_ref(), &Word::empty(), 1).vertices;
        let b2 = vec![Word::empty(), w("1,1")];
        let b3 = vec![w("2")];
        let got = tuple_finiteness(f2.as_ref(), &[b1.clone(), b2.clone(), b3.clone()]).unwrap();
        let meets = |a: &[Word], b: &[Word]| a.iter().any(|x| b.contains(x));
        let elems = f2.group().ball(5);
        let mut scan = Vec::new();
        for g1 in &elems {
            for g2 in &elems {
                let (t1, t2) = (f2.translate(g1, &b1), f2.translate(g2, &b2));
                if meets(&t1, &t2) && meets(&t2, &b3) {
                    scan.push(vec![g1.clone(), g2.clone()]);
                }
            }
        }
        scan.sort();
        assert_eq!(got, scan);
        assert!(tuple_finiteness(l.as_ref(), &[ws(&[0])]).is_err());
    }

    #[test]
    fn fundamental_domains() {
        assert_eq!(find_fundamental_domain(line().as_ref(), 3).unwrap().vertices, ws(&[0]));
        let two = build_action("translate:2", "zn:1", "line").unwrap();
        assert_eq!(find_fundamental_domain(two.as_ref(), 3).unwrap().vertices, ws(&[0, -1]));
        let t = build_action("trivial", "trivial", "line").unwrap();
        assert!(matches!(find_fundamental_domain(t.as_ref(), 3), Err(Error::Budget(_))));
        let c = build_action("trivial", "trivial", "cycle:5").unwrap();
        assert_eq!(find_fundamental_domain(c.as_ref(), 4).unwrap().vertices.len(), 5);
    }

    #[test]
    fn orbit_map_certificates() {
        for (kind, group, graph, x0) in [
            ("translate:1", "zn:1", "line", "0"),
            ("translate:1", "zn:2", "grid", "0,0"),
            ("left", "free:2", "", "e"),
            ("dihedral", "dihedral", "line", "0"),
            ("translate:2", "zn:1", "line", "1"),
        ] {
            let a = build_action(kind, group, graph).unwrap();
            let gens = a.group().symmetric_generators();
            let cert = milnor_svarc_map(&a, &w(x0), 4, &gens).unwrap();
            assert!(cert.complete, "{kind} {group}: {:?}", cert.failed_step);
        }
    }

    #[test]
    fn transfer_maps() {
        let l = line();
        let k = ws(&[0, 1]);
        assert_eq!(pi_k(l.as_ref(), &k, &ws(&[5])), ws(&[4, 5]));
        assert_eq!(lambda_k(l.as_ref(), &k, &ws(&[4, 5])), ws(&[4, 5, 6]));
        let s = ws(&[-2, 3, 7]);
        let back = lambda_k(l.as_ref(), &k, &pi_k(l.as_ref(), &k, &s));
        assert!(s.iter().all(|x| back.contains(x)));
        assert_eq!(pi_k(l.as_ref(), &ws(&[0]), &s), s);
    }

    #[test]
    fn group_rays_are_geodesic() {
        let g = parse_group("zn:2").unwrap();
        for ray in group_rays(g.as_ref(), 5, 8, 3) {
            assert_eq!(ray.len(), 9);
            let back = g.invert(&ray[0]);
            for (k, h) in ray.iter().enumerate() {
                assert_eq!(g.word_length(&g.multiply(&back, h)) as usize, k);
            }
        }
        assert_eq!(group_rays(g.as_ref(), 4, 6, 9), group_rays(g.as_ref(), 4, 6, 9));
    }

    #[test]
    fn pullbacks_on_the_line() {
        let l = line();
        let chart = FloydChart::new(l.graph().clone(), FloydFunction::parse("geom:0.5").unwrap());
        let cc = boundary_clusters(&chart, sphere_rays(l.graph().as_ref(), &w("0"), 6, 6), None, 6).unwrap();
        let positive: Vec<Word> = (0..20).map(Word::scalar).collect();
        let everything: Vec<Word> = (-20..20).map(Word::scalar).collect();
        let report = compare_pullbacks(l.as_ref(), &w("0"), &ws(&[-1, 0, 1]), &cc, &[positive, everything]);
        assert_eq!(report.mismatches, 0);
        assert_eq!(report.rows[0].orbit.len(), 1);
        assert_eq!(report.rows[1].orbit.len(), 2);
    }

    #[test]
    fn group_defects() {
        let l = line();
        let chart = FloydChart::new(l.graph().clone(), FloydFunction::parse("geom:0.5").unwrap());
        let k = ws(&[0, 1]);
        let d4 = group_perspectivity_defect(l.as_ref(), &k, &chart, 4, 2).unwrap();
        let d8 = group_perspectivity_defect(l.as_ref(), &k, &chart, 8, 2).unwrap();
        assert!(d8 < d4 && d4 <= 2.0 * 2f64.powi(-3));
        assert_eq!(group_perspectivity_defect(l.as_ref(), &ws(&[0]), &chart, 4, 2).unwrap(), 0.0);
        let flat = FloydChart::new(l.graph().clone(), FloydFunction::parse("const:1").unwrap());
        assert_eq!(group_perspectivity_defect(l.as_ref(), &k, &flat, 8, 2).unwrap(), 1.0);
    }
}
