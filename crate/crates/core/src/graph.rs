//! Locally finite graphs given by neighbour oracles.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::fs;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::group::{parse_group, Group};
use crate::word::Word;

pub trait LocallyFiniteGraph: Send + Sync {
    fn name(&self) -> String;
    fn basepoint(&self) -> Word;
    /// Neighbours in a fixed, deterministic order.
    fn neighbors(&self, v: &Word) -> Vec<Word>;
    fn contains(&self, v: &Word) -> bool;

    /// Graph distance. The default is a breadth-first search.
    fn distance(&self, x: &Word, y: &Word) -> u32 {
        bfs_distance(self, x, y, u32::MAX).expect("connected graph")
    }

    fn depth(&self, v: &Word) -> u32 {
        self.distance(&self.basepoint(), v)
    }

    fn is_finite(&self) -> bool {
        false
    }

    fn label(&self, v: &Word) -> String {
        v.to_string()
    }

    fn parse_vertex(&self, s: &str) -> Result<Word> {
        let v: Word = s.parse()?;
        if self.contains(&v) {
            Ok(v)
        } else {
            Err(Error::Parse(format!("`{s}` is not a vertex of {}", self.name())))
        }
    }
}

impl fmt::Debug for dyn LocallyFiniteGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph({})", self.name())
    }
}

pub fn bfs_distance<G: LocallyFiniteGraph + ?Sized>(g: &G, x: &Word, y: &Word, limit: u32) -> Option<u32> {
    if x == y {
        return Some(0);
    }
    let mut seen = std::collections::HashSet::from([x.clone()]);
    let mut queue = VecDeque::from([(x.clone(), 0u32)]);
    while let Some((v, d)) = queue.pop_front() {
        if d >= limit {
            continue;
        }
        for w in g.neighbors(&v) {
            if w == *y {
                return Some(d + 1);
            }
            if seen.insert(w.clone()) {
                queue.push_back((w, d + 1));
            }
        }
    }
    None
}

/// Breadth-first ball with local indexing. Vertices are listed by distance,
/// and lexicographically within a sphere.
#[derive(Clone, Debug)]
pub struct Ball {
    pub center: Word,
    pub radius: u32,
    pub vertices: Vec<Word>,
    pub dist: Vec<u32>,
    pub index: HashMap<Word, usize>,
    pub adj: Vec<Vec<usize>>,
}

impl Ball {
    pub fn new(g: &dyn LocallyFiniteGraph, center: &Word, radius: u32) -> Self {
        Self::bounded(g, center, radius, usize::MAX).expect("unbounded ball")
    }

    /// As `new`, failing once more than `max_vertices` vertices are found.
    pub fn bounded(g: &dyn LocallyFiniteGraph, center: &Word, radius: u32, max_vertices: usize) -> Result<Self> {
        let mut vertices = vec![center.clone()];
        let mut dist = vec![0];
        let mut index = HashMap::from([(center.clone(), 0usize)]);
        let mut frontier = vec![center.clone()];
        for d in 1..=radius {
            let mut next: Vec<Word> = Vec::new();
            for v in &frontier {
                for w in g.neighbors(v) {
                    if !index.contains_key(&w) {
                        index.insert(w.clone(), usize::MAX);
                        next.push(w);
                    }
                }
            }
            next.sort();
            for w in &next {
                index.insert(w.clone(), vertices.len());
                vertices.push(w.clone());
                dist.push(d);
            }
            if vertices.len() > max_vertices {
                return Err(Error::Budget(format!(
                    "ball of radius {radius} in {} exceeds {max_vertices} vertices",
                    g.name()
                )));
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        let adj = vertices
            .iter()
            .map(|v| g.neighbors(v).iter().filter_map(|w| index.get(w).copied()).collect())
            .collect();
        Ok(Ball { center: center.clone(), radius, vertices, dist, index, adj })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, v: &Word) -> bool {
        self.index.contains_key(v)
    }

    /// Vertices at exactly distance `d`.
    pub fn sphere(&self, d: u32) -> impl Iterator<Item = &Word> {
        self.vertices.iter().zip(&self.dist).filter(move |(_, &k)| k == d).map(|(v, _)| v)
    }

    /// All-pairs hop distances inside the ball (as an induced subgraph).
    pub fn hop_distances_from(&self, source: usize) -> Vec<u32> {
        let mut out = vec![u32::MAX; self.len()];
        out[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(i) = queue.pop_front() {
            for &j in &self.adj[i] {
                if out[j] == u32::MAX {
                    out[j] = out[i] + 1;
                    queue.push_back(j);
                }
            }
        }
        out
    }
}

/// Cayley graph with edges `g ~ g·s`; left multiplication acts by automorphisms.
#[derive(Clone)]
pub struct CayleyGraph {
    group: Arc<dyn Group>,
    gens: Vec<Word>,
    name: String,
}

impl CayleyGraph {
    pub fn new(group: Arc<dyn Group>) -> Self {
        let name = format!("cayley:{}", group.name());
        Self::named(group, name)
    }

    pub fn named(group: Arc<dyn Group>, name: impl Into<String>) -> Self {
        let gens = group.symmetric_generators();
        CayleyGraph { group, gens, name: name.into() }
    }

    pub fn group(&self) -> &Arc<dyn Group> {
        &self.group
    }
}

impl LocallyFiniteGraph for CayleyGraph {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn basepoint(&self) -> Word {
        self.group.identity()
    }

    fn neighbors(&self, v: &Word) -> Vec<Word> {
        let mut out: Vec<Word> = self.gens.iter().map(|s| self.group.multiply(v, s)).collect();
        out.sort();
        out.dedup();
        out
    }

    fn contains(&self, v: &Word) -> bool {
        if let Some(elements) = self.group.elements() {
            return elements.contains(v);
        }
        let id = self.group.identity();
        self.group.normal_form(v) == *v && (id.is_empty() || v.len() == id.len())
    }

    fn distance(&self, x: &Word, y: &Word) -> u32 {
        self.group.word_length(&self.group.multiply(&self.group.invert(x), y))
    }

    fn is_finite(&self) -> bool {
        self.group.elements().is_some()
    }
}

/// The graph `ℕ` with edges `n ~ n+1`.
#[derive(Clone, Debug)]
pub struct HalfLine;

impl LocallyFiniteGraph for HalfLine {
    fn name(&self) -> String {
        "halfline".into()
    }

    fn basepoint(&self) -> Word {
        Word::scalar(0)
    }

    fn neighbors(&self, v: &Word) -> Vec<Word> {
        let n = v.first();
        if n == 0 {
            vec![Word::scalar(1)]
        } else {
            vec![Word::scalar(n - 1), Word::scalar(n + 1)]
        }
    }

    fn contains(&self, v: &Word) -> bool {
        v.len() == 1 && v.first() >= 0
    }

    fn distance(&self, x: &Word, y: &Word) -> u32 {
        x.first().abs_diff(y.first())
    }
}

/// A finite graph with string vertex labels. Vertex `i` is the word `[i]`.
#[derive(Clone, Debug)]
pub struct FiniteGraph {
    name: String,
    labels: Vec<String>,
    adj: Vec<Vec<usize>>,
    dist: Vec<Vec<u32>>,
}

impl FiniteGraph {
    /// Builds an undirected graph; edges are symmetrised and deduplicated.
    pub fn new(name: impl Into<String>, labels: Vec<String>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::Parse("graph has no vertices".into()));
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Parse(format!("edge ({a},{b}) out of range")));
            }
            if a != b {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
        }
        let dist: Vec<Vec<u32>> = (0..n)
            .map(|s| {
                let mut d = vec![u32::MAX; n];
                d[s] = 0;
                let mut q = VecDeque::from([s]);
                while let Some(i) = q.pop_front() {
                    for &j in &adj[i] {
                        if d[j] == u32::MAX {
                            d[j] = d[i] + 1;
                            q.push_back(j);
                        }
                    }
                }
                d
            })
            .collect();
        if dist[0].contains(&u32::MAX) {
            return Err(Error::Parse("graph is not connected".into()));
        }
        Ok(FiniteGraph { name: name.into(), labels, adj, dist })
    }

    /// Reads the `id: n1 n2 ...` adjacency format. Blank lines and `#`
    /// comments are ignored; ids are arbitrary tokens; the first id listed is
    /// the basepoint.
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut labels: Vec<String> = Vec::new();
        let mut ids: BTreeMap<String, usize> = BTreeMap::new();
        let mut edges = Vec::new();
        let mut intern = |s: &str, labels: &mut Vec<String>| -> usize {
            *ids.entry(s.to_string()).or_insert_with(|| {
                labels.push(s.to_string());
                labels.len() - 1
            })
        };
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (head, tail) = line
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `id: neighbours`", lineno + 1)))?;
            let head = head.trim();
            if head.is_empty() || head.contains(char::is_whitespace) {
                return Err(Error::Parse(format!("line {}: bad vertex id `{head}`", lineno + 1)));
            }
            let a = intern(head, &mut labels);
            for tok in tail.split_whitespace() {
                let b = intern(tok, &mut labels);
                edges.push((a, b));
            }
        }
        Self::new(name, labels, &edges)
    }

    pub fn from_file(path: &str) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{path}: {e}")))?;
        Self::parse(format!("file:{path}"), &text)
    }

    pub fn cycle(n: usize) -> Result<Self> {
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::new(format!("cycle:{n}"), (0..n).map(|i| i.to_string()).collect(), &edges)
    }

    pub fn order(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adj
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(a, row)| row.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect()
    }

    /// Writes the adjacency format read by `parse`.
    pub fn to_adjacency_text(&self) -> String {
        let mut out = String::new();
        for (i, row) in self.adj.iter().enumerate() {
            out.push_str(&self.labels[i]);
            out.push(':');
            for &j in row {
                out.push(' ');
                out.push_str(&self.labels[j]);
            }
            out.push('\n');
        }
        out
    }

    fn idx(&self, v: &Word) -> usize {
        v.first() as usize
    }
}

impl LocallyFiniteGraph for FiniteGraph {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn basepoint(&self) -> Word {
        Word::scalar(0)
    }

    fn neighbors(&self, v: &Word) -> Vec<Word> {
        self.adj[self.idx(v)].iter().map(|&j| Word::scalar(j as i32)).collect()
    }

    fn contains(&self, v: &Word) -> bool {
        v.len() == 1 && v.first() >= 0 && (v.first() as usize) < self.order()
    }

    fn distance(&self, x: &Word, y: &Word) -> u32 {
        self.dist[self.idx(x)][self.idx(y)]
    }

    fn is_finite(&self) -> bool {
        true
    }

    fn label(&self, v: &Word) -> String {
        self.labels[self.idx(v)].clone()
    }

    fn parse_vertex(&self, s: &str) -> Result<Word> {
        self.labels
            .iter()
            .position(|l| l == s.trim())
            .map(|i| Word::scalar(i as i32))
            .ok_or_else(|| Error::Parse(format!("`{s}` is not a vertex of {}", self.name)))
    }
}

/// Parses `line`, `grid`, `lattice:d`, `tree:k` (k-regular), `cycle:n`,
/// `halfline`, `cayley:<group>` and `file:<path>`.
pub fn parse_graph(spec: &str) -> Result<Arc<dyn LocallyFiniteGraph>> {
    let spec = spec.trim();
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let positive = || -> Result<i32> {
        rest.parse::<i32>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Parse(format!("graph `{spec}` needs a positive integer parameter")))
    };
    Ok(match kind {
        "line" => Arc::new(CayleyGraph::named(parse_group("zn:1")?, "line")),
        "grid" => Arc::new(CayleyGraph::named(parse_group("zn:2")?, "grid")),
        "lattice" => Arc::new(CayleyGraph::named(parse_group(&format!("zn:{}", positive()?))?, spec)),
        "tree" => {
            let k = positive()?;
            if k < 2 {
                return Err(Error::Parse("trees need degree at least 2".into()));
            }
            Arc::new(CayleyGraph::named(parse_group(&format!("z2free:{k}"))?, spec))
        }
        "cycle" => {
            let n = positive()?;
            if n < 3 {
                return Err(Error::Parse("cycles need at least 3 vertices".into()));
            }
            Arc::new(FiniteGraph::cycle(n as usize)?)
        }
        "halfline" => Arc::new(HalfLine),
        "cayley" => Arc::new(CayleyGraph::new(parse_group(rest)?)),
        "file" => Arc::new(FiniteGraph::from_file(rest)?),
        other => return Err(Error::Parse(format!("unknown graph kind `{other}`"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn closed_form_distances_match_bfs() {
        for spec in ["line", "grid", "tree:3", "cayley:free:2", "cycle:7", "halfline", "lattice:3"] {
            let g = parse_graph(spec).unwrap();
            let ball = Ball::new(g.as_ref(), &g.basepoint(), 3);
            for x in ball.vertices.iter().take(15) {
                for y in ball.vertices.iter().step_by(3) {
                    assert_eq!(g.distance(x, y), bfs_distance(g.as_ref(), x, y, 20).unwrap(), "{spec} {x} {y}");
                }
            }
        }
    }

    #[test]
    fn ball_sizes() {
        let sizes = |spec: &str, r| Ball::new(parse_graph(spec).unwrap().as_ref(), &parse_graph(spec).unwrap().basepoint(), r).len();
        assert_eq!(sizes("line", 5), 11);
        assert_eq!(sizes("grid", 2), 13);
        assert_eq!(sizes("tree:3", 3), 1 + 3 + 6 + 12);
        assert_eq!(sizes("cayley:free:2", 6), 1 + 4 + 12 + 36 + 108 + 324 + 972);
        assert_eq!(sizes("cycle:6", 10), 6);
    }

    #[test]
    fn ball_order_is_by_distance_then_lexicographic() {
        let g = parse_graph("line").unwrap();
        let b = Ball::new(g.as_ref(), &g.basepoint(), 2);
        assert_eq!(b.vertices, vec![w("0"), w("-1"), w("1"), w("-2"), w("2")]);
        assert_eq!(b.sphere(2).cloned().collect::<Vec<_>>(), vec![w("-2"), w("2")]);
    }

    #[test]
    fn adjacency_file_round_trip() {
        let text = "a: b c\nb: c # triangle\n\nd: c\n";
        let g = FiniteGraph::parse("t", text).unwrap();
        assert_eq!(g.order(), 4);
        assert_eq!(g.edges().len(), 4);
        let again = FiniteGraph::parse("t", &g.to_adjacency_text()).unwrap();
        assert_eq!(again.edges(), g.edges());
        assert_eq!(g.distance(&g.parse_vertex("a").unwrap(), &g.parse_vertex("d").unwrap()), 2);
        assert_eq!(g.label(&Word::scalar(3)), "d");
    }

    #[test]
    fn adjacency_file_errors() {
        assert!(FiniteGraph::parse("t", "a b c\n").is_err());
        assert!(FiniteGraph::parse("t", "a: b\nc: d\n").is_err());
        assert!(FiniteGraph::parse("t", "").is_err());
    }

    #[test]
    fn membership_and_parsing() {
        let tree = parse_graph("tree:3").unwrap();
        assert!(tree.contains(&w("0,1,0")));
        assert!(!tree.contains(&w("0,0")));
        assert_eq!(tree.parse_vertex("e").unwrap(), Word::empty());
        let grid = parse_graph("grid").unwrap();
        assert!(grid.contains(&w("3,-2")));
        assert!(!grid.contains(&w("3")));
        assert!(parse_graph("tree:1").is_err());
        assert!(parse_graph("torus").is_err());
    }
}
