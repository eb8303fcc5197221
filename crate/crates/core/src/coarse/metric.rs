//! Metric coarse structures on infinite graphs, judged on nested truncations.
//!
//! Each check computes one non-negative integer per truncation radius (an
//! image width, a preimage size, a covering radius). A quantity that is equal
//! on the last two truncations is read as bounded; one that strictly grows
//! across at least three truncations is read as unbounded; anything else is
//! reported as inconclusive.

use std::collections::{HashSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Ball, LocallyFiniteGraph};
use crate::maps::VertexMap;
use crate::word::Word;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Yes,
    No,
    Inconclusive,
}

impl Verdict {
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::No, _) | (_, Verdict::No) => Verdict::No,
            (Verdict::Yes, Verdict::Yes) => Verdict::Yes,
            _ => Verdict::Inconclusive,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Judgment {
    pub verdict: Verdict,
    /// `(truncation radius, measured quantity)`.
    pub values: Vec<(u32, u64)>,
}

/// Reads a truncation sequence as bounded (`Yes`) or unbounded (`No`).
pub fn judge(values: Vec<(u32, u64)>) -> Judgment {
    let n = values.len();
    let verdict = if n >= 2 && values[n - 1].1 == values[n - 2].1 {
        Verdict::Yes
    } else if n >= 3 && values.windows(2).all(|w| w[1].1 > w[0].1) {
        Verdict::No
    } else {
        Verdict::Inconclusive
    };
    Judgment { verdict, values }
}

fn check_radii(radii: &[u32]) -> Result<()> {
    if radii.len() < 2 || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("truncation radii must be strictly increasing, at least two".into()));
    }
    Ok(())
}

fn truncation(g: &dyn LocallyFiniteGraph, radius: u32) -> Ball {
    Ball::new(g, &g.basepoint(), radius)
}

/// `{(x,y) : d(x,y) ≤ width}` restricted to a ball, as neighbour lists.
fn width_pairs(ball: &Ball, g: &dyn LocallyFiniteGraph, width: u32) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..ball.len() {
        let local = Ball::new(g, &ball.vertices[i], width);
        for v in &local.vertices {
            if let Some(&j) = ball.index.get(v) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Supremum of `d(f(x), f(y))` over pairs with `d(x,y) ≤ width` in each truncation.
pub fn image_width(
    source: &dyn LocallyFiniteGraph,
    target: &dyn LocallyFiniteGraph,
    map: &VertexMap,
    width: u32,
    radii: &[u32],
) -> Result<Judgment> {
    check_radii(radii)?;
    let values = radii
        .iter()
        .map(|&r| {
            let ball = truncation(source, r);
            let images: Vec<Word> = ball.vertices.iter().map(|v| map.apply(v)).collect();
            let w = width_pairs(&ball, source, width)
                .into_iter()
                .map(|(i, j)| target.distance(&images[i], &images[j]))
                .max()
                .unwrap_or(0);
            (r, u64::from(w))
        })
        .collect();
    Ok(judge(values))
}

/// Every width entourage has bounded image.
pub fn is_bornologous(
    source: &dyn LocallyFiniteGraph,
    target: &dyn LocallyFiniteGraph,
    map: &VertexMap,
    widths: &[u32],
    radii: &[u32],
) -> Result<(Verdict, Vec<Judgment>)> {
    let judgments = widths
        .iter()
        .map(|&w| image_width(source, target, map, w, radii))
        .collect::<Result<Vec<_>>>()?;
    let verdict = judgments.iter().fold(Verdict::Yes, |acc, j| acc.and(j.verdict));
    Ok((verdict, judgments))
}

/// Size of `f⁻¹(ball(f(v), width))` inside each truncation.
pub fn preimage_size(
    source: &dyn LocallyFiniteGraph,
    target: &dyn LocallyFiniteGraph,
    map: &VertexMap,
    width: u32,
    radii: &[u32],
) -> Result<Judgment> {
    check_radii(radii)?;
    let center = map.apply(&source.basepoint());
    let values = radii
        .iter()
        .map(|&r| {
            let ball = truncation(source, r);
            let count = ball.vertices.iter().filter(|v| target.distance(&map.apply(v), &center) <= width).count();
            (r, count as u64)
        })
        .collect();
    Ok(judge(values))
}

/// Preimages of the bounded sets `ball(f(v), w)` stay finite.
pub fn is_proper_map(
    source: &dyn LocallyFiniteGraph,
    target: &dyn LocallyFiniteGraph,
    map: &VertexMap,
    widths: &[u32],
    radii: &[u32],
) -> Result<(Verdict, Vec<Judgment>)> {
    let judgments = widths
        .iter()
        .map(|&w| preimage_size(source, target, map, w, radii))
        .collect::<Result<Vec<_>>>()?;
    let verdict = judgments.iter().fold(Verdict::Yes, |acc, j| acc.and(j.verdict));
    Ok((verdict, judgments))
}

/// Supremum of `d(f(s), g(s))` per truncation.
pub fn closeness(
    source: &dyn LocallyFiniteGraph,
    target: &dyn LocallyFiniteGraph,
    f: &VertexMap,
    g: &VertexMap,
    radii: &[u32],
) -> Result<Judgment> {
    check_radii(radii)?;
    let values = radii
        .iter()
        .map(|&r| {
            let ball = truncation(source, r);
            let w = ball.vertices.iter().map(|v| target.distance(&f.apply(v), &g.apply(v))).max().unwrap_or(0);
            (r, u64::from(w))
        })
        .collect();
    Ok(judge(values))
}

/// Distance from `v` to the nearest vertex satisfying `member`, searched up to `limit`.
fn distance_to_set(g: &dyn LocallyFiniteGraph, v: &Word, member: &dyn Fn(&Word) -> bool, limit: u32) -> u32 {
    if member(v) {
        return 0;
    }
    let mut seen = HashSet::from([v.clone()]);
    let mut queue = VecDeque::from([(v.clone(), 0u32)]);
    while let Some((x, d)) = queue.pop_front() {
        if d == limit {
            continue;
        }
        for y in g.neighbors(&x) {
            if member(&y) {
                return d + 1;
            }
            if seen.insert(y.clone()) {
                queue.push_back((y, d + 1));
            }
        }
    }
    limit + 1
}

/// Covering radius of `member` inside each truncation: the smallest `w` with
/// every vertex within `w` of the set. `limit + 1` means not covered within `limit`.
pub fn covering_radius(
    g: &dyn LocallyFiniteGraph,
    member: &dyn Fn(&Word) -> bool,
    radii: &[u32],
    limit: u32,
) -> Result<Judgment> {
    check_radii(radii)?;
    let values = radii
        .iter()
        .map(|&r| {
            let ball = truncation(g, r);
            let w = ball.vertices.iter().map(|v| distance_to_set(g, v, member, limit)).max().unwrap_or(0);
            (r, u64::from(w))
        })
        .collect();
    Ok(judge(values))
}

pub fn is_quasi_dense(
    g: &dyn LocallyFiniteGraph,
    member: &dyn Fn(&Word) -> bool,
    radii: &[u32],
) -> Result<Judgment> {
    let limit = radii.last().copied().unwrap_or(0) * 2 + 1;
    covering_radius(g, member, radii, limit)
}

/// Which coarse structure a truncation-sequence properness check uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricStructure {
    /// Entourages of finite width.
    Bounded,
    /// Every relation is an entourage.
    Maximal,
}

/// A space is proper when bounded sets are topologically bounded (finite).
/// For `Bounded` the largest width-`w` ball is measured; for `Maximal` the
/// whole truncation is bounded and its size is measured.
pub fn is_proper_space(g: &dyn LocallyFiniteGraph, structure: MetricStructure, width: u32, radii: &[u32]) -> Result<Judgment> {
    check_radii(radii)?;
    let values = radii
        .iter()
        .map(|&r| {
            let ball = truncation(g, r);
            let size = match structure {
                MetricStructure::Bounded => {
                    ball.vertices.iter().map(|v| Ball::new(g, v, width).len()).max().unwrap_or(0)
                }
                MetricStructure::Maximal => ball.len(),
            };
            (r, size as u64)
        })
        .collect();
    Ok(judge(values))
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricEquivalence {
    pub verdict: Verdict,
    pub f_width: Vec<Judgment>,
    pub g_width: Vec<Judgment>,
    pub f_preimage: Vec<Judgment>,
    pub g_preimage: Vec<Judgment>,
    /// `sup d(f∘g(y), y)` and `sup d(g∘f(x), x)`.
    pub target_closeness: Judgment,
    pub source_closeness: Judgment,
}

/// Coarse-equivalence certificate for `f: X → Y`, `g: Y → X` with the metric structures.
pub fn coarse_equivalence(
    x: &dyn LocallyFiniteGraph,
    y: &dyn LocallyFiniteGraph,
    f: &VertexMap,
    g: &VertexMap,
    widths: &[u32],
    radii: &[u32],
) -> Result<MetricEquivalence> {
    let (v1, f_width) = is_bornologous(x, y, f, widths, radii)?;
    let (v2, g_width) = is_bornologous(y, x, g, widths, radii)?;
    let (v3, f_preimage) = is_proper_map(x, y, f, widths, radii)?;
    let (v4, g_preimage) = is_proper_map(y, x, g, widths, radii)?;
    let target_closeness = closeness(y, y, &f.after(g), &VertexMap::identity(), radii)?;
    let source_closeness = closeness(x, x, &g.after(f), &VertexMap::identity(), radii)?;
    let verdict = [v1, v2, v3, v4, target_closeness.verdict, source_closeness.verdict]
        .into_iter()
        .fold(Verdict::Yes, Verdict::and);
    Ok(MetricEquivalence { verdict, f_width, g_width, f_preimage, g_preimage, target_closeness, source_closeness })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_graph;

    const RADII: &[u32] = &[4, 8, 16];

    fn map(s: &str) -> VertexMap {
        VertexMap::parse(s).unwrap()
    }

    #[test]
    fn judge_rule() {
        assert_eq!(judge(vec![(1, 3), (2, 3)]).verdict, Verdict::Yes);
        assert_eq!(judge(vec![(1, 1), (2, 2), (3, 4)]).verdict, Verdict::No);
        assert_eq!(judge(vec![(1, 1), (2, 2)]).verdict, Verdict::Inconclusive);
        assert_eq!(judge(vec![(1, 2), (2, 1), (3, 3)]).verdict, Verdict::Inconclusive);
    }

    #[test]
    fn doubling_is_bornologous() {
        let line = parse_graph("line").unwrap();
        let j = image_width(line.as_ref(), line.as_ref(), &map("double"), 3, RADII).unwrap();
        assert_eq!(j.verdict, Verdict::Yes);
        assert!(j.values.iter().all(|&(_, w)| w == 6));
    }

    #[test]
    fn halving_is_coarse_and_constant_is_not_proper() {
        let line = parse_graph("line").unwrap();
        let (b, _) = is_bornologous(line.as_ref(), line.as_ref(), &map("halve"), &[1, 2], RADII).unwrap();
        let (p, _) = is_proper_map(line.as_ref(), line.as_ref(), &map("halve"), &[0, 2], RADII).unwrap();
        assert_eq!((b, p), (Verdict::Yes, Verdict::Yes));
        let (p, _) = is_proper_map(line.as_ref(), line.as_ref(), &map("const:0"), &[0], RADII).unwrap();
        assert_eq!(p, Verdict::No);
    }

    #[test]
    fn closeness_examples() {
        let line = parse_graph("line").unwrap();
        let id = VertexMap::identity();
        assert_eq!(closeness(line.as_ref(), line.as_ref(), &id, &id, RADII).unwrap().values[2].1, 0);
        assert_eq!(closeness(line.as_ref(), line.as_ref(), &id, &map("shift:1"), RADII).unwrap().verdict, Verdict::Yes);
        assert_eq!(closeness(line.as_ref(), line.as_ref(), &id, &map("double"), RADII).unwrap().verdict, Verdict::No);
    }

    #[test]
    fn even_integers_are_quasi_dense_and_a_point_is_not() {
        let line = parse_graph("line").unwrap();
        let evens = |v: &Word| v.first() % 2 == 0;
        let j = is_quasi_dense(line.as_ref(), &evens, RADII).unwrap();
        assert_eq!(j.verdict, Verdict::Yes);
        assert_eq!(j.values[2].1, 1);
        let origin = |v: &Word| v.first() == 0;
        assert_eq!(is_quasi_dense(line.as_ref(), &origin, RADII).unwrap().verdict, Verdict::No);
    }

    #[test]
    fn inclusion_of_evens_is_an_equivalence() {
        let line = parse_graph("line").unwrap();
        // the even integers with consecutive evens adjacent form a copy of the line
        let cert = coarse_equivalence(line.as_ref(), line.as_ref(), &map("double"), &map("halve"), &[1, 2], RADII).unwrap();
        assert_eq!(cert.verdict, Verdict::Yes);
        assert_eq!(cert.target_closeness.values.last().unwrap().1, 1);
        let point = coarse_equivalence(line.as_ref(), line.as_ref(), &map("const:0"), &map("const:0"), &[1], RADII).unwrap();
        assert_eq!(point.verdict, Verdict::No);
    }

    #[test]
    fn properness_of_spaces() {
        let line = parse_graph("line").unwrap();
        let grid = parse_graph("grid").unwrap();
        assert_eq!(is_proper_space(line.as_ref(), MetricStructure::Bounded, 2, RADII).unwrap().verdict, Verdict::Yes);
        assert_eq!(is_proper_space(grid.as_ref(), MetricStructure::Bounded, 2, RADII).unwrap().verdict, Verdict::Yes);
        assert_eq!(is_proper_space(line.as_ref(), MetricStructure::Maximal, 2, RADII).unwrap().verdict, Verdict::No);
    }
}
