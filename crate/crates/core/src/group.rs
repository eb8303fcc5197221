//! Group oracles: elements are `Word`s in normal form.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::word::Word;

pub trait Group: Send + Sync {
    fn name(&self) -> String;
    fn identity(&self) -> Word;
    /// Generating set, closed under inversion is not required.
    fn generators(&self) -> Vec<Word>;
    fn multiply(&self, a: &Word, b: &Word) -> Word;
    fn invert(&self, a: &Word) -> Word;
    fn normal_form(&self, a: &Word) -> Word;

    /// Word length with respect to `generators()` and their inverses.
    fn word_length(&self, a: &Word) -> u32 {
        bfs_word_length(self, a, 64).unwrap_or(u32::MAX)
    }

    /// All elements, for finite groups.
    fn elements(&self) -> Option<Vec<Word>> {
        None
    }

    fn symmetric_generators(&self) -> Vec<Word> {
        let mut out: Vec<Word> = Vec::new();
        for g in self.generators() {
            for h in [g.clone(), self.invert(&g)] {
                if h != self.identity() && !out.contains(&h) {
                    out.push(h);
                }
            }
        }
        out
    }

    /// Elements of word length at most `radius`, in breadth-first order.
    fn ball(&self, radius: u32) -> Vec<Word> {
        let gens = self.symmetric_generators();
        let mut seen = HashSet::from([self.identity()]);
        let mut order = vec![self.identity()];
        let mut frontier = vec![self.identity()];
        for _ in 0..radius {
            let mut next = Vec::new();
            for g in &frontier {
                for s in &gens {
                    let h = self.multiply(g, s);
                    if seen.insert(h.clone()) {
                        next.push(h);
                    }
                }
            }
            next.sort();
            order.extend(next.iter().cloned());
            frontier = next;
        }
        order
    }

    fn power(&self, a: &Word, n: i64) -> Word {
        let base = if n < 0 { self.invert(a) } else { a.clone() };
        (0..n.unsigned_abs()).fold(self.identity(), |acc, _| self.multiply(&acc, &base))
    }
}

fn bfs_word_length<G: Group + ?Sized>(group: &G, a: &Word, limit: u32) -> Option<u32> {
    let target = group.normal_form(a);
    let gens = group.symmetric_generators();
    let mut seen = HashSet::from([group.identity()]);
    let mut queue = VecDeque::from([(group.identity(), 0u32)]);
    while let Some((g, d)) = queue.pop_front() {
        if g == target {
            return Some(d);
        }
        if d == limit {
            continue;
        }
        for s in &gens {
            let h = group.multiply(&g, s);
            if seen.insert(h.clone()) {
                queue.push_back((h, d + 1));
            }
        }
    }
    None
}

impl fmt::Debug for dyn Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Group({})", self.name())
    }
}

/// `ℤ^d` with the standard basis.
#[derive(Clone, Debug)]
pub struct Zn {
    pub dim: usize,
}

impl Group for Zn {
    fn name(&self) -> String {
        format!("zn:{}", self.dim)
    }

    fn identity(&self) -> Word {
        Word::from(vec![0; self.dim])
    }

    fn generators(&self) -> Vec<Word> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| i32::from(i == j)).collect())
            .collect()
    }

    fn multiply(&self, a: &Word, b: &Word) -> Word {
        a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x + y).collect()
    }

    fn invert(&self, a: &Word) -> Word {
        a.as_slice().iter().map(|x| -x).collect()
    }

    fn normal_form(&self, a: &Word) -> Word {
        let mut v: Vec<i32> = a.as_slice().to_vec();
        v.resize(self.dim, 0);
        Word::from(v)
    }

    fn word_length(&self, a: &Word) -> u32 {
        a.as_slice().iter().map(|x| x.unsigned_abs()).sum()
    }
}

/// `ℤ/n`, elements `[0..n)`.
#[derive(Clone, Debug)]
pub struct Cyclic {
    pub order: i32,
}

impl Group for Cyclic {
    fn name(&self) -> String {
        format!("zmod:{}", self.order)
    }

    fn identity(&self) -> Word {
        Word::scalar(0)
    }

    fn generators(&self) -> Vec<Word> {
        vec![self.normal_form(&Word::scalar(1))]
    }

    fn multiply(&self, a: &Word, b: &Word) -> Word {
        Word::scalar((a.first() + b.first()).rem_euclid(self.order))
    }

    fn invert(&self, a: &Word) -> Word {
        Word::scalar((-a.first()).rem_euclid(self.order))
    }

    fn normal_form(&self, a: &Word) -> Word {
        Word::scalar(a.first().rem_euclid(self.order))
    }

    fn word_length(&self, a: &Word) -> u32 {
        let r = a.first().rem_euclid(self.order);
        r.min(self.order - r) as u32
    }

    fn elements(&self) -> Option<Vec<Word>> {
        Some((0..self.order).map(Word::scalar).collect())
    }
}

/// Free group on `rank` letters; letter `i` is `i+1`, its inverse `-(i+1)`.
#[derive(Clone, Debug)]
pub struct FreeGroup {
    pub rank: i32,
}

fn free_reduce(letters: impl IntoIterator<Item = i32>, involutive: bool) -> Word {
    let mut out: Vec<i32> = Vec::new();
    for x in letters {
        let cancels = match out.last() {
            Some(&y) if involutive => y == x,
            Some(&y) => y == -x,
            None => false,
        };
        if cancels {
            out.pop();
        } else {
            out.push(x);
        }
    }
    Word::from(out)
}

impl Group for FreeGroup {
    fn name(&self) -> String {
        format!("free:{}", self.rank)
    }

    fn identity(&self) -> Word {
        Word::empty()
    }

    fn generators(&self) -> Vec<Word> {
        (1..=self.rank).map(Word::scalar).collect()
    }

    fn multiply(&self, a: &Word, b: &Word) -> Word {
        free_reduce(a.as_slice().iter().chain(b.as_slice()).copied(), false)
    }

    fn invert(&self, a: &Word) -> Word {
        a.as_slice().iter().rev().map(|x| -x).collect()
    }

    fn normal_form(&self, a: &Word) -> Word {
        free_reduce(a.as_slice().iter().copied(), false)
    }

    fn word_length(&self, a: &Word) -> u32 {
        self.normal_form(a).len() as u32
    }
}

/// Free product of `factors` copies of `ℤ/2`; its Cayley graph is the
/// `factors`-regular tree. Letters are `0..factors`.
#[derive(Clone, Debug)]
pub struct InvolutionFreeProduct {
    pub factors: i32,
}

impl Group for InvolutionFreeProduct {
    fn name(&self) -> String {
        format!("z2free:{}", self.factors)
    }

    fn identity(&self) -> Word {
        Word::empty()
    }

    fn generators(&self) -> Vec<Word> {
        (0..self.factors).map(Word::scalar).collect()
    }

    fn multiply(&self, a: &Word, b: &Word) -> Word {
        free_reduce(a.as_slice().iter().chain(b.as_slice()).copied(), true)
    }

    fn invert(&self, a: &Word) -> Word {
        a.as_slice().iter().rev().copied().collect()
    }

    fn normal_form(&self, a: &Word) -> Word {
        free_reduce(a.as_slice().iter().copied(), true)
    }

    fn word_length(&self, a: &Word) -> u32 {
        self.normal_form(a).len() as u32
    }
}

/// Infinite dihedral group as isometries `x ↦ s·x + t` of `ℤ`, stored as `[t, s]`.
#[derive(Clone, Debug)]
pub struct InfiniteDihedral;

impl Group for InfiniteDihedral {
    fn name(&self) -> String {
        "dihedral".into()
    }

    fn identity(&self) -> Word {
        Word::new(&[0, 1])
    }

    fn generators(&self) -> Vec<Word> {
        vec![Word::new(&[1, 1]), Word::new(&[0, -1])]
    }

    fn multiply(&self, a: &Word, b: &Word) -> Word {
        let (t, s) = (a.as_slice()[0], a.as_slice()[1]);
        let (u, r) = (b.as_slice()[0], b.as_slice()[1]);
        Word::new(&[t + s * u, s * r])
    }

    fn invert(&self, a: &Word) -> Word {
        let (t, s) = (a.as_slice()[0], a.as_slice()[1]);
        Word::new(&[-s * t, s])
    }

    fn normal_form(&self, a: &Word) -> Word {
        let s = a.as_slice();
        Word::new(&[s.first().copied().unwrap_or(0), if s.get(1) == Some(&-1) { -1 } else { 1 }])
    }

    fn word_length(&self, a: &Word) -> u32 {
        let s = a.as_slice();
        s[0].unsigned_abs() + u32::from(s[1] == -1)
    }
}

/// Permutation group on `0..degree` generated by the given permutations.
/// `(a·b)(i) = a(b(i))`.
#[derive(Clone, Debug)]
pub struct PermGroup {
    degree: usize,
    gens: Vec<Word>,
    elements: Vec<Word>,
}

impl PermGroup {
    pub fn new(degree: usize, generators: Vec<Vec<usize>>) -> Result<Self> {
        let mut gens = Vec::new();
        for g in generators {
            let set: BTreeSet<usize> = g.iter().copied().collect();
            if g.len() != degree || set.len() != degree || set.iter().any(|&i| i >= degree) {
                return Err(Error::InvalidParameter(format!("{g:?} is not a permutation of 0..{degree}")));
            }
            gens.push(g.iter().map(|&i| i as i32).collect::<Word>());
        }
        let mut group = PermGroup { degree, gens, elements: Vec::new() };
        let mut elements: BTreeSet<Word> = BTreeSet::from([group.identity()]);
        let mut frontier = vec![group.identity()];
        while let Some(g) = frontier.pop() {
            for s in &group.gens {
                let h = group.multiply(s, &g);
                if elements.insert(h.clone()) {
                    frontier.push(h);
                }
            }
        }
        group.elements = elements.into_iter().collect();
        Ok(group)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn apply(&self, g: &Word, point: usize) -> usize {
        g.as_slice()[point] as usize
    }
}

impl Group for PermGroup {
    fn name(&self) -> String {
        let gens: Vec<String> = self.gens.iter().map(|g| g.to_string()).collect();
        format!("perm:{}:{}", self.degree, gens.join(";"))
    }

    fn identity(&self) -> Word {
        (0..self.degree as i32).collect()
    }

    fn generators(&self) -> Vec<Word> {
        self.gens.clone()
    }

    fn multiply(&self, a: &Word, b: &Word) -> Word {
        b.as_slice().iter().map(|&i| a.as_slice()[i as usize]).collect()
    }

    fn invert(&self, a: &Word) -> Word {
        let mut inv = vec![0i32; self.degree];
        for (i, &j) in a.as_slice().iter().enumerate() {
            inv[j as usize] = i as i32;
        }
        Word::from(inv)
    }

    fn normal_form(&self, a: &Word) -> Word {
        a.clone()
    }

    fn elements(&self) -> Option<Vec<Word>> {
        Some(self.elements.clone())
    }
}

/// The trivial group.
#[derive(Clone, Debug)]
pub struct TrivialGroup;

impl Group for TrivialGroup {
    fn name(&self) -> String {
        "trivial".into()
    }

    fn identity(&self) -> Word {
        Word::empty()
    }

    fn generators(&self) -> Vec<Word> {
        Vec::new()
    }

    fn multiply(&self, _: &Word, _: &Word) -> Word {
        Word::empty()
    }

    fn invert(&self, _: &Word) -> Word {
        Word::empty()
    }

    fn normal_form(&self, _: &Word) -> Word {
        Word::empty()
    }

    fn word_length(&self, _: &Word) -> u32 {
        0
    }

    fn elements(&self) -> Option<Vec<Word>> {
        Some(vec![Word::empty()])
    }
}

/// Parses `zn:d`, `zmod:n`, `free:k`, `z2free:k`, `dihedral`, `trivial` and
/// `perm:n:p;q;...` where each permutation is a comma list of images.
pub fn parse_group(spec: &str) -> Result<Arc<dyn Group>> {
    let parts: Vec<&str> = spec.trim().splitn(3, ':').collect();
    let int = |i: usize| -> Result<i32> {
        parts
            .get(i)
            .and_then(|s| s.parse().ok())
            .filter(|&n: &i32| n > 0)
            .ok_or_else(|| Error::Parse(format!("group `{spec}` needs a positive integer parameter")))
    };
    Ok(match parts[0] {
        "zn" => Arc::new(Zn { dim: int(1)? as usize }),
        "zmod" => Arc::new(Cyclic { order: int(1)? }),
        "free" => Arc::new(FreeGroup { rank: int(1)? }),
        "z2free" => Arc::new(InvolutionFreeProduct { factors: int(1)? }),
        "dihedral" => Arc::new(InfiniteDihedral),
        "trivial" => Arc::new(TrivialGroup),
        "perm" => {
            let degree = int(1)? as usize;
            let gens = parts
                .get(2)
                .map(|s| {
                    s.split(';')
                        .filter(|p| !p.trim().is_empty())
                        .map(|p| {
                            p.split(',')
                                .map(|x| x.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad permutation `{p}`"))))
                                .collect::<Result<Vec<_>>>()
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .transpose()?
                .unwrap_or_default();
            Arc::new(PermGroup::new(degree, gens)?)
        }
        other => return Err(Error::Parse(format!("unknown group kind `{other}`"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn groups() -> Vec<Arc<dyn Group>> {
        ["zn:1", "zn:2", "zmod:5", "free:2", "z2free:3", "dihedral", "perm:3:1,0,2;1,2,0", "trivial"]
            .iter()
            .map(|s| parse_group(s).unwrap())
            .collect()
    }

    #[test]
    fn oracle_axioms_on_balls() {
        for g in groups() {
            let ball = g.ball(2);
            let e = g.identity();
            for a in &ball {
                assert_eq!(g.normal_form(a), *a, "{}", g.name());
                assert_eq!(g.multiply(a, &e), *a);
                assert_eq!(g.multiply(&e, a), *a);
                assert_eq!(g.invert(&g.invert(a)), *a);
                assert_eq!(g.multiply(a, &g.invert(a)), e);
                for b in ball.iter().take(6) {
                    for c in ball.iter().take(6) {
                        let left = g.multiply(&g.multiply(a, b), c);
                        let right = g.multiply(a, &g.multiply(b, c));
                        assert_eq!(left, right, "{}", g.name());
                    }
                }
            }
        }
    }

    #[test]
    fn closed_form_lengths_match_breadth_first_search() {
        for g in groups() {
            for a in g.ball(3) {
                assert_eq!(g.word_length(&a), bfs_word_length(g.as_ref(), &a, 16).unwrap(), "{} {a}", g.name());
            }
        }
    }

    #[test]
    fn ball_sizes() {
        assert_eq!(Zn { dim: 2 }.ball(2).len(), 13);
        assert_eq!(FreeGroup { rank: 2 }.ball(2).len(), 1 + 4 + 12);
        assert_eq!(InvolutionFreeProduct { factors: 3 }.ball(3).len(), 1 + 3 + 6 + 12);
        assert_eq!(parse_group("perm:3:1,0,2;1,2,0").unwrap().elements().unwrap().len(), 6);
    }

    #[test]
    fn dihedral_acts_by_isometries() {
        let d = InfiniteDihedral;
        let act = |g: &Word, x: i32| g.as_slice()[1] * x + g.as_slice()[0];
        for g in d.ball(3) {
            for h in d.ball(2) {
                for x in -3..=3 {
                    assert_eq!(act(&d.multiply(&g, &h), x), act(&g, act(&h, x)));
                }
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(parse_group("free:0").is_err());
        assert!(parse_group("perm:2:0,0").is_err());
        assert!(parse_group("lie:3").is_err());
    }

    proptest! {
        #[test]
        fn prop_free_group_inverse(letters in prop::collection::vec(prop::sample::select(vec![1, -1, 2, -2]), 0..12)) {
            let g = FreeGroup { rank: 2 };
            let w = g.normal_form(&Word::from(letters));
            prop_assert_eq!(g.multiply(&w, &g.invert(&w)), g.identity());
            prop_assert_eq!(g.word_length(&w) as usize, w.len());
        }
    }
}
