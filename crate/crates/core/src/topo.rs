//! Finite topological spaces, admissible maps and their Artin-Wraith glueings.
//!
//! A space on `n <= 16` points is stored as its family of closed sets, each a
//! bitmask over point indices. Continuity is always decided by pulling back
//! every closed set of the target and testing membership in the source family.
//!
//! Admissible maps are stored by their values on distinct point-closures. In a
//! finite space every closed set is the union of the closures of its points,
//! so evaluating `f(A)` as the union of the table entries of the points of `A`
//! is automatically union-preserving and sends the empty set to the empty set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Subset of a finite space, one bit per point.
pub type Mask = u32;

pub const MAX_POINTS: usize = 16;

/// Largest space accepted by the exhaustive enumerators.
pub const ENUMERATION_POINTS: usize = 4;

/// Largest number of admissible maps a single enumeration may produce.
pub const ENUMERATION_MAPS: u64 = 1 << 20;

pub fn bits(mask: Mask) -> impl Iterator<Item = usize> {
    (0..MAX_POINTS).filter(move |i| mask >> i & 1 == 1)
}

fn full_mask(n: usize) -> Mask {
    if n == 0 {
        0
    } else {
        Mask::MAX >> (32 - n)
    }
}

#[derive(Debug)]
struct SpaceData {
    labels: Vec<String>,
    closed: Vec<Mask>,
    member: Vec<u64>,
    point_closure: Vec<Mask>,
}

/// A finite topological space given by its closed sets.
#[derive(Clone)]
pub struct FinSpace(Arc<SpaceData>);

impl FinSpace {
    /// Builds a space and checks that `closed` is the closed-set family of a
    /// topology: contains the empty set and the whole space, closed under
    /// pairwise union and intersection.
    pub fn new(labels: Vec<String>, closed: impl IntoIterator<Item = Mask>) -> Result<Self> {
        let space = Self::build(labels, closed)?;
        space.check_topology()?;
        Ok(space)
    }

    fn build(labels: Vec<String>, closed: impl IntoIterator<Item = Mask>) -> Result<Self> {
        let n = labels.len();
        if n > MAX_POINTS {
            return Err(Error::InvalidSpace(format!("{n} points, at most {MAX_POINTS} supported")));
        }
        let unique: BTreeSet<&String> = labels.iter().collect();
        if unique.len() != n {
            return Err(Error::InvalidSpace("duplicate point labels".into()));
        }
        let full = full_mask(n);
        let closed: BTreeSet<Mask> = closed.into_iter().collect();
        if let Some(bad) = closed.iter().find(|&&c| c & !full != 0) {
            return Err(Error::InvalidSpace(format!("closed set {bad:#b} mentions unknown points")));
        }
        let closed: Vec<Mask> = closed.into_iter().collect();
        let mut member = vec![0u64; ((1usize << n) + 63) / 64];
        for &c in &closed {
            member[c as usize / 64] |= 1 << (c as usize % 64);
        }
        let point_closure = (0..n)
            .map(|i| {
                closed
                    .iter()
                    .filter(|&&c| c >> i & 1 == 1)
                    .fold(full, |acc, &c| acc & c)
            })
            .collect();
        Ok(FinSpace(Arc::new(SpaceData { labels, closed, member, point_closure })))
    }

    fn check_topology(&self) -> Result<()> {
        let full = self.full();
        if !self.is_closed(0) || !self.is_closed(full) {
            return Err(Error::InvalidSpace("empty set and whole space must be closed".into()));
        }
        let closed = self.closed_sets();
        for (i, &a) in closed.iter().enumerate() {
            for &b in &closed[i + 1..] {
                if !self.is_closed(a | b) || !self.is_closed(a & b) {
                    return Err(Error::InvalidSpace(format!(
                        "family not closed under union/intersection at {a:#b}, {b:#b}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn from_named(points: &[&str], closed: &[&[&str]]) -> Result<Self> {
        let labels: Vec<String> = points.iter().map(|s| s.to_string()).collect();
        let masks = closed
            .iter()
            .map(|set| mask_of_labels(&labels, set.iter().copied()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(labels, masks)
    }

    pub fn discrete(labels: Vec<String>) -> Self {
        let n = labels.len();
        Self::new(labels, 0..=full_mask(n)).expect("discrete topology")
    }

    pub fn indiscrete(labels: Vec<String>) -> Self {
        let n = labels.len();
        Self::new(labels, [0, full_mask(n)]).expect("indiscrete topology")
    }

    pub fn len(&self) -> usize {
        self.0.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.0.labels
    }

    pub fn full(&self) -> Mask {
        full_mask(self.len())
    }

    /// Closed sets in ascending mask order.
    pub fn closed_sets(&self) -> &[Mask] {
        &self.0.closed
    }

    pub fn is_closed(&self, mask: Mask) -> bool {
        let i = mask as usize;
        i >> self.len() == 0 && self.0.member[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn point_closure(&self, point: usize) -> Mask {
        self.0.point_closure[point]
    }

    /// Smallest closed set containing `mask`.
    pub fn closure(&self, mask: Mask) -> Mask {
        bits(mask).fold(0, |acc, i| acc | self.0.point_closure[i])
    }

    /// The distinct point-closures `cl{x}`, sorted.
    pub fn distinct_closures(&self) -> Vec<Mask> {
        let set: BTreeSet<Mask> = self.0.point_closure.iter().copied().collect();
        set.into_iter().collect()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.0.labels.iter().position(|l| l == label)
    }

    pub fn mask_of(&self, labels: &[&str]) -> Result<Mask> {
        mask_of_labels(&self.0.labels, labels.iter().copied())
    }

    pub fn labels_of(&self, mask: Mask) -> Vec<String> {
        bits(mask).map(|i| self.0.labels[i].clone()).collect()
    }

    /// Same topology with points renamed `{prefix}{old}`.
    pub fn relabel(&self, prefix: &str) -> Self {
        let labels = self.0.labels.iter().map(|l| format!("{prefix}{l}")).collect();
        Self::build(labels, self.0.closed.iter().copied()).expect("relabel keeps validity")
    }

    /// Subspace topology on the points of `mask`, in increasing index order.
    pub fn subspace(&self, mask: Mask) -> Self {
        let kept: Vec<usize> = bits(mask).filter(|&i| i < self.len()).collect();
        let compress = |c: Mask| {
            kept.iter()
                .enumerate()
                .filter(|(_, &old)| c >> old & 1 == 1)
                .fold(0, |acc, (new, _)| acc | 1 << new)
        };
        let labels = kept.iter().map(|&i| self.0.labels[i].clone()).collect();
        Self::build(labels, self.0.closed.iter().map(|&c| compress(c)))
            .expect("subspace of a valid space")
    }
}

impl PartialEq for FinSpace {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.labels == other.0.labels && self.0.closed == other.0.closed)
    }
}

impl Eq for FinSpace {}

impl fmt::Debug for FinSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sets: Vec<Vec<String>> = self.0.closed.iter().map(|&c| self.labels_of(c)).collect();
        f.debug_struct("FinSpace")
            .field("points", &self.0.labels)
            .field("closed", &sets)
            .finish()
    }
}

fn mask_of_labels<'a>(labels: &[String], set: impl IntoIterator<Item = &'a str>) -> Result<Mask> {
    set.into_iter().try_fold(0, |acc, name| {
        labels
            .iter()
            .position(|l| l == name)
            .map(|i| acc | 1 << i)
            .ok_or_else(|| Error::InvalidSpace(format!("unknown point `{name}`")))
    })
}

/// A union-preserving map `Closed(X) -> Closed(Y)` fixed by its values on the
/// distinct point-closures of `X`.
#[derive(Clone)]
pub struct AdmissibleMap {
    source: FinSpace,
    target: FinSpace,
    table: BTreeMap<Mask, Mask>,
    point_value: Vec<Mask>,
}

impl AdmissibleMap {
    pub fn new(source: FinSpace, target: FinSpace, table: BTreeMap<Mask, Mask>) -> Result<Self> {
        let closures = source.distinct_closures();
        if let Some(key) = table.keys().find(|k| closures.binary_search(k).is_err()) {
            return Err(Error::InvalidMap(format!(
                "table key {:?} is not a point-closure of the source",
                source.labels_of(*key)
            )));
        }
        if let Some(c) = closures.iter().find(|c| !table.contains_key(c)) {
            return Err(Error::InvalidMap(format!(
                "no table value for closure {:?}",
                source.labels_of(*c)
            )));
        }
        if let Some((_, v)) = table.iter().find(|(_, &v)| !target.is_closed(v)) {
            return Err(Error::InvalidMap(format!(
                "table value {:?} is not closed in the target",
                target.labels_of(*v)
            )));
        }
        let point_value = (0..source.len()).map(|i| table[&source.point_closure(i)]).collect();
        Ok(Self { source, target, table, point_value })
    }

    pub fn from_fn(source: &FinSpace, target: &FinSpace, mut value: impl FnMut(Mask) -> Mask) -> Result<Self> {
        let table = source.distinct_closures().into_iter().map(|c| (c, value(c))).collect();
        Self::new(source.clone(), target.clone(), table)
    }

    /// The map sending every closed set to the empty set.
    pub fn zero(source: &FinSpace, target: &FinSpace) -> Self {
        Self::from_fn(source, target, |_| 0).expect("zero map")
    }

    pub fn source(&self) -> &FinSpace {
        &self.source
    }

    pub fn target(&self) -> &FinSpace {
        &self.target
    }

    pub fn table(&self) -> &BTreeMap<Mask, Mask> {
        &self.table
    }

    /// `f(A)` as the union of the table values of the closures of the points of `A`.
    pub fn eval(&self, set: Mask) -> Mask {
        bits(set).fold(0, |acc, i| acc | self.point_value[i])
    }

    /// Values on every distinct closure; two maps are the same function iff these agree.
    pub fn canonical(&self) -> Vec<Mask> {
        self.source.distinct_closures().into_iter().map(|c| self.eval(c)).collect()
    }

    /// `f(A) ⊆ g(A)` for every closed `A` of the shared source.
    pub fn is_below(&self, other: &AdmissibleMap) -> bool {
        self.source
            .closed_sets()
            .iter()
            .all(|&a| self.eval(a) & !other.eval(a) == 0)
    }
}

impl PartialEq for AdmissibleMap {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source && self.target == other.target && self.canonical() == other.canonical()
    }
}

impl fmt::Debug for AdmissibleMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let entries: Vec<(Vec<String>, Vec<String>)> = self
            .table
            .iter()
            .map(|(&k, &v)| (self.source.labels_of(k), self.target.labels_of(v)))
            .collect();
        f.debug_struct("AdmissibleMap").field("table", &entries).finish()
    }
}

/// A function between the point sets of two finite spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct PointMap {
    source: FinSpace,
    target: FinSpace,
    assignment: Vec<usize>,
}

impl PointMap {
    pub fn new(source: FinSpace, target: FinSpace, assignment: Vec<usize>) -> Result<Self> {
        if assignment.len() != source.len() {
            return Err(Error::InvalidMap(format!(
                "assignment has {} entries for {} source points",
                assignment.len(),
                source.len()
            )));
        }
        if assignment.iter().any(|&t| t >= target.len()) {
            return Err(Error::InvalidMap("assignment points outside the target".into()));
        }
        Ok(Self { source, target, assignment })
    }

    pub fn identity(space: &FinSpace) -> Self {
        Self { source: space.clone(), target: space.clone(), assignment: (0..space.len()).collect() }
    }

    pub fn source(&self) -> &FinSpace {
        &self.source
    }

    pub fn target(&self) -> &FinSpace {
        &self.target
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn image(&self, set: Mask) -> Mask {
        bits(set).fold(0, |acc, i| acc | 1 << self.assignment[i])
    }

    pub fn preimage(&self, set: Mask) -> Mask {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &t)| set >> t & 1 == 1)
            .fold(0, |acc, (i, _)| acc | 1 << i)
    }

    /// Preimage-of-closed test against every closed set of the target.
    pub fn is_continuous(&self) -> bool {
        self.target
            .closed_sets()
            .iter()
            .all(|&c| self.source.is_closed(self.preimage(c)))
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &PointMap) -> Result<PointMap> {
        if inner.target != self.source {
            return Err(Error::Mismatch("composition of non-composable point maps".into()));
        }
        let assignment = inner.assignment.iter().map(|&i| self.assignment[i]).collect();
        Ok(PointMap { source: inner.source.clone(), target: self.target.clone(), assignment })
    }

    /// `ψ + φ` between two glueings: `ψ` on the base, `φ` on the boundary.
    pub fn sum(base: &PointMap, boundary: &PointMap, from: &GluedSpace, to: &GluedSpace) -> Result<PointMap> {
        if base.source != from.base || boundary.source != from.boundary {
            return Err(Error::Mismatch("sum map sources differ from the glued source".into()));
        }
        if base.target != to.base || boundary.target != to.boundary {
            return Err(Error::Mismatch("sum map targets differ from the glued target".into()));
        }
        let shift = to.base.len();
        let assignment = base
            .assignment
            .iter()
            .copied()
            .chain(boundary.assignment.iter().map(|&t| t + shift))
            .collect();
        PointMap::new(from.space.clone(), to.space.clone(), assignment)
    }
}

/// The space `X +_f Y`.
#[derive(Clone, Debug)]
pub struct GluedSpace {
    base: FinSpace,
    boundary: FinSpace,
    map: AdmissibleMap,
    space: FinSpace,
}

impl GluedSpace {
    pub fn base(&self) -> &FinSpace {
        &self.base
    }

    pub fn boundary(&self) -> &FinSpace {
        &self.boundary
    }

    pub fn map(&self) -> &AdmissibleMap {
        &self.map
    }

    /// The glued topology on `X ⊔ Y`; base points come first.
    pub fn space(&self) -> &FinSpace {
        &self.space
    }

    pub fn closed_sets(&self) -> &[Mask] {
        self.space.closed_sets()
    }

    pub fn base_mask(&self) -> Mask {
        self.base.full()
    }

    pub fn boundary_mask(&self) -> Mask {
        self.boundary.full() << self.base.len()
    }
}

/// `X +_f Y`: `A` is closed iff `A ∩ X` and `A ∩ Y` are closed and `f(A ∩ X) ⊆ A`.
pub fn glue(base: &FinSpace, boundary: &FinSpace, map: &AdmissibleMap) -> Result<GluedSpace> {
    if map.source != *base || map.target != *boundary {
        return Err(Error::Mismatch("admissible map does not go from base to boundary".into()));
    }
    if let Some(shared) = base.labels().iter().find(|l| boundary.index_of(l).is_some()) {
        return Err(Error::NotDisjoint(shared.clone()));
    }
    if base.len() + boundary.len() > MAX_POINTS {
        return Err(Error::Budget(format!("glued space exceeds {MAX_POINTS} points")));
    }
    let shift = base.len();
    let mut closed = Vec::new();
    for &a in base.closed_sets() {
        let forced = map.eval(a);
        for &b in boundary.closed_sets() {
            if forced & !b == 0 {
                closed.push(a | b << shift);
            }
        }
    }
    let labels = base.labels().iter().chain(boundary.labels()).cloned().collect();
    let space = FinSpace::new(labels, closed)?;
    Ok(GluedSpace { base: base.clone(), boundary: boundary.clone(), map: map.clone(), space })
}

/// Whether `id: X +_f Y -> X +_g Y` is continuous, decided by preimages.
pub fn id_glue_continuous(f: &AdmissibleMap, g: &AdmissibleMap) -> Result<bool> {
    if f.source != g.source || f.target != g.target {
        return Err(Error::Mismatch("maps have different sources or targets".into()));
    }
    let from = glue(&f.source, &f.target, f)?;
    let to = glue(&g.source, &g.target, g)?;
    glued_identity_continuous(&from, &to)
}

/// `id + id` between two glueings of the same base and boundary.
pub fn glued_identity_continuous(from: &GluedSpace, to: &GluedSpace) -> Result<bool> {
    let id = PointMap::sum(&PointMap::identity(&from.base), &PointMap::identity(&from.boundary), from, to)?;
    Ok(id.is_continuous())
}

/// Pullback of `f: Closed(X) -> Closed(W)` along `π: Y -> X` and `ϖ: Z -> W`:
/// `f*(A) = Cl_Z(ϖ⁻¹(f(Cl_X π(A))))`.
pub fn pullback(f: &AdmissibleMap, pi: &PointMap, varpi: &PointMap) -> Result<AdmissibleMap> {
    if pi.target != f.source {
        return Err(Error::Mismatch("π does not land in the source of f".into()));
    }
    if varpi.target != f.target {
        return Err(Error::Mismatch("ϖ does not land in the target of f".into()));
    }
    if !pi.is_continuous() {
        return Err(Error::NotContinuous("π".into()));
    }
    if !varpi.is_continuous() {
        return Err(Error::NotContinuous("ϖ".into()));
    }
    Ok(pullback_unchecked(f, pi, varpi))
}

fn pullback_unchecked(f: &AdmissibleMap, pi: &PointMap, varpi: &PointMap) -> AdmissibleMap {
    let x = &f.source;
    let z = &varpi.source;
    AdmissibleMap::from_fn(&pi.source, z, |c| {
        z.closure(varpi.preimage(f.eval(x.closure(pi.image(c)))))
    })
    .expect("pullback values are closed")
}

fn sum_continuous(
    base: &PointMap,
    boundary: &PointMap,
    from: &AdmissibleMap,
    to: &AdmissibleMap,
) -> Result<bool> {
    let from = glue(&from.source, &from.target, from)?;
    let to = glue(&to.source, &to.target, to)?;
    Ok(PointMap::sum(base, boundary, &from, &to)?.is_continuous())
}

/// `π + ϖ: Y +_{f*} Z -> X +_f W` is continuous.
pub fn pullback_sum_continuous(f: &AdmissibleMap, pi: &PointMap, varpi: &PointMap) -> Result<bool> {
    let star = pullback(f, pi, varpi)?;
    sum_continuous(pi, varpi, &star, f)
}

/// Universal property of the pullback: if `π + ϖ: Y +_{f'} Z -> X +_f W` is
/// continuous then so is `id + id: Y +_{f'} Z -> Y +_{f*} Z`.
///
/// A failed precondition is an error, distinct from a `false` verdict.
pub fn check_pullback_universal(
    f: &AdmissibleMap,
    pi: &PointMap,
    varpi: &PointMap,
    fprime: &AdmissibleMap,
) -> Result<bool> {
    if fprime.source != pi.source || fprime.target != varpi.source {
        return Err(Error::Mismatch("f' must go from the source of π to the source of ϖ".into()));
    }
    let star = pullback(f, pi, varpi)?;
    if !sum_continuous(pi, varpi, fprime, f)? {
        return Err(Error::Precondition("π + ϖ is not continuous out of Y +_{f'} Z".into()));
    }
    id_glue_continuous(fprime, &star)
}

/// `f** ⊆ (f*)*` where `f**` pulls back along `π∘ρ, ϖ∘ϱ` and `(f*)*` pulls
/// back `f*` along `ρ, ϱ`.
pub fn check_pullback_composition(
    f: &AdmissibleMap,
    pi: &PointMap,
    varpi: &PointMap,
    rho: &PointMap,
    varrho: &PointMap,
) -> Result<bool> {
    Ok(composition_witness(f, pi, varpi, rho, varrho)?.0)
}

/// Returns whether the inclusion holds and, if it is strict somewhere, a
/// closed set of `U` where `f**(A) ⊊ (f*)*(A)`.
pub fn composition_witness(
    f: &AdmissibleMap,
    pi: &PointMap,
    varpi: &PointMap,
    rho: &PointMap,
    varrho: &PointMap,
) -> Result<(bool, Option<Mask>)> {
    let double = pullback(f, &pi.compose(rho)?, &varpi.compose(varrho)?)?;
    let iterated = pullback(&pullback(f, pi, varpi)?, rho, varrho)?;
    let holds = double.is_below(&iterated);
    let strict = rho
        .source
        .closed_sets()
        .iter()
        .copied()
        .find(|&a| double.eval(a) != iterated.eval(a));
    Ok((holds, strict))
}

/// One arrow of the eight-lemma diagram and whether it is continuous.
#[derive(Clone, Debug, PartialEq)]
pub struct Arrow {
    pub name: &'static str,
    pub continuous: bool,
}

/// All arrows of the eight-lemma diagram for one admissible `g: Closed(Y) -> Closed(Z)`
/// with `π + ϖ: Y +_g Z -> X +_f W` continuous.
pub fn eight_lemma_arrows(
    f: &AdmissibleMap,
    pi: &PointMap,
    varpi: &PointMap,
    g: &AdmissibleMap,
) -> Result<Vec<Arrow>> {
    let (y, z, x, w) = (&pi.source, &varpi.source, &f.source, &f.target);
    if g.source != *y || g.target != *z {
        return Err(Error::Mismatch("g must go from Y to Z".into()));
    }
    if !sum_continuous(pi, varpi, g, f)? {
        return Err(Error::Precondition("π + ϖ is not continuous out of Y +_g Z".into()));
    }
    let (id_x, id_y, id_z, id_w) =
        (PointMap::identity(x), PointMap::identity(y), PointMap::identity(z), PointMap::identity(w));
    let star = pullback(f, pi, &id_w)?;
    let star_star = pullback(&star, &id_y, varpi)?;
    let double = pullback(f, pi, varpi)?;
    let prime = pullback(f, &id_x, varpi)?;
    let prime_prime = pullback(&prime, pi, &id_z)?;

    let arrow = |name, base: &PointMap, boundary: &PointMap, from: &AdmissibleMap, to: &AdmissibleMap| {
        sum_continuous(base, boundary, from, to).map(|continuous| Arrow { name, continuous })
    };
    Ok(vec![
        arrow("g -> f** (id+id)", &id_y, &id_z, g, &double)?,
        arrow("f** -> (f*)* (id+id)", &id_y, &id_z, &double, &star_star)?,
        arrow("(f*)* -> f* (id+ϖ)", &id_y, varpi, &star_star, &star)?,
        arrow("f* -> f (π+id)", pi, &id_w, &star, f)?,
        arrow("g -> f (π+ϖ)", pi, varpi, g, f)?,
        arrow("g -> f'' (id+id)", &id_y, &id_z, g, &double)?,
        arrow("f'' -> (f')' (id+id)", &id_y, &id_z, &double, &prime_prime)?,
        arrow("(f')' -> f' (π+id)", pi, &id_z, &prime_prime, &prime)?,
        arrow("f' -> f (id+ϖ)", &id_x, varpi, &prime, f)?,
        arrow("g -> f* (id+ϖ)", &id_y, varpi, g, &star)?,
    ])
}

/// Every admissible `g: Y -> Z` making `π + ϖ` continuous satisfies the whole
/// eight-lemma diagram.
pub fn check_eight_lemma(f: &AdmissibleMap, pi: &PointMap, varpi: &PointMap) -> Result<bool> {
    for g in enumerate_admissible_maps(&pi.source, &varpi.source)? {
        if !sum_continuous(pi, varpi, &g, f)? {
            continue;
        }
        if !eight_lemma_arrows(f, pi, varpi, &g)?.iter().all(|a| a.continuous) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// All topologies on `n <= 4` points, one per preorder, points labelled `0..n`.
pub fn enumerate_topologies(n: usize) -> Result<Vec<FinSpace>> {
    if n > ENUMERATION_POINTS {
        return Err(Error::Budget(format!("{n} points, enumeration limited to {ENUMERATION_POINTS}")));
    }
    let labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    let off_diagonal: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let mut families = BTreeSet::new();
    for code in 0u32..1 << off_diagonal.len() {
        // below[i] = points in the closure of i under the preorder
        let mut below: Vec<Mask> = (0..n).map(|i| 1 << i).collect();
        for (k, &(i, j)) in off_diagonal.iter().enumerate() {
            if code >> k & 1 == 1 {
                below[i] |= 1 << j;
            }
        }
        let transitive = (0..n).all(|i| bits(below[i]).all(|j| below[j] & !below[i] == 0));
        if !transitive {
            continue;
        }
        let closed: Vec<Mask> = (0..=full_mask(n))
            .filter(|&s| bits(s).all(|i| below[i] & !s == 0))
            .collect();
        families.insert(closed);
    }
    families.into_iter().map(|closed| FinSpace::new(labels.clone(), closed)).collect()
}

/// Every assignment of a closed set of `Y` to each distinct point-closure of `X`.
pub fn enumerate_admissible_maps(x: &FinSpace, y: &FinSpace) -> Result<Vec<AdmissibleMap>> {
    if x.len() > ENUMERATION_POINTS || y.len() > ENUMERATION_POINTS {
        return Err(Error::Budget(format!("spaces limited to {ENUMERATION_POINTS} points")));
    }
    let closures = x.distinct_closures();
    let choices = y.closed_sets();
    let count = (choices.len() as u64).checked_pow(closures.len() as u32).unwrap_or(u64::MAX);
    if count > ENUMERATION_MAPS {
        return Err(Error::Budget(format!("{count} admissible maps exceed {ENUMERATION_MAPS}")));
    }
    let mut maps = Vec::with_capacity(count as usize);
    let mut digits = vec![0usize; closures.len()];
    loop {
        let table = closures.iter().zip(&digits).map(|(&c, &d)| (c, choices[d])).collect();
        maps.push(AdmissibleMap::new(x.clone(), y.clone(), table)?);
        let mut k = 0;
        loop {
            if k == digits.len() {
                return Ok(maps);
            }
            digits[k] += 1;
            if digits[k] < choices.len() {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
    }
}

/// Every continuous map `X -> Y`.
pub fn enumerate_continuous_maps(x: &FinSpace, y: &FinSpace) -> Result<Vec<PointMap>> {
    if x.len() > ENUMERATION_POINTS || y.len() > ENUMERATION_POINTS {
        return Err(Error::Budget(format!("spaces limited to {ENUMERATION_POINTS} points")));
    }
    if y.is_empty() {
        return Ok(if x.is_empty() { vec![PointMap::identity(x)] } else { Vec::new() });
    }
    let total = y.len().pow(x.len() as u32);
    Ok((0..total)
        .map(|mut code| {
            let assignment = (0..x.len())
                .map(|_| {
                    let t = code % y.len();
                    code /= y.len();
                    t
                })
                .collect();
            PointMap { source: x.clone(), target: y.clone(), assignment }
        })
        .filter(PointMap::is_continuous)
        .collect())
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct FinSpaceJson {
    pub points: Vec<String>,
    pub closed_sets: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct TableEntryJson {
    pub closure: Vec<String>,
    pub value: Vec<String>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct AdmissibleMapJson {
    pub source: FinSpaceJson,
    pub target: FinSpaceJson,
    pub table: Vec<TableEntryJson>,
}

fn sorted_labels(space: &FinSpace, mask: Mask) -> Vec<String> {
    let mut v = space.labels_of(mask);
    v.sort();
    v
}

impl From<&FinSpace> for FinSpaceJson {
    fn from(space: &FinSpace) -> Self {
        let mut closed_sets: Vec<Vec<String>> =
            space.closed_sets().iter().map(|&c| sorted_labels(space, c)).collect();
        closed_sets.sort();
        FinSpaceJson { points: space.labels().to_vec(), closed_sets }
    }
}

impl TryFrom<&FinSpaceJson> for FinSpace {
    type Error = Error;

    fn try_from(json: &FinSpaceJson) -> Result<Self> {
        let masks = json
            .closed_sets
            .iter()
            .map(|set| mask_of_labels(&json.points, set.iter().map(String::as_str)))
            .collect::<Result<Vec<_>>>()?;
        FinSpace::new(json.points.clone(), masks)
    }
}

impl From<&AdmissibleMap> for AdmissibleMapJson {
    fn from(map: &AdmissibleMap) -> Self {
        AdmissibleMapJson {
            source: (&map.source).into(),
            target: (&map.target).into(),
            table: map
                .table
                .iter()
                .map(|(&k, &v)| TableEntryJson {
                    closure: sorted_labels(&map.source, k),
                    value: sorted_labels(&map.target, v),
                })
                .collect(),
        }
    }
}

impl TryFrom<&AdmissibleMapJson> for AdmissibleMap {
    type Error = Error;

    fn try_from(json: &AdmissibleMapJson) -> Result<Self> {
        let source = FinSpace::try_from(&json.source)?;
        let target = FinSpace::try_from(&json.target)?;
        let table = json
            .table
            .iter()
            .map(|e| {
                let k = mask_of_labels(source.labels(), e.closure.iter().map(String::as_str))?;
                let v = mask_of_labels(target.labels(), e.value.iter().map(String::as_str))?;
                Ok((k, v))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        AdmissibleMap::new(source, target, table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn sierpinski_ab() -> FinSpace {
        FinSpace::from_named(&["a", "b"], &[&[], &["a"], &["a", "b"]]).unwrap()
    }

    fn point(label: &str) -> FinSpace {
        FinSpace::discrete(vec![label.to_string()])
    }

    fn glued_sets(g: &GluedSpace) -> BTreeSet<Vec<String>> {
        g.closed_sets().iter().map(|&c| sorted_labels(g.space(), c)).collect()
    }

    fn set_of(sets: &[&[&str]]) -> BTreeSet<Vec<String>> {
        sets.iter().map(|s| s.iter().map(|x| x.to_string()).collect()).collect()
    }

    #[test]
    fn rejects_non_topology() {
        let err = FinSpace::from_named(&["a", "b"], &[&[], &["a"], &["b"], &["a", "b"], &["a"]]);
        assert!(err.is_ok());
        let err = FinSpace::from_named(&["a", "b", "c"], &[&[], &["a"], &["b"], &["a", "b", "c"]]);
        assert!(matches!(err, Err(Error::InvalidSpace(_))));
        let err = FinSpace::from_named(&["a", "b"], &[&["a"], &["a", "b"]]);
        assert!(matches!(err, Err(Error::InvalidSpace(_))));
    }

    #[test]
    fn glue_sierpinski_onto_point() {
        let x = sierpinski_ab();
        let y = point("w");
        let w = y.mask_of(&["w"]).unwrap();
        let f = AdmissibleMap::from_fn(&x, &y, |_| w).unwrap();
        let g = glue(&x, &y, &f).unwrap();
        assert_eq!(glued_sets(&g), set_of(&[&[], &["w"], &["a", "w"], &["a", "b", "w"]]));
    }

    #[test]
    fn glue_with_zero_map_is_disjoint_union() {
        let x = sierpinski_ab();
        let y = FinSpace::discrete(vec!["u".into(), "v".into()]);
        let g = glue(&x, &y, &AdmissibleMap::zero(&x, &y)).unwrap();
        let expected: BTreeSet<Mask> = x
            .closed_sets()
            .iter()
            .flat_map(|&a| y.closed_sets().iter().map(move |&b| a | b << 2))
            .collect();
        let actual: BTreeSet<Mask> = g.closed_sets().iter().copied().collect();
        assert_eq!(actual, expected);
    }

    #[test]
    fn glue_discrete_point_forces_boundary() {
        let x = point("x");
        let y = point("w");
        let f = AdmissibleMap::from_fn(&x, &y, |_| 1).unwrap();
        let g = glue(&x, &y, &f).unwrap();
        assert_eq!(glued_sets(&g), set_of(&[&[], &["w"], &["w", "x"]]));
        assert!(!g.space().is_closed(g.space().mask_of(&["x"]).unwrap()));
    }

    #[test]
    fn glue_rejects_shared_labels_and_foreign_maps() {
        let x = point("p");
        let y = point("p");
        let f = AdmissibleMap::zero(&x, &y);
        assert_eq!(glue(&x, &y, &f).unwrap_err(), Error::NotDisjoint("p".into()));
        let other = point("q");
        assert!(matches!(glue(&other, &y, &f), Err(Error::Mismatch(_))));
    }

    #[test]
    fn table_must_cover_closures() {
        let x = sierpinski_ab();
        let y = point("w");
        let only_a = BTreeMap::from([(x.mask_of(&["a"]).unwrap(), 0)]);
        assert!(matches!(AdmissibleMap::new(x.clone(), y.clone(), only_a), Err(Error::InvalidMap(_))));
        let bad_key = BTreeMap::from([(x.mask_of(&["b"]).unwrap(), 0), (1, 0), (3, 0)]);
        assert!(matches!(AdmissibleMap::new(x, y, bad_key), Err(Error::InvalidMap(_))));
    }

    #[test]
    fn identity_continuity_examples() {
        let x = point("a");
        let y = point("w");
        let full = AdmissibleMap::from_fn(&x, &y, |_| 1).unwrap();
        let zero = AdmissibleMap::zero(&x, &y);
        assert!(id_glue_continuous(&full, &full).unwrap());
        assert!(!id_glue_continuous(&full, &zero).unwrap());
        assert!(id_glue_continuous(&zero, &full).unwrap());
    }

    #[test]
    fn identity_pullback_is_the_same_map() {
        let x = sierpinski_ab();
        let w = FinSpace::discrete(names("w", 2));
        for f in enumerate_admissible_maps(&x, &w).unwrap() {
            let star = pullback(&f, &PointMap::identity(&x), &PointMap::identity(&w)).unwrap();
            assert_eq!(star, f);
        }
    }

    #[test]
    fn pullback_to_a_point_subspace() {
        let x = sierpinski_ab();
        let w = FinSpace::discrete(names("w", 2));
        let y = point("y");
        let b = x.index_of("b").unwrap();
        let pi = PointMap::new(y.clone(), x.clone(), vec![b]).unwrap();
        assert!(pi.is_continuous());
        for f in enumerate_admissible_maps(&x, &w).unwrap() {
            let star = pullback(&f, &pi, &PointMap::identity(&w)).unwrap();
            assert_eq!(star.eval(1), f.eval(x.point_closure(b)));
        }
    }

    #[test]
    fn pullback_rejects_discontinuous_maps() {
        let x = sierpinski_ab();
        let discrete = FinSpace::discrete(names("d", 2));
        let w = point("w");
        let f = AdmissibleMap::zero(&x, &w);
        // swapping the points of the Sierpinski space is not continuous
        let swap = PointMap::new(x.clone(), x.clone(), vec![1, 0]).unwrap();
        assert!(!swap.is_continuous());
        assert_eq!(
            pullback(&f, &swap, &PointMap::identity(&w)).unwrap_err(),
            Error::NotContinuous("π".into())
        );
        let into = PointMap::new(discrete.clone(), x.clone(), vec![0, 1]).unwrap();
        assert!(pullback(&f, &into, &PointMap::identity(&w)).is_ok());
    }

    #[test]
    fn pullback_formula_holds_on_every_closed_set() {
        for x in enumerate_topologies(2).unwrap() {
            for y in enumerate_topologies(2).unwrap() {
                let (x, y) = (x.relabel("x"), y.relabel("y"));
                let w = FinSpace::discrete(names("w", 2));
                let z = sierpinski_ab();
                for pi in enumerate_continuous_maps(&y, &x).unwrap() {
                    for varpi in enumerate_continuous_maps(&z, &w).unwrap() {
                        for f in enumerate_admissible_maps(&x, &w).unwrap() {
                            let star = pullback(&f, &pi, &varpi).unwrap();
                            for &a in y.closed_sets() {
                                let direct = z.closure(varpi.preimage(f.eval(x.closure(pi.image(a)))));
                                assert_eq!(star.eval(a), direct);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn universal_property_identity_and_smaller_maps() {
        let x = sierpinski_ab().relabel("x");
        let w = FinSpace::discrete(names("w", 2));
        let y = FinSpace::discrete(names("y", 2));
        let z = point("z");
        let pi = PointMap::new(y.clone(), x.clone(), vec![0, 1]).unwrap();
        let varpi = PointMap::new(z.clone(), w.clone(), vec![1]).unwrap();
        for f in enumerate_admissible_maps(&x, &w).unwrap() {
            let star = pullback(&f, &pi, &varpi).unwrap();
            assert!(check_pullback_universal(&f, &pi, &varpi, &star).unwrap());
            for smaller in enumerate_admissible_maps(&y, &z).unwrap() {
                if smaller.is_below(&star) {
                    assert!(check_pullback_universal(&f, &pi, &varpi, &smaller).unwrap());
                }
            }
        }
    }

    #[test]
    fn universal_property_reports_precondition_failure() {
        let x = point("x");
        let w = point("w");
        let f = AdmissibleMap::zero(&x, &w);
        let y = point("y");
        let z = point("z");
        let pi = PointMap::new(y.clone(), x.clone(), vec![0]).unwrap();
        let varpi = PointMap::new(z.clone(), w.clone(), vec![0]).unwrap();
        // f' forces z into every closed set containing y, so {y} is not closed
        // upstairs while its preimage-partner {x} is closed in X +_0 W
        let full = AdmissibleMap::from_fn(&y, &z, |_| 1).unwrap();
        let zero = AdmissibleMap::zero(&y, &z);
        assert!(matches!(
            check_pullback_universal(&f, &pi, &varpi, &full),
            Err(Error::Precondition(_))
        ));
        let f_full = AdmissibleMap::from_fn(&x, &w, |_| 1).unwrap();
        assert!(check_pullback_universal(&f_full, &pi, &varpi, &zero).unwrap());
        assert!(check_pullback_universal(&f, &pi, &varpi, &zero).unwrap());
    }

    #[test]
    fn composition_with_identities_is_equality() {
        let x = sierpinski_ab();
        let w = FinSpace::discrete(names("w", 2));
        let (ix, iw) = (PointMap::identity(&x), PointMap::identity(&w));
        for f in enumerate_admissible_maps(&x, &w).unwrap() {
            let (holds, strict) = composition_witness(&f, &ix, &iw, &ix, &iw).unwrap();
            assert!(holds);
            assert_eq!(strict, None);
        }
    }

    #[test]
    fn eight_lemma_identity_instances() {
        let x = sierpinski_ab();
        let w = FinSpace::discrete(names("w", 2));
        for f in enumerate_admissible_maps(&x, &w).unwrap() {
            assert!(check_eight_lemma(&f, &PointMap::identity(&x), &PointMap::identity(&w)).unwrap());
        }
    }

    #[test]
    fn eight_lemma_with_g_equal_double_pullback() {
        let x = sierpinski_ab().relabel("x");
        let w = FinSpace::discrete(names("w", 2));
        let y = FinSpace::indiscrete(names("y", 2));
        let z = point("z");
        for pi in enumerate_continuous_maps(&y, &x).unwrap() {
            let varpi = PointMap::new(z.clone(), w.clone(), vec![0]).unwrap();
            for f in enumerate_admissible_maps(&x, &w).unwrap() {
                let g = pullback(&f, &pi, &varpi).unwrap();
                let arrows = eight_lemma_arrows(&f, &pi, &varpi, &g).unwrap();
                assert!(arrows.iter().all(|a| a.continuous), "{arrows:?}");
            }
        }
    }

    #[test]
    fn topology_counts() {
        let counts: Vec<usize> = (0..=4).map(|n| enumerate_topologies(n).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 1, 4, 29, 355]);
        assert!(matches!(enumerate_topologies(5), Err(Error::Budget(_))));
    }

    #[test]
    fn admissible_map_counts() {
        let one = point("x");
        let w = point("w");
        assert_eq!(enumerate_admissible_maps(&one, &w).unwrap().len(), 2);
        let x = FinSpace::discrete(names("x", 2));
        let y = FinSpace::indiscrete(names("y", 2));
        assert_eq!(enumerate_admissible_maps(&x, &y).unwrap().len(), 4);
        for x in enumerate_topologies(3).unwrap() {
            for y in enumerate_topologies(2).unwrap() {
                let expected = y.closed_sets().len().pow(x.distinct_closures().len() as u32);
                assert_eq!(enumerate_admissible_maps(&x, &y).unwrap().len(), expected);
            }
        }
    }

    #[test]
    fn admissibility_holds_structurally() {
        let x = sierpinski_ab();
        let w = FinSpace::discrete(names("w", 2));
        for f in enumerate_admissible_maps(&x, &w).unwrap() {
            assert_eq!(f.eval(0), 0);
            for &a in x.closed_sets() {
                for &b in x.closed_sets() {
                    assert_eq!(f.eval(a | b), f.eval(a) | f.eval(b));
                }
            }
        }
    }

    #[test]
    fn recovery_of_base_and_boundary() {
        let x = sierpinski_ab();
        let y = FinSpace::discrete(names("w", 2));
        for f in enumerate_admissible_maps(&x, &y).unwrap() {
            let g = glue(&x, &y, &f).unwrap();
            assert_eq!(g.space().subspace(g.base_mask()), x);
            assert_eq!(g.space().subspace(g.boundary_mask()), y);
            assert!(g.space().is_closed(g.boundary_mask()), "base must be open");
        }
    }

    #[test]
    fn json_round_trip() {
        let x = sierpinski_ab();
        let y = FinSpace::discrete(names("w", 2));
        let f = AdmissibleMap::from_fn(&x, &y, |c| if c == 1 { 1 } else { 3 }).unwrap();
        let json = serde_json::to_string(&AdmissibleMapJson::from(&f)).unwrap();
        let back: AdmissibleMapJson = serde_json::from_str(&json).unwrap();
        assert_eq!(AdmissibleMap::try_from(&back).unwrap(), f);
        let space_json = FinSpaceJson::from(&x);
        assert_eq!(space_json.closed_sets, vec![vec![], vec!["a".to_string()], vec!["a".into(), "b".into()]]);
    }
}
