//! Coarse structures on finite carriers, given by a basis of entourages.
//!
//! Carriers have at most 64 points; subsets are `u64` masks and a relation
//! stores one row mask per point. A structure is never materialised as its
//! downward-closed family: `e` is a member iff some basis element contains it.

pub mod metric;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type PointSet = u64;

pub const MAX_CARRIER: usize = 64;

pub fn set_bits(set: PointSet) -> impl Iterator<Item = usize> {
    (0..MAX_CARRIER).filter(move |i| set >> i & 1 == 1)
}

pub fn full_set(n: usize) -> PointSet {
    if n == 0 {
        0
    } else {
        u64::MAX >> (64 - n)
    }
}

/// A relation on `0..n`: `rows[a]` holds every `b` with `(a,b)` in the relation.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    n: usize,
    rows: Vec<PointSet>,
}

impl Relation {
    pub fn empty(n: usize) -> Self {
        assert!(n <= MAX_CARRIER, "carrier of {n} points exceeds {MAX_CARRIER}");
        Relation { n, rows: vec![0; n] }
    }

    pub fn diagonal(n: usize) -> Self {
        let mut r = Self::empty(n);
        for a in 0..n {
            r.rows[a] = 1 << a;
        }
        r
    }

    pub fn full(n: usize) -> Self {
        Relation { n, rows: vec![full_set(n); n] }
    }

    /// `A × B`.
    pub fn product(n: usize, a: PointSet, b: PointSet) -> Self {
        let mut r = Self::empty(n);
        for x in set_bits(a & full_set(n)) {
            r.rows[x] = b & full_set(n);
        }
        r
    }

    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        if n > MAX_CARRIER {
            return Err(Error::InvalidParameter(format!("carrier of {n} points exceeds {MAX_CARRIER}")));
        }
        let mut r = Self::empty(n);
        for &(a, b) in pairs {
            if a >= n || b >= n {
                return Err(Error::InvalidParameter(format!("pair ({a},{b}) outside a carrier of {n} points")));
            }
            r.insert(a, b);
        }
        Ok(r)
    }

    /// Relation whose pair `(a,b)` is bit `a·n + b` of `code`; used by enumerations.
    pub fn from_code(n: usize, code: u64) -> Self {
        let mut r = Self::empty(n);
        for a in 0..n {
            r.rows[a] = (code >> (a * n)) & full_set(n);
        }
        r
    }

    pub fn code(&self) -> u64 {
        self.rows.iter().enumerate().fold(0, |acc, (a, &row)| acc | row << (a * self.n))
    }

    pub fn carrier(&self) -> usize {
        self.n
    }

    pub fn row(&self, a: usize) -> PointSet {
        self.rows[a]
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.rows[a] >> b & 1 == 1
    }

    pub fn insert(&mut self, a: usize, b: usize) {
        self.rows[a] |= 1 << b;
    }

    pub fn pair_count(&self) -> u32 {
        self.rows.iter().map(|r| r.count_ones()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(|&r| r == 0)
    }

    /// Pairs in lexicographic order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(a, &row)| set_bits(row).map(move |b| (a, b)))
            .collect()
    }

    pub fn is_subset(&self, other: &Relation) -> bool {
        self.n == other.n && self.rows.iter().zip(&other.rows).all(|(a, b)| a & !b == 0)
    }

    pub fn union(&self, other: &Relation) -> Relation {
        Relation { n: self.n, rows: self.rows.iter().zip(&other.rows).map(|(a, b)| a | b).collect() }
    }

    pub fn intersection(&self, other: &Relation) -> Relation {
        Relation { n: self.n, rows: self.rows.iter().zip(&other.rows).map(|(a, b)| a & b).collect() }
    }

    /// `e⁻¹ = {(a,b) : (b,a) ∈ e}`.
    pub fn inverse(&self) -> Relation {
        let mut r = Self::empty(self.n);
        for (a, b) in self.pairs() {
            r.insert(b, a);
        }
        r
    }

    /// `self ∘ inner = {(a,b) : ∃c, (a,c) ∈ inner, (c,b) ∈ self}`.
    pub fn compose(&self, inner: &Relation) -> Relation {
        let rows = inner
            .rows
            .iter()
            .map(|&mid| set_bits(mid).fold(0, |acc, c| acc | self.rows[c]))
            .collect();
        Relation { n: self.n, rows }
    }

    /// `{x : ∃y ∈ set, (x,y) ∈ self}`.
    pub fn neighborhood(&self, set: PointSet) -> PointSet {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, &row)| row & set != 0)
            .fold(0, |acc, (x, _)| acc | 1 << x)
    }

    /// Image under a carrier map: `{(f(a), f(b))}`.
    pub fn image(&self, map: &CarrierMap) -> Relation {
        let mut r = Self::empty(map.target);
        for (a, b) in self.pairs() {
            r.insert(map.assignment[a], map.assignment[b]);
        }
        r
    }

    /// Restriction to `set × set`.
    pub fn restrict(&self, set: PointSet) -> Relation {
        let mut r = self.clone();
        for a in 0..self.n {
            r.rows[a] = if set >> a & 1 == 1 { r.rows[a] & set } else { 0 };
        }
        r
    }

    /// Deterministic order: pair count, then pair list.
    pub fn cmp_size_lex(&self, other: &Relation) -> Ordering {
        self.pair_count().cmp(&other.pair_count()).then_with(|| self.pairs().cmp(&other.pairs()))
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Relation({}; {:?})", self.n, self.pairs())
    }
}

/// `Y` is `u`-small iff `Y × Y ⊆ u`.
pub fn is_small(u: &Relation, set: PointSet) -> bool {
    Relation::product(u.n, set, set).is_subset(u)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationJson {
    pub carrier: usize,
    pub pairs: Vec<(usize, usize)>,
}

impl From<&Relation> for RelationJson {
    fn from(r: &Relation) -> Self {
        RelationJson { carrier: r.n, pairs: r.pairs() }
    }
}

impl TryFrom<&RelationJson> for Relation {
    type Error = Error;

    fn try_from(j: &RelationJson) -> Result<Self> {
        Relation::from_pairs(j.carrier, &j.pairs)
    }
}

/// A total map between finite carriers.
#[derive(Clone, Debug, PartialEq)]
pub struct CarrierMap {
    pub source: usize,
    pub target: usize,
    pub assignment: Vec<usize>,
}

impl CarrierMap {
    pub fn new(target: usize, assignment: Vec<usize>) -> Result<Self> {
        if assignment.iter().any(|&t| t >= target) {
            return Err(Error::InvalidParameter("carrier map leaves its target".into()));
        }
        Ok(CarrierMap { source: assignment.len(), target, assignment })
    }

    pub fn identity(n: usize) -> Self {
        CarrierMap { source: n, target: n, assignment: (0..n).collect() }
    }

    pub fn preimage(&self, set: PointSet) -> PointSet {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &t)| set >> t & 1 == 1)
            .fold(0, |acc, (s, _)| acc | 1 << s)
    }

    pub fn image_set(&self, set: PointSet) -> PointSet {
        set_bits(set).fold(0, |acc, s| acc | 1 << self.assignment[s])
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &CarrierMap) -> Result<CarrierMap> {
        if inner.target != self.source {
            return Err(Error::Mismatch("carrier maps are not composable".into()));
        }
        CarrierMap::new(self.target, inner.assignment.iter().map(|&i| self.assignment[i]).collect())
    }

    /// `{(f(s), g(s)) : s}`.
    pub fn pair_relation(&self, other: &CarrierMap) -> Result<Relation> {
        if self.source != other.source || self.target != other.target {
            return Err(Error::Mismatch("maps have different carriers".into()));
        }
        let mut r = Relation::empty(self.target);
        for s in 0..self.source {
            r.insert(self.assignment[s], other.assignment[s]);
        }
        Ok(r)
    }
}

/// Which of the four basis conditions hold for a family of relations.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BasisConditions {
    pub diagonal: bool,
    pub unions: bool,
    pub inverses: bool,
    pub compositions: bool,
}

impl BasisConditions {
    pub fn all(&self) -> bool {
        self.diagonal && self.unions && self.inverses && self.compositions
    }
}

fn dominated(family: &[Relation], e: &Relation) -> bool {
    family.iter().any(|b| e.is_subset(b))
}

/// Literal check of the basis conditions: some element contains Δ, and every
/// union, inverse and composition of elements is contained in some element.
pub fn basis_conditions(n: usize, family: &[Relation]) -> BasisConditions {
    let mut c = BasisConditions {
        diagonal: dominated(family, &Relation::diagonal(n)),
        unions: true,
        inverses: family.iter().all(|e| dominated(family, &e.inverse())),
        compositions: true,
    };
    for a in family {
        for b in family {
            c.unions &= dominated(family, &a.union(b));
            c.compositions &= dominated(family, &a.compose(b));
        }
    }
    c
}

/// Inserts `e` unless dominated; drops elements it dominates. Returns whether it was added.
fn insert_maximal(family: &mut Vec<Relation>, e: Relation) -> bool {
    if dominated(family, &e) {
        return false;
    }
    family.retain(|b| !b.is_subset(&e));
    family.push(e);
    true
}

/// Closes `generators ∪ {Δ}` under inverse, composition and union by fixpoint
/// iteration, keeping only elements not contained in another.
pub fn basis_closure(n: usize, generators: &[Relation]) -> Result<Vec<Relation>> {
    if n > MAX_CARRIER {
        return Err(Error::InvalidParameter(format!("carrier of {n} points exceeds {MAX_CARRIER}")));
    }
    if let Some(g) = generators.iter().find(|g| g.n != n) {
        return Err(Error::Mismatch(format!("generator on {} points for a carrier of {n}", g.n)));
    }
    let mut family = Vec::new();
    insert_maximal(&mut family, Relation::diagonal(n));
    for g in generators {
        insert_maximal(&mut family, g.clone());
    }
    loop {
        let mut candidates = Vec::new();
        for a in &family {
            candidates.push(a.inverse());
            for b in &family {
                candidates.push(a.union(b));
                candidates.push(a.compose(b));
            }
        }
        let mut changed = false;
        for c in candidates {
            changed |= insert_maximal(&mut family, c);
        }
        if !changed {
            break;
        }
    }
    family.sort_by(|a, b| a.cmp_size_lex(b));
    Ok(family)
}

/// A coarse structure on `0..n` given by a basis.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarseStructure {
    n: usize,
    basis: Vec<Relation>,
}

impl CoarseStructure {
    pub fn generated(n: usize, generators: &[Relation]) -> Result<Self> {
        Ok(CoarseStructure { n, basis: basis_closure(n, generators)? })
    }

    /// Uses `basis` as given after checking the four basis conditions.
    pub fn from_basis(n: usize, basis: Vec<Relation>) -> Result<Self> {
        if basis.iter().any(|e| e.n != n) {
            return Err(Error::Mismatch("basis element on a different carrier".into()));
        }
        let c = basis_conditions(n, &basis);
        if !c.all() {
            return Err(Error::InvalidParameter(format!("not a coarse basis: {c:?}")));
        }
        Ok(CoarseStructure { n, basis })
    }

    /// The structure whose members are all relations.
    pub fn maximal(n: usize) -> Self {
        CoarseStructure { n, basis: vec![Relation::full(n)] }
    }

    /// The structure generated by Δ alone.
    pub fn discrete(n: usize) -> Self {
        CoarseStructure { n, basis: vec![Relation::diagonal(n)] }
    }

    pub fn carrier(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> &[Relation] {
        &self.basis
    }

    /// Smallest basis element containing `e` (pair count, then lexicographic).
    pub fn dominating(&self, e: &Relation) -> Result<Option<&Relation>> {
        if e.n != self.n {
            return Err(Error::Mismatch(format!("relation on {} points, carrier has {}", e.n, self.n)));
        }
        Ok(self.basis.iter().filter(|b| e.is_subset(b)).min_by(|a, b| a.cmp_size_lex(b)))
    }

    pub fn is_member(&self, e: &Relation) -> Result<bool> {
        Ok(self.dominating(e)?.is_some())
    }

    fn member(&self, e: &Relation) -> bool {
        dominated(&self.basis, e)
    }

    /// `B × B` is an entourage.
    pub fn is_bounded(&self, set: PointSet) -> bool {
        self.member(&Relation::product(self.n, set, set))
    }

    /// Some `b` with `B × {b}` an entourage.
    pub fn bounded_by_point(&self, set: PointSet) -> bool {
        (0..self.n).any(|b| self.member(&Relation::product(self.n, set, 1 << b)))
    }

    pub fn is_coarsely_connected(&self) -> bool {
        self.member(&Relation::full(self.n))
    }

    /// Every bounded set is topologically bounded according to `topologically_bounded`.
    pub fn is_proper_space(&self, topologically_bounded: impl Fn(PointSet) -> bool) -> bool {
        (0..=full_set(self.n)).filter(|&b| self.is_bounded(b)).all(topologically_bounded)
    }

    /// `ε|_A` on the points of `set`, renumbered in increasing order, with the inclusion map.
    pub fn subspace(&self, set: PointSet) -> (CoarseStructure, CarrierMap) {
        let points: Vec<usize> = set_bits(set & full_set(self.n)).collect();
        let m = points.len();
        let basis = self
            .basis
            .iter()
            .map(|b| {
                let mut r = Relation::empty(m);
                for (i, &p) in points.iter().enumerate() {
                    for (j, &q) in points.iter().enumerate() {
                        if b.contains(p, q) {
                            r.insert(i, j);
                        }
                    }
                }
                r
            })
            .collect();
        let inclusion = CarrierMap { source: m, target: self.n, assignment: points };
        (CoarseStructure { n: m, basis }, inclusion)
    }

    /// The intersection of two structures, with basis the pairwise intersections.
    pub fn intersection(&self, other: &CoarseStructure) -> Result<CoarseStructure> {
        if self.n != other.n {
            return Err(Error::Mismatch("structures on different carriers".into()));
        }
        let mut basis = Vec::new();
        for a in &self.basis {
            for b in &other.basis {
                insert_maximal(&mut basis, a.intersection(b));
            }
        }
        basis.sort_by(|a, b| a.cmp_size_lex(b));
        Ok(CoarseStructure { n: self.n, basis })
    }
}

fn check_carriers(map: &CarrierMap, eps: &CoarseStructure, zeta: &CoarseStructure) -> Result<()> {
    if map.source != eps.n || map.target != zeta.n {
        return Err(Error::Mismatch("map carriers differ from the structures".into()));
    }
    Ok(())
}

/// Images of basis elements are entourages.
pub fn is_bornologous(map: &CarrierMap, eps: &CoarseStructure, zeta: &CoarseStructure) -> Result<bool> {
    check_carriers(map, eps, zeta)?;
    Ok(eps.basis.iter().all(|e| zeta.member(&e.image(map))))
}

/// Preimages of bounded sets are bounded, over every subset of the target.
pub fn is_proper_map(map: &CarrierMap, eps: &CoarseStructure, zeta: &CoarseStructure) -> Result<bool> {
    check_carriers(map, eps, zeta)?;
    if zeta.n > 20 {
        return Err(Error::Budget("proper-map check enumerates subsets of at most 20 points".into()));
    }
    Ok((0..=full_set(zeta.n)).filter(|&b| zeta.is_bounded(b)).all(|b| eps.is_bounded(map.preimage(b))))
}

pub fn is_coarse_map(map: &CarrierMap, eps: &CoarseStructure, zeta: &CoarseStructure) -> Result<bool> {
    Ok(is_bornologous(map, eps, zeta)? && is_proper_map(map, eps, zeta)?)
}

pub fn are_close(f: &CarrierMap, g: &CarrierMap, target: &CoarseStructure) -> Result<bool> {
    target.is_member(&f.pair_relation(g)?)
}

/// Smallest basis element `e` with `𝔅(A,e)` the whole carrier.
pub fn quasi_density_witness(set: PointSet, eps: &CoarseStructure) -> Option<&Relation> {
    let all = full_set(eps.n);
    eps.basis
        .iter()
        .filter(|e| e.neighborhood(set) == all)
        .min_by(|a, b| a.cmp_size_lex(b))
}

pub fn is_quasi_dense(set: PointSet, eps: &CoarseStructure) -> bool {
    quasi_density_witness(set, eps).is_some()
}

/// Quasi-inverse of `map` read off a quasi-density witness `e` of its image:
/// `y ↦` the smallest `x` with `(y, f(x)) ∈ e`.
pub fn quasi_inverse(map: &CarrierMap, e: &Relation) -> Result<CarrierMap> {
    let assignment = (0..map.target)
        .map(|y| {
            (0..map.source)
                .find(|&x| e.contains(y, map.assignment[x]))
                .ok_or_else(|| Error::Precondition(format!("point {y} is not within the witness of the image")))
        })
        .collect::<Result<Vec<_>>>()?;
    CarrierMap::new(map.source, assignment)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceCertificate {
    /// `{(f∘g(y), y)}` and its dominating basis element in the target.
    pub target_pairs: RelationJson,
    pub target_witness: RelationJson,
    /// `{(g∘f(x), x)}` and its dominating basis element in the source.
    pub source_pairs: RelationJson,
    pub source_witness: RelationJson,
}

/// Checks `f`, `g` coarse with `f∘g` close to `id` and `g∘f` close to `id`;
/// the error string names the first failing condition.
pub fn is_coarse_equivalence(
    f: &CarrierMap,
    g: &CarrierMap,
    eps: &CoarseStructure,
    zeta: &CoarseStructure,
) -> Result<std::result::Result<EquivalenceCertificate, String>> {
    if !is_coarse_map(f, eps, zeta)? {
        return Ok(Err("f is not a coarse map".into()));
    }
    if !is_coarse_map(g, zeta, eps)? {
        return Ok(Err("g is not a coarse map".into()));
    }
    let fg = f.compose(g)?.pair_relation(&CarrierMap::identity(zeta.n))?;
    let gf = g.compose(f)?.pair_relation(&CarrierMap::identity(eps.n))?;
    let Some(tw) = zeta.dominating(&fg)? else {
        return Ok(Err("f∘g is not close to the identity".into()));
    };
    let Some(sw) = eps.dominating(&gf)? else {
        return Ok(Err("g∘f is not close to the identity".into()));
    };
    Ok(Ok(EquivalenceCertificate {
        target_pairs: (&fg).into(),
        target_witness: tw.into(),
        source_pairs: (&gf).into(),
        source_witness: sw.into(),
    }))
}

/// Definitional bornology check: every member relation maps to a member.
/// Enumerates all relations, so carriers are limited to 4 points.
pub fn is_bornologous_by_members(map: &CarrierMap, eps: &CoarseStructure, zeta: &CoarseStructure) -> Result<bool> {
    check_carriers(map, eps, zeta)?;
    if eps.n > 4 {
        return Err(Error::Budget("member enumeration limited to 4 points".into()));
    }
    let n = eps.n;
    Ok((0..1u64 << (n * n))
        .map(|code| Relation::from_code(n, code))
        .filter(|e| eps.member(e))
        .all(|e| zeta.member(&e.image(map))))
}

/// The five coarse-structure axioms, decided over every relation on at most 4
/// points or over the supplied sample of relations.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AxiomReport {
    pub diagonal: bool,
    pub subsets: bool,
    pub unions: bool,
    pub inverses: bool,
    pub compositions: bool,
    pub members_checked: usize,
}

impl AxiomReport {
    pub fn all(&self) -> bool {
        self.diagonal && self.subsets && self.unions && self.inverses && self.compositions
    }
}

pub fn check_axioms(eps: &CoarseStructure, sample: &[Relation]) -> AxiomReport {
    let members: Vec<&Relation> = sample.iter().filter(|e| eps.member(e)).collect();
    let mut r = AxiomReport {
        diagonal: eps.member(&Relation::diagonal(eps.n)),
        subsets: true,
        unions: true,
        inverses: true,
        compositions: true,
        members_checked: members.len(),
    };
    for (i, a) in members.iter().enumerate() {
        r.inverses &= eps.member(&a.inverse());
        // subsets: drop one row at a time and every single pair
        for (x, y) in a.pairs() {
            let mut smaller = (*a).clone();
            smaller.rows[x] &= !(1 << y);
            r.subsets &= eps.member(&smaller);
        }
        for b in members.iter().skip(i) {
            r.unions &= eps.member(&a.union(b));
            r.compositions &= eps.member(&a.compose(b)) && eps.member(&b.compose(a));
        }
    }
    r
}

/// Every relation on `n <= 3` points, for exhaustive checks.
pub fn all_relations(n: usize) -> Vec<Relation> {
    assert!(n <= 4, "all_relations enumerates at most 4 points");
    (0..1u64 << (n * n)).map(|c| Relation::from_code(n, c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(n: usize, pairs: &[(usize, usize)]) -> Relation {
        Relation::from_pairs(n, pairs).unwrap()
    }

    /// Smallest family of relations containing the generators and Δ and
    /// closed under subsets, inverses, compositions and unions, found by
    /// iterating over the whole relation lattice.
    fn brute_force_closure(n: usize, generators: &[Relation]) -> Vec<bool> {
        let total = 1usize << (n * n);
        let mut member = vec![false; total];
        let mut seeds: Vec<Relation> = generators.to_vec();
        seeds.push(Relation::diagonal(n));
        for s in &seeds {
            member[s.code() as usize] = true;
        }
        loop {
            let current: Vec<Relation> =
                (0..total).filter(|&c| member[c]).map(|c| Relation::from_code(n, c as u64)).collect();
            let mut changed = false;
            let mut add = |r: Relation, member: &mut Vec<bool>| {
                let c = r.code() as usize;
                if !member[c] {
                    member[c] = true;
                    changed = true;
                }
            };
            for a in &current {
                add(a.inverse(), &mut member);
                for b in &current {
                    add(a.union(b), &mut member);
                    add(a.compose(b), &mut member);
                }
                for c in 0..total {
                    let sub = Relation::from_code(n, c as u64);
                    if sub.is_subset(a) {
                        add(sub, &mut member);
                    }
                }
            }
            if !changed {
                return member;
            }
        }
    }

    #[test]
    fn composition_convention() {
        let e = rel(3, &[(0, 1)]);
        let f = rel(3, &[(1, 2)]);
        assert_eq!(f.compose(&e), rel(3, &[(0, 2)]));
        assert!(e.compose(&f).is_empty());
    }

    #[test]
    fn closure_of_diagonal_is_diagonal() {
        let basis = basis_closure(3, &[Relation::diagonal(3)]).unwrap();
        assert_eq!(basis, vec![Relation::diagonal(3)]);
    }

    #[test]
    fn closure_of_single_pair() {
        let eps = CoarseStructure::generated(3, &[rel(3, &[(0, 1)])]).unwrap();
        for pairs in [vec![(1, 0)], vec![(0, 0)], vec![(1, 1)], vec![(0, 0), (0, 1), (1, 0), (1, 1), (2, 2)]] {
            assert!(eps.is_member(&rel(3, &pairs)).unwrap(), "{pairs:?}");
        }
        assert!(!eps.is_member(&rel(3, &[(0, 2)])).unwrap());
        assert!(!eps.is_coarsely_connected());
    }

    #[test]
    fn closure_of_full_relation() {
        let eps = CoarseStructure::generated(3, &[Relation::full(3)]).unwrap();
        assert!(all_relations(3).iter().all(|e| eps.is_member(e).unwrap()));
    }

    #[test]
    fn closure_matches_brute_force_on_three_points() {
        let singles: Vec<Relation> = (0..9).map(|c| Relation::from_code(3, 1 << c)).collect();
        let mut generator_sets: Vec<Vec<Relation>> = singles.iter().map(|s| vec![s.clone()]).collect();
        generator_sets.push(vec![singles[1].clone(), singles[5].clone()]);
        generator_sets.push(vec![singles[3].clone(), singles[7].clone()]);
        for n in 1..=2 {
            for code in 0..1u64 << (n * n) {
                generator_sets.push(vec![Relation::from_code(n, code)]);
            }
        }
        for gens in generator_sets {
            let n = gens[0].carrier();
            let oracle = brute_force_closure(n, &gens);
            let eps = CoarseStructure::generated(n, &gens).unwrap();
            for e in all_relations(n) {
                assert_eq!(eps.is_member(&e).unwrap(), oracle[e.code() as usize], "{gens:?} {e:?}");
            }
            assert!(basis_conditions(n, eps.basis()).all());
        }
    }

    #[test]
    fn membership_edge_cases() {
        let eps = CoarseStructure::discrete(3);
        assert!(eps.is_member(&Relation::empty(3)).unwrap());
        assert!(eps.is_member(&Relation::diagonal(3)).unwrap());
        assert!(!eps.is_member(&rel(3, &[(0, 1)])).unwrap());
        assert!(eps.is_member(&Relation::empty(4)).is_err());
    }

    #[test]
    fn neighbourhoods_and_smallness() {
        let d = Relation::diagonal(4);
        assert_eq!(d.neighborhood(0b0110), 0b0110);
        assert_eq!(rel(4, &[(1, 0)]).neighborhood(0b1), 0b10);
        assert!(is_small(&d, 0b100));
        assert!(!is_small(&d, 0b1111));
        assert!(is_small(&Relation::full(4), 0b1111));
    }

    #[test]
    fn bounded_set_criteria() {
        let eps = CoarseStructure::generated(4, &[rel(4, &[(0, 1), (2, 3)])]).unwrap();
        assert!(eps.is_bounded(0));
        assert!(eps.is_bounded(0b1));
        assert!(eps.is_bounded(0b11));
        assert!(!eps.is_bounded(0b101));
        for b in 1..16 {
            assert_eq!(eps.is_bounded(b), eps.bounded_by_point(b));
        }
    }

    #[test]
    fn proper_space_predicates() {
        let eps = CoarseStructure::generated(3, &[rel(3, &[(0, 1)])]).unwrap();
        assert!(eps.is_proper_space(|_| true));
        assert!(!CoarseStructure::maximal(3).is_proper_space(|b| b.count_ones() <= 2));
    }

    #[test]
    fn map_classes() {
        let eps = CoarseStructure::generated(4, &[rel(4, &[(0, 1), (2, 3)])]).unwrap();
        let id = CarrierMap::identity(4);
        assert!(is_coarse_map(&id, &eps, &eps).unwrap());
        let constant = CarrierMap::new(4, vec![0; 4]).unwrap();
        assert!(is_bornologous(&constant, &eps, &eps).unwrap());
        // the preimage of {0} is everything, which is unbounded
        assert!(!is_proper_map(&constant, &eps, &eps).unwrap());
        let swap = CarrierMap::new(4, vec![1, 0, 3, 2]).unwrap();
        assert!(are_close(&id, &swap, &eps).unwrap());
        let cross = CarrierMap::new(4, vec![2, 3, 0, 1]).unwrap();
        assert!(!are_close(&id, &cross, &eps).unwrap());
    }

    #[test]
    fn coarse_equivalence_certificates() {
        let eps = CoarseStructure::generated(4, &[rel(4, &[(0, 1), (2, 3)])]).unwrap();
        let id = CarrierMap::identity(4);
        let cert = is_coarse_equivalence(&id, &id, &eps, &eps).unwrap().unwrap();
        assert_eq!(cert.target_pairs.pairs, vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
        // collapse each class to a point of a two-point discrete space and back
        let two = CoarseStructure::discrete(2);
        let f = CarrierMap::new(2, vec![0, 0, 1, 1]).unwrap();
        let g = CarrierMap::new(4, vec![0, 2]).unwrap();
        assert!(is_coarse_equivalence(&f, &g, &eps, &two).unwrap().is_ok());
        // a single point does not see the second class
        let one = CoarseStructure::discrete(1);
        let c = CarrierMap::new(1, vec![0; 4]).unwrap();
        let back = CarrierMap::new(4, vec![0]).unwrap();
        assert!(is_coarse_equivalence(&c, &back, &eps, &one).unwrap().is_err());
    }

    #[test]
    fn quasi_density_and_inverse() {
        let eps = CoarseStructure::generated(4, &[rel(4, &[(0, 1), (2, 3)])]).unwrap();
        assert!(is_quasi_dense(0b1111, &eps));
        assert!(is_quasi_dense(0b0101, &eps));
        assert!(!is_quasi_dense(0b0011, &eps));
        let (sub, inc) = eps.subspace(0b0101);
        let witness = quasi_density_witness(inc.image_set(full_set(2)), &eps).unwrap().clone();
        let inverse = quasi_inverse(&inc, &witness).unwrap();
        assert!(is_coarse_equivalence(&inc, &inverse, &sub, &eps).unwrap().is_ok());
    }

    #[test]
    fn relation_json() {
        let r = rel(3, &[(2, 0), (0, 1)]);
        let j = RelationJson::from(&r);
        assert_eq!(serde_json::to_string(&j).unwrap(), r#"{"carrier":3,"pairs":[[0,1],[2,0]]}"#);
        assert_eq!(Relation::try_from(&j).unwrap(), r);
    }

    fn arb_generators(n: usize) -> impl Strategy<Value = Vec<Relation>> {
        prop::collection::vec((0..n, 0..n), 0..4).prop_map(move |pairs| vec![Relation::from_pairs(n, &pairs).unwrap()])
    }

    proptest! {
        #[test]
        fn prop_membership_is_monotone(gens in arb_generators(4), code in 0u64..1 << 16, drop in 0usize..16) {
            let eps = CoarseStructure::generated(4, &gens).unwrap();
            let e = Relation::from_code(4, code);
            let smaller = Relation::from_code(4, code & !(1 << drop));
            if eps.is_member(&e).unwrap() {
                prop_assert!(eps.is_member(&smaller).unwrap());
            }
        }

        #[test]
        fn prop_generated_basis_conditions(gens in arb_generators(5)) {
            let eps = CoarseStructure::generated(5, &gens).unwrap();
            prop_assert!(basis_conditions(5, eps.basis()).all());
            for g in &gens {
                prop_assert!(eps.is_member(g).unwrap());
            }
        }

        #[test]
        fn prop_intersection_membership(a in arb_generators(4), b in arb_generators(4), code in 0u64..1 << 16) {
            let ea = CoarseStructure::generated(4, &a).unwrap();
            let eb = CoarseStructure::generated(4, &b).unwrap();
            let both = ea.intersection(&eb).unwrap();
            let e = Relation::from_code(4, code);
            prop_assert_eq!(both.is_member(&e).unwrap(), ea.is_member(&e).unwrap() && eb.is_member(&e).unwrap());
        }

        #[test]
        fn prop_bornologous_by_basis_matches_members(gens in arb_generators(3), target in arb_generators(3), map in prop::collection::vec(0usize..3, 3)) {
            let eps = CoarseStructure::generated(3, &gens).unwrap();
            let zeta = CoarseStructure::generated(3, &target).unwrap();
            let f = CarrierMap::new(3, map).unwrap();
            prop_assert_eq!(is_bornologous(&f, &eps, &zeta).unwrap(), is_bornologous_by_members(&f, &eps, &zeta).unwrap());
        }

        #[test]
        fn prop_subspace_inclusion_is_embedding(gens in arb_generators(5), set in 1u64..32) {
            let eps = CoarseStructure::generated(5, &gens).unwrap();
            let (sub, inc) = eps.subspace(set);
            prop_assert!(is_bornologous(&inc, &sub, &eps).unwrap());
            prop_assert!(is_proper_map(&inc, &sub, &eps).unwrap());
            // every entourage of the subspace is the restriction of one upstairs
            for e in sub.basis() {
                prop_assert!(eps.is_member(&e.image(&inc)).unwrap());
            }
        }
    }
}
