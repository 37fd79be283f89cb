//! Exact measurable actions: generator maps are atom permutations or
//! piecewise-affine rational bijections of [0,1); words act by composition.

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupKind, GroupModel, DEFAULT_BALL_CAP};
use crate::measure::{AtomSet, IntervalSet, Set, SetOp, Space, WeightedAtomSpace};
use crate::rational::{self, Rational};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

/// x in [lo,hi) maps to slope*x + offset.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Piece {
    pub lo: Rational,
    pub hi: Rational,
    pub slope: Rational,
    pub offset: Rational,
}

impl Piece {
    pub fn new(lo: Rational, hi: Rational, slope: Rational, offset: Rational) -> Self {
        Piece { lo, hi, slope, offset }
    }

    fn eval(&self, x: &Rational) -> Rational {
        &self.slope * x + &self.offset
    }

    /// Image of [a,b) inside this piece's domain, as a half-open interval.
    fn image(&self, a: &Rational, b: &Rational) -> (Rational, Rational) {
        let (u, v) = (self.eval(a), self.eval(b));
        if self.slope.is_positive() { (u, v) } else { (v, u) }
    }

    fn preimage(&self, c: &Rational, d: &Rational) -> (Rational, Rational) {
        let u = (c - &self.offset) / &self.slope;
        let v = (d - &self.offset) / &self.slope;
        if self.slope.is_positive() { (u, v) } else { (v, u) }
    }
}

/// Piecewise-affine bijection of [0,1) up to null sets, in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AffineMap {
    pieces: Vec<Piece>,
}

impl AffineMap {
    pub fn identity() -> Self {
        AffineMap { pieces: vec![Piece::new(Rational::zero(), Rational::one(), Rational::one(), Rational::zero())] }
    }

    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        let mut pieces = pieces;
        pieces.sort();
        let mut at = Rational::zero();
        let mut images = Vec::new();
        for p in &pieces {
            if p.lo != at || p.hi <= p.lo || p.slope.is_zero() {
                return Err(Error::InvalidModel("affine pieces must tile [0,1)".into()));
            }
            let (c, d) = p.image(&p.lo, &p.hi);
            if c < Rational::zero() || d > Rational::one() {
                return Err(Error::InvalidModel("affine piece maps outside [0,1)".into()));
            }
            images.push((c, d));
            at = p.hi.clone();
        }
        if !at.is_one() {
            return Err(Error::InvalidModel("affine pieces must tile [0,1)".into()));
        }
        images.sort();
        let mut end = Rational::zero();
        for (c, d) in &images {
            if c != &end {
                return Err(Error::InvalidModel("affine images must tile [0,1)".into()));
            }
            end = d.clone();
        }
        if !end.is_one() {
            return Err(Error::InvalidModel("affine images must tile [0,1)".into()));
        }
        Ok(Self::canonical(pieces))
    }

    fn canonical(mut pieces: Vec<Piece>) -> Self {
        pieces.sort();
        let mut out: Vec<Piece> = Vec::with_capacity(pieces.len());
        for p in pieces {
            if let Some(last) = out.last_mut() {
                if last.hi == p.lo && last.slope == p.slope && last.offset == p.offset {
                    last.hi = p.hi;
                    continue;
                }
            }
            out.push(p);
        }
        AffineMap { pieces: out }
    }

    /// Rotation x -> x + theta mod 1.
    pub fn rotation(theta: &Rational) -> Result<Self> {
        let t = theta - theta.floor();
        if t.is_zero() {
            return Ok(Self::identity());
        }
        let cut = Rational::one() - &t;
        Self::new(vec![
            Piece::new(Rational::zero(), cut.clone(), Rational::one(), t.clone()),
            Piece::new(cut, Rational::one(), Rational::one(), t - Rational::one()),
        ])
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn inverse(&self) -> AffineMap {
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let (c, d) = p.image(&p.lo, &p.hi);
                let s = Rational::one() / &p.slope;
                let o = -(&p.offset) / &p.slope;
                Piece::new(c, d, s, o)
            })
            .collect();
        Self::canonical(pieces)
    }

    /// self after other: x -> self(other(x)).
    pub fn compose(&self, other: &AffineMap) -> AffineMap {
        let mut out = Vec::new();
        for p in &other.pieces {
            let (c, d) = p.image(&p.lo, &p.hi);
            for q in &self.pieces {
                let lo = if q.lo > c { q.lo.clone() } else { c.clone() };
                let hi = if q.hi < d { q.hi.clone() } else { d.clone() };
                if lo >= hi {
                    continue;
                }
                let (a, b) = p.preimage(&lo, &hi);
                out.push(Piece::new(
                    a,
                    b,
                    &q.slope * &p.slope,
                    &q.slope * &p.offset + &q.offset,
                ));
            }
        }
        Self::canonical(out)
    }

    pub fn apply(&self, s: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        for (a, b) in s.intervals() {
            for p in &self.pieces {
                if &p.hi <= a {
                    continue;
                }
                if &p.lo >= b {
                    break;
                }
                let lo = if &p.lo > a { &p.lo } else { a };
                let hi = if &p.hi < b { &p.hi } else { b };
                out.push(p.image(lo, hi));
            }
        }
        IntervalSet::from_valid(out)
    }

    pub fn is_measure_preserving(&self) -> bool {
        self.pieces.iter().all(|p| p.slope.abs().is_one())
    }

    /// Distinct breakpoints of the domain pieces.
    pub fn breakpoints(&self) -> impl Iterator<Item = &Rational> {
        self.pieces.iter().map(|p| &p.lo)
    }
}

/// The action of a single group element.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Transform {
    Permutation(Vec<u32>),
    Affine(AffineMap),
}

impl Transform {
    pub fn identity_for(space: &Space) -> Transform {
        match space {
            Space::UnitInterval => Transform::Affine(AffineMap::identity()),
            Space::Atoms(w) => Transform::Permutation((0..w.len() as u32).collect()),
        }
    }

    pub fn compose(&self, other: &Transform) -> Result<Transform> {
        match (self, other) {
            (Transform::Permutation(a), Transform::Permutation(b)) if a.len() == b.len() => {
                Ok(Transform::Permutation(b.iter().map(|&x| a[x as usize]).collect()))
            }
            (Transform::Affine(a), Transform::Affine(b)) => Ok(Transform::Affine(a.compose(b))),
            _ => Err(Error::MixedSpaceKinds),
        }
    }

    pub fn inverse(&self) -> Transform {
        match self {
            Transform::Permutation(p) => {
                let mut inv = vec![0u32; p.len()];
                for (i, &x) in p.iter().enumerate() {
                    inv[x as usize] = i as u32;
                }
                Transform::Permutation(inv)
            }
            Transform::Affine(a) => Transform::Affine(a.inverse()),
        }
    }

    pub fn apply(&self, s: &Set) -> Result<Set> {
        match (self, s) {
            (Transform::Permutation(p), Set::Atoms(a)) if a.universe() == p.len() => {
                let mut out = AtomSet::empty(p.len());
                for i in a.indices() {
                    out.insert(p[i] as usize);
                }
                Ok(Set::Atoms(out))
            }
            (Transform::Affine(m), Set::Interval(i)) => Ok(Set::Interval(m.apply(i))),
            _ => Err(Error::MixedSpaceKinds),
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            Transform::Permutation(p) => p.iter().enumerate().all(|(i, &x)| i as u32 == x),
            Transform::Affine(a) => a == &AffineMap::identity(),
        }
    }
}

/// Ratio of transported mass to source mass, indexed by source point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TransportRatio {
    Atoms(Vec<Rational>),
    /// (lo, hi, ratio) on source subintervals.
    Pieces(Vec<(Rational, Rational, Rational)>),
}

impl TransportRatio {
    pub fn max(&self) -> Rational {
        let it: Box<dyn Iterator<Item = &Rational>> = match self {
            TransportRatio::Atoms(v) => Box::new(v.iter()),
            TransportRatio::Pieces(v) => Box::new(v.iter().map(|p| &p.2)),
        };
        it.fold(Rational::zero(), |m, r| rational::max(&m, r))
    }

    /// Points whose ratio is at least d.
    pub fn at_least(&self, d: &Rational) -> Set {
        match self {
            TransportRatio::Atoms(v) => {
                let mut s = AtomSet::empty(v.len());
                for (i, r) in v.iter().enumerate() {
                    if r >= d {
                        s.insert(i);
                    }
                }
                Set::Atoms(s)
            }
            TransportRatio::Pieces(v) => Set::Interval(IntervalSet::from_valid(
                v.iter()
                    .filter(|p| &p.2 >= d)
                    .map(|p| (p.0.clone(), p.1.clone()))
                    .collect(),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionModel {
    group: GroupModel,
    space: Space,
    maps: Vec<Transform>,
}

impl ActionModel {
    pub fn new(group: GroupModel, space: Space, maps: Vec<Transform>) -> Result<Self> {
        if maps.len() != group.generator_count() {
            return Err(Error::InvalidModel(format!(
                "{} generator maps for {} generators",
                maps.len(),
                group.generator_count()
            )));
        }
        for m in &maps {
            match (m, &space) {
                (Transform::Permutation(p), Space::Atoms(w)) => {
                    let mut seen = vec![false; w.len()];
                    if p.len() != w.len() {
                        return Err(Error::InvalidModel("permutation length mismatch".into()));
                    }
                    for &x in p {
                        if x as usize >= w.len() || std::mem::replace(&mut seen[x as usize], true) {
                            return Err(Error::InvalidModel("generator map is not a permutation".into()));
                        }
                    }
                }
                (Transform::Affine(_), Space::UnitInterval) => {}
                _ => return Err(Error::MixedSpaceKinds),
            }
        }
        for i in 0..maps.len() {
            let j = group.inverse_generator(i);
            if maps[j] != maps[i].inverse() {
                return Err(Error::InvalidModel(format!(
                    "map of {} is not the inverse of the map of {}",
                    group.generators[j].label, group.generators[i].label
                )));
            }
            if group.generators[i].element == group.identity() && !maps[i].is_identity() {
                return Err(Error::InvalidModel("identity must act trivially".into()));
            }
        }
        let model = ActionModel { group, space, maps };
        model.check_relations()?;
        Ok(model)
    }

    /// For finite groups, checks that the generator maps define an action.
    fn check_relations(&self) -> Result<()> {
        if !matches!(
            self.group.kind,
            GroupKind::MatrixModN { .. } | GroupKind::FiniteCyclic { .. }
        ) {
            return Ok(());
        }
        let id = self.group.identity();
        let mut seen: HashMap<GroupElement, Transform> = HashMap::new();
        seen.insert(id.clone(), Transform::identity_for(&self.space));
        let mut queue = std::collections::VecDeque::from([id]);
        while let Some(e) = queue.pop_front() {
            let t = seen[&e].clone();
            for (gi, g) in self.group.generators.iter().enumerate() {
                let f = self.group.multiply(&e, &g.element)?;
                let tf = t.compose(&self.maps[gi])?;
                match seen.get(&f) {
                    Some(prev) if prev != &tf => {
                        return Err(Error::InvalidModel(
                            "generator maps do not respect the group relations".into(),
                        ))
                    }
                    Some(_) => {}
                    None => {
                        if seen.len() >= DEFAULT_BALL_CAP {
                            return Err(Error::BallTooLarge { cap: DEFAULT_BALL_CAP });
                        }
                        seen.insert(f.clone(), tf);
                        queue.push_back(f);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn group(&self) -> &GroupModel {
        &self.group
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn maps(&self) -> &[Transform] {
        &self.maps
    }

    pub fn atoms(&self) -> Option<&WeightedAtomSpace> {
        self.space.atoms()
    }

    pub fn measure(&self, s: &Set) -> Result<Rational> {
        self.space.measure(s)
    }

    pub fn is_measure_preserving(&self) -> bool {
        self.maps.iter().all(|m| match (m, &self.space) {
            (Transform::Permutation(p), Space::Atoms(w)) => {
                p.iter().enumerate().all(|(i, &x)| w.weight(i) == w.weight(x as usize))
            }
            (Transform::Affine(a), _) => a.is_measure_preserving(),
            _ => false,
        })
    }

    pub fn word_transform(&self, word: &[usize]) -> Result<Transform> {
        let mut t = Transform::identity_for(&self.space);
        for &g in word {
            t = t.compose(&self.maps[g])?;
        }
        Ok(t)
    }

    pub fn transform(&self, g: &GroupElement) -> Result<Transform> {
        self.word_transform(&self.group.word_for(g)?)
    }

    pub fn transport(&self, g: &GroupElement, a: &Set) -> Result<Set> {
        self.space.check(a)?;
        self.transform(g)?.apply(a)
    }

    /// Distinct transforms realised by words of total length at most k, with
    /// the least such length, ordered by (length, discovery).
    pub fn transform_ball(&self, k: u32) -> Result<Vec<(Transform, u32)>> {
        self.transform_ball_with_cap(k, DEFAULT_BALL_CAP)
    }

    pub fn transform_ball_with_cap(&self, k: u32, cap: usize) -> Result<Vec<(Transform, u32)>> {
        let id = Transform::identity_for(&self.space);
        let mut index: HashMap<Transform, usize> = HashMap::new();
        let mut items = vec![id.clone()];
        let mut dist = vec![0u32];
        let mut done = vec![false];
        index.insert(id, 0);
        let mut heap = BinaryHeap::from([Reverse((0u32, 0usize))]);
        let mut out = Vec::new();
        while let Some(Reverse((d, i))) = heap.pop() {
            if done[i] || d != dist[i] {
                continue;
            }
            done[i] = true;
            out.push((items[i].clone(), d));
            for (gi, g) in self.group.generators.iter().enumerate() {
                let nd = d.saturating_add(g.length);
                if nd > k {
                    continue;
                }
                let t = self.maps[gi].compose(&items[i])?;
                match index.get(&t) {
                    Some(&j) => {
                        if nd < dist[j] {
                            dist[j] = nd;
                            heap.push(Reverse((nd, j)));
                        }
                    }
                    None => {
                        if items.len() >= cap {
                            return Err(Error::BallTooLarge { cap });
                        }
                        let j = items.len();
                        index.insert(t.clone(), j);
                        items.push(t);
                        dist.push(nd);
                        done.push(false);
                        heap.push(Reverse((nd, j)));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Weighted Schreier-graph distances from a set of source atoms, up to radius.
    pub fn schreier_distances(&self, sources: &[usize], radius: u32) -> Result<Vec<Option<u32>>> {
        let n = self.atoms().ok_or(Error::MixedSpaceKinds)?.len();
        let perms: Vec<&Vec<u32>> = self
            .maps
            .iter()
            .map(|m| match m {
                Transform::Permutation(p) => p,
                Transform::Affine(_) => unreachable!("atom model"),
            })
            .collect();
        let mut dist: Vec<Option<u32>> = vec![None; n];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            dist[s] = Some(0);
            heap.push(Reverse((0u32, s)));
        }
        while let Some(Reverse((d, x))) = heap.pop() {
            if dist[x] != Some(d) {
                continue;
            }
            for (gi, p) in perms.iter().enumerate() {
                let nd = d.saturating_add(self.group.generators[gi].length);
                if nd > radius {
                    continue;
                }
                let y = p[x] as usize;
                if dist[y].map_or(true, |old| nd < old) {
                    dist[y] = Some(nd);
                    heap.push(Reverse((nd, y)));
                }
            }
        }
        Ok(dist)
    }

    /// B_k . A
    pub fn k_neighborhood(&self, k: u32, a: &Set) -> Result<Set> {
        self.space.check(a)?;
        match a {
            Set::Atoms(s) => {
                let src: Vec<usize> = s.indices().collect();
                let d = self.schreier_distances(&src, k)?;
                let idx = d.iter().enumerate().filter(|(_, x)| x.is_some()).map(|(i, _)| i);
                Ok(Set::Atoms(AtomSet::from_indices(s.universe(), idx)?))
            }
            Set::Interval(_) => {
                let mut out = a.clone();
                for (t, _) in self.transform_ball(k)? {
                    out = out.union(&t.apply(a)?)?;
                }
                Ok(out)
            }
        }
    }

    /// Requires S to be closed under inverses.
    pub fn check_symmetric(&self, s: &[GroupElement]) -> Result<()> {
        for g in s {
            let gi = self.group.inverse(g)?;
            if !s.contains(&gi) {
                return Err(Error::AsymmetricGeneratingSet);
            }
        }
        Ok(())
    }

    /// S . A (without adding A itself).
    pub fn image_under(&self, s: &[GroupElement], a: &Set) -> Result<Set> {
        let mut out = self.space.empty_set();
        for g in s {
            out = out.union(&self.transport(g, a)?)?;
        }
        Ok(out)
    }

    /// S . A minus A.
    pub fn boundary(&self, s: &[GroupElement], a: &Set) -> Result<Set> {
        self.check_symmetric(s)?;
        self.space.check(a)?;
        self.image_under(s, a)?.combine(a, SetOp::Difference)
    }

    pub fn transport_ratio(&self, g: &GroupElement) -> Result<TransportRatio> {
        Ok(ratio_of(&self.transform(g)?, &self.space))
    }

    pub fn generator_elements(&self) -> Vec<GroupElement> {
        self.group.generators.iter().map(|g| g.element.clone()).collect()
    }
}

pub fn ratio_of(t: &Transform, space: &Space) -> TransportRatio {
    match (t, space) {
        (Transform::Permutation(p), Space::Atoms(w)) => TransportRatio::Atoms(
            p.iter()
                .enumerate()
                .map(|(i, &x)| w.weight(x as usize) / w.weight(i))
                .collect(),
        ),
        (Transform::Affine(a), _) => TransportRatio::Pieces(
            a.pieces()
                .iter()
                .map(|p| (p.lo.clone(), p.hi.clone(), p.slope.abs()))
                .collect(),
        ),
        _ => unreachable!("validated model"),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum SpaceRepr {
    UnitInterval,
    Atoms {
        #[serde(with = "rational::serde_str::vec")]
        weights: Vec<Rational>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum TransformRepr {
    Permutation(Vec<u32>),
    /// [lo, hi, slope, offset]
    Pieces(Vec<[String; 4]>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionModelRepr {
    group: GroupModel,
    space: SpaceRepr,
    maps: Vec<TransformRepr>,
}

impl From<&ActionModel> for ActionModelRepr {
    fn from(m: &ActionModel) -> Self {
        ActionModelRepr {
            group: m.group.clone(),
            space: match &m.space {
                Space::UnitInterval => SpaceRepr::UnitInterval,
                Space::Atoms(w) => SpaceRepr::Atoms { weights: w.weights().to_vec() },
            },
            maps: m
                .maps
                .iter()
                .map(|t| match t {
                    Transform::Permutation(p) => TransformRepr::Permutation(p.clone()),
                    Transform::Affine(a) => TransformRepr::Pieces(
                        a.pieces()
                            .iter()
                            .map(|p| {
                                [&p.lo, &p.hi, &p.slope, &p.offset].map(rational::format)
                            })
                            .collect(),
                    ),
                })
                .collect(),
        }
    }
}

impl TryFrom<ActionModelRepr> for ActionModel {
    type Error = Error;

    fn try_from(r: ActionModelRepr) -> Result<Self> {
        let space = match r.space {
            SpaceRepr::UnitInterval => Space::UnitInterval,
            SpaceRepr::Atoms { weights } => Space::Atoms(WeightedAtomSpace::new(weights)?),
        };
        let maps = r
            .maps
            .into_iter()
            .map(|t| match t {
                TransformRepr::Permutation(p) => Ok(Transform::Permutation(p)),
                TransformRepr::Pieces(ps) => {
                    let pieces = ps
                        .iter()
                        .map(|q| {
                            Ok(Piece::new(
                                rational::parse(&q[0])?,
                                rational::parse(&q[1])?,
                                rational::parse(&q[2])?,
                                rational::parse(&q[3])?,
                            ))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok(Transform::Affine(AffineMap::new(pieces)?))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        ActionModel::new(r.group.relink()?, space, maps)
    }
}

impl ActionModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ActionModelRepr::from(self)).expect("plain data")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: ActionModelRepr =
            serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        ActionModel::try_from(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn rotation_model(p: i64, q: i64) -> ActionModel {
        let f = AffineMap::rotation(&rat(p, q)).unwrap();
        ActionModel::new(
            GroupModel::integer_lattice(1),
            Space::UnitInterval,
            vec![Transform::Affine(f.clone()), Transform::Affine(f.inverse())],
        )
        .unwrap()
    }

    fn cycle(n: u32) -> ActionModel {
        let fwd: Vec<u32> = (0..n).map(|i| (i + 1) % n).collect();
        let t = Transform::Permutation(fwd);
        ActionModel::new(
            GroupModel::finite_cyclic(n as u64).unwrap(),
            Space::Atoms(WeightedAtomSpace::uniform(n as usize).unwrap()),
            vec![t.clone(), t.inverse()],
        )
        .unwrap()
    }

    fn iv(a: Rational, b: Rational) -> Set {
        Set::Interval(IntervalSet::interval(a, b).unwrap())
    }

    fn atoms(n: usize, idx: &[usize]) -> Set {
        Set::Atoms(AtomSet::from_indices(n, idx.iter().copied()).unwrap())
    }

    #[test]
    fn rotation_transport() {
        let m = rotation_model(1, 4);
        let g = GroupElement::Vector(vec![1]);
        assert_eq!(m.transport(&g, &iv(rat(0, 1), rat(1, 4))).unwrap(), iv(rat(1, 4), rat(1, 2)));
        let m3 = rotation_model(1, 3);
        let g2 = GroupElement::Vector(vec![2]);
        assert_eq!(
            m3.transport(&g2, &iv(rat(0, 1), rat(1, 3))).unwrap(),
            iv(rat(2, 3), rat(1, 1))
        );
    }

    #[test]
    fn cycle_transport_and_neighborhood() {
        let m = cycle(4);
        let g = GroupElement::Residue(1);
        assert_eq!(m.transport(&g, &atoms(4, &[0])).unwrap(), atoms(4, &[1]));
        let z8 = cycle(8);
        let n = z8.k_neighborhood(1, &atoms(8, &[3, 4, 5, 6])).unwrap();
        assert_eq!(n, atoms(8, &[2, 3, 4, 5, 6, 7]));
        assert_eq!(z8.measure(&n).unwrap(), rat(3, 4));
        assert_eq!(z8.k_neighborhood(0, &atoms(8, &[1])).unwrap(), atoms(8, &[1]));
    }

    #[test]
    fn interval_neighborhood_wraps() {
        let m = rotation_model(1, 8);
        let n = m.k_neighborhood(1, &iv(rat(0, 1), rat(1, 2))).unwrap();
        let expect = Set::Interval(
            IntervalSet::normalize(vec![(rat(0, 1), rat(5, 8)), (rat(7, 8), rat(1, 1))]).unwrap(),
        );
        assert_eq!(n, expect);
        assert_eq!(m.measure(&n).unwrap(), rat(3, 4));
    }

    #[test]
    fn boundaries() {
        let z8 = cycle(8);
        let s = z8.generator_elements();
        let b = z8.boundary(&s, &atoms(8, &[0, 1, 2])).unwrap();
        assert_eq!(b, atoms(8, &[3, 7]));
        assert_eq!(z8.measure(&b).unwrap(), rat(1, 4));
        assert!(z8.boundary(&s, &z8.space().full_set()).unwrap().is_empty());
        assert!(z8.boundary(&s, &atoms(8, &[])).unwrap().is_empty());
        assert!(matches!(
            z8.boundary(&s[..1], &atoms(8, &[0])),
            Err(Error::AsymmetricGeneratingSet)
        ));
        let r = rotation_model(1, 4);
        let b = r.boundary(&r.generator_elements(), &iv(rat(0, 1), rat(1, 4))).unwrap();
        let expect = Set::Interval(
            IntervalSet::normalize(vec![(rat(1, 4), rat(1, 2)), (rat(3, 4), rat(1, 1))]).unwrap(),
        );
        assert_eq!(b, expect);
    }

    #[test]
    fn reweighted_swap_ratios() {
        // atoms s0,s1 carry 1/4 each; targets t0,t1 carry 1/8 and 3/8.
        let w = WeightedAtomSpace::new(vec![rat(1, 4), rat(1, 4), rat(1, 8), rat(3, 8)]).unwrap();
        let swap = Transform::Permutation(vec![2, 3, 0, 1]);
        let m = ActionModel::new(GroupModel::finite_cyclic(2).unwrap(), Space::Atoms(w), vec![swap])
            .unwrap();
        let r = m.transport_ratio(&GroupElement::Residue(1)).unwrap();
        match r {
            TransportRatio::Atoms(v) => {
                assert_eq!(&v[..2], &[rat(1, 2), rat(3, 2)]);
                assert_eq!(&v[2..], &[rat(2, 1), rat(2, 3)]);
            }
            _ => panic!(),
        }
        assert!(!m.is_measure_preserving());
    }

    #[test]
    fn affine_slope_ratio() {
        let f = AffineMap::new(vec![
            Piece::new(rat(0, 1), rat(2, 3), rat(1, 2), rat(0, 1)),
            Piece::new(rat(2, 3), rat(1, 1), rat(2, 1), rat(-1, 1)),
        ])
        .unwrap();
        let m = ActionModel::new(
            GroupModel::integer_lattice(1),
            Space::UnitInterval,
            vec![Transform::Affine(f.clone()), Transform::Affine(f.inverse())],
        )
        .unwrap();
        let r = m.transport_ratio(&GroupElement::Vector(vec![1])).unwrap();
        assert_eq!(
            r,
            TransportRatio::Pieces(vec![
                (rat(0, 1), rat(2, 3), rat(1, 2)),
                (rat(2, 3), rat(1, 1), rat(2, 1))
            ])
        );
        let id = f.compose(&f.inverse());
        assert_eq!(id, AffineMap::identity());
    }

    #[test]
    fn rejects_broken_relations() {
        let t = Transform::Permutation(vec![1, 2, 0]);
        let r = ActionModel::new(
            GroupModel::finite_cyclic(4).unwrap(),
            Space::Atoms(WeightedAtomSpace::uniform(3).unwrap()),
            vec![t.clone(), t.inverse()],
        );
        assert!(matches!(r, Err(Error::InvalidModel(_))));
    }

    #[test]
    fn negative_slope_maps() {
        let flip = AffineMap::new(vec![Piece::new(rat(0, 1), rat(1, 1), rat(-1, 1), rat(1, 1))])
            .unwrap();
        let s = IntervalSet::interval(rat(0, 1), rat(1, 4)).unwrap();
        assert_eq!(flip.apply(&s), IntervalSet::interval(rat(3, 4), rat(1, 1)).unwrap());
        assert_eq!(flip.compose(&flip), AffineMap::identity());
    }

    #[test]
    fn json_round_trip() {
        let m = rotation_model(1, 3);
        assert_eq!(ActionModel::from_json(&m.to_json()).unwrap(), m);
        let c = cycle(5);
        assert_eq!(ActionModel::from_json(&c.to_json()).unwrap(), c);
    }
}
