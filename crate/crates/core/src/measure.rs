//! Probability spaces and measurable sets: finite unions of half-open rational
//! intervals in [0,1), or subsets of a finite weighted atom space.

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use fixedbitset::FixedBitSet;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

/// Canonical finite union of half-open intervals [a,b) inside [0,1).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct IntervalSet {
    intervals: Vec<(Rational, Rational)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetOp {
    Union,
    Intersect,
    Difference,
    Symdiff,
}

impl SetOp {
    fn keep(self, a: bool, b: bool) -> bool {
        match self {
            SetOp::Union => a || b,
            SetOp::Intersect => a && b,
            SetOp::Difference => a && !b,
            SetOp::Symdiff => a != b,
        }
    }
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet::default()
    }

    pub fn full() -> Self {
        IntervalSet { intervals: vec![(Rational::zero(), Rational::one())] }
    }

    /// Validates raw pairs and returns the sorted, disjoint, merged form.
    pub fn normalize(raw: Vec<(Rational, Rational)>) -> Result<Self> {
        for (a, b) in &raw {
            if a >= b || a < &Rational::zero() || b > &Rational::one() {
                return Err(Error::MalformedInterval(format!(
                    "[{}, {})",
                    rational::format(a),
                    rational::format(b)
                )));
            }
        }
        Ok(Self::from_valid(raw))
    }

    pub fn interval(a: Rational, b: Rational) -> Result<Self> {
        Self::normalize(vec![(a, b)])
    }

    /// Canonicalizes pairs already known to satisfy 0 <= a < b <= 1.
    pub(crate) fn from_valid(mut raw: Vec<(Rational, Rational)>) -> Self {
        raw.sort();
        let mut out: Vec<(Rational, Rational)> = Vec::with_capacity(raw.len());
        for (a, b) in raw {
            if let Some(last) = out.last_mut() {
                if a <= last.1 {
                    if b > last.1 {
                        last.1 = b;
                    }
                    continue;
                }
            }
            out.push((a, b));
        }
        IntervalSet { intervals: out }
    }

    pub fn intervals(&self) -> &[(Rational, Rational)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> Rational {
        self.intervals
            .iter()
            .fold(Rational::zero(), |acc, (a, b)| acc + (b - a))
    }

    pub fn combine(&self, other: &IntervalSet, op: SetOp) -> IntervalSet {
        let mut points: Vec<&Rational> = Vec::new();
        for (a, b) in self.intervals.iter().chain(other.intervals.iter()) {
            points.push(a);
            points.push(b);
        }
        points.sort();
        points.dedup();
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        for w in points.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            while i < self.intervals.len() && &self.intervals[i].1 <= lo {
                i += 1;
            }
            while j < other.intervals.len() && &other.intervals[j].1 <= lo {
                j += 1;
            }
            let in_a = i < self.intervals.len() && &self.intervals[i].0 <= lo;
            let in_b = j < other.intervals.len() && &other.intervals[j].0 <= lo;
            if op.keep(in_a, in_b) {
                out.push((lo.clone(), hi.clone()));
            }
        }
        Self::from_valid(out)
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        self.combine(other, SetOp::Union)
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        self.combine(other, SetOp::Intersect)
    }

    pub fn difference(&self, other: &IntervalSet) -> IntervalSet {
        self.combine(other, SetOp::Difference)
    }

    pub fn complement(&self) -> IntervalSet {
        IntervalSet::full().difference(self)
    }

    /// True when the intersection has positive measure.
    pub fn overlaps(&self, other: &IntervalSet) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let (a0, a1) = &self.intervals[i];
            let (b0, b1) = &other.intervals[j];
            if a0.max(b0) < a1.min(b1) {
                return true;
            }
            if a1 <= b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        false
    }

    pub fn is_subset(&self, other: &IntervalSet) -> bool {
        self.difference(other).is_empty()
    }
}

/// Finite probability space with strictly positive rational atom weights.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeightedAtomSpace {
    #[serde(with = "rational::serde_str::vec")]
    weights: Vec<Rational>,
}

impl WeightedAtomSpace {
    pub fn new(weights: Vec<Rational>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidModel("atom space needs at least one atom".into()));
        }
        if weights.iter().any(|w| w <= &Rational::zero()) {
            return Err(Error::InvalidModel("atom weights must be positive".into()));
        }
        let total = weights.iter().fold(Rational::zero(), |a, w| a + w);
        if !total.is_one() {
            return Err(Error::InvalidModel(format!(
                "atom weights sum to {}, not 1",
                rational::format(&total)
            )));
        }
        Ok(WeightedAtomSpace { weights })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![rational::rat(1, n.max(1) as i64); n])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> &Rational {
        &self.weights[i]
    }
}

/// Bit-indexed subset of the atoms of a weighted atom space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AtomSet {
    bits: FixedBitSet,
}

impl AtomSet {
    pub fn empty(n: usize) -> Self {
        AtomSet { bits: FixedBitSet::with_capacity(n) }
    }

    pub fn full(n: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(n);
        bits.insert_range(..);
        AtomSet { bits }
    }

    pub fn from_indices(n: usize, idx: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut s = Self::empty(n);
        for i in idx {
            if i >= n {
                return Err(Error::InvalidModel(format!("atom {i} out of range for {n} atoms")));
            }
            s.bits.insert(i);
        }
        Ok(s)
    }

    pub fn universe(&self) -> usize {
        self.bits.len()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits.contains(i)
    }

    pub fn insert(&mut self, i: usize) {
        self.bits.insert(i);
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn count(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn combine(&self, other: &AtomSet, op: SetOp) -> Result<AtomSet> {
        if self.universe() != other.universe() {
            return Err(Error::MixedSpaceKinds);
        }
        let mut bits = self.bits.clone();
        match op {
            SetOp::Union => bits.union_with(&other.bits),
            SetOp::Intersect => bits.intersect_with(&other.bits),
            SetOp::Difference => bits.difference_with(&other.bits),
            SetOp::Symdiff => bits.symmetric_difference_with(&other.bits),
        }
        Ok(AtomSet { bits })
    }

    pub fn complement(&self) -> AtomSet {
        let mut bits = self.bits.clone();
        bits.toggle_range(..);
        AtomSet { bits }
    }

    pub fn measure(&self, space: &WeightedAtomSpace) -> Rational {
        self.indices()
            .fold(Rational::zero(), |acc, i| acc + space.weight(i))
    }
}

/// A measurable set on either kind of space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Set {
    Interval(IntervalSet),
    Atoms(AtomSet),
}

/// The underlying probability space of a model.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Space {
    UnitInterval,
    Atoms(WeightedAtomSpace),
}

impl Space {
    pub fn empty_set(&self) -> Set {
        match self {
            Space::UnitInterval => Set::Interval(IntervalSet::empty()),
            Space::Atoms(w) => Set::Atoms(AtomSet::empty(w.len())),
        }
    }

    pub fn full_set(&self) -> Set {
        match self {
            Space::UnitInterval => Set::Interval(IntervalSet::full()),
            Space::Atoms(w) => Set::Atoms(AtomSet::full(w.len())),
        }
    }

    pub fn measure(&self, s: &Set) -> Result<Rational> {
        match (self, s) {
            (Space::UnitInterval, Set::Interval(i)) => Ok(i.measure()),
            (Space::Atoms(w), Set::Atoms(a)) if a.universe() == w.len() => Ok(a.measure(w)),
            _ => Err(Error::MixedSpaceKinds),
        }
    }

    pub fn atoms(&self) -> Option<&WeightedAtomSpace> {
        match self {
            Space::Atoms(w) => Some(w),
            Space::UnitInterval => None,
        }
    }

    /// Checks that a set belongs to this space.
    pub fn check(&self, s: &Set) -> Result<()> {
        self.measure(s).map(|_| ())
    }
}

impl Set {
    pub fn combine(&self, other: &Set, op: SetOp) -> Result<Set> {
        match (self, other) {
            (Set::Interval(a), Set::Interval(b)) => Ok(Set::Interval(a.combine(b, op))),
            (Set::Atoms(a), Set::Atoms(b)) => Ok(Set::Atoms(a.combine(b, op)?)),
            _ => Err(Error::MixedSpaceKinds),
        }
    }

    pub fn union(&self, other: &Set) -> Result<Set> {
        self.combine(other, SetOp::Union)
    }

    pub fn intersect(&self, other: &Set) -> Result<Set> {
        self.combine(other, SetOp::Intersect)
    }

    pub fn difference(&self, other: &Set) -> Result<Set> {
        self.combine(other, SetOp::Difference)
    }

    pub fn symdiff(&self, other: &Set) -> Result<Set> {
        self.combine(other, SetOp::Symdiff)
    }

    pub fn complement(&self) -> Set {
        match self {
            Set::Interval(i) => Set::Interval(i.complement()),
            Set::Atoms(a) => Set::Atoms(a.complement()),
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Set::Interval(i) => i.is_empty(),
            Set::Atoms(a) => a.is_empty(),
        }
    }

    pub fn is_subset(&self, other: &Set) -> Result<bool> {
        Ok(self.difference(other)?.is_empty())
    }

    /// Positive-measure intersection test (atoms always have positive weight).
    pub fn overlaps(&self, other: &Set) -> Result<bool> {
        match (self, other) {
            (Set::Interval(a), Set::Interval(b)) => Ok(a.overlaps(b)),
            (Set::Atoms(a), Set::Atoms(b)) => Ok(!a.combine(b, SetOp::Intersect)?.is_empty()),
            _ => Err(Error::MixedSpaceKinds),
        }
    }

    pub fn as_atoms(&self) -> Option<&AtomSet> {
        match self {
            Set::Atoms(a) => Some(a),
            Set::Interval(_) => None,
        }
    }

    pub fn as_intervals(&self) -> Option<&IntervalSet> {
        match self {
            Set::Interval(i) => Some(i),
            Set::Atoms(_) => None,
        }
    }

    /// Compact text form: "{0,3,5}" for atoms, "[0,1/2) u [3/4,1)" for intervals.
    pub fn describe(&self) -> String {
        match self {
            Set::Atoms(a) => {
                let v: Vec<String> = a.indices().map(|i| i.to_string()).collect();
                format!("{{{}}}", v.join(","))
            }
            Set::Interval(i) if i.is_empty() => "{}".into(),
            Set::Interval(i) => i
                .intervals()
                .iter()
                .map(|(a, b)| format!("[{},{})", rational::format(a), rational::format(b)))
                .collect::<Vec<_>>()
                .join(" u "),
        }
    }
}

/// Serializable form of a set: atom indices or interval endpoint strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SetRepr {
    Atoms(Vec<usize>),
    Intervals(Vec<(String, String)>),
}

impl SetRepr {
    pub fn from_set(s: &Set) -> SetRepr {
        match s {
            Set::Atoms(a) => SetRepr::Atoms(a.indices().collect()),
            Set::Interval(i) => SetRepr::Intervals(
                i.intervals()
                    .iter()
                    .map(|(a, b)| (rational::format(a), rational::format(b)))
                    .collect(),
            ),
        }
    }

    pub fn to_set(&self, space: &Space) -> Result<Set> {
        match (self, space) {
            (SetRepr::Atoms(v), Space::Atoms(w)) => {
                Ok(Set::Atoms(AtomSet::from_indices(w.len(), v.iter().copied())?))
            }
            (SetRepr::Atoms(v), Space::UnitInterval) if v.is_empty() => {
                Ok(Set::Interval(IntervalSet::empty()))
            }
            (SetRepr::Intervals(v), Space::UnitInterval) => {
                let raw = v
                    .iter()
                    .map(|(a, b)| Ok((rational::parse(a)?, rational::parse(b)?)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Set::Interval(IntervalSet::normalize(raw)?))
            }
            _ => Err(Error::MixedSpaceKinds),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn iv(pairs: &[(i64, i64, i64, i64)]) -> IntervalSet {
        IntervalSet::normalize(pairs.iter().map(|&(a, b, c, d)| (rat(a, b), rat(c, d))).collect())
            .unwrap()
    }

    #[test]
    fn normalize_merges_adjacent_and_overlapping() {
        assert_eq!(iv(&[(0, 1, 1, 2), (1, 2, 1, 1)]), IntervalSet::full());
        assert_eq!(iv(&[(1, 4, 3, 4), (1, 2, 1, 1)]), iv(&[(1, 4, 1, 1)]));
        let third = iv(&[(1, 3, 2, 3)]);
        assert_eq!(third.intervals().len(), 1);
        assert_eq!(third.measure(), rat(1, 3));
    }

    #[test]
    fn normalize_rejects_bad_pairs() {
        assert!(IntervalSet::normalize(vec![(rat(1, 2), rat(1, 2))]).is_err());
        assert!(IntervalSet::normalize(vec![(rat(3, 4), rat(1, 4))]).is_err());
        assert!(IntervalSet::normalize(vec![(rat(-1, 4), rat(1, 4))]).is_err());
        assert!(IntervalSet::normalize(vec![(rat(1, 4), rat(5, 4))]).is_err());
    }

    #[test]
    fn symdiff_of_overlapping_halves() {
        let a = iv(&[(0, 1, 1, 2)]);
        let b = iv(&[(1, 4, 3, 4)]);
        let d = a.combine(&b, SetOp::Symdiff);
        assert_eq!(d, iv(&[(0, 1, 1, 4), (1, 2, 3, 4)]));
        assert_eq!(d.measure(), rat(1, 2));
        assert!(a.combine(&a, SetOp::Symdiff).is_empty());
    }

    #[test]
    fn atom_intersection_and_measure() {
        let a = AtomSet::from_indices(4, [0, 1]).unwrap();
        let b = AtomSet::from_indices(4, [1, 2]).unwrap();
        let c = a.combine(&b, SetOp::Intersect).unwrap();
        assert_eq!(c.indices().collect::<Vec<_>>(), vec![1]);
        let w = WeightedAtomSpace::new(vec![rat(1, 2), rat(1, 4), rat(1, 4)]).unwrap();
        let s = AtomSet::from_indices(3, [0, 1]).unwrap();
        assert_eq!(s.measure(&w), rat(3, 4));
        assert_eq!(AtomSet::empty(3).measure(&w), int(0));
    }

    #[test]
    fn mixed_kinds_are_rejected() {
        let a = Set::Interval(IntervalSet::full());
        let b = Set::Atoms(AtomSet::full(3));
        assert!(matches!(a.union(&b), Err(Error::MixedSpaceKinds)));
    }

    #[test]
    fn weights_must_sum_to_one() {
        assert!(WeightedAtomSpace::new(vec![rat(1, 2), rat(1, 4)]).is_err());
        assert!(WeightedAtomSpace::new(vec![int(1), int(0)]).is_err());
    }

    #[test]
    fn touching_intervals_do_not_overlap() {
        let a = iv(&[(0, 1, 1, 2)]);
        let b = iv(&[(1, 2, 1, 1)]);
        assert!(!a.overlaps(&b));
        assert!(a.overlaps(&iv(&[(1, 4, 3, 4)])));
    }

    #[test]
    fn set_repr_round_trip() {
        let s = Set::Interval(iv(&[(0, 1, 1, 3), (1, 2, 3, 4)]));
        let r = SetRepr::from_set(&s);
        assert_eq!(r.to_set(&Space::UnitInterval).unwrap(), s);
    }
}
