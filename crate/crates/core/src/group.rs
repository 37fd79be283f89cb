//! Countable groups with word-length functions: free groups, integer lattices,
//! 2x2 matrices mod n and finite cyclic groups.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

pub const DEFAULT_BALL_CAP: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GroupKind {
    Free { rank: usize },
    IntegerLattice { dim: usize },
    MatrixModN { modulus: u64 },
    FiniteCyclic { order: u64 },
}

/// Canonical group element. Free-group letters are `i+1` for the i-th basis
/// element and `-(i+1)` for its inverse.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupElement {
    Word(Vec<i32>),
    Vector(Vec<i64>),
    Matrix([u64; 4]),
    Residue(u64),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Generator {
    pub label: String,
    pub element: GroupElement,
    pub length: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupModel {
    pub kind: GroupKind,
    pub generators: Vec<Generator>,
    #[serde(skip)]
    inverse_of: Vec<usize>,
}

/// Result of a ball enumeration: elements in order of (length, discovery),
/// each with a shortest word recoverable through parent links.
#[derive(Clone, Debug)]
pub struct Ball {
    pub elements: Vec<GroupElement>,
    pub lengths: Vec<u32>,
    parent: Vec<Option<(usize, usize)>>,
}

impl Ball {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Generator indices g1..gm with element = g1*...*gm.
    pub fn word(&self, mut i: usize) -> Vec<usize> {
        let mut w = Vec::new();
        while let Some((p, g)) = self.parent[i] {
            w.push(g);
            i = p;
        }
        w.reverse();
        w
    }

    pub fn position(&self, g: &GroupElement) -> Option<usize> {
        self.elements.iter().position(|e| e == g)
    }
}

fn mod_inv(a: u64, n: u64) -> Option<u64> {
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (n as i128, (a % n) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    if r != 1 {
        return None;
    }
    Some(t.rem_euclid(n as i128) as u64)
}

fn reduce_word(letters: impl IntoIterator<Item = i32>) -> Vec<i32> {
    let mut out: Vec<i32> = Vec::new();
    for l in letters {
        if out.last() == Some(&-l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

impl GroupModel {
    fn finish(kind: GroupKind, generators: Vec<Generator>) -> Result<Self> {
        let mut m = GroupModel { kind, generators, inverse_of: Vec::new() };
        m.link_inverses()?;
        Ok(m)
    }

    fn link_inverses(&mut self) -> Result<()> {
        let mut inv = Vec::with_capacity(self.generators.len());
        for g in &self.generators {
            if g.length == 0 {
                return Err(Error::InvalidModel(format!("generator {} has length 0", g.label)));
            }
            let gi = self.inverse(&g.element)?;
            let j = self
                .generators
                .iter()
                .position(|h| h.element == gi)
                .ok_or(Error::AsymmetricGeneratingSet)?;
            if self.generators[j].length != g.length {
                return Err(Error::InvalidModel(format!(
                    "generator {} and its inverse have different lengths",
                    g.label
                )));
            }
            inv.push(j);
        }
        self.inverse_of = inv;
        Ok(())
    }

    /// Restores the derived inverse table after deserialization.
    pub fn relink(mut self) -> Result<Self> {
        self.link_inverses()?;
        Ok(self)
    }

    pub fn free(rank: usize) -> Self {
        let letters = "abcdefghijklmnopqrstuvwxyz";
        let mut gens = Vec::new();
        for i in 0..rank {
            let name = letters.chars().nth(i % 26).unwrap();
            let label = if i < 26 { name.to_string() } else { format!("{name}{}", i / 26) };
            gens.push(Generator {
                label: label.clone(),
                element: GroupElement::Word(vec![i as i32 + 1]),
                length: 1,
            });
            gens.push(Generator {
                label: label.to_uppercase(),
                element: GroupElement::Word(vec![-(i as i32) - 1]),
                length: 1,
            });
        }
        Self::finish(GroupKind::Free { rank }, gens).expect("free generators are symmetric")
    }

    pub fn integer_lattice(dim: usize) -> Self {
        let mut gens = Vec::new();
        for i in 0..dim {
            for sign in [1i64, -1] {
                let mut v = vec![0; dim];
                v[i] = sign;
                gens.push(Generator {
                    label: format!("{}e{}", if sign > 0 { "+" } else { "-" }, i),
                    element: GroupElement::Vector(v),
                    length: 1,
                });
            }
        }
        Self::finish(GroupKind::IntegerLattice { dim }, gens).expect("lattice generators are symmetric")
    }

    pub fn finite_cyclic(order: u64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidModel("cyclic group order must be positive".into()));
        }
        let mut gens = Vec::new();
        if order > 1 {
            gens.push(Generator { label: "+1".into(), element: GroupElement::Residue(1), length: 1 });
        }
        if order > 2 {
            gens.push(Generator {
                label: "-1".into(),
                element: GroupElement::Residue(order - 1),
                length: 1,
            });
        }
        Self::finish(GroupKind::FiniteCyclic { order }, gens)
    }

    /// Matrices [[a,b],[c,d]] given row-major; inverses are appended unless already listed.
    pub fn matrix_mod(modulus: u64, matrices: &[[i64; 4]]) -> Result<Self> {
        if modulus < 2 {
            return Err(Error::InvalidModel("modulus must be at least 2".into()));
        }
        let kind = GroupKind::MatrixModN { modulus };
        let probe = GroupModel { kind: kind.clone(), generators: Vec::new(), inverse_of: Vec::new() };
        let mut gens: Vec<Generator> = Vec::new();
        for (i, m) in matrices.iter().enumerate() {
            let e = GroupElement::Matrix(m.map(|x| x.rem_euclid(modulus as i64) as u64));
            let inv = probe.inverse(&e)?;
            if !gens.iter().any(|g| g.element == e) {
                gens.push(Generator { label: format!("M{i}"), element: e.clone(), length: 1 });
            }
            if !gens.iter().any(|g| g.element == inv) {
                gens.push(Generator { label: format!("M{i}^-1"), element: inv, length: 1 });
            }
        }
        Self::finish(kind, gens)
    }

    /// Replaces generator lengths; they must stay positive and inverse-symmetric.
    pub fn with_lengths(mut self, lengths: &[u32]) -> Result<Self> {
        if lengths.len() != self.generators.len() {
            return Err(Error::InvalidModel("one length per generator required".into()));
        }
        for (g, &l) in self.generators.iter_mut().zip(lengths) {
            g.length = l;
        }
        self.link_inverses()?;
        Ok(self)
    }

    pub fn generator_count(&self) -> usize {
        self.generators.len()
    }

    pub fn inverse_generator(&self, i: usize) -> usize {
        self.inverse_of[i]
    }

    pub fn identity(&self) -> GroupElement {
        match &self.kind {
            GroupKind::Free { .. } => GroupElement::Word(Vec::new()),
            GroupKind::IntegerLattice { dim } => GroupElement::Vector(vec![0; *dim]),
            GroupKind::MatrixModN { .. } => GroupElement::Matrix([1, 0, 0, 1]),
            GroupKind::FiniteCyclic { .. } => GroupElement::Residue(0),
        }
    }

    fn check(&self, g: &GroupElement) -> Result<()> {
        let ok = match (&self.kind, g) {
            (GroupKind::Free { rank }, GroupElement::Word(w)) => {
                w.iter().all(|&l| l != 0 && (l.unsigned_abs() as usize) <= *rank)
                    && w.windows(2).all(|p| p[0] != -p[1])
            }
            (GroupKind::IntegerLattice { dim }, GroupElement::Vector(v)) => v.len() == *dim,
            (GroupKind::MatrixModN { modulus }, GroupElement::Matrix(m)) => {
                m.iter().all(|x| x < modulus)
            }
            (GroupKind::FiniteCyclic { order }, GroupElement::Residue(r)) => r < order,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ModelMismatch(format!("{g:?} does not belong to {:?}", self.kind)))
        }
    }

    pub fn multiply(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        self.check(h)?;
        Ok(match (g, h, &self.kind) {
            (GroupElement::Word(a), GroupElement::Word(b), _) => {
                GroupElement::Word(reduce_word(a.iter().chain(b.iter()).copied()))
            }
            (GroupElement::Vector(a), GroupElement::Vector(b), _) => {
                GroupElement::Vector(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            (GroupElement::Matrix(a), GroupElement::Matrix(b), GroupKind::MatrixModN { modulus }) => {
                let n = *modulus as u128;
                let m = |x: u64, y: u64, z: u64, w: u64| {
                    ((x as u128 * y as u128 + z as u128 * w as u128) % n) as u64
                };
                GroupElement::Matrix([
                    m(a[0], b[0], a[1], b[2]),
                    m(a[0], b[1], a[1], b[3]),
                    m(a[2], b[0], a[3], b[2]),
                    m(a[2], b[1], a[3], b[3]),
                ])
            }
            (GroupElement::Residue(a), GroupElement::Residue(b), GroupKind::FiniteCyclic { order }) => {
                GroupElement::Residue(((*a as u128 + *b as u128) % *order as u128) as u64)
            }
            _ => unreachable!("checked above"),
        })
    }

    pub fn inverse(&self, g: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        Ok(match (g, &self.kind) {
            (GroupElement::Word(w), _) => GroupElement::Word(w.iter().rev().map(|l| -l).collect()),
            (GroupElement::Vector(v), _) => GroupElement::Vector(v.iter().map(|x| -x).collect()),
            (GroupElement::Matrix(m), GroupKind::MatrixModN { modulus }) => {
                let n = *modulus;
                let det = ((m[0] as u128 * m[3] as u128 + (n as u128 - m[1] as u128) * m[2] as u128)
                    % n as u128) as u64;
                let di = mod_inv(det, n).ok_or_else(|| {
                    Error::InvalidModel(format!("matrix {m:?} is not invertible mod {n}"))
                })? as u128;
                let f = |x: u64| ((x as u128 * di) % n as u128) as u64;
                let neg = |x: u64| (n - x) % n;
                GroupElement::Matrix([f(m[3]), f(neg(m[1])), f(neg(m[2])), f(m[0])])
            }
            (GroupElement::Residue(r), GroupKind::FiniteCyclic { order }) => {
                GroupElement::Residue((order - r) % order)
            }
            _ => unreachable!("checked above"),
        })
    }

    fn letter_generator(&self, letter: i32) -> usize {
        self.generators
            .iter()
            .position(|g| g.element == GroupElement::Word(vec![letter]))
            .expect("free model lists every letter")
    }

    /// A shortest generator word (indices) for g.
    pub fn word_for(&self, g: &GroupElement) -> Result<Vec<usize>> {
        self.check(g)?;
        match (g, &self.kind) {
            (GroupElement::Word(w), _) => Ok(w.iter().map(|&l| self.letter_generator(l)).collect()),
            (GroupElement::Vector(v), _) => {
                let mut out = Vec::new();
                for (i, &x) in v.iter().enumerate() {
                    let gen = 2 * i + usize::from(x < 0);
                    out.extend(std::iter::repeat(gen).take(x.unsigned_abs() as usize));
                }
                Ok(out)
            }
            (GroupElement::Residue(r), GroupKind::FiniteCyclic { order }) => {
                let (r, n) = (*r, *order);
                if r == 0 {
                    Ok(Vec::new())
                } else if n == 2 || r <= n - r {
                    Ok(vec![0; r as usize])
                } else {
                    Ok(vec![1; (n - r) as usize])
                }
            }
            _ => {
                let ball = self.search(u32::MAX, DEFAULT_BALL_CAP, Some(g))?;
                let i = ball.position(g).ok_or_else(|| {
                    Error::ModelMismatch("element not generated by the generators".into())
                })?;
                Ok(ball.word(i))
            }
        }
    }

    pub fn length(&self, g: &GroupElement) -> Result<u32> {
        let w = self.word_for(g)?;
        Ok(w.iter().map(|&i| self.generators[i].length).sum())
    }

    pub fn ball(&self, k: u32) -> Result<Ball> {
        self.ball_with_cap(k, DEFAULT_BALL_CAP)
    }

    pub fn ball_with_cap(&self, k: u32, cap: usize) -> Result<Ball> {
        self.search(k, cap, None)
    }

    fn search(&self, k: u32, cap: usize, target: Option<&GroupElement>) -> Result<Ball> {
        let id = self.identity();
        let mut index: HashMap<GroupElement, usize> = HashMap::new();
        let mut elems = vec![id.clone()];
        let mut dist = vec![0u32];
        let mut parent: Vec<Option<(usize, usize)>> = vec![None];
        let mut done = vec![false];
        let mut order = Vec::new();
        index.insert(id, 0);
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((0u32, 0usize)));
        while let Some(Reverse((d, i))) = heap.pop() {
            if done[i] || d != dist[i] {
                continue;
            }
            done[i] = true;
            order.push(i);
            if target == Some(&elems[i]) {
                break;
            }
            for (gi, g) in self.generators.iter().enumerate() {
                let nd = d.saturating_add(g.length);
                if nd > k {
                    continue;
                }
                let e = self.multiply(&elems[i], &g.element)?;
                match index.get(&e) {
                    Some(&j) => {
                        if nd < dist[j] {
                            dist[j] = nd;
                            parent[j] = Some((i, gi));
                            heap.push(Reverse((nd, j)));
                        }
                    }
                    None => {
                        if elems.len() >= cap {
                            return Err(Error::BallTooLarge { cap });
                        }
                        let j = elems.len();
                        index.insert(e.clone(), j);
                        elems.push(e);
                        dist.push(nd);
                        parent.push(Some((i, gi)));
                        done.push(false);
                        heap.push(Reverse((nd, j)));
                    }
                }
            }
        }
        let mut remap = vec![usize::MAX; elems.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        let mut out = Ball { elements: Vec::new(), lengths: Vec::new(), parent: Vec::new() };
        for &old in &order {
            out.elements.push(elems[old].clone());
            out.lengths.push(dist[old]);
            out.parent.push(parent[old].map(|(p, g)| (remap[p], g)));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_cancellation() {
        let f = GroupModel::free(2);
        let a = GroupElement::Word(vec![1]);
        let ai = f.inverse(&a).unwrap();
        assert_eq!(f.multiply(&a, &ai).unwrap(), f.identity());
    }

    #[test]
    fn matrix_product_mod_five() {
        let g = GroupModel::matrix_mod(5, &[[1, 2, 0, 1], [1, 0, 2, 1]]).unwrap();
        let p = g
            .multiply(&GroupElement::Matrix([1, 2, 0, 1]), &GroupElement::Matrix([1, 0, 2, 1]))
            .unwrap();
        assert_eq!(p, GroupElement::Matrix([0, 2, 2, 1]));
        assert_eq!(g.generator_count(), 4);
    }

    #[test]
    fn lattice_sum() {
        let z2 = GroupModel::integer_lattice(2);
        let s = z2
            .multiply(&GroupElement::Vector(vec![1, 0]), &GroupElement::Vector(vec![0, 1]))
            .unwrap();
        assert_eq!(s, GroupElement::Vector(vec![1, 1]));
    }

    #[test]
    fn free_ball_sizes() {
        let f = GroupModel::free(2);
        assert_eq!(f.ball(0).unwrap().len(), 1);
        assert_eq!(f.ball(1).unwrap().len(), 5);
        assert_eq!(f.ball(2).unwrap().len(), 17);
    }

    #[test]
    fn ball_cap_is_an_error() {
        let f = GroupModel::free(3);
        assert!(matches!(f.ball_with_cap(6, 100), Err(Error::BallTooLarge { cap: 100 })));
    }

    #[test]
    fn model_mismatch() {
        let f = GroupModel::free(2);
        assert!(matches!(
            f.multiply(&GroupElement::Residue(1), &f.identity()),
            Err(Error::ModelMismatch(_))
        ));
    }

    #[test]
    fn weighted_lengths_and_words() {
        let z = GroupModel::integer_lattice(1).with_lengths(&[3, 3]).unwrap();
        assert_eq!(z.length(&GroupElement::Vector(vec![-2])).unwrap(), 6);
        let b = z.ball(6).unwrap();
        assert_eq!(b.len(), 5);
        let c = GroupModel::finite_cyclic(7).unwrap();
        assert_eq!(c.length(&GroupElement::Residue(5)).unwrap(), 2);
        assert!(GroupModel::integer_lattice(1).with_lengths(&[1, 2]).is_err());
    }

    #[test]
    fn matrix_words_reach_elements() {
        let g = GroupModel::matrix_mod(3, &[[1, 2, 0, 1], [1, 0, 2, 1]]).unwrap();
        let b = g.ball(20).unwrap();
        assert_eq!(b.len(), 24);
        for (i, e) in b.elements.iter().enumerate() {
            let w = b.word(i);
            let mut p = g.identity();
            for gi in &w {
                p = g.multiply(&p, &g.generators[*gi].element).unwrap();
            }
            assert_eq!(&p, e);
            assert_eq!(w.len() as u32, b.lengths[i]);
        }
    }
}
