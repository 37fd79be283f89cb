//! Built-in scenarios: amenable controls (rotation, odometer), expanders from
//! SL(2, Z/p), a composite with shrinking tails, and the nasty Z-action.

use crate::action::{ActionModel, AffineMap, Piece, Transform};
use crate::approx::{build_partition, Partition, PartitionSpec};
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupModel};
use crate::measure::{AtomSet, IntervalSet, Set, Space, WeightedAtomSpace};
use crate::rational::{self, int, rat, Rational};
use num_traits::{One, Zero};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::sync::Arc;

/// A built model with its companion data.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub action: ActionModel,
    /// Suggested partition sequence (may be empty).
    pub partitions: Vec<Partition>,
    /// Nested excision sets for exhaustions (may be empty).
    pub tails: Vec<Set>,
    /// Default sample sets for admissibility tests.
    pub samples: Vec<Set>,
    /// Human-readable facts about the construction (e.g. truncation defect).
    pub notes: BTreeMap<String, String>,
}

impl Scenario {
    fn new(name: &str, action: ActionModel) -> Self {
        Scenario {
            name: name.into(),
            action,
            partitions: Vec::new(),
            tails: Vec::new(),
            samples: Vec::new(),
            notes: BTreeMap::new(),
        }
    }
}

pub trait ScenarioBuilder: Send + Sync {
    fn name(&self) -> &'static str;
    fn build(&self, params: &toml::Table) -> Result<Scenario>;
}

fn params<T: DeserializeOwned>(name: &str, table: &toml::Table) -> Result<T> {
    toml::Value::Table(table.clone())
        .try_into()
        .map_err(|e| Error::BadParams(format!("{name}: {e}")))
}

fn is_odd_prime(p: u64) -> bool {
    p >= 3 && p % 2 == 1 && (3..).step_by(2).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

fn uniform_action(group: GroupModel, n: usize, maps: Vec<Transform>) -> Result<ActionModel> {
    ActionModel::new(group, Space::Atoms(WeightedAtomSpace::uniform(n)?), maps)
}

fn integer_action(space: Space, forward: Transform) -> Result<ActionModel> {
    let back = forward.inverse();
    ActionModel::new(GroupModel::integer_lattice(1), space, vec![forward, back])
}

pub struct Rotation;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RotationParams {
    #[serde(with = "rational::serde_str")]
    angle: Rational,
}

impl ScenarioBuilder for Rotation {
    fn name(&self) -> &'static str {
        "rotation"
    }

    fn build(&self, table: &toml::Table) -> Result<Scenario> {
        let p: RotationParams = params(self.name(), table)?;
        rotation(&p.angle)
    }
}

/// x -> x + angle mod 1 on [0,1).
pub fn rotation(angle: &Rational) -> Result<Scenario> {
    let m = AffineMap::rotation(angle).map_err(|e| Error::BadParams(e.to_string()))?;
    let mut s = Scenario::new("rotation", integer_action(Space::UnitInterval, Transform::Affine(m))?);
    s.samples = vec![Set::Interval(IntervalSet::interval(int(0), rat(1, 2))?)];
    s.notes.insert("angle".into(), rational::format(angle));
    Ok(s)
}

pub struct Odometer;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OdometerParams {
    depth: u32,
}

impl ScenarioBuilder for Odometer {
    fn name(&self) -> &'static str {
        "odometer"
    }

    fn build(&self, table: &toml::Table) -> Result<Scenario> {
        let p: OdometerParams = params(self.name(), table)?;
        odometer(p.depth)
    }
}

/// Adding machine on 2^depth dyadic cylinders; atom a is the interval
/// [a/2^depth, (a+1)/2^depth), whose leading binary digit is the first coordinate.
pub fn odometer(depth: u32) -> Result<Scenario> {
    if depth == 0 || depth > 20 {
        return Err(Error::BadParams("odometer depth must lie in 1..=20".into()));
    }
    let n = 1usize << depth;
    let rev = |a: usize| a.reverse_bits() >> (usize::BITS - depth);
    let perm = (0..n).map(|a| rev((rev(a) + 1) % n) as u32).collect();
    let mut s = Scenario::new("odometer", integer_action(Space::Atoms(WeightedAtomSpace::uniform(n)?), Transform::Permutation(perm))?);
    s.notes.insert("atoms".into(), n.to_string());
    Ok(s)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PrimeParams {
    p: u64,
}

const SL2_GENERATORS: [[i64; 4]; 2] = [[1, 2, 0, 1], [1, 0, 2, 1]];

fn matrix(g: &GroupElement) -> [u64; 4] {
    match g {
        GroupElement::Matrix(m) => *m,
        _ => unreachable!("matrix generator"),
    }
}

pub struct Sl2Torus;

impl ScenarioBuilder for Sl2Torus {
    fn name(&self) -> &'static str {
        "sl2-torus"
    }

    fn build(&self, table: &toml::Table) -> Result<Scenario> {
        let p: PrimeParams = params(self.name(), table)?;
        sl2_torus(p.p)
    }
}

/// Nonzero vectors of (Z/p)^2, indexed by x*p + y - 1.
fn torus_permutation(m: [u64; 4], p: u64) -> Vec<u32> {
    let idx = |x: u64, y: u64| (x * p + y - 1) as u32;
    let mut out = Vec::with_capacity((p * p - 1) as usize);
    for v in 1..p * p {
        let (x, y) = (v / p, v % p);
        out.push(idx((m[0] * x + m[1] * y) % p, (m[2] * x + m[3] * y) % p));
    }
    out
}

/// [[1,2],[0,1]], [[1,0],[2,1]] and inverses on (Z/p)^2 minus 0, uniform weights.
pub fn sl2_torus(p: u64) -> Result<Scenario> {
    if !is_odd_prime(p) || p > 1000 {
        return Err(Error::BadParams(format!("sl2-torus needs an odd prime below 1000, got {p}")));
    }
    let g = GroupModel::matrix_mod(p, &SL2_GENERATORS)?;
    let maps = g.generators.iter().map(|x| Transform::Permutation(torus_permutation(matrix(&x.element), p))).collect();
    let mut s = Scenario::new("sl2-torus", uniform_action(g, (p * p - 1) as usize, maps)?);
    s.notes.insert("atoms".into(), (p * p - 1).to_string());
    Ok(s)
}

pub struct SchreierSl2p;

impl ScenarioBuilder for SchreierSl2p {
    fn name(&self) -> &'static str {
        "schreier-sl2p"
    }

    fn build(&self, table: &toml::Table) -> Result<Scenario> {
        let p: PrimeParams = params(self.name(), table)?;
        schreier_sl2p(p.p)
    }
}

/// The same generators acting on SL(2, Z/p) by left multiplication.
pub fn schreier_sl2p(p: u64) -> Result<Scenario> {
    if !is_odd_prime(p) || p > 50 {
        return Err(Error::BadParams(format!("schreier-sl2p needs an odd prime below 50, got {p}")));
    }
    let g = GroupModel::matrix_mod(p, &SL2_GENERATORS)?;
    let mut elems: Vec<[u64; 4]> = Vec::new();
    for a in 0..p {
        for b in 0..p {
            for c in 0..p {
                for d in 0..p {
                    if (a * d + p * p - b * c % p) % p == 1 {
                        elems.push([a, b, c, d]);
                    }
                }
            }
        }
    }
    let index: BTreeMap<[u64; 4], u32> = elems.iter().enumerate().map(|(i, m)| (*m, i as u32)).collect();
    let mul = |x: [u64; 4], y: [u64; 4]| {
        [
            (x[0] * y[0] + x[1] * y[2]) % p,
            (x[0] * y[1] + x[1] * y[3]) % p,
            (x[2] * y[0] + x[3] * y[2]) % p,
            (x[2] * y[1] + x[3] * y[3]) % p,
        ]
    };
    let maps = g
        .generators
        .iter()
        .map(|x| {
            let m = matrix(&x.element);
            Transform::Permutation(elems.iter().map(|e| index[&mul(m, *e)]).collect())
        })
        .collect();
    let n = elems.len();
    let mut s = Scenario::new("schreier-sl2p", uniform_action(g, n, maps)?);
    s.notes.insert("atoms".into(), n.to_string());
    Ok(s)
}

pub struct SchmidtComposite;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SchmidtParams {
    #[serde(default = "default_blocks")]
    blocks: usize,
    #[serde(default = "default_block_prime")]
    block_prime: u64,
    #[serde(default = "default_mass_ratio", with = "rational::serde_str")]
    mass_ratio: Rational,
}

fn default_blocks() -> usize {
    3
}

fn default_block_prime() -> u64 {
    3
}

fn default_mass_ratio() -> Rational {
    rat(1, 8)
}

impl ScenarioBuilder for SchmidtComposite {
    fn name(&self) -> &'static str {
        "schmidt-composite"
    }

    fn build(&self, table: &toml::Table) -> Result<Scenario> {
        let p: SchmidtParams = params(self.name(), table)?;
        schmidt_composite(p.blocks, p.block_prime, &p.mass_ratio)
    }
}

/// Copies of the sl2-torus block with masses proportional to ratio^j. The two
/// matrix generators act inside every block; one involutive swap per
/// consecutive pair exchanges block j with block j+1 atom by atom.
/// Tails are the unions of blocks j.. for j >= 1, followed by the empty set.
pub fn schmidt_composite(blocks: usize, block_prime: u64, ratio: &Rational) -> Result<Scenario> {
    if !(2..=6).contains(&blocks) {
        return Err(Error::BadParams("schmidt-composite needs 2..=6 blocks".into()));
    }
    if ratio <= &Rational::zero() || ratio >= &Rational::one() {
        return Err(Error::BadParams("mass ratio must lie in (0,1)".into()));
    }
    let block = sl2_torus(block_prime)?;
    let size = block.action.atoms().unwrap().len();
    let n = size * blocks;
    let powers: Vec<Rational> = (0..blocks as i32).map(|j| num_traits::pow(ratio.clone(), j as usize)).collect();
    let total = powers.iter().fold(Rational::zero(), |a, b| a + b);
    let mut weights = Vec::with_capacity(n);
    for pw in &powers {
        let w = pw / &total / int(size as i64);
        weights.extend(std::iter::repeat(w).take(size));
    }
    let group = GroupModel::free(2 + blocks - 1);
    let mut maps = Vec::new();
    for t in block.action.maps().iter().take(4) {
        let Transform::Permutation(bp) = t else { unreachable!() };
        let perm: Vec<u32> = (0..n).map(|x| ((x / size) * size) as u32 + bp[x % size]).collect();
        maps.push(Transform::Permutation(perm));
    }
    for j in 0..blocks - 1 {
        let perm: Vec<u32> = (0..n)
            .map(|x| {
                let (b, i) = (x / size, x % size);
                let to = if b == j { j + 1 } else if b == j + 1 { j } else { b };
                (to * size + i) as u32
            })
            .collect();
        maps.push(Transform::Permutation(perm.clone()));
        maps.push(Transform::Permutation(perm));
    }
    let action = ActionModel::new(group, Space::Atoms(WeightedAtomSpace::new(weights)?), maps)?;
    let mut s = Scenario::new("schmidt-composite", action);
    for j in 1..blocks {
        s.tails.push(Set::Atoms(AtomSet::from_indices(n, j * size..n)?));
    }
    s.tails.push(Set::Atoms(AtomSet::empty(n)));
    s.notes.insert("block_atoms".into(), size.to_string());
    Ok(s)
}

/// Atoms of block j in a composite with the given block size.
pub fn block_set(n: usize, size: usize, blocks: std::ops::Range<usize>) -> Result<Set> {
    Ok(Set::Atoms(AtomSet::from_indices(n, blocks.start * size..blocks.end * size)?))
}

pub struct NastyZ;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NastyParams {
    #[serde(default = "default_truncation")]
    m: u32,
}

fn default_truncation() -> u32 {
    6
}

impl ScenarioBuilder for NastyZ {
    fn name(&self) -> &'static str {
        "nasty-z"
    }

    fn build(&self, table: &toml::Table) -> Result<Scenario> {
        let p: NastyParams = params(self.name(), table)?;
        nasty_z(p.m)
    }
}

fn quarter_power(n: u32) -> Rational {
    Rational::new(1.into(), num_traits::pow(num_bigint::BigInt::from(4), n as usize))
}

/// A_n: n intervals of length 4^-n at the left ends of [(j-1)/n, j/n).
pub fn nasty_a(n: u32) -> Result<IntervalSet> {
    let raw = (0..n as i64).map(|j| {
        let lo = rat(j, n as i64);
        let hi = &lo + quarter_power(n);
        (lo, hi)
    });
    IntervalSet::normalize(raw.collect())
}

/// Sum over n > m of n 4^-n = x^(m+1) ((m+1) - m x) / (1-x)^2 at x = 1/4.
pub fn nasty_mass_defect(m: u32) -> Rational {
    let x = rat(1, 4);
    let mm = int(m as i64);
    num_traits::pow(x.clone(), m as usize + 1) * (&mm + Rational::one() - &mm * &x)
        / ((Rational::one() - &x) * (Rational::one() - &x))
}

/// The truncated construction: B_n = A_n minus the later A_m (m <= M), B_0 the
/// rest, and f the monotone rearrangement placing B_0, B_1, ..., B_M in order.
pub fn nasty_z(m: u32) -> Result<Scenario> {
    if !(1..=10).contains(&m) {
        return Err(Error::BadParams("nasty-z truncation must lie in 1..=10".into()));
    }
    let a: Vec<IntervalSet> = (1..=m).map(nasty_a).collect::<Result<_>>()?;
    let mut later = IntervalSet::empty();
    let mut b: Vec<IntervalSet> = vec![IntervalSet::empty(); m as usize + 1];
    for n in (1..=m as usize).rev() {
        b[n] = a[n - 1].difference(&later);
        later = later.union(&a[n - 1]);
    }
    b[0] = later.complement();
    let mut pieces = Vec::new();
    let mut cursor = Rational::zero();
    for bn in &b {
        for (lo, hi) in bn.intervals() {
            pieces.push(Piece::new(lo.clone(), hi.clone(), Rational::one(), &cursor - lo));
            cursor += hi - lo;
        }
    }
    let f = AffineMap::new(pieces)?;
    let mut s = Scenario::new("nasty-z", integer_action(Space::UnitInterval, Transform::Affine(f))?);
    s.partitions = (1..=m as usize)
        .map(|n| build_partition(&Space::UnitInterval, &PartitionSpec::UniformArcs { n }))
        .collect::<Result<_>>()?;
    s.samples = vec![
        Set::Interval(IntervalSet::interval(int(0), rat(1, 2))?),
        Set::Interval(IntervalSet::interval(rat(1, 4), rat(3, 4))?),
    ];
    s.notes.insert("truncation".into(), m.to_string());
    s.notes.insert("mass_defect".into(), rational::format(&nasty_mass_defect(m)));
    for (n, bn) in b.iter().enumerate() {
        s.notes.insert(format!("measure_B{n}"), rational::format(&bn.measure()));
    }
    Ok(s)
}

/// Name-indexed scenario table.
#[derive(Clone)]
pub struct ScenarioRegistry {
    entries: BTreeMap<&'static str, Arc<dyn ScenarioBuilder>>,
}

impl Default for ScenarioRegistry {
    fn default() -> Self {
        let mut r = ScenarioRegistry { entries: BTreeMap::new() };
        r.register(Arc::new(Rotation));
        r.register(Arc::new(Odometer));
        r.register(Arc::new(Sl2Torus));
        r.register(Arc::new(SchreierSl2p));
        r.register(Arc::new(SchmidtComposite));
        r.register(Arc::new(NastyZ));
        r
    }
}

impl ScenarioRegistry {
    pub fn register(&mut self, b: Arc<dyn ScenarioBuilder>) {
        self.entries.insert(b.name(), b);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn build(&self, name: &str, params: &toml::Table) -> Result<Scenario> {
        let b = self
            .entries
            .get(name)
            .ok_or_else(|| Error::BadParams(format!("unknown scenario '{name}' (known: {})", self.names().join(", "))))?;
        b.build(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        let s = sl2_torus(5).unwrap();
        assert_eq!(s.action.atoms().unwrap().len(), 24);
        assert_eq!(s.action.maps().len(), 4);
        assert!(s.action.is_measure_preserving());
        assert_eq!(schreier_sl2p(3).unwrap().action.atoms().unwrap().len(), 24);
        assert!(sl2_torus(9).is_err());
    }

    #[test]
    fn rotation_third_has_two_pieces() {
        let s = rotation(&rat(1, 3)).unwrap();
        let Transform::Affine(m) = &s.action.maps()[0] else { panic!() };
        assert_eq!(m.pieces().len(), 2);
    }

    #[test]
    fn odometer_carries() {
        let s = odometer(3).unwrap();
        let Transform::Permutation(p) = &s.action.maps()[0] else { panic!() };
        // [0,1/8) -> [1/2,5/8): adding one to the leading digit
        assert_eq!(p[0], 4);
        assert_eq!(p[4], 2);
        let mut x = 0usize;
        for _ in 0..7 {
            x = p[x] as usize;
            assert_ne!(x, 0);
        }
        assert_eq!(p[x], 0);
    }

    #[test]
    fn nasty_pieces() {
        assert_eq!(nasty_a(3).unwrap().measure(), rat(3, 64));
        let s = nasty_z(6).unwrap();
        assert!(s.action.is_measure_preserving());
        assert_eq!(s.partitions.len(), 6);
        let total: Rational = (1..=40).map(|n| int(n) * quarter_power(n as u32)).sum();
        assert_eq!(total, int(4) / int(9) - nasty_mass_defect(40));
        assert_eq!(nasty_mass_defect(0), rat(4, 9));
    }

    #[test]
    fn schmidt_layout() {
        let s = schmidt_composite(3, 3, &rat(1, 8)).unwrap();
        let w = s.action.atoms().unwrap();
        assert_eq!(w.len(), 24);
        assert_eq!(s.action.measure(&s.tails[0]).unwrap(), rat(9, 73));
        assert_eq!(s.action.measure(&s.tails[1]).unwrap(), rat(1, 73));
        assert!(s.tails[2].is_empty());
        assert!(!s.action.is_measure_preserving());
    }

    #[test]
    fn deterministic_and_strict_params() {
        let r = ScenarioRegistry::default();
        let mut t = toml::Table::new();
        t.insert("p".into(), toml::Value::Integer(3));
        let a = r.build("sl2-torus", &t).unwrap().action.to_json();
        let b = r.build("sl2-torus", &t).unwrap().action.to_json();
        assert_eq!(a, b);
        t.insert("extra".into(), toml::Value::Integer(1));
        assert!(matches!(r.build("sl2-torus", &t), Err(Error::BadParams(_))));
        assert!(r.build("nope", &toml::Table::new()).is_err());
    }
}
