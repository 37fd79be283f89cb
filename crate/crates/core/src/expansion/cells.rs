//! Cell systems: the finite data every subset search runs on. Candidate sets
//! are unions of cells; neighbourhoods are measured on a fine refinement.

use crate::action::{ActionModel, Transform};
use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::measure::{AtomSet, IntervalSet, Set, Space};
use crate::rational::{self, Rational};
use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

/// Which neighbourhood N(A) the system measures.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Neighborhood {
    /// B_k . A
    Ball(u32),
    /// A united with S . A
    Elements(Vec<GroupElement>),
}

impl Neighborhood {
    pub fn describe(&self) -> String {
        match self {
            Neighborhood::Ball(k) => format!("B_{k}"),
            Neighborhood::Elements(s) => format!("S ({} elements)", s.len()),
        }
    }
}

/// Integer-weighted cells over a fine partition of a region.
#[derive(Clone, Debug)]
pub struct CellSystem {
    pub cell_weight: Vec<u64>,
    pub fine_weight: Vec<u64>,
    /// Fine atoms covered by N(cell) inside the region.
    pub reach: Vec<Vec<u32>>,
    /// Fine atoms making up the cell.
    pub own: Vec<Vec<u32>>,
    /// Index of each cell in the caller's cell list.
    pub labels: Vec<usize>,
    /// Measures are integers over this denominator.
    pub denom: BigInt,
    pub total: u64,
}

impl CellSystem {
    /// Builds a system from rational fine weights and per-cell fine lists.
    pub fn from_parts(
        fine: &[Rational],
        own: Vec<Vec<u32>>,
        reach: Vec<Vec<u32>>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        let (fine_weight, denom) = rational::integer_scale(fine)?;
        let cell_weight = own
            .iter()
            .map(|o| o.iter().map(|&f| fine_weight[f as usize]).sum())
            .collect();
        let total = fine_weight.iter().sum();
        let mut reach = reach;
        for r in &mut reach {
            r.sort_unstable();
            r.dedup();
        }
        Ok(CellSystem { cell_weight, fine_weight, reach, own, labels, denom, total })
    }

    pub fn len(&self) -> usize {
        self.cell_weight.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cell_weight.is_empty()
    }

    pub fn to_rational(&self, x: u64) -> Rational {
        Rational::new(BigInt::from(x), self.denom.clone())
    }

    /// Least integer weight w with w >= r (r a measure).
    pub fn ceil_scaled(&self, r: &Rational) -> u64 {
        rational::ceil_u64(&(r * Rational::from_integer(self.denom.clone())))
    }

    pub fn floor_scaled(&self, r: &Rational) -> u64 {
        if r < &Rational::zero() {
            return 0;
        }
        rational::floor_u64(&(r * Rational::from_integer(self.denom.clone())))
    }

    /// Cells adjacent to a cell: those owning a fine atom in its reach.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let nf = self.fine_weight.len();
        let mut owner = vec![usize::MAX; nf];
        for (c, o) in self.own.iter().enumerate() {
            for &f in o {
                owner[f as usize] = c;
            }
        }
        self.reach
            .iter()
            .enumerate()
            .map(|(c, r)| {
                let mut v: Vec<usize> = r
                    .iter()
                    .map(|&f| owner[f as usize])
                    .filter(|&o| o != usize::MAX && o != c)
                    .collect();
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect()
    }

    /// Measure (rational) of the neighbourhood of a cell set inside the region.
    pub fn covered_of(&self, cells: &[usize]) -> u64 {
        let mut seen = vec![false; self.fine_weight.len()];
        let mut total = 0;
        for &c in cells {
            for &f in &self.reach[c] {
                if !std::mem::replace(&mut seen[f as usize], true) {
                    total += self.fine_weight[f as usize];
                }
            }
        }
        total
    }

    pub fn weight_of(&self, cells: &[usize]) -> u64 {
        cells.iter().map(|&c| self.cell_weight[c]).sum()
    }
}

/// Granularity of candidate sets: single atoms or the cells of a partition.
#[derive(Clone, Debug)]
pub enum Granularity {
    Atoms,
    Cells(Vec<Set>),
}

impl Granularity {
    pub fn cells(&self, space: &Space) -> Vec<Set> {
        match (self, space) {
            (Granularity::Cells(c), _) => c.clone(),
            (Granularity::Atoms, Space::Atoms(w)) => (0..w.len())
                .map(|i| Set::Atoms(AtomSet::from_indices(w.len(), [i]).unwrap()))
                .collect(),
            (Granularity::Atoms, Space::UnitInterval) => vec![Set::Interval(IntervalSet::full())],
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Granularity::Atoms => "atoms".into(),
            Granularity::Cells(c) => format!("partition of {} cells", c.len()),
        }
    }
}

fn transforms_for(action: &ActionModel, nbhd: &Neighborhood) -> Result<Vec<Transform>> {
    match nbhd {
        Neighborhood::Ball(k) => Ok(action.transform_ball(*k)?.into_iter().map(|(t, _)| t).collect()),
        Neighborhood::Elements(s) => {
            let mut out = vec![Transform::identity_for(action.space())];
            for g in s {
                let t = action.transform(g)?;
                if !out.contains(&t) {
                    out.push(t);
                }
            }
            Ok(out)
        }
    }
}

/// Cell system of an action on a region Y: candidate cells are the
/// granularity cells intersected with Y, neighbourhoods are cut back to Y.
pub fn action_system(
    action: &ActionModel,
    granularity: &Granularity,
    region: &Set,
    nbhd: &Neighborhood,
) -> Result<CellSystem> {
    action.space().check(region)?;
    let cells = granularity.cells(action.space());
    match (action.space(), region) {
        (Space::Atoms(w), Set::Atoms(reg)) => {
            let n = w.len();
            let mut fine_index = vec![u32::MAX; n];
            let mut fine = Vec::new();
            for (k, i) in reg.indices().enumerate() {
                fine_index[i] = k as u32;
                fine.push(w.weight(i).clone());
            }
            let perms: Option<Vec<Transform>> = match nbhd {
                Neighborhood::Ball(_) => None,
                Neighborhood::Elements(_) => Some(transforms_for(action, nbhd)?),
            };
            let mut own = Vec::new();
            let mut reach = Vec::new();
            let mut labels = Vec::new();
            for (ci, cell) in cells.iter().enumerate() {
                let cell = cell.as_atoms().ok_or(Error::MixedSpaceKinds)?;
                let inside: Vec<usize> = cell.indices().filter(|&i| reg.contains(i)).collect();
                if inside.is_empty() {
                    continue;
                }
                let mut r = Vec::new();
                match (&perms, nbhd) {
                    (None, Neighborhood::Ball(k)) => {
                        let d = action.schreier_distances(&inside, *k)?;
                        for (i, x) in d.iter().enumerate() {
                            if x.is_some() && fine_index[i] != u32::MAX {
                                r.push(fine_index[i]);
                            }
                        }
                    }
                    (Some(ts), _) => {
                        for t in ts {
                            let Transform::Permutation(p) = t else { unreachable!() };
                            for &i in &inside {
                                let j = p[i] as usize;
                                if fine_index[j] != u32::MAX {
                                    r.push(fine_index[j]);
                                }
                            }
                        }
                    }
                    _ => unreachable!(),
                }
                own.push(inside.iter().map(|&i| fine_index[i]).collect());
                reach.push(r);
                labels.push(ci);
            }
            CellSystem::from_parts(&fine, own, reach, labels)
        }
        (Space::UnitInterval, Set::Interval(reg)) => {
            let ts = transforms_for(action, nbhd)?;
            let mut pieces: Vec<(usize, IntervalSet)> = Vec::new();
            for (ci, cell) in cells.iter().enumerate() {
                let cell = cell.as_intervals().ok_or(Error::MixedSpaceKinds)?;
                let c = cell.intersect(reg);
                if !c.is_empty() {
                    pieces.push((ci, c));
                }
            }
            let mut images = Vec::with_capacity(pieces.len());
            for (_, c) in &pieces {
                let mut img = IntervalSet::empty();
                for t in &ts {
                    let Transform::Affine(m) = t else { unreachable!() };
                    img = img.union(&m.apply(c));
                }
                images.push(img.intersect(reg));
            }
            let mut points: Vec<Rational> = Vec::new();
            for s in pieces.iter().map(|p| &p.1).chain(images.iter()).chain(std::iter::once(reg)) {
                for (a, b) in s.intervals() {
                    points.push(a.clone());
                    points.push(b.clone());
                }
            }
            points.sort();
            points.dedup();
            let mut elem: Vec<(Rational, Rational)> = Vec::new();
            for w in points.windows(2) {
                if covers(reg, &w[0], &w[1]) {
                    elem.push((w[0].clone(), w[1].clone()));
                }
            }
            let fine: Vec<Rational> = elem.iter().map(|(a, b)| b - a).collect();
            let list = |s: &IntervalSet| -> Vec<u32> {
                elem.iter()
                    .enumerate()
                    .filter(|(_, (a, b))| covers(s, a, b))
                    .map(|(i, _)| i as u32)
                    .collect()
            };
            let own = pieces.iter().map(|(_, c)| list(c)).collect();
            let reach = images.iter().map(list).collect();
            let labels = pieces.iter().map(|p| p.0).collect();
            CellSystem::from_parts(&fine, own, reach, labels)
        }
        _ => Err(Error::MixedSpaceKinds),
    }
}

/// Whether [a,b) lies inside s; [a,b) never straddles a boundary of s here.
fn covers(s: &IntervalSet, a: &Rational, b: &Rational) -> bool {
    let iv = s.intervals();
    let i = iv.partition_point(|(_, hi)| hi <= a);
    i < iv.len() && &iv[i].0 <= a && b <= &iv[i].1
}

/// Converts system cell indices back to a set in the action's space.
pub fn cells_to_set(space: &Space, granularity: &Granularity, region: &Set, cells: &[usize]) -> Result<Set> {
    let all = granularity.cells(space);
    let mut out = space.empty_set();
    for &c in cells {
        out = out.union(&all[c])?;
    }
    out.intersect(region)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::AffineMap;
    use crate::group::GroupModel;
    use crate::measure::WeightedAtomSpace;
    use crate::rational::rat;

    #[test]
    fn interval_system_splits_at_images() {
        let f = AffineMap::rotation(&rat(1, 8)).unwrap();
        let a = ActionModel::new(
            GroupModel::integer_lattice(1),
            Space::UnitInterval,
            vec![Transform::Affine(f.clone()), Transform::Affine(f.inverse())],
        )
        .unwrap();
        let cells: Vec<Set> = (0..4)
            .map(|i| Set::Interval(IntervalSet::interval(rat(i, 4), rat(i + 1, 4)).unwrap()))
            .collect();
        let sys = action_system(
            &a,
            &Granularity::Cells(cells),
            &Set::Interval(IntervalSet::full()),
            &Neighborhood::Ball(1),
        )
        .unwrap();
        assert_eq!(sys.len(), 4);
        assert_eq!(sys.fine_weight.len(), 8);
        let cov = sys.covered_of(&[0]);
        assert_eq!(sys.to_rational(cov), rat(1, 2));
    }

    #[test]
    fn atom_system_restricts_to_region() {
        let p: Vec<u32> = (0..8).map(|i| (i + 1) % 8).collect();
        let t = Transform::Permutation(p);
        let a = ActionModel::new(
            GroupModel::finite_cyclic(8).unwrap(),
            Space::Atoms(WeightedAtomSpace::uniform(8).unwrap()),
            vec![t.clone(), t.inverse()],
        )
        .unwrap();
        let y = Set::Atoms(AtomSet::from_indices(8, 0..6).unwrap());
        let sys = action_system(&a, &Granularity::Atoms, &y, &Neighborhood::Ball(1)).unwrap();
        assert_eq!(sys.len(), 6);
        assert_eq!(sys.to_rational(sys.covered_of(&[1, 2, 3])), rat(5, 8));
        assert_eq!(sys.to_rational(sys.covered_of(&[0])), rat(1, 4));
    }
}
