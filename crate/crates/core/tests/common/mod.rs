//! Naive reference computations and model generators shared by the
//! integration tests. Nothing here calls the search engine: neighbourhoods are
//! grown one generator step at a time and every subset is visited.
#![allow(dead_code)]

use measex::action::{ActionModel, Transform};
use measex::group::GroupModel;
use measex::measure::{Space, WeightedAtomSpace};
use measex::rational::{int, Rational};
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn inverse(p: &[u32]) -> Vec<u32> {
    let mut q = vec![0u32; p.len()];
    for (i, &x) in p.iter().enumerate() {
        q[x as usize] = i as u32;
    }
    q
}

/// Free group of rank perms.len() acting by the given permutations.
pub fn perm_action(weights: Vec<Rational>, perms: &[Vec<u32>]) -> ActionModel {
    let mut maps = Vec::new();
    for p in perms {
        maps.push(Transform::Permutation(p.clone()));
        maps.push(Transform::Permutation(inverse(p)));
    }
    ActionModel::new(
        GroupModel::free(perms.len()),
        Space::Atoms(WeightedAtomSpace::new(weights).unwrap()),
        maps,
    )
    .unwrap()
}

pub fn uniform(n: usize) -> Vec<Rational> {
    vec![Rational::new(1.into(), (n as i64).into()); n]
}

pub fn rotation_perm(n: usize, step: usize) -> Vec<u32> {
    (0..n).map(|i| ((i + step) % n) as u32).collect()
}

/// Z/n by +1.
pub fn cyclic(n: usize) -> ActionModel {
    perm_action(uniform(n), &[rotation_perm(n, 1)])
}

/// Random weights with a few distinct values, normalised to total 1.
pub fn random_weights(r: &mut ChaCha8Rng, n: usize, classes: usize) -> Vec<Rational> {
    let values: Vec<i64> = (0..classes).map(|_| r.gen_range(1..=6)).collect();
    let raw: Vec<i64> = (0..n).map(|_| values[r.gen_range(0..classes)]).collect();
    let total: i64 = raw.iter().sum();
    raw.into_iter().map(|x| Rational::new(x.into(), total.into())).collect()
}

/// Permutation mapping every atom to one of equal weight.
pub fn weight_preserving_perm(r: &mut ChaCha8Rng, weights: &[Rational]) -> Vec<u32> {
    let n = weights.len();
    let mut p: Vec<u32> = (0..n as u32).collect();
    let mut classes: Vec<Rational> = weights.to_vec();
    classes.sort();
    classes.dedup();
    for c in classes {
        let idx: Vec<usize> = (0..n).filter(|&i| weights[i] == c).collect();
        let mut img = idx.clone();
        img.shuffle(r);
        for (a, b) in idx.iter().zip(img) {
            p[*a] = b as u32;
        }
    }
    p
}

pub fn random_perm(r: &mut ChaCha8Rng, n: usize) -> Vec<u32> {
    let mut p: Vec<u32> = (0..n as u32).collect();
    p.shuffle(r);
    p
}

/// Measure-preserving action with 1 or 2 free generators on n atoms.
pub fn random_mp_action(r: &mut ChaCha8Rng, n: usize) -> ActionModel {
    let classes = r.gen_range(1..=3);
    let w = random_weights(r, n, classes);
    let gens = r.gen_range(1..=2);
    let perms: Vec<Vec<u32>> = (0..gens).map(|_| weight_preserving_perm(r, &w)).collect();
    perm_action(w, &perms)
}

/// Action that need not preserve the weights.
pub fn random_action(r: &mut ChaCha8Rng, n: usize) -> ActionModel {
    let classes = r.gen_range(1..=3);
    let w = random_weights(r, n, classes);
    let gens = r.gen_range(1..=2);
    let perms: Vec<Vec<u32>> = (0..gens).map(|_| random_perm(r, n)).collect();
    perm_action(w, &perms)
}

/// Fixed corpus of 50 models on at most 12 atoms: cycles, the 8-point torus
/// action, random measure-preserving and random non-preserving actions.
pub fn corpus() -> Vec<ActionModel> {
    let mut out: Vec<ActionModel> = (4..=12).map(cyclic).collect();
    out.push(measex::scenarios::sl2_torus(3).unwrap().action);
    let mut r = rng(0x5eed);
    while out.len() < 40 {
        let n = r.gen_range(4..=12);
        out.push(random_mp_action(&mut r, n));
    }
    while out.len() < 50 {
        let n = r.gen_range(4..=10);
        out.push(random_action(&mut r, n));
    }
    out
}

/// Atom permutations of an action's generators.
pub fn generator_perms(action: &ActionModel) -> Vec<Vec<u32>> {
    action
        .maps()
        .iter()
        .map(|t| match t {
            Transform::Permutation(p) => p.clone(),
            _ => panic!("atom model expected"),
        })
        .collect()
}

/// For each atom x, the mask of atoms reached by words of length <= k,
/// i.e. the singleton neighbourhoods B_k x, grown one letter at a time.
pub fn ball_reach(gens: &[Vec<u32>], n: usize, k: u32) -> Vec<u64> {
    let step: Vec<u64> = (0..n).map(|x| gens.iter().fold(1u64 << x, |m, g| m | 1 << g[x])).collect();
    (0..n)
        .map(|x| {
            let mut m = 1u64 << x;
            for _ in 0..k {
                let next = image(&step, m);
                if next == m {
                    break;
                }
                m = next;
            }
            m
        })
        .collect()
}

pub fn image(reach: &[u64], mask: u64) -> u64 {
    (0..reach.len()).filter(|&i| mask >> i & 1 == 1).fold(0, |m, i| m | reach[i])
}

pub fn mass(w: &[Rational], mask: u64) -> Rational {
    (0..w.len()).filter(|&i| mask >> i & 1 == 1).fold(Rational::zero(), |s, i| s + &w[i])
}

pub fn cells(mask: u64) -> Vec<usize> {
    (0..64).filter(|&i| mask >> i & 1 == 1).collect()
}

/// Minimum of nu(N(A) cap Y)/nu(A) - 1 over A inside Y with lo <= nu(A) <= hi,
/// ties to the lexicographically smallest index list. Every subset is visited.
pub fn naive_min_ratio(
    w: &[Rational],
    reach: &[u64],
    y: u64,
    lo: &Rational,
    hi: &Rational,
) -> Option<(Rational, Vec<usize>)> {
    let n = w.len();
    let mut best: Option<(Rational, Vec<usize>)> = None;
    for mask in 1u64..(1 << n) {
        if mask & !y != 0 {
            continue;
        }
        let m = mass(w, mask);
        if &m < lo || &m > hi {
            continue;
        }
        let c = mass(w, image(reach, mask) & y) / &m - Rational::one();
        let cand = (c, cells(mask));
        let better = match &best {
            None => true,
            Some(b) => cand.0 < b.0 || (cand.0 == b.0 && cand.1 < b.1),
        };
        if better {
            best = Some(cand);
        }
    }
    best
}

/// c_star(alpha, k) of an atom action over the whole space.
pub fn naive_profile_point(action: &ActionModel, alpha: &Rational, k: u32) -> Option<(Rational, Vec<usize>)> {
    let w = action.atoms().unwrap().weights().to_vec();
    let n = w.len();
    let r = ball_reach(&generator_perms(action), n, k);
    let half = Rational::new(1.into(), 2.into());
    naive_min_ratio(&w, &r, (1u64 << n) - 1, alpha, &half)
}

/// Adjacency masks from an undirected edge list.
pub fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<u64> {
    let mut adj = vec![0u64; n];
    for &(a, b) in edges {
        adj[a] |= 1 << b;
        adj[b] |= 1 << a;
    }
    adj
}

/// Vertex Cheeger constant min |N(A) minus A|/|A| over 0 < |A| <= n/2.
pub fn naive_cheeger(n: usize, adj: &[u64]) -> Option<Rational> {
    let mut best: Option<Rational> = None;
    for mask in 1u64..(1 << n) {
        let size = mask.count_ones() as usize;
        if 2 * size > n {
            continue;
        }
        let nb = (0..n).filter(|&i| mask >> i & 1 == 1).fold(0u64, |m, i| m | adj[i]) & !mask;
        let r = Rational::new((nb.count_ones() as i64).into(), (size as i64).into());
        if best.as_ref().map_or(true, |b| &r < b) {
            best = Some(r);
        }
    }
    best
}

pub fn cycle_edges(n: usize) -> Vec<(usize, usize)> {
    (0..n).map(|i| (i, (i + 1) % n)).collect()
}

pub fn complete_edges(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

pub fn half() -> Rational {
    Rational::new(1.into(), 2.into())
}

pub fn frac(p: i64, q: i64) -> Rational {
    int(p) / int(q)
}
