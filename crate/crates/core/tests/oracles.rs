//! Frozen values on small models. Each is recomputed by a brute-force routine
//! from tests/common before the library result is compared against it.

mod common;

use common::*;
use measex::approx::{approximating_space, build_partition, hop_edges, measure_ratio_q, PartitionSpec};
use measex::expansion::cheeger::cheeger_exact;
use measex::expansion::engine::{Exhaustive, LocalSearch, StrategyRegistry};
use measex::expansion::{domain_profile, expansion_profile, Granularity, MeasuredMetricSpace, Neighborhood, SearchOptions};
use measex::folner::{maximal_folner, verify_domain};
use measex::measure::{AtomSet, Set};
use measex::rational::{rat, Rational};
use measex::scenarios;

fn opts() -> SearchOptions {
    SearchOptions::default()
}

fn atoms(n: usize, idx: &[usize]) -> Set {
    Set::Atoms(AtomSet::from_indices(n, idx.iter().copied()).unwrap())
}

fn mask_of(idx: &[usize]) -> u64 {
    idx.iter().fold(0, |m, &i| m | 1 << i)
}

/// Heaviest A inside region with nu(A) <= nu(Y)/2 and
/// nu((N(A) cap Y) minus (A union Z)) <= eps nu(A), ties to the lex-least list.
fn naive_folner(w: &[Rational], reach: &[u64], y: u64, z: u64, eps: &Rational) -> (Rational, Vec<usize>) {
    let region = y & !z;
    let half = mass(w, y) * half();
    let mut best = (Rational::from_integer(0.into()), Vec::new());
    for a in 1u64..(1 << w.len()) {
        if a & !region != 0 {
            continue;
        }
        let m = mass(w, a);
        if m > half || mass(w, image(reach, a) & y & !(a | z)) > eps * &m {
            continue;
        }
        let cand = (m, cells(a));
        if cand.0 > best.0 || (cand.0 == best.0 && cand.1 < best.1) {
            best = cand;
        }
    }
    best
}

#[test]
fn cycle8_profile_points() {
    let z8 = cyclic(8);
    let p = expansion_profile(&z8, &[rat(1, 4), half()], &[1, 2], &Exhaustive, &Granularity::Atoms, &opts()).unwrap();
    let frozen = [
        (half(), 1, rat(1, 2), vec![0, 1, 2, 3]),
        (rat(1, 4), 1, rat(1, 2), vec![0, 1, 2, 3]),
        (rat(1, 4), 2, rat(1, 1), vec![0, 1, 2, 3]),
        (half(), 2, rat(1, 1), vec![0, 1, 2, 3]),
    ];
    for (alpha, k, c, wit) in frozen {
        let (oc, ow) = naive_profile_point(&z8, &alpha, k).unwrap();
        assert_eq!((&oc, &ow), (&c, &wit), "oracle at alpha {alpha} k {k}");
        let e = p.get(&alpha, k).unwrap();
        assert_eq!((&e.c_star, &e.witness), (&c, &wit), "library at alpha {alpha} k {k}");
    }
}

#[test]
fn truncated_cycle_domain() {
    let z8 = cyclic(8);
    let y = atoms(8, &[0, 1, 2, 3, 4, 5]);
    let p = domain_profile(&z8, &y, &[half()], &[1], &Exhaustive, &Granularity::Atoms, &opts()).unwrap();
    let w = uniform(8);
    let reach = ball_reach(&generator_perms(&z8), 8, 1);
    // admissible: alpha nu(Y) <= nu(A) <= nu(Y)/2, i.e. exactly 3/8
    let (oc, ow) = naive_min_ratio(&w, &reach, 0b111111, &rat(3, 8), &rat(3, 8)).unwrap();
    assert_eq!((oc.clone(), ow.clone()), (rat(1, 3), vec![0, 1, 2]));
    let e = p.get(&half(), 1).unwrap();
    assert_eq!((e.c_star.clone(), e.witness.clone()), (oc, ow));
}

#[test]
fn cycle8_domain_verification() {
    let z8 = cyclic(8);
    let full = z8.space().full_set();
    let reach = ball_reach(&generator_perms(&z8), 8, 1);
    let (oc, _) = naive_min_ratio(&uniform(8), &reach, 0xff, &rat(1, 8), &half()).unwrap();
    assert_eq!(oc, rat(1, 2));
    for (c, holds) in [(rat(2, 5), true), (rat(1, 2), false), (rat(3, 5), false)] {
        let r = verify_domain(&z8, &full, &c, &Neighborhood::Ball(1), &Granularity::Atoms, &opts()).unwrap();
        assert_eq!(r.holds, holds, "c = {c}");
        assert_eq!(r.holds, oc > c);
        assert_eq!(r.c_star(), Some(oc.clone()));
    }
}

#[test]
fn cycle8_maximal_folner() {
    let z8 = cyclic(8);
    let w = uniform(8);
    let reach = ball_reach(&generator_perms(&z8), 8, 1);
    let y = z8.space().full_set();
    let frozen = [
        (0u64, rat(1, 2), rat(1, 2), vec![0, 1, 2, 3]),
        (0, rat(1, 4), rat(0, 1), vec![]),
        (mask_of(&[4]), rat(1, 3), rat(1, 2), vec![0, 1, 2, 3]),
        (mask_of(&[0, 4]), rat(0, 1), rat(3, 8), vec![1, 2, 3]),
    ];
    for (z, eps, m, f) in frozen {
        let (om, of) = naive_folner(&w, &reach, 0xff, z, &eps);
        assert_eq!((&om, &of), (&m, &f), "oracle z {z:#b} eps {eps}");
        let cert = maximal_folner(&z8, &y, &atoms(8, &cells(z)), &eps, &Neighborhood::Ball(1), &Granularity::Atoms, &opts()).unwrap();
        assert_eq!((&cert.measure, &cert.f_cells), (&m, &f), "library z {z:#b} eps {eps}");
        assert!(cert.maximal);
    }
}

#[test]
fn circulant_cheeger() {
    for (n, frozen) in [(8usize, rat(1, 1)), (10, rat(4, 5)), (12, rat(2, 3))] {
        let edges: Vec<(usize, usize)> = (0..n).flat_map(|i| [(i, (i + 1) % n), (i, (i + 2) % n)]).collect();
        let oracle = naive_cheeger(n, &adjacency(n, &edges)).unwrap();
        assert_eq!(oracle, frozen, "C{n}(1,2) oracle");
        let space = MeasuredMetricSpace::from_graph(n, &edges).unwrap();
        let lib = cheeger_exact(&space, &Exhaustive, &opts()).unwrap();
        assert_eq!(lib.value, Some(frozen.clone()));
        // local search only ever reports an attained ratio
        let ls = cheeger_exact(&space, &LocalSearch, &opts()).unwrap();
        assert!(ls.value.unwrap() >= frozen);
    }
}

#[test]
fn torus_profile_by_counting() {
    let s = scenarios::sl2_torus(3).unwrap();
    let p = expansion_profile(&s.action, &[rat(1, 8), rat(1, 4), half()], &[1], &Exhaustive, &Granularity::Atoms, &opts()).unwrap();
    for (alpha, frozen) in [(rat(1, 8), rat(2, 3)), (rat(1, 4), rat(2, 3)), (half(), rat(3, 4))] {
        let (oc, ow) = naive_profile_point(&s.action, &alpha, 1).unwrap();
        assert_eq!(oc, frozen, "oracle alpha {alpha}");
        let e = p.get(&alpha, 1).unwrap();
        assert_eq!((&e.c_star, &e.witness), (&oc, &ow));
    }
}

#[test]
fn measure_ratio_of_blocks() {
    let w = vec![rat(1, 10), rat(1, 10), rat(4, 10), rat(2, 10), rat(2, 10)];
    let action = perm_action(w.clone(), &[vec![1, 0, 2, 4, 3]]);
    let p = build_partition(action.space(), &PartitionSpec::Atoms).unwrap();
    let oracle = w.iter().max().unwrap() / w.iter().min().unwrap();
    assert_eq!(oracle, rat(4, 1));
    assert_eq!(measure_ratio_q(action.space(), &p).unwrap(), oracle);
    let paired = build_partition(action.space(), &PartitionSpec::AtomBlocks { assignment: vec![0, 0, 1, 2, 2] }).unwrap();
    assert_eq!(measure_ratio_q(action.space(), &paired).unwrap(), rat(2, 1));
}

#[test]
fn rotation_arcs_give_cycles() {
    for (angle, n) in [(rat(1, 3), 3usize), (rat(1, 8), 8), (rat(1, 16), 8)] {
        let s = scenarios::rotation(&angle).unwrap();
        let p = build_partition(s.action.space(), &PartitionSpec::UniformArcs { n }).unwrap();
        let a = approximating_space(&s.action, &p, 1).unwrap();
        let mut got: Vec<(usize, usize)> = hop_edges(&a.space).into_iter().map(|(i, j, _)| (i, j)).collect();
        let mut want: Vec<(usize, usize)> = cycle_edges(n).into_iter().map(|(i, j)| (i.min(j), i.max(j))).collect();
        got.sort();
        want.sort();
        want.dedup();
        assert_eq!(got, want, "rotation {angle} on {n} arcs");
        let frozen = rat(2, (n / 2) as i64);
        assert_eq!(naive_cheeger(n, &adjacency(n, &want)).unwrap(), frozen);
        assert_eq!(cheeger_exact(&a.space, &Exhaustive, &opts()).unwrap().value, Some(frozen));
    }
}

#[test]
fn composite_and_truncation_masses() {
    let s = scenarios::schmidt_composite(3, 3, &rat(1, 8)).unwrap();
    let tails: Vec<Rational> = s.tails.iter().map(|t| s.action.measure(t).unwrap()).collect();
    assert_eq!(tails, vec![rat(9, 73), rat(1, 73), rat(0, 1)]);
    // block j has 8 atoms of total mass 8^(2-j)/73
    let w = s.action.atoms().unwrap().weights().to_vec();
    assert_eq!(mass(&w, 0xff), rat(64, 73));
    assert_eq!(mass(&w, 0xff << 8), rat(8, 73));
    assert_eq!(mass(&w, 0xff << 16), rat(1, 73));
    assert_eq!(scenarios::nasty_mass_defect(6), rat(11, 18432));
}

#[test]
fn registry_names() {
    let names = StrategyRegistry::default().names();
    assert!(names.contains(&"exact") && names.contains(&"local-search"));
    assert!(StrategyRegistry::default().get("annealing").is_err());
}
