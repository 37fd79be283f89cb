//! Subset search over cell systems. The exact strategy walks all 2^n cell
//! unions in Gray-code order with incremental coverage counts; local search
//! improves seeded sets by single-cell moves.

use super::cells::CellSystem;
use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::Arc;

pub const DEFAULT_MAX_EXACT_CELLS: usize = 26;

/// Inclusive weight window for candidate sets; empty sets are never candidates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bounds {
    pub lower: u64,
    pub upper: u64,
}

/// A cell union with its weight and neighbourhood weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub cells: Vec<usize>,
    pub covered: u64,
    pub weight: u64,
}

impl Candidate {
    /// Orders by covered/weight, then lexicographically by sorted cell list.
    pub fn better_than(&self, other: &Candidate) -> bool {
        match ratio_cmp(self.covered, self.weight, other.covered, other.weight) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => self.cells < other.cells,
        }
    }
}

pub fn ratio_cmp(c1: u64, w1: u64, c2: u64, w2: u64) -> Ordering {
    (c1 as u128 * w2 as u128).cmp(&(c2 as u128 * w1 as u128))
}

/// Lexicographic order of the sorted index lists encoded by two masks.
pub fn mask_lex_less(a: u64, b: u64) -> bool {
    if a == b {
        return false;
    }
    let d = (a ^ b).trailing_zeros();
    let above = |m: u64| if d >= 63 { 0 } else { m >> (d + 1) };
    if (a >> d) & 1 == 1 {
        above(b) != 0
    } else {
        above(a) == 0
    }
}

pub fn mask_cells(mask: u64) -> Vec<usize> {
    (0..64).filter(|i| (mask >> i) & 1 == 1).collect()
}

/// Receives every cell union visited by [`enumerate`].
pub trait Visitor: Send + Sized {
    fn visit(&mut self, mask: u64, weight: u64, covered: u64);
    fn merge(&mut self, other: Self);
}

struct Walker<'a> {
    sys: &'a CellSystem,
    counts: Vec<u32>,
    weight: u64,
    covered: u64,
}

impl<'a> Walker<'a> {
    fn new(sys: &'a CellSystem) -> Self {
        Walker { sys, counts: vec![0; sys.fine_weight.len()], weight: 0, covered: 0 }
    }

    #[inline]
    fn add(&mut self, c: usize) {
        self.weight += self.sys.cell_weight[c];
        for &f in &self.sys.reach[c] {
            let f = f as usize;
            if self.counts[f] == 0 {
                self.covered += self.sys.fine_weight[f];
            }
            self.counts[f] += 1;
        }
    }

    #[inline]
    fn remove(&mut self, c: usize) {
        self.weight -= self.sys.cell_weight[c];
        for &f in &self.sys.reach[c] {
            let f = f as usize;
            self.counts[f] -= 1;
            if self.counts[f] == 0 {
                self.covered -= self.sys.fine_weight[f];
            }
        }
    }
}

/// Visits every cell union (the empty one included) exactly once.
pub fn enumerate<V: Visitor>(sys: &CellSystem, make: impl Fn() -> V + Sync) -> V {
    let n = sys.len();
    assert!(n < 63, "exact enumeration needs fewer than 63 cells");
    let high = n.saturating_sub(14).min(8);
    let low = n - high;
    let run = |prefix: u64| {
        let mut v = make();
        let mut w = Walker::new(sys);
        for b in 0..high {
            if (prefix >> b) & 1 == 1 {
                w.add(low + b);
            }
        }
        let base = prefix << low;
        let mut gray = 0u64;
        v.visit(base, w.weight, w.covered);
        for i in 1u64..(1u64 << low) {
            let bit = i.trailing_zeros() as usize;
            gray ^= 1 << bit;
            if (gray >> bit) & 1 == 1 {
                w.add(bit);
            } else {
                w.remove(bit);
            }
            v.visit(base | gray, w.weight, w.covered);
        }
        v
    };
    if high == 0 {
        return run(0);
    }
    let parts: Vec<V> = (0..(1u64 << high)).into_par_iter().map(run).collect();
    let mut it = parts.into_iter();
    let mut acc = it.next().expect("at least one chunk");
    for p in it {
        acc.merge(p);
    }
    acc
}

#[derive(Clone, Copy)]
struct Best {
    mask: u64,
    covered: u64,
    weight: u64,
}

fn best_better(a: &Best, b: &Best) -> bool {
    match ratio_cmp(a.covered, a.weight, b.covered, b.weight) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => mask_lex_less(a.mask, b.mask),
    }
}

struct MinRatio<'a> {
    bounds: &'a [Bounds],
    best: Vec<Option<Best>>,
}

impl Visitor for MinRatio<'_> {
    #[inline]
    fn visit(&mut self, mask: u64, weight: u64, covered: u64) {
        if weight == 0 {
            return;
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if weight < b.lower || weight > b.upper {
                continue;
            }
            let cand = Best { mask, covered, weight };
            match &self.best[j] {
                Some(cur) if !best_better(&cand, cur) => {}
                _ => self.best[j] = Some(cand),
            }
        }
    }

    fn merge(&mut self, other: Self) {
        for (mine, theirs) in self.best.iter_mut().zip(other.best) {
            if let Some(t) = theirs {
                match mine {
                    Some(m) if !best_better(&t, m) => {}
                    _ => *mine = Some(t),
                }
            }
        }
    }
}

/// Exact minimum of covered/weight over all cell unions in each window.
pub fn exact_min_ratio(sys: &CellSystem, bounds: &[Bounds]) -> Vec<Option<Candidate>> {
    let v = enumerate(sys, || MinRatio { bounds, best: vec![None; bounds.len()] });
    v.best
        .into_iter()
        .map(|b| {
            b.map(|b| Candidate { cells: mask_cells(b.mask), covered: b.covered, weight: b.weight })
        })
        .collect()
}

struct MaxFolner {
    upper: u64,
    num: u128,
    den: u128,
    best: (u64, u64, u64),
}

impl Visitor for MaxFolner {
    #[inline]
    fn visit(&mut self, mask: u64, weight: u64, covered: u64) {
        if weight > self.upper {
            return;
        }
        // covered - weight <= eps * weight
        if (covered as u128) * self.den > (self.den + self.num) * weight as u128 {
            return;
        }
        let (bm, bw, _) = self.best;
        if weight > bw || (weight == bw && mask_lex_less(mask, bm)) {
            self.best = (mask, weight, covered);
        }
    }

    fn merge(&mut self, other: Self) {
        let (om, ow, _) = other.best;
        let (bm, bw, _) = self.best;
        if ow > bw || (ow == bw && mask_lex_less(om, bm)) {
            self.best = other.best;
        }
    }
}

/// Heaviest cell union F with weight(F) <= upper and
/// covered(F) - weight(F) <= (num/den) weight(F); ties go to the lexicographically least.
pub fn exact_max_folner(sys: &CellSystem, upper: u64, num: u64, den: u64) -> Candidate {
    let v = enumerate(sys, || MaxFolner { upper, num: num as u128, den: den as u128, best: (0, 0, 0) });
    let (m, w, c) = v.best;
    Candidate { cells: mask_cells(m), covered: c, weight: w }
}

/// Incremental state used by local search.
struct State<'a> {
    walker: Walker<'a>,
    member: Vec<bool>,
}

impl<'a> State<'a> {
    fn new(sys: &'a CellSystem) -> Self {
        State { walker: Walker::new(sys), member: vec![false; sys.len()] }
    }

    fn toggle(&mut self, c: usize) {
        if self.member[c] {
            self.walker.remove(c);
        } else {
            self.walker.add(c);
        }
        self.member[c] = !self.member[c];
    }

    fn candidate(&self) -> Candidate {
        Candidate {
            cells: (0..self.member.len()).filter(|&i| self.member[i]).collect(),
            covered: self.walker.covered,
            weight: self.walker.weight,
        }
    }

    fn clear(&mut self) {
        for c in 0..self.member.len() {
            if self.member[c] {
                self.toggle(c);
            }
        }
    }

    /// Best-improvement single-cell moves until no move lowers the ratio.
    fn descend(&mut self, b: Bounds) {
        loop {
            let (cw, ww) = (self.walker.covered, self.walker.weight);
            let mut best: Option<(usize, u64, u64)> = None;
            for c in 0..self.member.len() {
                self.toggle(c);
                let (nc, nw) = (self.walker.covered, self.walker.weight);
                self.toggle(c);
                if nw == 0 || nw < b.lower || nw > b.upper {
                    continue;
                }
                if ratio_cmp(nc, nw, cw, ww) != Ordering::Less {
                    continue;
                }
                match best {
                    Some((_, bc, bw)) if ratio_cmp(nc, nw, bc, bw) != Ordering::Less => {}
                    _ => best = Some((c, nc, nw)),
                }
            }
            match best {
                Some((c, _, _)) => self.toggle(c),
                None => return,
            }
        }
    }
}

fn keep_better(best: &mut Option<Candidate>, cand: Candidate) {
    match best {
        Some(b) if !cand.better_than(b) => {}
        _ => *best = Some(cand),
    }
}

/// Local search with BFS-run seeds from every cell and seeded random restarts.
pub fn local_search_min_ratio(
    sys: &CellSystem,
    bounds: &[Bounds],
    seed: u64,
    restarts: usize,
) -> Vec<Option<Candidate>> {
    let n = sys.len();
    let adj = sys.adjacency();
    let orders: Vec<Vec<usize>> = (0..n)
        .map(|s| {
            let mut seen = vec![false; n];
            let mut order = vec![s];
            seen[s] = true;
            let mut i = 0;
            while i < order.len() {
                for &t in &adj[order[i]] {
                    if !seen[t] {
                        seen[t] = true;
                        order.push(t);
                    }
                }
                i += 1;
            }
            for t in 0..n {
                if !seen[t] {
                    order.push(t);
                }
            }
            order
        })
        .collect();
    bounds
        .par_iter()
        .enumerate()
        .map(|(j, &b)| {
            let mut best: Option<Candidate> = None;
            let mut st = State::new(sys);
            for order in &orders {
                st.clear();
                let mut prefix_best: Option<Candidate> = None;
                for &c in order {
                    if st.walker.weight + sys.cell_weight[c] > b.upper {
                        continue;
                    }
                    st.toggle(c);
                    if st.walker.weight >= b.lower {
                        keep_better(&mut prefix_best, st.candidate());
                    }
                }
                if let Some(p) = prefix_best {
                    st.clear();
                    for &c in &p.cells {
                        st.toggle(c);
                    }
                    st.descend(b);
                    keep_better(&mut best, st.candidate());
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut perm: Vec<usize> = (0..n).collect();
            for _ in 0..restarts {
                st.clear();
                perm.shuffle(&mut rng);
                let target = if b.upper > b.lower { rng.gen_range(b.lower..=b.upper) } else { b.lower };
                for &c in &perm {
                    if st.walker.weight >= target {
                        break;
                    }
                    if st.walker.weight + sys.cell_weight[c] <= b.upper {
                        st.toggle(c);
                    }
                }
                if st.walker.weight >= b.lower && st.walker.weight > 0 {
                    st.descend(b);
                    keep_better(&mut best, st.candidate());
                }
            }
            best
        })
        .collect()
}

/// Runtime options shared by strategies.
#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub max_exact_cells: usize,
    pub seed: u64,
    pub restarts: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { max_exact_cells: DEFAULT_MAX_EXACT_CELLS, seed: 0, restarts: 64 }
    }
}

/// A way of minimising covered/weight over cell unions.
pub trait MinimizationStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    /// Exact strategies return true minima; others return upper bounds.
    fn is_exact(&self) -> bool;
    fn minimize(
        &self,
        sys: &CellSystem,
        bounds: &[Bounds],
        opts: &SearchOptions,
    ) -> Result<Vec<Option<Candidate>>>;
}

pub struct Exhaustive;

impl MinimizationStrategy for Exhaustive {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn minimize(&self, sys: &CellSystem, bounds: &[Bounds], opts: &SearchOptions) -> Result<Vec<Option<Candidate>>> {
        let limit = opts.max_exact_cells.min(62);
        if sys.len() > limit {
            return Err(Error::TooLargeForExact { cells: sys.len(), limit });
        }
        Ok(exact_min_ratio(sys, bounds))
    }
}

pub struct LocalSearch;

impl MinimizationStrategy for LocalSearch {
    fn name(&self) -> &'static str {
        "local-search"
    }

    fn is_exact(&self) -> bool {
        false
    }

    fn minimize(&self, sys: &CellSystem, bounds: &[Bounds], opts: &SearchOptions) -> Result<Vec<Option<Candidate>>> {
        Ok(local_search_min_ratio(sys, bounds, opts.seed, opts.restarts))
    }
}

/// Name-indexed strategy table.
#[derive(Clone)]
pub struct StrategyRegistry {
    entries: BTreeMap<&'static str, Arc<dyn MinimizationStrategy>>,
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        let mut r = StrategyRegistry { entries: BTreeMap::new() };
        r.register(Arc::new(Exhaustive));
        r.register(Arc::new(LocalSearch));
        r
    }
}

impl StrategyRegistry {
    pub fn register(&mut self, s: Arc<dyn MinimizationStrategy>) {
        self.entries.insert(s.name(), s);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn MinimizationStrategy>> {
        self.entries
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownStrategy(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}
