//! Partitions, saturations and measured approximating spaces built from an
//! action and a partition, plus the iterated-saturation admissibility test.

use crate::action::{ActionModel, Transform};
use crate::error::{Error, Result};
use crate::expansion::metric::MeasuredMetricSpace;
use crate::measure::{AtomSet, IntervalSet, Set, SetRepr, Space};
use crate::rational::{self, rat, Rational};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PartitionSpec {
    UniformArcs { n: usize },
    Dyadic { depth: u32 },
    /// assignment[i] is the block of atom i; blocks are numbered 0..B.
    AtomBlocks { assignment: Vec<usize> },
    /// One cell per atom.
    Atoms,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub cells: Vec<Set>,
    pub labels: Vec<String>,
    /// Largest cell diameter; None for atom spaces.
    pub mesh: Option<Rational>,
}

impl Partition {
    /// Validates disjointness, coverage and positivity of the cells.
    pub fn new(space: &Space, cells: Vec<Set>, labels: Vec<String>) -> Result<Self> {
        if cells.is_empty() || labels.len() != cells.len() {
            return Err(Error::BadSpec("partition needs one label per cell and at least one cell".into()));
        }
        let mut seen = space.empty_set();
        for c in &cells {
            space.check(c)?;
            if space.measure(c)?.is_zero() {
                return Err(Error::BadSpec("partition cell of measure zero".into()));
            }
            if seen.overlaps(c)? {
                return Err(Error::BadSpec("partition cells overlap".into()));
            }
            seen = seen.union(c)?;
        }
        if !space.measure(&seen)?.is_one() {
            return Err(Error::BadSpec("partition cells do not cover the space".into()));
        }
        let mesh = match space {
            Space::UnitInterval => cells
                .iter()
                .filter_map(|c| c.as_intervals())
                .map(|iv| {
                    let v = iv.intervals();
                    &v[v.len() - 1].1 - &v[0].0
                })
                .max(),
            Space::Atoms(_) => None,
        };
        Ok(Partition { cells, labels, mesh })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Index of the cell containing an atom.
    fn atom_owner(&self) -> Option<Vec<usize>> {
        let n = self.cells.first()?.as_atoms()?.universe();
        let mut owner = vec![usize::MAX; n];
        for (ci, c) in self.cells.iter().enumerate() {
            for i in c.as_atoms()?.indices() {
                owner[i] = ci;
            }
        }
        Some(owner)
    }
}

pub fn build_partition(space: &Space, spec: &PartitionSpec) -> Result<Partition> {
    match (spec, space) {
        (PartitionSpec::UniformArcs { n }, Space::UnitInterval) => {
            if *n == 0 {
                return Err(Error::BadSpec("uniform-arcs needs n >= 1".into()));
            }
            let n = *n as i64;
            let cells = (0..n)
                .map(|i| Ok(Set::Interval(IntervalSet::interval(rat(i, n), rat(i + 1, n))?)))
                .collect::<Result<Vec<_>>>()?;
            let labels = (0..n).map(|i| format!("[{}, {})", rational::format(&rat(i, n)), rational::format(&rat(i + 1, n)))).collect();
            Partition::new(space, cells, labels)
        }
        (PartitionSpec::Dyadic { depth }, Space::UnitInterval) => {
            if *depth > 20 {
                return Err(Error::BadSpec("dyadic depth above 20".into()));
            }
            build_partition(space, &PartitionSpec::UniformArcs { n: 1 << depth })
        }
        (PartitionSpec::AtomBlocks { assignment }, Space::Atoms(w)) => {
            if assignment.len() != w.len() {
                return Err(Error::BadSpec(format!("{} block labels for {} atoms", assignment.len(), w.len())));
            }
            let blocks = assignment.iter().max().map_or(0, |m| m + 1);
            let cells = (0..blocks)
                .map(|b| {
                    let idx = assignment.iter().enumerate().filter(|(_, &x)| x == b).map(|(i, _)| i);
                    Ok(Set::Atoms(AtomSet::from_indices(w.len(), idx)?))
                })
                .collect::<Result<Vec<_>>>()?;
            if cells.iter().any(|c| c.is_empty()) {
                return Err(Error::BadSpec("atom-blocks leaves a block empty".into()));
            }
            Partition::new(space, cells, (0..blocks).map(|b| format!("block {b}")).collect())
        }
        (PartitionSpec::Atoms, Space::Atoms(w)) => {
            build_partition(space, &PartitionSpec::AtomBlocks { assignment: (0..w.len()).collect() })
        }
        _ => Err(Error::BadSpec("partition kind does not match the space".into())),
    }
}

/// [A]_P: union of the cells meeting A in positive measure.
pub fn saturate(space: &Space, p: &Partition, a: &Set) -> Result<Set> {
    let mut out = space.empty_set();
    for c in &p.cells {
        if c.overlaps(a)? {
            out = out.union(c)?;
        }
    }
    Ok(out)
}

/// Cell pairs (i, j) with the least length of a ball element moving
/// cell i onto cell j in positive measure.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct OverlapGraph {
    pub n: usize,
    pub edges: BTreeMap<(usize, usize), u32>,
}

impl OverlapGraph {
    fn record(&mut self, i: usize, j: usize, len: u32) {
        let e = self.edges.entry((i, j)).or_insert(len);
        *e = (*e).min(len);
    }

    pub fn is_symmetric(&self) -> bool {
        self.edges.iter().all(|(&(i, j), w)| self.edges.get(&(j, i)) == Some(w))
    }
}

pub fn overlap_graph(action: &ActionModel, p: &Partition, cutoff: u32) -> Result<OverlapGraph> {
    let ball = action.transform_ball(cutoff)?;
    let mut g = OverlapGraph { n: p.len(), edges: BTreeMap::new() };
    if let Some(owner) = p.atom_owner() {
        for (t, len) in &ball {
            let Transform::Permutation(perm) = t else { unreachable!() };
            for (x, &y) in perm.iter().enumerate() {
                g.record(owner[x], owner[y as usize], *len);
            }
        }
        return Ok(g);
    }
    for (t, len) in &ball {
        for (i, c) in p.cells.iter().enumerate() {
            let img = t.apply(c)?;
            for (j, d) in p.cells.iter().enumerate() {
                if img.overlaps(d)? {
                    g.record(i, j, *len);
                }
            }
        }
    }
    Ok(g)
}

#[derive(Clone, Debug)]
pub struct ApproximatingSpace {
    pub space: MeasuredMetricSpace,
    pub graph: OverlapGraph,
    pub cutoff: u32,
    pub labels: Vec<String>,
    /// All distances finite.
    pub connected: bool,
}

/// Cells with the shortest-chain metric over overlap edges and weights nu(R).
pub fn approximating_space(action: &ActionModel, p: &Partition, cutoff: u32) -> Result<ApproximatingSpace> {
    let graph = overlap_graph(action, p, cutoff)?;
    let n = p.len();
    let mut adj: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n];
    for (&(i, j), &w) in &graph.edges {
        if i != j {
            adj[i].push((j, w as u64));
        }
    }
    let mut dist = vec![vec![None; n]; n];
    for (s, row) in dist.iter_mut().enumerate() {
        row[s] = Some(0u64);
        let mut heap = BinaryHeap::from([Reverse((0u64, s))]);
        while let Some(Reverse((d, x))) = heap.pop() {
            if row[x] != Some(d) {
                continue;
            }
            for &(y, w) in &adj[x] {
                let nd = d + w;
                if row[y].map_or(true, |old| nd < old) {
                    row[y] = Some(nd);
                    heap.push(Reverse((nd, y)));
                }
            }
        }
    }
    let weights = p.cells.iter().map(|c| action.measure(c)).collect::<Result<Vec<_>>>()?;
    let space = MeasuredMetricSpace::new(dist, weights)?;
    let connected = space.is_connected();
    Ok(ApproximatingSpace { space, graph, cutoff, labels: p.labels.clone(), connected })
}

/// max nu(R_i)/nu(R_j) over cell pairs.
pub fn measure_ratio_q(space: &Space, p: &Partition) -> Result<Rational> {
    let ms = p.cells.iter().map(|c| space.measure(c)).collect::<Result<Vec<_>>>()?;
    let lo = ms.iter().min().ok_or_else(|| Error::BadSpec("empty partition".into()))?;
    let hi = ms.iter().max().unwrap();
    if lo.is_zero() {
        return Err(Error::RatioUnbounded);
    }
    Ok(hi / lo)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordDiscrepancy {
    pub word: String,
    #[serde(with = "rational::serde_str")]
    pub discrepancy: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub k: u32,
    #[serde(with = "rational::serde_str")]
    pub tolerance: Rational,
    pub words: Vec<String>,
    pub samples: Vec<SetRepr>,
    pub partitions: Vec<String>,
    /// [sample][partition]: max over words of the discrepancy.
    #[serde(with = "rational::serde_str::matrix")]
    pub discrepancy: Vec<Vec<Rational>>,
    /// [sample][partition]: word attaining the max.
    pub worst_word: Vec<Vec<String>>,
    /// Per sample: "supported" or "refuted".
    pub sample_verdicts: Vec<String>,
    pub verdict: String,
}

impl AdmissibilityReport {
    pub fn refuted(&self) -> bool {
        self.verdict == "refuted"
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "k {}  words {}  verdict {}", self.k, self.words.len(), self.verdict);
        for (si, row) in self.discrepancy.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|d| format!("{:.4}", rational::to_f64(d))).collect();
            let _ = writeln!(out, "sample {si}: {}  [{}]", cells.join(" "), self.sample_verdicts[si]);
        }
        out
    }
}

/// Tuples of non-identity ball elements with total length <= k, as
/// (label, transforms in application order). k = 0 yields the empty word.
fn words(action: &ActionModel, k: u32) -> Result<Vec<(String, Vec<Transform>)>> {
    let group = action.group();
    let ball = group.ball(k)?;
    let mut letters: Vec<(String, u32, Transform)> = Vec::new();
    for i in 0..ball.len() {
        if ball.lengths[i] == 0 {
            continue;
        }
        let w = ball.word(i);
        let label: Vec<&str> = w.iter().map(|&g| group.generators[g].label.as_str()).collect();
        letters.push((label.join(""), ball.lengths[i], action.word_transform(&w)?));
    }
    let mut out = vec![(String::new(), Vec::new(), 0u32)];
    let mut frontier = out.clone();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for (lab, ts, len) in &frontier {
            for (l, ll, t) in &letters {
                if len + ll <= k {
                    let mut ts2 = ts.clone();
                    ts2.push(t.clone());
                    let lab2 = if lab.is_empty() { l.clone() } else { format!("{lab},{l}") };
                    next.push((lab2, ts2, len + ll));
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    if k > 0 {
        out.remove(0);
    }
    Ok(out.into_iter().map(|(l, t, _)| (if l.is_empty() { "e".into() } else { l }, t)).collect())
}

/// nu([g_q [ ... [g_1 [A]_P]_P ... ]_P]_P symmetric-difference g_q...g_1 A).
pub fn word_discrepancy(space: &Space, p: &Partition, a: &Set, word: &[Transform]) -> Result<Rational> {
    let mut approx = saturate(space, p, a)?;
    let mut exact = a.clone();
    for t in word {
        approx = saturate(space, p, &t.apply(&approx)?)?;
        exact = t.apply(&exact)?;
    }
    space.measure(&approx.symdiff(&exact)?)
}

/// Discrepancy matrix over samples and a partition sequence; a sample is
/// supported when its discrepancies never increase and end at or below tolerance.
pub fn admissibility_test(
    action: &ActionModel,
    partitions: &[Partition],
    k: u32,
    samples: &[Set],
    tolerance: &Rational,
) -> Result<AdmissibilityReport> {
    let space = action.space();
    let ws = words(action, k)?;
    let mut discrepancy = Vec::new();
    let mut worst_word = Vec::new();
    let mut sample_verdicts = Vec::new();
    for a in samples {
        space.check(a)?;
        let mut row = Vec::new();
        let mut worst = Vec::new();
        for p in partitions {
            let mut best = (Rational::zero(), String::from("e"));
            for (label, w) in &ws {
                let d = word_discrepancy(space, p, a, w)?;
                if d > best.0 {
                    best = (d, label.clone());
                }
            }
            row.push(best.0);
            worst.push(best.1);
        }
        let monotone = row.windows(2).all(|w| w[1] <= w[0]);
        let small = row.last().map_or(true, |d| d <= tolerance);
        sample_verdicts.push(if monotone && small { "supported" } else { "refuted" }.to_string());
        discrepancy.push(row);
        worst_word.push(worst);
    }
    let verdict = if sample_verdicts.iter().all(|v| v == "supported") { "supported" } else { "refuted" };
    Ok(AdmissibilityReport {
        k,
        tolerance: tolerance.clone(),
        words: ws.into_iter().map(|w| w.0).collect(),
        samples: samples.iter().map(SetRepr::from_set).collect(),
        partitions: partitions.iter().map(|p| format!("{} cells", p.len())).collect(),
        discrepancy,
        worst_word,
        sample_verdicts,
        verdict: verdict.into(),
    })
}

/// Pairs (i, j) whose distance is not realised through a third point.
pub fn hop_edges(space: &MeasuredMetricSpace) -> Vec<(usize, usize, u64)> {
    let n = space.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let Some(d) = space.d(i, j) else { continue };
            let through = (0..n).any(|m| {
                m != i && m != j && matches!((space.d(i, m), space.d(m, j)), (Some(a), Some(b)) if a + b == d)
            });
            if !through {
                out.push((i, j, d));
            }
        }
    }
    out
}

/// DOT graph: nodes carry their weight, edges the hop length.
pub fn to_dot(space: &MeasuredMetricSpace, labels: Option<&[String]>) -> String {
    let mut out = String::from("graph approximating_space {\n");
    for (i, w) in space.weights().iter().enumerate() {
        let label = labels.and_then(|l| l.get(i)).cloned().unwrap_or_else(|| i.to_string());
        let _ = writeln!(out, "  {i} [label=\"{}\", weight=\"{}\"];", label.replace('"', "'"), rational::format(w));
    }
    for (i, j, d) in hop_edges(space) {
        let _ = writeln!(out, "  {i} -- {j} [len={d}];");
    }
    out.push_str("}\n");
    out
}

/// CSV: point,weight,d0,...,d(n-1) with "inf" for unreachable pairs.
pub fn to_distance_csv(space: &MeasuredMetricSpace) -> String {
    let n = space.len();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["point".to_string(), "weight".to_string()];
    header.extend((0..n).map(|j| format!("d{j}")));
    w.write_record(&header).unwrap();
    for i in 0..n {
        let mut rec = vec![i.to_string(), rational::format(&space.weights()[i])];
        rec.extend((0..n).map(|j| space.d(i, j).map_or("inf".into(), |d| d.to_string())));
        w.write_record(&rec).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

pub fn from_distance_csv(text: &str) -> Result<MeasuredMetricSpace> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut dist = Vec::new();
    let mut weights = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.len() < 2 {
            return Err(Error::Parse("distance row too short".into()));
        }
        weights.push(rational::parse(&rec[1])?);
        let row = rec
            .iter()
            .skip(2)
            .map(|s| match s.trim() {
                "inf" => Ok(None),
                t => t.parse::<u64>().map(Some).map_err(|_| Error::Parse(format!("bad distance '{t}'"))),
            })
            .collect::<Result<Vec<_>>>()?;
        dist.push(row);
    }
    MeasuredMetricSpace::new(dist, weights)
}
