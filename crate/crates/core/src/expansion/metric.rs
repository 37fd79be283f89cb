//! Finite measured metric spaces with integer distances (None for infinity).

use super::cells::CellSystem;
use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use num_traits::{One, Zero};
use std::collections::VecDeque;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasuredMetricSpace {
    n: usize,
    dist: Vec<Option<u64>>,
    weights: Vec<Rational>,
}

impl MeasuredMetricSpace {
    pub fn new(dist: Vec<Vec<Option<u64>>>, weights: Vec<Rational>) -> Result<Self> {
        let n = weights.len();
        if n == 0 || dist.len() != n || dist.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidModel("distance matrix must be square and match the weights".into()));
        }
        if weights.iter().any(|w| w <= &Rational::zero()) {
            return Err(Error::InvalidModel("point weights must be positive".into()));
        }
        let total = weights.iter().fold(Rational::zero(), |a, w| a + w);
        if !total.is_one() {
            return Err(Error::InvalidModel("point weights must sum to 1".into()));
        }
        let flat: Vec<Option<u64>> = dist.into_iter().flatten().collect();
        let s = MeasuredMetricSpace { n, dist: flat, weights };
        s.check_metric()?;
        Ok(s)
    }

    fn check_metric(&self) -> Result<()> {
        let n = self.n;
        for i in 0..n {
            if self.d(i, i) != Some(0) {
                return Err(Error::InvalidModel(format!("d({i},{i}) must be 0")));
            }
            for j in 0..n {
                if self.d(i, j) != self.d(j, i) {
                    return Err(Error::InvalidModel(format!("d({i},{j}) is not symmetric")));
                }
                if i != j && self.d(i, j) == Some(0) {
                    return Err(Error::InvalidModel(format!("d({i},{j}) = 0 for distinct points")));
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                let Some(a) = self.d(i, k) else { continue };
                for j in 0..n {
                    let Some(b) = self.d(k, j) else { continue };
                    if self.d(i, j).map_or(true, |d| d > a + b) {
                        return Err(Error::InvalidModel(format!(
                            "triangle inequality fails for {i},{k},{j}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Graph metric of an undirected graph with uniform point weights.
    pub fn from_graph(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidModel(format!("edge ({a},{b}) out of range")));
            }
            if a != b {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        let mut dist = vec![vec![None; n]; n];
        for (s, row) in dist.iter_mut().enumerate() {
            row[s] = Some(0);
            let mut q = VecDeque::from([s]);
            while let Some(x) = q.pop_front() {
                let dx = row[x].unwrap();
                for &y in &adj[x] {
                    if row[y].is_none() {
                        row[y] = Some(dx + 1);
                        q.push_back(y);
                    }
                }
            }
        }
        Self::new(dist, vec![rational::rat(1, n as i64); n])
    }

    pub fn cycle(n: usize) -> Result<Self> {
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::from_graph(n, &edges)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j));
            }
        }
        Self::from_graph(n, &edges)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn d(&self, i: usize, j: usize) -> Option<u64> {
        self.dist[i * self.n + j]
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn rows(&self) -> Vec<Vec<Option<u64>>> {
        self.dist.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn has_uniform_weights(&self) -> bool {
        self.weights.iter().all(|w| w == &self.weights[0])
    }

    /// Pairs at distance exactly 1.
    pub fn unit_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.d(i, j) == Some(1) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        (0..self.n).all(|j| self.d(0, j).is_some())
    }

    /// Cell system where each point is a cell and N(A) is the k-neighbourhood.
    pub fn system(&self, k: u64) -> Result<CellSystem> {
        let own = (0..self.n).map(|i| vec![i as u32]).collect();
        let reach = (0..self.n)
            .map(|i| {
                (0..self.n)
                    .filter(|&j| self.d(i, j).is_some_and(|d| d <= k))
                    .map(|j| j as u32)
                    .collect()
            })
            .collect();
        CellSystem::from_parts(&self.weights, own, reach, (0..self.n).collect())
    }
}
