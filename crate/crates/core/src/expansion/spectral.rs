//! Second-smallest eigenvalues of symmetric positive semidefinite operators:
//! the normalised Laplacian of a graph and the local energy form of an action.

use super::metric::MeasuredMetricSpace;
use crate::action::{ActionModel, Transform};
use crate::error::{Error, Result};
use crate::measure::Set;
use crate::rational;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

pub const DENSE_LIMIT: usize = 2000;
pub const ITERATIVE_TOLERANCE: f64 = 1e-10;

/// y = S (Q + sum_g (diag(c_g) - c_g c_g^T / |c_g|)) S x, with Q sparse symmetric.
#[derive(Clone, Debug)]
pub struct SymOperator {
    pub n: usize,
    /// Upper-triangle entries (i <= j) of Q.
    entries: BTreeMap<(usize, usize), f64>,
    /// Rank-one corrected groups from eliminated outside variables.
    groups: Vec<Vec<(usize, f64)>>,
    scale: Vec<f64>,
}

impl SymOperator {
    pub fn new(n: usize) -> Self {
        SymOperator { n, entries: BTreeMap::new(), groups: Vec::new(), scale: vec![1.0; n] }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let key = if i <= j { (i, j) } else { (j, i) };
        *self.entries.entry(key).or_insert(0.0) += v;
    }

    /// Adds c (e_i - e_j)(e_i - e_j)^T.
    pub fn add_difference(&mut self, i: usize, j: usize, c: f64) {
        self.add(i, i, c);
        self.add(j, j, c);
        self.add(i, j, -c);
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let sx: Vec<f64> = x.iter().zip(&self.scale).map(|(a, s)| a * s).collect();
        let mut y = vec![0.0; self.n];
        for (&(i, j), &v) in &self.entries {
            y[i] += v * sx[j];
            if i != j {
                y[j] += v * sx[i];
            }
        }
        for g in &self.groups {
            let total: f64 = g.iter().map(|p| p.1).sum();
            let dot: f64 = g.iter().map(|&(i, c)| c * sx[i]).sum();
            for &(i, c) in g {
                y[i] += c * sx[i] - c * dot / total;
            }
        }
        y.iter().zip(&self.scale).map(|(a, s)| a * s).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (&(i, j), &v) in &self.entries {
            m[(i, j)] += v;
            if i != j {
                m[(j, i)] += v;
            }
        }
        for g in &self.groups {
            let total: f64 = g.iter().map(|p| p.1).sum();
            for &(i, ci) in g {
                m[(i, i)] += ci;
                for &(j, cj) in g {
                    m[(i, j)] -= ci * cj / total;
                }
            }
        }
        for i in 0..self.n {
            for j in 0..self.n {
                m[(i, j)] *= self.scale[i] * self.scale[j];
            }
        }
        m
    }
}

/// Eigenvalue estimate with its measured residual ||Av - lambda v||.
#[derive(Clone, Copy, Debug)]
pub struct Eigen {
    pub value: f64,
    pub residual: f64,
}

/// Finds the smallest eigenvalue of an operator on the complement of a known null vector.
pub trait EigenSolver: Send + Sync {
    fn name(&self) -> &'static str;
    fn second_smallest(&self, op: &SymOperator, null: &[f64]) -> Result<Eigen>;
}

pub struct DenseEig;

impl EigenSolver for DenseEig {
    fn name(&self) -> &'static str {
        "dense-eig"
    }

    fn second_smallest(&self, op: &SymOperator, _null: &[f64]) -> Result<Eigen> {
        let m = op.to_dense();
        let eig = SymmetricEigen::new(m.clone());
        let mut order: Vec<usize> = (0..op.n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let i = order[1];
        let v = eig.eigenvectors.column(i);
        let lambda = eig.eigenvalues[i].max(0.0);
        let r: DVector<f64> = &m * v - v * eig.eigenvalues[i];
        Ok(Eigen { value: lambda, residual: r.norm() })
    }
}

pub struct Lanczos {
    pub tolerance: f64,
    pub max_restarts: usize,
}

impl Default for Lanczos {
    fn default() -> Self {
        Lanczos { tolerance: ITERATIVE_TOLERANCE, max_restarts: 100 }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

impl EigenSolver for Lanczos {
    fn name(&self) -> &'static str {
        "iterative"
    }

    fn second_smallest(&self, op: &SymOperator, null: &[f64]) -> Result<Eigen> {
        let n = op.n;
        let mut z = null.to_vec();
        normalize(&mut z);
        let project = |v: &mut Vec<f64>| {
            let c = dot(v, &z);
            axpy(v, -c, &z);
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut start: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        project(&mut start);
        normalize(&mut start);
        let steps = (n - 1).min(120).max(1);
        let mut best = Eigen { value: f64::INFINITY, residual: f64::INFINITY };
        for _ in 0..self.max_restarts {
            let mut basis: Vec<Vec<f64>> = vec![start.clone()];
            let mut alpha = Vec::new();
            let mut beta: Vec<f64> = Vec::new();
            for j in 0..steps {
                let mut w = op.apply(&basis[j]);
                project(&mut w);
                let a = dot(&w, &basis[j]);
                alpha.push(a);
                for _ in 0..2 {
                    for b in &basis {
                        let c = dot(&w, b);
                        axpy(&mut w, -c, b);
                    }
                    project(&mut w);
                }
                let bnorm = normalize(&mut w);
                if j + 1 == steps || bnorm < 1e-12 {
                    break;
                }
                beta.push(bnorm);
                basis.push(w);
            }
            let m = alpha.len();
            let mut t = DMatrix::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alpha[i];
                if i + 1 < m {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let (mut idx, mut theta) = (0, f64::INFINITY);
            for i in 0..m {
                if eig.eigenvalues[i] < theta {
                    theta = eig.eigenvalues[i];
                    idx = i;
                }
            }
            let s = eig.eigenvectors.column(idx);
            let mut x = vec![0.0; n];
            for (i, b) in basis.iter().take(m).enumerate() {
                axpy(&mut x, s[i], b);
            }
            project(&mut x);
            normalize(&mut x);
            let ax = op.apply(&x);
            let rq = dot(&ax, &x);
            let res: f64 = ax.iter().zip(&x).map(|(a, b)| (a - rq * b).powi(2)).sum::<f64>().sqrt();
            best = Eigen { value: rq.max(0.0), residual: res };
            if res < self.tolerance {
                break;
            }
            start = x;
        }
        Ok(best)
    }
}

/// Name-indexed eigen-solver table.
#[derive(Clone)]
pub struct SolverRegistry {
    entries: BTreeMap<&'static str, Arc<dyn EigenSolver>>,
}

impl Default for SolverRegistry {
    fn default() -> Self {
        let mut r = SolverRegistry { entries: BTreeMap::new() };
        r.register(Arc::new(DenseEig));
        r.register(Arc::new(Lanczos::default()));
        r
    }
}

impl SolverRegistry {
    pub fn register(&mut self, s: Arc<dyn EigenSolver>) {
        self.entries.insert(s.name(), s);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn EigenSolver>> {
        self.entries.get(name).cloned().ok_or_else(|| Error::UnknownStrategy(name.into()))
    }

    /// Dense below the size limit, iterative above.
    pub fn for_size(&self, n: usize) -> Arc<dyn EigenSolver> {
        self.get(if n < DENSE_LIMIT { "dense-eig" } else { "iterative" }).expect("built-in solvers")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub lambda2: f64,
    pub kappa_upper: Option<f64>,
    pub method: String,
    pub residual: f64,
    pub degenerate: bool,
    pub note: String,
}

impl SpectralReport {
    fn from_eigen(e: Eigen, method: &str) -> Self {
        let gap = e.value > 1e-12;
        SpectralReport {
            lambda2: e.value,
            kappa_upper: gap.then(|| 1.0 / e.value.sqrt()),
            method: method.into(),
            residual: e.residual,
            degenerate: false,
            note: if gap {
                "kappa is the upper bound 1/sqrt(lambda2); the exact sum-of-norms constant is not computed".into()
            } else {
                "no local spectral gap certificate".into()
            },
        }
    }

    fn degenerate(method: &str) -> Self {
        SpectralReport {
            lambda2: f64::INFINITY,
            kappa_upper: None,
            method: method.into(),
            residual: 0.0,
            degenerate: true,
            note: "mean-zero functions on Y vanish; the inequality holds trivially".into(),
        }
    }
}

/// Smallest nonzero-direction eigenvalue of
/// sum_{g in B_k} sum_{x in Y} nu(x)(f(g^-1 x) - f(x))^2 against ||f||_{Y,2}^2,
/// with f minimised freely outside Y.
pub fn local_spectral_gap(action: &ActionModel, y: &Set, k: u32, solvers: &SolverRegistry) -> Result<SpectralReport> {
    if !action.is_measure_preserving() {
        return Err(Error::NotMeasurePreserving);
    }
    let w = action.atoms().ok_or_else(|| Error::InvalidModel("local spectral gap needs an atom model".into()))?;
    let ys = y.as_atoms().ok_or(Error::MixedSpaceKinds)?;
    let members: Vec<usize> = ys.indices().collect();
    if members.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let m = members.len();
    let solver = solvers.for_size(m);
    if m == 1 {
        return Ok(SpectralReport::degenerate(solver.name()));
    }
    let mut pos = vec![usize::MAX; w.len()];
    for (i, &a) in members.iter().enumerate() {
        pos[a] = i;
    }
    let weight: Vec<f64> = w.weights().iter().map(rational::to_f64).collect();
    let ball = action.group().ball(k)?;
    let mut op = SymOperator::new(m);
    let mut outside: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
    for i in 0..ball.len() {
        let t = action.word_transform(&ball.word(i))?;
        let Transform::Permutation(p) = t.inverse() else { unreachable!() };
        for (xi, &x) in members.iter().enumerate() {
            let z = p[x] as usize;
            if z == x {
                continue;
            }
            let c = weight[x];
            if pos[z] != usize::MAX {
                op.add_difference(xi, pos[z], c);
            } else {
                outside.entry(z).or_default().push((xi, c));
            }
        }
    }
    let mut keys: Vec<usize> = outside.keys().copied().collect();
    keys.sort_unstable();
    op.groups = keys.into_iter().map(|z| outside.remove(&z).unwrap()).collect();
    op.scale = members.iter().map(|&a| 1.0 / weight[a].sqrt()).collect();
    let null: Vec<f64> = members.iter().map(|&a| weight[a].sqrt()).collect();
    let e = solver.second_smallest(&op, &null)?;
    Ok(SpectralReport::from_eigen(e, solver.name()))
}

/// lambda_2 of the normalised Laplacian of the unit-distance graph.
pub fn normalized_laplacian_gap(space: &MeasuredMetricSpace, solvers: &SolverRegistry) -> Result<(Eigen, &'static str, usize, usize)> {
    let n = space.len();
    let edges = space.unit_edges();
    let mut deg = vec![0usize; n];
    for &(a, b) in &edges {
        deg[a] += 1;
        deg[b] += 1;
    }
    let dmin = *deg.iter().min().unwrap();
    let dmax = *deg.iter().max().unwrap();
    let solver = solvers.for_size(n);
    if n < 2 {
        return Ok((Eigen { value: f64::INFINITY, residual: 0.0 }, solver.name(), dmin, dmax));
    }
    if dmin == 0 {
        return Ok((Eigen { value: 0.0, residual: 0.0 }, solver.name(), dmin, dmax));
    }
    let mut op = SymOperator::new(n);
    for i in 0..n {
        op.add(i, i, 1.0);
    }
    for &(a, b) in &edges {
        op.add(a, b, -1.0 / ((deg[a] * deg[b]) as f64).sqrt());
    }
    let null: Vec<f64> = deg.iter().map(|&d| (d as f64).sqrt()).collect();
    Ok((solver.second_smallest(&op, &null)?, solver.name(), dmin, dmax))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupModel;
    use crate::measure::{AtomSet, Space, WeightedAtomSpace};

    fn cycle(n: u32) -> ActionModel {
        let t = Transform::Permutation((0..n).map(|i| (i + 1) % n).collect());
        ActionModel::new(
            GroupModel::finite_cyclic(n as u64).unwrap(),
            Space::Atoms(WeightedAtomSpace::uniform(n as usize).unwrap()),
            vec![t.clone(), t.inverse()],
        )
        .unwrap()
    }

    #[test]
    fn z4_gap_is_four() {
        let a = cycle(4);
        let r = local_spectral_gap(&a, &a.space().full_set(), 1, &SolverRegistry::default()).unwrap();
        assert!((r.lambda2 - 4.0).abs() < 1e-9);
        assert!((r.kappa_upper.unwrap() - 0.5).abs() < 1e-9);
        assert!(r.residual < 1e-10);
    }

    #[test]
    fn single_atom_domain_is_degenerate() {
        let a = cycle(4);
        let y = Set::Atoms(AtomSet::from_indices(4, [2]).unwrap());
        let r = local_spectral_gap(&a, &y, 1, &SolverRegistry::default()).unwrap();
        assert!(r.degenerate);
    }

    #[test]
    fn invariant_block_has_no_gap() {
        // two disjoint 3-cycles
        let t = Transform::Permutation(vec![1, 2, 0, 4, 5, 3]);
        let a = ActionModel::new(
            GroupModel::integer_lattice(1),
            Space::Atoms(WeightedAtomSpace::uniform(6).unwrap()),
            vec![t.clone(), t.inverse()],
        )
        .unwrap();
        let r = local_spectral_gap(&a, &a.space().full_set(), 2, &SolverRegistry::default()).unwrap();
        assert!(r.lambda2.abs() < 1e-9);
        assert!(r.kappa_upper.is_none());
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        let a = cycle(40);
        let y = Set::Atoms(AtomSet::from_indices(40, 0..30).unwrap());
        let dense = local_spectral_gap(&a, &y, 2, &SolverRegistry::default()).unwrap();
        let mut only_iter = SolverRegistry::default();
        only_iter.register(Arc::new(AliasDense));
        let it = local_spectral_gap(&a, &y, 2, &only_iter).unwrap();
        assert!((dense.lambda2 - it.lambda2).abs() < 1e-8, "{} {}", dense.lambda2, it.lambda2);
        assert!(it.residual < 1e-10);
    }

    /// Routes the dense slot to the iterative solver.
    struct AliasDense;
    impl EigenSolver for AliasDense {
        fn name(&self) -> &'static str {
            "dense-eig"
        }
        fn second_smallest(&self, op: &SymOperator, null: &[f64]) -> Result<Eigen> {
            Lanczos::default().second_smallest(op, null)
        }
    }

    #[test]
    fn cycle_laplacian() {
        let c = MeasuredMetricSpace::cycle(6).unwrap();
        let (e, _, dmin, dmax) = normalized_laplacian_gap(&c, &SolverRegistry::default()).unwrap();
        assert_eq!((dmin, dmax), (2, 2));
        assert!((e.value - 0.5).abs() < 1e-9);
    }
}
