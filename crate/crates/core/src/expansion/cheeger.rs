//! Vertex Cheeger constant of a measured metric space, min nu(boundary A)/nu(A)
//! over nonempty A with nu(A) <= 1/2, where the boundary is the unit-distance shell.

use super::engine::{Bounds, MinimizationStrategy, SearchOptions};
use super::metric::MeasuredMetricSpace;
use super::spectral::{normalized_laplacian_gap, SolverRegistry};
use crate::error::Result;
use crate::rational::{self, Rational};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheegerResult {
    /// None is the +infinity sentinel: no admissible A exists.
    #[serde(with = "rational::serde_str::opt")]
    pub value: Option<Rational>,
    pub witness: Vec<usize>,
    pub exact: bool,
    pub strategy: String,
    /// Certified lower bound from the spectral gap (bracket mode only).
    pub lower_bound: Option<f64>,
    pub lambda2: Option<f64>,
    pub residual: Option<f64>,
}

impl CheegerResult {
    pub fn is_infinite(&self) -> bool {
        self.value.is_none()
    }
}

/// Minimum of the boundary ratio through the given strategy. For exact
/// strategies this is the Cheeger constant; otherwise an upper bound.
pub fn cheeger_value(
    space: &MeasuredMetricSpace,
    strategy: &dyn MinimizationStrategy,
    opts: &SearchOptions,
) -> Result<(Option<Rational>, Vec<usize>)> {
    let sys = space.system(1)?;
    let bounds = Bounds { lower: 1, upper: sys.total / 2 };
    let best = strategy.minimize(&sys, &[bounds], opts)?.pop().flatten();
    Ok(match best {
        None => (None, Vec::new()),
        Some(c) => {
            let w = Rational::from_integer(c.weight.into());
            let cov = Rational::from_integer(c.covered.into());
            (Some((cov - &w) / w), c.cells)
        }
    })
}

/// Exact value with a minimising witness.
pub fn cheeger_exact(
    space: &MeasuredMetricSpace,
    strategy: &dyn MinimizationStrategy,
    opts: &SearchOptions,
) -> Result<CheegerResult> {
    let (value, witness) = cheeger_value(space, strategy, opts)?;
    Ok(CheegerResult {
        value,
        witness,
        exact: strategy.is_exact(),
        strategy: strategy.name().into(),
        lower_bound: None,
        lambda2: None,
        residual: None,
    })
}

/// Two-sided bracket: a search upper bound and the spectral lower bound
/// (lambda2/2) (dmin/dmax)^2 (wmin/wmax)^2 of the unit-distance graph.
pub fn cheeger_bracket(
    space: &MeasuredMetricSpace,
    strategy: &dyn MinimizationStrategy,
    opts: &SearchOptions,
    solvers: &SolverRegistry,
) -> Result<CheegerResult> {
    let mut r = cheeger_exact(space, strategy, opts)?;
    let (eig, _, dmin, dmax) = normalized_laplacian_gap(space, solvers)?;
    let w: Vec<f64> = space.weights().iter().map(rational::to_f64).collect();
    let wmin = w.iter().cloned().fold(f64::INFINITY, f64::min);
    let wmax = w.iter().cloned().fold(0.0, f64::max);
    let lower = if r.value.is_none() {
        f64::INFINITY
    } else if dmax == 0 {
        0.0
    } else {
        let d = dmin as f64 / dmax as f64;
        (eig.value / 2.0) * d * d * (wmin / wmax).powi(2)
    };
    r.lower_bound = Some(lower);
    r.lambda2 = Some(eig.value);
    r.residual = Some(eig.residual);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::engine::{Exhaustive, LocalSearch};
    use crate::rational::rat;

    #[test]
    fn small_graphs() {
        let o = SearchOptions::default();
        let k4 = cheeger_exact(&MeasuredMetricSpace::complete(4).unwrap(), &Exhaustive, &o).unwrap();
        assert_eq!(k4.value, Some(rat(1, 1)));
        assert_eq!(k4.witness.len(), 2);
        let c6 = cheeger_exact(&MeasuredMetricSpace::cycle(6).unwrap(), &Exhaustive, &o).unwrap();
        assert_eq!(c6.value, Some(rat(2, 3)));
        assert_eq!(c6.witness, vec![0, 1, 2]);
        let one = cheeger_exact(&MeasuredMetricSpace::complete(1).unwrap(), &Exhaustive, &o).unwrap();
        assert!(one.is_infinite());
    }

    #[test]
    fn bracket_contains_exact() {
        let o = SearchOptions::default();
        let s = MeasuredMetricSpace::cycle(10).unwrap();
        let exact = rational::to_f64(&cheeger_exact(&s, &Exhaustive, &o).unwrap().value.unwrap());
        let b = cheeger_bracket(&s, &LocalSearch, &o, &SolverRegistry::default()).unwrap();
        assert!(rational::to_f64(b.value.as_ref().unwrap()) >= exact);
        assert!(b.lower_bound.unwrap() <= exact);
        assert!(b.lower_bound.unwrap() > 0.0);
    }
}
