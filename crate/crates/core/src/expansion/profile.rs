//! Expansion profiles c*(alpha, k) for actions, domains and measured spaces.

use super::cells::{action_system, CellSystem, Granularity, Neighborhood};
use super::engine::{Bounds, MinimizationStrategy, SearchOptions};
use super::metric::MeasuredMetricSpace;
use crate::action::ActionModel;
use crate::error::{Error, Result};
use crate::measure::Set;
use crate::rational::{self, Rational};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    Global,
    Domain,
    MeasuredSpace,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileEntry {
    #[serde(with = "rational::serde_str")]
    pub alpha: Rational,
    pub k: u32,
    #[serde(with = "rational::serde_str")]
    pub c_star: Rational,
    /// Indices of the granularity cells (or points) forming the minimiser.
    pub witness: Vec<usize>,
    #[serde(with = "rational::serde_str")]
    pub witness_measure: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionProfile {
    pub scope: Scope,
    pub strategy: String,
    pub exact: bool,
    pub granularity: String,
    pub seed: u64,
    #[serde(with = "rational::serde_str")]
    pub domain_measure: Rational,
    pub entries: Vec<ProfileEntry>,
}

impl ExpansionProfile {
    pub fn get(&self, alpha: &Rational, k: u32) -> Option<&ProfileEntry> {
        self.entries.iter().find(|e| &e.alpha == alpha && e.k == k)
    }

    pub fn c_star(&self, alpha: &Rational, k: u32) -> Option<&Rational> {
        self.get(alpha, k).map(|e| &e.c_star)
    }

    /// Nondecreasing in alpha for fixed k and in k for fixed alpha.
    pub fn is_monotone(&self) -> bool {
        self.entries.iter().all(|a| {
            self.entries.iter().all(|b| {
                let comparable = (a.k == b.k && a.alpha <= b.alpha) || (a.alpha == b.alpha && a.k <= b.k);
                !comparable || a.c_star <= b.c_star
            })
        })
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["alpha", "k", "c_star", "witness"]).unwrap();
        for e in &self.entries {
            let wit: Vec<String> = e.witness.iter().map(|i| i.to_string()).collect();
            w.write_record([
                rational::format(&e.alpha),
                e.k.to_string(),
                rational::format(&e.c_star),
                wit.join(" "),
            ])
            .unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }

    /// Reads the CSV form back; provenance fields are left empty.
    pub fn entries_from_csv(text: &str) -> Result<Vec<(Rational, u32, Rational, Vec<usize>)>> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut out = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let k = rec[1].parse().map_err(|_| Error::Parse(format!("bad k '{}'", &rec[1])))?;
            let wit = rec[3]
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad cell '{s}'"))))
                .collect::<Result<Vec<usize>>>()?;
            out.push((rational::parse(&rec[0])?, k, rational::parse(&rec[2])?, wit));
        }
        Ok(out)
    }
}

fn check_alphas(alphas: &[Rational]) -> Result<()> {
    let half = rational::rat(1, 2);
    for a in alphas {
        if a <= &Rational::zero() || a > &half {
            return Err(Error::InvalidRange(format!(
                "alpha {} outside (0, 1/2]",
                rational::format(a)
            )));
        }
    }
    Ok(())
}

/// Window of admissible weights alpha*total <= w <= total/2.
pub fn alpha_bounds(sys: &CellSystem, total: &Rational, alphas: &[Rational]) -> Vec<Bounds> {
    let upper = sys.floor_scaled(&(total / Rational::from_integer(2.into())));
    alphas
        .iter()
        .map(|a| Bounds { lower: sys.ceil_scaled(&(a * total)).max(1), upper })
        .collect()
}

struct Run<'a> {
    strategy: &'a dyn MinimizationStrategy,
    opts: &'a SearchOptions,
}

impl Run<'_> {
    fn entries(
        &self,
        alphas: &[Rational],
        ks: &[u32],
        total: &Rational,
        build: impl Fn(u32) -> Result<CellSystem>,
    ) -> Result<Vec<ProfileEntry>> {
        let mut out = Vec::new();
        for &k in ks {
            let sys = build(k)?;
            let bounds = alpha_bounds(&sys, total, alphas);
            let best = self.strategy.minimize(&sys, &bounds, self.opts)?;
            for (a, cand) in alphas.iter().zip(best) {
                let Some(c) = cand else { continue };
                let w = Rational::from_integer(c.weight.into());
                let cov = Rational::from_integer(c.covered.into());
                out.push(ProfileEntry {
                    alpha: a.clone(),
                    k,
                    c_star: (cov - &w) / &w,
                    witness: c.cells.iter().map(|&i| sys.labels[i]).collect(),
                    witness_measure: sys.to_rational(c.weight),
                });
            }
        }
        out.sort_by(|a, b| (a.k, &a.alpha).cmp(&(b.k, &b.alpha)));
        Ok(out)
    }
}

/// Profile of the whole action: A ranges over cell unions with alpha <= nu(A) <= 1/2.
pub fn expansion_profile(
    action: &ActionModel,
    alphas: &[Rational],
    ks: &[u32],
    strategy: &dyn MinimizationStrategy,
    granularity: &Granularity,
    opts: &SearchOptions,
) -> Result<ExpansionProfile> {
    let full = action.space().full_set();
    let mut p = domain_profile(action, &full, alphas, ks, strategy, granularity, opts)?;
    if p.entries.is_empty() && !ks.is_empty() && !alphas.is_empty() {
        return Err(Error::EmptyAdmissibleRange);
    }
    p.scope = Scope::Global;
    Ok(p)
}

/// Profile of a domain Y: A inside Y, thresholds scaled by nu(Y), N_k(A) cut back to Y.
pub fn domain_profile(
    action: &ActionModel,
    y: &Set,
    alphas: &[Rational],
    ks: &[u32],
    strategy: &dyn MinimizationStrategy,
    granularity: &Granularity,
    opts: &SearchOptions,
) -> Result<ExpansionProfile> {
    check_alphas(alphas)?;
    let total = action.measure(y)?;
    if total.is_zero() {
        return Err(Error::EmptyDomain);
    }
    let run = Run { strategy, opts };
    let entries = run.entries(alphas, ks, &total, |k| {
        action_system(action, granularity, y, &Neighborhood::Ball(k))
    })?;
    Ok(ExpansionProfile {
        scope: if total.is_one() { Scope::Global } else { Scope::Domain },
        strategy: strategy.name().into(),
        exact: strategy.is_exact(),
        granularity: granularity.describe(),
        seed: opts.seed,
        domain_measure: total,
        entries,
    })
}

/// Profile of a measured metric space: N_k is the metric k-neighbourhood.
pub fn metric_profile(
    space: &MeasuredMetricSpace,
    alphas: &[Rational],
    ks: &[u32],
    strategy: &dyn MinimizationStrategy,
    opts: &SearchOptions,
) -> Result<ExpansionProfile> {
    check_alphas(alphas)?;
    let run = Run { strategy, opts };
    let entries = run.entries(alphas, ks, &Rational::one(), |k| space.system(k as u64))?;
    if entries.is_empty() && !ks.is_empty() && !alphas.is_empty() {
        return Err(Error::EmptyAdmissibleRange);
    }
    Ok(ExpansionProfile {
        scope: Scope::MeasuredSpace,
        strategy: strategy.name().into(),
        exact: strategy.is_exact(),
        granularity: "points".into(),
        seed: opts.seed,
        domain_measure: Rational::one(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::Transform;
    use crate::expansion::engine::Exhaustive;
    use crate::group::GroupModel;
    use crate::measure::{AtomSet, Space, WeightedAtomSpace};
    use crate::rational::{int, rat};

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
    fn z8_half_profile() {
        let p = expansion_profile(
            &cycle(8),
            &[rat(1, 2)],
            &[0, 1],
            &Exhaustive,
            &Granularity::Atoms,
            &SearchOptions::default(),
        )
        .unwrap();
        assert_eq!(p.c_star(&rat(1, 2), 1), Some(&rat(1, 2)));
        assert_eq!(p.get(&rat(1, 2), 1).unwrap().witness, vec![0, 1, 2, 3]);
        assert_eq!(p.c_star(&rat(1, 2), 0), Some(&int(0)));
    }

    #[test]
    fn domain_of_six_atoms() {
        let a = cycle(8);
        let y = Set::Atoms(AtomSet::from_indices(8, 0..6).unwrap());
        let p = domain_profile(&a, &y, &[rat(1, 2)], &[1], &Exhaustive, &Granularity::Atoms, &SearchOptions::default())
            .unwrap();
        // only sets of measure exactly 3/8 are admissible; {0,1,2} touches the cut end
        assert_eq!(p.c_star(&rat(1, 2), 1), Some(&rat(1, 3)));
        assert_eq!(p.get(&rat(1, 2), 1).unwrap().witness, vec![0, 1, 2]);
        let single = Set::Atoms(AtomSet::from_indices(8, [3]).unwrap());
        let p = domain_profile(&a, &single, &[rat(1, 2)], &[1], &Exhaustive, &Granularity::Atoms, &SearchOptions::default())
            .unwrap();
        assert!(p.entries.is_empty());
    }

    #[test]
    fn csv_round_trip() {
        let p = expansion_profile(&cycle(6), &[rat(1, 6), rat(1, 2)], &[1], &Exhaustive, &Granularity::Atoms, &SearchOptions::default())
            .unwrap();
        let csv = p.to_csv();
        assert!(csv.starts_with("alpha,k,c_star,witness\n"));
        let back = ExpansionProfile::entries_from_csv(&csv).unwrap();
        assert_eq!(back.len(), p.entries.len());
        for (e, (a, k, c, w)) in p.entries.iter().zip(back) {
            assert_eq!((&e.alpha, e.k, &e.c_star, &e.witness), (&a, k, &c, &w));
        }
    }
}
