//! Constant manipulation for expansion functions: extension past one half,
//! boosting to a constant, subsets of domains, one-step reduction to a
//! generating set, homogeneous amplification and the measured/ordinary bridge.

use super::profile::ExpansionProfile;
use crate::action::{ActionModel, Transform};
use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::rational::{self, int, rat, Rational};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

/// One sample (alpha, k(alpha), c(alpha)) of an expansion function.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionPoint {
    #[serde(with = "rational::serde_str")]
    pub alpha: Rational,
    pub k: u32,
    #[serde(with = "rational::serde_str")]
    pub c: Rational,
}

/// Expansion function sampled on a grid of alphas, sorted by alpha. The claim
/// at alpha covers every set with measure in [alpha, 1/2] (relative to Y).
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ExpansionFunction {
    pub points: Vec<FunctionPoint>,
}

impl ExpansionFunction {
    pub fn new(mut points: Vec<FunctionPoint>) -> Self {
        points.sort_by(|a, b| a.alpha.cmp(&b.alpha));
        points.dedup_by(|a, b| a.alpha == b.alpha);
        ExpansionFunction { points }
    }

    pub fn constant(c: Rational, k: u32, alphas: &[Rational]) -> Self {
        Self::new(alphas.iter().map(|a| FunctionPoint { alpha: a.clone(), k, c: c.clone() }).collect())
    }

    /// Reads c at a fixed k, or at the smallest k with positive c when k is None.
    pub fn from_profile(profile: &ExpansionProfile, k: Option<u32>) -> Self {
        let mut points: Vec<FunctionPoint> = Vec::new();
        let mut entries: Vec<_> = profile.entries.iter().collect();
        entries.sort_by(|a, b| (&a.alpha, a.k).cmp(&(&b.alpha, b.k)));
        for e in entries {
            let wanted = match k {
                Some(k) => e.k == k,
                None => e.c_star > Rational::zero(),
            };
            if wanted && points.last().map_or(true, |p| p.alpha != e.alpha) {
                points.push(FunctionPoint { alpha: e.alpha.clone(), k: e.k, c: e.c_star.clone() });
            }
        }
        Self::new(points)
    }

    /// Multiplies every c by factor; factor < 1 turns attained minima into strict bounds.
    pub fn scaled(&self, factor: &Rational) -> Self {
        Self::new(
            self.points
                .iter()
                .map(|p| FunctionPoint { alpha: p.alpha.clone(), k: p.k, c: &p.c * factor })
                .collect(),
        )
    }

    pub fn lookup(&self, alpha: &Rational) -> Option<&FunctionPoint> {
        self.points.iter().find(|p| &p.alpha == alpha)
    }

    /// Sample at the largest grid alpha' <= alpha, valid on the smaller range.
    pub fn lower_bound_at(&self, alpha: &Rational) -> Option<&FunctionPoint> {
        self.points.iter().rev().find(|p| &p.alpha <= alpha)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BetaExtension {
    #[serde(with = "rational::serde_str")]
    pub beta: Rational,
    pub h: u32,
    #[serde(with = "rational::serde_str")]
    pub b: Rational,
    /// Grid alpha actually used for (1 - beta)/2.
    #[serde(with = "rational::serde_str")]
    pub alpha_used: Rational,
}

/// (b, h) with nu(B_h A cap Y) > (1+b) nu(A) for 1/2 <= nu(A) <= beta:
/// h = k((1-beta)/2), b = min{(1-beta)/(2beta), c((1-beta)/2)(1-beta)/(2beta)}.
pub fn extend_profile_above_half(f: &ExpansionFunction, betas: &[Rational]) -> Result<Vec<BetaExtension>> {
    let half = rat(1, 2);
    betas
        .iter()
        .map(|beta| {
            if beta < &half || beta >= &Rational::one() {
                return Err(Error::InvalidRange(format!("beta {} outside [1/2, 1)", rational::format(beta))));
            }
            let alpha = (Rational::one() - beta) / int(2);
            let p = f.lookup(&alpha).or_else(|| f.lower_bound_at(&alpha)).ok_or_else(|| {
                Error::ProfileGap(format!("no sample at or below alpha = {}", rational::format(&alpha)))
            })?;
            let base = (Rational::one() - beta) / (int(2) * beta);
            let b = rational::min(&base, &(&p.c * &base));
            Ok(BetaExtension { beta: beta.clone(), h: p.k, b, alpha_used: p.alpha.clone() })
        })
        .collect()
}

const MAX_STEPS: u32 = 100_000;

/// Least m >= 1 with (1+b)^m * start > target (strict) or >= (not strict).
fn steps_to_exceed(b: &Rational, start: &Rational, target: &Rational, strict: bool) -> Result<u32> {
    let growth = Rational::one() + b;
    let mut v = start * &growth;
    for m in 1..=MAX_STEPS {
        if if strict { &v > target } else { &v >= target } {
            return Ok(m);
        }
        v *= &growth;
    }
    Err(Error::InvalidConstant(format!("b = {} needs more than {MAX_STEPS} steps", rational::format(b))))
}

/// k = m h with m the least integer such that (1+b)^m >= 1+c.
pub fn boost_to_constant(b: &Rational, h: u32, c: &Rational) -> Result<u32> {
    if c <= &Rational::zero() || c >= &Rational::one() {
        return Err(Error::InvalidConstant(format!("c = {} must lie in (0,1)", rational::format(c))));
    }
    if b <= &Rational::zero() {
        return Err(Error::InvalidConstant(format!("b = {} must be positive", rational::format(b))));
    }
    if h == 0 {
        return Err(Error::InvalidConstant("h must be at least 1".into()));
    }
    let m = steps_to_exceed(b, &Rational::one(), &(Rational::one() + c), false)?;
    Ok(m * h)
}

/// m0, the least integer with (1+b)^m0 * alpha > beta.
pub fn subset_domain_steps(b: &Rational, alpha: &Rational, beta: &Rational) -> Result<u32> {
    if !(&Rational::zero() < alpha && alpha < beta && beta < &Rational::one()) {
        return Err(Error::InvalidRange("need 0 < alpha < beta < 1".into()));
    }
    if b <= &Rational::zero() {
        return Err(Error::InvalidRange("b must be positive".into()));
    }
    steps_to_exceed(b, alpha, beta, true)
}

/// k = m0 k0; B_k pushes every set of measure in [alpha, beta] past beta.
pub fn subset_domain_bound(b: &Rational, k0: u32, alpha: &Rational, beta: &Rational) -> Result<u32> {
    Ok(subset_domain_steps(b, alpha, beta)? * k0)
}

/// Products of exactly n elements of S, deduplicated.
pub fn power_transforms(action: &ActionModel, s: &[GroupElement], n: u32) -> Result<Vec<Transform>> {
    let gens: Vec<Transform> = s.iter().map(|g| action.transform(g)).collect::<Result<_>>()?;
    let mut cur = vec![Transform::identity_for(action.space())];
    for _ in 0..n {
        let mut next: Vec<Transform> = Vec::new();
        for t in &cur {
            for g in &gens {
                let p = g.compose(t)?;
                if !next.contains(&p) {
                    next.push(p);
                }
            }
        }
        cur = next;
    }
    Ok(cur)
}

/// nu(S^(k-1) . Z_D), Z_D the points where some gamma in S^(k-1) has ratio >= D.
pub fn bad_mass(action: &ActionModel, s: &[GroupElement], k: u32, d: &Rational) -> Result<Rational> {
    let ts = power_transforms(action, s, k.saturating_sub(1))?;
    let mut z = action.space().empty_set();
    for t in &ts {
        z = z.union(&crate::action::ratio_of(t, action.space()).at_least(d))?;
    }
    let mut img = action.space().empty_set();
    for t in &ts {
        img = img.union(&t.apply(&z)?)?;
    }
    action.measure(&img)
}

/// Smallest D among the attained ratios and max ratio + 1 with bad mass below eps.
pub fn choose_d(action: &ActionModel, s: &[GroupElement], k: u32, eps: &Rational) -> Result<Rational> {
    let ts = power_transforms(action, s, k.saturating_sub(1))?;
    let mut cands: Vec<Rational> = Vec::new();
    for t in &ts {
        let r = crate::action::ratio_of(t, action.space());
        match r {
            crate::action::TransportRatio::Atoms(v) => cands.extend(v),
            crate::action::TransportRatio::Pieces(v) => cands.extend(v.into_iter().map(|p| p.2)),
        }
    }
    let top = cands.iter().fold(Rational::zero(), |m, r| rational::max(&m, r));
    cands.push(top + Rational::one());
    cands.sort();
    cands.dedup();
    for d in cands {
        if d > Rational::zero() && &bad_mass(action, s, k, &d)? < eps {
            return Ok(d);
        }
    }
    Err(Error::NoValidD(format!("no D reaches bad mass below {}", rational::format(eps))))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneStep {
    #[serde(with = "rational::serde_str")]
    pub c_prime: Rational,
    #[serde(with = "rational::serde_str")]
    pub d: Rational,
    #[serde(with = "rational::serde_str")]
    pub bad_mass: Rational,
}

/// c' = (c_alpha - eps/alpha) / (|S|^(k-1) D).
pub fn one_step_reduction(
    action: &ActionModel,
    c_alpha: &Rational,
    alpha: &Rational,
    k: u32,
    s: &[GroupElement],
    d: &Rational,
    eps: &Rational,
) -> Result<OneStep> {
    if eps <= &Rational::zero() || eps >= &(alpha * c_alpha) {
        return Err(Error::EpsilonTooLarge);
    }
    action.check_symmetric(s)?;
    if k == 0 {
        return Err(Error::InvalidRange("k must be at least 1".into()));
    }
    let mass = bad_mass(action, s, k, d)?;
    if &mass >= eps {
        return Err(Error::NoValidD(format!(
            "bad mass {} at D = {} is not below {}",
            rational::format(&mass),
            rational::format(d),
            rational::format(eps)
        )));
    }
    let size = Rational::from_integer(s.len().into());
    let denom = num_traits::pow(size, (k - 1) as usize) * d;
    Ok(OneStep { c_prime: (c_alpha - eps / alpha) / denom, d: d.clone(), bad_mass: mass })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Amplification {
    pub phi: f64,
    pub c_uniform: f64,
    /// Rational lower bound for phi * c.
    #[serde(with = "rational::serde_str")]
    pub c_uniform_lower: Rational,
}

/// phi = exp(-1/((1-delta)(1-alpha0/2))), c_uniform = phi c.
pub fn homogeneous_amplification(c: &Rational, alpha0: &Rational, delta: &Rational) -> Result<Amplification> {
    if alpha0 <= &Rational::zero() || alpha0 > &rat(1, 4) {
        return Err(Error::InvalidRange("alpha0 must lie in (0, 1/4]".into()));
    }
    // delta > 4 - 2 sqrt 3  <=>  (4 - delta)^2 < 12
    let gap = int(4) - delta;
    if delta >= &Rational::one() || &gap * &gap >= int(12) {
        return Err(Error::DeltaOutOfRange);
    }
    let phi = phi(rational::to_f64(delta), rational::to_f64(alpha0) / 2.0);
    let scale = 1u64 << 52;
    let lower = rat(((phi * scale as f64).floor() as i64 - 1).max(0), scale as i64);
    Ok(Amplification { phi, c_uniform: phi * rational::to_f64(c), c_uniform_lower: lower * c })
}

pub fn phi(delta: f64, c: f64) -> f64 {
    (-1.0 / ((1.0 - delta) * (1.0 - c))).exp()
}

/// min over n <= steps of a_n / a_0 for a_{n+1} = (1 - delta^n C) a_n, a_0 = 1,
/// in direct and log form.
pub fn amplification_iteration(delta: f64, c: f64, steps: usize) -> (f64, f64) {
    let (mut a, mut log_a) = (1.0f64, 0.0f64);
    let (mut min_a, mut min_log) = (1.0f64, 0.0f64);
    let mut p = 1.0f64;
    for _ in 0..steps {
        a *= 1.0 - p * c;
        log_a += (-p * c).ln_1p();
        min_a = min_a.min(a);
        min_log = min_log.min(log_a);
        p *= delta;
    }
    (min_a, min_log.exp())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrdinaryPoint {
    #[serde(with = "rational::serde_str")]
    pub alpha: Rational,
    pub k: u32,
    /// Guaranteed constant min(c(alpha/Q^2), b(beta))/Q^2.
    #[serde(with = "rational::serde_str")]
    pub c_low: Rational,
    /// Direct transfer c(alpha/Q^2)/Q^2.
    #[serde(with = "rational::serde_str")]
    pub c_high: Rational,
}

/// Counting-measure function from a measured one under measure ratio Q.
/// Q = 1 returns the input unchanged.
pub fn measured_to_ordinary(f: &ExpansionFunction, q: &Rational) -> Result<Vec<OrdinaryPoint>> {
    if q < &Rational::one() {
        return Err(Error::InvalidRange(format!("measure ratio {} is below 1", rational::format(q))));
    }
    if q.is_one() {
        return Ok(f
            .points
            .iter()
            .map(|p| OrdinaryPoint { alpha: p.alpha.clone(), k: p.k, c_low: p.c.clone(), c_high: p.c.clone() })
            .collect());
    }
    let q2 = q * q;
    let beta = &q2 / (&q2 + Rational::one());
    let ext = extend_profile_above_half(f, &[beta])?.remove(0);
    let mut out = Vec::new();
    for p in &f.points {
        let alpha = &p.alpha * &q2;
        if alpha > rat(1, 2) {
            continue;
        }
        out.push(OrdinaryPoint {
            alpha,
            k: p.k.max(ext.h),
            c_low: rational::min(&p.c, &ext.b) / &q2,
            c_high: &p.c / &q2,
        });
    }
    Ok(out)
}

/// Whether every cell-union A of the system with measure in [lo, hi] (scaled)
/// satisfies covered > (1 + c) weight; returns the first failing witness.
pub fn check_growth(
    sys: &super::cells::CellSystem,
    lo: &Rational,
    hi: &Rational,
    c: &Rational,
) -> Option<Vec<usize>> {
    use super::engine::{exact_min_ratio, Bounds};
    let lower = sys.ceil_scaled(lo).max(1);
    let upper = sys.floor_scaled(hi);
    if lower > upper {
        return None;
    }
    let best = exact_min_ratio(sys, &[Bounds { lower, upper }]).pop().flatten()?;
    let ratio = Rational::new(best.covered.into(), best.weight.into());
    if ratio > Rational::one() + c {
        None
    } else {
        Some(best.cells)
    }
}
