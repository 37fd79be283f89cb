//! Følner sets relative to an excised region, domain verification, and
//! exhaustions of a domain by domains of expansion.

use crate::action::ActionModel;
use crate::error::{Error, Result};
use crate::expansion::cells::{action_system, cells_to_set, CellSystem, Granularity, Neighborhood};
use crate::expansion::engine::{exact_max_folner, exact_min_ratio, Bounds, Candidate, SearchOptions};
use crate::expansion::transforms::ExpansionFunction;
use crate::group::GroupElement;
use crate::measure::{Set, SetRepr, Space};
use crate::rational::{self, int, rat, Rational};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// A minimising cell union with its neighbourhood ratio.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    /// Granularity cell indices.
    pub cells: Vec<usize>,
    pub set: SetRepr,
    #[serde(with = "rational::serde_str")]
    pub measure: Rational,
    /// nu(N(A) cap region) / nu(A)
    #[serde(with = "rational::serde_str")]
    pub ratio: Rational,
}

fn system(action: &ActionModel, region: &Set, nbhd: &Neighborhood, gran: &Granularity, opts: &SearchOptions) -> Result<CellSystem> {
    let sys = action_system(action, gran, region, nbhd)?;
    let limit = opts.max_exact_cells.min(62);
    if sys.len() > limit {
        return Err(Error::TooLarge { cells: sys.len(), limit });
    }
    Ok(sys)
}

fn witness_of(action: &ActionModel, region: &Set, gran: &Granularity, sys: &CellSystem, c: &Candidate) -> Result<Witness> {
    let cells: Vec<usize> = c.cells.iter().map(|&i| sys.labels[i]).collect();
    let set = cells_to_set(action.space(), gran, region, &cells)?;
    Ok(Witness {
        cells,
        set: SetRepr::from_set(&set),
        measure: sys.to_rational(c.weight),
        ratio: Rational::new(c.covered.into(), c.weight.into()),
    })
}

/// Exact minimiser of nu(N(A) cap region)/nu(A) over cell unions A of the region
/// with lo <= nu(A) <= hi (absolute measures, empty A excluded).
pub fn min_ratio_in(
    action: &ActionModel,
    region: &Set,
    nbhd: &Neighborhood,
    gran: &Granularity,
    lo: &Rational,
    hi: &Rational,
    opts: &SearchOptions,
) -> Result<Option<Witness>> {
    if action.measure(region)?.is_zero() {
        return Ok(None);
    }
    let sys = system(action, region, nbhd, gran, opts)?;
    let lower = sys.ceil_scaled(lo).max(1);
    let upper = sys.floor_scaled(hi);
    if lower > upper {
        return Ok(None);
    }
    match exact_min_ratio(&sys, &[Bounds { lower, upper }]).pop().flatten() {
        None => Ok(None),
        Some(c) => Ok(Some(witness_of(action, region, gran, &sys, &c)?)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainCheck {
    pub holds: bool,
    #[serde(with = "rational::serde_str")]
    pub c: Rational,
    /// Minimiser over all admissible A; None when no A is admissible.
    pub witness: Option<Witness>,
}

impl DomainCheck {
    /// Best constant: min ratio - 1.
    pub fn c_star(&self) -> Option<Rational> {
        self.witness.as_ref().map(|w| &w.ratio - Rational::one())
    }
}

/// Whether nu(N(A) cap Y) > (1+c) nu(A) for every cell union A in Y with 0 < nu(A) <= nu(Y)/2.
pub fn verify_domain(
    action: &ActionModel,
    y: &Set,
    c: &Rational,
    nbhd: &Neighborhood,
    gran: &Granularity,
    opts: &SearchOptions,
) -> Result<DomainCheck> {
    let half = action.measure(y)? / int(2);
    verify_window(action, y, c, nbhd, gran, &Rational::zero(), &half, opts)
}

#[allow(clippy::too_many_arguments)]
fn verify_window(
    action: &ActionModel,
    y: &Set,
    c: &Rational,
    nbhd: &Neighborhood,
    gran: &Granularity,
    lo: &Rational,
    hi: &Rational,
    opts: &SearchOptions,
) -> Result<DomainCheck> {
    let witness = min_ratio_in(action, y, nbhd, gran, lo, hi, opts)?;
    let holds = witness.as_ref().map_or(true, |w| w.ratio > Rational::one() + c);
    Ok(DomainCheck { holds, c: c.clone(), witness })
}

fn neighborhood_set(action: &ActionModel, nbhd: &Neighborhood, a: &Set) -> Result<Set> {
    match nbhd {
        Neighborhood::Ball(k) => action.k_neighborhood(*k, a),
        Neighborhood::Elements(s) => a.union(&action.image_under(s, a)?),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FolnerAudit {
    pub holds: bool,
    #[serde(with = "rational::serde_str")]
    pub measure: Rational,
    #[serde(with = "rational::serde_str")]
    pub half_domain: Rational,
    /// nu((N(A) cap Y) minus (A union Z))
    #[serde(with = "rational::serde_str")]
    pub boundary_measure: Rational,
    /// eps * nu(A)
    #[serde(with = "rational::serde_str")]
    pub allowed: Rational,
}

/// nu(A) <= nu(Y)/2 and nu((boundary A cap Y) minus Z) <= eps nu(A), for A inside Y minus Z.
pub fn is_folner(
    action: &ActionModel,
    y: &Set,
    z: &Set,
    eps: &Rational,
    nbhd: &Neighborhood,
    a: &Set,
) -> Result<FolnerAudit> {
    let outside = y.difference(z)?;
    if !a.is_subset(&outside)? {
        return Err(Error::NotASubset);
    }
    let boundary = neighborhood_set(action, nbhd, a)?.intersect(&outside)?.difference(a)?;
    let measure = action.measure(a)?;
    let half_domain = action.measure(y)? / int(2);
    let boundary_measure = action.measure(&boundary)?;
    let allowed = eps * &measure;
    Ok(FolnerAudit {
        holds: measure <= half_domain && boundary_measure <= allowed,
        measure,
        half_domain,
        boundary_measure,
        allowed,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FolnerCertificate {
    pub f: SetRepr,
    pub f_cells: Vec<usize>,
    pub y: SetRepr,
    pub z: SetRepr,
    #[serde(with = "rational::serde_str")]
    pub epsilon: Rational,
    pub neighborhood: Neighborhood,
    #[serde(with = "rational::serde_str")]
    pub measure: Rational,
    #[serde(with = "rational::serde_str")]
    pub boundary_measure: Rational,
    /// No cell can be added while keeping both Følner conditions.
    pub maximal: bool,
    /// "exhaustive" (heaviest Følner union, maximal under inclusion) or "greedy".
    pub method: String,
    pub granularity: String,
}

fn ratio_parts(r: &Rational) -> Result<(u64, u64)> {
    if r.is_negative() {
        return Err(Error::InvalidRange("epsilon must be nonnegative".into()));
    }
    match (r.numer().to_u64(), r.denom().to_u64()) {
        (Some(p), Some(q)) if p < (1 << 40) && q < (1 << 40) => Ok((p, q)),
        _ => Err(Error::InvalidRange(format!("epsilon {} has oversized terms", rational::format(r)))),
    }
}

fn greedy_folner(sys: &CellSystem, upper: u64, p: u64, q: u64) -> Candidate {
    let ok = |w: u64, c: u64| w <= upper && (c as u128) * q as u128 <= (q + p) as u128 * w as u128;
    let mut cells: Vec<usize> = Vec::new();
    let mut cov = 0u64;
    let mut w = 0u64;
    loop {
        let mut best: Option<(u64, usize, u64)> = None;
        for x in 0..sys.len() {
            if cells.contains(&x) {
                continue;
            }
            let mut next = cells.clone();
            next.push(x);
            let nc = sys.covered_of(&next);
            let nw = w + sys.cell_weight[x];
            if !ok(nw, nc) {
                continue;
            }
            // boundary increment (nc - nw) - (cov - w), ties by index
            let inc = (nc + w).saturating_sub(nw + cov);
            if best.map_or(true, |b| inc < b.0) {
                best = Some((inc, x, nc));
            }
        }
        match best {
            None => break,
            Some((_, x, nc)) => {
                cells.push(x);
                w += sys.cell_weight[x];
                cov = nc;
            }
        }
    }
    cells.sort_unstable();
    Candidate { cells, covered: cov, weight: w }
}

/// Maximal (eps, N)-Følner set in Y relative to Z. Up to the exact cell limit
/// it is the heaviest Følner cell union (lexicographically least on ties);
/// above it, a greedy cell-maximal set.
pub fn maximal_folner(
    action: &ActionModel,
    y: &Set,
    z: &Set,
    eps: &Rational,
    nbhd: &Neighborhood,
    gran: &Granularity,
    opts: &SearchOptions,
) -> Result<FolnerCertificate> {
    let region = y.difference(z)?;
    let (p, q) = ratio_parts(eps)?;
    let space = action.space();
    let empty = |method: &str| FolnerCertificate {
        f: SetRepr::from_set(&space.empty_set()),
        f_cells: Vec::new(),
        y: SetRepr::from_set(y),
        z: SetRepr::from_set(z),
        epsilon: eps.clone(),
        neighborhood: nbhd.clone(),
        measure: Rational::zero(),
        boundary_measure: Rational::zero(),
        maximal: true,
        method: method.into(),
        granularity: gran.describe(),
    };
    if action.measure(&region)?.is_zero() {
        return Ok(empty("exhaustive"));
    }
    let sys = action_system(action, gran, &region, nbhd)?;
    let upper = sys.floor_scaled(&(action.measure(y)? / int(2)));
    let exhaustive = sys.len() <= opts.max_exact_cells.min(62);
    let best = if exhaustive { exact_max_folner(&sys, upper, p, q) } else { greedy_folner(&sys, upper, p, q) };
    let method = if exhaustive { "exhaustive" } else { "greedy" };
    if best.cells.is_empty() {
        return Ok(empty(method));
    }
    let w = witness_of(action, &region, gran, &sys, &best)?;
    Ok(FolnerCertificate {
        f: w.set,
        f_cells: w.cells,
        measure: sys.to_rational(best.weight),
        boundary_measure: sys.to_rational(best.covered - best.weight),
        ..empty(method)
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplementReport {
    pub passed: bool,
    /// No admissible A exists.
    pub vacuous: bool,
    /// Minimiser of the boundary ratio over admissible A; a violation when !passed.
    pub witness: Option<Witness>,
}

/// Checks nu((boundary A cap Y) minus (F union Z)) > eps nu(A) for every cell
/// union A in Y minus (F union Z) with 0 < nu(A) <= nu(Y)/2 - nu(F).
pub fn complement_expansion_check(
    action: &ActionModel,
    cert: &FolnerCertificate,
    gran: &Granularity,
    opts: &SearchOptions,
) -> Result<ComplementReport> {
    if !cert.maximal {
        return Err(Error::NotMaximal);
    }
    let space = action.space();
    let y = cert.y.to_set(space)?;
    let excised = cert.f.to_set(space)?.union(&cert.z.to_set(space)?)?;
    let region = y.difference(&excised)?;
    let hi = action.measure(&y)? / int(2) - &cert.measure;
    if hi <= Rational::zero() {
        return Ok(ComplementReport { passed: true, vacuous: true, witness: None });
    }
    let witness = min_ratio_in(action, &region, &cert.neighborhood, gran, &Rational::zero(), &hi, opts)?;
    Ok(match witness {
        None => ComplementReport { passed: true, vacuous: true, witness: None },
        Some(w) => ComplementReport {
            passed: w.ratio > Rational::one() + &cert.epsilon,
            vacuous: false,
            witness: Some(w),
        },
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExhaustionStage {
    pub n: usize,
    pub z: SetRepr,
    /// Measures below are relative to nu(Y).
    #[serde(with = "rational::serde_str")]
    pub z_measure: Rational,
    #[serde(with = "rational::serde_str::opt")]
    pub alpha: Option<Rational>,
    pub k: Option<u32>,
    pub m: Option<u32>,
    #[serde(with = "rational::serde_str")]
    pub folner_epsilon: Rational,
    pub f: SetRepr,
    #[serde(with = "rational::serde_str")]
    pub f_measure: Rational,
    #[serde(with = "rational::serde_str")]
    pub f_bound: Rational,
    pub f_bound_ok: bool,
    pub ybar: SetRepr,
    #[serde(with = "rational::serde_str")]
    pub ybar_measure: Rational,
    /// Constant the stage domain is checked against.
    #[serde(with = "rational::serde_str")]
    pub ybar_c: Rational,
    /// Best constant of the stage domain (min ratio - 1).
    #[serde(with = "rational::serde_str::opt")]
    pub ybar_c_star: Option<Rational>,
    pub ybar_verified: bool,
    pub ybar_witness: Option<Witness>,
    pub y_union: SetRepr,
    #[serde(with = "rational::serde_str")]
    pub y_union_measure: Rational,
    pub union_k: Option<u32>,
    pub union_verified: bool,
    pub verified: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExhaustionReport {
    pub schema: String,
    /// "ball" for (c, k_n) stages, "generating-set" for (c_n, S) stages.
    pub mode: String,
    pub y: SetRepr,
    #[serde(with = "rational::serde_str")]
    pub y_measure: Rational,
    #[serde(with = "rational::serde_str::opt")]
    pub c: Option<Rational>,
    #[serde(with = "rational::serde_str")]
    pub threshold: Rational,
    pub n0: usize,
    pub k_cap: u32,
    pub granularity: String,
    pub m_schedule: Vec<u32>,
    pub stages: Vec<ExhaustionStage>,
}

impl ExhaustionReport {
    pub fn all_verified(&self) -> bool {
        !self.stages.is_empty() && self.stages.iter().all(|s| s.verified)
    }

    pub fn union_nondecreasing(&self) -> bool {
        self.stages.windows(2).all(|w| w[0].y_union_measure <= w[1].y_union_measure)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "mode {}  N0 {}  threshold {}  k cap {}",
            self.mode,
            self.n0,
            rational::format(&self.threshold),
            self.k_cap
        );
        let _ = writeln!(out, "{:>3} {:>10} {:>10} {:>4} {:>10} {:>10} {:>10} {:>6} {:>8}", "n", "nu(Z)", "alpha", "k/m", "nu(F)", "nu(Ybar)", "nu(Y_n)", "k'", "verified");
        for s in &self.stages {
            let km = s.k.or(s.m).map_or("-".into(), |v| v.to_string());
            let _ = writeln!(
                out,
                "{:>3} {:>10} {:>10} {:>4} {:>10} {:>10} {:>10} {:>6} {:>8}",
                s.n,
                rational::format(&s.z_measure),
                s.alpha.as_ref().map_or("-".into(), rational::format),
                km,
                rational::format(&s.f_measure),
                rational::format(&s.ybar_measure),
                rational::format(&s.y_union_measure),
                s.union_k.map_or("-".into(), |v| v.to_string()),
                s.verified
            );
        }
        out
    }
}

/// Twice the largest finite Schreier distance (atom models) or twice the cell count.
pub fn default_k_cap(action: &ActionModel, gran: &Granularity) -> Result<u32> {
    match action.space() {
        Space::Atoms(w) => {
            let mut diam = 0;
            for i in 0..w.len() {
                let d = action.schreier_distances(&[i], u32::MAX)?;
                diam = diam.max(d.into_iter().flatten().max().unwrap_or(0));
            }
            Ok((2 * diam).max(1))
        }
        Space::UnitInterval => Ok((2 * gran.cells(action.space()).len() as u32).max(1)),
    }
}

fn validate_sequence(y: &Set, zs: &[Set]) -> Result<()> {
    for z in zs {
        if !z.is_subset(y)? {
            return Err(Error::NotASubset);
        }
    }
    for w in zs.windows(2) {
        if !w[1].is_subset(&w[0])? {
            return Err(Error::InvalidRange("excision sequence is not nested".into()));
        }
    }
    Ok(())
}

fn min_cell_measure(action: &ActionModel, y: &Set, gran: &Granularity) -> Result<Rational> {
    let mut best: Option<Rational> = None;
    for c in gran.cells(action.space()) {
        let m = action.measure(&c.intersect(y)?)?;
        if m > Rational::zero() && best.as_ref().map_or(true, |b| &m < b) {
            best = Some(m);
        }
    }
    best.ok_or(Error::EmptyDomain)
}

struct Stage<'a> {
    action: &'a ActionModel,
    y: &'a Set,
    ny: Rational,
    gran: &'a Granularity,
    opts: &'a SearchOptions,
    cap: u32,
}

impl Stage<'_> {
    fn rel(&self, s: &Set) -> Result<Rational> {
        Ok(self.action.measure(s)? / &self.ny)
    }

    /// Smallest k <= cap with (c, k)-expansion on [lo, nu(Y)/2] inside region.
    fn find_k(&self, region: &Set, c: &Rational, lo: &Rational) -> Result<Option<u32>> {
        let hi = self.action.measure(region)? / int(2);
        for k in 1..=self.cap {
            if verify_window(self.action, region, c, &Neighborhood::Ball(k), self.gran, lo, &hi, self.opts)?.holds {
                return Ok(Some(k));
            }
        }
        Ok(None)
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        n: usize,
        z: &Set,
        alpha: Option<Rational>,
        k: Option<u32>,
        m: Option<u32>,
        cert: &FolnerCertificate,
        f_bound: Rational,
        f_bound_ok: bool,
        ybar_c: Rational,
        nbhd: &Neighborhood,
        union: &mut Set,
    ) -> Result<ExhaustionStage> {
        let space = self.action.space();
        let f = cert.f.to_set(space)?;
        let ybar = self.y.difference(&z.union(&f)?)?;
        let check = verify_domain(self.action, &ybar, &ybar_c, nbhd, self.gran, self.opts)?;
        *union = union.union(&ybar)?;
        let (union_k, union_verified) = match nbhd {
            Neighborhood::Ball(_) => {
                let uk = self.find_k(union, &ybar_c, &Rational::zero())?;
                (uk, uk.is_some())
            }
            Neighborhood::Elements(_) => {
                (None, verify_domain(self.action, union, &Rational::zero(), nbhd, self.gran, self.opts)?.holds)
            }
        };
        let ybar_measure = self.rel(&ybar)?;
        let ybar_verified = check.holds && ybar_measure > Rational::zero();
        Ok(ExhaustionStage {
            n,
            z: SetRepr::from_set(z),
            z_measure: self.rel(z)?,
            alpha,
            k,
            m,
            folner_epsilon: cert.epsilon.clone(),
            f: cert.f.clone(),
            f_measure: &cert.measure / &self.ny,
            f_bound,
            f_bound_ok,
            ybar: SetRepr::from_set(&ybar),
            ybar_measure,
            ybar_c_star: check.c_star(),
            ybar_c,
            ybar_verified,
            ybar_witness: check.witness,
            y_union: SetRepr::from_set(union),
            y_union_measure: self.rel(union)?,
            union_k,
            union_verified,
            verified: f_bound_ok && ybar_verified && union_verified,
        })
    }
}

/// Exhaustion of Y by domains of (c/2, k_n)-expansion Y minus (Z_n union F_n),
/// for the stages with nu(Z_n) < c^2/(8(c+1)) nu(Y).
pub fn build_exhaustion(
    action: &ActionModel,
    y: &Set,
    c: &Rational,
    zs: &[Set],
    gran: &Granularity,
    opts: &SearchOptions,
) -> Result<ExhaustionReport> {
    if c <= &Rational::zero() || c >= &Rational::one() {
        return Err(Error::InvalidConstant(format!("c = {} must lie in (0,1)", rational::format(c))));
    }
    let ny = action.measure(y)?;
    if ny.is_zero() {
        return Err(Error::EmptyDomain);
    }
    validate_sequence(y, zs)?;
    let st = Stage { action, y, ny: ny.clone(), gran, opts, cap: default_k_cap(action, gran)? };
    let threshold = c * c / (int(8) * (c + Rational::one()));
    let mut n0 = 0;
    while n0 < zs.len() && st.rel(&zs[n0])? >= threshold {
        n0 += 1;
    }
    if n0 == zs.len() {
        return Err(Error::NoValidStage);
    }
    let half_c = c / int(2);
    let cell_min = min_cell_measure(action, y, gran)? / &ny;
    let mut union = action.space().empty_set();
    let mut stages = Vec::new();
    for (i, z) in zs.iter().enumerate().skip(n0) {
        let zrel = st.rel(z)?;
        let alpha = rational::min(&rat(1, 2), &if zrel.is_zero() { cell_min.clone() } else { &zrel / c });
        let k = st.find_k(y, c, &(&alpha * &ny))?.ok_or_else(|| {
            Error::VerificationFailed(format!(
                "stage {}: no k <= {} gives ({}, k)-expansion above alpha = {}",
                i + 1,
                st.cap,
                rational::format(c),
                rational::format(&alpha)
            ))
        })?;
        let nbhd = Neighborhood::Ball(k);
        let cert = maximal_folner(action, y, z, &half_c, &nbhd, gran, opts)?;
        let f_rel = &cert.measure / &ny;
        let f_bound = &zrel * int(2) / c;
        let f_bound_ok = if zrel.is_zero() { f_rel.is_zero() } else { f_rel < f_bound };
        stages.push(st.finish(i + 1, z, Some(alpha), Some(k), None, &cert, f_bound, f_bound_ok, half_c.clone(), &nbhd, &mut union)?);
    }
    Ok(ExhaustionReport {
        schema: "v1".into(),
        mode: "ball".into(),
        y: SetRepr::from_set(y),
        y_measure: ny,
        c: Some(c.clone()),
        threshold,
        n0,
        k_cap: st.cap,
        granularity: gran.describe(),
        m_schedule: Vec::new(),
        stages,
    })
}

/// Exhaustion by domains of (c_n, S)-expansion from a profile c(alpha) of Y
/// under S, with c_m = c(1/m) and nu(Z_n) <= c_m(n) / (2 m(n)).
pub fn build_exhaustion_s(
    action: &ActionModel,
    y: &Set,
    s: &[GroupElement],
    profile: &ExpansionFunction,
    zs: &[Set],
    gran: &Granularity,
    opts: &SearchOptions,
) -> Result<ExhaustionReport> {
    action.check_symmetric(s)?;
    let ny = action.measure(y)?;
    if ny.is_zero() {
        return Err(Error::EmptyDomain);
    }
    validate_sequence(y, zs)?;
    let nbhd = Neighborhood::Elements(s.to_vec());
    let half = &ny / int(2);
    for p in &profile.points {
        let chk = verify_window(action, y, &p.c, &nbhd, gran, &(&p.alpha * &ny), &half, opts)?;
        if !chk.holds {
            let w = chk.witness.expect("failing check has a witness");
            return Err(Error::VerificationFailed(format!(
                "profile claims c({}) = {} but cells {:?} have ratio {}",
                rational::format(&p.alpha),
                rational::format(&p.c),
                w.cells,
                rational::format(&w.ratio)
            )));
        }
    }
    let alpha_min = profile
        .points
        .first()
        .map(|p| p.alpha.clone())
        .ok_or_else(|| Error::ProfileGap("empty profile".into()))?;
    let m_max = rational::floor_u64(&(Rational::one() / &alpha_min)) as u32;
    let c_m = |m: u32| profile.lower_bound_at(&rat(1, m as i64)).map(|p| p.c.clone());
    let c2 = c_m(2).filter(|_| m_max >= 2).ok_or_else(|| Error::ProfileGap("no sample at alpha = 1/2".into()))?;
    let st = Stage { action, y, ny: ny.clone(), gran, opts, cap: 0 };
    let threshold = &c2 / int(4);
    let mut n0 = 0;
    while n0 < zs.len() && st.rel(&zs[n0])? > threshold {
        n0 += 1;
    }
    if n0 == zs.len() {
        return Err(Error::NoValidStage);
    }
    let mut union = action.space().empty_set();
    let mut stages = Vec::new();
    let mut schedule = Vec::new();
    let mut m_prev = 2u32;
    for (i, z) in zs.iter().enumerate().skip(n0) {
        let zrel = st.rel(z)?;
        let valid = |m: u32| c_m(m).is_some_and(|c| zrel <= c / int(2 * m as i64));
        let m = (m_prev..=m_max).rev().find(|&m| valid(m)).ok_or_else(|| {
            Error::VerificationFailed(format!("stage {}: no m >= {m_prev} satisfies the excision bound", i + 1))
        })?;
        m_prev = m;
        schedule.push(m);
        let cm = c_m(m).expect("valid m has a sample");
        let eps = &cm / int(2);
        let cert = maximal_folner(action, y, z, &eps, &nbhd, gran, opts)?;
        let f_rel = &cert.measure / &ny;
        let f_bound = rat(1, m as i64);
        let f_bound_ok = f_rel < f_bound;
        stages.push(st.finish(i + 1, z, None, None, Some(m), &cert, f_bound, f_bound_ok, Rational::zero(), &nbhd, &mut union)?);
    }
    Ok(ExhaustionReport {
        schema: "v1".into(),
        mode: "generating-set".into(),
        y: SetRepr::from_set(y),
        y_measure: ny,
        c: None,
        threshold,
        n0,
        k_cap: 0,
        granularity: gran.describe(),
        m_schedule: schedule,
        stages,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::Transform;
    use crate::group::GroupModel;
    use crate::measure::{AtomSet, WeightedAtomSpace};

    fn cycle(n: u32) -> ActionModel {
        let t = Transform::Permutation((0..n).map(|i| (i + 1) % n).collect());
        ActionModel::new(
            GroupModel::finite_cyclic(n as u64).unwrap(),
            Space::Atoms(WeightedAtomSpace::uniform(n as usize).unwrap()),
            vec![t.clone(), t.inverse()],
        )
        .unwrap()
    }

    fn atoms(n: usize, idx: impl IntoIterator<Item = usize>) -> Set {
        Set::Atoms(AtomSet::from_indices(n, idx).unwrap())
    }

    #[test]
    fn folner_audits() {
        let a = cycle(8);
        let x = a.space().full_set();
        let e = a.space().empty_set();
        let b1 = Neighborhood::Ball(1);
        let four = is_folner(&a, &x, &e, &rat(1, 2), &b1, &atoms(8, 0..4)).unwrap();
        assert!(four.holds);
        assert_eq!(four.boundary_measure, rat(1, 4));
        assert!(!is_folner(&a, &x, &e, &rat(1, 2), &b1, &atoms(8, 0..2)).unwrap().holds);
        assert!(is_folner(&a, &x, &e, &rat(1, 2), &b1, &e).unwrap().holds);
        let z = atoms(8, [0]);
        assert!(matches!(is_folner(&a, &x, &z, &rat(1, 2), &b1, &atoms(8, 0..2)), Err(Error::NotASubset)));
    }

    #[test]
    fn maximal_on_cycle() {
        let a = cycle(8);
        let x = a.space().full_set();
        let cert = maximal_folner(&a, &x, &a.space().empty_set(), &rat(1, 2), &Neighborhood::Ball(1), &Granularity::Atoms, &SearchOptions::default()).unwrap();
        assert_eq!(cert.f_cells, vec![0, 1, 2, 3]);
        assert_eq!(cert.boundary_measure, rat(1, 4));
        let rep = complement_expansion_check(&a, &cert, &Granularity::Atoms, &SearchOptions::default()).unwrap();
        assert!(rep.passed && rep.vacuous);
    }

    #[test]
    fn planted_non_maximal_is_caught() {
        let a = cycle(8);
        let x = a.space().full_set();
        let e = a.space().empty_set();
        let mut cert = maximal_folner(&a, &x, &e, &rat(1, 2), &Neighborhood::Ball(1), &Granularity::Atoms, &SearchOptions::default()).unwrap();
        cert.f = SetRepr::Atoms(vec![]);
        cert.f_cells.clear();
        cert.measure = Rational::zero();
        cert.boundary_measure = Rational::zero();
        let rep = complement_expansion_check(&a, &cert, &Granularity::Atoms, &SearchOptions::default()).unwrap();
        assert!(!rep.passed);
        assert_eq!(rep.witness.unwrap().cells, vec![0, 1, 2, 3]);
        cert.maximal = false;
        assert!(matches!(complement_expansion_check(&a, &cert, &Granularity::Atoms, &SearchOptions::default()), Err(Error::NotMaximal)));
    }

    #[test]
    fn domain_checks() {
        let a = cycle(8);
        let x = a.space().full_set();
        let o = SearchOptions::default();
        let b1 = Neighborhood::Ball(1);
        assert!(verify_domain(&a, &x, &rat(2, 5), &b1, &Granularity::Atoms, &o).unwrap().holds);
        let bad = verify_domain(&a, &x, &rat(3, 5), &b1, &Granularity::Atoms, &o).unwrap();
        assert!(!bad.holds);
        assert_eq!(bad.witness.unwrap().cells, vec![0, 1, 2, 3]);
    }

    #[test]
    fn empty_excisions_give_single_stage() {
        let a = cycle(8);
        let x = a.space().full_set();
        let e = a.space().empty_set();
        let r = build_exhaustion(&a, &x, &rat(1, 4), &[e], &Granularity::Atoms, &SearchOptions::default()).unwrap();
        assert_eq!(r.n0, 0);
        assert!(r.all_verified(), "{}", r.to_table());
        assert_eq!(r.stages[0].f_measure, Rational::zero());
        assert_eq!(r.stages[0].y_union_measure, Rational::one());
    }

    #[test]
    fn threshold_never_met() {
        let a = cycle(8);
        let x = a.space().full_set();
        let z = atoms(8, 0..4);
        let r = build_exhaustion(&a, &x, &rat(1, 2), &[z], &Granularity::Atoms, &SearchOptions::default());
        assert!(matches!(r, Err(Error::NoValidStage)));
    }
}
