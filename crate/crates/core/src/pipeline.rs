//! Runs configured operations against one model and writes CSV/JSON/DOT outputs
//! plus a versioned JSON report.

use crate::action::ActionModel;
use crate::approx::{
    admissibility_test, approximating_space, build_partition, from_distance_csv, measure_ratio_q, to_distance_csv,
    to_dot, Partition, PartitionSpec,
};
use crate::config::{resolve_set, Operation, RunConfig};
use crate::error::{Error, Result};
use crate::expansion::cheeger::{cheeger_bracket, cheeger_exact};
use crate::expansion::spectral::{local_spectral_gap, SolverRegistry};
use crate::expansion::{
    domain_profile, expansion_profile, metric_profile, Granularity, MinimizationStrategy, Neighborhood,
    SearchOptions, StrategyRegistry,
};
use crate::folner::{build_exhaustion, complement_expansion_check, is_folner, maximal_folner};
use crate::measure::{Set, SetRepr, Space};
use crate::rational;
use crate::scenarios::{Scenario, ScenarioRegistry};
use num_traits::Zero;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const SCHEMA: &str = "v1";

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub strategy: Option<String>,
    pub seed: Option<u64>,
    pub max_exact_cells: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct OpOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub files: Vec<PathBuf>,
    pub result: Value,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub passed: bool,
    pub out_dir: PathBuf,
    pub report_path: PathBuf,
    pub report: Value,
    pub operations: Vec<OpOutcome>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    action: ActionModel,
    scenario: Option<Scenario>,
    strategy: Arc<dyn MinimizationStrategy>,
    opts: SearchOptions,
    solvers: SolverRegistry,
    out: PathBuf,
}

impl Ctx<'_> {
    fn write(&self, files: &mut Vec<PathBuf>, name: &str, body: &str) -> Result<()> {
        let p = self.out.join(name);
        std::fs::write(&p, body)?;
        files.push(p);
        Ok(())
    }

    fn space(&self) -> &Space {
        self.action.space()
    }

    fn partition(&self, spec: Option<&PartitionSpec>, key: &str) -> Result<Partition> {
        match (spec, self.space()) {
            (Some(s), _) => build_partition(self.space(), s),
            (None, Space::Atoms(_)) => build_partition(self.space(), &PartitionSpec::Atoms),
            (None, Space::UnitInterval) => {
                Err(Error::Config(format!("{key}.partition is required for interval models")))
            }
        }
    }

    fn granularity(&self, spec: Option<&PartitionSpec>, key: &str) -> Result<Granularity> {
        match spec {
            None if matches!(self.space(), Space::Atoms(_)) => Ok(Granularity::Atoms),
            _ => Ok(Granularity::Cells(self.partition(spec, key)?.cells)),
        }
    }

    fn set(&self, repr: Option<&SetRepr>, key: &str) -> Result<Set> {
        resolve_set(self.space(), repr, key)
    }

    fn scenario_partitions(&self, specs: &[PartitionSpec], key: &str) -> Result<Vec<Partition>> {
        if !specs.is_empty() {
            return specs.iter().map(|s| build_partition(self.space(), s)).collect();
        }
        match &self.scenario {
            Some(s) if !s.partitions.is_empty() => Ok(s.partitions.clone()),
            _ => Err(Error::Config(format!("{key}.partitions: none given and the scenario has no default sequence"))),
        }
    }
}

fn build_model(cfg: &RunConfig) -> Result<(ActionModel, Option<Scenario>)> {
    if let Some(sc) = &cfg.scenario {
        let s = ScenarioRegistry::default().build(&sc.name, &sc.params).map_err(|e| match e {
            Error::BadParams(m) => Error::Config(format!("scenario: {m}")),
            other => other,
        })?;
        return Ok((s.action.clone(), Some(s)));
    }
    let path = cfg.base_dir.join(cfg.model.as_ref().expect("validated"));
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Config(format!("model: cannot read {}: {e}", path.display())))?;
    let action = ActionModel::from_json(&text).map_err(|e| Error::Config(format!("model: {e}")))?;
    Ok((action, None))
}

/// Builds the model, runs `ops` in canonical order and writes `report.json`.
/// Errors carry the stage they came from.
pub fn run_pipeline(cfg: &RunConfig, ops: &[Operation], command: &str, ov: &Overrides) -> Result<RunOutcome> {
    let strategy_name = ov.strategy.clone().or_else(|| cfg.strategy.clone()).unwrap_or_else(|| "exact".into());
    let strategy = StrategyRegistry::default()
        .get(&strategy_name)
        .map_err(|e| Error::Config(format!("strategy: {e}")))?;
    let mut opts = SearchOptions { seed: ov.seed.unwrap_or(cfg.seed), ..SearchOptions::default() };
    if let Some(m) = ov.max_exact_cells.or(cfg.max_exact_cells) {
        opts.max_exact_cells = m;
    }
    let out = ov
        .out_dir
        .clone()
        .or_else(|| cfg.out_dir.as_ref().map(|d| cfg.base_dir.join(d)))
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out)?;
    let (action, scenario) = build_model(cfg).map_err(|e| e.in_stage("model"))?;
    let ctx = Ctx { cfg, action, scenario, strategy, opts, solvers: SolverRegistry::default(), out: out.clone() };

    let mut ordered: Vec<Operation> = ops.to_vec();
    ordered.sort();
    ordered.dedup();
    let mut outcomes = Vec::new();
    if command == "scenario" {
        outcomes.push(scenario_op(&ctx).map_err(|e| e.in_stage("scenario"))?);
    }
    for op in ordered {
        let r = match op {
            Operation::Profile => profile_op(&ctx),
            Operation::Cheeger => cheeger_op(&ctx),
            Operation::Approx => approx_op(&ctx),
            Operation::Folner => folner_op(&ctx),
            Operation::Exhaust => exhaust_op(&ctx),
            Operation::Admissible => admissible_op(&ctx),
            Operation::Export => export_op(&ctx),
        };
        outcomes.push(r.map_err(|e| e.in_stage(op.name()))?);
    }
    let passed = outcomes.iter().all(|o| o.passed);
    let report = json!({
        "schema": SCHEMA,
        "tool": "measex",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "passed": passed,
        "provenance": {
            "seed": ctx.opts.seed,
            "strategy": ctx.strategy.name(),
            "exact": ctx.strategy.is_exact(),
            "max_exact_cells": ctx.opts.max_exact_cells,
            "scenario": cfg.scenario.as_ref().map(|s| json!({ "name": s.name, "params": s.params })),
            "model_file": cfg.model.as_ref().map(|p| p.display().to_string()),
        },
        "model": model_summary(&ctx),
        "operations": outcomes.iter().map(|o| json!({
            "name": o.name,
            "passed": o.passed,
            "files": o.files.iter().map(|f| f.file_name().unwrap().to_string_lossy().into_owned()).collect::<Vec<_>>(),
            "result": o.result,
        })).collect::<Vec<_>>(),
    });
    let report_path = out.join("report.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&report).expect("json") + "\n")?;
    Ok(RunOutcome { passed, out_dir: out, report_path, report, operations: outcomes })
}

fn model_summary(ctx: &Ctx) -> Value {
    let g = ctx.action.group();
    json!({
        "space": match ctx.space() {
            Space::UnitInterval => "unit-interval".to_string(),
            Space::Atoms(w) => format!("{} atoms", w.len()),
        },
        "generators": g.generators.iter().map(|x| x.label.clone()).collect::<Vec<_>>(),
        "measure_preserving": ctx.action.is_measure_preserving(),
        "notes": ctx.scenario.as_ref().map(|s| json!(s.notes)),
    })
}

fn scenario_op(ctx: &Ctx) -> Result<OpOutcome> {
    let mut files = Vec::new();
    ctx.write(&mut files, "model.json", &(ctx.action.to_json() + "\n"))?;
    let s = ctx.scenario.as_ref();
    Ok(OpOutcome {
        name: "scenario",
        passed: true,
        files,
        result: json!({
            "name": s.map(|s| s.name.clone()),
            "partitions": s.map_or(0, |s| s.partitions.len()),
            "tails": s.map_or(0, |s| s.tails.len()),
            "samples": s.map(|s| s.samples.iter().map(SetRepr::from_set).collect::<Vec<_>>()),
        }),
    })
}

fn profile_op(ctx: &Ctx) -> Result<OpOutcome> {
    let sec = ctx.cfg.profile.as_ref().ok_or_else(|| Error::Config("missing [profile] table".into()))?;
    let gran = ctx.granularity(sec.partition.as_ref(), "profile")?;
    let p = match &sec.domain {
        None => expansion_profile(&ctx.action, &sec.alphas, &sec.ks, ctx.strategy.as_ref(), &gran, &ctx.opts)?,
        Some(d) => {
            let y = ctx.set(Some(d), "profile.domain")?;
            domain_profile(&ctx.action, &y, &sec.alphas, &sec.ks, ctx.strategy.as_ref(), &gran, &ctx.opts)?
        }
    };
    let mut files = Vec::new();
    ctx.write(&mut files, "profile.csv", &p.to_csv())?;
    let monotone = !p.exact || p.is_monotone();
    let positive = !sec.require_positive || p.entries.iter().all(|e| e.c_star > rational::int(0));
    Ok(OpOutcome {
        name: "profile",
        passed: monotone && positive,
        files,
        result: json!({ "monotone": monotone, "positive": positive, "profile": p }),
    })
}

fn cheeger_op(ctx: &Ctx) -> Result<OpOutcome> {
    let sec = ctx.cfg.cheeger.as_ref().ok_or_else(|| Error::Config("missing [cheeger] table".into()))?;
    let p = ctx.partition(sec.partition.as_ref(), "cheeger")?;
    let a = approximating_space(&ctx.action, &p, sec.cutoff)?;
    let r = if sec.bracket {
        cheeger_bracket(&a.space, ctx.strategy.as_ref(), &ctx.opts, &ctx.solvers)?
    } else {
        cheeger_exact(&a.space, ctx.strategy.as_ref(), &ctx.opts)?
    };
    let value = r.value.as_ref().map(rational::to_f64).unwrap_or(f64::INFINITY);
    let consistent = r.lower_bound.map_or(true, |lb| lb <= value + 1e-9);
    let mut positive = !sec.require_positive || r.value.as_ref().map_or(true, |v| v > &rational::int(0));
    let spectral = match sec.spectral_k {
        None => None,
        Some(k) => {
            let s = local_spectral_gap(&ctx.action, &ctx.space().full_set(), k, &ctx.solvers)?;
            if sec.require_positive {
                positive &= s.degenerate || (s.lambda2 > 0.0 && s.residual < 1e-10);
            }
            Some(s)
        }
    };
    Ok(OpOutcome {
        name: "cheeger",
        passed: consistent && positive,
        files: Vec::new(),
        result: json!({
            "points": a.space.len(),
            "connected": a.connected,
            "cheeger": r,
            "bracket_consistent": consistent,
            "spectral": spectral,
        }),
    })
}

fn approx_op(ctx: &Ctx) -> Result<OpOutcome> {
    let sec = ctx.cfg.approx.as_ref().ok_or_else(|| Error::Config("missing [approx] table".into()))?;
    let parts = ctx.scenario_partitions(&sec.partitions, "approx")?;
    let mut files = Vec::new();
    let mut rows = Vec::new();
    let mut passed = true;
    for (i, p) in parts.iter().enumerate() {
        let a = approximating_space(&ctx.action, p, sec.cutoff)?;
        ctx.write(&mut files, &format!("approx_{i}.dot"), &to_dot(&a.space, Some(&a.labels)))?;
        ctx.write(&mut files, &format!("approx_{i}_distances.csv"), &to_distance_csv(&a.space))?;
        passed &= a.graph.is_symmetric();
        let fits = !ctx.strategy.is_exact() || a.space.len() <= ctx.opts.max_exact_cells;
        let cheeger = if fits { Some(cheeger_exact(&a.space, ctx.strategy.as_ref(), &ctx.opts)?) } else { None };
        let profile = if !sec.alphas.is_empty() && !sec.ks.is_empty() && fits {
            match metric_profile(&a.space, &sec.alphas, &sec.ks, ctx.strategy.as_ref(), &ctx.opts) {
                // a single cell heavier than 1/2 leaves nothing to test
                Err(Error::EmptyAdmissibleRange) => None,
                Err(e) => return Err(e),
                Ok(pr) => {
                    ctx.write(&mut files, &format!("approx_{i}_profile.csv"), &pr.to_csv())?;
                    if sec.require_positive {
                        passed &= pr.entries.iter().all(|e| e.c_star > rational::int(0));
                    }
                    Some(pr)
                }
            }
        } else {
            None
        };
        rows.push(json!({
            "cells": p.len(),
            "mesh": p.mesh.as_ref().map(rational::format),
            "measure_ratio": rational::format(&measure_ratio_q(ctx.space(), p)?),
            "connected": a.connected,
            "edges": a.graph.edges.len(),
            "cheeger": cheeger,
            "profile": profile,
        }));
    }
    Ok(OpOutcome { name: "approx", passed, files, result: json!({ "cutoff": sec.cutoff, "spaces": rows }) })
}

fn folner_op(ctx: &Ctx) -> Result<OpOutcome> {
    let sec = ctx.cfg.folner.as_ref().ok_or_else(|| Error::Config("missing [folner] table".into()))?;
    let gran = ctx.granularity(sec.partition.as_ref(), "folner")?;
    let y = ctx.set(sec.domain.as_ref(), "folner.domain")?;
    let z = match &sec.excise {
        None => ctx.space().empty_set(),
        Some(r) => ctx.set(Some(r), "folner.excise")?,
    };
    let nbhd = Neighborhood::Ball(sec.k);
    let cert = maximal_folner(&ctx.action, &y, &z, &sec.epsilon, &nbhd, &gran, &ctx.opts)?;
    let f = cert.f.to_set(ctx.space())?;
    let audit = is_folner(&ctx.action, &y, &z, &sec.epsilon, &nbhd, &f)?;
    let comp = complement_expansion_check(&ctx.action, &cert, &gran, &ctx.opts)?;
    let result = json!({ "certificate": cert, "audit": audit, "complement": comp });
    let mut files = Vec::new();
    ctx.write(&mut files, "folner.json", &(serde_json::to_string_pretty(&result).expect("json") + "\n"))?;
    Ok(OpOutcome { name: "folner", passed: audit.holds && comp.passed, files, result })
}

fn exhaust_op(ctx: &Ctx) -> Result<OpOutcome> {
    let sec = ctx.cfg.exhaust.as_ref().ok_or_else(|| Error::Config("missing [exhaust] table".into()))?;
    let gran = ctx.granularity(sec.partition.as_ref(), "exhaust")?;
    let y = ctx.set(sec.domain.as_ref(), "exhaust.domain")?;
    let zs: Vec<Set> = match (&sec.tails, &ctx.scenario) {
        (Some(t), _) => t.iter().map(|r| ctx.set(Some(r), "exhaust.tails")).collect::<Result<_>>()?,
        (None, Some(s)) if !s.tails.is_empty() => s.tails.clone(),
        _ => return Err(Error::Config("exhaust.tails: none given and the scenario has no tails".into())),
    };
    let r = build_exhaustion(&ctx.action, &y, &sec.c, &zs, &gran, &ctx.opts)?;
    let mut files = Vec::new();
    ctx.write(&mut files, "exhaustion.json", &(r.to_json() + "\n"))?;
    ctx.write(&mut files, "exhaustion.txt", &r.to_table())?;
    let passed = r.all_verified() && r.union_nondecreasing();
    Ok(OpOutcome { name: "exhaust", passed, files, result: serde_json::to_value(&r).expect("json") })
}

fn admissible_op(ctx: &Ctx) -> Result<OpOutcome> {
    let sec = ctx.cfg.admissible.as_ref().ok_or_else(|| Error::Config("missing [admissible] table".into()))?;
    let parts = ctx.scenario_partitions(&sec.partitions, "admissible")?;
    let samples: Vec<Set> = match (&sec.samples, &ctx.scenario) {
        (Some(v), _) => v.iter().map(|r| ctx.set(Some(r), "admissible.samples")).collect::<Result<_>>()?,
        (None, Some(s)) if !s.samples.is_empty() => s.samples.clone(),
        _ => return Err(Error::Config("admissible.samples: none given and the scenario has none".into())),
    };
    let r = admissibility_test(&ctx.action, &parts, sec.k, &samples, &sec.tolerance)?;
    let passed = match &sec.expect {
        Some(e) => &r.verdict == e,
        None => !r.refuted(),
    };
    let mut files = Vec::new();
    ctx.write(&mut files, "admissibility.json", &(serde_json::to_string_pretty(&r).expect("json") + "\n"))?;
    ctx.write(&mut files, "admissibility.txt", &r.to_table())?;
    Ok(OpOutcome { name: "admissible", passed, files, result: serde_json::to_value(&r).expect("json") })
}

fn export_op(ctx: &Ctx) -> Result<OpOutcome> {
    let (spec, cutoff, formats) = match &ctx.cfg.export {
        Some(e) => (e.partition.clone(), e.cutoff, e.formats.clone()),
        None => (None, 1, vec!["dot".into(), "csv".into()]),
    };
    let p = ctx.partition(spec.as_ref(), "export")?;
    let a = approximating_space(&ctx.action, &p, cutoff)?;
    let mut files = Vec::new();
    let mut round_trip = None;
    for f in &formats {
        match f.as_str() {
            "dot" => ctx.write(&mut files, "graph.dot", &to_dot(&a.space, Some(&a.labels)))?,
            _ => {
                let text = to_distance_csv(&a.space);
                ctx.write(&mut files, "distances.csv", &text)?;
                round_trip = Some(from_distance_csv(&text)? == a.space);
            }
        }
    }
    Ok(OpOutcome {
        name: "export",
        passed: round_trip.unwrap_or(true),
        files,
        result: json!({
            "points": a.space.len(),
            "connected": a.connected,
            "csv_round_trip": round_trip,
            "total_weight": rational::format(&a.space.weights().iter().fold(rational::int(0), |s, w| s + w)),
            "zero_weight_points": a.space.weights().iter().filter(|w| w.is_zero()).count(),
        }),
    })
}

/// Loads a config from disk and runs it; used by the binary.
pub fn run_file(path: &Path, ops: &[Operation], command: &str, ov: &Overrides) -> Result<RunOutcome> {
    let cfg = RunConfig::load(path)?;
    let ops: Vec<Operation> = if command == "scenario" { cfg.operations.clone() } else { ops.to_vec() };
    run_pipeline(&cfg, &ops, command, ov)
}
