//! Run configuration, read from TOML. Unknown keys are rejected; rationals are
//! "p/q" strings.

use crate::approx::PartitionSpec;
use crate::error::{Error, Result};
use crate::measure::{Set, SetRepr, Space};
use crate::rational::{self, Rational};
use serde::{Deserialize, Deserializer};
use std::path::{Path, PathBuf};

fn rational_list<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational>, D::Error> {
    let raw: Vec<String> = Vec::deserialize(d)?;
    raw.iter().map(|s| rational::parse(s).map_err(serde::de::Error::custom)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Operation {
    Profile,
    Cheeger,
    Approx,
    Folner,
    Exhaust,
    Admissible,
    Export,
}

impl Operation {
    pub fn name(&self) -> &'static str {
        match self {
            Operation::Profile => "profile",
            Operation::Cheeger => "cheeger",
            Operation::Approx => "approx",
            Operation::Folner => "folner",
            Operation::Exhaust => "exhaust",
            Operation::Admissible => "admissible",
            Operation::Export => "export",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    #[serde(default)]
    pub params: toml::Table,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    #[serde(deserialize_with = "rational_list")]
    pub alphas: Vec<Rational>,
    pub ks: Vec<u32>,
    /// Candidate sets are unions of these cells; atoms by default.
    pub partition: Option<PartitionSpec>,
    /// Restrict to a domain Y.
    pub domain: Option<SetRepr>,
    /// Fail unless every c_star is positive.
    #[serde(default)]
    pub require_positive: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheegerSection {
    /// The approximating space of this partition is measured; atoms by default.
    pub partition: Option<PartitionSpec>,
    #[serde(default = "one")]
    pub cutoff: u32,
    /// Add the spectral lower bound.
    #[serde(default)]
    pub bracket: bool,
    /// Also report the local spectral gap of the action on the whole space for this k.
    pub spectral_k: Option<u32>,
    #[serde(default)]
    pub require_positive: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxSection {
    /// Partition sequence; the scenario's own sequence when omitted.
    #[serde(default)]
    pub partitions: Vec<PartitionSpec>,
    #[serde(default = "one")]
    pub cutoff: u32,
    #[serde(default, deserialize_with = "rational_list")]
    pub alphas: Vec<Rational>,
    #[serde(default)]
    pub ks: Vec<u32>,
    /// Fail unless every profile value is positive.
    #[serde(default)]
    pub require_positive: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FolnerSection {
    #[serde(with = "rational::serde_str")]
    pub epsilon: Rational,
    #[serde(default = "one")]
    pub k: u32,
    pub domain: Option<SetRepr>,
    pub excise: Option<SetRepr>,
    pub partition: Option<PartitionSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExhaustSection {
    /// Expansion constant of the domain.
    #[serde(with = "rational::serde_str")]
    pub c: Rational,
    pub domain: Option<SetRepr>,
    /// Nested excision sets; the scenario's tails when omitted.
    pub tails: Option<Vec<SetRepr>>,
    pub partition: Option<PartitionSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmissibleSection {
    pub k: u32,
    #[serde(with = "rational::serde_str")]
    pub tolerance: Rational,
    /// Sample sets; the scenario's samples when omitted.
    pub samples: Option<Vec<SetRepr>>,
    #[serde(default)]
    pub partitions: Vec<PartitionSpec>,
    /// "supported" or "refuted"; without it the run fails on a refuted verdict.
    pub expect: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportSection {
    pub partition: Option<PartitionSpec>,
    #[serde(default = "one")]
    pub cutoff: u32,
    #[serde(default = "both_formats")]
    pub formats: Vec<String>,
}

fn one() -> u32 {
    1
}

fn both_formats() -> Vec<String> {
    vec!["dot".into(), "csv".into()]
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub strategy: Option<String>,
    pub max_exact_cells: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub scenario: Option<ScenarioSection>,
    /// JSON model file, relative to the config file.
    pub model: Option<PathBuf>,
    /// Operations run by the `scenario` subcommand.
    #[serde(default)]
    pub operations: Vec<Operation>,
    pub profile: Option<ProfileSection>,
    pub cheeger: Option<CheegerSection>,
    pub approx: Option<ApproxSection>,
    pub folner: Option<FolnerSection>,
    pub exhaust: Option<ExhaustSection>,
    pub admissible: Option<AdmissibleSection>,
    pub export: Option<ExportSection>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().trim().to_string() + &span_hint(text, e.span())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        match (&self.scenario, &self.model) {
            (Some(_), Some(_)) => return Err(Error::Config("give either `scenario` or `model`, not both".into())),
            (None, None) => return Err(Error::Config("missing `scenario` (or `model`)".into())),
            _ => {}
        }
        for op in &self.operations {
            if !self.has_section(*op) {
                return Err(Error::Config(format!("operations: `{}` listed but the [{}] table is missing", op.name(), op.name())));
            }
        }
        if let Some(a) = &self.admissible {
            if let Some(e) = &a.expect {
                if e != "supported" && e != "refuted" {
                    return Err(Error::Config(format!("admissible.expect: '{e}' is neither 'supported' nor 'refuted'")));
                }
            }
        }
        if let Some(e) = &self.export {
            for f in &e.formats {
                if f != "dot" && f != "csv" {
                    return Err(Error::Config(format!("export.formats: unknown format '{f}'")));
                }
            }
        }
        Ok(())
    }

    pub fn has_section(&self, op: Operation) -> bool {
        match op {
            Operation::Profile => self.profile.is_some(),
            Operation::Cheeger => self.cheeger.is_some(),
            Operation::Approx => self.approx.is_some(),
            Operation::Folner => self.folner.is_some(),
            Operation::Exhaust => self.exhaust.is_some(),
            Operation::Admissible => self.admissible.is_some(),
            Operation::Export => true,
        }
    }
}

fn span_hint(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    match span {
        Some(r) => {
            let line = text[..r.start.min(text.len())].matches('\n').count() + 1;
            format!(" (line {line})")
        }
        None => String::new(),
    }
}

/// Resolves an optional set against the space, defaulting to the full space.
pub fn resolve_set(space: &Space, repr: Option<&SetRepr>, key: &str) -> Result<Set> {
    match repr {
        None => Ok(space.full_set()),
        Some(r) => r.to_set(space).map_err(|e| Error::Config(format!("{key}: {e}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_and_rejects() {
        let c = RunConfig::parse("[scenario]\nname = \"rotation\"\nparams = { angle = \"1/3\" }\n").unwrap();
        assert_eq!(c.seed, 0);
        let e = RunConfig::parse("bogus = 1\n[scenario]\nname = \"rotation\"\n").unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
        let e = RunConfig::parse("[scenario]\nname = \"x\"\n[profile]\nalphas = [\"1/0\"]\nks = [1]\n").unwrap_err();
        assert!(matches!(e, Error::Config(_)));
        let e = RunConfig::parse("operations = [\"profile\"]\n[scenario]\nname = \"x\"\n").unwrap_err();
        assert!(e.to_string().contains("operations"), "{e}");
        assert!(RunConfig::parse("").is_err());
    }

    #[test]
    fn nested_tables() {
        let text = r#"
seed = 3
[scenario]
name = "sl2-torus"
params = { p = 3 }
[profile]
alphas = ["1/8", "1/4"]
ks = [1, 2]
partition = { kind = "atoms" }
[folner]
epsilon = "1/2"
domain = [0, 1, 2, 3]
"#;
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.profile.as_ref().unwrap().alphas[1], rational::rat(1, 4));
        assert_eq!(c.folner.as_ref().unwrap().domain, Some(SetRepr::Atoms(vec![0, 1, 2, 3])));
    }
}
