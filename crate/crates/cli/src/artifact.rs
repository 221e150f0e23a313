//! JSON documents handed from one stage to the next.
//!
//! Each stage copies what it read and adds its own result, so any later stage
//! can run from a single upstream file or from standard input.

use std::io::Read;
use std::path::Path;

use mnm_core::compile::DnfDoc;
use mnm_core::discretize::SpaceDoc;
use mnm_core::primes::PrimesDoc;
use mnm_core::{load_tree, DiscreteSpace, Dnf, PrimeSet, RuleSet, TreeModel};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Artifact {
    pub stage: String,
    pub tree: serde_json::Value,
    pub rules: RuleSet<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceDoc<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dnf: Option<DnfDoc<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primes: Option<PrimesDoc<f64>>,
}

impl Artifact {
    pub fn from_tree(tree: &TreeModel<f64>) -> Result<Self, CliError> {
        Ok(Artifact {
            stage: "rules".into(),
            tree: serde_json::to_value(tree).map_err(mnm_core::Error::from)?,
            rules: RuleSet::from_tree(tree)?,
            space: None,
            dnf: None,
            primes: None,
        })
    }

    pub fn tree(&self) -> Result<TreeModel<f64>, CliError> {
        Ok(load_tree(&self.tree.to_string())?)
    }

    pub fn space(&self) -> Result<DiscreteSpace<f64>, CliError> {
        let doc = self.space.clone().ok_or_else(|| missing(&self.stage, "space", "discretize"))?;
        Ok(doc.try_into()?)
    }

    pub fn dnf(&self) -> Option<Result<Dnf<f64>, CliError>> {
        self.dnf.clone().map(|d| d.try_into().map_err(CliError::from))
    }

    pub fn primes(&self) -> Result<(PrimeSet<f64>, PrimeSet<f64>), CliError> {
        let doc = self.primes.clone().ok_or_else(|| missing(&self.stage, "primes", "primes"))?;
        Ok(doc.into_sets()?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("artifact serializes");
        s.push('\n');
        s
    }
}

fn missing(stage: &str, what: &str, producer: &str) -> CliError {
    CliError::Usage(format!("input from stage `{stage}` has no {what}; run `{producer}` first"))
}

pub fn read_text(path: Option<&Path>) -> Result<String, CliError> {
    match path {
        Some(p) if p != Path::new("-") => {
            std::fs::read_to_string(p).map_err(|source| CliError::Io { path: p.display().to_string(), source })
        }
        _ => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|source| CliError::Io { path: "<stdin>".into(), source })?;
            Ok(s)
        }
    }
}

pub fn read_artifact(path: Option<&Path>) -> Result<Artifact, CliError> {
    let text = read_text(path)?;
    let name = path.map_or("<stdin>".to_string(), |p| p.display().to_string());
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{name}: not a pipeline artifact: {e}")))
}

pub fn read_tree(path: &Path) -> Result<TreeModel<f64>, CliError> {
    let text = read_text(Some(path))?;
    load_tree(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}
