//! Run configuration: every flag can also come from a JSON file given with
//! `--config`. Flags win over the file.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Network JSON document.
    #[arg(long)]
    pub net: Option<PathBuf>,
    /// One input vector, comma separated (eval).
    #[arg(long, allow_hyphen_values = true)]
    pub input: Option<String>,
    /// Inputs to evaluate, the suite to score, or the suite for safety
    /// coverage. JSON array of vectors or headerless CSV.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Seed corpus for generation.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Reference inputs that fix the neuron bounds (max, section, nbc, kmnc).
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// ss, vs, sv, vv, nc, nbc, tknc, kmnc or s.
    #[arg(long)]
    pub criterion: Option<String>,
    /// Value function of VS (condition) or SV (decision), e.g. `ratio:2`.
    #[arg(long)]
    pub g: Option<String>,
    /// Condition value function of VV.
    #[arg(long)]
    pub g1: Option<String>,
    /// Decision value function of VV.
    #[arg(long)]
    pub g2: Option<String>,
    /// Pair strategy: `singleton`, `top:<kappa>` or `random:<omega>:<count>`.
    #[arg(long)]
    pub pairs: Option<String>,
    /// Explicit feature pair file; overrides `pairs`.
    #[arg(long)]
    pub pairs_file: Option<PathBuf>,
    /// Also use output nodes as decision features.
    #[arg(long)]
    pub output_decisions: Option<bool>,
    /// m for tknc and kmnc.
    #[arg(long)]
    pub m: Option<usize>,
    /// kmnc counts sections instead of nodes.
    #[arg(long)]
    pub section_fraction: Option<bool>,
    /// Oracle norm: 1, 2 or inf.
    #[arg(long)]
    pub oracle_p: Option<String>,
    /// Oracle distance bound; enables the adversarial statistics.
    #[arg(long)]
    pub oracle_b: Option<f64>,
    /// Generation engine: lp or gradient.
    #[arg(long)]
    pub engine: Option<String>,
    /// Gradient steps per seed.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Seeds tried per pair.
    #[arg(long)]
    pub max_seeds: Option<usize>,
    #[arg(long)]
    pub epsilon0: Option<f64>,
    /// Gradient start: fgsm or uniform.
    #[arg(long)]
    pub init: Option<String>,
    /// Strictness of `u < 0` in the LP engine.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub max_lp_iterations: Option<usize>,
    /// Look for covering pairs inside the corpus before searching.
    #[arg(long)]
    pub corpus_pairs: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Lattice: random networks in the battery.
    #[arg(long)]
    pub nets: Option<usize>,
    /// Lattice: suites per network.
    #[arg(long)]
    pub suites: Option<usize>,
    /// Lattice: comma separated edges such as `N<=SS,TN<=VS`, or `all`.
    #[arg(long)]
    pub edges: Option<String>,
    /// Lattice: sections for the MN edges.
    #[arg(long)]
    pub sections: Option<usize>,
    /// Lattice: m of the top-m criteria.
    #[arg(long)]
    pub top: Option<usize>,
    #[arg(long)]
    pub max_suite_size: Option<usize>,
    #[arg(long)]
    pub reference_size: Option<usize>,
    /// Largest hidden node count for pattern enumeration.
    #[arg(long)]
    pub pattern_limit: Option<usize>,
    /// Directory for report files; nothing is written without it.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads for every parallel section; 1 runs serially.
    #[arg(long)]
    pub workers: Option<usize>,
}

impl RunConfig {
    /// Reads `file` (if any) and lays the flags over it.
    pub fn resolve(file: Option<&Path>, flags: RunConfig) -> Result<RunConfig, CliError> {
        let Some(file) = file else { return Ok(flags) };
        let text = fs::read_to_string(file)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", file.display())))?;
        let base: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("config {}: {e}", file.display())))?;
        let mut merged = serde_json::to_value(base).expect("configs serialize");
        let over = serde_json::to_value(flags).expect("configs serialize");
        let (serde_json::Value::Object(m), serde_json::Value::Object(o)) = (&mut merged, over)
        else {
            unreachable!("RunConfig serializes to an object")
        };
        for (k, v) in o {
            if !v.is_null() {
                m.insert(k, v);
            }
        }
        Ok(serde_json::from_value(merged).expect("merged config deserializes"))
    }

    /// The part of the configuration that determines the results: output
    /// location and worker count are left out.
    pub fn hash(&self, command: &str) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        c.workers = None;
        relucov::io::config_hash(&serde_json::json!({ "command": command, "config": c }))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

/// Collects validation problems so they can be reported together.
#[derive(Default)]
pub struct Problems(Vec<String>);

impl Problems {
    pub fn push(&mut self, msg: impl Into<String>) {
        self.0.push(msg.into());
    }

    /// `Some(v)` on success, otherwise records the message.
    pub fn take<T, E: std::fmt::Display>(&mut self, what: &str, r: Result<T, E>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.push(format!("{what}: {e}"));
                None
            }
        }
    }

    /// The path in `value`, which must be present and exist.
    pub fn file(&mut self, flag: &str, value: &Option<PathBuf>) -> Option<PathBuf> {
        match value {
            None => {
                self.push(format!("--{flag} is required"));
                None
            }
            Some(p) => self.existing(flag, p),
        }
    }

    pub fn optional_file(&mut self, flag: &str, value: &Option<PathBuf>) -> Option<PathBuf> {
        value.as_ref().and_then(|p| self.existing(flag, p))
    }

    fn existing(&mut self, flag: &str, p: &Path) -> Option<PathBuf> {
        if p.is_file() {
            Some(p.to_path_buf())
        } else {
            self.push(format!("--{flag} {}: no such file", p.display()));
            None
        }
    }

    pub fn finish(self) -> Result<(), CliError> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(self.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"seed": 4, "criterion": "vv", "m": 3}"#).unwrap();
        let flags = RunConfig {
            seed: Some(9),
            ..Default::default()
        };
        let c = RunConfig::resolve(Some(&path), flags).unwrap();
        assert_eq!(c.seed, Some(9));
        assert_eq!(c.criterion.as_deref(), Some("vv"));
        assert_eq!(c.m, Some(3));
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"sed": 4}"#).unwrap();
        let err = RunConfig::resolve(Some(&path), RunConfig::default()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = RunConfig {
            seed: Some(1),
            ..Default::default()
        };
        let b = RunConfig {
            output_dir: Some("x".into()),
            workers: Some(2),
            ..a.clone()
        };
        assert_eq!(a.hash("gen"), b.hash("gen"));
        assert_ne!(a.hash("gen"), a.hash("coverage"));
        assert_ne!(
            a.hash("gen"),
            RunConfig {
                seed: Some(2),
                ..Default::default()
            }
            .hash("gen")
        );
    }
}
