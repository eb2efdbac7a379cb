//! Manifests: a named list of subcommand invocations plus expected values, each
//! located by a JSON pointer into one command's output.

use std::collections::BTreeMap;

use clap::Parser;
use lagmmse_core::io::format_table;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::{Cli, CliError, Command, Output};

const BUILTIN: &[(&str, &str)] = &[
    ("fig2-caption", include_str!("../manifests/fig2-caption.json")),
    ("sec3a", include_str!("../manifests/sec3a.json")),
    ("sec7b", include_str!("../manifests/sec7b.json")),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub commands: Vec<Invocation>,
    pub expected: Vec<Expectation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Invocation {
    pub id: String,
    /// Arguments after the program name, e.g. `["tradeoff", "--alpha", "0.2"]`.
    pub args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub command: String,
    pub pointer: String,
    pub value: f64,
    pub tolerance: f64,
    /// Where the expected value comes from.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub command: String,
    pub pointer: String,
    pub expected: f64,
    pub observed: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestReport {
    pub name: String,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl ManifestReport {
    pub fn table(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .checks
            .iter()
            .map(|c| {
                vec![
                    format!("{}{}", c.command, c.pointer),
                    c.expected.to_string(),
                    c.observed.map_or("missing".into(), |v| format!("{v:.6}")),
                    c.tolerance.to_string(),
                    if c.passed { "pass" } else { "FAIL" }.into(),
                ]
            })
            .collect();
        format_table(&["check", "expected", "observed", "tolerance", "result"], &rows)
    }
}

impl ExperimentManifest {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let m: Self = serde_json::from_str(text).map_err(|e| CliError::Input(format!("manifest: {e}")))?;
        m.validate()?;
        Ok(m)
    }

    pub fn builtin(name: &str) -> Option<Self> {
        BUILTIN
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::from_json(text).expect("built-in manifests are valid"))
    }

    pub fn builtin_names() -> impl Iterator<Item = &'static str> {
        BUILTIN.iter().map(|(n, _)| *n)
    }

    fn validate(&self) -> Result<(), CliError> {
        for e in &self.expected {
            if !self.commands.iter().any(|c| c.id == e.command) {
                return Err(CliError::Input(format!("expectation refers to unknown command {:?}", e.command)));
            }
            if e.source.trim().is_empty() {
                return Err(CliError::Input(format!("expectation {}{} has no source", e.command, e.pointer)));
            }
            if !(e.tolerance >= 0.0) {
                return Err(CliError::Input(format!("expectation {}{} has a negative tolerance", e.command, e.pointer)));
            }
        }
        Ok(())
    }
}

/// Runs every command in order, then checks every expectation.
pub fn run_manifest(manifest: &ExperimentManifest) -> Result<ManifestReport, CliError> {
    let mut outputs: BTreeMap<&str, Value> = BTreeMap::new();
    for inv in &manifest.commands {
        let argv = std::iter::once("lagmmse".to_string()).chain(inv.args.iter().cloned());
        let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Input(format!("command {:?}: {e}", inv.id)))?;
        if matches!(cli.command, Command::RunManifest { .. }) {
            return Err(CliError::Input("manifests cannot run other manifests".into()));
        }
        outputs.insert(&inv.id, crate::execute(&cli.command)?.json);
    }
    let checks: Vec<CheckResult> = manifest
        .expected
        .iter()
        .map(|e| {
            let observed = outputs[e.command.as_str()].pointer(&e.pointer).and_then(Value::as_f64);
            CheckResult {
                command: e.command.clone(),
                pointer: e.pointer.clone(),
                expected: e.value,
                observed,
                tolerance: e.tolerance,
                passed: observed.is_some_and(|v| (v - e.value).abs() <= e.tolerance),
                source: e.source.clone(),
            }
        })
        .collect();
    let passed = checks.iter().all(|c| c.passed);
    Ok(ManifestReport {
        name: manifest.name.clone(),
        checks,
        passed,
    })
}

/// `run-manifest` entry: a built-in name or a path.
pub fn run_named(name_or_path: &str) -> Result<Output, CliError> {
    let manifest = match ExperimentManifest::builtin(name_or_path) {
        Some(m) => m,
        None => {
            let text = std::fs::read_to_string(name_or_path).map_err(|e| {
                let names: Vec<_> = ExperimentManifest::builtin_names().collect();
                CliError::Input(format!(
                    "{name_or_path:?} is neither a built-in manifest ({}) nor a readable file: {e}",
                    names.join(", ")
                ))
            })?;
            ExperimentManifest::from_json(&text)?
        }
    };
    let report = run_manifest(&manifest)?;
    if !report.passed {
        eprint!("{}", report.table());
    }
    Ok(Output {
        csv: Some(report.table()),
        json: json!(report),
        failed: !report.passed,
    })
}
