//! Experiment files.
//!
//! ```json
//! {
//!   "subcommand": "ks",
//!   "params": { "system": "bernoulli:0.5,0.5", "nmax": 16 },
//!   "tolerances": { "conv-tol": 1e-6 },
//!   "format": "delimited",
//!   "out": "rates.csv"
//! }
//! ```
//!
//! `params` and `tolerances` take the long flag names of the subcommand
//! (`_` and `-` are interchangeable). Booleans switch flags on or off, lists
//! become repeated flags.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{CommandFactory, Parser};
use serde_json::{Map, Value};

use crate::commands::{tolerance_keys, Cli};
use crate::error::{CliError, CliResult};
use crate::report::Format;

pub const SUBCOMMANDS: [&str; 6] = ["partition", "ks", "ising-rg", "ising-z", "entropy-flow", "theorem-check"];
const TOP_LEVEL: [&str; 5] = ["subcommand", "params", "tolerances", "format", "out"];
/// Flags handled by the experiment file itself rather than `params`.
const RESERVED: [&str; 3] = ["format", "out", "help"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub subcommand: String,
    pub params: Map<String, Value>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub tolerances: BTreeMap<String, f64>,
}

/// Every violation found in an experiment file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<String>);

impl std::fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid config: {}", self.0.join("; "))
    }
}

impl From<ConfigErrors> for CliError {
    fn from(e: ConfigErrors) -> Self {
        CliError::Validation(e.to_string())
    }
}

/// The closest candidate within edit distance 2.
pub fn suggest<'a>(key: &str, candidates: impl IntoIterator<Item = &'a str>) -> Option<&'a str> {
    candidates
        .into_iter()
        .map(|c| (strsim::levenshtein(key, c), c))
        .filter(|(d, _)| *d <= 2)
        .min()
        .map(|(_, c)| c)
}

fn unknown(kind: &str, key: &str, candidates: &[&str]) -> String {
    match suggest(key, candidates.iter().copied()) {
        Some(s) => format!("unknown {kind} {key:?} (did you mean {s:?}?)"),
        None => format!("unknown {kind} {key:?}"),
    }
}

fn canonical(key: &str) -> String {
    key.replace('_', "-")
}

fn scalar_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

pub fn validate_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let doc: Value = serde_json::from_str(text)
        .map_err(|e| ConfigErrors(vec![format!("line {}, column {}: {e}", e.line(), e.column())]))?;
    let Value::Object(doc) = doc else {
        return Err(ConfigErrors(vec!["config must be an object".into()]));
    };
    let mut errors = Vec::new();
    for key in doc.keys().filter(|k| !TOP_LEVEL.contains(&k.as_str())) {
        errors.push(unknown("key", key, &TOP_LEVEL));
    }

    let subcommand = match doc.get("subcommand") {
        Some(Value::String(s)) if SUBCOMMANDS.contains(&s.as_str()) => Some(s.clone()),
        Some(Value::String(s)) => {
            errors.push(unknown("subcommand", s, &SUBCOMMANDS));
            None
        }
        Some(_) => {
            errors.push("subcommand must be a string".into());
            None
        }
        None => {
            errors.push("missing key \"subcommand\"".into());
            None
        }
    };

    let format = match doc.get("format") {
        None => Format::default(),
        Some(Value::String(s)) => s.parse().unwrap_or_else(|_| {
            errors.push(format!("format must be \"delimited\" or \"structured\", not {s:?}"));
            Format::default()
        }),
        Some(_) => {
            errors.push("format must be a string".into());
            Format::default()
        }
    };

    let out = match doc.get("out") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(_) => {
            errors.push("out must be a string".into());
            None
        }
    };

    let section = |name: &str, errors: &mut Vec<String>| match doc.get(name) {
        None => Map::new(),
        Some(Value::Object(m)) => m.clone(),
        Some(_) => {
            errors.push(format!("{name} must be an object"));
            Map::new()
        }
    };
    let params = section("params", &mut errors);
    let tolerance_doc = section("tolerances", &mut errors);

    let mut tolerances = BTreeMap::new();
    if let Some(sub) = &subcommand {
        let cli = Cli::command();
        let cmd = cli.find_subcommand(sub).expect("listed subcommand exists");
        let tol_keys = tolerance_keys(sub);
        let flags: Vec<&str> = cmd
            .get_arguments()
            .filter_map(|a| a.get_long())
            .filter(|l| !RESERVED.contains(l) && !tol_keys.contains(l))
            .collect();
        let all_keys: Vec<&str> = flags.iter().chain(tol_keys).copied().collect();

        for (key, value) in &params {
            let name = canonical(key);
            let Some(arg) = cmd.get_arguments().find(|a| a.get_long() == Some(name.as_str())) else {
                errors.push(unknown("parameter", key, &all_keys));
                continue;
            };
            if RESERVED.contains(&name.as_str()) {
                errors.push(format!("parameter {key:?} belongs at the top level"));
                continue;
            }
            let takes_values = arg.get_num_args().map_or(true, |n| n.takes_values());
            let shaped = match value {
                Value::Bool(_) if takes_values => Err("needs a value, not a boolean".to_string()),
                Value::Bool(_) | Value::Null => Ok(()),
                Value::Array(items) if items.iter().all(|i| scalar_text(i).is_some()) => Ok(()),
                other if scalar_text(other).is_some() => Ok(()),
                _ => Err("must be a string, number, boolean or list of those".to_string()),
            };
            if let Err(msg) = shaped {
                errors.push(format!("parameter {key:?} {msg}"));
                continue;
            }
            // parse this flag alone, detached from the other flags' requirements
            let probe = clap::Command::new("probe").no_binary_name(true).arg(
                arg.clone()
                    .required(false)
                    .requires(clap::builder::Resettable::<clap::Id>::Reset)
                    .required_unless_present(clap::builder::Resettable::<clap::Id>::Reset)
                    .conflicts_with(clap::builder::Resettable::<clap::Id>::Reset),
            );
            if let Err(e) = probe.try_get_matches_from(flag_argv(&name, value)) {
                errors.push(format!("parameter {key:?}: {}", first_line(&e.to_string())));
            }
        }

        for (key, value) in &tolerance_doc {
            let name = canonical(key);
            if !tol_keys.contains(&name.as_str()) {
                errors.push(unknown("tolerance", key, &all_keys));
                continue;
            }
            match value.as_f64() {
                Some(x) if x > 0.0 && x.is_finite() => {
                    tolerances.insert(name, x);
                }
                Some(_) => errors.push(format!("tolerance {key:?}: tolerance must be positive")),
                None => errors.push(format!("tolerance {key:?} must be a number")),
            }
        }
    }

    if !errors.is_empty() {
        return Err(ConfigErrors(errors));
    }
    let config = ExperimentConfig {
        subcommand: subcommand.expect("checked above"),
        params: params.into_iter().map(|(k, v)| (canonical(&k), v)).collect(),
        format,
        out,
        tolerances,
    };
    // whole-command checks: required flags, conflicts
    Cli::try_parse_from(config.to_argv()).map_err(|e| {
        ConfigErrors(vec![first_line(&e.to_string())])
    })?;
    Ok(config)
}

/// The leading paragraph of a clap error on one line.
fn first_line(msg: &str) -> String {
    let lines: Vec<&str> = msg.lines().take_while(|l| !l.trim().is_empty()).map(str::trim).collect();
    lines.join(" ").trim_start_matches("error: ").to_string()
}

fn flag_argv(key: &str, value: &Value) -> Vec<OsString> {
    let flag = format!("--{key}");
    match value {
        Value::Bool(true) => vec![flag.into()],
        Value::Bool(false) | Value::Null => vec![],
        Value::Array(items) => items
            .iter()
            .flat_map(|item| [flag.clone().into(), scalar_text(item).unwrap_or_default().into()])
            .collect(),
        other => vec![format!("{flag}={}", scalar_text(other).unwrap_or_default()).into()],
    }
}

impl ExperimentConfig {
    /// The equivalent command line.
    pub fn to_argv(&self) -> Vec<OsString> {
        let mut argv: Vec<OsString> = vec!["entroflow".into(), self.subcommand.clone().into()];
        for (key, value) in &self.params {
            argv.extend(flag_argv(key, value));
        }
        for (key, tol) in &self.tolerances {
            argv.push(format!("--{key}={}", Value::from(*tol)).into());
        }
        let format = match self.format {
            Format::Delimited => "delimited",
            Format::Structured => "structured",
        };
        argv.push(format!("--format={format}").into());
        if let Some(out) = &self.out {
            argv.push("--out".into());
            argv.push(out.clone().into());
        }
        argv
    }
}

pub fn load_config(path: &std::path::Path) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    Ok(validate_config(&text)?)
}
