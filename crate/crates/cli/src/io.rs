//! File loading, number formatting and report emission.

use std::fmt::Display;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use scenario_core::tree::bundle::Bundle;
use scenario_core::tree::model::ScenarioTree;

use crate::{Format, Output};

#[derive(Debug)]
pub enum CliError {
    Io { path: PathBuf, source: std::io::Error },
    Parse { path: PathBuf, message: String },
    Domain(String),
    Usage(String),
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Parse { path, message } => write!(f, "{}: {message}", path.display()),
            CliError::Domain(m) => f.write_str(m),
            CliError::Usage(m) => write!(f, "usage: {m}"),
        }
    }
}

pub fn domain(e: impl Display) -> CliError {
    CliError::Domain(e.to_string())
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::Parse { path: path.to_path_buf(), message: e.to_string() })
}

/// A single tree, an array of trees, or a bundle.
pub fn load_trees(path: &Path) -> Result<Vec<ScenarioTree>, CliError> {
    let v: Value = load(path)?;
    let parse = |v: Value| -> Result<Vec<ScenarioTree>, serde_json::Error> {
        if v.is_array() {
            serde_json::from_value(v)
        } else if v.get("trees").is_some() {
            let b: Bundle = serde_json::from_value(v)?;
            Ok(b.selected().cloned().collect())
        } else {
            Ok(vec![serde_json::from_value(v)?])
        }
    };
    parse(v).map_err(|e| CliError::Parse { path: path.to_path_buf(), message: e.to_string() })
}

pub fn load_tree(path: &Path) -> Result<ScenarioTree, CliError> {
    let mut trees = load_trees(path)?;
    if trees.len() != 1 {
        return Err(CliError::Usage(format!("{} holds {} trees, expected one", path.display(), trees.len())));
    }
    Ok(trees.remove(0))
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Twelve decimals with trailing zeros trimmed, so `0.7 × 0.8` prints as `0.56`.
pub fn num(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

pub fn emit(output: &Output, body: &str) -> Result<(), CliError> {
    match &output.out {
        Some(path) => std::fs::write(path, body).map_err(|source| CliError::Io { path: path.clone(), source }),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

pub fn unsupported(output: &Output, command: &str) -> CliError {
    let name = match output.format {
        Format::Text => "text",
        Format::Json => "json",
        Format::Csv => "csv",
        Format::Dot => "dot",
    };
    CliError::Usage(format!("{command} has no {name} output"))
}
