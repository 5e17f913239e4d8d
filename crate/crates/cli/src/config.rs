//! Run configuration: one JSON document, optionally patched by `--set` flags.

use std::path::Path;

use gapsit::{AtomChainParams, MediumParams, Model, RapidityMode, SolverConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Scan points: either `start`/`stop`/`points` or an explicit `values` list.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl Grid {
    pub fn linspace(start: f64, stop: f64, points: usize) -> Self {
        Grid {
            start: Some(start),
            stop: Some(stop),
            points: Some(points),
            values: None,
        }
    }

    pub fn values(values: Vec<f64>) -> Self {
        Grid {
            values: Some(values),
            ..Grid::default()
        }
    }

    pub fn resolve(&self) -> Result<Vec<f64>, CliError> {
        let bad = |msg: String| CliError::Config(format!("grid: {msg}"));
        let pts = match (self.start, self.stop, self.points, &self.values) {
            (None, None, None, Some(v)) => v.clone(),
            (Some(start), Some(stop), Some(points), None) => {
                if points < 2 {
                    return Err(bad(format!("points must be at least 2, got {points}")));
                }
                if !start.is_finite() || !stop.is_finite() {
                    return Err(bad("start and stop must be finite".to_string()));
                }
                if start >= stop {
                    return Err(bad(format!("start {start} must be below stop {stop}")));
                }
                gapsit::numerics::linspace(start, stop, points)
            }
            _ => {
                return Err(bad(
                    "give either start, stop and points, or values".to_string()
                ))
            }
        };
        if pts.len() < 2 {
            return Err(bad(format!(
                "at least 2 points required, got {}",
                pts.len()
            )));
        }
        if pts.iter().any(|x| !x.is_finite()) {
            return Err(bad("values must be finite".to_string()));
        }
        if pts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("values must be strictly increasing".to_string()));
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub medium: MediumParams,
    pub atoms: AtomChainParams,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub rapidity_mode: RapidityMode,
    #[serde(default)]
    pub output_format: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
}

impl RunConfig {
    /// Gap (1, 2), transition at 1.5, beta = 0.01, c = 1.
    pub fn reference() -> Self {
        RunConfig {
            medium: MediumParams::new(1.0, 2.0, 1.0).expect("reference medium"),
            atoms: AtomChainParams::new(1.5, 0.01, 0.015, 1.0, 100.0).expect("reference atoms"),
            solver: SolverConfig::default(),
            rapidity_mode: RapidityMode::Fgm,
            output_format: OutputFormat::Csv,
            grid: None,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.medium.validate()?;
        self.solver.validate()?;
        if let Some(g) = &self.grid {
            g.resolve()?;
        }
        Ok(())
    }

    pub fn model(&self) -> Model {
        Model::new(self.medium, self.atoms, self.rapidity_mode)
    }

    /// Grid points, or `fallback` when the config has no grid.
    pub fn grid_or(&self, fallback: Grid) -> Result<Vec<f64>, CliError> {
        self.grid.as_ref().unwrap_or(&fallback).resolve()
    }
}

/// Reads the config at `path` (or the reference config), applies `key=value`
/// overrides on dotted paths and validates the result.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = match (path, overrides.is_empty()) {
        (Some(p), true) => {
            let text = read(p)?;
            let mut de = serde_json::Deserializer::from_str(&text);
            serde_path_to_error::deserialize(&mut de)
                .map_err(|e| field_error(&p.display().to_string(), e))?
        }
        _ => {
            let mut value = match path {
                Some(p) => serde_json::from_str(&read(p)?)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
                None => reference_value(),
            };
            for item in overrides {
                apply_override(&mut value, item)?;
            }
            serde_path_to_error::deserialize(value).map_err(|e| field_error("config", e))?
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

fn read(p: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
}

fn field_error(source: &str, e: serde_path_to_error::Error<serde_json::Error>) -> CliError {
    CliError::Config(format!("{source}: field `{}`: {}", e.path(), e.inner()))
}

fn reference_value() -> Value {
    let mut v = serde_json::to_value(RunConfig::reference()).expect("reference config serializes");
    // Derived from rho and length; leaving it in would pin it against overrides.
    if let Some(atoms) = v.get_mut("atoms").and_then(Value::as_object_mut) {
        atoms.remove("m_atoms");
    }
    v
}

/// Applies `a.b.c=value`; the value is parsed as JSON and falls back to a string.
pub fn apply_override(root: &mut Value, item: &str) -> Result<(), CliError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set `{item}`: expected key=value")))?;
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!(
            "--set `{item}`: empty path segment"
        )));
    }
    for part in &parts[..parts.len() - 1] {
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
        let obj = node.as_object_mut().ok_or_else(|| {
            CliError::Config(format!("--set `{item}`: `{part}` is not inside an object"))
        })?;
        node = obj
            .entry(part.to_string())
            .or_insert(Value::Object(Default::default()));
    }
    if node.is_null() {
        *node = Value::Object(Default::default());
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| CliError::Config(format!("--set `{item}`: parent is not an object")))?;
    obj.insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(())
}
