//! JSON config file. Every key mirrors a command-line flag; flags win.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tumorsim::compose::{GeneratorConfig, Preset};
use tumorsim::solver::SolverConfig;
use tumorsim::volume::Spacing;

use crate::error::{CliError, Result};
use crate::io::read_text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AlphaMode {
    /// The alpha recorded when the sample was generated.
    #[default]
    Stored,
    /// Force alpha = 1.
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Supervised,
    Real,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub pool: Option<PathBuf>,
    pub roi: Option<PathBuf>,
    pub count: Option<usize>,
    pub preset: Option<Preset>,
    pub workers: Option<usize>,
    pub weights: Option<[f64; 4]>,
    pub alpha_mode: Option<AlphaMode>,
    pub mode: Option<Mode>,
    pub spacing: Option<Spacing>,
    /// Partial generator settings merged over the preset.
    pub generator: Option<Value>,
    /// Partial solver settings merged over the defaults.
    pub solver: Option<Value>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = read_text(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    /// Preset defaults with the `generator` object merged on top.
    pub fn generator(&self, preset: Preset) -> Result<GeneratorConfig> {
        let mut base = GeneratorConfig::for_preset(preset);
        if let Some(overlay) = &self.generator {
            base = merged(&base, overlay, "generator")?;
            base.preset = preset;
        }
        base.validate()?;
        Ok(base)
    }

    pub fn solver(&self) -> Result<SolverConfig> {
        match &self.solver {
            Some(overlay) => merged(&SolverConfig::default(), overlay, "solver"),
            None => Ok(SolverConfig::default()),
        }
    }
}

fn merged<T>(base: &T, overlay: &Value, key: &str) -> Result<T>
where
    T: Serialize + for<'de> Deserialize<'de>,
{
    let err = |e: serde_json::Error| CliError::Config {
        path: PathBuf::from(key),
        reason: e.to_string(),
    };
    let mut value = serde_json::to_value(base).map_err(err)?;
    merge(&mut value, overlay);
    serde_json::from_value(value).map_err(err)
}

/// Recursive object merge; non-object values replace.
pub fn merge(base: &mut Value, overlay: &Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}

fn parse_floats<const N: usize>(s: &str, what: &str) -> std::result::Result<[f64; N], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(format!("{what} needs {N} comma-separated numbers, got {s:?}"));
    }
    let mut out = [0.0; N];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = p.parse().map_err(|_| format!("{what}: {p:?} is not a number"))?;
    }
    Ok(out)
}

pub fn parse_weights(s: &str) -> std::result::Result<[f64; 4], String> {
    parse_floats::<4>(s, "weights")
}

pub fn parse_spacing(s: &str) -> std::result::Result<Spacing, String> {
    parse_floats::<3>(s, "spacing")
}

pub fn parse_window(s: &str) -> std::result::Result<(f64, f64), String> {
    let [lo, hi] = parse_floats::<2>(s, "window")?;
    Ok((lo, hi))
}

pub fn parse_dims(s: &str) -> std::result::Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b, c] => {
            let p = |t: &str| t.parse::<usize>().map_err(|_| format!("dims: {t:?} is not an integer"));
            Ok([p(a)?, p(b)?, p(c)?])
        }
        _ => Err(format!("dims needs 3 comma-separated integers, got {s:?}")),
    }
}
