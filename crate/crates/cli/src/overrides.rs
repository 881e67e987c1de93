use std::path::Path;

use anyhow::{bail, Context, Result};
use regime_core::RunConfig;

/// Load a config file, or defaults when no path is given.
pub fn load(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(RunConfig::from_toml_str(&text)?)
        }
    }
}

/// Apply `key=value` overrides. Values are parsed as TOML literals, with a
/// bare-string fallback so `scenario=swept` works without quotes.
pub fn apply(cfg: RunConfig, assignments: &[String]) -> Result<RunConfig> {
    if assignments.is_empty() {
        return Ok(cfg);
    }
    let mut table: toml::Table = toml::from_str(&cfg.to_toml_string())?;
    for a in assignments {
        let Some((key, raw)) = a.split_once('=') else {
            bail!("override `{a}` is not of the form key=value");
        };
        let key = key.trim();
        let raw = raw.trim();
        let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
            Ok(mut t) => t.remove("v").expect("parsed key"),
            Err(_) => toml::Value::String(raw.to_string()),
        };
        table.insert(key.to_string(), value);
    }
    Ok(RunConfig::from_toml_str(&toml::to_string(&table)?)?)
}
