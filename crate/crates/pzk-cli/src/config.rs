//! Run settings resolved from flags, then `PZK_*` environment variables, then a
//! `key = value` config file.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use pzk_core::poly::DEFAULT_TOL;

#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub tol: f64,
    /// Worker threads; `None` lets rayon decide.
    pub threads: Option<usize>,
}

/// Values collected from one source, keyed by schema name (`tol`, `threads`).
pub type Layer = BTreeMap<String, String>;

/// Parses `key = value` lines; `#` starts a comment. Keys may carry the `PZK_` prefix.
pub fn parse_config(text: &str) -> Result<Layer, String> {
    let mut out = Layer::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("config line {}: expected key = value", i + 1))?;
        out.insert(normalize_key(k.trim()), v.trim().to_string());
    }
    Ok(out)
}

fn normalize_key(k: &str) -> String {
    let k = k.to_ascii_lowercase();
    k.strip_prefix("pzk_").unwrap_or(&k).replace('-', "_")
}

pub fn read_config(path: &Path) -> Result<Layer, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_config(&text)
}

/// `PZK_TOL` and `PZK_THREADS` from the process environment.
pub fn env_layer() -> Layer {
    let mut out = Layer::new();
    for key in ["tol", "threads"] {
        if let Ok(v) = std::env::var(format!("PZK_{}", key.to_ascii_uppercase())) {
            out.insert(key.into(), v);
        }
    }
    out
}

fn pick<T: FromStr>(key: &str, flag: Option<T>, env: &Layer, file: &Layer) -> Result<Option<T>, String> {
    if flag.is_some() {
        return Ok(flag);
    }
    for (src, layer) in [("environment", env), ("config file", file)] {
        if let Some(v) = layer.get(key) {
            return v.parse().map(Some).map_err(|_| format!("{src}: cannot parse {key} = {v:?}"));
        }
    }
    Ok(None)
}

pub fn resolve(flag_tol: Option<f64>, flag_threads: Option<usize>, env: &Layer, file: &Layer) -> Result<Settings, String> {
    let tol = pick("tol", flag_tol, env, file)?.unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0 && tol < 1.0) {
        return Err(format!("tol = {tol} must lie in (0, 1)"));
    }
    let threads = pick("threads", flag_threads, env, file)?;
    if threads == Some(0) {
        return Err("threads must be positive".into());
    }
    Ok(Settings { tol, threads })
}
