//! File emission. Every document carries tool version, input hash and tolerances.

use std::collections::BTreeMap;

use pzk_core::render::Image;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const TOOL: &str = "pzk";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// SHA-256 of the command name and its canonical inputs.
    pub input_hash: String,
    pub inputs: BTreeMap<String, String>,
    pub tolerances: BTreeMap<String, f64>,
}

impl Meta {
    pub fn new(command: &str, inputs: BTreeMap<String, String>, tolerances: BTreeMap<String, f64>) -> Self {
        Meta { tool: TOOL, version: VERSION, command: command.into(), input_hash: input_hash(command, &inputs), inputs, tolerances }
    }
}

pub fn input_hash(command: &str, inputs: &BTreeMap<String, String>) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    for (k, v) in inputs {
        h.update([0u8]);
        h.update(k.as_bytes());
        h.update([b'=']);
        h.update(v.as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    meta: &'a Meta,
    result: &'a T,
}

pub fn json_document<T: Serialize>(meta: &Meta, result: &T) -> serde_json::Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(&Document { meta, result })?;
    out.push(b'\n');
    Ok(out)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Meta as `#` comment lines, then a header row and data rows.
pub fn csv_document(meta: &Meta, header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut s = String::new();
    s.push_str(&format!("# {} {} {}\n", meta.tool, meta.version, meta.command));
    s.push_str(&format!("# input_hash: {}\n", meta.input_hash));
    for (k, v) in &meta.inputs {
        s.push_str(&format!("# input {k}: {v}\n"));
    }
    for (k, v) in &meta.tolerances {
        s.push_str(&format!("# tolerance {k}: {v:e}\n"));
    }
    s.push_str(&header.join(","));
    s.push('\n');
    for r in rows {
        let fields: Vec<String> = r.iter().map(|f| csv_field(f)).collect();
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s.into_bytes()
}

/// Binary PPM with the meta block as a single header comment.
pub fn ppm_document(meta: &Meta, image: &Image) -> Vec<u8> {
    let json = serde_json::to_string(meta).expect("meta serializes");
    let mut out = format!("P6\n# {json}\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.data);
    out
}
