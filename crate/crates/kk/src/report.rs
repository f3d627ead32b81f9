//! Run reports: deterministic, tolerance-annotated certificates in
//! both human-readable and JSON form.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::time::Instant;

/// SHA-256 hex digest of raw input bytes.
pub fn digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Serialize)]
struct ResidualEntry {
    value: f64,
    tolerance: f64,
}

/// Certificate accumulator; keys are ordered so output is
/// deterministic for identical inputs.
pub struct Report {
    command: String,
    input_digest: String,
    verdicts: BTreeMap<String, bool>,
    residuals: BTreeMap<String, ResidualEntry>,
    certificates: BTreeMap<String, serde_json::Value>,
    started: Instant,
}

impl Report {
    pub fn new(command: &str, input_digest: String) -> Self {
        Self {
            command: command.to_string(),
            input_digest,
            verdicts: BTreeMap::new(),
            residuals: BTreeMap::new(),
            certificates: BTreeMap::new(),
            started: Instant::now(),
        }
    }

    pub fn verdict(&mut self, name: &str, pass: bool) {
        self.verdicts.insert(name.to_string(), pass);
    }

    /// Every numerical claim carries the tolerance it was tested at.
    pub fn residual(&mut self, name: &str, value: f64, tolerance: f64) {
        self.residuals
            .insert(name.to_string(), ResidualEntry { value, tolerance });
    }

    pub fn certificate(&mut self, name: &str, value: serde_json::Value) {
        self.certificates.insert(name.to_string(), value);
    }

    pub fn print(&self, json: bool) {
        let wall_ms = self.started.elapsed().as_secs_f64() * 1e3;
        if json {
            let value = serde_json::json!({
                "command": self.command,
                "input_digest": self.input_digest,
                "verdicts": self.verdicts,
                "residuals": self.residuals,
                "certificates": self.certificates,
                "wall_time_ms": wall_ms,
            });
            println!("{}", serde_json::to_string_pretty(&value).unwrap());
            return;
        }
        println!("command: {}", self.command);
        if !self.input_digest.is_empty() {
            println!("input sha256: {}", self.input_digest);
        }
        for (name, pass) in &self.verdicts {
            println!("verdict {name}: {}", if *pass { "pass" } else { "FAIL" });
        }
        for (name, e) in &self.residuals {
            println!("residual {name}: {:.3e} (tolerance {:.1e})", e.value, e.tolerance);
        }
        for (name, value) in &self.certificates {
            println!("certificate {name}: {value}");
        }
        println!("wall time: {wall_ms:.1} ms");
    }
}
