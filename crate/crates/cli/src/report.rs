//! Structured run reports: command echo, input digest, emitted files with
//! inline summaries, and named verdicts with margins.

use std::path::Path;

pub struct RunReport {
    command: String,
    digest: String,
    seed: u64,
    notes: Vec<String>,
    kvs: Vec<(String, String)>,
    outputs: Vec<(String, String)>,
    verdicts: Vec<(String, bool, String)>,
}

impl RunReport {
    pub fn new(command: String, digest: &str, seed: u64) -> Self {
        Self {
            command,
            digest: digest.to_string(),
            seed,
            notes: Vec::new(),
            kvs: Vec::new(),
            outputs: Vec::new(),
            verdicts: Vec::new(),
        }
    }

    pub fn add_output(&mut self, path: &Path, summary: String) {
        self.outputs.push((path.display().to_string(), summary));
    }

    pub fn add_kv(&mut self, key: &str, value: String) {
        self.kvs.push((key.to_string(), value));
    }

    pub fn add_note(&mut self, note: String) {
        self.notes.push(note);
    }

    pub fn add_verdict(&mut self, name: &str, pass: bool, detail: String) {
        self.verdicts.push((name.to_string(), pass, detail));
    }
}

impl std::fmt::Display for RunReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "command: {}", self.command)?;
        writeln!(f, "inputs: digest=fnv1a:{} seed={}", self.digest, self.seed)?;
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        for (k, v) in &self.kvs {
            writeln!(f, "{k}: {v}")?;
        }
        for (path, summary) in &self.outputs {
            writeln!(f, "output: {path} ({summary})")?;
        }
        for (name, pass, detail) in &self.verdicts {
            writeln!(
                f,
                "verdict: {name} {} ({detail})",
                if *pass { "pass" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

/// FNV-1a hash of the raw input bytes, hex-encoded.
pub fn fnv1a64(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}
