//! Run manifests: a reproducibility record written next to a command's
//! outputs, tying every reported number to the hash of the exact
//! configuration that produced it.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// What one command run did: the configuration snapshot and its SHA-256,
/// the seeds, per-stage wall times, the per-pixel rate when meaningful, and
/// every output path written.
#[derive(Debug, Clone)]
pub struct RunManifest {
    command: String,
    config_text: String,
    config_sha256: String,
    seeds: Vec<u64>,
    stages: Vec<(String, Duration)>,
    per_pixel: Option<Duration>,
    outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, config_text: impl Into<String>) -> Self {
        let config_text = config_text.into();
        let config_sha256 = hex(&Sha256::digest(config_text.as_bytes()));
        RunManifest {
            command: command.into(),
            config_text,
            config_sha256,
            seeds: Vec::new(),
            stages: Vec::new(),
            per_pixel: None,
            outputs: Vec::new(),
        }
    }

    pub fn config_sha256(&self) -> &str {
        &self.config_sha256
    }

    pub fn add_seed(&mut self, seed: u64) {
        self.seeds.push(seed);
    }

    pub fn record_stage(&mut self, name: impl Into<String>, elapsed: Duration) {
        self.stages.push((name.into(), elapsed));
    }

    /// Run `f` and record its wall time under `name`.
    pub fn time_stage<T>(&mut self, name: impl Into<String>, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.record_stage(name, start.elapsed());
        out
    }

    pub fn set_per_pixel(&mut self, elapsed: Duration) {
        self.per_pixel = Some(elapsed);
    }

    pub fn add_output(&mut self, path: impl AsRef<Path>) {
        self.outputs.push(path.as_ref().display().to_string());
    }

    pub fn stages(&self) -> &[(String, Duration)] {
        &self.stages
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "command = {}", self.command).unwrap();
        writeln!(out, "config_sha256 = {}", self.config_sha256).unwrap();
        let seeds: Vec<String> = self.seeds.iter().map(|s| s.to_string()).collect();
        writeln!(out, "seeds = {}", seeds.join(",")).unwrap();
        for (name, elapsed) in &self.stages {
            writeln!(out, "stage[{name}] = {:.6}s", elapsed.as_secs_f64()).unwrap();
        }
        if let Some(pp) = self.per_pixel {
            writeln!(out, "per_pixel = {:.9}s", pp.as_secs_f64()).unwrap();
        }
        for path in &self.outputs {
            writeln!(out, "output = {path}").unwrap();
        }
        out.push_str("\n--- config ---\n");
        out.push_str(&self.config_text);
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.render())
            .map_err(|e| Error::io(path.display().to_string(), e))
    }
}

fn hex(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        write!(out, "{b:02x}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_content_sensitive() {
        let a = RunManifest::new("pipeline", "layers = 2\n");
        let b = RunManifest::new("pipeline", "layers = 2\n");
        let c = RunManifest::new("pipeline", "layers = 3\n");
        assert_eq!(a.config_sha256(), b.config_sha256());
        assert_ne!(a.config_sha256(), c.config_sha256());
        assert_eq!(a.config_sha256().len(), 64);
        assert!(a.config_sha256().chars().all(|ch| ch.is_ascii_hexdigit()));
    }

    #[test]
    fn render_lists_every_recorded_field() {
        let mut m = RunManifest::new("demo", "seed = 4\n");
        m.add_seed(4);
        m.add_seed(5);
        m.record_stage("solve", Duration::from_millis(125));
        m.set_per_pixel(Duration::from_micros(42));
        m.add_output("out/points.csv");
        let text = m.render();
        assert!(text.contains("command = demo"));
        assert!(text.contains(&format!("config_sha256 = {}", m.config_sha256())));
        assert!(text.contains("seeds = 4,5"));
        assert!(text.contains("stage[solve] = 0.125"));
        assert!(text.contains("per_pixel = 0.000042000s"));
        assert!(text.contains("output = out/points.csv"));
        assert!(text.ends_with("--- config ---\nseed = 4\n"));
    }

    #[test]
    fn time_stage_records_in_call_order() {
        let mut m = RunManifest::new("x", "");
        let v = m.time_stage("first", || 7);
        assert_eq!(v, 7);
        m.time_stage("second", || ());
        let names: Vec<&str> = m.stages().iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["first", "second"]);
    }
}
