use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use tw_edge::EdgeParams;

use crate::CliError;

/// `x` rounded to `digits` significant digits, in fixed notation where sensible.
pub fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..15).contains(&mag) {
        return format!("{:.*e}", digits - 1, x);
    }
    let fixed = |mag: i32| format!("{:.*}", (digits as i32 - 1 - mag).max(0) as usize, x);
    let s = fixed(mag);
    // Rounding may carry into a new leading digit (9.999996 -> 10.00000).
    match s.parse::<f64>() {
        Ok(r) if r.abs() >= 10f64.powi(mag + 1) => fixed(mag + 1),
        _ => s,
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: &'static str,
    pub config: serde_json::Value,
    pub edge: Option<EdgeParams>,
    pub outputs: Vec<PathBuf>,
    pub master_seed: Option<u64>,
    pub wall_time_secs: f64,
    pub created_unix: u64,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION"),
            config,
            edge: None,
            outputs: Vec::new(),
            master_seed: None,
            wall_time_secs: 0.0,
            created_unix: 0,
        }
    }
}

/// Where a command's results go: files under `--out DIR`, or stdout.
///
/// The manifest is written to `DIR/manifest.json`, or as a single JSON
/// line on stderr when there is no output directory.
pub struct Sink {
    dir: Option<PathBuf>,
    written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: Option<&Path>) -> Result<Self, CliError> {
        if let Some(d) = dir {
            fs::create_dir_all(d).map_err(|e| CliError::Failure(format!("cannot create {}: {e}", d.display())))?;
        }
        Ok(Self {
            dir: dir.map(Path::to_path_buf),
            written: Vec::new(),
        })
    }

    pub fn emit(&mut self, file_name: &str, contents: &str) -> Result<(), CliError> {
        match &self.dir {
            None => print!("{contents}"),
            Some(d) => {
                let path = d.join(file_name);
                fs::write(&path, contents)
                    .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))?;
                println!("wrote {}", path.display());
                self.written.push(path);
            }
        }
        Ok(())
    }

    pub fn finish(self, mut manifest: RunManifest, wall_time_secs: f64) -> Result<(), CliError> {
        manifest.outputs = self.written;
        manifest.wall_time_secs = wall_time_secs;
        manifest.created_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        match &self.dir {
            None => eprintln!(
                "manifest: {}",
                serde_json::to_string(&manifest).expect("manifest serializes")
            ),
            Some(d) => {
                let path = d.join("manifest.json");
                let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
                fs::write(&path, text + "\n")
                    .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))?;
            }
        }
        Ok(())
    }
}

pub fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(sig(3.7297454, 6), "3.72975");
        assert_eq!(sig(0.5, 6), "0.500000");
        assert_eq!(sig(4.0, 6), "4.00000");
        assert_eq!(sig(24.702788, 6), "24.7028");
        assert_eq!(sig(9.9999996, 6), "10.0000");
        assert_eq!(sig(-0.0645729, 6), "-0.0645729");
        assert_eq!(sig(1.5e-7, 3), "1.50e-7");
        assert_eq!(sig(0.0, 6), "0");
    }
}
