use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::errors::CliError;

/// Reproducibility record written next to every command's outputs. Holds
/// no timestamps, so reruns with identical inputs are byte-identical.
pub struct RunManifest {
    pub command: &'static str,
    pub seed: Option<u64>,
    entries: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            seed: None,
            entries: Vec::new(),
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.entries.push((format!("param:{key}"), value.to_string()));
        self
    }

    /// Record an input file's path and content hash.
    pub fn input(mut self, label: &str, path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path)?;
        let digest = Sha256::digest(&bytes);
        let mut hex = String::with_capacity(64);
        for byte in digest {
            let _ = write!(hex, "{byte:02x}");
        }
        self.entries.push((format!("input:{label}"), path.display().to_string()));
        self.entries.push((format!("sha256:{label}"), hex));
        Ok(self)
    }

    pub fn write(mut self, out_dir: &Path) -> Result<(), CliError> {
        let mut text = String::new();
        let _ = writeln!(text, "command={}", self.command);
        let _ = writeln!(text, "version={}", env!("CARGO_PKG_VERSION"));
        if let Some(seed) = self.seed {
            let _ = writeln!(text, "seed={seed}");
        }
        let _ = writeln!(text, "out={}", out_dir.display());
        self.entries.sort();
        for (key, value) in &self.entries {
            let _ = writeln!(text, "{key}={value}");
        }
        std::fs::write(out_dir.join("manifest.txt"), text)?;
        Ok(())
    }
}
