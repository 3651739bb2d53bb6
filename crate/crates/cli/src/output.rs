//! Output directories and their run manifests.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    /// Resolved configuration with every default filled in.
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub created: String,
}

pub fn digest(path: &Path) -> CliResult<FileDigest> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
        bytes: bytes.len() as u64,
    })
}

/// Collects the files a subcommand writes, then seals them with a manifest.
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Write `name` through a buffered writer.
    pub fn write(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<fs::File>) -> invset_core::Result<()>,
    ) -> CliResult<()> {
        invset_core::io::to_file(&self.path(name), f)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> CliResult<()> {
        self.write(name, |w| Ok(w.write_all(text.as_bytes())?))
    }

    /// Digest every output and write the manifest last.
    pub fn finish(
        self,
        subcommand: &str,
        seed: Option<u64>,
        threads: Option<usize>,
        config: serde_json::Value,
        inputs: &[&Path],
    ) -> CliResult<PathBuf> {
        let mut outputs = Vec::with_capacity(self.written.len());
        for name in &self.written {
            let mut d = digest(&self.path(name))?;
            d.path = name.clone();
            outputs.push(d);
        }
        let manifest = RunManifest {
            subcommand: subcommand.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            threads,
            config,
            inputs: inputs.iter().map(|p| digest(p)).collect::<CliResult<_>>()?,
            outputs,
            created: humantime::format_rfc3339_seconds(SystemTime::now()).to_string(),
        };
        let path = self.path(MANIFEST);
        let text = serde_json::to_string_pretty(&manifest).map_err(invset_core::Error::from)? + "\n";
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}
