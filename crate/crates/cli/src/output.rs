//! Output directory handling: hashed file names, CSV with `#` metadata, JSON.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use sdflow_core::RunManifest;

use crate::exit::CliError;

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "SDFLOW_OUTPUT_ROOT";
const DEFAULT_ROOT: &str = "sdflow-out";

pub struct Output {
    root: PathBuf,
    no_clobber: bool,
    pub manifest: RunManifest,
}

impl Output {
    pub fn new(root: Option<&Path>, no_clobber: bool, manifest: RunManifest) -> Result<Self, CliError> {
        let root = match root {
            Some(p) => p.to_path_buf(),
            None => std::env::var_os(OUTPUT_ROOT_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_ROOT)),
        };
        fs::create_dir_all(&root).map_err(|e| CliError::io(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self {
            root,
            no_clobber,
            manifest,
        })
    }

    pub fn hash(&self) -> &str {
        &self.manifest.config_hash
    }

    /// `<stem>_<hash>.<ext>`.
    pub fn name(&self, stem: &str, ext: &str) -> String {
        format!("{stem}_{}.{ext}", self.hash())
    }

    // Only plain relative names below the root are accepted.
    fn target(&mut self, name: &str) -> Result<PathBuf, CliError> {
        let rel = Path::new(name);
        let plain = rel
            .components()
            .all(|c| matches!(c, std::path::Component::Normal(_)));
        if !plain || name.is_empty() {
            return Err(CliError::io(format!("refusing to write `{name}` outside the output directory")));
        }
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        if self.no_clobber && path.exists() {
            return Err(CliError::io(format!("{} exists and --no-clobber is set", path.display())));
        }
        self.manifest.outputs.push(name.to_string());
        Ok(path)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.target(name)?;
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(e.to_string()))?;
        text.push('\n');
        write(&path, text.as_bytes())
    }

    /// CSV with `# key=value` lines, a header and one record per row.
    pub fn csv<R: Serialize>(
        &mut self,
        name: &str,
        meta: &[(&str, String)],
        header: &[&str],
        rows: impl IntoIterator<Item = R>,
    ) -> Result<(), CliError> {
        let path = self.target(name)?;
        let mut buf = Vec::new();
        for (k, v) in meta {
            buf.extend_from_slice(format!("# {k}={v}\n").as_bytes());
        }
        {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .has_headers(false)
                .from_writer(&mut buf);
            w.write_record(header)?;
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        write(&path, &buf)
    }

    /// Write the manifest last so it lists every output.
    pub fn finish(mut self, stem: &str) -> Result<RunManifest, CliError> {
        let name = self.name(stem, "manifest.json");
        let path = self.target(&name)?;
        let mut text = serde_json::to_string_pretty(&self.manifest).map_err(|e| CliError::io(e.to_string()))?;
        text.push('\n');
        write(&path, text.as_bytes())?;
        Ok(self.manifest)
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}
