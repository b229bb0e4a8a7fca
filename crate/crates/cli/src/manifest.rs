//! Run manifests: line-oriented `key<TAB>value` records written next to
//! every artifact.
//!
//! Keys:
//! * `tool`, `command` — who wrote it and which subcommand ran.
//! * `flag.--name` — a resolved flag value; `switch.--name` — a set switch.
//!   Together these reproduce the run through `lexdm replay`.
//! * `input.--name.sha256` — digest of the file given to that flag.
//! * `output.<file>.sha256` — digest of each artifact.
//! * anything else is informational (`seed`, `threads`, counts).

use std::ffi::OsString;
use std::fmt::Display;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::CliResult;

pub const FILE_NAME: &str = "manifest.tsv";

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunManifest {
    entries: Vec<(String, String)>,
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut hasher = Sha256::new();
    io::copy(&mut File::open(path)?, &mut hasher)?;
    Ok(hex::encode(hasher.finalize()))
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        let mut m = RunManifest::default();
        m.set("tool", format!("lexdm {}", env!("CARGO_PKG_VERSION")));
        m.set("command", command);
        m
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn flag(&mut self, name: &str, value: impl Display) {
        self.set(format!("flag.--{name}"), value);
    }

    pub fn switch(&mut self, name: &str, on: bool) {
        if on {
            self.set(format!("switch.--{name}"), "");
        }
    }

    /// Records an input file by absolute path and content digest.
    pub fn input(&mut self, name: &str, path: &Path) -> io::Result<()> {
        let abs = fs::canonicalize(path)?;
        let digest = sha256_file(&abs)?;
        self.flag(name, abs.display());
        self.set(format!("input.--{name}.sha256"), digest);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> io::Result<()> {
        let name = path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
        self.set(format!("output.{name}.sha256"), sha256_file(path)?);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> CliResult<String> {
        let mut out = String::new();
        for (k, v) in &self.entries {
            if v.contains(['\t', '\n', '\r']) || k.contains(['\t', '\n', '\r']) {
                return Err(format!("manifest entry '{k}' contains a tab or newline").into());
            }
            out.push_str(k);
            out.push('\t');
            out.push_str(v);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write_to_dir(&self, dir: &Path) -> CliResult<PathBuf> {
        let path = dir.join(FILE_NAME);
        fs::write(&path, self.render()?)?;
        Ok(path)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let mut m = RunManifest::default();
        for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('\t')
                .ok_or_else(|| format!("{}:{}: expected key<TAB>value", path.display(), i + 1))?;
            m.entries.push((k.to_string(), v.to_string()));
        }
        if m.get("command").is_none() {
            return Err(format!("{}: no command recorded", path.display()).into());
        }
        Ok(m)
    }

    /// Checks every recorded input digest against the file on disk.
    pub fn verify_inputs(&self) -> CliResult<()> {
        for (k, digest) in &self.entries {
            let Some(flag) = k.strip_prefix("input.").and_then(|k| k.strip_suffix(".sha256")) else {
                continue;
            };
            let path = self
                .get(&format!("flag.{flag}"))
                .ok_or_else(|| format!("manifest has a digest but no path for {flag}"))?;
            let actual = sha256_file(Path::new(path)).map_err(|e| format!("{path}: {e}"))?;
            if &actual != digest {
                return Err(format!("{path} changed since the manifest was written").into());
            }
        }
        Ok(())
    }

    /// The argument vector that re-runs this command into `out_dir`.
    pub fn replay_args(&self, out_dir: &Path) -> Vec<OsString> {
        let mut args: Vec<OsString> = vec!["lexdm".into(), self.get("command").unwrap_or_default().into()];
        for (k, v) in &self.entries {
            if let Some(flag) = k.strip_prefix("flag.") {
                // `=` keeps values that start with '-' attached to their flag
                args.push(format!("{flag}={v}").into());
            } else if let Some(flag) = k.strip_prefix("switch.") {
                args.push(flag.into());
            }
        }
        args.push("--out-dir".into());
        args.push(out_dir.into());
        args
    }
}
