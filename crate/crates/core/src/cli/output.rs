//! Output files: every file carries a header naming the tool version, the
//! command, the SHA-256 of the resolved configuration and the seed, and is
//! written to a temporary name and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
}

impl Header {
    pub fn new<C: Serialize>(command: &str, config: &C, seed: u64) -> Result<Self, CliError> {
        let bytes = serde_json::to_vec(config).map_err(|e| CliError::Config(e.to_string()))?;
        let digest = Sha256::digest(&bytes);
        let mut hex = String::with_capacity(64);
        for b in digest {
            write!(hex, "{b:02x}").expect("writing to a string");
        }
        Ok(Self {
            tool: "qcontrol",
            version: VERSION,
            command: command.to_owned(),
            config_sha256: hex,
            seed,
        })
    }

    fn csv_line(&self) -> String {
        format!(
            "# {} {} command={} config_sha256={} seed={}\n",
            self.tool, self.version, self.command, self.config_sha256, self.seed
        )
    }
}

/// `{:.16e}`: 17 significant digits, enough to round-trip any `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct Output {
    dir: PathBuf,
    header: Header,
    written: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    header: &'a Header,
    #[serde(flatten)]
    body: &'a T,
}

impl Output {
    pub fn new(dir: &Path, header: Header) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            header,
            written: Vec::new(),
        })
    }

    pub fn header(&self) -> &Header {
        &self.header
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn atomic_write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp{}", std::process::id()));
        let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(bytes).map_err(io)?;
        f.sync_all().map_err(io)?;
        drop(f);
        fs::rename(&tmp, &path).map_err(io)?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// CSV with a `#` header line, a column line and pre-formatted rows.
    pub fn csv(&mut self, name: &str, columns: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<PathBuf, CliError> {
        let mut s = self.header.csv_line();
        s.push_str(&columns.join(","));
        s.push('\n');
        for row in rows {
            debug_assert_eq!(row.len(), columns.len());
            s.push_str(&row.join(","));
            s.push('\n');
        }
        self.atomic_write(name, s.as_bytes())
    }

    /// JSON object with the header under `"header"` and the fields of `body`.
    pub fn json<T: Serialize>(&mut self, name: &str, body: &T) -> Result<PathBuf, CliError> {
        let mut bytes = serde_json::to_vec_pretty(&Stamped {
            header: &self.header,
            body,
        })
        .map_err(|e| CliError::Io(e.to_string()))?;
        bytes.push(b'\n');
        self.atomic_write(name, &bytes)
    }
}

/// Reads the data rows of a CSV written by [`Output::csv`], keyed by the
/// column line.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("record: {}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let columns: Vec<String> = lines
        .next()
        .ok_or_else(|| CliError::Config("record: file has no column line".into()))?
        .split(',')
        .map(|c| c.trim().to_owned())
        .collect();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| CliError::Config(format!("record: row {}: {e}", k + 1)))?;
        if row.len() != columns.len() {
            return Err(CliError::Config(format!("record: row {} has {} fields", k + 1, row.len())));
        }
        rows.push(row);
    }
    Ok((columns, rows))
}
