//! Output files: atomic writes and the shared CSV comment header.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const ENGINE_VERSION: &str = concat!("rotorlab ", env!("CARGO_PKG_VERSION"));

/// How origin visits are counted everywhere in this crate.
pub const COUNTING_CONVENTION: &str = "origin visits count the initial placement at step 0 plus every later arrival at the origin; a box B[0,n] is left at the first step whose position has infinity-norm > n";

/// Writes `bytes` to a sibling temp file and renames it over `path`, so a
/// failed run never leaves a partial file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic_with(path, |w| w.write_all(bytes))
}

/// Like [`write_atomic`], but streams the contents through a buffered writer.
pub fn write_atomic_with(
    path: &Path,
    write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<()> {
    let mut tmp = PathBuf::from(path);
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    tmp.set_file_name(format!(".{name}.tmp"));
    let result = (|| {
        let mut w = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
        write(&mut w)?;
        let f = w.into_inner().map_err(|e| e.into_error())?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// Builds a CSV document: one `# ` comment line, a header row, data rows.
/// Lines end in LF.
#[derive(Debug, Clone)]
pub struct CsvDoc {
    text: String,
}

impl CsvDoc {
    pub fn new(comment: &str, header: &[&str]) -> Self {
        let mut text = String::new();
        text.push_str("# ");
        text.push_str(&comment.replace('\n', " "));
        text.push('\n');
        text.push_str(&header.join(","));
        text.push('\n');
        CsvDoc { text }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut first = true;
        for f in fields {
            if !first {
                self.text.push(',');
            }
            self.text.push_str(f.as_ref());
            first = false;
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.text.as_bytes())
    }
}

/// Column names for the coordinates of a `d`-dimensional point.
pub fn coord_headers(d: usize) -> Vec<String> {
    match d {
        1 => vec!["x".into()],
        2 => vec!["x".into(), "y".into()],
        3 => vec!["x".into(), "y".into(), "z".into()],
        _ => (1..=d).map(|i| format!("x{i}")).collect(),
    }
}
