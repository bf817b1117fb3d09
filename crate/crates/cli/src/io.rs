//! File access and user-facing diagnostics.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;
use ttk_core::json::parse_tensor_json;
use ttk_core::stratum::StratumDescriptor;
use ttk_core::{Error, Hypermatrix};

#[derive(Debug)]
pub enum CliError {
    /// Malformed stratum string; `pos` is a byte offset into `spec`.
    Spec { spec: String, pos: usize, msg: String },
    /// Malformed input file; `pos` is a byte offset into `text`.
    File { path: PathBuf, text: String, pos: usize, msg: String },
    Io { path: PathBuf, err: std::io::Error },
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

/// 1-based line and column of byte offset `pos`.
pub fn line_col(text: &str, pos: usize) -> (usize, usize) {
    let pos = pos.min(text.len());
    let before = &text[..pos];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(pos, |nl| pos - nl - 1) + 1;
    (line, col)
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Spec { spec, pos, msg } => {
                let col = spec[..(*pos).min(spec.len())].chars().count();
                writeln!(f, "error: invalid stratum at column {}: {msg}", col + 1)?;
                writeln!(f, "  {spec}")?;
                write!(f, "  {}^", " ".repeat(col))
            }
            CliError::File { path, text, pos, msg } => {
                let (line, col) = line_col(text, *pos);
                write!(f, "error: {}:{line}:{col}: {msg}", path.display())?;
                if let Some(src) = text.lines().nth(line - 1) {
                    let shown: String = src.chars().take(120).collect();
                    write!(f, "\n  {shown}\n  {}^", " ".repeat(col.saturating_sub(1).min(120)))?;
                }
                Ok(())
            }
            CliError::Io { path, err } => write!(f, "error: {}: {err}", path.display()),
            CliError::Core(e) => write!(f, "error: {e}"),
        }
    }
}

pub fn parse_stratum(spec: &str) -> Result<StratumDescriptor, CliError> {
    let s: StratumDescriptor = spec.parse().map_err(|e| match e {
        Error::Parse { pos, msg } => CliError::Spec { spec: spec.to_string(), pos, msg },
        other => CliError::Spec { spec: spec.to_string(), pos: 0, msg: other.to_string() },
    })?;
    s.validate().map_err(|e| CliError::Spec { spec: spec.to_string(), pos: 0, msg: e.to_string() })?;
    Ok(s)
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|err| CliError::Io { path: path.to_path_buf(), err })
}

pub fn read_tensor(path: &Path) -> Result<Hypermatrix, CliError> {
    let text = read_text(path)?;
    match parse_tensor_json(&text) {
        Ok(t) => Ok(t.into_dense()),
        Err(Error::Parse { pos, msg }) => Err(CliError::File { path: path.to_path_buf(), text, pos, msg }),
        Err(e) => Err(e.into()),
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |err| CliError::Io { path: path.to_path_buf(), err };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_col_counts_from_one() {
        assert_eq!(line_col("ab\ncd", 0), (1, 1));
        assert_eq!(line_col("ab\ncd", 4), (2, 2));
        assert_eq!(line_col("ab", 99), (1, 3));
    }

    #[test]
    fn spec_diagnostic_points_at_key() {
        let e = parse_stratum("rank:r=2;colour=3;field=real").unwrap_err();
        let text = e.to_string();
        assert!(text.contains("column 10"), "{text}");
        assert!(text.ends_with("         ^"), "{text}");
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        write_atomic(&p, "first").unwrap();
        write_atomic(&p, "second").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "second");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
