//! Single-threaded, atomic result writing.

use std::io::{self, Write};
use std::path::Path;

use tempfile::NamedTempFile;

/// Writes `content` to `path` through a sibling temporary file and a rename,
/// or to stdout when no path is given.
pub fn emit(path: Option<&Path>, content: &str) -> io::Result<()> {
    let Some(path) = path else {
        let mut out = io::stdout().lock();
        out.write_all(content.as_bytes())?;
        if !content.ends_with('\n') {
            out.write_all(b"\n")?;
        }
        return out.flush();
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(content.as_bytes())?;
    if !content.ends_with('\n') {
        tmp.write_all(b"\n")?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// `x,value` rows, or `a,b,x,value` when the probe is given. `{}` prints the
/// shortest decimal that parses back to the same `f64`.
pub fn csv_row(probe: Option<(f64, f64)>, x: f64, value: f64) -> String {
    match probe {
        Some((a, b)) => format!("{a},{b},{x},{value}\n"),
        None => format!("{x},{value}\n"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_round_trip() {
        let (x, v) = (0.1 + 0.2, std::f64::consts::PI / 7.0);
        let row = csv_row(None, x, v);
        let parts: Vec<f64> = row.trim().split(',').map(|p| p.parse().unwrap()).collect();
        assert_eq!(parts, vec![x, v]);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        std::fs::write(&path, "old").unwrap();
        emit(Some(&path), "{}").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "{}\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
