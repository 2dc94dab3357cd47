//! File formats: PGM mask stacks, the F32V volume container and ellipse CSV.
//!
//! Every writer goes through a temporary file in the destination directory
//! followed by a rename, so a failed run leaves no partial output behind.

mod csv;
mod f32v;
mod pgm;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub use self::csv::{parse_ellipse_csv, read_ellipse_csv, render_ellipse_csv, write_ellipse_csv, CsvWarning};
pub use self::f32v::{decode_f32v, encode_f32v, read_f32v, write_f32v, F32V_MAGIC, F32V_VERSION};
pub use self::pgm::{decode_pgm, encode_pgm, read_mask_stack, read_pgm, slice_file_name, write_mask_stack, write_pgm};

use crate::error::{Error, Result};

fn parent_dir(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

/// Writes `bytes` to `path` via a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(parent_dir(path))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Writes a set of files into `dir` only once all of them have been staged.
pub(crate) fn write_all_atomic(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let staging = tempfile::Builder::new().prefix(".staging-").tempdir_in(dir)?;
    for (name, bytes) in files {
        fs::write(staging.path().join(name), bytes)?;
    }
    for (name, _) in files {
        fs::rename(staging.path().join(name), dir.join(name))?;
    }
    Ok(())
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::UnreadableFile {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Files in `dir` with the given extension, sorted by file name.
pub fn list_files(dir: &Path, extension: &str) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::UnreadableFile {
        path: dir.to_path_buf(),
        reason: e.to_string(),
    })?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case(extension)) {
            files.push(path);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}
