//! Output directory with atomic writes and a record of every emitted file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Format;
use crate::error::{HarnessError, Result};
use crate::table::Table;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileRecord {
    /// Path relative to the output directory.
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<FileRecord>,
}

pub fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Writes `data` to a temporary sibling and renames it into place, so readers never see
/// a half-written file.
pub fn write_atomic(path: &Path, data: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(data)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(HarnessError::io(path, e));
    }
    Ok(())
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[FileRecord] {
        &self.files
    }

    pub fn write(&mut self, name: &str, data: &[u8]) -> Result<()> {
        write_atomic(&self.dir.join(name), data)?;
        self.files.push(FileRecord {
            path: name.to_string(),
            bytes: data.len(),
            sha256: sha256_hex(data),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut data = serde_json::to_vec_pretty(value).expect("reports serialize");
        data.push(b'\n');
        self.write(name, &data)
    }

    /// Writes `stem.csv` or `stem.json` depending on `format`.
    pub fn write_table(&mut self, stem: &str, table: &Table, format: Format) -> Result<()> {
        self.write(
            &format!("{stem}.{}", format.extension()),
            &table.encode(format),
        )
    }
}
