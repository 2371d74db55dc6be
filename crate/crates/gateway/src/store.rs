use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use vi_probe_core::answer::RawResponse;

/// Append-only JSON Lines store of raw responses. Rows are never rewritten;
/// `finalize` derives the sorted log from it.
pub struct ResponseStore {
    path: PathBuf,
    file: File,
}

impl ResponseStore {
    pub fn open(path: &Path) -> io::Result<Self> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(ResponseStore {
            path: path.to_path_buf(),
            file,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, row: &RawResponse) -> io::Result<()> {
        let mut line = serde_json::to_string(row).map_err(io::Error::other)?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()
    }
}

/// Reads every row of a store. A torn final line (from an interrupted write) is skipped.
pub fn read_rows(path: &Path) -> io::Result<Vec<RawResponse>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut rows = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if let Ok(row) = serde_json::from_str::<RawResponse>(&line) {
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Successful rows by request hash; the cache consulted before probing.
pub fn cached(rows: &[RawResponse]) -> BTreeMap<String, RawResponse> {
    rows.iter()
        .filter(|r| r.is_ok())
        .map(|r| (r.request_hash.clone(), r.clone()))
        .collect()
}

/// One row per (item, prompt variant): the newest success, else the newest
/// failure. Sorted by item then variant.
pub fn finalize(rows: &[RawResponse]) -> Vec<RawResponse> {
    let mut best: BTreeMap<(String, vi_probe_core::prompt::PromptVariant), &RawResponse> = BTreeMap::new();
    for row in rows {
        let key = (row.item_id.clone(), row.prompt_variant);
        let replace = match best.get(&key) {
            None => true,
            Some(cur) => (row.is_ok(), row.timestamp) >= (cur.is_ok(), cur.timestamp),
        };
        if replace {
            best.insert(key, row);
        }
    }
    best.into_values().cloned().collect()
}

pub fn write_log(path: &Path, rows: &[RawResponse]) -> io::Result<()> {
    let mut out = String::new();
    for row in rows {
        out.push_str(&serde_json::to_string(row).map_err(io::Error::other)?);
        out.push('\n');
    }
    let tmp = path.with_extension("jsonl.tmp");
    fs::write(&tmp, out)?;
    fs::rename(tmp, path)
}

pub fn read_log(path: &Path) -> io::Result<Vec<RawResponse>> {
    read_rows(path)
}
