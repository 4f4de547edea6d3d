//! Corpus and artifact I/O: JSON-Lines corpora with line-numbered parse
//! errors, and atomic (write-then-rename) file output so partial files never
//! appear under a final name.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use friendtrain::Instance;

pub fn read_jsonl(path: &Path) -> Result<Vec<Instance>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read corpus {}", path.display()))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let inst: Instance = serde_json::from_str(line).with_context(|| {
            format!("{}:{}: malformed instance", path.display(), lineno + 1)
        })?;
        out.push(inst);
    }
    Ok(out)
}

pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create directory {}", dir.display()))?;
    }
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or_else(|| Path::new(".")))
        .context("cannot create temporary file")?;
    tmp.write_all(contents)
        .and_then(|()| tmp.flush())
        .context("cannot write temporary file")?;
    tmp.persist(path)
        .with_context(|| format!("cannot move into place: {}", path.display()))?;
    Ok(())
}

pub fn write_jsonl_atomic(path: &Path, instances: &[Instance]) -> Result<()> {
    let mut buf = String::new();
    for inst in instances {
        buf.push_str(&serde_json::to_string(inst).expect("instances always serialize"));
        buf.push('\n');
    }
    atomic_write(path, buf.as_bytes())
}
