use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use oar_evalkit::report::{parse_likert_lines, LikertRecord};
use oar_evalkit::{Error, Result};

/// Append-only JSON-lines score file mirrored in memory.
pub struct ScoreStore {
    path: PathBuf,
    records: Vec<LikertRecord>,
}

impl ScoreStore {
    /// Replay an existing file (invalid lines are logged and skipped) or
    /// start empty.
    pub fn open(path: impl Into<PathBuf>) -> Result<ScoreStore> {
        let path = path.into();
        let records = match fs::read_to_string(&path) {
            Ok(text) => {
                let (records, rejected) = parse_likert_lines(&text);
                for r in rejected {
                    tracing::warn!("{}: {r}", path.display());
                }
                records
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(Error::io(&path, e)),
        };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        Ok(ScoreStore { path, records })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn records(&self) -> &[LikertRecord] {
        &self.records
    }

    /// Persist first, then remember; a failed write leaves both unchanged.
    pub fn append(&mut self, record: LikertRecord) -> Result<()> {
        let line = record.to_json_line()?;
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| Error::io(&self.path, e))?;
        file.write_all(line.as_bytes())
            .and_then(|_| file.flush())
            .map_err(|e| Error::io(&self.path, e))?;
        self.records.push(record);
        Ok(())
    }
}
