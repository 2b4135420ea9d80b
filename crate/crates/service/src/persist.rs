//! Append-only JSON-lines storage: one event log and one tag log per
//! fridge, side by side in a data directory.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use coldbench_core::takeout::ItemTags;
use log::warn;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::ServiceError;
use crate::model::EventEnvelope;

const EVENTS_SUFFIX: &str = ".events.jsonl";
const TAGS_SUFFIX: &str = ".tags.jsonl";

/// What was on disk for one fridge.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredFridge {
    pub fridge_id: String,
    pub events: Vec<EventEnvelope>,
    pub tags: Vec<ItemTags>,
}

#[derive(Debug, Clone)]
pub struct LogStore {
    dir: PathBuf,
}

impl LogStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn events_path(&self, fridge_id: &str) -> PathBuf {
        self.dir.join(format!("{fridge_id}{EVENTS_SUFFIX}"))
    }

    pub fn tags_path(&self, fridge_id: &str) -> PathBuf {
        self.dir.join(format!("{fridge_id}{TAGS_SUFFIX}"))
    }

    /// Create the (empty) event log of a new fridge and return it opened
    /// for appending.
    pub fn create(&self, fridge_id: &str) -> Result<File, ServiceError> {
        Ok(OpenOptions::new()
            .create_new(true)
            .append(true)
            .open(self.events_path(fridge_id))?)
    }

    pub fn open_events(&self, fridge_id: &str) -> Result<File, ServiceError> {
        Ok(OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.events_path(fridge_id))?)
    }

    pub fn append_tags(&self, fridge_id: &str, tags: &ItemTags) -> Result<(), ServiceError> {
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.tags_path(fridge_id))?;
        append_line(&mut f, tags)
    }

    /// Every fridge in the directory, sorted by id.
    pub fn load_all(&self) -> Result<Vec<StoredFridge>, ServiceError> {
        let mut ids: Vec<String> = fs::read_dir(&self.dir)?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                e.file_name()
                    .to_str()
                    .and_then(|n| n.strip_suffix(EVENTS_SUFFIX))
                    .map(str::to_string)
            })
            .collect();
        ids.sort();
        ids.into_iter()
            .map(|fridge_id| {
                let events: Vec<EventEnvelope> = read_lines(&self.events_path(&fridge_id))?;
                for (i, env) in events.iter().enumerate() {
                    if env.seq != i as u64 + 1 || env.fridge_id != fridge_id {
                        return Err(ServiceError::CorruptLog {
                            path: self.events_path(&fridge_id),
                            message: format!("entry {} has seq {} for fridge {:?}", i + 1, env.seq, env.fridge_id),
                        });
                    }
                }
                let tags_path = self.tags_path(&fridge_id);
                let tags = if tags_path.exists() {
                    read_lines(&tags_path)?
                } else {
                    Vec::new()
                };
                Ok(StoredFridge {
                    fridge_id,
                    events,
                    tags,
                })
            })
            .collect()
    }
}

pub fn append_line<T: Serialize>(file: &mut File, value: &T) -> Result<(), ServiceError> {
    let mut line = serde_json::to_vec(value).map_err(|e| ServiceError::Io(e.into()))?;
    line.push(b'\n');
    file.write_all(&line)?;
    file.flush()?;
    Ok(())
}

// A torn final line (crash mid-write) is dropped with a warning and cut
// from the file so later appends start clean; a bad line anywhere else is
// corruption.
fn read_lines<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, ServiceError> {
    let reader = BufReader::new(File::open(path)?);
    let lines: Vec<String> = reader.lines().collect::<Result<_, _>>()?;
    let last = lines.len();
    let mut out = Vec::with_capacity(last);
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(v) => out.push(v),
            Err(e) if i + 1 == last => {
                warn!("{}: dropping unreadable last line: {e}", path.display());
                let keep: String = lines[..i].iter().map(|l| format!("{l}\n")).collect();
                let tmp = path.with_extension("tmp");
                fs::write(&tmp, keep)?;
                fs::rename(&tmp, path)?;
            }
            Err(e) => {
                return Err(ServiceError::CorruptLog {
                    path: path.to_path_buf(),
                    message: format!("line {}: {e}", i + 1),
                })
            }
        }
    }
    Ok(out)
}
