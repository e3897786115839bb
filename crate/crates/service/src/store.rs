//! Workspaces in memory, mirrored to one JSON file each when a data
//! directory is configured.

use std::collections::HashMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use thiserror::Error;

use crate::workspace::{ReplayError, Workspace};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Decode { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Replay { path: PathBuf, source: ReplayError },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

pub type Shared = Arc<Mutex<Workspace>>;

#[derive(Default)]
struct Index {
    workspaces: HashMap<String, Shared>,
    /// Session id to workspace id.
    sessions: HashMap<String, String>,
}

#[derive(Default)]
pub struct Store {
    dir: Option<PathBuf>,
    index: RwLock<Index>,
}

impl Store {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads every `*.json` workspace under `dir`, creating the directory
    /// if needed. Leftover temp files from interrupted writes are ignored.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let mut index = Index::default();
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let path = entry.map_err(io_err(&dir))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let ws: Workspace =
                serde_json::from_str(&text).map_err(|source| StoreError::Decode { path: path.clone(), source })?;
            ws.check_replay().map_err(|source| StoreError::Replay { path: path.clone(), source })?;
            for sid in ws.sessions.keys() {
                index.sessions.insert(sid.clone(), ws.id.clone());
            }
            index.workspaces.insert(ws.id.clone(), Arc::new(Mutex::new(ws)));
        }
        Ok(Self { dir: Some(dir), index: RwLock::new(index) })
    }

    pub fn data_dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn len(&self) -> usize {
        self.index.read().expect("index lock").workspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn workspace(&self, id: &str) -> Option<Shared> {
        self.index.read().expect("index lock").workspaces.get(id).cloned()
    }

    pub fn session_workspace(&self, sid: &str) -> Option<Shared> {
        let index = self.index.read().expect("index lock");
        index.sessions.get(sid).and_then(|w| index.workspaces.get(w)).cloned()
    }

    /// Persists and registers a new workspace. Returns the existing one
    /// unchanged if the id is taken.
    pub fn insert(&self, ws: Workspace) -> Result<Shared, StoreError> {
        let mut index = self.index.write().expect("index lock");
        if let Some(existing) = index.workspaces.get(&ws.id) {
            return Ok(existing.clone());
        }
        self.persist(&ws)?;
        let shared = Arc::new(Mutex::new(ws.clone()));
        index.workspaces.insert(ws.id, shared.clone());
        Ok(shared)
    }

    pub fn register_session(&self, sid: &str, workspace_id: &str) {
        self.index.write().expect("index lock").sessions.insert(sid.to_string(), workspace_id.to_string());
    }

    /// Writes `ws` via a temp file and rename, so a crash leaves either the
    /// old or the new file in place.
    pub fn persist(&self, ws: &Workspace) -> Result<(), StoreError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join(format!("{}.json", ws.id));
        let tmp = dir.join(format!("{}.json.tmp", ws.id));
        let body = serde_json::to_vec_pretty(ws).expect("workspace serializes");
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(&body).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))?;
        Ok(())
    }
}
