//! Keyed document persistence.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("invalid document key `{0}`")]
    BadKey(String),
    #[error("store I/O on `{path}`: {source}")]
    Io { path: PathBuf, source: io::Error },
}

/// Flat keys of `/`-separated segments made of `[A-Za-z0-9._-]`.
pub trait DocumentStore: Send + Sync {
    fn get(&self, key: &str) -> Result<Option<Vec<u8>>, StoreError>;
    fn put(&self, key: &str, value: &[u8]) -> Result<(), StoreError>;
    /// All keys starting with `prefix`, sorted.
    fn keys(&self, prefix: &str) -> Result<Vec<String>, StoreError>;
}

fn check_key(key: &str) -> Result<(), StoreError> {
    let ok = !key.is_empty()
        && key.split('/').all(|seg| {
            !seg.is_empty()
                && seg != "."
                && seg != ".."
                && seg.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
        });
    if ok { Ok(()) } else { Err(StoreError::BadKey(key.to_string())) }
}

/// One file per key under a root directory.
#[derive(Debug, Clone)]
pub struct FsStore {
    root: PathBuf,
}

impl FsStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|source| StoreError::Io { path: root.clone(), source })?;
        Ok(FsStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn walk(&self, dir: &Path, out: &mut Vec<String>) -> Result<(), StoreError> {
        let entries = match fs::read_dir(dir) {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(()),
            Err(source) => return Err(StoreError::Io { path: dir.to_path_buf(), source }),
        };
        for entry in entries {
            let entry = entry.map_err(|source| StoreError::Io { path: dir.to_path_buf(), source })?;
            let path = entry.path();
            if path.is_dir() {
                self.walk(&path, out)?;
            } else if path.extension().is_none_or(|e| e != "tmp") {
                let rel = path.strip_prefix(&self.root).expect("walk stays under root");
                let key: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
                out.push(key.join("/"));
            }
        }
        Ok(())
    }
}

impl DocumentStore for FsStore {
    fn get(&self, key: &str) -> Result<Option<Vec<u8>>, StoreError> {
        check_key(key)?;
        let path = self.root.join(key);
        match fs::read(&path) {
            Ok(bytes) => Ok(Some(bytes)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(source) => Err(StoreError::Io { path, source }),
        }
    }

    /// Writes through a temporary file and a rename, so readers never see
    /// a half-written document.
    fn put(&self, key: &str, value: &[u8]) -> Result<(), StoreError> {
        check_key(key)?;
        let path = self.root.join(key);
        let io_err = |source| StoreError::Io { path: path.clone(), source };
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err)?;
        }
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, value).map_err(io_err)?;
        fs::rename(&tmp, &path).map_err(io_err)
    }

    fn keys(&self, prefix: &str) -> Result<Vec<String>, StoreError> {
        let mut out = Vec::new();
        self.walk(&self.root.clone(), &mut out)?;
        out.retain(|k| k.starts_with(prefix));
        out.sort();
        Ok(out)
    }
}

#[derive(Debug, Default)]
pub struct MemStore {
    docs: Mutex<BTreeMap<String, Vec<u8>>>,
}

impl MemStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl DocumentStore for MemStore {
    fn get(&self, key: &str) -> Result<Option<Vec<u8>>, StoreError> {
        check_key(key)?;
        Ok(self.docs.lock().expect("store lock").get(key).cloned())
    }

    fn put(&self, key: &str, value: &[u8]) -> Result<(), StoreError> {
        check_key(key)?;
        self.docs.lock().expect("store lock").insert(key.to_string(), value.to_vec());
        Ok(())
    }

    fn keys(&self, prefix: &str) -> Result<Vec<String>, StoreError> {
        let docs = self.docs.lock().expect("store lock");
        Ok(docs.keys().filter(|k| k.starts_with(prefix)).cloned().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exercise(store: &dyn DocumentStore) {
        assert_eq!(store.get("jobs/a/trace.jsonl").unwrap(), None);
        store.put("jobs/a/trace.jsonl", b"x").unwrap();
        store.put("jobs/b/record.json", b"y").unwrap();
        store.put("other", b"z").unwrap();
        assert_eq!(store.get("jobs/a/trace.jsonl").unwrap().as_deref(), Some(&b"x"[..]));
        assert_eq!(store.keys("jobs/").unwrap(), vec!["jobs/a/trace.jsonl", "jobs/b/record.json"]);
        assert!(matches!(store.put("../escape", b""), Err(StoreError::BadKey(_))));
        assert!(matches!(store.get("a//b"), Err(StoreError::BadKey(_))));
    }

    #[test]
    fn memory_store() {
        exercise(&MemStore::new());
    }

    #[test]
    fn filesystem_store() {
        let dir = tempfile::tempdir().unwrap();
        let store = FsStore::open(dir.path().join("store")).unwrap();
        exercise(&store);
        let reopened = FsStore::open(store.root()).unwrap();
        assert_eq!(reopened.get("other").unwrap().as_deref(), Some(&b"z"[..]));
    }
}
