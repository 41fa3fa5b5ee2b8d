//! JSON bundles keyed by a hash of the numerics, with a format version.

use bhreduce::{RunConfig, CACHE_VERSION};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Serialize, Deserialize)]
struct Entry<T> {
    version: u32,
    key: String,
    payload: T,
}

#[derive(Deserialize)]
struct Header {
    version: u32,
    key: String,
}

pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(cfg: &RunConfig) -> Self {
        Self { dir: cfg.io.cache_dir.clone() }
    }

    fn path(&self, kind: &str, key: &str) -> PathBuf {
        self.dir.join(format!("{kind}-{}.json", &key[..16]))
    }

    /// Cached payload for `(kind, key)` or a fresh one from `build`, which is then stored.
    pub fn get_or_build<T, F>(&self, kind: &str, key: &str, build: F) -> anyhow::Result<T>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> anyhow::Result<T>,
    {
        let path = self.path(kind, key);
        if let Ok(text) = std::fs::read_to_string(&path) {
            match serde_json::from_str::<Header>(&text) {
                Ok(h) if h.version == CACHE_VERSION && h.key == key => {
                    if let Ok(e) = serde_json::from_str::<Entry<T>>(&text) {
                        eprintln!("cache hit: {}", path.display());
                        return Ok(e.payload);
                    }
                    eprintln!("cache entry {} unreadable, rebuilding", path.display());
                }
                Ok(h) if h.version != CACHE_VERSION => {
                    eprintln!("cache version {} != {CACHE_VERSION} for {}, rebuilding", h.version, path.display());
                }
                _ => eprintln!("stale cache entry {}, rebuilding", path.display()),
            }
        }
        let payload = build()?;
        std::fs::create_dir_all(&self.dir)?;
        let entry = Entry { version: CACHE_VERSION, key: key.to_string(), payload };
        std::fs::write(&path, serde_json::to_string(&entry)?)?;
        Ok(entry.payload)
    }
}
