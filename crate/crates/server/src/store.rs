use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::session::{Event, SessionMeta};

/// A session's log as read back from storage.
#[derive(Clone, Debug, PartialEq)]
pub struct StoredGame {
    pub meta: SessionMeta,
    pub events: Vec<Event>,
}

/// Durable, append-only session storage. Every method returns only after the write is durable.
pub trait EventStore: Send + Sync {
    fn create(&self, meta: &SessionMeta) -> io::Result<()>;
    fn append(&self, game_id: &str, event: &Event) -> io::Result<()>;
    fn load_all(&self) -> io::Result<Vec<StoredGame>>;
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum LogLine {
    Created(SessionMeta),
    Event(Event),
}

/// One JSON-lines file per session, `<game_id>.jsonl`: a `created` line followed by one line
/// per event, each synced to disk before the call returns.
pub struct FileStore {
    dir: PathBuf,
}

impl FileStore {
    pub fn open(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(FileStore { dir: dir.to_path_buf() })
    }

    fn path(&self, game_id: &str) -> PathBuf {
        self.dir.join(format!("{game_id}.jsonl"))
    }

    fn write_line(&self, path: &Path, line: &LogLine, create: bool) -> io::Result<()> {
        let mut text = serde_json::to_string(line).map_err(io::Error::other)?;
        text.push('\n');
        let mut file = OpenOptions::new().append(true).create_new(create).open(path)?;
        file.write_all(text.as_bytes())?;
        file.sync_data()
    }

    fn read(path: &Path) -> io::Result<StoredGame> {
        let text = fs::read_to_string(path)?;
        let bad = |n: usize, msg: String| {
            io::Error::new(io::ErrorKind::InvalidData, format!("{}:{n}: {msg}", path.display()))
        };
        let lines: Vec<&str> = text.lines().collect();
        let mut meta = None;
        let mut events = Vec::new();
        for (n, line) in lines.iter().enumerate() {
            let parsed = match serde_json::from_str::<LogLine>(line) {
                Ok(parsed) => parsed,
                // A torn final line is a write that never completed, so it was never acknowledged.
                Err(_) if n + 1 == lines.len() && !text.ends_with('\n') => break,
                Err(e) => return Err(bad(n + 1, e.to_string())),
            };
            match (parsed, &meta) {
                (LogLine::Created(m), None) => meta = Some(m),
                (LogLine::Event(e), Some(_)) => events.push(e),
                _ => return Err(bad(n + 1, "the log must start with exactly one `created` line".into())),
            }
        }
        let meta = meta.ok_or_else(|| bad(1, "empty log".into()))?;
        Ok(StoredGame { meta, events })
    }
}

impl EventStore for FileStore {
    fn create(&self, meta: &SessionMeta) -> io::Result<()> {
        self.write_line(&self.path(&meta.game_id), &LogLine::Created(meta.clone()), true)?;
        // Make the new directory entry itself durable.
        fs::File::open(&self.dir)?.sync_all()
    }

    fn append(&self, game_id: &str, event: &Event) -> io::Result<()> {
        self.write_line(&self.path(game_id), &LogLine::Event(event.clone()), false)
    }

    fn load_all(&self) -> io::Result<Vec<StoredGame>> {
        let mut games = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "jsonl") {
                games.push(FileStore::read(&path)?);
            }
        }
        games.sort_by(|a, b| (a.meta.created_ms, &a.meta.game_id).cmp(&(b.meta.created_ms, &b.meta.game_id)));
        Ok(games)
    }
}

/// Volatile storage for tests and throwaway servers.
#[derive(Default)]
pub struct MemoryStore {
    games: Mutex<BTreeMap<String, StoredGame>>,
}

impl EventStore for MemoryStore {
    fn create(&self, meta: &SessionMeta) -> io::Result<()> {
        let mut games = self.games.lock().expect("store lock");
        if games.contains_key(&meta.game_id) {
            return Err(io::Error::new(io::ErrorKind::AlreadyExists, meta.game_id.clone()));
        }
        games.insert(meta.game_id.clone(), StoredGame { meta: meta.clone(), events: Vec::new() });
        Ok(())
    }

    fn append(&self, game_id: &str, event: &Event) -> io::Result<()> {
        let mut games = self.games.lock().expect("store lock");
        let game =
            games.get_mut(game_id).ok_or_else(|| io::Error::new(io::ErrorKind::NotFound, game_id.to_string()))?;
        game.events.push(event.clone());
        Ok(())
    }

    fn load_all(&self) -> io::Result<Vec<StoredGame>> {
        Ok(self.games.lock().expect("store lock").values().cloned().collect())
    }
}
