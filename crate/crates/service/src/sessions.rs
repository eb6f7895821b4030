//! In-memory session table with idle expiry and a size cap.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use svf_core::{Decomposition, Image};

#[derive(Clone)]
struct Session {
    source: Arc<Image>,
    decomposition: Option<Arc<Decomposition>>,
    touched: Instant,
}

/// Sessions keyed by an opaque id.
///
/// Every lookup first drops sessions idle for longer than the TTL, so an
/// expired id is never served. When the table is full, inserting evicts the
/// least recently touched session.
pub struct SessionStore {
    sessions: Mutex<HashMap<String, Session>>,
    ttl: Duration,
    max_sessions: usize,
}

/// What a request sees of one session. Both fields are immutable snapshots.
#[derive(Clone)]
pub struct Snapshot {
    pub source: Arc<Image>,
    pub decomposition: Option<Arc<Decomposition>>,
}

impl SessionStore {
    pub fn new(ttl: Duration, max_sessions: usize) -> Self {
        Self {
            sessions: Mutex::new(HashMap::new()),
            ttl,
            max_sessions: max_sessions.max(1),
        }
    }

    pub fn insert(&self, image: Image) -> String {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let now = Instant::now();
        let mut sessions = self.lock();
        self.purge(&mut sessions, now);
        while sessions.len() >= self.max_sessions {
            let oldest = sessions
                .iter()
                .min_by_key(|(_, s)| s.touched)
                .map(|(k, _)| k.clone())
                .expect("table is non-empty");
            sessions.remove(&oldest);
        }
        sessions.insert(
            id.clone(),
            Session {
                source: Arc::new(image),
                decomposition: None,
                touched: now,
            },
        );
        id
    }

    pub fn get(&self, id: &str) -> Option<Snapshot> {
        let now = Instant::now();
        let mut sessions = self.lock();
        self.purge(&mut sessions, now);
        let s = sessions.get_mut(id)?;
        s.touched = now;
        Some(Snapshot {
            source: s.source.clone(),
            decomposition: s.decomposition.clone(),
        })
    }

    /// Replaces the session's decomposition. Returns `false` if the session
    /// is gone.
    pub fn set_decomposition(&self, id: &str, d: Arc<Decomposition>) -> bool {
        let now = Instant::now();
        let mut sessions = self.lock();
        self.purge(&mut sessions, now);
        match sessions.get_mut(id) {
            Some(s) => {
                s.decomposition = Some(d);
                s.touched = now;
                true
            }
            None => false,
        }
    }

    pub fn remove(&self, id: &str) -> bool {
        let mut sessions = self.lock();
        self.purge(&mut sessions, Instant::now());
        sessions.remove(id).is_some()
    }

    pub fn len(&self) -> usize {
        let mut sessions = self.lock();
        self.purge(&mut sessions, Instant::now());
        sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drops expired sessions; called periodically by the server.
    pub fn sweep(&self) {
        let mut sessions = self.lock();
        self.purge(&mut sessions, Instant::now());
    }

    fn purge(&self, sessions: &mut HashMap<String, Session>, now: Instant) {
        sessions.retain(|_, s| now.duration_since(s.touched) <= self.ttl);
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, HashMap<String, Session>> {
        // A panic while holding the lock cannot leave a half-written entry.
        self.sessions.lock().unwrap_or_else(|e| e.into_inner())
    }
}
