use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FetchError {
    #[error("frame token expired")]
    Expired,
    #[error("unknown frame token")]
    NotFound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CachedFrame<T> {
    pub token: String,
    pub payload: T,
    pub expires_at: u64,
    pub permanent: bool,
}

#[derive(Debug, Clone)]
struct Entry<T> {
    payload: T,
    expires_at: u64,
    tick: u64,
}

/// Short-term frame store handing out unguessable tokens.
///
/// Non-permanent frames live in an LRU bounded by `capacity` and become
/// unreachable after their TTL. Promoted frames move to a separate,
/// unbounded permanent area.
#[derive(Debug, Clone)]
pub struct FrameCache<T> {
    capacity: usize,
    ttl_ms: u64,
    entries: HashMap<String, Entry<T>>,
    lru: BTreeMap<u64, String>,
    tick: u64,
    permanent: HashMap<String, T>,
}

fn new_token() -> String {
    format!("{:032x}", rand::thread_rng().gen::<u128>())
}

impl<T: Clone> FrameCache<T> {
    pub fn new(capacity: usize, ttl_ms: u64) -> Self {
        Self {
            capacity: capacity.max(1),
            ttl_ms,
            entries: HashMap::new(),
            lru: BTreeMap::new(),
            tick: 0,
            permanent: HashMap::new(),
        }
    }

    fn touch(&mut self, token: &str) {
        if let Some(e) = self.entries.get_mut(token) {
            self.lru.remove(&e.tick);
            self.tick += 1;
            e.tick = self.tick;
            self.lru.insert(self.tick, token.to_string());
        }
    }

    pub fn insert(&mut self, payload: T, now: u64) -> String {
        while self.entries.len() >= self.capacity {
            let Some((_, oldest)) = self.lru.pop_first() else {
                break;
            };
            self.entries.remove(&oldest);
        }
        let token = loop {
            let t = new_token();
            if !self.entries.contains_key(&t) && !self.permanent.contains_key(&t) {
                break t;
            }
        };
        self.tick += 1;
        self.entries.insert(
            token.clone(),
            Entry {
                payload,
                expires_at: now + self.ttl_ms,
                tick: self.tick,
            },
        );
        self.lru.insert(self.tick, token.clone());
        token
    }

    pub fn fetch(&mut self, token: &str, now: u64) -> Result<T, FetchError> {
        if let Some(p) = self.permanent.get(token) {
            return Ok(p.clone());
        }
        let entry = self.entries.get(token).ok_or(FetchError::NotFound)?;
        if now >= entry.expires_at {
            return Err(FetchError::Expired);
        }
        let payload = entry.payload.clone();
        self.touch(token);
        Ok(payload)
    }

    /// Keep a frame forever. Only unexpired frames can be promoted.
    pub fn promote(&mut self, token: &str, now: u64) -> Result<(), FetchError> {
        if self.permanent.contains_key(token) {
            return Ok(());
        }
        let entry = self.entries.get(token).ok_or(FetchError::NotFound)?;
        if now >= entry.expires_at {
            return Err(FetchError::Expired);
        }
        let entry = self.entries.remove(token).expect("entry exists");
        self.lru.remove(&entry.tick);
        self.permanent.insert(token.to_string(), entry.payload);
        Ok(())
    }

    pub fn get(&self, token: &str) -> Option<CachedFrame<T>> {
        if let Some(p) = self.permanent.get(token) {
            return Some(CachedFrame {
                token: token.to_string(),
                payload: p.clone(),
                expires_at: u64::MAX,
                permanent: true,
            });
        }
        self.entries.get(token).map(|e| CachedFrame {
            token: token.to_string(),
            payload: e.payload.clone(),
            expires_at: e.expires_at,
            permanent: false,
        })
    }

    /// Non-permanent entries currently held, expired or not.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty() && self.permanent.is_empty()
    }

    pub fn permanent_len(&self) -> usize {
        self.permanent.len()
    }
}
