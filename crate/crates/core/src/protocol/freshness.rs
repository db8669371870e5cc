//! Timestamp freshness and the replay cache.
//!
//! A request is fresh iff `|t_c - now| < Δt`, in both directions. Fresh
//! requests can still be replayed inside the window, so accepted
//! `(Acd, t_c)` pairs are remembered until `t_c + Δt`, after which the
//! timestamp check alone rejects them.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use super::Rejection;

type CacheKey = (Vec<u8>, u64);

#[derive(Clone, Debug)]
pub struct ReplayCache {
    capacity: usize,
    live: HashSet<CacheKey>,
    expiries: BinaryHeap<Reverse<(u64, CacheKey)>>,
}

impl ReplayCache {
    pub fn new(capacity: usize) -> Self {
        ReplayCache {
            capacity,
            live: HashSet::new(),
            expiries: BinaryHeap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }

    /// Drop every entry whose window has closed at `now`.
    pub fn prune(&mut self, now: u64) {
        while let Some(Reverse((expiry, _))) = self.expiries.peek() {
            if *expiry > now {
                break;
            }
            let Reverse((_, key)) = self.expiries.pop().expect("peeked");
            self.live.remove(&key);
        }
    }

    pub fn contains(&self, account: &[u8], timestamp_ms: u64) -> bool {
        self.live.contains(&(account.to_vec(), timestamp_ms))
    }

    /// Oldest expiry still held, if any.
    pub fn oldest_expiry(&self) -> Option<u64> {
        self.expiries.peek().map(|Reverse((e, _))| *e)
    }

    fn insert(&mut self, key: CacheKey, expiry: u64) -> Result<(), Rejection> {
        if self.live.len() >= self.capacity {
            return Err(Rejection::Overloaded);
        }
        self.live.insert(key.clone());
        self.expiries.push(Reverse((expiry, key)));
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct FreshnessPolicy {
    delta_t_ms: u64,
    cache: ReplayCache,
}

impl FreshnessPolicy {
    pub fn new(delta_t_ms: u64, cache_capacity: usize) -> Self {
        FreshnessPolicy {
            delta_t_ms,
            cache: ReplayCache::new(cache_capacity),
        }
    }

    pub fn delta_t_ms(&self) -> u64 {
        self.delta_t_ms
    }

    pub fn cache(&self) -> &ReplayCache {
        &self.cache
    }

    pub fn is_fresh(&self, timestamp_ms: u64, now_ms: u64) -> bool {
        timestamp_ms.abs_diff(now_ms) < self.delta_t_ms
    }

    /// Reject `(account, t_c)` if already seen inside its window, otherwise
    /// remember it.
    pub fn admit(
        &mut self,
        account: &[u8],
        timestamp_ms: u64,
        now_ms: u64,
    ) -> Result<(), Rejection> {
        self.cache.prune(now_ms);
        if self.cache.contains(account, timestamp_ms) {
            return Err(Rejection::Replayed);
        }
        let expiry = timestamp_ms.saturating_add(self.delta_t_ms);
        self.cache.insert((account.to_vec(), timestamp_ms), expiry)
    }

    pub fn prune(&mut self, now_ms: u64) {
        self.cache.prune(now_ms);
    }
}
