use std::collections::BTreeSet;
use std::sync::{Arc, Condvar, Mutex, MutexGuard};

/// Exclusive grant of one recognizer worker.
///
/// Dropping a lease returns the worker to the pool, so a lease cannot leak
/// even when the holder fails. `release` does the same explicitly; since it
/// consumes the lease, a released lease cannot be used again.
#[derive(Debug)]
pub struct Lease {
    worker_id: usize,
    lease_id: u64,
    acquired_at: u64,
    pool: Arc<Shared>,
}

impl Lease {
    pub fn worker_id(&self) -> usize {
        self.worker_id
    }

    pub fn lease_id(&self) -> u64 {
        self.lease_id
    }

    pub fn acquired_at(&self) -> u64 {
        self.acquired_at
    }

    pub fn release(self) {}
}

impl Drop for Lease {
    fn drop(&mut self) {
        self.pool.give_back(self.worker_id);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PoolStats {
    pub size: usize,
    pub outstanding: usize,
    pub high_water: usize,
    pub granted: u64,
    pub released: u64,
    pub waiting: usize,
}

#[derive(Debug)]
struct State {
    free: BTreeSet<usize>,
    size: usize,
    high_water: usize,
    granted: u64,
    released: u64,
    next_ticket: u64,
    serving: u64,
}

#[derive(Debug)]
struct Shared {
    state: Mutex<State>,
    available: Condvar,
}

impl Shared {
    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn give_back(&self, worker_id: usize) {
        let mut st = self.lock();
        let fresh = st.free.insert(worker_id);
        debug_assert!(fresh, "worker {worker_id} returned twice");
        st.released += 1;
        drop(st);
        self.available.notify_all();
    }
}

/// Bounded pool of recognizer workers handed out by lease. Waiters are
/// served first come, first served.
#[derive(Debug, Clone)]
pub struct LeasePool {
    shared: Arc<Shared>,
}

impl LeasePool {
    pub fn new(size: usize) -> Self {
        Self {
            shared: Arc::new(Shared {
                state: Mutex::new(State {
                    free: (0..size).collect(),
                    size,
                    high_water: 0,
                    granted: 0,
                    released: 0,
                    next_ticket: 0,
                    serving: 0,
                }),
                available: Condvar::new(),
            }),
        }
    }

    fn grant(&self, st: &mut State, at: u64) -> Lease {
        let worker_id = st.free.pop_first().expect("caller checked a worker is free");
        st.granted += 1;
        let outstanding = st.size - st.free.len();
        st.high_water = st.high_water.max(outstanding);
        Lease {
            worker_id,
            lease_id: st.granted,
            acquired_at: at,
            pool: Arc::clone(&self.shared),
        }
    }

    /// Block until a worker is free and every earlier waiter has been served.
    pub fn acquire(&self, at: u64) -> Lease {
        let mut st = self.shared.lock();
        let ticket = st.next_ticket;
        st.next_ticket += 1;
        while !(st.serving == ticket && !st.free.is_empty()) {
            st = self
                .shared
                .available
                .wait(st)
                .unwrap_or_else(|p| p.into_inner());
        }
        st.serving += 1;
        let lease = self.grant(&mut st, at);
        drop(st);
        // the next ticket holder may be able to go too
        self.shared.available.notify_all();
        lease
    }

    /// A lease if a worker is free and nobody is queued ahead.
    pub fn try_acquire(&self, at: u64) -> Option<Lease> {
        let mut st = self.shared.lock();
        if st.free.is_empty() || st.serving != st.next_ticket {
            return None;
        }
        Some(self.grant(&mut st, at))
    }

    pub fn size(&self) -> usize {
        self.shared.lock().size
    }

    pub fn stats(&self) -> PoolStats {
        let st = self.shared.lock();
        PoolStats {
            size: st.size,
            outstanding: st.size - st.free.len(),
            high_water: st.high_water,
            granted: st.granted,
            released: st.released,
            waiting: (st.next_ticket - st.serving) as usize,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::thread;
    use std::time::Duration;

    #[test]
    fn bounded_by_size() {
        let pool = LeasePool::new(2);
        let a = pool.try_acquire(0).unwrap();
        let b = pool.try_acquire(0).unwrap();
        assert!(pool.try_acquire(0).is_none());
        assert_ne!(a.worker_id(), b.worker_id());
        a.release();
        let c = pool.try_acquire(5).unwrap();
        assert_eq!(c.acquired_at(), 5);
        drop(b);
        drop(c);
        let s = pool.stats();
        assert_eq!((s.outstanding, s.high_water, s.granted, s.released), (0, 2, 3, 3));
    }

    #[test]
    fn blocking_acquire_wakes_on_release() {
        let pool = LeasePool::new(1);
        let held = pool.acquire(0);
        let p = pool.clone();
        let waiter = thread::spawn(move || p.acquire(1).worker_id());
        thread::sleep(Duration::from_millis(30));
        assert_eq!(pool.stats().waiting, 1);
        // queued waiter goes first
        assert!(pool.try_acquire(1).is_none());
        held.release();
        assert_eq!(waiter.join().unwrap(), 0);
        assert_eq!(pool.stats().outstanding, 0);
    }
}
