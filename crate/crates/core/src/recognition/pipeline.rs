use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::sync::{Arc, Mutex, MutexGuard};

use thiserror::Error;

use super::cache::FrameCache;
use super::canonical::{canonicalize, CanonicalRule};
use super::pool::{Lease, LeasePool, PoolStats};
use super::recognizer::{RecognitionRequest, Recognizer, RecognizerOutcome};
use crate::sim::CameraFrame;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PipelineError {
    #[error("recognition pipeline is shut down")]
    ShutDown,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecognitionResult {
    pub frame_id: u64,
    pub token: String,
    pub activity_id: u64,
    pub submitted_at: u64,
    pub started_at: u64,
    pub completed_at: u64,
    pub worker_id: usize,
    pub raw: Option<String>,
    /// Canonical name, absent on a miss, a failure or a strict rejection.
    pub name: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug)]
struct Job {
    frame_id: u64,
    token: String,
    activity_id: u64,
    submitted_at: u64,
}

#[derive(Debug)]
struct Running {
    done_at: u64,
    order: u64,
    lease: Lease,
    job: Job,
    started_at: u64,
    outcome: RecognizerOutcome,
}

impl PartialEq for Running {
    fn eq(&self, other: &Self) -> bool {
        (self.done_at, self.order) == (other.done_at, other.order)
    }
}
impl Eq for Running {}
impl PartialOrd for Running {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Running {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.done_at, self.order).cmp(&(other.done_at, other.order))
    }
}

#[derive(Debug)]
struct Inner {
    cache: FrameCache<CameraFrame>,
    waiting: VecDeque<Job>,
    running: BinaryHeap<Reverse<Running>>,
    order: u64,
    shut_down: bool,
}

/// Frame recognition on a virtual clock.
///
/// Frames are cached under a token and queued; a job starts as soon as a
/// worker lease is free and finishes `latency` virtual milliseconds later.
/// Callers drive time with [`advance_to`](Self::advance_to), which returns
/// every job finished by then in completion order. Safe to share between
/// threads.
pub struct RecognitionPipeline {
    pool: LeasePool,
    recognizer: Arc<dyn Recognizer>,
    rules: Vec<CanonicalRule>,
    strict: bool,
    inner: Mutex<Inner>,
}

impl std::fmt::Debug for RecognitionPipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RecognitionPipeline")
            .field("pool", &self.pool.stats())
            .field("rules", &self.rules.len())
            .field("strict", &self.strict)
            .finish_non_exhaustive()
    }
}

impl RecognitionPipeline {
    pub fn new(
        pool_size: usize,
        cache: FrameCache<CameraFrame>,
        recognizer: Arc<dyn Recognizer>,
        rules: Vec<CanonicalRule>,
        strict: bool,
    ) -> Self {
        Self {
            pool: LeasePool::new(pool_size),
            recognizer,
            rules,
            strict,
            inner: Mutex::new(Inner {
                cache,
                waiting: VecDeque::new(),
                running: BinaryHeap::new(),
                order: 0,
                shut_down: false,
            }),
        }
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Cache the frame and queue it for recognition. Returns the frame token.
    pub fn submit_frame(
        &self,
        frame: CameraFrame,
        activity_id: u64,
        now: u64,
    ) -> Result<String, PipelineError> {
        let mut inner = self.lock();
        if inner.shut_down {
            return Err(PipelineError::ShutDown);
        }
        let frame_id = frame.frame_id;
        let token = inner.cache.insert(frame, now);
        inner.waiting.push_back(Job {
            frame_id,
            token: token.clone(),
            activity_id,
            submitted_at: now,
        });
        self.dispatch(&mut inner, now);
        Ok(token)
    }

    fn dispatch(&self, inner: &mut Inner, now: u64) {
        while !inner.waiting.is_empty() {
            let Some(lease) = self.pool.try_acquire(now) else {
                break;
            };
            let job = inner.waiting.pop_front().expect("queue not empty");
            let (latency_ms, outcome) = match inner.cache.fetch(&job.token, now) {
                Ok(frame) => {
                    let reply = self.recognizer.recognize(&RecognitionRequest {
                        token: &job.token,
                        frame: &frame,
                        activity_id: job.activity_id,
                    });
                    (reply.latency_ms, reply.outcome)
                }
                Err(e) => (0, RecognizerOutcome::Failed(e.to_string())),
            };
            inner.order += 1;
            let order = inner.order;
            inner.running.push(Reverse(Running {
                done_at: now + latency_ms,
                order,
                lease,
                job,
                started_at: now,
                outcome,
            }));
        }
    }

    /// Complete every job due by `now`, freeing workers for queued frames
    /// at the virtual time they became free.
    pub fn advance_to(&self, now: u64) -> Vec<RecognitionResult> {
        let mut inner = self.lock();
        let mut out = Vec::new();
        while inner
            .running
            .peek()
            .is_some_and(|Reverse(r)| r.done_at <= now)
        {
            let Reverse(done) = inner.running.pop().expect("peeked");
            let worker_id = done.lease.worker_id();
            done.lease.release();
            let (raw, name, error) = match done.outcome {
                RecognizerOutcome::Hit(raw) => {
                    let name = canonicalize(&raw, &self.rules, self.strict)
                        .name()
                        .map(str::to_string);
                    if name.is_some() {
                        // recognized frames are kept
                        let _ = inner.cache.promote(&done.job.token, done.done_at);
                    }
                    (Some(raw), name, None)
                }
                RecognizerOutcome::NoHit => (None, None, None),
                RecognizerOutcome::Failed(e) => (None, None, Some(e)),
            };
            out.push(RecognitionResult {
                frame_id: done.job.frame_id,
                token: done.job.token,
                activity_id: done.job.activity_id,
                submitted_at: done.job.submitted_at,
                started_at: done.started_at,
                completed_at: done.done_at,
                worker_id,
                raw,
                name,
                error,
            });
            self.dispatch(&mut inner, done.done_at);
        }
        self.dispatch(&mut inner, now);
        out
    }

    pub fn next_completion_time(&self) -> Option<u64> {
        self.lock().running.peek().map(|Reverse(r)| r.done_at)
    }

    pub fn queued(&self) -> usize {
        self.lock().waiting.len()
    }

    pub fn in_flight(&self) -> usize {
        self.lock().running.len()
    }

    pub fn is_idle(&self) -> bool {
        let inner = self.lock();
        inner.waiting.is_empty() && inner.running.is_empty()
    }

    pub fn pool_stats(&self) -> PoolStats {
        self.pool.stats()
    }

    pub fn fetch_frame(&self, token: &str, now: u64) -> Result<CameraFrame, super::FetchError> {
        self.lock().cache.fetch(token, now)
    }

    /// Reject further submissions. Frames already accepted still finish.
    pub fn shutdown(&self) {
        self.lock().shut_down = true;
    }
}
