//! Concurrent fan-out for chat batches.

use std::thread;

use cothinker_core::{ChatBackend, ChatRequest, Completion, Result};

/// Runs every request of a batch on its own scoped thread; results are
/// returned in request order.
pub fn parallel_batch<B: ChatBackend + Sync + ?Sized>(backend: &B, reqs: &[ChatRequest]) -> Vec<Result<Completion>> {
    if reqs.len() < 2 {
        return reqs.iter().map(|r| backend.complete(r)).collect();
    }
    thread::scope(|s| {
        let handles: Vec<_> = reqs.iter().map(|r| s.spawn(move || backend.complete(r))).collect();
        handles.into_iter().map(|h| h.join().expect("completion thread panicked")).collect()
    })
}

/// Wraps a backend so batches fan out over threads.
#[derive(Debug, Clone)]
pub struct Threaded<B>(pub B);

impl<B: ChatBackend + Sync> ChatBackend for Threaded<B> {
    fn backend_id(&self) -> String {
        self.0.backend_id()
    }

    fn complete(&self, req: &ChatRequest) -> Result<Completion> {
        self.0.complete(req)
    }

    fn complete_batch(&self, reqs: &[ChatRequest]) -> Vec<Result<Completion>> {
        parallel_batch(&self.0, reqs)
    }
}
