//! Thread-pool runner for the scan kernels.
//!
//! Each `run` call spawns scoped workers that pull item indices from a shared
//! atomic counter; the calling thread participates as the last worker. Items
//! write disjoint regions, so results are identical for every worker count -
//! only the wall time changes. Spawning per call is deliberate: it makes each
//! dispatch pay a visible launch cost, which is exactly what the per-step
//! stage (S0) is measuring against the fused stages.

use std::sync::atomic::{AtomicUsize, Ordering};

use linescan_core::SliceRunner;

/// Environment variable consulted when no worker count is given explicitly.
pub const WORKERS_ENV: &str = "LINESCAN_WORKERS";

#[derive(Debug, Clone, Copy)]
pub struct WorkerPool {
    workers: usize,
}

impl WorkerPool {
    pub fn new(workers: usize) -> Self {
        Self {
            workers: workers.max(1),
        }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }
}

impl SliceRunner for WorkerPool {
    fn run(&self, items: usize, task: &(dyn Fn(usize) + Sync)) {
        let threads = self.workers.min(items);
        if threads <= 1 {
            for i in 0..items {
                task(i);
            }
            return;
        }
        let next = AtomicUsize::new(0);
        let work = || loop {
            let i = next.fetch_add(1, Ordering::Relaxed);
            if i >= items {
                break;
            }
            task(i);
        };
        std::thread::scope(|scope| {
            for _ in 1..threads {
                scope.spawn(work);
            }
            work();
        });
    }
}

/// Worker count resolution: explicit flag, then `LINESCAN_WORKERS`, then the
/// number of logical cores.
pub fn resolve_workers(flag: Option<usize>) -> usize {
    if let Some(w) = flag {
        return w.max(1);
    }
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        if let Ok(w) = v.trim().parse::<usize>() {
            return w.max(1);
        }
    }
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicU64;

    #[test]
    fn runs_every_item_exactly_once() {
        let hits: Vec<AtomicU64> = (0..257).map(|_| AtomicU64::new(0)).collect();
        let pool = WorkerPool::new(8);
        pool.run(hits.len(), &|i| {
            hits[i].fetch_add(1, Ordering::Relaxed);
        });
        assert!(hits.iter().all(|h| h.load(Ordering::Relaxed) == 1));
    }

    #[test]
    fn zero_items_is_a_no_op() {
        let pool = WorkerPool::new(4);
        pool.run(0, &|_| panic!("no items expected"));
    }

    #[test]
    fn flag_overrides_env() {
        assert_eq!(resolve_workers(Some(3)), 3);
        assert_eq!(resolve_workers(Some(0)), 1);
    }
}
