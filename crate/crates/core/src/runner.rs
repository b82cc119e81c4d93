/// Executes a batch of independent work items.
///
/// Scan kernels decompose into items that write disjoint output regions and
/// never read each other's writes within one `run` call, so any
/// implementation (sequential or a thread pool of any size) produces
/// bit-identical results. Implementations must invoke `task` exactly once for
/// every index in `0..items` and must not return before all invocations have
/// finished.
pub trait SliceRunner: Sync {
    fn run(&self, items: usize, task: &(dyn Fn(usize) + Sync));
}

/// In-order execution on the calling thread. Always available; the baseline
/// every parallel runner must match bit-for-bit.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl SliceRunner for Sequential {
    fn run(&self, items: usize, task: &(dyn Fn(usize) + Sync)) {
        for i in 0..items {
            task(i);
        }
    }
}
