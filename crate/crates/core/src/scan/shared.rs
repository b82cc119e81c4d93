//! Raw output handle for parallel kernels.
//!
//! Work items produced by the stage decompositions write regions that are
//! disjoint by construction (each item owns a unique set of (step, batch,
//! channel, position) cells), but those regions are interleaved in memory, so
//! they cannot be expressed as `split_at_mut` partitions. `SharedMut` carries
//! the base pointer across threads; every access is bounds-checked in debug
//! builds.

use core::marker::PhantomData;

pub(crate) struct SharedMut<'a, T> {
    ptr: *mut T,
    len: usize,
    _marker: PhantomData<&'a mut [T]>,
}

// Safety: the kernel decompositions guarantee that concurrently running work
// items touch disjoint index sets, and `SliceRunner::run` joins all items
// before returning, so no access outlives the borrow.
unsafe impl<T: Send> Send for SharedMut<'_, T> {}
unsafe impl<T: Send> Sync for SharedMut<'_, T> {}

impl<T> Clone for SharedMut<'_, T> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<T> Copy for SharedMut<'_, T> {}

impl<'a, T> SharedMut<'a, T> {
    pub(crate) fn new(slice: &'a mut [T]) -> Self {
        Self {
            ptr: slice.as_mut_ptr(),
            len: slice.len(),
            _marker: PhantomData,
        }
    }

    /// Write one element.
    ///
    /// Safety: `idx < len` and no other item accesses `idx` during this
    /// `run` call.
    #[inline(always)]
    pub(crate) unsafe fn write(&self, idx: usize, v: T) {
        debug_assert!(idx < self.len);
        *self.ptr.add(idx) = v;
    }

    /// Read one element previously written in an earlier, already-joined
    /// `run` call (or zero-initialized).
    ///
    /// Safety: `idx < len` and no concurrent writer touches `idx`.
    #[inline(always)]
    pub(crate) unsafe fn read(&self, idx: usize) -> T
    where
        T: Copy,
    {
        debug_assert!(idx < self.len);
        *self.ptr.add(idx)
    }

    /// Exclusive sub-slice owned by the calling work item.
    ///
    /// Safety: `[off, off + len)` is in bounds and disjoint from every range
    /// any other item touches during this `run` call.
    #[inline(always)]
    #[allow(clippy::mut_from_ref)]
    pub(crate) unsafe fn slice(&self, off: usize, len: usize) -> &mut [T] {
        debug_assert!(off + len <= self.len);
        core::slice::from_raw_parts_mut(self.ptr.add(off), len)
    }
}
