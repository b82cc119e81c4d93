use alloc::vec::Vec;

use crate::tensor::{Direction, Tensor4};

/// Dimensions of one directional pass over a concrete tensor.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Geom {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
    /// Scan-axis length.
    pub l: usize,
    /// Parallel-axis length.
    pub p: usize,
    pub dir: Direction,
}

impl Geom {
    pub fn new<T>(t: &Tensor4<T>, dir: Direction) -> Self
    where
        T: crate::scalar::Scalar,
    {
        let (n, c, h, w) = t.dims();
        Geom {
            n,
            c,
            h,
            w,
            l: dir.scan_len(h, w),
            p: dir.par_len(h, w),
            dir,
        }
    }

    /// Canonical-layout base offset and stride along the parallel axis for
    /// `(step, n, c)`: element at parallel position `r` lives at
    /// `base + r * stride`.
    #[inline(always)]
    pub fn canonical_base_stride(&self, step: usize, n: usize, c: usize) -> (usize, usize) {
        let plane = (n * self.c + c) * self.h;
        match self.dir {
            Direction::TopToBottom => ((plane + step) * self.w, 1),
            Direction::BottomToTop => ((plane + (self.h - 1 - step)) * self.w, 1),
            Direction::LeftToRight => (plane * self.w + step, self.w),
            Direction::RightToLeft => (plane * self.w + (self.w - 1 - step), self.w),
        }
    }

    /// Scan-major base offset for `(step, n, c)`; the parallel axis is
    /// unit-stride from there.
    #[inline(always)]
    pub fn scan_base(&self, step: usize, n: usize, c: usize) -> usize {
        ((step * self.n + n) * self.c + c) * self.p
    }

    /// Segment bounds `[start, end)` along the scan axis. `kchunk == 0` (or
    /// `>= l`) yields one global segment; otherwise the final segment may be
    /// shorter.
    pub fn segments(&self, kchunk: usize) -> Vec<(usize, usize)> {
        segments(self.l, kchunk)
    }
}

pub(crate) fn segments(l: usize, kchunk: usize) -> Vec<(usize, usize)> {
    if kchunk == 0 || kchunk >= l {
        return alloc::vec![(0, l)];
    }
    let mut out = Vec::with_capacity(l.div_ceil(kchunk));
    let mut s = 0;
    while s < l {
        out.push((s, (s + kchunk).min(l)));
        s += kchunk;
    }
    out
}
