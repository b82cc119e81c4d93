//! Forward kernels, one per implementation stage.
//!
//! Every stage evaluates the same per-element expression in the same order
//! (left, center, right neighbour, then the gated input), so stage outputs
//! are not merely close: they are equal. The stages differ in how work is
//! dispatched and how memory is walked:
//!
//! * S0 dispatches one batch of work items per scan step and re-reads the
//!   previous step's hidden state from the full history tensor.
//! * S1 fuses all steps of a segment into one item and keeps the previous
//!   step in a local rolling buffer.
//! * S2 runs the fused loop over scan-major data, making the inner loop
//!   unit-stride.
//! * S3/S4/S5 stage the rolling state for a tile of `c_slice` channels in one
//!   contiguous scratch buffer; S3 hands a whole (segment, batch) to a worker
//!   which walks its tiles, S4/S5 hand each tile to its own worker.

use alloc::vec;
use alloc::vec::Vec;

use super::geometry::Geom;
use super::shared::SharedMut;
use crate::plan::Stage;
use crate::runner::SliceRunner;
use crate::scalar::Scalar;

pub(crate) struct ForwardArgs<'a, T> {
    pub geom: Geom,
    pub x: &'a [T],
    pub lam: &'a [T],
    pub u: &'a [T],
    pub w: &'a [T],
    /// Weight channels: equals the channel count, or 1 for shared weights.
    pub wc: usize,
    pub kchunk: usize,
    pub c_slice: usize,
}

impl<T> ForwardArgs<'_, T> {
    #[inline(always)]
    fn weight_row(&self, step: usize, n: usize, c: usize) -> usize {
        let cw = if self.wc == 1 { 0 } else { c };
        ((step * self.geom.n + n) * self.wc + cw) * self.geom.p * 3
    }
}

pub(crate) fn run_forward<T: Scalar>(
    a: &ForwardArgs<'_, T>,
    stage: Stage,
    y: SharedMut<'_, T>,
    hid: SharedMut<'_, T>,
    runner: &dyn SliceRunner,
) {
    match stage {
        Stage::S0PerStep => forward_s0(a, y, hid, runner),
        Stage::S1Fused => forward_s1(a, y, hid, runner),
        Stage::S2Contiguous => forward_s2(a, y, hid, runner),
        Stage::S3TileReuse => forward_tiled(a, y, hid, runner, false),
        Stage::S4ChannelBlocked | Stage::S5Compact => forward_tiled(a, y, hid, runner, true),
    }
}

/// First step of a segment: no predecessor, `h = lambda .* x`.
#[inline(always)]
fn seed_row<T: Scalar>(xs: &[T], ls: &[T], us: &[T], cur: &mut [T], hs: &mut [T], ys: &mut [T]) {
    for r in 0..cur.len() {
        let hval = ls[r] * xs[r];
        cur[r] = hval;
        hs[r] = hval;
        ys[r] = us[r] * hval;
    }
}

/// Interior step over contiguous rows: tridiagonal mix of the previous row
/// plus the gated input.
#[inline(always)]
fn step_row<T: Scalar>(
    prev: &[T],
    wrow: &[T],
    xs: &[T],
    ls: &[T],
    us: &[T],
    cur: &mut [T],
    hs: &mut [T],
    ys: &mut [T],
) {
    let p = prev.len();
    for r in 0..p {
        let wb = 3 * r;
        let mut acc = T::zero();
        if r > 0 {
            acc = acc + wrow[wb] * prev[r - 1];
        }
        acc = acc + wrow[wb + 1] * prev[r];
        if r + 1 < p {
            acc = acc + wrow[wb + 2] * prev[r + 1];
        }
        let hval = acc + ls[r] * xs[r];
        cur[r] = hval;
        hs[r] = hval;
        ys[r] = us[r] * hval;
    }
}

/// S0: one runner dispatch per scan step; canonical layout; hidden state
/// streamed back out of the history tensor every step.
fn forward_s0<T: Scalar>(
    a: &ForwardArgs<'_, T>,
    y: SharedMut<'_, T>,
    hid: SharedMut<'_, T>,
    runner: &dyn SliceRunner,
) {
    let g = a.geom;
    let slices = g.n * g.c;
    for (s0, s1) in g.segments(a.kchunk) {
        for step in s0..s1 {
            let task = |item: usize| {
                let n = item / g.c;
                let c = item % g.c;
                let (base, stride) = g.canonical_base_stride(step, n, c);
                if step == s0 {
                    for r in 0..g.p {
                        let idx = base + r * stride;
                        let hval = a.lam[idx] * a.x[idx];
                        unsafe {
                            hid.write(idx, hval);
                            y.write(idx, a.u[idx] * hval);
                        }
                    }
                } else {
                    let (pbase, _) = g.canonical_base_stride(step - 1, n, c);
                    let wrow = a.weight_row(step, n, c);
                    for r in 0..g.p {
                        let idx = base + r * stride;
                        let wb = wrow + 3 * r;
                        let mut acc = T::zero();
                        unsafe {
                            if r > 0 {
                                acc = acc + a.w[wb] * hid.read(pbase + (r - 1) * stride);
                            }
                            acc = acc + a.w[wb + 1] * hid.read(pbase + r * stride);
                            if r + 1 < g.p {
                                acc = acc + a.w[wb + 2] * hid.read(pbase + (r + 1) * stride);
                            }
                            let hval = acc + a.lam[idx] * a.x[idx];
                            hid.write(idx, hval);
                            y.write(idx, a.u[idx] * hval);
                        }
                    }
                }
            };
            runner.run(slices, &task);
        }
    }
}

/// S1: fused loop per (segment, batch, channel) slice; canonical layout.
fn forward_s1<T: Scalar>(
    a: &ForwardArgs<'_, T>,
    y: SharedMut<'_, T>,
    hid: SharedMut<'_, T>,
    runner: &dyn SliceRunner,
) {
    let g = a.geom;
    let segs = g.segments(a.kchunk);
    let per = g.n * g.c;
    let task = |item: usize| {
        let (s0, s1) = segs[item / per];
        let rem = item % per;
        let n = rem / g.c;
        let c = rem % g.c;
        let mut prev: Vec<T> = vec![T::zero(); g.p];
        let mut cur: Vec<T> = vec![T::zero(); g.p];
        for step in s0..s1 {
            let (base, stride) = g.canonical_base_stride(step, n, c);
            if step == s0 {
                for r in 0..g.p {
                    let idx = base + r * stride;
                    let hval = a.lam[idx] * a.x[idx];
                    cur[r] = hval;
                    unsafe {
                        hid.write(idx, hval);
                        y.write(idx, a.u[idx] * hval);
                    }
                }
            } else {
                let wrow = a.weight_row(step, n, c);
                for r in 0..g.p {
                    let idx = base + r * stride;
                    let wb = wrow + 3 * r;
                    let mut acc = T::zero();
                    if r > 0 {
                        acc = acc + a.w[wb] * prev[r - 1];
                    }
                    acc = acc + a.w[wb + 1] * prev[r];
                    if r + 1 < g.p {
                        acc = acc + a.w[wb + 2] * prev[r + 1];
                    }
                    let hval = acc + a.lam[idx] * a.x[idx];
                    cur[r] = hval;
                    unsafe {
                        hid.write(idx, hval);
                        y.write(idx, a.u[idx] * hval);
                    }
                }
            }
            core::mem::swap(&mut prev, &mut cur);
        }
    };
    runner.run(segs.len() * per, &task);
}

/// S2: the fused loop over scan-major data; all streams unit-stride.
fn forward_s2<T: Scalar>(
    a: &ForwardArgs<'_, T>,
    y: SharedMut<'_, T>,
    hid: SharedMut<'_, T>,
    runner: &dyn SliceRunner,
) {
    let g = a.geom;
    let segs = g.segments(a.kchunk);
    let per = g.n * g.c;
    let p = g.p;
    let task = |item: usize| {
        let (s0, s1) = segs[item / per];
        let rem = item % per;
        let n = rem / g.c;
        let c = rem % g.c;
        let mut prev: Vec<T> = vec![T::zero(); p];
        let mut cur: Vec<T> = vec![T::zero(); p];
        for step in s0..s1 {
            let base = g.scan_base(step, n, c);
            let xs = &a.x[base..base + p];
            let ls = &a.lam[base..base + p];
            let us = &a.u[base..base + p];
            let (hs, ys) = unsafe { (hid.slice(base, p), y.slice(base, p)) };
            if step == s0 {
                seed_row(xs, ls, us, &mut cur, hs, ys);
            } else {
                let wb = a.weight_row(step, n, c);
                step_row(&prev, &a.w[wb..wb + 3 * p], xs, ls, us, &mut cur, hs, ys);
            }
            core::mem::swap(&mut prev, &mut cur);
        }
    };
    runner.run(segs.len() * per, &task);
}

/// S3/S4/S5: scan-major tiles of `c_slice` channels sharing one scratch
/// buffer for the rolling hidden state. With `item_per_tile` each tile is its
/// own work item (S4/S5); otherwise one item covers a whole (segment, batch)
/// and walks its tiles (S3).
fn forward_tiled<T: Scalar>(
    a: &ForwardArgs<'_, T>,
    y: SharedMut<'_, T>,
    hid: SharedMut<'_, T>,
    runner: &dyn SliceRunner,
    item_per_tile: bool,
) {
    let g = a.geom;
    let segs = g.segments(a.kchunk);
    let tiles = g.c.div_ceil(a.c_slice);

    if item_per_tile {
        let per = g.n * tiles;
        let task = |item: usize| {
            let seg = segs[item / per];
            let rem = item % per;
            let n = rem / tiles;
            let c0 = (rem % tiles) * a.c_slice;
            let c1 = (c0 + a.c_slice).min(g.c);
            tile_pass(a, y, hid, seg, n, c0, c1);
        };
        runner.run(segs.len() * per, &task);
    } else {
        let task = |item: usize| {
            let seg = segs[item / g.n];
            let n = item % g.n;
            let mut c0 = 0;
            while c0 < g.c {
                let c1 = (c0 + a.c_slice).min(g.c);
                tile_pass(a, y, hid, seg, n, c0, c1);
                c0 = c1;
            }
        };
        runner.run(segs.len() * g.n, &task);
    }
}

fn tile_pass<T: Scalar>(
    a: &ForwardArgs<'_, T>,
    y: SharedMut<'_, T>,
    hid: SharedMut<'_, T>,
    (s0, s1): (usize, usize),
    n: usize,
    c0: usize,
    c1: usize,
) {
    let g = a.geom;
    let p = g.p;
    let tile = c1 - c0;
    let mut prev: Vec<T> = vec![T::zero(); tile * p];
    let mut cur: Vec<T> = vec![T::zero(); tile * p];
    for step in s0..s1 {
        for tc in 0..tile {
            let c = c0 + tc;
            let base = g.scan_base(step, n, c);
            let xs = &a.x[base..base + p];
            let ls = &a.lam[base..base + p];
            let us = &a.u[base..base + p];
            let (hs, ys) = unsafe { (hid.slice(base, p), y.slice(base, p)) };
            let cur_row = &mut cur[tc * p..(tc + 1) * p];
            if step == s0 {
                seed_row(xs, ls, us, cur_row, hs, ys);
            } else {
                let wb = a.weight_row(step, n, c);
                step_row(
                    &prev[tc * p..(tc + 1) * p],
                    &a.w[wb..wb + 3 * p],
                    xs,
                    ls,
                    us,
                    cur_row,
                    hs,
                    ys,
                );
            }
        }
        core::mem::swap(&mut prev, &mut cur);
    }
}
