//! Reverse-mode pass of the line scan.
//!
//! For each slice the adjoint of the hidden state is swept backwards:
//!
//! ```text
//! g_h[i] = u[i] .* grad_y[i] + W[i+1]^T g_h[i+1]
//! grad_u[i]      = grad_y[i] .* h[i]
//! grad_x[i]      = lambda[i] .* g_h[i]
//! grad_lambda[i] = x[i]      .* g_h[i]
//! grad_w[i][r,b] = g_h[i][r] * h[i-1][r + b]
//! ```
//!
//! Weight gradients are taken with respect to the *normalized* weights;
//! composing with [`crate::normalize_bands_backward`] yields logit gradients.
//! Segment starts contribute zero weight gradient (their predecessor is the
//! reset state). In shared mode the weight gradient is accumulated over
//! channels in fixed channel order, which keeps results independent of the
//! worker count.
//!
//! There is one backward implementation regardless of the forward stage; it
//! runs over scan-major data.

use alloc::vec;
use alloc::vec::Vec;

use super::geometry::Geom;
use super::shared::SharedMut;
use crate::runner::SliceRunner;
use crate::scalar::Scalar;

pub(crate) struct BackwardArgs<'a, T> {
    pub geom: Geom,
    pub x: &'a [T],
    pub lam: &'a [T],
    pub u: &'a [T],
    pub hidden: &'a [T],
    pub grad_y: &'a [T],
    pub w: &'a [T],
    pub wc: usize,
    pub kchunk: usize,
}

pub(crate) fn run_backward<T: Scalar>(
    a: &BackwardArgs<'_, T>,
    gx: SharedMut<'_, T>,
    gl: SharedMut<'_, T>,
    gu: SharedMut<'_, T>,
    gw: SharedMut<'_, T>,
    runner: &dyn SliceRunner,
) {
    let g = a.geom;
    let segs = g.segments(a.kchunk);
    let shared = a.wc == 1;

    if shared {
        // One item per (segment, batch): grad_w rows are accumulated across
        // channels inside the item, in channel order.
        let task = |item: usize| {
            let seg = segs[item / g.n];
            let n = item % g.n;
            let mut g_cur: Vec<T> = vec![T::zero(); g.p];
            let mut g_next: Vec<T> = vec![T::zero(); g.p];
            for c in 0..g.c {
                backward_channel(a, gx, gl, gu, gw, seg, n, c, &mut g_cur, &mut g_next);
            }
        };
        runner.run(segs.len() * g.n, &task);
    } else {
        let per = g.n * g.c;
        let task = |item: usize| {
            let seg = segs[item / per];
            let rem = item % per;
            let n = rem / g.c;
            let c = rem % g.c;
            let mut g_cur: Vec<T> = vec![T::zero(); g.p];
            let mut g_next: Vec<T> = vec![T::zero(); g.p];
            backward_channel(a, gx, gl, gu, gw, seg, n, c, &mut g_cur, &mut g_next);
        };
        runner.run(segs.len() * per, &task);
    }
}

#[allow(clippy::too_many_arguments)]
fn backward_channel<T: Scalar>(
    a: &BackwardArgs<'_, T>,
    gx: SharedMut<'_, T>,
    gl: SharedMut<'_, T>,
    gu: SharedMut<'_, T>,
    gw: SharedMut<'_, T>,
    (s0, s1): (usize, usize),
    n: usize,
    c: usize,
    g_cur: &mut Vec<T>,
    g_next: &mut Vec<T>,
) {
    let g = a.geom;
    let p = g.p;
    let cw = if a.wc == 1 { 0 } else { c };
    for v in g_next.iter_mut() {
        *v = T::zero();
    }
    for step in (s0..s1).rev() {
        let base = g.scan_base(step, n, c);
        let gys = &a.grad_y[base..base + p];
        let us = &a.u[base..base + p];
        for r in 0..p {
            g_cur[r] = us[r] * gys[r];
        }
        if step + 1 < s1 {
            // Transposed accumulation: position r of step+1 pulled from its
            // three neighbours, so it pushes back into them here.
            let wb = ((step + 1) * g.n + n) * a.wc + cw;
            let wnext = &a.w[wb * p * 3..(wb + 1) * p * 3];
            for r in 0..p {
                let v = g_next[r];
                if r > 0 {
                    g_cur[r - 1] = g_cur[r - 1] + wnext[3 * r] * v;
                }
                g_cur[r] = g_cur[r] + wnext[3 * r + 1] * v;
                if r + 1 < p {
                    g_cur[r + 1] = g_cur[r + 1] + wnext[3 * r + 2] * v;
                }
            }
        }
        let hs = &a.hidden[base..base + p];
        let xs = &a.x[base..base + p];
        let ls = &a.lam[base..base + p];
        unsafe {
            let gxs = gx.slice(base, p);
            let gls = gl.slice(base, p);
            let gus = gu.slice(base, p);
            for r in 0..p {
                gus[r] = gys[r] * hs[r];
                gxs[r] = ls[r] * g_cur[r];
                gls[r] = xs[r] * g_cur[r];
            }
        }
        if step > s0 {
            let hprev = &a.hidden[g.scan_base(step - 1, n, c)..][..p];
            let gwb = (((step * g.n + n) * a.wc + cw) * p) * 3;
            let gwrow = unsafe { gw.slice(gwb, 3 * p) };
            for r in 0..p {
                let v = g_cur[r];
                if r > 0 {
                    gwrow[3 * r] = gwrow[3 * r] + v * hprev[r - 1];
                }
                gwrow[3 * r + 1] = gwrow[3 * r + 1] + v * hprev[r];
                if r + 1 < p {
                    gwrow[3 * r + 2] = gwrow[3 * r + 2] + v * hprev[r + 1];
                }
            }
        }
        core::mem::swap(g_cur, g_next);
    }
}
