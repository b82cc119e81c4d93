//! The line-scan propagation engine: forward, backward, directional merging,
//! and channel proxy compression.
//!
//! `scan_forward` accepts inputs in any layout. Stages S0/S1 run over
//! canonical order, stages S2..S5 over the scan-major order of the plan's
//! direction; inputs are re-laid-out on entry when they do not match, and
//! outputs are returned in the caller's layout. Handing a stage its preferred
//! layout up front (see [`Tensor4::to_scan_layout`]) keeps the conversion out
//! of the call.

mod backward;
mod forward;
mod geometry;
mod shared;

use alloc::vec::Vec;

use crate::bands::{BandArray, BandWeights};
use crate::error::{Error, Result};
use crate::plan::{ScanPlan, Stage};
use crate::runner::SliceRunner;
use crate::scalar::Scalar;
use crate::tensor::{Direction, Layout, Tensor4};

use backward::{run_backward, BackwardArgs};
use forward::{run_forward, ForwardArgs};
use geometry::Geom;
use shared::SharedMut;

/// Result of a forward pass: the gated output and the full hidden-state
/// history (same shape as the input, retained for the backward pass).
#[derive(Debug, Clone)]
pub struct ScanOutput<T> {
    pub y: Tensor4<T>,
    pub hidden: Tensor4<T>,
}

/// Gradients of a scalar loss with respect to every forward input. The
/// weight gradient is with respect to the normalized weights.
#[derive(Debug, Clone)]
pub struct ScanGradients<T> {
    pub x: Tensor4<T>,
    pub lambda: Tensor4<T>,
    pub u: Tensor4<T>,
    pub weights: BandArray<T>,
}

/// How the four directional outputs are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeMode {
    Sum,
    Mean,
}

/// Parameters of one directional pass.
#[derive(Debug, Clone)]
pub struct DirectionParams<T> {
    pub weights: BandWeights<T>,
    pub lambda: Tensor4<T>,
    pub u: Tensor4<T>,
}

/// One parameter set per direction, indexed in the fixed order
/// T2B, B2T, L2R, R2L.
#[derive(Debug, Clone)]
pub struct DirectionSet<T> {
    params: [DirectionParams<T>; 4],
}

impl<T: Scalar> DirectionSet<T> {
    pub fn new(params: [DirectionParams<T>; 4]) -> Self {
        Self { params }
    }

    /// Build per-direction parameters in the fixed direction order.
    pub fn build<F>(mut f: F) -> Result<Self>
    where
        F: FnMut(Direction) -> Result<DirectionParams<T>>,
    {
        Ok(Self::new([
            f(Direction::TopToBottom)?,
            f(Direction::BottomToTop)?,
            f(Direction::LeftToRight)?,
            f(Direction::RightToLeft)?,
        ]))
    }

    pub fn get(&self, d: Direction) -> &DirectionParams<T> {
        &self.params[d.index()]
    }
}

fn needed_layout<T>(plan: &ScanPlan<T>) -> Layout {
    match plan.stage {
        Stage::S0PerStep | Stage::S1Fused => Layout::Canonical,
        _ => Layout::ScanMajor(plan.direction),
    }
}

fn validate_common<T: Scalar>(
    x: &Tensor4<T>,
    w: &BandWeights<T>,
    lambda: &Tensor4<T>,
    u: &Tensor4<T>,
    plan: &ScanPlan<T>,
) -> Result<()> {
    let (n, c, h, wd) = x.dims();
    plan.validate(c)?;
    for (t, what) in [(lambda, "lambda"), (u, "u")] {
        if t.dims() != x.dims() {
            return Err(Error::ShapeMismatch {
                what,
                expected: x.dims(),
                got: t.dims(),
            });
        }
        if t.layout() != x.layout() {
            return Err(Error::LayoutMismatch {
                what: "lambda/u must share the input's layout",
            });
        }
    }
    let dims = w.dims();
    if dims.steps != plan.direction.scan_len(h, wd) {
        return Err(Error::BandShapeMismatch {
            what: "weight steps must equal the scan-axis length",
        });
    }
    if dims.positions != plan.direction.par_len(h, wd) {
        return Err(Error::BandShapeMismatch {
            what: "weight positions must equal the parallel-axis length",
        });
    }
    if dims.batch != n {
        return Err(Error::BandShapeMismatch {
            what: "weight batch must equal the tensor batch",
        });
    }
    if dims.weight_channels != plan.weight_channels(c) {
        return Err(Error::BandShapeMismatch {
            what: "weight channels must match the weight mode (C or 1)",
        });
    }
    Ok(())
}

fn reject_proxy<T>(plan: &ScanPlan<T>, op: &str) -> Result<()> {
    if plan.proxy.is_some() {
        return Err(Error::PlanInvalid(alloc::format!(
            "{op} does not apply proxy compression; use scan_all_directions_proxy"
        )));
    }
    Ok(())
}

/// Forward line scan per the plan's stage. All stages produce equal outputs;
/// see [`Stage`] for what each one changes operationally.
pub fn scan_forward<T: Scalar>(
    x: &Tensor4<T>,
    w: &BandWeights<T>,
    lambda: &Tensor4<T>,
    u: &Tensor4<T>,
    plan: &ScanPlan<T>,
    runner: &dyn SliceRunner,
) -> Result<ScanOutput<T>> {
    validate_common(x, w, lambda, u, plan)?;
    reject_proxy(plan, "scan_forward")?;
    let needed = needed_layout(plan);
    if x.layout() == needed {
        let (y, hidden) = forward_in_layout(x, w, lambda, u, plan, runner);
        Ok(ScanOutput { y, hidden })
    } else {
        let xx = x.to_layout(needed)?;
        let ll = lambda.to_layout(needed)?;
        let uu = u.to_layout(needed)?;
        let (y, hidden) = forward_in_layout(&xx, w, &ll, &uu, plan, runner);
        Ok(ScanOutput {
            y: y.to_layout(x.layout())?,
            hidden: hidden.to_layout(x.layout())?,
        })
    }
}

fn forward_in_layout<T: Scalar>(
    x: &Tensor4<T>,
    w: &BandWeights<T>,
    lambda: &Tensor4<T>,
    u: &Tensor4<T>,
    plan: &ScanPlan<T>,
    runner: &dyn SliceRunner,
) -> (Tensor4<T>, Tensor4<T>) {
    let mut y = Tensor4::zeros_like(x);
    let mut hidden = Tensor4::zeros_like(x);
    forward_fill(x, w, lambda, u, plan, runner, &mut y, &mut hidden);
    (y, hidden)
}

#[allow(clippy::too_many_arguments)]
fn forward_fill<T: Scalar>(
    x: &Tensor4<T>,
    w: &BandWeights<T>,
    lambda: &Tensor4<T>,
    u: &Tensor4<T>,
    plan: &ScanPlan<T>,
    runner: &dyn SliceRunner,
    y: &mut Tensor4<T>,
    hidden: &mut Tensor4<T>,
) {
    let args = ForwardArgs {
        geom: Geom::new(x, plan.direction),
        x: x.data(),
        lam: lambda.data(),
        u: u.data(),
        w: w.data(),
        wc: w.dims().weight_channels,
        kchunk: plan.kchunk,
        c_slice: plan.c_slice,
    };
    run_forward(
        &args,
        plan.stage,
        SharedMut::new(y.data_mut()),
        SharedMut::new(hidden.data_mut()),
        runner,
    );
}

/// [`scan_forward`] writing into caller-owned output buffers. Every cell of
/// `out` is overwritten. Inputs must already be in the stage's preferred
/// layout (canonical for S0/S1, scan-major of the plan's direction
/// otherwise) and `out` must match it; no conversions or allocations happen
/// here, which makes this the variant to time in tight benchmark loops.
pub fn scan_forward_into<T: Scalar>(
    x: &Tensor4<T>,
    w: &BandWeights<T>,
    lambda: &Tensor4<T>,
    u: &Tensor4<T>,
    plan: &ScanPlan<T>,
    runner: &dyn SliceRunner,
    out: &mut ScanOutput<T>,
) -> Result<()> {
    validate_common(x, w, lambda, u, plan)?;
    reject_proxy(plan, "scan_forward_into")?;
    let needed = needed_layout(plan);
    if x.layout() != needed {
        return Err(Error::LayoutMismatch {
            what: "scan_forward_into requires inputs already in the stage's layout",
        });
    }
    for (t, what) in [(&out.y, "output y"), (&out.hidden, "output hidden")] {
        if t.dims() != x.dims() {
            return Err(Error::ShapeMismatch {
                what,
                expected: x.dims(),
                got: t.dims(),
            });
        }
        if t.layout() != needed {
            return Err(Error::LayoutMismatch {
                what: "output buffers must use the stage's layout",
            });
        }
    }
    let ScanOutput { y, hidden } = out;
    forward_fill(x, w, lambda, u, plan, runner, y, hidden);
    Ok(())
}

/// Sequential reference forward pass that asserts the per-step bound
/// `max|h[i]| <= max|h[i-1]| + max|lambda[i] .* x[i]|` for every slice
/// (allowing 1e-12 relative rounding slack). Row-stochastic nonnegative
/// weights make the bound hold, so a violation indicates corrupted weights.
pub fn scan_forward_checked<T: Scalar>(
    x: &Tensor4<T>,
    w: &BandWeights<T>,
    lambda: &Tensor4<T>,
    u: &Tensor4<T>,
    plan: &ScanPlan<T>,
) -> Result<ScanOutput<T>> {
    validate_common(x, w, lambda, u, plan)?;
    reject_proxy(plan, "scan_forward_checked")?;
    let target = Layout::ScanMajor(plan.direction);
    let xx = x.to_layout(target)?;
    let ll = lambda.to_layout(target)?;
    let uu = u.to_layout(target)?;
    let mut y = Tensor4::zeros_like(&xx);
    let mut hidden = Tensor4::zeros_like(&xx);
    let g = Geom::new(&xx, plan.direction);
    let wc = w.dims().weight_channels;
    let wdata = w.data();
    let p = g.p;
    for (s0, s1) in g.segments(plan.kchunk) {
        for n in 0..g.n {
            for c in 0..g.c {
                let cw = if wc == 1 { 0 } else { c };
                let mut prev = alloc::vec![T::zero(); p];
                let mut cur = alloc::vec![T::zero(); p];
                let mut prev_norm = 0.0f64;
                for step in s0..s1 {
                    let base = g.scan_base(step, n, c);
                    let xs = &xx.data()[base..base + p];
                    let ls = &ll.data()[base..base + p];
                    let us = &uu.data()[base..base + p];
                    let mut inject_norm = 0.0f64;
                    let mut cur_norm = 0.0f64;
                    for r in 0..p {
                        let mut acc = T::zero();
                        if step > s0 {
                            let wb = (((step * g.n + n) * wc + cw) * p + r) * 3;
                            if r > 0 {
                                acc = acc + wdata[wb] * prev[r - 1];
                            }
                            acc = acc + wdata[wb + 1] * prev[r];
                            if r + 1 < p {
                                acc = acc + wdata[wb + 2] * prev[r + 1];
                            }
                        }
                        let inject = ls[r] * xs[r];
                        let hval = acc + inject;
                        inject_norm = inject_norm.max(inject.to_f64().abs());
                        cur_norm = cur_norm.max(hval.to_f64().abs());
                        cur[r] = hval;
                        hidden.data_mut()[base + r] = hval;
                        y.data_mut()[base + r] = us[r] * hval;
                    }
                    let rhs = prev_norm + inject_norm;
                    if cur_norm > rhs * (1.0 + 1e-12) {
                        return Err(Error::StabilityViolation {
                            step,
                            lhs: cur_norm,
                            rhs,
                        });
                    }
                    prev_norm = cur_norm;
                    core::mem::swap(&mut prev, &mut cur);
                }
            }
        }
    }
    Ok(ScanOutput {
        y: y.to_layout(x.layout())?,
        hidden: hidden.to_layout(x.layout())?,
    })
}

/// Reverse-mode pass. `output` must come from a forward call on the same
/// primals and plan; its hidden history supplies `h[i-1]` for the weight
/// gradients.
#[allow(clippy::too_many_arguments)]
pub fn scan_backward<T: Scalar>(
    x: &Tensor4<T>,
    w: &BandWeights<T>,
    lambda: &Tensor4<T>,
    u: &Tensor4<T>,
    output: &ScanOutput<T>,
    grad_y: &Tensor4<T>,
    plan: &ScanPlan<T>,
    runner: &dyn SliceRunner,
) -> Result<ScanGradients<T>> {
    validate_common(x, w, lambda, u, plan)?;
    reject_proxy(plan, "scan_backward")?;
    for (t, what) in [
        (&output.hidden, "hidden history"),
        (&output.y, "forward output"),
        (grad_y, "grad_y"),
    ] {
        if t.dims() != x.dims() {
            return Err(Error::ShapeMismatch {
                what,
                expected: x.dims(),
                got: t.dims(),
            });
        }
    }

    let target = Layout::ScanMajor(plan.direction);
    let xx = x.to_layout(target)?;
    let ll = lambda.to_layout(target)?;
    let uu = u.to_layout(target)?;
    let hh = output.hidden.to_layout(target)?;
    let gy = grad_y.to_layout(target)?;

    let mut gx = Tensor4::zeros_like(&xx);
    let mut gl = Tensor4::zeros_like(&xx);
    let mut gu = Tensor4::zeros_like(&xx);
    let mut gw = BandArray::zeros(w.dims());

    let args = BackwardArgs {
        geom: Geom::new(&xx, plan.direction),
        x: xx.data(),
        lam: ll.data(),
        u: uu.data(),
        hidden: hh.data(),
        grad_y: gy.data(),
        w: w.data(),
        wc: w.dims().weight_channels,
        kchunk: plan.kchunk,
    };
    run_backward(
        &args,
        SharedMut::new(gx.data_mut()),
        SharedMut::new(gl.data_mut()),
        SharedMut::new(gu.data_mut()),
        SharedMut::new(&mut gw.data),
        runner,
    );

    Ok(ScanGradients {
        x: gx.to_layout(x.layout())?,
        lambda: gl.to_layout(x.layout())?,
        u: gu.to_layout(x.layout())?,
        weights: gw,
    })
}

/// Element-wise combination of the four directional outputs in the fixed
/// order T2B, B2T, L2R, R2L, so the result is deterministic no matter which
/// pass finished first.
pub fn merge_directions<T: Scalar>(
    outputs: [&Tensor4<T>; 4],
    mode: MergeMode,
) -> Result<Tensor4<T>> {
    let first = outputs[0];
    for t in &outputs[1..] {
        if t.dims() != first.dims() {
            return Err(Error::ShapeMismatch {
                what: "merge_directions",
                expected: first.dims(),
                got: t.dims(),
            });
        }
        if t.layout() != first.layout() {
            return Err(Error::LayoutMismatch {
                what: "merge_directions requires a common layout",
            });
        }
    }
    let mut out = Tensor4::zeros_like(first);
    let (a, b, c, d) = (
        outputs[0].data(),
        outputs[1].data(),
        outputs[2].data(),
        outputs[3].data(),
    );
    let quarter = T::from_f64(0.25);
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        let sum = ((a[i] + b[i]) + c[i]) + d[i];
        *v = match mode {
            MergeMode::Sum => sum,
            MergeMode::Mean => sum * quarter,
        };
    }
    Ok(out)
}

/// Run all four directional passes with the plan as a template (its
/// `direction` field is overridden per pass) and merge the outputs. The
/// result is canonical-layout and independent of pass scheduling.
pub fn scan_all_directions<T: Scalar>(
    x: &Tensor4<T>,
    set: &DirectionSet<T>,
    plan: &ScanPlan<T>,
    mode: MergeMode,
    runner: &dyn SliceRunner,
) -> Result<Tensor4<T>> {
    reject_proxy(plan, "scan_all_directions")?;
    let mut outs: Vec<Tensor4<T>> = Vec::with_capacity(4);
    for d in Direction::ALL {
        let pass = plan.clone().with_direction(d);
        let p = set.get(d);
        let out = scan_forward(x, &p.weights, &p.lambda, &p.u, &pass, runner)?;
        outs.push(out.y.to_layout(Layout::Canonical)?);
    }
    merge_directions([&outs[0], &outs[1], &outs[2], &outs[3]], mode)
}

/// Four-directional propagation in a compressed channel space: project the
/// input down to `c_proxy` channels, scan there with shared weights, then
/// expand back. The per-direction `lambda`/`u` in `set` are sized for the
/// proxy channel count. Shrinks the independent slice count per pass from
/// `segments x N x C` to `segments x N x c_proxy`.
pub fn scan_all_directions_proxy<T: Scalar>(
    x: &Tensor4<T>,
    set: &DirectionSet<T>,
    plan: &ScanPlan<T>,
    mode: MergeMode,
    runner: &dyn SliceRunner,
) -> Result<Tensor4<T>> {
    let (_, c, _, _) = x.dims();
    plan.validate(c)?;
    let proxy = plan
        .proxy
        .as_ref()
        .ok_or_else(|| Error::PlanInvalid("proxy configuration required".into()))?;
    let xc = x.to_layout(Layout::Canonical)?;
    let xp = project_down(&xc, &proxy.down, proxy.c_proxy)?;
    let mut inner = plan.clone();
    inner.proxy = None;
    let yp = scan_all_directions(&xp, set, &inner, mode, runner)?;
    project_up(&yp, &proxy.up, c)
}

/// Per-pixel channel projection: `out[n, co] = sum_ci mat[co, ci] * x[n, ci]`
/// with `mat` row-major `c_out x c_in`. Exactly zero coefficients contribute
/// nothing, so identity matrices reproduce the input bit-for-bit.
fn project<T: Scalar>(x: &Tensor4<T>, mat: &[T], c_out: usize) -> Result<Tensor4<T>> {
    if x.layout() != Layout::Canonical {
        return Err(Error::LayoutMismatch {
            what: "channel projection requires canonical layout",
        });
    }
    let (n_total, c_in, h, w) = x.dims();
    if mat.len() != c_out * c_in {
        return Err(Error::PlanInvalid(alloc::format!(
            "projection matrix must be {c_out}x{c_in}, got {} entries",
            mat.len()
        )));
    }
    let hw = h * w;
    let src = x.data();
    let mut data = alloc::vec![T::zero(); n_total * c_out * hw];
    for n in 0..n_total {
        for co in 0..c_out {
            let dst = &mut data[(n * c_out + co) * hw..(n * c_out + co + 1) * hw];
            for ci in 0..c_in {
                let k = mat[co * c_in + ci];
                if k == T::zero() {
                    continue;
                }
                let plane = &src[(n * c_in + ci) * hw..(n * c_in + ci + 1) * hw];
                for (d, s) in dst.iter_mut().zip(plane) {
                    *d = *d + k * *s;
                }
            }
        }
    }
    Tensor4::from_vec(n_total, c_out, h, w, Layout::Canonical, data)
}

/// Compress channels: `down` is row-major `c_proxy x C`.
pub fn project_down<T: Scalar>(x: &Tensor4<T>, down: &[T], c_proxy: usize) -> Result<Tensor4<T>> {
    project(x, down, c_proxy)
}

/// Expand channels back: `up` is row-major `C x c_proxy`.
pub fn project_up<T: Scalar>(x: &Tensor4<T>, up: &[T], channels: usize) -> Result<Tensor4<T>> {
    project(x, up, channels)
}
