//! Core algorithms for four-directional 2D line-scan propagation.
//!
//! A line scan walks a dense `N x C x H x W` activation tensor one row (or
//! column) at a time. Each step mixes the previous step's hidden state through
//! a row-stochastic tridiagonal band matrix and injects the current input
//! through a per-pixel gate:
//!
//! ```text
//! h[i] = W[i] * h[i-1] + lambda[i] .* x[i]        y[i] = u[i] .* h[i]
//! ```
//!
//! The crate provides:
//!
//! * [`Tensor4`] with explicit [`Layout`] control, so the scan's parallel axis
//!   can be made unit-stride before a kernel runs;
//! * masked-softmax [`normalize_bands`] producing [`BandWeights`] whose rows
//!   sum to one (bounded hidden-state growth), plus its exact backward pass;
//! * [`scan_forward`] / [`scan_backward`] in six output-equivalent
//!   implementation [`Stage`]s (per-step dispatch through compact tiled
//!   kernels), four-direction merging, and channel proxy compression;
//! * brute-force reference operators in [`oracle`] (dense block
//!   lower-triangular operator, explicit summation form, central finite
//!   differences) used as the truth source by every equivalence test.
//!
//! The crate is `no_std` (with `alloc`). Worker-based parallelism is injected
//! through the [`SliceRunner`] trait; [`Sequential`] is always available and
//! any multi-threaded runner must produce bit-identical results because work
//! items write disjoint output regions in a fixed arithmetic order.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod bands;
mod error;
pub mod oracle;
mod plan;
mod rng;
mod runner;
mod scalar;
mod scan;
mod tensor;

pub use bands::{
    band_in_range, normalize_bands, normalize_bands_backward, BandArray, BandDims, BandWeights,
    RawBandLogits, BAND_CENTER, BAND_LEFT, BAND_RIGHT,
};
pub use error::{Error, Result};
pub use oracle::{
    build_dense_operator, dense_apply, finite_diff_grad, linear_attention_reference,
    scan_order_slice, DenseOperator, DENSE_GUARDRAIL,
};
pub use plan::{ProxySpec, ScanPlan, Stage, WeightMode, DEFAULT_PROXY_CHANNELS};
pub use rng::SeedRng;
pub use runner::{Sequential, SliceRunner};
pub use scalar::Scalar;
pub use scan::{
    merge_directions, project_down, project_up, scan_all_directions, scan_all_directions_proxy,
    scan_backward, scan_forward, scan_forward_checked, scan_forward_into, DirectionParams,
    DirectionSet, MergeMode, ScanGradients, ScanOutput,
};
pub use tensor::{Direction, Fill, Layout, Tensor4, MAX_TENSOR_ELEMS};
