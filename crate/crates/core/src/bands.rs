//! Tridiagonal propagation bands and their normalization.
//!
//! Each output position of a scan step couples to at most three neighbouring
//! positions of the previous step: left (`pos - 1`), center (`pos`), right
//! (`pos + 1`). Raw learnable logits are turned into weights by a masked
//! softmax over the in-range neighbours, which makes every row of the implied
//! step matrix nonnegative with entries summing to exactly one: the condition
//! that keeps the hidden state bounded over arbitrarily long scans while still
//! propagating context. Out-of-range bands at the parallel-axis edges are
//! masked to exact zeros; the mask is structural (derived from the position),
//! see [`band_in_range`].
//!
//! Alternative stability parameterizations (sigmoid ratios, absolute-value
//! normalization) are deliberately not implemented.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::SeedRng;
use crate::scalar::Scalar;

pub const BAND_LEFT: usize = 0;
pub const BAND_CENTER: usize = 1;
pub const BAND_RIGHT: usize = 2;

/// Whether `band` addresses an in-range neighbour at parallel position `pos`
/// out of `positions`. This is the validity mask of a band array.
#[inline]
pub fn band_in_range(pos: usize, band: usize, positions: usize) -> bool {
    match band {
        BAND_LEFT => pos > 0,
        BAND_CENTER => true,
        BAND_RIGHT => pos + 1 < positions,
        _ => false,
    }
}

/// Shape of a band array: `[steps, batch, weight_channels, positions, 3]`.
/// `weight_channels` is the channel count for per-channel weights or `1` when
/// a single set of weights is shared by all channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BandDims {
    pub steps: usize,
    pub batch: usize,
    pub weight_channels: usize,
    pub positions: usize,
}

impl BandDims {
    pub fn new(steps: usize, batch: usize, weight_channels: usize, positions: usize) -> Self {
        Self {
            steps,
            batch,
            weight_channels,
            positions,
        }
    }

    pub fn len(&self) -> usize {
        self.steps * self.batch * self.weight_channels * self.positions * 3
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of band 0 at `(step, batch, weight_channel, position)`.
    #[inline]
    pub fn offset(&self, step: usize, batch: usize, wc: usize, pos: usize) -> usize {
        (((step * self.batch + batch) * self.weight_channels + wc) * self.positions + pos) * 3
    }
}

/// Plain band-shaped array; used for gradients with respect to weights or
/// logits, where no stochasticity invariant applies.
#[derive(Debug, Clone, PartialEq)]
pub struct BandArray<T> {
    pub dims: BandDims,
    pub data: Vec<T>,
}

impl<T: Scalar> BandArray<T> {
    pub fn zeros(dims: BandDims) -> Self {
        Self {
            dims,
            data: vec![T::zero(); dims.len()],
        }
    }
}

/// Raw pre-normalization logits. Finite by construction.
#[derive(Debug, Clone)]
pub struct RawBandLogits<T> {
    dims: BandDims,
    data: Vec<T>,
}

impl<T: Scalar> RawBandLogits<T> {
    pub fn new(dims: BandDims, data: Vec<T>) -> Result<Self> {
        if data.len() != dims.len() {
            return Err(Error::BandShapeMismatch {
                what: "logit data length does not match dims",
            });
        }
        for (i, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { flat_index: i });
            }
        }
        Ok(Self { dims, data })
    }

    /// Seeded uniform logits in `[lo, hi)`.
    pub fn from_rng(dims: BandDims, rng: &mut SeedRng, lo: f64, hi: f64) -> Self {
        let data = (0..dims.len())
            .map(|_| T::from_f64(rng.uniform(lo, hi)))
            .collect();
        Self { dims, data }
    }

    /// All-equal logits; normalizes to uniform weights over valid bands.
    pub fn constant(dims: BandDims, v: f64) -> Self {
        Self {
            dims,
            data: vec![T::from_f64(v); dims.len()],
        }
    }

    pub fn dims(&self) -> BandDims {
        self.dims
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }
}

/// Normalized propagation weights. Constructed only through
/// [`normalize_bands`] or the checked [`BandWeights::from_parts`], so every
/// instance satisfies: entries in `[0, 1]`, masked entries exactly zero, and
/// each position's valid entries summing to one within
/// [`Scalar::ROW_SUM_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct BandWeights<T> {
    dims: BandDims,
    data: Vec<T>,
}

impl<T: Scalar> BandWeights<T> {
    /// Validate and wrap an externally produced weight array. Reports the
    /// first offending position.
    pub fn from_parts(dims: BandDims, data: Vec<T>) -> Result<Self> {
        if data.len() != dims.len() {
            return Err(Error::BandShapeMismatch {
                what: "weight data length does not match dims",
            });
        }
        let w = Self { dims, data };
        w.validate()?;
        Ok(w)
    }

    fn validate(&self) -> Result<()> {
        let d = self.dims;
        for step in 0..d.steps {
            for b in 0..d.batch {
                for wc in 0..d.weight_channels {
                    for pos in 0..d.positions {
                        let base = d.offset(step, b, wc, pos);
                        let mut sum = 0.0f64;
                        for band in 0..3 {
                            let v = self.data[base + band].to_f64();
                            let valid = band_in_range(pos, band, d.positions);
                            if (!valid && v != 0.0) || v < 0.0 || !v.is_finite() {
                                return Err(Error::NotRowStochastic {
                                    step,
                                    batch: b,
                                    weight_channel: wc,
                                    position: pos,
                                    sum: v,
                                });
                            }
                            sum += v;
                        }
                        if (sum - 1.0).abs() > T::ROW_SUM_TOL {
                            return Err(Error::NotRowStochastic {
                                step,
                                batch: b,
                                weight_channel: wc,
                                position: pos,
                                sum,
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> BandDims {
        self.dims
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    /// Unchecked mutable access. Intended for fault-injection hooks in
    /// verification tooling; mutating through this can break the type's
    /// invariants.
    #[doc(hidden)]
    pub fn data_mut_unchecked(&mut self) -> &mut [T] {
        &mut self.data
    }
}

/// Masked softmax over each position's valid neighbour set.
///
/// Per position, with `V` the in-range bands (three in the interior, two at
/// the parallel-axis edges, one when `positions == 1`):
///
/// ```text
/// w_k = exp(l_k - max_V l) / sum_{j in V} exp(l_j - max_V l)    k in V
/// w_k = 0                                                       k not in V
/// ```
///
/// The max subtraction keeps large training-scale logits from overflowing.
pub fn normalize_bands<T: Scalar>(logits: &RawBandLogits<T>) -> Result<BandWeights<T>> {
    let d = logits.dims();
    let src = logits.data();
    let mut out = vec![T::zero(); src.len()];
    let groups = src.len() / 3;
    for g in 0..groups {
        let pos = g % d.positions;
        let base = g * 3;
        let mut max = T::neg_infinity();
        for band in 0..3 {
            if band_in_range(pos, band, d.positions) && src[base + band] > max {
                max = src[base + band];
            }
        }
        let mut sum = T::zero();
        for band in 0..3 {
            if band_in_range(pos, band, d.positions) {
                let e = (src[base + band] - max).exp();
                out[base + band] = e;
                sum = sum + e;
            }
        }
        for band in 0..3 {
            if band_in_range(pos, band, d.positions) {
                out[base + band] = out[base + band] / sum;
            }
        }
    }
    Ok(BandWeights { dims: d, data: out })
}

/// Exact reverse pass of [`normalize_bands`]: the softmax Jacobian restricted
/// to each position's valid set.
///
/// ```text
/// dl_k = w_k * (g_k - sum_{j in V} w_j * g_j)
/// ```
///
/// Gradient entries on masked bands are ignored; masked outputs are zero.
pub fn normalize_bands_backward<T: Scalar>(
    logits: &RawBandLogits<T>,
    grad_weights: &BandArray<T>,
) -> Result<BandArray<T>> {
    if grad_weights.dims != logits.dims() {
        return Err(Error::BandShapeMismatch {
            what: "gradient dims do not match logit dims",
        });
    }
    let weights = normalize_bands(logits)?;
    let d = logits.dims();
    let w = weights.data();
    let g = &grad_weights.data;
    let mut out = vec![T::zero(); w.len()];
    let groups = w.len() / 3;
    for grp in 0..groups {
        let pos = grp % d.positions;
        let base = grp * 3;
        let mut dot = T::zero();
        for band in 0..3 {
            if band_in_range(pos, band, d.positions) {
                dot = dot + w[base + band] * g[base + band];
            }
        }
        for band in 0..3 {
            if band_in_range(pos, band, d.positions) {
                out[base + band] = w[base + band] * (g[base + band] - dot);
            }
        }
    }
    Ok(BandArray { dims: d, data: out })
}
