use alloc::format;
use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::rng::SeedRng;
use crate::scalar::Scalar;
use crate::tensor::Direction;

/// Default proxy channel count when compression is requested without an
/// explicit value.
pub const DEFAULT_PROXY_CHANNELS: usize = 8;

/// Whether each channel carries its own propagation weights or all channels
/// share one set per step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    PerChannel,
    Shared,
}

/// One rung of the implementation ladder. All stages are output-equivalent
/// where their preconditions overlap; they differ only in dispatch, layout,
/// and reuse strategy, so the cost of each optimization can be measured in
/// isolation.
///
/// * `S0`: one dispatch per scan step over strided canonical layout.
/// * `S1`: single fused loop per slice; hidden state kept in a local buffer.
/// * `S2`: the fused loop over scan-major layout (unit-stride inner loop).
/// * `S3`: scan-major with the previous step staged in a scratch buffer
///   shared by a tile of `c_slice` channels; one work item per (segment,
///   batch), tiles processed within the item.
/// * `S4`: the tiled kernel with one work item per 2D tile
///   (all positions x `c_slice` channels).
/// * `S5`: the tiled kernel restricted to shared weights, optionally behind
///   proxy channel compression.
///
/// None of the stages is auto-selected; callers (and the benchmark harness)
/// pick explicitly. `S3`/`S5` can be performance-neutral or slightly negative
/// in some configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    S0PerStep,
    S1Fused,
    S2Contiguous,
    S3TileReuse,
    S4ChannelBlocked,
    S5Compact,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::S0PerStep,
        Stage::S1Fused,
        Stage::S2Contiguous,
        Stage::S3TileReuse,
        Stage::S4ChannelBlocked,
        Stage::S5Compact,
    ];

    pub fn index(self) -> usize {
        match self {
            Stage::S0PerStep => 0,
            Stage::S1Fused => 1,
            Stage::S2Contiguous => 2,
            Stage::S3TileReuse => 3,
            Stage::S4ChannelBlocked => 4,
            Stage::S5Compact => 5,
        }
    }

    pub fn token(self) -> &'static str {
        ["S0", "S1", "S2", "S3", "S4", "S5"][self.index()]
    }

    pub fn parse_token(s: &str) -> Option<Stage> {
        match s {
            "S0" | "s0" => Some(Stage::S0PerStep),
            "S1" | "s1" => Some(Stage::S1Fused),
            "S2" | "s2" => Some(Stage::S2Contiguous),
            "S3" | "s3" => Some(Stage::S3TileReuse),
            "S4" | "s4" => Some(Stage::S4ChannelBlocked),
            "S5" | "s5" => Some(Stage::S5Compact),
            _ => None,
        }
    }
}

impl core::fmt::Display for Stage {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.token())
    }
}

/// Channel compression configuration: propagate in a `c_proxy`-channel
/// subspace, then expand back. `down` is row-major `c_proxy x c`; `up` is
/// row-major `c x c_proxy`. The matrices are caller-supplied; there is no
/// training loop here.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxySpec<T> {
    pub c_proxy: usize,
    pub down: Vec<T>,
    pub up: Vec<T>,
}

impl<T: Scalar> ProxySpec<T> {
    pub fn new(c: usize, c_proxy: usize, down: Vec<T>, up: Vec<T>) -> Result<Self> {
        if c_proxy == 0 || c_proxy > c {
            return Err(Error::PlanInvalid(format!(
                "c_proxy must be in 1..={c}, got {c_proxy}"
            )));
        }
        if down.len() != c_proxy * c || up.len() != c * c_proxy {
            return Err(Error::PlanInvalid(format!(
                "projection matrices must be {c_proxy}x{c} and {c}x{c_proxy}"
            )));
        }
        Ok(Self { c_proxy, down, up })
    }

    /// Identity projections with `c_proxy == c`; compression disabled.
    pub fn identity(c: usize) -> Self {
        let mut down = Vec::with_capacity(c * c);
        for i in 0..c {
            for j in 0..c {
                down.push(if i == j { T::one() } else { T::zero() });
            }
        }
        Self {
            c_proxy: c,
            up: down.clone(),
            down,
        }
    }

    /// Seeded random projections scaled by `1/sqrt(c)` and `1/sqrt(c_proxy)`.
    /// `c_proxy = None` selects [`DEFAULT_PROXY_CHANNELS`].
    pub fn seeded(c: usize, c_proxy: Option<usize>, rng: &mut SeedRng) -> Result<Self> {
        let cp = c_proxy.unwrap_or(DEFAULT_PROXY_CHANNELS);
        if cp == 0 || cp > c {
            return Err(Error::PlanInvalid(format!(
                "c_proxy must be in 1..={c}, got {cp}"
            )));
        }
        let down_scale = 1.0 / Float::sqrt(c as f64);
        let up_scale = 1.0 / Float::sqrt(cp as f64);
        let down = (0..cp * c)
            .map(|_| T::from_f64(rng.uniform(-down_scale, down_scale)))
            .collect();
        let up = (0..c * cp)
            .map(|_| T::from_f64(rng.uniform(-up_scale, up_scale)))
            .collect();
        Ok(Self {
            c_proxy: cp,
            down,
            up,
        })
    }
}

/// Full configuration of one propagation call.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanPlan<T> {
    pub direction: Direction,
    pub weight_mode: WeightMode,
    /// Segment length along the scan axis; `0` means one global segment. A
    /// non-dividing `kchunk` leaves a shorter final segment (no padding).
    /// The hidden state resets to zero at every segment start.
    pub kchunk: usize,
    pub proxy: Option<ProxySpec<T>>,
    pub stage: Stage,
    /// Channels per worker tile for the tiled stages (S3/S4/S5).
    pub c_slice: usize,
}

impl<T: Scalar> ScanPlan<T> {
    pub fn new(direction: Direction) -> Self {
        Self {
            direction,
            weight_mode: WeightMode::PerChannel,
            kchunk: 0,
            proxy: None,
            stage: Stage::S1Fused,
            c_slice: 1,
        }
    }

    pub fn with_stage(mut self, stage: Stage) -> Self {
        self.stage = stage;
        self
    }

    pub fn with_weight_mode(mut self, mode: WeightMode) -> Self {
        self.weight_mode = mode;
        self
    }

    pub fn with_kchunk(mut self, kchunk: usize) -> Self {
        self.kchunk = kchunk;
        self
    }

    pub fn with_c_slice(mut self, c_slice: usize) -> Self {
        self.c_slice = c_slice;
        self
    }

    pub fn with_proxy(mut self, proxy: ProxySpec<T>) -> Self {
        self.proxy = Some(proxy);
        self
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    /// Check plan invariants against a channel count.
    pub fn validate(&self, channels: usize) -> Result<()> {
        if self.c_slice == 0 {
            return Err(Error::PlanInvalid("c_slice must be >= 1".into()));
        }
        if self.stage == Stage::S5Compact && self.weight_mode != WeightMode::Shared {
            return Err(Error::PlanInvalid(
                "stage S5 requires shared weights".into(),
            ));
        }
        if let Some(p) = &self.proxy {
            if self.weight_mode != WeightMode::Shared {
                return Err(Error::PlanInvalid(
                    "proxy compression requires shared weights".into(),
                ));
            }
            if p.c_proxy > channels {
                return Err(Error::PlanInvalid(format!(
                    "c_proxy {} exceeds channel count {channels}",
                    p.c_proxy
                )));
            }
        }
        Ok(())
    }

    /// Expected weight-channel count for this plan.
    pub fn weight_channels(&self, channels: usize) -> usize {
        match self.weight_mode {
            WeightMode::PerChannel => channels,
            WeightMode::Shared => 1,
        }
    }
}
