//! Benchmark harness: deterministic input generation, wall-clock timing of
//! the stage kernels, the analytic bytes-moved model, the stage ladder, and
//! the slice-saturation cost model.
//!
//! Timing protocol: inputs are generated from the seed, the kernel runs
//! `warmup` times (discarded) and then `repeats` times on a monotonic clock;
//! the headline statistic is the median. Every run's output is compared
//! against the first: a mismatch aborts the measurement rather than timing a
//! broken kernel. One measurement runs at a time; parallelism happens inside
//! the measured kernel.

use std::fmt;
use std::time::Instant;

use anyhow::{bail, ensure, Result};
use serde::{Deserialize, Serialize};

use linescan_core::{
    normalize_bands, scan_all_directions, scan_all_directions_proxy, scan_forward,
    scan_forward_into, BandDims, BandWeights, Direction, DirectionParams, DirectionSet, Fill,
    MergeMode, ProxySpec, RawBandLogits, Scalar, ScanOutput, ScanPlan, SeedRng, Stage, Tensor4,
    WeightMode,
};

use crate::pool::WorkerPool;

/// Numeric precision of a benchmark run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    pub fn token(self) -> &'static str {
        match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        }
    }

    pub fn parse_token(s: &str) -> Option<Self> {
        match s {
            "f32" | "F32" => Some(Precision::F32),
            "f64" | "F64" => Some(Precision::F64),
            _ => None,
        }
    }

    pub fn elem_bytes(self) -> u64 {
        match self {
            Precision::F32 => 4,
            Precision::F64 => 8,
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// A single direction, or all four merged (`ALL`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionSpec {
    One(Direction),
    All,
}

impl DirectionSpec {
    pub fn token(self) -> &'static str {
        match self {
            DirectionSpec::One(d) => d.token(),
            DirectionSpec::All => "ALL",
        }
    }

    pub fn parse_token(s: &str) -> Option<Self> {
        if s.eq_ignore_ascii_case("all") {
            return Some(DirectionSpec::All);
        }
        Direction::parse_token(s).map(DirectionSpec::One)
    }
}

impl fmt::Display for DirectionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Full sweep configuration. The Cartesian product of `dims x stages x
/// directions` is measured in that order.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub dims: Vec<[usize; 4]>,
    pub stages: Vec<Stage>,
    pub directions: Vec<DirectionSpec>,
    pub precision: Precision,
    pub repeats: usize,
    pub warmup: usize,
    pub kchunk: usize,
    pub c_slice: usize,
    pub c_proxy: Option<usize>,
    pub seed: u64,
    pub workers: usize,
    pub out: Option<std::path::PathBuf>,
}

impl BenchConfig {
    pub fn with_defaults() -> Self {
        Self {
            dims: Vec::new(),
            stages: Vec::new(),
            directions: vec![DirectionSpec::One(Direction::LeftToRight)],
            precision: Precision::F32,
            repeats: 5,
            warmup: 2,
            kchunk: 0,
            c_slice: 4,
            c_proxy: None,
            seed: 0,
            workers: 1,
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.repeats >= 5,
            "repeats must be >= 5, got {}",
            self.repeats
        );
        ensure!(self.warmup >= 2, "warmup must be >= 2, got {}", self.warmup);
        ensure!(self.c_slice >= 1, "c_slice must be >= 1");
        ensure!(self.workers >= 1, "workers must be >= 1");
        for d in &self.dims {
            ensure!(
                d.iter().all(|&v| v >= 1),
                "dims must be positive, got {}x{}x{}x{}",
                d[0],
                d[1],
                d[2],
                d[3]
            );
        }
        if let Some(cp) = self.c_proxy {
            ensure!(cp >= 1, "c_proxy must be >= 1");
            for d in &self.dims {
                ensure!(
                    cp <= d[1],
                    "c_proxy {} exceeds channel count {} of dims {}x{}x{}x{}",
                    cp,
                    d[1],
                    d[0],
                    d[1],
                    d[2],
                    d[3]
                );
            }
        }
        Ok(())
    }
}

/// One measurement request: a point of the sweep's Cartesian product.
#[derive(Debug, Clone)]
pub struct StageRequest {
    pub stage: Stage,
    pub direction: DirectionSpec,
    pub dims: [usize; 4],
    pub precision: Precision,
    pub repeats: usize,
    pub warmup: usize,
    pub kchunk: usize,
    pub c_slice: usize,
    pub c_proxy: Option<usize>,
    pub seed: u64,
    pub workers: usize,
}

impl StageRequest {
    pub fn from_config(
        cfg: &BenchConfig,
        dims: [usize; 4],
        stage: Stage,
        direction: DirectionSpec,
    ) -> Self {
        Self {
            stage,
            direction,
            dims,
            precision: cfg.precision,
            repeats: cfg.repeats,
            warmup: cfg.warmup,
            kchunk: cfg.kchunk,
            c_slice: cfg.c_slice,
            c_proxy: cfg.c_proxy,
            seed: cfg.seed,
            workers: cfg.workers,
        }
    }
}

/// One benchmark observation. Field order equals the report column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub stage: String,
    pub direction: String,
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub precision: String,
    pub kchunk: usize,
    pub c_slice: usize,
    /// 0 when proxy compression is off.
    pub c_proxy: usize,
    pub workers: usize,
    pub repeats: usize,
    pub median_ns: u64,
    pub min_ns: u64,
    pub p90_ns: u64,
    pub bytes_est: u64,
    pub throughput_bps: f64,
    pub seed: u64,
}

/// Sweep entry: a finished measurement or an aborted one with its diagnostic.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepEntry {
    Ok(Measurement),
    Failed {
        stage: String,
        direction: String,
        dims: [usize; 4],
        error: String,
    },
}

impl SweepEntry {
    pub fn measurement(&self) -> Option<&Measurement> {
        match self {
            SweepEntry::Ok(m) => Some(m),
            SweepEntry::Failed { .. } => None,
        }
    }
}

enum RunKind<T: Scalar> {
    Single {
        x: Tensor4<T>,
        w: BandWeights<T>,
        lam: Tensor4<T>,
        u: Tensor4<T>,
        plan: ScanPlan<T>,
    },
    AllDirs {
        x: Tensor4<T>,
        set: DirectionSet<T>,
        plan: ScanPlan<T>,
    },
    Proxy {
        x: Tensor4<T>,
        set: DirectionSet<T>,
        plan: ScanPlan<T>,
    },
}

enum RunOut<T: Scalar> {
    Scan(ScanOutput<T>),
    Tensor(Tensor4<T>),
}

fn outputs_equal<T: Scalar>(a: &RunOut<T>, b: &RunOut<T>) -> bool {
    match (a, b) {
        (RunOut::Scan(x), RunOut::Scan(y)) => {
            x.y.data() == y.y.data() && x.hidden.data() == y.hidden.data()
        }
        (RunOut::Tensor(x), RunOut::Tensor(y)) => x.data() == y.data(),
        _ => false,
    }
}

fn execute<T: Scalar>(kind: &RunKind<T>, pool: &WorkerPool) -> Result<RunOut<T>> {
    Ok(match kind {
        RunKind::Single { x, w, lam, u, plan } => {
            RunOut::Scan(scan_forward(x, w, lam, u, plan, pool)?)
        }
        RunKind::AllDirs { x, set, plan } => {
            RunOut::Tensor(scan_all_directions(x, set, plan, MergeMode::Sum, pool)?)
        }
        RunKind::Proxy { x, set, plan } => RunOut::Tensor(scan_all_directions_proxy(
            x,
            set,
            plan,
            MergeMode::Sum,
            pool,
        )?),
    })
}

/// Weight mode used by the harness for a stage: the ladder runs S0..S4 with
/// per-channel weights and S5 with shared weights (its compact form). Proxy
/// runs are always shared.
pub fn harness_weight_mode(stage: Stage, proxied: bool) -> WeightMode {
    if proxied || stage == Stage::S5Compact {
        WeightMode::Shared
    } else {
        WeightMode::PerChannel
    }
}

fn sub_rng(req: &StageRequest) -> SeedRng {
    // Stage is deliberately excluded so every rung of the ladder sees the
    // same inputs for a given (dims, direction, kchunk) point.
    let [n, c, h, w] = req.dims;
    let dir_code = match req.direction {
        DirectionSpec::One(d) => d.index() as u64,
        DirectionSpec::All => 4,
    };
    let mut tag = 0u64;
    for v in [
        n as u64,
        c as u64,
        h as u64,
        w as u64,
        dir_code,
        req.kchunk as u64,
    ] {
        tag = tag
            .wrapping_mul(0x100_0000_01b3)
            .wrapping_add(v.wrapping_add(0x9e37_79b9));
    }
    SeedRng::new(req.seed).derive(tag)
}

fn build_instance<T: Scalar>(req: &StageRequest) -> Result<RunKind<T>> {
    let [n, c, h, w] = req.dims;
    let mut rng = sub_rng(req);
    let tensor = |rng: &mut SeedRng, channels: usize| {
        Tensor4::<T>::new(
            n,
            channels,
            h,
            w,
            Fill::Uniform {
                rng,
                lo: -1.0,
                hi: 1.0,
            },
        )
    };

    let proxied = req.c_proxy.is_some();
    let mode = harness_weight_mode(req.stage, proxied);
    let weight_channels = match mode {
        WeightMode::PerChannel => c,
        WeightMode::Shared => 1,
    };
    let weights_for = |d: Direction, rng: &mut SeedRng| {
        let dims = BandDims::new(d.scan_len(h, w), n, weight_channels, d.par_len(h, w));
        let logits = RawBandLogits::from_rng(dims, rng, -1.0, 1.0);
        normalize_bands(&logits)
    };

    let plan_template = ScanPlan::<T>::new(Direction::TopToBottom)
        .with_weight_mode(mode)
        .with_stage(req.stage)
        .with_kchunk(req.kchunk)
        .with_c_slice(req.c_slice);

    if let Some(cp) = req.c_proxy {
        // Proxy compression always runs the four-direction merged operator in
        // the compressed channel space.
        let x = tensor(&mut rng, c)?;
        let mut gate_rng = rng.derive(1);
        let set = DirectionSet::build(|d| {
            Ok(DirectionParams {
                weights: weights_for(d, &mut gate_rng)?,
                lambda: tensor(&mut gate_rng, cp)?,
                u: tensor(&mut gate_rng, cp)?,
            })
        })?;
        let proxy = ProxySpec::seeded(c, Some(cp), &mut rng.derive(2))?;
        return Ok(RunKind::Proxy {
            x,
            set,
            plan: plan_template.with_proxy(proxy),
        });
    }

    match req.direction {
        DirectionSpec::All => {
            let x = tensor(&mut rng, c)?;
            let mut gate_rng = rng.derive(1);
            let set = DirectionSet::build(|d| {
                Ok(DirectionParams {
                    weights: weights_for(d, &mut gate_rng)?,
                    lambda: tensor(&mut gate_rng, c)?,
                    u: tensor(&mut gate_rng, c)?,
                })
            })?;
            Ok(RunKind::AllDirs {
                x,
                set,
                plan: plan_template,
            })
        }
        DirectionSpec::One(d) => {
            let x = tensor(&mut rng, c)?;
            let lam = tensor(&mut rng, c)?;
            let u = tensor(&mut rng, c)?;
            let w = weights_for(d, &mut rng)?;
            let plan = plan_template.with_direction(d);
            // Contiguous-layout stages get their inputs pre-transposed, so
            // the measurement isolates the kernel itself; the one-time
            // conversion is part of setup, as it would be in a pipeline that
            // keeps activations in scan order.
            if req.stage >= Stage::S2Contiguous {
                Ok(RunKind::Single {
                    x: x.to_scan_layout(d)?,
                    lam: lam.to_scan_layout(d)?,
                    u: u.to_scan_layout(d)?,
                    w,
                    plan,
                })
            } else {
                Ok(RunKind::Single { x, w, lam, u, plan })
            }
        }
    }
}

/// Walk a large scratch buffer so every timed run starts from the same cold
/// cache state. Without this, a sweep point whose working set fits the
/// last-level cache gets timed partially resident across repeats while a
/// larger point streams from memory, and cross-size comparisons (the
/// scan-length scaling trend in particular) measure the cache boundary
/// instead of the kernel. The buffer is allocated once per process.
fn scrub_caches() {
    use std::sync::OnceLock;
    static SCRATCH: OnceLock<Vec<u64>> = OnceLock::new();
    const SCRUB_BYTES: usize = 768 << 20;
    let buf = SCRATCH.get_or_init(|| vec![1u64; SCRUB_BYTES / 8]);
    let mut acc = 0u64;
    for &v in buf.iter() {
        acc = acc.wrapping_add(v);
    }
    std::hint::black_box(acc);
}

fn percentile_nearest_rank(sorted: &[u64], q: f64) -> u64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len() as f64;
    let rank = (q * n).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

fn median(sorted: &[u64]) -> u64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2
    }
}

/// Time one stage request. Runs `warmup` discarded iterations, then `repeats`
/// timed ones, checking every output against the first.
pub fn time_stage(req: &StageRequest) -> Result<Measurement> {
    match req.precision {
        Precision::F32 => time_stage_t::<f32>(req),
        Precision::F64 => time_stage_t::<f64>(req),
    }
}

fn time_stage_t<T: Scalar>(req: &StageRequest) -> Result<Measurement> {
    ensure!(req.repeats >= 5, "repeats must be >= 5");
    ensure!(req.warmup >= 2, "warmup must be >= 2");
    let kind = build_instance::<T>(req)?;
    let pool = WorkerPool::new(req.workers);
    let mut ns = match &kind {
        // Single-direction runs write into preallocated output buffers so the
        // timings capture the kernel, not first-touch page faults on tens of
        // megabytes of fresh allocation per run.
        RunKind::Single { x, w, lam, u, plan } => {
            let mut out = ScanOutput {
                y: Tensor4::zeros_like(x),
                hidden: Tensor4::zeros_like(x),
            };
            scan_forward_into(x, w, lam, u, plan, &pool, &mut out)?;
            let reference = out.clone();
            let check = |out: &ScanOutput<T>, run: &str| -> Result<()> {
                if out.y.data() != reference.y.data()
                    || out.hidden.data() != reference.hidden.data()
                {
                    bail!(
                        "stage output mismatch during {run} of {} {} {:?}",
                        req.stage,
                        req.direction,
                        req.dims
                    );
                }
                Ok(())
            };
            for _ in 1..req.warmup {
                scan_forward_into(x, w, lam, u, plan, &pool, &mut out)?;
                check(&out, "warmup")?;
            }
            let mut ns = Vec::with_capacity(req.repeats);
            for _ in 0..req.repeats {
                scrub_caches();
                let t0 = Instant::now();
                scan_forward_into(x, w, lam, u, plan, &pool, &mut out)?;
                let elapsed = t0.elapsed();
                check(&out, "a timed repeat")?;
                ns.push(elapsed.as_nanos() as u64);
            }
            ns
        }
        _ => {
            let reference = execute(&kind, &pool)?;
            for i in 1..req.warmup {
                let out = execute(&kind, &pool)?;
                if !outputs_equal(&reference, &out) {
                    bail!(
                        "stage output mismatch during warmup run {i} of {} {} {:?}",
                        req.stage,
                        req.direction,
                        req.dims
                    );
                }
            }
            let mut ns = Vec::with_capacity(req.repeats);
            for i in 0..req.repeats {
                scrub_caches();
                let t0 = Instant::now();
                let out = execute(&kind, &pool)?;
                let elapsed = t0.elapsed();
                if !outputs_equal(&reference, &out) {
                    bail!(
                        "stage output mismatch on repeat {i} of {} {} {:?}",
                        req.stage,
                        req.direction,
                        req.dims
                    );
                }
                ns.push(elapsed.as_nanos() as u64);
            }
            ns
        }
    };
    ns.sort_unstable();

    let median_ns = median(&ns);
    let bytes_est = bytes_moved_estimate(req);
    let throughput_bps = if median_ns == 0 {
        0.0
    } else {
        bytes_est as f64 / (median_ns as f64 / 1e9)
    };
    Ok(Measurement {
        stage: req.stage.token().to_string(),
        direction: req.direction.token().to_string(),
        n: req.dims[0],
        c: req.dims[1],
        h: req.dims[2],
        w: req.dims[3],
        precision: req.precision.token().to_string(),
        kchunk: req.kchunk,
        c_slice: req.c_slice,
        c_proxy: req.c_proxy.unwrap_or(0),
        workers: req.workers,
        repeats: req.repeats,
        median_ns,
        min_ns: ns[0],
        p90_ns: percentile_nearest_rank(&ns, 0.9),
        bytes_est,
        throughput_bps,
        seed: req.seed,
    })
}

/// Run the whole sweep in deterministic order, invoking `sink` after each
/// entry so partial results can be flushed incrementally. Aborted
/// measurements are recorded and the sweep continues.
pub fn run_sweep<F: FnMut(&SweepEntry)>(cfg: &BenchConfig, mut sink: F) -> Vec<SweepEntry> {
    let total = cfg.dims.len() * cfg.stages.len() * cfg.directions.len();
    let mut entries = Vec::with_capacity(total);
    let mut done = 0;
    for &dims in &cfg.dims {
        for &stage in &cfg.stages {
            for &direction in &cfg.directions {
                done += 1;
                let req = StageRequest::from_config(cfg, dims, stage, direction);
                eprintln!(
                    "[{done}/{total}] {} {} {}x{}x{}x{} {} ...",
                    stage.token(),
                    direction.token(),
                    dims[0],
                    dims[1],
                    dims[2],
                    dims[3],
                    cfg.precision.token()
                );
                let entry = match time_stage(&req) {
                    Ok(m) => {
                        eprintln!(
                            "    median {:.3} ms (min {:.3}, p90 {:.3})",
                            m.median_ns as f64 / 1e6,
                            m.min_ns as f64 / 1e6,
                            m.p90_ns as f64 / 1e6
                        );
                        SweepEntry::Ok(m)
                    }
                    Err(e) => {
                        eprintln!("    aborted: {e:#}");
                        SweepEntry::Failed {
                            stage: stage.token().to_string(),
                            direction: direction.token().to_string(),
                            dims,
                            error: format!("{e:#}"),
                        }
                    }
                };
                sink(&entry);
                entries.push(entry);
            }
        }
    }
    entries
}

/// Analytic bytes-moved model, counted from each stage's access pattern (not
/// a hardware counter). Per directional pass:
///
/// * the five tensor streams (`x`, `lambda`, `u` read; `y`, `h` written) move
///   one element per cell, multiplied by a cache-line amplification factor
///   when the canonical-layout stages (S0/S1) walk a strided parallel axis
///   (horizontal scans);
/// * weights contribute three reads per cell after the first step of each
///   segment; shared-weight tiled stages (S3+) read each step row once per
///   tile of `c_slice` channels instead of once per channel;
/// * S0 additionally re-reads the previous step's hidden row from the
///   history tensor (three neighbour loads per cell).
///
/// `ALL` sums the four passes plus the merge traffic; proxy runs add the
/// projection traffic and scan with `c_proxy` channels.
pub fn bytes_moved_estimate(req: &StageRequest) -> u64 {
    let elem = req.precision.elem_bytes();
    match (req.c_proxy, req.direction) {
        (Some(cp), _) => {
            let [n, c, h, w] = req.dims;
            let hw = (h * w) as u64;
            let e_full = n as u64 * c as u64 * hw;
            let e_proxy = n as u64 * cp as u64 * hw;
            // Projections read every (channel, proxy-channel) plane pair.
            let project = 2 * (n as u64 * c as u64 * cp as u64 * hw) + e_full + 2 * e_proxy;
            let scans: u64 = Direction::ALL
                .iter()
                .map(|&d| scan_pass_elems(req, [n, cp, h, w], d))
                .sum();
            let merge = 5 * e_proxy;
            (project + scans + merge) * elem
        }
        (None, DirectionSpec::All) => {
            let [n, c, h, w] = req.dims;
            let e = (n * c * h * w) as u64;
            let scans: u64 = Direction::ALL
                .iter()
                .map(|&d| scan_pass_elems(req, req.dims, d))
                .sum();
            (scans + 5 * e) * elem
        }
        (None, DirectionSpec::One(d)) => scan_pass_elems(req, req.dims, d) * elem,
    }
}

fn scan_pass_elems(req: &StageRequest, dims: [usize; 4], d: Direction) -> u64 {
    let [n, c, h, w] = dims;
    let l = d.scan_len(h, w) as u64;
    let p = d.par_len(h, w) as u64;
    let (n, c) = (n as u64, c as u64);
    let e = n * c * l * p;
    let segments = if req.kchunk == 0 || req.kchunk as u64 >= l {
        1
    } else {
        l.div_ceil(req.kchunk as u64)
    };
    let weighted_steps = l - segments;

    let line_elems = 64 / req.precision.elem_bytes();
    let strided = !d.is_vertical();
    let amp = if req.stage <= Stage::S1Fused && strided {
        (w as u64).min(line_elems)
    } else {
        1
    };

    let tensor_streams = 5 * e * amp;
    let shared = harness_weight_mode(req.stage, req.c_proxy.is_some()) == WeightMode::Shared;
    let weight_reads = if shared && req.stage >= Stage::S3TileReuse {
        let tiles = (c as usize).div_ceil(req.c_slice) as u64;
        3 * weighted_steps * p * n * tiles
    } else {
        3 * weighted_steps * p * n * c
    };
    let hidden_rereads = if req.stage == Stage::S0PerStep {
        3 * weighted_steps * p * n * c * amp
    } else {
        0
    };
    tensor_streams + weight_reads + hidden_rereads
}

/// Independent work slices of one directional pass: `segments x N x C`
/// (with `C` replaced by the proxy channel count when compression is on).
pub fn slice_count(
    dims: [usize; 4],
    scan_len: usize,
    kchunk: usize,
    c_proxy: Option<usize>,
) -> usize {
    let segments = if kchunk == 0 || kchunk >= scan_len {
        1
    } else {
        scan_len.div_ceil(kchunk)
    };
    segments * dims[0] * c_proxy.unwrap_or(dims[1])
}

/// Concurrency-saturation cost model: runtime is flat while the active slice
/// count fits within `capacity` concurrently resident slices, then grows by
/// one `t_wave` per additional full wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// Maximum concurrently resident slices.
    pub capacity: usize,
    /// Seconds per wave of slices.
    pub t_wave: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            capacity: 3456,
            t_wave: 1.0,
        }
    }
}

impl CostModel {
    /// Predicted seconds for `active_slices >= 1`:
    /// `t_wave * ceil(active_slices / capacity)`.
    pub fn predict_saturation(&self, active_slices: usize) -> f64 {
        debug_assert!(self.capacity >= 1 && self.t_wave > 0.0);
        self.t_wave * active_slices.div_ceil(self.capacity) as f64
    }
}

/// One row of the stage ladder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderRow {
    pub stage: String,
    pub median_ns: u64,
    /// Cumulative speedup relative to the first present stage.
    pub speedup_vs_first: f64,
    /// Speedup relative to the previous present stage.
    pub speedup_vs_prev: f64,
}

/// Build the stage ladder from measurements sharing one configuration point.
/// Rows come out ordered S0..S5; stages absent from the input are absent from
/// the ladder.
pub fn compare_stages(measurements: &[Measurement]) -> Result<Vec<LadderRow>> {
    if measurements.is_empty() {
        return Ok(Vec::new());
    }
    let key = |m: &Measurement| {
        (
            m.n,
            m.c,
            m.h,
            m.w,
            m.direction.clone(),
            m.precision.clone(),
            m.kchunk,
        )
    };
    let first = key(&measurements[0]);
    for m in measurements {
        ensure!(
            key(m) == first,
            "ladder requires measurements sharing dims/direction/precision; \
             got {} vs {}",
            m.stage,
            measurements[0].stage
        );
    }
    let mut sorted: Vec<&Measurement> = measurements.iter().collect();
    sorted.sort_by_key(|m| m.stage.clone());
    for pair in sorted.windows(2) {
        ensure!(
            pair[0].stage != pair[1].stage,
            "duplicate stage {} in ladder input",
            pair[0].stage
        );
    }
    let base = sorted[0].median_ns as f64;
    let mut prev = base;
    let mut rows = Vec::with_capacity(sorted.len());
    for m in sorted {
        let med = m.median_ns as f64;
        rows.push(LadderRow {
            stage: m.stage.clone(),
            median_ns: m.median_ns,
            speedup_vs_first: base / med,
            speedup_vs_prev: prev / med,
        });
        prev = med;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(stage: Stage, dir: DirectionSpec) -> StageRequest {
        StageRequest {
            stage,
            direction: dir,
            dims: [2, 4, 16, 16],
            precision: Precision::F32,
            repeats: 5,
            warmup: 2,
            kchunk: 0,
            c_slice: 2,
            c_proxy: None,
            seed: 42,
            workers: 2,
        }
    }

    #[test]
    fn order_statistics() {
        let sorted = [10, 20, 30, 40, 50];
        assert_eq!(median(&sorted), 30);
        assert_eq!(percentile_nearest_rank(&sorted, 0.9), 50);
        let even = [10, 20, 30, 40];
        assert_eq!(median(&even), 25);
    }

    #[test]
    fn measurement_ordering_invariant() {
        let m = time_stage(&req(
            Stage::S1Fused,
            DirectionSpec::One(Direction::LeftToRight),
        ))
        .unwrap();
        assert!(m.min_ns <= m.median_ns && m.median_ns <= m.p90_ns);
        assert_eq!(m.stage, "S1");
        assert_eq!(m.direction, "L2R");
    }

    #[test]
    fn bytes_estimate_is_deterministic_and_s2_below_s0() {
        for dir in [
            DirectionSpec::One(Direction::LeftToRight),
            DirectionSpec::One(Direction::TopToBottom),
        ] {
            let s0 = bytes_moved_estimate(&req(Stage::S0PerStep, dir));
            let s0_again = bytes_moved_estimate(&req(Stage::S0PerStep, dir));
            let s2 = bytes_moved_estimate(&req(Stage::S2Contiguous, dir));
            assert_eq!(s0, s0_again);
            assert!(s2 <= s0, "S2 estimate {s2} must not exceed S0 {s0}");
        }
    }

    #[test]
    fn same_seed_same_outputs_and_estimate() {
        let r = req(Stage::S1Fused, DirectionSpec::One(Direction::TopToBottom));
        let a = time_stage(&r).unwrap();
        let b = time_stage(&r).unwrap();
        assert_eq!(a.bytes_est, b.bytes_est);
        assert_eq!(a.seed, b.seed);
    }

    #[test]
    fn saturation_model_shape() {
        let m = CostModel {
            capacity: 100,
            t_wave: 0.5,
        };
        assert_eq!(m.predict_saturation(1), 0.5);
        assert_eq!(m.predict_saturation(100), 0.5);
        assert_eq!(m.predict_saturation(101), 1.0);
        assert_eq!(m.predict_saturation(200), 1.0);
        assert_eq!(m.predict_saturation(201), 1.5);
        assert_eq!(CostModel::default().capacity, 3456);
    }

    #[test]
    fn slice_counts() {
        assert_eq!(slice_count([4, 8, 32, 32], 32, 0, None), 32);
        assert_eq!(slice_count([4, 8, 32, 32], 32, 8, None), 4 * 4 * 8);
        assert_eq!(slice_count([4, 8, 32, 32], 32, 0, Some(2)), 8);
    }

    #[test]
    fn ladder_arithmetic() {
        let mk = |stage: &str, median_ns: u64| Measurement {
            stage: stage.into(),
            direction: "L2R".into(),
            n: 1,
            c: 1,
            h: 8,
            w: 8,
            precision: "f32".into(),
            kchunk: 0,
            c_slice: 1,
            c_proxy: 0,
            workers: 1,
            repeats: 5,
            median_ns,
            min_ns: median_ns,
            p90_ns: median_ns,
            bytes_est: 1,
            throughput_bps: 1.0,
            seed: 0,
        };
        let rows = compare_stages(&[
            mk("S0", 100_000_000),
            mk("S1", 50_000_000),
            mk("S2", 10_000_000),
        ])
        .unwrap();
        assert_eq!(rows.len(), 3);
        assert!((rows[0].speedup_vs_first - 1.0).abs() < 1e-12);
        assert!((rows[1].speedup_vs_first - 2.0).abs() < 1e-12);
        assert!((rows[2].speedup_vs_first - 10.0).abs() < 1e-12);
        assert!((rows[2].speedup_vs_prev - 5.0).abs() < 1e-12);

        let single = compare_stages(&[mk("S3", 777)]).unwrap();
        assert_eq!(single[0].speedup_vs_first, 1.0);

        assert!(compare_stages(&[mk("S0", 1), mk("S0", 2)]).is_err());
    }

    #[test]
    fn run_sweep_enumerates_in_order() {
        let mut cfg = BenchConfig::with_defaults();
        cfg.dims = vec![[1, 2, 8, 8], [1, 2, 12, 8]];
        cfg.stages = vec![Stage::S1Fused, Stage::S2Contiguous];
        cfg.precision = Precision::F64;
        cfg.seed = 7;
        let entries = run_sweep(&cfg, |_| {});
        assert_eq!(entries.len(), 4);
        let stages: Vec<&str> = entries
            .iter()
            .map(|e| e.measurement().unwrap().stage.as_str())
            .collect();
        assert_eq!(stages, ["S1", "S2", "S1", "S2"]);

        let empty = BenchConfig {
            stages: vec![],
            ..cfg
        };
        assert!(run_sweep(&empty, |_| {}).is_empty());
    }
}
