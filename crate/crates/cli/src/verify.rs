//! Seeded verification suites behind `linescan verify`.
//!
//! Each suite drives deterministic random instances through an independent
//! reference route and prints one line; output carries no timings, so a given
//! seed produces byte-identical text for every worker count. On failure the
//! first counterexample (seed, dims, configuration) and a reproduction
//! command line are printed and the process exits nonzero.
//!
//! Setting `LINESCAN_FAULT_INJECT=1` flips one propagation weight in the
//! first dense-oracle instance (scan side only). A healthy build must then
//! fail: this exists to prove the verifier can actually catch a broken
//! kernel.

use std::io::Write;

use linescan_core::{
    build_dense_operator, dense_apply, finite_diff_grad, linear_attention_reference,
    normalize_bands, normalize_bands_backward, scan_all_directions, scan_backward, scan_forward,
    scan_forward_checked, scan_order_slice, BandArray, BandDims, BandWeights, Direction,
    DirectionParams, DirectionSet, Fill, MergeMode, RawBandLogits, ScanPlan, SeedRng, Sequential,
    Stage, Tensor4, WeightMode,
};

use crate::bench::CostModel;
use crate::pool::WorkerPool;

pub const FAULT_ENV: &str = "LINESCAN_FAULT_INJECT";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    All,
    Oracle,
    Grad,
    Stages,
}

impl Scope {
    pub fn parse_token(s: &str) -> Option<Self> {
        match s {
            "all" => Some(Scope::All),
            "oracle" => Some(Scope::Oracle),
            "grad" => Some(Scope::Grad),
            "stages" => Some(Scope::Stages),
            _ => None,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Scope::All => "all",
            Scope::Oracle => "oracle",
            Scope::Grad => "grad",
            Scope::Stages => "stages",
        }
    }
}

struct Suite {
    name: &'static str,
    passed: bool,
    lines: Vec<String>,
}

impl Suite {
    fn pass(name: &'static str, detail: String) -> Self {
        Suite {
            name,
            passed: true,
            lines: vec![detail],
        }
    }

    fn fail(name: &'static str, lines: Vec<String>) -> Self {
        Suite {
            name,
            passed: false,
            lines,
        }
    }
}

fn fault_injection_enabled() -> bool {
    std::env::var(FAULT_ENV).map(|v| v == "1").unwrap_or(false)
}

fn random_tensor(n: usize, c: usize, h: usize, w: usize, rng: &mut SeedRng) -> Tensor4<f64> {
    Tensor4::new(
        n,
        c,
        h,
        w,
        Fill::Uniform {
            rng,
            lo: -1.0,
            hi: 1.0,
        },
    )
    .unwrap()
}

fn random_weights(l: usize, n: usize, cw: usize, p: usize, rng: &mut SeedRng) -> BandWeights<f64> {
    normalize_bands(&RawBandLogits::from_rng(
        BandDims::new(l, n, cw, p),
        rng,
        -1.5,
        1.5,
    ))
    .unwrap()
}

/// Scan vs the dense operator on seeded instances; includes the optional
/// fault-injection hook on instance 0.
fn suite_oracle_dense(seed: u64, pool: &WorkerPool) -> Suite {
    const NAME: &str = "oracle-dense";
    let mut worst = 0.0f64;
    for k in 0..48u64 {
        let mut rng = SeedRng::new(seed).derive(0xD0 + k);
        // Instance 0 has fixed dims so the fault hook always has an interior
        // position and a non-seed step to corrupt.
        let (n, c, h, w) = if k == 0 {
            (2, 2, 5, 4)
        } else {
            (
                rng.uniform_usize(1, 2),
                rng.uniform_usize(1, 3),
                rng.uniform_usize(1, 8),
                rng.uniform_usize(1, 8),
            )
        };
        let dir = Direction::ALL[(k % 4) as usize];
        let l = dir.scan_len(h, w);
        let kchunk = if k == 0 || k % 3 == 0 {
            0
        } else {
            l.div_ceil(2)
        };
        let per_channel = k % 2 == 0;
        let (mode, cw) = if per_channel {
            (WeightMode::PerChannel, c)
        } else {
            (WeightMode::Shared, 1)
        };

        let x = random_tensor(n, c, h, w, &mut rng);
        let lam = random_tensor(n, c, h, w, &mut rng);
        let u = random_tensor(n, c, h, w, &mut rng);
        let weights = random_weights(l, n, cw, dir.par_len(h, w), &mut rng);

        let mut scan_weights = weights.clone();
        if k == 0 && fault_injection_enabled() {
            // Swap the left/right bands at one interior position of step 1;
            // row sums survive, the operator does not.
            let dims = scan_weights.dims();
            let base = dims.offset(1, 0, 0, 2);
            scan_weights.data_mut_unchecked().swap(base, base + 2);
        }

        let plan = ScanPlan::new(dir)
            .with_weight_mode(mode)
            .with_kchunk(kchunk);
        let out = scan_forward(&x, &scan_weights, &lam, &u, &plan, pool).unwrap();

        for bi in 0..n {
            for ci in 0..c {
                let wchan = if per_channel { ci } else { 0 };
                let lam_s = scan_order_slice(&lam, bi, ci, dir);
                let x_s = scan_order_slice(&x, bi, ci, dir);
                let u_s = scan_order_slice(&u, bi, ci, dir);
                let g = build_dense_operator(&weights, bi, wchan, &lam_s, kchunk).unwrap();
                let want = dense_apply(&g, &x_s, &u_s).unwrap();
                let got = scan_order_slice(&out.y, bi, ci, dir);
                let err = got
                    .iter()
                    .zip(&want)
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                if err > 1e-12 {
                    return Suite::fail(
                        NAME,
                        vec![
                            format!(
                                "counterexample: instance={k} dims={n}x{c}x{h}x{w} dir={dir} \
                                 kchunk={kchunk} mode={mode:?} max |scan - dense| = {err:.3e}"
                            ),
                            format!("reproduce: linescan verify --scope oracle --seed {seed}"),
                        ],
                    );
                }
                worst = worst.max(err);
            }
        }
    }
    Suite::pass(
        NAME,
        format!("48 instances, max |scan - dense| = {worst:.3e}"),
    )
}

/// Scan vs dense vs the explicit summation form on shared-weight
/// single-channel instances.
fn suite_oracle_summation(seed: u64, pool: &WorkerPool) -> Suite {
    const NAME: &str = "oracle-summation";
    let mut worst = 0.0f64;
    for k in 0..32u64 {
        let mut rng = SeedRng::new(seed).derive(0xA0 + k);
        let (n, h, w) = (
            rng.uniform_usize(1, 2),
            rng.uniform_usize(1, 6),
            rng.uniform_usize(1, 6),
        );
        let dir = Direction::ALL[(k % 4) as usize];
        let l = dir.scan_len(h, w);
        let x = random_tensor(n, 1, h, w, &mut rng);
        let lam = random_tensor(n, 1, h, w, &mut rng);
        let u = random_tensor(n, 1, h, w, &mut rng);
        let weights = random_weights(l, n, 1, dir.par_len(h, w), &mut rng);
        let plan = ScanPlan::new(dir).with_weight_mode(WeightMode::Shared);
        let out = scan_forward(&x, &weights, &lam, &u, &plan, pool).unwrap();
        for bi in 0..n {
            let x_s = scan_order_slice(&x, bi, 0, dir);
            let lam_s = scan_order_slice(&lam, bi, 0, dir);
            let u_s = scan_order_slice(&u, bi, 0, dir);
            let got = scan_order_slice(&out.y, bi, 0, dir);
            let g = build_dense_operator(&weights, bi, 0, &lam_s, 0).unwrap();
            let dense = dense_apply(&g, &x_s, &u_s).unwrap();
            let summed = linear_attention_reference(&weights, bi, 0, &x_s, &lam_s, &u_s).unwrap();
            let err = (0..got.len()).fold(0.0f64, |m, i| {
                m.max((got[i] - dense[i]).abs())
                    .max((got[i] - summed[i]).abs())
            });
            if err > 1e-10 {
                return Suite::fail(
                    NAME,
                    vec![
                        format!(
                            "counterexample: instance={k} dims={n}x1x{h}x{w} dir={dir} \
                             three-way error = {err:.3e}"
                        ),
                        format!("reproduce: linescan verify --scope oracle --seed {seed}"),
                    ],
                );
            }
            worst = worst.max(err);
        }
    }
    Suite::pass(
        NAME,
        format!("32 instances, max three-way error = {worst:.3e}"),
    )
}

/// Analytic gradients vs central finite differences of sum(y^2), one line per
/// shape.
fn suite_gradients(seed: u64, pool: &WorkerPool) -> Suite {
    const NAME: &str = "gradients";
    let mut lines = Vec::new();
    let mut idx = 0u64;
    for n in [1usize, 2] {
        for c in [1usize, 2] {
            for h in [1usize, 3] {
                for w in [2usize, 3] {
                    idx += 1;
                    let dir = Direction::ALL[(idx % 4) as usize];
                    let per_channel = idx % 2 == 0;
                    let l = dir.scan_len(h, w);
                    let kchunk = if idx % 3 == 0 { l.div_ceil(2) } else { 0 };
                    let (mode, cw) = if per_channel {
                        (WeightMode::PerChannel, c)
                    } else {
                        (WeightMode::Shared, 1)
                    };
                    let mut rng = SeedRng::new(seed).derive(0x6_000 + idx);
                    let x = random_tensor(n, c, h, w, &mut rng);
                    let lam = random_tensor(n, c, h, w, &mut rng);
                    let u = random_tensor(n, c, h, w, &mut rng);
                    let dims = BandDims::new(l, n, cw, dir.par_len(h, w));
                    let logits = RawBandLogits::from_rng(dims, &mut rng, -1.0, 1.0);
                    let plan = ScanPlan::new(dir)
                        .with_weight_mode(mode)
                        .with_kchunk(kchunk);
                    let err = max_grad_rel_error(&x, &lam, &u, &logits, &plan, pool);
                    lines.push(format!(
                        "grad {n}x{c}x{h}x{w} {dir} {}{} max rel err = {err:.3e}",
                        if per_channel { "per-channel" } else { "shared" },
                        if kchunk > 0 {
                            format!(" kchunk={kchunk}")
                        } else {
                            String::new()
                        },
                    ));
                    if err > 1e-6 {
                        lines.push(format!(
                            "reproduce: linescan verify --scope grad --seed {seed}"
                        ));
                        return Suite::fail(NAME, lines);
                    }
                }
            }
        }
    }
    lines.push("all shapes < 1e-6".to_string());
    Suite {
        name: NAME,
        passed: true,
        lines,
    }
}

/// Max relative error between analytic gradients (including logit gradients
/// through the normalization) and central finite differences.
pub fn max_grad_rel_error(
    x: &Tensor4<f64>,
    lam: &Tensor4<f64>,
    u: &Tensor4<f64>,
    logits: &RawBandLogits<f64>,
    plan: &ScanPlan<f64>,
    pool: &WorkerPool,
) -> f64 {
    let dims = logits.dims();
    let weights = normalize_bands(logits).unwrap();
    let out = scan_forward(x, &weights, lam, u, plan, pool).unwrap();
    let mut gy = Tensor4::zeros_like(&out.y);
    for (g, y) in gy.data_mut().iter_mut().zip(out.y.data()) {
        *g = 2.0 * y;
    }
    let grads = scan_backward(x, &weights, lam, u, &out, &gy, plan, pool).unwrap();
    let grad_logits = normalize_bands_backward(
        logits,
        &BandArray {
            dims,
            data: grads.weights.data.clone(),
        },
    )
    .unwrap();

    let (n, c, h, w) = x.dims();
    // The probe instances are tiny; dispatching them through the pool would
    // cost more in thread launches than the scans themselves.
    let loss =
        |xt: &Tensor4<f64>, lt: &Tensor4<f64>, ut: &Tensor4<f64>, lg: &RawBandLogits<f64>| {
            let wt = normalize_bands(lg).unwrap();
            let o = scan_forward(xt, &wt, lt, ut, plan, &Sequential).unwrap();
            o.y.data().iter().map(|v| v * v).sum::<f64>()
        };
    let rel = |analytic: &[f64], fd: &[f64]| {
        let scale = fd.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        analytic
            .iter()
            .zip(fd)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs() / scale))
    };

    let fd_x = finite_diff_grad(
        |v| {
            let t = Tensor4::from_vec(n, c, h, w, x.layout(), v.to_vec()).unwrap();
            loss(&t, lam, u, logits)
        },
        x.data(),
        1e-6,
    )
    .unwrap();
    let fd_lam = finite_diff_grad(
        |v| {
            let t = Tensor4::from_vec(n, c, h, w, lam.layout(), v.to_vec()).unwrap();
            loss(x, &t, u, logits)
        },
        lam.data(),
        1e-6,
    )
    .unwrap();
    let fd_u = finite_diff_grad(
        |v| {
            let t = Tensor4::from_vec(n, c, h, w, u.layout(), v.to_vec()).unwrap();
            loss(x, lam, &t, logits)
        },
        u.data(),
        1e-6,
    )
    .unwrap();
    let fd_logits = finite_diff_grad(
        |v| {
            let lg = RawBandLogits::new(dims, v.to_vec()).unwrap();
            loss(x, lam, u, &lg)
        },
        logits.data(),
        1e-6,
    )
    .unwrap();

    rel(grads.x.data(), &fd_x)
        .max(rel(grads.lambda.data(), &fd_lam))
        .max(rel(grads.u.data(), &fd_u))
        .max(rel(&grad_logits.data, &fd_logits))
}

/// All stages must agree on random configurations.
fn suite_stage_equivalence(seed: u64, pool: &WorkerPool) -> Suite {
    const NAME: &str = "stage-equivalence";
    let mut worst = 0.0f64;
    for k in 0..12u64 {
        let mut rng = SeedRng::new(seed).derive(0x57A6E + k);
        let (n, c, h, w) = (
            rng.uniform_usize(1, 2),
            rng.uniform_usize(1, 6),
            rng.uniform_usize(1, 10),
            rng.uniform_usize(1, 10),
        );
        let dir = Direction::ALL[(k % 4) as usize];
        let l = dir.scan_len(h, w);
        let kchunk = if k % 2 == 0 { 0 } else { (l / 2).max(1) };
        let c_slice = rng.uniform_usize(1, 3);
        let shared = k % 3 == 0;
        let (mode, cw) = if shared {
            (WeightMode::Shared, 1)
        } else {
            (WeightMode::PerChannel, c)
        };
        let x = random_tensor(n, c, h, w, &mut rng);
        let lam = random_tensor(n, c, h, w, &mut rng);
        let u = random_tensor(n, c, h, w, &mut rng);
        let weights = random_weights(l, n, cw, dir.par_len(h, w), &mut rng);
        let mut reference: Option<Tensor4<f64>> = None;
        for stage in Stage::ALL {
            if stage == Stage::S5Compact && !shared {
                continue;
            }
            let plan = ScanPlan::new(dir)
                .with_weight_mode(mode)
                .with_kchunk(kchunk)
                .with_c_slice(c_slice)
                .with_stage(stage);
            let out = scan_forward(&x, &weights, &lam, &u, &plan, pool).unwrap();
            match &reference {
                None => reference = Some(out.y),
                Some(want) => {
                    let err = want.max_abs_diff(&out.y);
                    if err > 1e-12 {
                        return Suite::fail(
                            NAME,
                            vec![
                                format!(
                                    "counterexample: instance={k} dims={n}x{c}x{h}x{w} dir={dir} \
                                     kchunk={kchunk} c_slice={c_slice} stage={stage}: \
                                     diff vs S0 = {err:.3e}"
                                ),
                                format!("reproduce: linescan verify --scope stages --seed {seed}"),
                            ],
                        );
                    }
                    worst = worst.max(err);
                }
            }
        }
    }
    Suite::pass(
        NAME,
        format!("12 instances x 6 stages, max cross-stage diff = {worst:.3e}"),
    )
}

/// Row sums of normalized bands over 10^4 random positions.
fn suite_row_stochastic(seed: u64) -> Suite {
    const NAME: &str = "row-stochastic";
    let dims = BandDims::new(10, 5, 5, 40);
    debug_assert_eq!(dims.len() / 3, 10_000);
    let mut rng = SeedRng::new(seed).derive(0x57);
    let w = normalize_bands(&RawBandLogits::<f64>::from_rng(dims, &mut rng, -30.0, 30.0)).unwrap();
    let mut worst = 0.0f64;
    for step in 0..dims.steps {
        for b in 0..dims.batch {
            for wc in 0..dims.weight_channels {
                for pos in 0..dims.positions {
                    let base = dims.offset(step, b, wc, pos);
                    let row = &w.data()[base..base + 3];
                    let bad_mask =
                        (pos == 0 && row[0] != 0.0) || (pos + 1 == dims.positions && row[2] != 0.0);
                    let sum: f64 = row.iter().sum();
                    let err = (sum - 1.0).abs();
                    if row.iter().any(|&v| v < 0.0) || bad_mask || err > 1e-12 {
                        return Suite::fail(
                            NAME,
                            vec![
                                format!(
                                    "counterexample: step={step} batch={b} wc={wc} pos={pos} \
                                     row={row:?} sum err {err:.3e}"
                                ),
                                format!("reproduce: linescan verify --scope all --seed {seed}"),
                            ],
                        );
                    }
                    worst = worst.max(err);
                }
            }
        }
    }
    Suite::pass(
        NAME,
        format!("10000 positions, max |row sum - 1| = {worst:.3e}"),
    )
}

/// Per-step hidden-state bound on 100 random instances.
fn suite_stability(seed: u64) -> Suite {
    const NAME: &str = "stability-bound";
    for k in 0..100u64 {
        let mut rng = SeedRng::new(seed).derive(0xB0_000 + k);
        let (n, c, h, w) = (
            rng.uniform_usize(1, 2),
            rng.uniform_usize(1, 2),
            rng.uniform_usize(1, 8),
            rng.uniform_usize(1, 8),
        );
        let dir = Direction::ALL[(k % 4) as usize];
        let l = dir.scan_len(h, w);
        let kchunk = if k % 2 == 0 { 0 } else { (l / 2).max(1) };
        let x = random_tensor(n, c, h, w, &mut rng);
        let lam = random_tensor(n, c, h, w, &mut rng);
        let u = random_tensor(n, c, h, w, &mut rng);
        let weights = random_weights(l, n, c, dir.par_len(h, w), &mut rng);
        let plan = ScanPlan::new(dir).with_kchunk(kchunk);
        if let Err(e) = scan_forward_checked(&x, &weights, &lam, &u, &plan) {
            return Suite::fail(
                NAME,
                vec![
                    format!("counterexample: instance={k} dims={n}x{c}x{h}x{w} dir={dir}: {e}"),
                    format!("reproduce: linescan verify --scope all --seed {seed}"),
                ],
            );
        }
    }
    Suite::pass(NAME, "100 instances, no violations".to_string())
}

/// Layout conversions must round-trip exactly.
fn suite_layout_roundtrip(seed: u64) -> Suite {
    const NAME: &str = "layout-roundtrip";
    for k in 0..50u64 {
        let mut rng = SeedRng::new(seed).derive(0x1A_000 + k);
        let (n, c, h, w) = (
            rng.uniform_usize(1, 3),
            rng.uniform_usize(1, 3),
            rng.uniform_usize(1, 8),
            rng.uniform_usize(1, 8),
        );
        let t = random_tensor(n, c, h, w, &mut rng);
        let dir = Direction::ALL[(k % 4) as usize];
        let back = t.to_scan_layout(dir).unwrap().from_scan_layout().unwrap();
        if back.data() != t.data() {
            return Suite::fail(
                NAME,
                vec![
                    format!("counterexample: instance={k} dims={n}x{c}x{h}x{w} dir={dir}"),
                    format!("reproduce: linescan verify --scope all --seed {seed}"),
                ],
            );
        }
    }
    Suite::pass(NAME, "50 instances, exact".to_string())
}

/// Segment-local scans must confine input perturbations to their segment.
fn suite_kchunk_locality(seed: u64, pool: &WorkerPool) -> Suite {
    const NAME: &str = "kchunk-locality";
    for k in 0..8u64 {
        let mut rng = SeedRng::new(seed).derive(0x10CA1 + k);
        let (n, c) = (rng.uniform_usize(1, 2), rng.uniform_usize(1, 2));
        let (h, w) = (8, rng.uniform_usize(2, 6));
        let dir = Direction::TopToBottom;
        let kchunk = 4;
        let x = random_tensor(n, c, h, w, &mut rng);
        let lam = random_tensor(n, c, h, w, &mut rng);
        let u = random_tensor(n, c, h, w, &mut rng);
        let weights = random_weights(h, n, c, w, &mut rng);
        let plan = ScanPlan::new(dir).with_kchunk(kchunk);
        let base = scan_forward(&x, &weights, &lam, &u, &plan, pool).unwrap();
        let mut x2 = x.clone();
        x2.set(0, 0, 1, 0, x.get(0, 0, 1, 0) + 5.0);
        let bumped = scan_forward(&x2, &weights, &lam, &u, &plan, pool).unwrap();
        for row in kchunk..h {
            for col in 0..w {
                for bi in 0..n {
                    for ci in 0..c {
                        if base.y.get(bi, ci, row, col) != bumped.y.get(bi, ci, row, col) {
                            return Suite::fail(
                                NAME,
                                vec![
                                    format!(
                                        "counterexample: instance={k} leak at ({bi},{ci},{row},{col})"
                                    ),
                                    format!(
                                        "reproduce: linescan verify --scope all --seed {seed}"
                                    ),
                                ],
                            );
                        }
                    }
                }
            }
        }
    }
    Suite::pass(
        NAME,
        "8 instances, perturbations stay in their segment".to_string(),
    )
}

/// Every output pixel must feel every input pixel after the four-direction
/// merge (strictly positive weights, unit gates). The influence is measured
/// by a central difference; the map is linear in x, so eps = 1 is exact.
fn suite_connectivity(seed: u64, pool: &WorkerPool) -> Suite {
    const NAME: &str = "dense-connectivity";
    let min_influence = min_pairwise_influence(5, 5, seed, pool);
    if min_influence > 1e-12 {
        Suite::pass(
            NAME,
            format!("5x5, all 625 pairs, min |dy/dx| = {min_influence:.3e}"),
        )
    } else {
        Suite::fail(
            NAME,
            vec![
                format!("counterexample: min |dy/dx| = {min_influence:.3e} <= 1e-12"),
                format!("reproduce: linescan verify --scope all --seed {seed}"),
            ],
        )
    }
}

/// Minimum `|dy[p]/dx[q]|` over all pixel pairs of an `h x w` single-channel
/// image under the four-direction merge with unit gates.
pub fn min_pairwise_influence(h: usize, w: usize, seed: u64, pool: &WorkerPool) -> f64 {
    let mut rng = SeedRng::new(seed).derive(0xC0);
    let ones = Tensor4::<f64>::new(1, 1, h, w, Fill::Constant(1.0)).unwrap();
    let set = DirectionSet::build(|d| {
        Ok(DirectionParams {
            weights: random_weights(d.scan_len(h, w), 1, 1, d.par_len(h, w), &mut rng),
            lambda: ones.clone(),
            u: ones.clone(),
        })
    })
    .unwrap();
    let x0 = random_tensor(1, 1, h, w, &mut rng);
    let plan = ScanPlan::new(Direction::TopToBottom).with_weight_mode(WeightMode::Shared);

    let mut min_influence = f64::INFINITY;
    for q in 0..h * w {
        let mut xp = x0.clone();
        xp.data_mut()[q] += 1.0;
        let mut xm = x0.clone();
        xm.data_mut()[q] -= 1.0;
        let yp = scan_all_directions(&xp, &set, &plan, MergeMode::Sum, pool).unwrap();
        let ym = scan_all_directions(&xm, &set, &plan, MergeMode::Sum, pool).unwrap();
        for p in 0..h * w {
            let infl = ((yp.data()[p] - ym.data()[p]) / 2.0).abs();
            min_influence = min_influence.min(infl);
        }
    }
    min_influence
}

/// Exact shape of the saturation cost model.
fn suite_saturation() -> Suite {
    const NAME: &str = "saturation-model";
    let model = CostModel::default();
    let cap = model.capacity;
    let ok = cap == 3456
        && model.predict_saturation(1) == model.t_wave
        && model.predict_saturation(cap) == model.t_wave
        && model.predict_saturation(cap + 1) == 2.0 * model.t_wave
        && model.predict_saturation(2 * cap) == 2.0 * model.t_wave
        && model.predict_saturation(2 * cap + 1) == 3.0 * model.t_wave;
    if ok {
        Suite::pass(
            NAME,
            format!("capacity {cap}, flat within a wave, exact jumps at multiples"),
        )
    } else {
        Suite::fail(NAME, vec!["cost model shape violated".to_string()])
    }
}

/// Run the suites selected by `scope`. Returns true when everything passed.
/// Output is deterministic for a given (scope, seed): no timings, no worker
/// dependence.
pub fn run_verify(
    scope: Scope,
    seed: u64,
    workers: usize,
    out: &mut dyn Write,
) -> std::io::Result<bool> {
    let pool = WorkerPool::new(workers);
    let mut suites: Vec<Suite> = Vec::new();
    if matches!(scope, Scope::All | Scope::Oracle) {
        suites.push(suite_oracle_dense(seed, &pool));
        suites.push(suite_oracle_summation(seed, &pool));
    }
    if matches!(scope, Scope::All | Scope::Grad) {
        suites.push(suite_gradients(seed, &pool));
    }
    if matches!(scope, Scope::All | Scope::Stages) {
        suites.push(suite_stage_equivalence(seed, &pool));
    }
    if scope == Scope::All {
        suites.push(suite_row_stochastic(seed));
        suites.push(suite_stability(seed));
        suites.push(suite_layout_roundtrip(seed));
        suites.push(suite_kchunk_locality(seed, &pool));
        suites.push(suite_connectivity(seed, &pool));
        suites.push(suite_saturation());
    }

    let mut all_passed = true;
    for s in &suites {
        if s.passed {
            writeln!(out, "suite {}: {} ... PASS", s.name, s.lines[0])?;
            for extra in &s.lines[1..] {
                writeln!(out, "  {extra}")?;
            }
        } else {
            all_passed = false;
            writeln!(out, "suite {}: FAIL", s.name)?;
            for line in &s.lines {
                writeln!(out, "  {line}")?;
            }
        }
    }
    writeln!(
        out,
        "verify {}: {} ({} suites)",
        scope.token(),
        if all_passed { "PASS" } else { "FAIL" },
        suites.len()
    )?;
    Ok(all_passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_scope_passes_and_is_deterministic() {
        let run = || {
            let mut buf = Vec::new();
            let ok = run_verify(Scope::All, 11, 2, &mut buf).unwrap();
            (ok, String::from_utf8(buf).unwrap())
        };
        let (ok_a, text_a) = run();
        assert!(ok_a, "verify failed:\n{text_a}");
        let (ok_b, text_b) = run();
        assert!(ok_b);
        assert_eq!(text_a, text_b);
        assert!(text_a.contains("suite oracle-dense"));
        assert!(text_a.contains("verify all: PASS"));
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let run_with = |workers: usize| {
            let mut buf = Vec::new();
            let ok = run_verify(Scope::Stages, 3, workers, &mut buf).unwrap();
            assert!(ok);
            String::from_utf8(buf).unwrap()
        };
        let one = run_with(1);
        let two = run_with(2);
        let eight = run_with(8);
        assert_eq!(one, two);
        assert_eq!(one, eight);
    }
}
