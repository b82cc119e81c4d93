//! Outputs and gradients must be bit-identical for every worker count: work
//! items own disjoint output regions and all accumulation happens in a fixed
//! order inside each item.

use linescan::pool::WorkerPool;
use linescan_core::{
    normalize_bands, scan_backward, scan_forward, BandDims, Direction, Fill, RawBandLogits,
    ScanPlan, SeedRng, Stage, Tensor4, WeightMode,
};

fn instance(
    seed: u64,
    (n, c, h, w): (usize, usize, usize, usize),
    dir: Direction,
    cw: usize,
) -> (
    Tensor4<f64>,
    linescan_core::BandWeights<f64>,
    Tensor4<f64>,
    Tensor4<f64>,
) {
    let mut rng = SeedRng::new(seed);
    let t = |rng: &mut SeedRng| {
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
    };
    let x = t(&mut rng);
    let lam = t(&mut rng);
    let u = t(&mut rng);
    let dims = BandDims::new(dir.scan_len(h, w), n, cw, dir.par_len(h, w));
    let weights = normalize_bands(&RawBandLogits::from_rng(dims, &mut rng, -1.0, 1.0)).unwrap();
    (x, weights, lam, u)
}

#[test]
fn forward_and_backward_bit_identical_across_worker_counts() {
    let dims = (3, 5, 24, 17);
    let configs = [
        (
            Direction::LeftToRight,
            WeightMode::PerChannel,
            Stage::S2Contiguous,
            0,
        ),
        (
            Direction::TopToBottom,
            WeightMode::PerChannel,
            Stage::S0PerStep,
            5,
        ),
        (
            Direction::BottomToTop,
            WeightMode::Shared,
            Stage::S5Compact,
            0,
        ),
        (
            Direction::RightToLeft,
            WeightMode::PerChannel,
            Stage::S4ChannelBlocked,
            7,
        ),
    ];
    for (dir, mode, stage, kchunk) in configs {
        let cw = match mode {
            WeightMode::PerChannel => dims.1,
            WeightMode::Shared => 1,
        };
        let (x, w, lam, u) = instance(71, dims, dir, cw);
        let plan = ScanPlan::new(dir)
            .with_weight_mode(mode)
            .with_stage(stage)
            .with_kchunk(kchunk)
            .with_c_slice(2);

        let mut reference = None;
        for workers in [1usize, 2, 8] {
            let pool = WorkerPool::new(workers);
            let out = scan_forward(&x, &w, &lam, &u, &plan, &pool).unwrap();
            let mut gy = Tensor4::zeros_like(&out.y);
            for (g, y) in gy.data_mut().iter_mut().zip(out.y.data()) {
                *g = 2.0 * y;
            }
            let grads = scan_backward(&x, &w, &lam, &u, &out, &gy, &plan, &pool).unwrap();
            let snapshot = (
                out.y.data().to_vec(),
                out.hidden.data().to_vec(),
                grads.x.data().to_vec(),
                grads.lambda.data().to_vec(),
                grads.u.data().to_vec(),
                grads.weights.data,
            );
            match &reference {
                None => reference = Some(snapshot),
                Some(want) => {
                    assert!(
                        *want == snapshot,
                        "bitwise mismatch at workers={workers} for {dir} {stage} {mode:?}"
                    );
                }
            }
        }
    }
}
