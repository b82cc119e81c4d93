//! Brute-force reference operators.
//!
//! These are the truth source for the engine's equivalence tests: an explicit
//! dense global operator assembled from the band weights, an explicit
//! summation form with no hidden-state recurrence, and central finite
//! differences. Everything here is `f64`, materializes full `P x P` step
//! matrices, and favors obviousness over speed; a guardrail keeps instances
//! small. Engine outputs in `f32` are compared after widening.

use alloc::vec;
use alloc::vec::Vec;

use crate::bands::BandWeights;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Direction, Tensor4};

/// Maximum `steps * positions` accepted by the reference operators.
pub const DENSE_GUARDRAIL: usize = 4096;

/// The explicit global operator `G` of one (batch, channel) slice, mapping
/// the stacked input `[steps * positions]` to the stacked hidden state.
///
/// `G` is block lower triangular: block `(i, j)` is zero for `j > i`,
/// `Diag(lambda_j)` on the diagonal, and
/// `(M_i * ... * M_{j+1}) * Diag(lambda_j)` below it, where `M_s` is the
/// tridiagonal step matrix built from the band weights of step `s`. A
/// `kchunk` segmentation zeroes every block that crosses a segment boundary.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    steps: usize,
    positions: usize,
    /// Row-major `(steps * positions)^2`.
    data: Vec<f64>,
}

impl DenseOperator {
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn positions(&self) -> usize {
        self.positions
    }

    pub fn dim(&self) -> usize {
        self.steps * self.positions
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim() + col]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

fn segment_of(step: usize, kchunk: usize) -> usize {
    if kchunk == 0 {
        0
    } else {
        step / kchunk
    }
}

/// `P x P` step matrix for scan step `s` of one (batch, weight-channel) lane:
/// `M[r][r + b] = w[s, batch, wchan, r, b]`.
fn step_matrix<T: Scalar>(w: &BandWeights<T>, s: usize, batch: usize, wchan: usize) -> Vec<f64> {
    let d = w.dims();
    let p = d.positions;
    let mut m = vec![0.0f64; p * p];
    for r in 0..p {
        let base = d.offset(s, batch, wchan, r);
        if r > 0 {
            m[r * p + r - 1] = w.data()[base].to_f64();
        }
        m[r * p + r] = w.data()[base + 1].to_f64();
        if r + 1 < p {
            m[r * p + r + 1] = w.data()[base + 2].to_f64();
        }
    }
    m
}

fn matmul(a: &[f64], b: &[f64], p: usize) -> Vec<f64> {
    let mut out = vec![0.0f64; p * p];
    for i in 0..p {
        for k in 0..p {
            let aik = a[i * p + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..p {
                out[i * p + j] += aik * b[k * p + j];
            }
        }
    }
    out
}

/// Assemble the dense operator for one (batch, weight-channel) lane.
/// `lambda` is that lane's gate values in scan order, length
/// `steps * positions`.
pub fn build_dense_operator<T: Scalar>(
    w: &BandWeights<T>,
    batch: usize,
    wchan: usize,
    lambda: &[f64],
    kchunk: usize,
) -> Result<DenseOperator> {
    let d = w.dims();
    let (l, p) = (d.steps, d.positions);
    let dim = l * p;
    if dim > DENSE_GUARDRAIL {
        return Err(Error::SizeGuardrail {
            size: dim,
            limit: DENSE_GUARDRAIL,
        });
    }
    if lambda.len() != dim {
        return Err(Error::BandShapeMismatch {
            what: "lambda slice must have steps * positions entries",
        });
    }
    let mut g = vec![0.0f64; dim * dim];
    for j in 0..l {
        // Running product (M_i ... M_{j+1}) Diag(lambda_j), extended one step
        // at a time.
        let mut block = vec![0.0f64; p * p];
        for r in 0..p {
            block[r * p + r] = lambda[j * p + r];
        }
        write_block(&mut g, dim, p, j, j, &block);
        for i in j + 1..l {
            if segment_of(i, kchunk) != segment_of(j, kchunk) {
                break;
            }
            let m = step_matrix(w, i, batch, wchan);
            block = matmul(&m, &block, p);
            write_block(&mut g, dim, p, i, j, &block);
        }
    }
    Ok(DenseOperator {
        steps: l,
        positions: p,
        data: g,
    })
}

fn write_block(g: &mut [f64], dim: usize, p: usize, bi: usize, bj: usize, block: &[f64]) {
    for r in 0..p {
        let row = bi * p + r;
        g[row * dim + bj * p..row * dim + bj * p + p].copy_from_slice(&block[r * p..(r + 1) * p]);
    }
}

/// Apply the dense operator and the output gate: `y = u .* (G x)`, with `x`
/// and `u` in scan order.
pub fn dense_apply(g: &DenseOperator, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    let dim = g.dim();
    if x.len() != dim || u.len() != dim {
        return Err(Error::BandShapeMismatch {
            what: "dense_apply vectors must have steps * positions entries",
        });
    }
    let mut y = vec![0.0f64; dim];
    for row in 0..dim {
        let mut acc = 0.0f64;
        let grow = &g.data[row * dim..(row + 1) * dim];
        for (col, &xv) in x.iter().enumerate() {
            acc += grow[col] * xv;
        }
        y[row] = u[row] * acc;
    }
    Ok(y)
}

/// Explicit summation form of the scan, evaluated with no recurrence:
///
/// ```text
/// y[i] = u[i] .* sum_{j <= i} (M_i ... M_{j+1}) Diag(lambda[j]) x[j]
/// ```
///
/// The `j == i` term is the bare `Diag(lambda[i]) x[i]`. Global scan only
/// (no segmentation); single-channel or shared-weight lanes.
pub fn linear_attention_reference<T: Scalar>(
    w: &BandWeights<T>,
    batch: usize,
    wchan: usize,
    x: &[f64],
    lambda: &[f64],
    u: &[f64],
) -> Result<Vec<f64>> {
    let d = w.dims();
    let (l, p) = (d.steps, d.positions);
    let dim = l * p;
    if dim > DENSE_GUARDRAIL {
        return Err(Error::SizeGuardrail {
            size: dim,
            limit: DENSE_GUARDRAIL,
        });
    }
    if x.len() != dim || lambda.len() != dim || u.len() != dim {
        return Err(Error::BandShapeMismatch {
            what: "linear_attention_reference vectors must have steps * positions entries",
        });
    }
    let mut y = vec![0.0f64; dim];
    for i in 0..l {
        let mut acc = vec![0.0f64; p];
        for j in 0..=i {
            let mut v: Vec<f64> = (0..p).map(|r| lambda[j * p + r] * x[j * p + r]).collect();
            for tau in j + 1..=i {
                v = band_matvec(w, tau, batch, wchan, &v);
            }
            for r in 0..p {
                acc[r] += v[r];
            }
        }
        for r in 0..p {
            y[i * p + r] = u[i * p + r] * acc[r];
        }
    }
    Ok(y)
}

fn band_matvec<T: Scalar>(
    w: &BandWeights<T>,
    s: usize,
    batch: usize,
    wchan: usize,
    v: &[f64],
) -> Vec<f64> {
    let d = w.dims();
    let p = d.positions;
    let mut out = vec![0.0f64; p];
    for r in 0..p {
        let base = d.offset(s, batch, wchan, r);
        let mut acc = 0.0f64;
        if r > 0 {
            acc += w.data()[base].to_f64() * v[r - 1];
        }
        acc += w.data()[base + 1].to_f64() * v[r];
        if r + 1 < p {
            acc += w.data()[base + 2].to_f64() * v[r + 1];
        }
        out[r] = acc;
    }
    out
}

/// Central finite differences of a scalar function:
/// `g[k] = (f(x + eps e_k) - f(x - eps e_k)) / (2 eps)`.
pub fn finite_diff_grad<F>(mut f: F, at: &[f64], eps: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(eps > 0.0) {
        return Err(Error::PlanInvalid(
            "finite difference eps must be > 0".into(),
        ));
    }
    let mut buf = at.to_vec();
    let mut grad = vec![0.0f64; at.len()];
    for k in 0..at.len() {
        let orig = at[k];
        buf[k] = orig + eps;
        let fp = f(&buf);
        buf[k] = orig - eps;
        let fm = f(&buf);
        buf[k] = orig;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::NonFiniteObjective);
        }
        grad[k] = (fp - fm) / (2.0 * eps);
    }
    Ok(grad)
}

/// Extract one (batch, channel) slice of a tensor in scan order for
/// direction `d`, widened to `f64`: entry `step * P + pos`.
pub fn scan_order_slice<T: Scalar>(t: &Tensor4<T>, n: usize, c: usize, d: Direction) -> Vec<f64> {
    let (_, _, h, w) = t.dims();
    let l = d.scan_len(h, w);
    let p = d.par_len(h, w);
    let mut out = Vec::with_capacity(l * p);
    for step in 0..l {
        for pos in 0..p {
            let (row, col) = d.coords(step, pos, h, w);
            out.push(t.get(n, c, row, col).to_f64());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bands::{normalize_bands, BandDims, RawBandLogits};
    use crate::rng::SeedRng;

    fn random_weights(l: usize, p: usize, seed: u64) -> BandWeights<f64> {
        let dims = BandDims::new(l, 1, 1, p);
        let mut rng = SeedRng::new(seed);
        normalize_bands(&RawBandLogits::from_rng(dims, &mut rng, -1.0, 1.0)).unwrap()
    }

    #[test]
    fn single_step_operator_is_diagonal_gate() {
        let w = random_weights(1, 3, 1);
        let lambda = [0.5, -1.0, 2.0];
        let g = build_dense_operator(&w, 0, 0, &lambda, 0).unwrap();
        for r in 0..3 {
            for q in 0..3 {
                let want = if r == q { lambda[r] } else { 0.0 };
                assert_eq!(g.get(r, q), want);
            }
        }
    }

    #[test]
    fn zero_gate_zero_operator() {
        let w = random_weights(3, 2, 2);
        let g = build_dense_operator(&w, 0, 0, &[0.0; 6], 0).unwrap();
        assert!(g.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn block_products_match_independent_multiplication() {
        let w = random_weights(3, 2, 3);
        let mut rng = SeedRng::new(4);
        let lambda: Vec<f64> = (0..6).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let g = build_dense_operator(&w, 0, 0, &lambda, 0).unwrap();

        let m1 = step_matrix(&w, 1, 0, 0);
        let m2 = step_matrix(&w, 2, 0, 0);
        let mut d0 = vec![0.0; 4];
        d0[0] = lambda[0];
        d0[3] = lambda[1];
        let expect = matmul(&m2, &matmul(&m1, &d0, 2), 2);
        for r in 0..2 {
            for q in 0..2 {
                let got = g.get(2 * 2 + r, q);
                assert!((got - expect[r * 2 + q]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn strictly_block_lower_triangular() {
        let w = random_weights(4, 3, 5);
        let mut rng = SeedRng::new(6);
        let lambda: Vec<f64> = (0..12).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let g = build_dense_operator(&w, 0, 0, &lambda, 0).unwrap();
        for bi in 0..4 {
            for bj in bi + 1..4 {
                for r in 0..3 {
                    for q in 0..3 {
                        assert_eq!(g.get(bi * 3 + r, bj * 3 + q), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn kchunk_zeroes_cross_segment_blocks() {
        let w = random_weights(4, 2, 7);
        let g = build_dense_operator(&w, 0, 0, &[1.0; 8], 2).unwrap();
        // Blocks (2,0), (2,1), (3,0), (3,1) cross the segment boundary.
        for bi in 2..4 {
            for bj in 0..2 {
                for r in 0..2 {
                    for q in 0..2 {
                        assert_eq!(g.get(bi * 2 + r, bj * 2 + q), 0.0);
                    }
                }
            }
        }
        // Block (3,2) does not.
        let m3 = step_matrix(&w, 3, 0, 0);
        assert!((g.get(3 * 2, 2 * 2) - m3[0]).abs() < 1e-15);
    }

    #[test]
    fn block_rows_stay_stochastic_under_unit_gate() {
        let w = random_weights(4, 3, 8);
        let g = build_dense_operator(&w, 0, 0, &[1.0; 12], 0).unwrap();
        for bi in 0..4 {
            for bj in 0..=bi {
                for r in 0..3 {
                    let sum: f64 = (0..3).map(|q| g.get(bi * 3 + r, bj * 3 + q)).sum();
                    assert!(
                        (sum - 1.0).abs() < 1e-12,
                        "block ({bi},{bj}) row {r}: {sum}"
                    );
                    for q in 0..3 {
                        assert!(g.get(bi * 3 + r, bj * 3 + q) >= 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn dense_apply_trivials() {
        let w = random_weights(1, 2, 9);
        let lambda = [2.0, 3.0];
        let g = build_dense_operator(&w, 0, 0, &lambda, 0).unwrap();
        assert_eq!(
            dense_apply(&g, &[0.0, 0.0], &[1.0, 1.0]).unwrap(),
            vec![0.0, 0.0]
        );
        let y = dense_apply(&g, &[1.0, -1.0], &[4.0, 5.0]).unwrap();
        assert_eq!(y, vec![4.0 * 2.0, 5.0 * 3.0 * -1.0]);
    }

    #[test]
    fn linear_attention_single_source_term() {
        let w = random_weights(3, 2, 10);
        // Gate nonzero only at step 0: y_i = u .* (M_i ... M_1) Diag(l_0) x_0.
        let mut lambda = vec![0.0; 6];
        lambda[0] = 0.7;
        lambda[1] = -0.3;
        let x = [1.0, 2.0, 9.0, 9.0, 9.0, 9.0];
        let u = [1.0; 6];
        let y = linear_attention_reference(&w, 0, 0, &x, &lambda, &u).unwrap();
        let mut v = vec![lambda[0] * x[0], lambda[1] * x[1]];
        assert!((y[0] - v[0]).abs() < 1e-15 && (y[1] - v[1]).abs() < 1e-15);
        for i in 1..3 {
            v = band_matvec(&w, i, 0, 0, &v);
            for r in 0..2 {
                assert!((y[i * 2 + r] - v[r]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn linear_attention_single_step() {
        let w = random_weights(1, 2, 11);
        let y =
            linear_attention_reference(&w, 0, 0, &[2.0, 4.0], &[0.5, 0.25], &[3.0, 1.0]).unwrap();
        assert_eq!(y, vec![3.0, 1.0]);
    }

    #[test]
    fn finite_diff_constant_and_quadratic() {
        let zero = finite_diff_grad(|_| 7.5, &[1.0, 2.0, 3.0], 1e-6).unwrap();
        assert!(zero.iter().all(|&v| v.abs() < 1e-9));

        let at: Vec<f64> = vec![0.3, -1.2, 2.5, 0.0];
        let g =
            finite_diff_grad(|x| 0.5 * x.iter().map(|v| v * v).sum::<f64>(), &at, 1e-6).unwrap();
        for (a, b) in g.iter().zip(&at) {
            assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn finite_diff_rejects_non_finite() {
        let err = finite_diff_grad(|_| f64::NAN, &[1.0], 1e-6);
        assert_eq!(err, Err(Error::NonFiniteObjective));
    }

    #[test]
    fn guardrail_enforced() {
        let w = random_weights(65, 64, 12);
        let lambda = vec![1.0; 65 * 64];
        assert!(matches!(
            build_dense_operator(&w, 0, 0, &lambda, 0),
            Err(Error::SizeGuardrail { .. })
        ));
    }
}
