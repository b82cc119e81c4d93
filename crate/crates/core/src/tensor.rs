use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::SeedRng;
use crate::scalar::Scalar;

/// Index-space cap per tensor: 2^31 elements.
pub const MAX_TENSOR_ELEMS: usize = 1 << 31;

/// One of the four directional passes. Vertical passes scan over rows and run
/// in parallel along columns; horizontal passes scan over columns and run in
/// parallel along rows. Reverse variants walk the scan axis backwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    TopToBottom,
    BottomToTop,
    LeftToRight,
    RightToLeft,
}

impl Direction {
    /// Fixed enumeration order; also the deterministic merge order.
    pub const ALL: [Direction; 4] = [
        Direction::TopToBottom,
        Direction::BottomToTop,
        Direction::LeftToRight,
        Direction::RightToLeft,
    ];

    pub fn index(self) -> usize {
        match self {
            Direction::TopToBottom => 0,
            Direction::BottomToTop => 1,
            Direction::LeftToRight => 2,
            Direction::RightToLeft => 3,
        }
    }

    pub fn is_vertical(self) -> bool {
        matches!(self, Direction::TopToBottom | Direction::BottomToTop)
    }

    pub fn is_reverse(self) -> bool {
        matches!(self, Direction::BottomToTop | Direction::RightToLeft)
    }

    /// Length of the sequential scan axis.
    pub fn scan_len(self, h: usize, w: usize) -> usize {
        if self.is_vertical() {
            h
        } else {
            w
        }
    }

    /// Length of the parallel axis (positions computed per step).
    pub fn par_len(self, h: usize, w: usize) -> usize {
        if self.is_vertical() {
            w
        } else {
            h
        }
    }

    /// Map (step, position) in scan order to logical (row, col).
    #[inline]
    pub fn coords(self, step: usize, pos: usize, h: usize, w: usize) -> (usize, usize) {
        match self {
            Direction::TopToBottom => (step, pos),
            Direction::BottomToTop => (h - 1 - step, pos),
            Direction::LeftToRight => (pos, step),
            Direction::RightToLeft => (pos, w - 1 - step),
        }
    }

    /// Short token used by the CLI and report formats.
    pub fn token(self) -> &'static str {
        match self {
            Direction::TopToBottom => "T2B",
            Direction::BottomToTop => "B2T",
            Direction::LeftToRight => "L2R",
            Direction::RightToLeft => "R2L",
        }
    }

    pub fn parse_token(s: &str) -> Option<Direction> {
        match s {
            "T2B" | "t2b" | "TopToBottom" => Some(Direction::TopToBottom),
            "B2T" | "b2t" | "BottomToTop" => Some(Direction::BottomToTop),
            "L2R" | "l2r" | "LeftToRight" => Some(Direction::LeftToRight),
            "R2L" | "r2l" | "RightToLeft" => Some(Direction::RightToLeft),
            _ => None,
        }
    }
}

impl core::fmt::Display for Direction {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.token())
    }
}

/// Physical element order of a [`Tensor4`].
///
/// `Canonical` is row-major `(n, c, row, col)`. `ScanMajor(d)` orders elements
/// for direction `d` so that the scan step is outermost and the parallel axis
/// is innermost and unit-stride:
///
/// ```text
/// offset(step, n, c, pos) = ((step * N + n) * C + c) * P + pos
/// ```
///
/// For `LeftToRight` this is `offset(n, c, i, j) = ((j*N + n)*C + c)*H + i`;
/// vertical directions swap the roles of `i` and `j`, and reverse directions
/// additionally flip the scan-axis order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Canonical,
    ScanMajor(Direction),
}

/// Fill rule for [`Tensor4::new`].
pub enum Fill<'a> {
    Zero,
    Constant(f64),
    Uniform {
        rng: &'a mut SeedRng,
        lo: f64,
        hi: f64,
    },
}

/// Dense 4D activation tensor (batch, channels, rows, cols) over `f32` or
/// `f64`, with an explicit layout tag that always matches the physical order
/// of `data`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4<T> {
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    layout: Layout,
    data: Vec<T>,
}

impl<T: Scalar> Tensor4<T> {
    /// Build a tensor in `Canonical` layout with deterministic content.
    pub fn new(n: usize, c: usize, h: usize, w: usize, fill: Fill) -> Result<Self> {
        let len = checked_len(n, c, h, w)?;
        let data = match fill {
            Fill::Zero => vec![T::zero(); len],
            Fill::Constant(v) => vec![T::from_f64(v); len],
            Fill::Uniform { rng, lo, hi } => {
                let mut data = Vec::with_capacity(len);
                for _ in 0..len {
                    data.push(T::from_f64(rng.uniform(lo, hi)));
                }
                data
            }
        };
        Ok(Self {
            n,
            c,
            h,
            w,
            layout: Layout::Canonical,
            data,
        })
    }

    pub fn zeros_like(other: &Self) -> Self {
        Self {
            n: other.n,
            c: other.c,
            h: other.h,
            w: other.w,
            layout: other.layout,
            data: vec![T::zero(); other.data.len()],
        }
    }

    /// Wrap an existing buffer. `data.len()` must equal `n*c*h*w`.
    pub fn from_vec(
        n: usize,
        c: usize,
        h: usize,
        w: usize,
        layout: Layout,
        data: Vec<T>,
    ) -> Result<Self> {
        let len = checked_len(n, c, h, w)?;
        if data.len() != len {
            return Err(Error::ShapeMismatch {
                what: "from_vec data length",
                expected: (n, c, h, w),
                got: (data.len(), 1, 1, 1),
            });
        }
        Ok(Self {
            n,
            c,
            h,
            w,
            layout,
            data,
        })
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.n, self.c, self.h, self.w)
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Physical offset of logical element `(n, c, row, col)` under the
    /// current layout.
    #[inline]
    pub fn offset(&self, n: usize, c: usize, row: usize, col: usize) -> usize {
        match self.layout {
            Layout::Canonical => ((n * self.c + c) * self.h + row) * self.w + col,
            Layout::ScanMajor(d) => {
                let (step, pos) = scan_coords(d, row, col, self.h, self.w);
                ((step * self.n + n) * self.c + c) * d.par_len(self.h, self.w) + pos
            }
        }
    }

    #[inline]
    pub fn get(&self, n: usize, c: usize, row: usize, col: usize) -> T {
        self.data[self.offset(n, c, row, col)]
    }

    #[inline]
    pub fn set(&mut self, n: usize, c: usize, row: usize, col: usize, v: T) {
        let off = self.offset(n, c, row, col);
        self.data[off] = v;
    }

    /// Physical transposition into `ScanMajor(d)` order so the parallel axis
    /// of direction `d` becomes unit-stride. Content is logically unchanged.
    pub fn to_scan_layout(&self, d: Direction) -> Result<Self> {
        if self.layout != Layout::Canonical {
            return Err(Error::LayoutMismatch {
                what: "to_scan_layout requires Canonical input",
            });
        }
        let (n_total, c_total, h, w) = self.dims();
        let l = d.scan_len(h, w);
        let p = d.par_len(h, w);
        let mut data = vec![T::zero(); self.data.len()];
        let mut dst = 0;
        for step in 0..l {
            for n in 0..n_total {
                for c in 0..c_total {
                    for pos in 0..p {
                        let (row, col) = d.coords(step, pos, h, w);
                        data[dst] = self.data[((n * c_total + c) * h + row) * w + col];
                        dst += 1;
                    }
                }
            }
        }
        let out = Self {
            n: n_total,
            c: c_total,
            h,
            w,
            layout: Layout::ScanMajor(d),
            data,
        };
        debug_audit(&out);
        Ok(out)
    }

    /// Inverse of [`Tensor4::to_scan_layout`].
    pub fn from_scan_layout(&self) -> Result<Self> {
        let d = match self.layout {
            Layout::ScanMajor(d) => d,
            Layout::Canonical => {
                return Err(Error::LayoutMismatch {
                    what: "from_scan_layout requires ScanMajor input",
                })
            }
        };
        let (n_total, c_total, h, w) = self.dims();
        let l = d.scan_len(h, w);
        let p = d.par_len(h, w);
        let mut data = vec![T::zero(); self.data.len()];
        let mut src = 0;
        for step in 0..l {
            for n in 0..n_total {
                for c in 0..c_total {
                    for pos in 0..p {
                        let (row, col) = d.coords(step, pos, h, w);
                        data[((n * c_total + c) * h + row) * w + col] = self.data[src];
                        src += 1;
                    }
                }
            }
        }
        let out = Self {
            n: n_total,
            c: c_total,
            h,
            w,
            layout: Layout::Canonical,
            data,
        };
        debug_audit(&out);
        Ok(out)
    }

    /// Re-layout into `target`, copying only when the layout actually changes.
    pub fn to_layout(&self, target: Layout) -> Result<Self> {
        if self.layout == target {
            return Ok(self.clone());
        }
        match (self.layout, target) {
            (Layout::Canonical, Layout::ScanMajor(d)) => self.to_scan_layout(d),
            (Layout::ScanMajor(_), Layout::Canonical) => self.from_scan_layout(),
            (Layout::ScanMajor(_), Layout::ScanMajor(d)) => {
                self.from_scan_layout()?.to_scan_layout(d)
            }
            (Layout::Canonical, Layout::Canonical) => unreachable!(),
        }
    }

    /// Max absolute element-wise difference under logical indexing, tolerant
    /// of differing layouts.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dims(), other.dims(), "max_abs_diff dims");
        let mut worst = 0.0f64;
        for n in 0..self.n {
            for c in 0..self.c {
                for row in 0..self.h {
                    for col in 0..self.w {
                        let d = (self.get(n, c, row, col).to_f64()
                            - other.get(n, c, row, col).to_f64())
                        .abs();
                        if d > worst {
                            worst = d;
                        }
                    }
                }
            }
        }
        worst
    }
}

#[inline]
fn scan_coords(d: Direction, row: usize, col: usize, h: usize, w: usize) -> (usize, usize) {
    match d {
        Direction::TopToBottom => (row, col),
        Direction::BottomToTop => (h - 1 - row, col),
        Direction::LeftToRight => (col, row),
        Direction::RightToLeft => (w - 1 - col, row),
    }
}

fn checked_len(n: usize, c: usize, h: usize, w: usize) -> Result<usize> {
    let bad = || Error::BadShape { n, c, h, w };
    if n == 0 || c == 0 || h == 0 || w == 0 {
        return Err(bad());
    }
    let len = n
        .checked_mul(c)
        .and_then(|v| v.checked_mul(h))
        .and_then(|v| v.checked_mul(w))
        .ok_or_else(bad)?;
    if len > MAX_TENSOR_ELEMS {
        return Err(bad());
    }
    Ok(len)
}

/// Debug-build audit that the layout tag matches the physical order: walking
/// every logical index through `offset` must visit each slot exactly once.
/// Skipped above 2^16 elements to keep debug runs tractable.
#[cfg(debug_assertions)]
fn debug_audit<T: Scalar>(t: &Tensor4<T>) {
    if t.len() > 1 << 16 {
        return;
    }
    let mut seen = vec![false; t.len()];
    let (n_total, c_total, h, w) = t.dims();
    for n in 0..n_total {
        for c in 0..c_total {
            for row in 0..h {
                for col in 0..w {
                    let off = t.offset(n, c, row, col);
                    assert!(!seen[off], "layout audit: offset {off} visited twice");
                    seen[off] = true;
                }
            }
        }
    }
}

#[cfg(not(debug_assertions))]
fn debug_audit<T: Scalar>(_t: &Tensor4<T>) {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_fill() {
        let t = Tensor4::<f64>::new(1, 1, 2, 2, Fill::Zero).unwrap();
        assert_eq!(t.len(), 4);
        assert!(t.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_single_element() {
        let t = Tensor4::<f64>::new(1, 1, 1, 1, Fill::Constant(3.5)).unwrap();
        assert_eq!(t.data(), &[3.5]);
    }

    #[test]
    fn seeded_fill_reproducible() {
        let make = || {
            let mut rng = SeedRng::new(7);
            Tensor4::<f64>::new(
                2,
                3,
                4,
                5,
                Fill::Uniform {
                    rng: &mut rng,
                    lo: 0.0,
                    hi: 1.0,
                },
            )
            .unwrap()
        };
        let a = make();
        let b = make();
        assert_eq!(a.len(), 120);
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn rejects_zero_dim_and_overflow() {
        assert!(Tensor4::<f32>::new(0, 1, 1, 1, Fill::Zero).is_err());
        assert!(Tensor4::<f32>::new(usize::MAX, 2, 2, 2, Fill::Zero).is_err());
        // 2^31 + 1 elements trips the cap.
        assert!(Tensor4::<f32>::new(1 << 16, 1 << 15, 1, 2, Fill::Zero).is_err());
    }

    #[test]
    fn scan_major_offset_matches_reference_formula() {
        // LeftToRight: offset(n,c,i,j) = ((j*N + n)*C + c)*H + i.
        let mut rng = SeedRng::new(5);
        let t = Tensor4::<f64>::new(
            2,
            3,
            4,
            5,
            Fill::Uniform {
                rng: &mut rng,
                lo: -1.0,
                hi: 1.0,
            },
        )
        .unwrap();
        let s = t.to_scan_layout(Direction::LeftToRight).unwrap();
        let (n_total, c_total, h, _w) = t.dims();
        for n in 0..2 {
            for c in 0..3 {
                for i in 0..4 {
                    for j in 0..5 {
                        let off = ((j * n_total + n) * c_total + c) * h + i;
                        assert_eq!(s.data()[off], t.get(n, c, i, j));
                        assert_eq!(s.offset(n, c, i, j), off);
                    }
                }
            }
        }
    }

    #[test]
    fn layout_roundtrip_all_directions() {
        let mut rng = SeedRng::new(9);
        let t = Tensor4::<f64>::new(
            3,
            2,
            5,
            4,
            Fill::Uniform {
                rng: &mut rng,
                lo: -2.0,
                hi: 2.0,
            },
        )
        .unwrap();
        for d in Direction::ALL {
            let back = t.to_scan_layout(d).unwrap().from_scan_layout().unwrap();
            assert_eq!(back.data(), t.data(), "roundtrip through {d}");
        }
    }

    #[test]
    fn degenerate_single_element_unchanged() {
        let t = Tensor4::<f64>::new(1, 1, 1, 1, Fill::Constant(2.0)).unwrap();
        for d in Direction::ALL {
            let s = t.to_scan_layout(d).unwrap();
            assert_eq!(s.data(), t.data());
        }
    }

    #[test]
    fn from_scan_layout_rejects_canonical() {
        let t = Tensor4::<f64>::new(1, 1, 2, 2, Fill::Zero).unwrap();
        assert!(matches!(
            t.from_scan_layout(),
            Err(Error::LayoutMismatch { .. })
        ));
    }
}
