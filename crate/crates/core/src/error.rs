use alloc::string::String;
use core::fmt;

/// Errors shared by all modules in this crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A dimension is zero or the element count exceeds the index-space cap.
    BadShape {
        n: usize,
        c: usize,
        h: usize,
        w: usize,
    },
    /// Two tensors that must agree in shape do not.
    ShapeMismatch {
        what: &'static str,
        expected: (usize, usize, usize, usize),
        got: (usize, usize, usize, usize),
    },
    /// An operation received a tensor in a layout it does not accept, or a
    /// group of tensors with differing layouts.
    LayoutMismatch { what: &'static str },
    /// A raw value was NaN or infinite; `flat_index` locates it.
    NonFinite { flat_index: usize },
    /// Band dimensions do not match what the operation requires.
    BandShapeMismatch { what: &'static str },
    /// A weight row's valid entries do not sum to one within tolerance.
    NotRowStochastic {
        step: usize,
        batch: usize,
        weight_channel: usize,
        position: usize,
        sum: f64,
    },
    /// A scan plan violates one of its invariants.
    PlanInvalid(String),
    /// A reference-operator instance exceeds the size guardrail.
    SizeGuardrail { size: usize, limit: usize },
    /// A probed objective returned NaN or infinity.
    NonFiniteObjective,
    /// The per-step hidden-state bound was violated in checked mode.
    StabilityViolation { step: usize, lhs: f64, rhs: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::BadShape { n, c, h, w } => write!(
                f,
                "invalid tensor shape {n}x{c}x{h}x{w}: dims must be >= 1 and the \
                 element count must not exceed 2^31"
            ),
            Error::ShapeMismatch {
                what,
                expected,
                got,
            } => write!(
                f,
                "shape mismatch for {what}: expected {}x{}x{}x{}, got {}x{}x{}x{}",
                expected.0, expected.1, expected.2, expected.3, got.0, got.1, got.2, got.3
            ),
            Error::LayoutMismatch { what } => write!(f, "layout mismatch: {what}"),
            Error::NonFinite { flat_index } => {
                write!(f, "non-finite value at flat index {flat_index}")
            }
            Error::BandShapeMismatch { what } => write!(f, "band shape mismatch: {what}"),
            Error::NotRowStochastic {
                step,
                batch,
                weight_channel,
                position,
                sum,
            } => write!(
                f,
                "weights not row-stochastic at step {step}, batch {batch}, weight channel \
                 {weight_channel}, position {position}: row sum {sum}"
            ),
            Error::PlanInvalid(msg) => write!(f, "invalid scan plan: {msg}"),
            Error::SizeGuardrail { size, limit } => {
                write!(
                    f,
                    "instance size {size} exceeds reference guardrail {limit}"
                )
            }
            Error::NonFiniteObjective => write!(f, "objective returned a non-finite value"),
            Error::StabilityViolation { step, lhs, rhs } => write!(
                f,
                "hidden-state bound violated at step {step}: {lhs} > {rhs}"
            ),
        }
    }
}

impl core::error::Error for Error {}
