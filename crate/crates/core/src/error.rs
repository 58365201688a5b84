use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("width {width} out of range (expected {min}..={max})")]
    WidthOutOfRange { width: u32, min: u32, max: u32 },

    #[error("width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: u32, got: u32 },

    #[error("value {value} does not fit in {width} bits")]
    ValueOutOfRange { value: u64, width: u32 },

    #[error("2B = {} does not divide n = {n}", 2 * .b)]
    Divisibility { n: u32, b: u32 },

    #[error("invalid code parameters: {0}")]
    InvalidParams(String),

    #[error("{what} index {index} out of range 1..={max}")]
    IndexOutOfRange {
        what: &'static str,
        index: u64,
        max: u64,
    },

    #[error("dense cap exceeded: n = {n} > {cap}")]
    DenseCapExceeded { n: u32, cap: u32 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("function is not balanced: {positives} of {total} entries are +1/2")]
    Unbalanced { positives: u64, total: u64 },

    #[error("vectors are not orthonormal (deviation {deviation:e} exceeds {tol:e})")]
    NotOrthonormal { deviation: f64, tol: f64 },

    #[error("control set not supported here: {0}")]
    UnsupportedControls(String),

    #[error("grid level k = {0} out of range 1..=12")]
    GridLevel(u32),

    #[error("partition uses {0} distinct phases; an X*Y product realizes at most 4")]
    PartCountOverflow(usize),

    #[error("angle {0} outside [0, 2pi)")]
    InvalidAngle(f64),

    #[error("density {0} outside [0, 1]")]
    InvalidDensity(f64),

    #[error("malformed encoding: {0}")]
    Encoding(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
