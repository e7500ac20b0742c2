use std::io;

use thiserror::Error;

/// Everything that can go wrong while embedding, extracting or analysing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("stego-channel parameter {0} outside [1, 63]")]
    InvalidTheta(u32),

    #[error("capacity exceeded by {shortfall} bits ({required} required, {available} available)")]
    CapacityExceeded {
        required: usize,
        available: usize,
        shortfall: usize,
    },

    #[error("malformed payload: {0}")]
    MalformedPayload(String),

    #[error("payload exhausted after {0} bits")]
    PayloadExhausted(usize),

    #[error("read of {requested} bits at cursor {cursor} runs past end of {len}-bit stream")]
    EndOfStream {
        requested: usize,
        cursor: usize,
        len: usize,
    },

    #[error("image of {width}x{height} is too small (need at least {min}x{min})")]
    ImageTooSmall { width: usize, height: usize, min: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("overflow register has {actual} bits, image requires {expected}")]
    RegisterLengthMismatch { expected: usize, actual: usize },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("bad weight-file magic {0:?}")]
    BadMagic([u8; 4]),

    #[error("weight-file version {0} not supported")]
    VersionUnsupported(u32),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("node {node} references input {input}, which is not an earlier node")]
    DanglingInputRef { node: usize, input: usize },

    #[error("graph evaluation failed: {0}")]
    GraphEval(String),

    #[error("error distribution is empty")]
    EmptyDistribution,

    #[error("every error magnitude is zero; the Lorenz curve is undefined")]
    DegenerateAllZero,

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
