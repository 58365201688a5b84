//! Approximate quantum error correction against controlled bit-flip and
//! controlled phase noise.
//!
//! The crate builds the block-product code `W = Span{f_z}` from a low-influence
//! Boolean function, evaluates controlled error operators against it (densely
//! or through a block-factorized fast path), and checks the positive and
//! negative results about such codes numerically:
//!
//! * [`boolfn`]: ±1/2-valued truth tables, Tribes, exact balancing, influence.
//! * [`codespace`]: code parameters, basis functions `f_z`, codewords, Gram.
//! * [`noise`]: controlled bit flips, controlled phases, partitioned phases and
//!   their quadratic forms.
//! * [`attacks`]: the overlap-boosting rotation, phase-alignment attacks and the
//!   exact-correction impossibility witness.
//! * [`verify`]: immunity, separation, exactness and lemma-bound checkers that
//!   produce self-certifying reports.
//! * [`oracle`]: brute-force reference implementations for differential tests.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default). Reductions always combine fixed-size chunks in index order,
//! so results are bit-identical for any thread count and for the sequential
//! build.

pub mod attacks;
pub mod bits;
pub mod boolfn;
pub mod codespace;
mod error;
pub mod noise;
pub mod oracle;
pub mod par;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};

pub use num_complex::Complex64;
