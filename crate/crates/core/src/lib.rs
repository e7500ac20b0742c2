//! Reversible steganography for 8-bit greyscale images by prediction-error
//! modulation.
//!
//! [`encode`] hides a message in a cover image and [`decode`] recovers the
//! message together with the exact cover. The pipeline is:
//!
//! 1. fold boundary intensities inward and record the folds ([`overflow`]);
//! 2. frame `register ‖ length ‖ message` as one payload ([`bitstream`]);
//! 3. predict the white chequer pixels from the black ones and modulate their
//!    prediction errors ([`predictor`], [`codec`]);
//! 4. predict the black pixels from the stego white ones and modulate again.
//!
//! Decoding runs the layers in reverse. [`metrics`] holds the quality and
//! error-distribution measurements used to evaluate predictors.
//!
//! ```
//! use pem_codec::{decode, encode, BitStream, PixelPlane, StegoParams, Theta};
//!
//! let cover = PixelPlane::from_fn(32, 32, |i, j| (i * 4 + j * 3) as u8);
//! let message = BitStream::from_bytes(b"hi");
//! let params = StegoParams::lmi(Theta::new(2)?);
//! let stego = encode(&cover, &message, &params)?;
//! let (restored, extracted) = decode(&stego, &params)?;
//! assert_eq!(restored, cover);
//! assert_eq!(extracted.to_bytes(), b"hi");
//! # Ok::<(), pem_codec::Error>(())
//! ```

pub mod bitstream;
pub mod cli;
pub mod codec;
mod error;
pub mod imaging;
pub mod metrics;
pub mod overflow;
pub mod predictor;
pub mod resample;

pub use bitstream::BitStream;
pub use codec::{decode, encode, estimate_capacity, Capacity, StegoParams};
pub use error::{Error, Result};
pub use imaging::{read_pgm, write_pgm, Parity, PixelPlane};
pub use overflow::Theta;
pub use predictor::{ConvGraph, InitStrategy, Predictor};
